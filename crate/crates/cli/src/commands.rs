use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::time::Instant;

use attrilens::descriptors::{compute, resolve_attribute, DescriptorId};
use attrilens::mlpipe::{
    eval_auc, feature_set, featurize, load_csv, permutation_null_auc, scaffold_split, select_rows,
    train_forest, ForestConfig, LoadedDataset, Schema, SplitIndices,
};
use attrilens::molgraph::parse_smiles;
use attrilens::policysim::{load_sim_dataset, toy_dataset, train, write_curves, TrainConfig};
use attrilens::response::{parse_response, read_corpus, Answer};
use attrilens::rewards::{total_reward, CountBounds, RewardBreakdown};
use serde::Serialize;
use serde_json::json;

use crate::data::{bundled_dataset, data_dir, resolve_table};
use crate::error::CliError;
use crate::manifest::{write_atomic, RunManifest};
use crate::{
    DatasetArgs, DescriptorArgs, DtreeArgs, OutputFormat, ScoreArgs, SplitArgs, TrainSimArgs,
};

fn to_json<T: Serialize>(value: &T) -> Result<String, CliError> {
    serde_json::to_string(value).map_err(|e| CliError::Internal(e.to_string()))
}

fn parse_list<T: std::str::FromStr>(raw: &str, what: &str) -> Result<Vec<T>, CliError> {
    raw.split(',')
        .map(|s| {
            s.trim()
                .parse()
                .map_err(|_| CliError::Config(format!("bad {what} `{raw}`")))
        })
        .collect()
}

// ---- score ----

#[derive(Serialize)]
struct ScoredRecord<'a> {
    id: &'a str,
    target: &'a str,
    #[serde(flatten)]
    breakdown: RewardBreakdown,
}

#[derive(Serialize, Default)]
struct Means {
    n: usize,
    format: f64,
    correct: f64,
    count: f64,
    rational: f64,
    total: f64,
}

pub fn score(args: &ScoreArgs, format: OutputFormat) -> Result<(), CliError> {
    let started = Instant::now();
    let bounds = match parse_list::<usize>(&args.count_range, "count range")?.as_slice() {
        [lo, hi] => CountBounds::new(*lo, *hi),
        _ => None,
    }
    .ok_or_else(|| CliError::Config(format!("bad count range `{}`", args.count_range)))?;
    let table = resolve_table(&args.table)?;
    let file = File::open(&args.corpus).map_err(|e| CliError::io(&args.corpus, e))?;
    let corpus = read_corpus(BufReader::new(file))?;
    if corpus.is_empty() {
        return Err(CliError::Input(format!(
            "EmptyDataset: {} has no records",
            args.corpus.display()
        )));
    }
    let mut lines = Vec::with_capacity(corpus.len());
    let mut scored = Vec::with_capacity(corpus.len());
    let mut sums = Means::default();
    for (k, rec) in corpus.iter().enumerate() {
        let at = |msg: String| CliError::Input(format!("record {} (`{}`): {msg}", k + 1, rec.id));
        let mol = parse_smiles(&rec.smiles).map_err(|e| at(e.to_string()))?;
        let Answer::Bool(label) = rec.label else {
            return Err(at("correctness reward needs a true/false label".into()));
        };
        let parsed = parse_response(&rec.response_text, rec.task);
        let b = total_reward(&parsed, &mol, label, &rec.target, &table, bounds)?;
        sums.format += b.format;
        sums.correct += b.correct;
        sums.count += b.count;
        sums.rational += b.rational;
        sums.total += b.total;
        lines.push(to_json(&ScoredRecord {
            id: &rec.id,
            target: &rec.target,
            breakdown: b,
        })?);
        scored.push((rec.id.as_str(), b));
    }
    let n = corpus.len() as f64;
    let means = Means {
        n: corpus.len(),
        format: sums.format / n,
        correct: sums.correct / n,
        count: sums.count / n,
        rational: sums.rational / n,
        total: sums.total / n,
    };
    if let Some(out) = &args.out {
        let mut text = lines.join("\n");
        text.push('\n');
        text.push_str(&to_json(&json!({ "summary": &means }))?);
        text.push('\n');
        write_atomic(out, text.as_bytes())?;
        let mut m = RunManifest::new(
            "score",
            json!({ "table": args.table, "count_range": [bounds.lo, bounds.hi] }),
            None,
        );
        m.inputs.push(args.corpus.display().to_string());
        m.outputs.push(out.display().to_string());
        m.finish(started, None)?;
    }
    match format {
        OutputFormat::Json => {
            for l in &lines {
                println!("{l}");
            }
            println!("{}", to_json(&json!({ "summary": &means }))?);
        }
        OutputFormat::Text => {
            println!(
                "{:<32} {:>7} {:>7} {:>7} {:>9} {:>7}",
                "id", "format", "correct", "count", "rational", "total"
            );
            for (id, b) in &scored {
                println!(
                    "{:<32} {:>7} {:>7} {:>7} {:>9.4} {:>7.4}",
                    id, b.format, b.correct, b.count, b.rational, b.total
                );
            }
            println!(
                "{:<32} {:>7.4} {:>7.4} {:>7.4} {:>9.4} {:>7.4}",
                format!("mean over {}", means.n),
                means.format,
                means.correct,
                means.count,
                means.rational,
                means.total
            );
        }
    }
    Ok(())
}

// ---- descriptors ----

fn descriptor_ids(ids: Option<&str>) -> Result<Vec<DescriptorId>, CliError> {
    let Some(raw) = ids else {
        return Ok(DescriptorId::implemented_ids().collect());
    };
    raw.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|name| {
            let id = DescriptorId::from_name(name)
                .or_else(|| resolve_attribute(name))
                .ok_or_else(|| CliError::Input(format!("unknown descriptor `{name}`")))?;
            if !id.implemented() {
                return Err(CliError::Input(format!(
                    "descriptor `{}` has no calculator",
                    id.name()
                )));
            }
            Ok(id)
        })
        .collect()
}

pub fn descriptors(args: &DescriptorArgs, format: OutputFormat) -> Result<(), CliError> {
    let ids = descriptor_ids(if args.all { None } else { args.ids.as_deref() })?;
    if ids.is_empty() {
        return Err(CliError::Input("no descriptors requested".into()));
    }
    let mut rows = Vec::new();
    for smiles in &args.smiles {
        let mol = parse_smiles(smiles).map_err(|e| CliError::Input(format!("`{smiles}`: {e}")))?;
        let values = ids
            .iter()
            .map(|&id| compute(&mol, id).map(|v| (id.name(), v.value)))
            .collect::<Result<Vec<_>, _>>()?;
        rows.push((smiles, values));
    }
    match format {
        OutputFormat::Json => {
            for (smiles, values) in &rows {
                let map: serde_json::Map<String, serde_json::Value> = values
                    .iter()
                    .map(|(n, v)| (n.to_string(), json!(v)))
                    .collect();
                println!(
                    "{}",
                    to_json(&json!({ "smiles": smiles, "descriptors": map }))?
                );
            }
        }
        OutputFormat::Text => {
            for (k, (smiles, values)) in rows.iter().enumerate() {
                if rows.len() > 1 {
                    if k > 0 {
                        println!();
                    }
                    println!("# {smiles}");
                }
                println!("name,value");
                for (name, v) in values {
                    println!("{name},{}", round_for_display(*v));
                }
            }
        }
    }
    Ok(())
}

// Four decimals, without trailing zeros.
fn round_for_display(v: f64) -> String {
    let r = (v * 1e4).round() / 1e4;
    format!("{}", if r == 0.0 { 0.0 } else { r })
}

// ---- train-sim ----

fn read_config(path: &Path) -> Result<TrainConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn find_input(raw: &str) -> PathBuf {
    let p = PathBuf::from(raw);
    if p.exists() {
        return p;
    }
    let bundled = data_dir().join("datasets").join(raw);
    if bundled.exists() {
        bundled
    } else {
        p
    }
}

pub fn train_sim(args: &TrainSimArgs, format: OutputFormat) -> Result<(), CliError> {
    let started = Instant::now();
    let mut cfg = match &args.config {
        Some(p) => read_config(p)?,
        None => TrainConfig::default(),
    };
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(s) = args.steps {
        cfg.steps = s;
    }
    if let Some(a) = args.algorithm {
        cfg.algorithm = a;
    }
    cfg.validate()?;
    let table = resolve_table(&cfg.range_table)?;
    let mut inputs = Vec::new();
    let dataset = match &cfg.dataset {
        Some(raw) => {
            let path = find_input(raw);
            let text = std::fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
            inputs.push(path.display().to_string());
            load_sim_dataset(&text)?
        }
        None => toy_dataset(),
    };
    let outcome = train(&cfg, &dataset, &table)?;
    let mut buf = Vec::new();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        write_curves(&outcome.curves, &mut w).map_err(|e| CliError::Internal(e.to_string()))?;
        w.flush().map_err(|e| CliError::Internal(e.to_string()))?;
    }
    let curves_path = args.out.join("curves.csv");
    write_atomic(&curves_path, &buf)?;
    let config = serde_json::to_value(&cfg).map_err(|e| CliError::Internal(e.to_string()))?;
    let mut m = RunManifest::new("train-sim", config, Some(cfg.seed));
    m.inputs = inputs;
    m.outputs.push(curves_path.display().to_string());
    m.finish(started, Some(&args.out))?;

    let tail = |name: &str| {
        let xs = outcome.curves.column(name).unwrap_or_default();
        let k = xs.len().clamp(1, 100);
        xs[xs.len().saturating_sub(k)..].iter().sum::<f64>() / k as f64
    };
    let names = ["format", "correct", "count", "rational", "total"];
    match format {
        OutputFormat::Json => {
            let means: serde_json::Map<String, serde_json::Value> = names
                .iter()
                .map(|n| (n.to_string(), json!(tail(n))))
                .collect();
            println!(
                "{}",
                to_json(
                    &json!({ "curves": curves_path, "steps": cfg.steps, "final_100_mean": means })
                )?
            );
        }
        OutputFormat::Text => {
            println!("wrote {} ({} steps)", curves_path.display(), cfg.steps);
            for n in names {
                println!("final-100 mean {n:<9} {:.4}", tail(n));
            }
        }
    }
    Ok(())
}

// ---- split and dtree ----

fn load_dataset(args: &DatasetArgs) -> Result<(LoadedDataset, PathBuf, Schema), CliError> {
    let (path, schema) = match (&args.dataset, &args.input) {
        (Some(name), _) => {
            let (path, smiles, label) = bundled_dataset(name).ok_or_else(|| {
                CliError::Config(format!("unknown bundled dataset `{name}` (bbbp, bace)"))
            })?;
            (
                path,
                Schema::classification(&name.to_ascii_uppercase(), smiles, label),
            )
        }
        (None, Some(path)) => {
            let name = path
                .file_stem()
                .and_then(|s| s.to_str())
                .unwrap_or("dataset");
            let schema = Schema {
                smiles_column: args.smiles_column.clone(),
                label_column: args.label_column.clone(),
                task: args.task,
                dataset_name: name.to_string(),
            };
            (path.clone(), schema)
        }
        (None, None) => return Err(CliError::Config("give --dataset or --input".into())),
    };
    let data = load_csv(&path, &schema)?;
    for (line, smiles) in &data.skipped {
        eprintln!(
            "warning: {}:{line}: skipped unparseable SMILES `{smiles}`",
            path.display()
        );
    }
    Ok((data, path, schema))
}

fn fractions(raw: &str) -> Result<(f64, f64, f64), CliError> {
    match parse_list::<f64>(raw, "fractions")?.as_slice() {
        [a, b, c] => Ok((*a, *b, *c)),
        _ => Err(CliError::Config(format!(
            "fractions need three values, got `{raw}`"
        ))),
    }
}

fn label_text(a: &Answer) -> String {
    match a {
        Answer::Bool(b) => u8::from(*b).to_string(),
        Answer::Number(x) => x.to_string(),
    }
}

pub fn split(args: &SplitArgs, format: OutputFormat) -> Result<(), CliError> {
    let started = Instant::now();
    let (data, input, schema) = load_dataset(&args.data)?;
    let fr = fractions(&args.data.fractions)?;
    let split = scaffold_split(&data.molecules, fr)?;
    let mut m = RunManifest::new(
        "split",
        json!({ "fractions": [fr.0, fr.1, fr.2], "smiles_column": schema.smiles_column, "label_column": schema.label_column }),
        None,
    );
    m.inputs.push(input.display().to_string());
    for (name, ix) in [
        ("train", &split.train),
        ("valid", &split.valid),
        ("test", &split.test),
    ] {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| CliError::Internal(e.to_string());
        w.write_record([schema.smiles_column.as_str(), schema.label_column.as_str()])
            .map_err(io)?;
        for &i in ix.iter() {
            let r = &data.records[i];
            w.write_record([r.smiles.as_str(), label_text(&r.label).as_str()])
                .map_err(io)?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| CliError::Internal(e.to_string()))?;
        let path = args.out.join(format!("{name}.csv"));
        write_atomic(&path, &bytes)?;
        m.outputs.push(path.display().to_string());
    }
    m.finish(started, Some(&args.out))?;
    let (tr, va, te) = split.sizes();
    match format {
        OutputFormat::Json => println!(
            "{}",
            to_json(
                &json!({ "train": tr, "valid": va, "test": te, "skipped": data.skipped.len(), "out": args.out })
            )?
        ),
        OutputFormat::Text => {
            println!(
                "train {tr}, valid {va}, test {te} (skipped {})",
                data.skipped.len()
            );
            println!("wrote {}", args.out.display());
        }
    }
    Ok(())
}

fn dtree_features(args: &DtreeArgs) -> Result<(Vec<DescriptorId>, Option<PathBuf>), CliError> {
    match args.features.as_str() {
        "all" => Ok((DescriptorId::implemented_ids().collect(), None)),
        "top10" => {
            let path = args
                .corpus
                .clone()
                .unwrap_or_else(|| data_dir().join("fixtures/case_studies.jsonl"));
            let file = File::open(&path).map_err(|e| CliError::io(&path, e))?;
            let parsed: Vec<_> = read_corpus(BufReader::new(file))?
                .iter()
                .map(|r| parse_response(&r.response_text, r.task))
                .collect();
            Ok((feature_set(&parsed, 10), Some(path)))
        }
        list => Ok((descriptor_ids(Some(list))?, None)),
    }
}

pub fn dtree(args: &DtreeArgs, format: OutputFormat) -> Result<(), CliError> {
    let started = Instant::now();
    if args.trees == 0 || args.max_depth == 0 {
        return Err(CliError::Config(
            "--trees and --max-depth must be positive".into(),
        ));
    }
    let (data, input, _) = load_dataset(&args.data)?;
    let (ids, corpus) = dtree_features(args)?;
    let (x, y) = featurize(&data.molecules, &data.records, &ids)?;
    let split: SplitIndices = scaffold_split(&data.molecules, fractions(&args.data.fractions)?)?;
    let (xtr, ytr) = select_rows(&x, &y, &split.train);
    let (xte, yte) = select_rows(&x, &y, &split.test);
    let cfg = ForestConfig {
        n_trees: args.trees,
        max_depth: args.max_depth,
        seed: args.seed,
        ..ForestConfig::default()
    };
    let model = train_forest(&xtr, &ytr, &ids, &cfg)?;
    model.validate()?;
    let auc = eval_auc(&model, &xte, &yte)?;
    let null_auc = if args.null_repeats > 0 {
        let nulls = permutation_null_auc(
            (&xtr, &ytr),
            (&xte, &yte),
            &cfg,
            args.null_repeats,
            args.seed,
        )?;
        Some(nulls.iter().sum::<f64>() / nulls.len() as f64)
    } else {
        None
    };
    let names: Vec<&str> = ids.iter().map(|d| d.name()).collect();
    let metrics = json!({
        "auc": auc,
        "null_auc": null_auc,
        "null_repeats": args.null_repeats,
        "n_train": split.train.len(),
        "n_valid": split.valid.len(),
        "n_test": split.test.len(),
        "features": names,
        "trees": cfg.n_trees,
        "max_depth": cfg.max_depth,
        "seed": cfg.seed,
    });
    let metrics_path = args.out.join("metrics.json");
    let model_path = args.out.join("model.txt");
    let mut text =
        serde_json::to_string_pretty(&metrics).map_err(|e| CliError::Internal(e.to_string()))?;
    text.push('\n');
    write_atomic(&metrics_path, text.as_bytes())?;
    write_atomic(&model_path, model.to_text().as_bytes())?;
    let mut m = RunManifest::new(
        "dtree",
        json!({ "features": args.features, "trees": cfg.n_trees, "max_depth": cfg.max_depth, "null_repeats": args.null_repeats, "fractions": args.data.fractions }),
        Some(cfg.seed),
    );
    m.inputs.push(input.display().to_string());
    m.inputs.extend(corpus.map(|p| p.display().to_string()));
    m.outputs.push(metrics_path.display().to_string());
    m.outputs.push(model_path.display().to_string());
    m.finish(started, Some(&args.out))?;
    match format {
        OutputFormat::Json => println!("{}", to_json(&metrics)?),
        OutputFormat::Text => {
            println!("features: {}", names.join(", "));
            println!(
                "split: train {}, valid {}, test {}",
                split.train.len(),
                split.valid.len(),
                split.test.len()
            );
            println!("test AUC {auc:.4}");
            if let Some(n) = null_auc {
                println!(
                    "permutation-null AUC {n:.4} over {} shuffles",
                    args.null_repeats
                );
            }
            println!("wrote {}", args.out.display());
        }
    }
    Ok(())
}
