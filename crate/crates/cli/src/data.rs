//! Locating bundled data and range tables.

use std::path::{Path, PathBuf};

use attrilens::rewards::RangeTable;

use crate::error::CliError;

pub const DATA_DIR_ENV: &str = "ATTRILENS_DATA_DIR";

/// `$ATTRILENS_DATA_DIR` when set, otherwise the data shipped with the
/// library crate.
pub fn data_dir() -> PathBuf {
    match std::env::var_os(DATA_DIR_ENV) {
        Some(dir) if !dir.is_empty() => PathBuf::from(dir),
        _ => {
            let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/data");
            dir.canonicalize().unwrap_or(dir)
        }
    }
}

/// A table given as a file path, as `<data dir>/ranges/<name>.tsv`, or as a
/// compiled-in bundled name, tried in that order.
pub fn resolve_table(spec: &str) -> Result<RangeTable, CliError> {
    let as_path = Path::new(spec);
    if as_path.is_file() {
        return Ok(RangeTable::load(as_path)?);
    }
    let in_data = data_dir().join("ranges").join(format!("{spec}.tsv"));
    if in_data.is_file() {
        return Ok(RangeTable::load(&in_data)?);
    }
    RangeTable::bundled(spec).ok_or_else(|| {
        CliError::Config(format!(
            "unknown range table `{spec}` (bundled: {})",
            RangeTable::bundled_names().join(", ")
        ))
    })
}

/// Bundled dataset shortcut: (file, SMILES column, label column).
pub fn bundled_dataset(name: &str) -> Option<(PathBuf, &'static str, &'static str)> {
    let dir = data_dir().join("datasets");
    match name.to_ascii_lowercase().as_str() {
        "bbbp" => Some((dir.join("bbbp_curated.csv"), "smiles", "p_np")),
        "bace" => Some((dir.join("bace_synthetic.csv"), "mol", "Class")),
        _ => None,
    }
}
