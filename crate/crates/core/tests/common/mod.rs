//! Random-order SMILES writer and response generators shared by the tests.

#![allow(dead_code)]

use attrilens::molgraph::{BondOrder, Molecule};
use rand::seq::SliceRandom;
use rand::Rng;

fn bond_symbol(order: BondOrder) -> &'static str {
    match order {
        BondOrder::Single => "-",
        BondOrder::Double => "=",
        BondOrder::Triple => "#",
        BondOrder::Aromatic => ":",
    }
}

fn atom_text(mol: &Molecule, i: usize) -> String {
    let a = &mol.atoms()[i];
    let sym = a.element.symbol();
    let organic = matches!(
        sym,
        "B" | "C" | "N" | "O" | "P" | "S" | "F" | "Cl" | "Br" | "I"
    );
    if organic && !a.aromatic && !a.is_bracket() {
        return sym.to_string();
    }
    let mut s = String::from("[");
    if let Some(iso) = a.isotope {
        s.push_str(&iso.to_string());
    }
    s.push_str(&if a.aromatic {
        sym.to_lowercase()
    } else {
        sym.to_string()
    });
    match a.explicit_h + a.implicit_h() {
        0 => {}
        1 => s.push('H'),
        h => s.push_str(&format!("H{h}")),
    }
    match a.formal_charge {
        0 => {}
        c if c > 0 => s.push_str(&format!("+{c}")),
        c => s.push_str(&format!("-{}", -c)),
    }
    s.push(']');
    s
}

/// A SMILES string for the same graph with atoms visited in random order:
/// random component order, random root and random neighbour order.
pub fn random_smiles<R: Rng>(mol: &Molecule, rng: &mut R) -> String {
    let n = mol.atoms().len();
    let mut comps = mol.components();
    comps.shuffle(rng);
    let mut visited = vec![false; n];
    let mut used_bond = vec![false; mol.bonds().len()];
    let mut children: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    // (opener, closer, bond)
    let mut closures: Vec<(usize, usize, usize)> = Vec::new();
    let mut roots = Vec::new();
    for comp in &comps {
        let root = comp[rng.gen_range(0..comp.len())];
        roots.push(root);
        // DFS order here is the emission order below
        fn visit<R: Rng>(
            mol: &Molecule,
            u: usize,
            rng: &mut R,
            visited: &mut [bool],
            used: &mut [bool],
            children: &mut [Vec<(usize, usize)>],
            closures: &mut Vec<(usize, usize, usize)>,
        ) {
            visited[u] = true;
            let mut nbrs: Vec<(usize, usize)> = mol.neighbors(u).to_vec();
            nbrs.shuffle(rng);
            for (v, b) in nbrs {
                if used[b] {
                    continue;
                }
                used[b] = true;
                if visited[v] {
                    closures.push((v, u, b));
                } else {
                    children[u].push((v, b));
                    visit(mol, v, rng, visited, used, children, closures);
                }
            }
        }
        visit(
            mol,
            root,
            rng,
            &mut visited,
            &mut used_bond,
            &mut children,
            &mut closures,
        );
    }
    let mut out = Vec::new();
    let mut free: Vec<u32> = (1..100).rev().collect();
    let mut open: Vec<Option<u32>> = vec![None; mol.bonds().len()];
    fn label(l: u32) -> String {
        if l < 10 {
            l.to_string()
        } else {
            format!("%{l}")
        }
    }
    fn emit(
        mol: &Molecule,
        u: usize,
        s: &mut String,
        children: &[Vec<(usize, usize)>],
        closures: &[(usize, usize, usize)],
        free: &mut Vec<u32>,
        open: &mut [Option<u32>],
    ) {
        s.push_str(&atom_text(mol, u));
        // ring closures are opened at the earlier atom and closed at the later
        for &(a, c, b) in closures {
            if a == u {
                let l = free.pop().expect("ring labels");
                open[b] = Some(l);
                s.push_str(bond_symbol(mol.bonds()[b].order));
                s.push_str(&label(l));
            } else if c == u {
                let l = open[b].take().expect("opened closure");
                s.push_str(&label(l));
                free.push(l);
            }
        }
        let kids = &children[u];
        for (k, &(v, b)) in kids.iter().enumerate() {
            let last = k + 1 == kids.len();
            if !last {
                s.push('(');
            }
            s.push_str(bond_symbol(mol.bonds()[b].order));
            emit(mol, v, s, children, closures, free, open);
            if !last {
                s.push(')');
            }
        }
    }
    for root in roots {
        let mut s = String::new();
        emit(
            mol, root, &mut s, &children, &closures, &mut free, &mut open,
        );
        out.push(s);
    }
    out.join(".")
}

#[allow(unused_imports)]
pub use responses::*;

mod responses {
    use attrilens::response::{render_response, Answer, AttributeClaim, Polarity, Task};
    use rand::seq::SliceRandom;
    use rand::Rng;

    const WORDS: &[&str] = &[
        "Molecular",
        "Weight",
        "LogP",
        "TPSA",
        "HBD",
        "ring",
        "count",
        "polar",
        "surface",
        "area",
        "amide",
        "the",
        "molecule",
        "is",
        "lipophilic",
        "donors",
        "S",
        "N",
        "3",
        "acceptors",
        "rotatable",
        "bonds",
        "charge",
        "(approx)",
        "x-y",
        "ß",
        "分子",
    ];

    /// A generated well-formed response with the values it encodes.
    #[derive(Debug, Clone)]
    pub struct GeneratedResponse {
        pub text: String,
        pub task: Task,
        pub think: String,
        pub claims: Vec<AttributeClaim>,
        pub answer: Answer,
    }

    fn phrase<R: Rng>(rng: &mut R, min: usize, max: usize) -> String {
        let n = rng.gen_range(min..=max);
        (0..n)
            .map(|_| *WORDS.choose(rng).unwrap())
            .collect::<Vec<_>>()
            .join(" ")
    }

    pub fn random_response<R: Rng>(rng: &mut R) -> GeneratedResponse {
        let task = if rng.gen_bool(0.5) {
            Task::Classification
        } else {
            Task::Regression
        };
        let think = phrase(rng, 0, 30);
        let claims: Vec<AttributeClaim> = (0..rng.gen_range(0..12))
            .map(|_| AttributeClaim {
                raw_name: phrase(rng, 1, 3),
                polarity: match rng.gen_range(0..5) {
                    0 => None,
                    1 | 2 => Some(Polarity::Promotes),
                    _ => Some(Polarity::Inhibits),
                },
            })
            .collect();
        let answer = match task {
            Task::Classification => Answer::Bool(rng.gen_bool(0.5)),
            Task::Regression => {
                let x: f64 = rng.gen_range(-12.0..12.0);
                Answer::Number(if rng.gen_bool(0.3) { x.round() } else { x })
            }
        };
        GeneratedResponse {
            text: render_response(&think, &claims, answer),
            task,
            think,
            claims,
            answer,
        }
    }

    /// Random bytes biased toward tag fragments so the fuzz reaches deep
    /// parser states, decoded lossily.
    pub fn fuzz_text<R: Rng>(rng: &mut R) -> String {
        const PIECES: &[&str] = &[
            "<think>",
            "</think>",
            "<name>",
            "</name>",
            "<answer>",
            "</answer>",
            "<",
            ">",
            "/",
            ":",
            ",",
            ".",
            " ",
            "\n",
            "True",
            "false",
            "promotes",
            "inhibits",
            "not improve",
            "-1.5e3",
            "NaN",
            "inf",
            "TPSA",
            "\u{0}",
            "\u{feff}",
            "é",
        ];
        let mut bytes = Vec::new();
        for _ in 0..rng.gen_range(0..24) {
            if rng.gen_bool(0.6) {
                bytes.extend_from_slice(PIECES.choose(rng).unwrap().as_bytes());
            } else {
                for _ in 0..rng.gen_range(1..6) {
                    bytes.push(rng.gen());
                }
            }
        }
        String::from_utf8_lossy(&bytes).into_owned()
    }
}
