#![allow(dead_code)]

pub mod oracle;

use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use ta_repair::io::{parse_model, read_model};
use ta_repair::{check, CheckOptions, Network, Property, SymbolicTrace, Verdict};

pub fn models_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("examples").join("models")
}

pub fn bundle() -> (Network, Property) {
    read_model(&models_dir().join("client_db.json")).unwrap()
}

/// Every bundled model, sorted by file name.
pub fn corpus() -> Vec<(String, Network, Property)> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(models_dir())
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "json"))
        .collect();
    files.sort();
    files
        .into_iter()
        .map(|p| {
            let (n, prop) = read_model(&p).unwrap();
            (p.file_stem().unwrap().to_string_lossy().into_owned(), n, prop)
        })
        .collect()
}

pub fn violation(n: &Network, p: &Property) -> Option<SymbolicTrace> {
    match check(n, p, CheckOptions::default()).unwrap() {
        Verdict::Violated(t) => Some(t),
        Verdict::Safe => None,
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Shape {
    pub automata: usize,
    pub clocks: usize,
    pub locations: usize,
    pub transitions: usize,
    pub max_constant: i64,
    /// Observable labels for internal transitions.
    pub labels: usize,
    pub urgent: bool,
}

impl Default for Shape {
    fn default() -> Self {
        Shape {
            automata: 1,
            clocks: 2,
            locations: 3,
            transitions: 4,
            max_constant: 3,
            labels: 2,
            urgent: true,
        }
    }
}

const OPS: [&str; 5] = ["<", "<=", "==", ">=", ">"];
const LABELS: [&str; 3] = ["a", "b", "c"];

fn constraint(rng: &mut ChaCha8Rng, clocks: &[String], max: i64, upper_only: bool) -> String {
    let c = clocks.choose(rng).unwrap();
    let op = if upper_only {
        ["<", "<="][rng.gen_range(0..2)]
    } else {
        OPS[rng.gen_range(0..5)]
    };
    format!("{c} {op} {}", rng.gen_range(0..=max))
}

/// A random network document. Clocks are shared by name across automata
/// when there is more than one.
pub fn random_document(rng: &mut ChaCha8Rng, shape: Shape) -> Value {
    let clocks: Vec<String> = (0..shape.clocks.max(1)).map(|i| format!("x{i}")).collect();
    let channels: Vec<String> = if shape.automata > 1 { vec!["h".into()] } else { vec![] };
    let mut automata = Vec::new();
    let mut used: Vec<String> = Vec::new();
    for a in 0..shape.automata {
        let nloc = rng.gen_range(1..=shape.locations.max(1));
        let own: Vec<String> = if shape.automata == 1 {
            clocks.clone()
        } else {
            clocks.iter().filter(|_| rng.gen_bool(0.7)).cloned().collect()
        };
        let own = if own.is_empty() {
            vec![clocks[a % clocks.len()].clone()]
        } else {
            own
        };
        for c in &own {
            if !used.contains(c) {
                used.push(c.clone());
            }
        }
        let locations: Vec<Value> = (0..nloc)
            .map(|l| {
                let mut inv = Vec::new();
                if rng.gen_bool(0.4) {
                    inv.push(constraint(rng, &own, shape.max_constant, true));
                }
                let urgent = shape.urgent && l > 0 && rng.gen_bool(0.15);
                json!({ "name": format!("l{l}"), "invariant": inv, "urgent": urgent })
            })
            .collect();
        let ntr = rng.gen_range(1..=shape.transitions.max(1));
        let transitions: Vec<Value> = (0..ntr)
            .map(|_| {
                let guard: Vec<String> = (0..rng.gen_range(0..=1))
                    .map(|_| constraint(rng, &own, shape.max_constant, false))
                    .collect();
                let resets: Vec<String> = own.iter().filter(|_| rng.gen_bool(0.3)).cloned().collect();
                let sync = if !channels.is_empty() && rng.gen_bool(0.5) {
                    format!("h{}", if a == 0 { "!" } else { "?" })
                } else {
                    LABELS[rng.gen_range(0..shape.labels.clamp(1, 3))].to_string()
                };
                json!({
                    "source": format!("l{}", rng.gen_range(0..nloc)),
                    "target": format!("l{}", rng.gen_range(0..nloc)),
                    "sync": sync,
                    "guard": guard,
                    "resets": resets,
                })
            })
            .collect();
        automata.push(json!({
            "name": format!("p{a}"),
            "initial": "l0",
            "clocks": own,
            "locations": locations,
            "transitions": transitions,
        }));
    }
    let aut = rng.gen_range(0..shape.automata);
    let locs = automata[aut]["locations"].as_array().unwrap().len();
    let target = format!("@p{aut}.l{}", rng.gen_range(0..locs));
    let property = match rng.gen_range(0..3) {
        0 => format!("!{target}"),
        1 => format!(
            "{} <= {} || !{target}",
            used.choose(rng).unwrap(),
            rng.gen_range(0..=shape.max_constant)
        ),
        _ => format!("{} < {}", used.choose(rng).unwrap(), rng.gen_range(1..=shape.max_constant + 1)),
    };
    json!({ "channels": channels, "automata": automata, "property": property })
}

pub fn random_network(rng: &mut ChaCha8Rng, shape: Shape) -> (Network, Property) {
    parse_model(&random_document(rng, shape).to_string()).expect("generated document is valid")
}
