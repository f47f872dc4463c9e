#![allow(dead_code)]

use std::path::PathBuf;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use traitnet::model::{build_network, Cpt, Network};
use traitnet::{netdef, Evidence, Factor, Role, Variable};

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
}

pub fn fixture_text(name: &str) -> String {
    std::fs::read_to_string(fixture_path(name)).expect("fixture file")
}

pub fn fixture(name: &str) -> traitnet::Network {
    netdef::parse_network(&fixture_text(name)).expect("fixture parses")
}

/// Random DAG with 2..=6 variables of 2..=5 states, at most three parents
/// each, names shuffled so declaration order is not topological order.
pub fn random_network(rng: &mut ChaCha8Rng) -> Network<f64> {
    let n = rng.gen_range(2..=6);
    let mut names: Vec<String> = (0..n).map(|i| format!("V{i}")).collect();
    names.shuffle(rng);
    let cards: Vec<usize> = (0..n).map(|_| rng.gen_range(2..=5)).collect();
    let variables: Vec<Variable> = (0..n)
        .map(|i| {
            Variable::new(
                names[i].clone(),
                (0..cards[i]).map(|s| format!("s{s}")),
                Role::Unspecified,
            )
            .unwrap()
        })
        .collect();
    let mut cpts = Vec::new();
    for i in 0..n {
        let mut parents: Vec<usize> = (0..i).filter(|_| rng.gen_bool(0.5)).collect();
        parents.shuffle(rng);
        parents.truncate(3);
        let rows_needed: usize = parents.iter().map(|&p| cards[p]).product();
        let rows = (0..rows_needed)
            .map(|_| random_row(rng, cards[i]))
            .collect();
        cpts.push(Cpt::new(
            names[i].clone(),
            parents.iter().map(|&p| names[p].clone()),
            rows,
        ));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let variables = order.iter().map(|&i| variables[i].clone()).collect();
    build_network(variables, cpts).expect("random network is valid")
}

/// Nonnegative weights with occasional structural zeros, never all zero.
pub fn random_row(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    loop {
        let row: Vec<f64> = (0..len)
            .map(|_| {
                if rng.gen_bool(0.15) {
                    0.0
                } else {
                    rng.gen_range(0.01..1.0)
                }
            })
            .collect();
        if row.iter().any(|&v| v > 0.0) {
            return row;
        }
    }
}

/// Each variable observed with probability 0.3.
pub fn random_evidence(rng: &mut ChaCha8Rng, net: &Network<f64>) -> Evidence {
    let mut e = Evidence::new();
    for var in net.variables() {
        if rng.gen_bool(0.3) {
            let s = rng.gen_range(0..var.cardinality());
            e.insert(var.name(), var.states()[s].clone()).unwrap();
        }
    }
    e
}

pub fn variable(name: &str, card: usize) -> Variable {
    Variable::new(name, (0..card).map(|s| s.to_string()), Role::Unspecified).unwrap()
}

/// Random factor over a subset of `pool`, in random scope order.
pub fn random_factor(rng: &mut ChaCha8Rng, pool: &[Variable]) -> Factor {
    let mut scope: Vec<Variable> = pool.iter().filter(|_| rng.gen_bool(0.6)).cloned().collect();
    scope.shuffle(rng);
    let size: usize = scope.iter().map(Variable::cardinality).product();
    let values = (0..size).map(|_| rng.gen_range(0.0..2.0)).collect();
    Factor::new(scope, values).unwrap()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Largest relative difference, measured against the larger magnitude.
pub fn max_rel_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let scale = x.abs().max(y.abs());
            if scale == 0.0 {
                0.0
            } else {
                (x - y).abs() / scale
            }
        })
        .fold(0.0, f64::max)
}

pub fn rounded(values: &[f64], decimals: usize) -> Vec<String> {
    values
        .iter()
        .map(|&v| netdef::format_fixed(v, decimals))
        .collect()
}

pub fn strings(values: &[&str]) -> Vec<String> {
    values.iter().map(|s| s.to_string()).collect()
}
