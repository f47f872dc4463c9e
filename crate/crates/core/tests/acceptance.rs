//! Acceptance suite: one line per criterion, nonzero exit on any failure.
//!
//! Runs with `cargo test -p traitnet --test acceptance`.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};

use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use traitnet::inference::{brute_force_joint, brute_force_marginal};
use traitnet::scoring::{apply_slip_noise, score_trait, NoiseSpec};
use traitnet::simulate::{ancestral_sample, empirical_marginals, likelihood_weighted_sample};
use traitnet::{netdef, Engine, Evidence, ExactEngine, ExactNetwork, Rational};

use common::*;

const ORACLE_TOL: f64 = 1e-9;
const ALGEBRA_TOL: f64 = 1e-12;
const SAMPLING_TOL: f64 = 0.01;
const SAMPLE_COUNT: usize = 200_000;

fn ev(pairs: &[(&str, &str)]) -> Evidence {
    Evidence::from_pairs(pairs.iter().copied()).unwrap()
}

fn marginal(engine: &Engine, evidence: &Evidence, node: &str) -> Vec<f64> {
    engine.query(evidence, &[node]).unwrap().marginals()[0]
        .probs()
        .to_vec()
}

/// Checks the VE marginal against the enumeration oracle and returns it.
fn checked_marginal(engine: &Engine, evidence: &Evidence, node: &str) -> Vec<f64> {
    let ve = marginal(engine, evidence, node);
    let oracle = brute_force_marginal(engine.network(), evidence, node).unwrap();
    let diff = max_abs_diff(&ve, &oracle);
    assert!(
        diff <= ORACLE_TOL,
        "{node}: VE and oracle differ by {diff:e}"
    );
    ve
}

fn assert_prints(values: &[f64], expected: &[&str]) {
    assert_eq!(
        rounded(values, 2),
        strings(expected),
        "raw values {values:?}"
    );
}

fn criterion_1() {
    let engine = Engine::compile(fixture("ex2.bnet"));
    let none = Evidence::new();
    let q11 = checked_marginal(&engine, &none, "Q11");
    let q12 = checked_marginal(&engine, &none, "Q12");
    assert_prints(&q11, &["0.26", "0.17", "0.08", "0.23", "0.28"]);
    assert_prints(&q12, &["0.33", "0.13", "0.10", "0.23", "0.23"]);
}

fn criterion_2() {
    let e = ev(&[("Q11", "2"), ("Q12", "3")]);
    let engine = Engine::compile(fixture("ex2.bnet"));
    let f = checked_marginal(&engine, &e, "F");
    assert_prints(&f, &["0.91", "0.09"]);
    assert!(max_abs_diff(&f, &[10.0 / 11.0, 1.0 / 11.0]) <= ORACLE_TOL);

    // the rational path lands on 10/11 exactly
    let exact: ExactNetwork = netdef::parse_network(&fixture_text("ex2.bnet")).unwrap();
    let r = ExactEngine::compile(exact).query(&e, &["F"]).unwrap();
    let ten_elevenths = Rational::new(10.into(), 11.into());
    assert_eq!(r.marginals()[0].probs()[0], ten_elevenths);
    assert_eq!(r.marginals()[0].probs()[1], Rational::one() - ten_elevenths);
}

fn criterion_3() {
    let engine = Engine::compile(fixture("ex2.bnet"));
    let q12 = checked_marginal(&engine, &ev(&[("Q11", "3")]), "Q12");
    assert_prints(&q12, &["0.42", "0.15", "0.10", "0.17", "0.17"]);
    let high = q12[3] + q12[4];
    assert!((high - 0.33).abs() <= 0.005, "P(Q12 in {{4,5}}) = {high}");

    // the task wording says grade 2; that variant is checked against the oracle only
    let q12_alt = checked_marginal(&engine, &ev(&[("Q11", "2")]), "Q12");
    assert!((q12_alt.iter().sum::<f64>() - 1.0).abs() <= ORACLE_TOL);
}

fn criterion_4() {
    let engine = Engine::compile(fixture("ex3.bnet"));
    let none = Evidence::new();
    let printed: [(&str, [&str; 5]); 5] = [
        ("Q11", ["0.14", "0.13", "0.14", "0.24", "0.35"]),
        ("Q12", ["0.17", "0.17", "0.15", "0.24", "0.27"]),
        ("Q13", ["0.21", "0.18", "0.18", "0.26", "0.17"]),
        ("Q14", ["0.30", "0.25", "0.24", "0.14", "0.07"]),
        ("Q15", ["0.38", "0.22", "0.22", "0.12", "0.06"]),
    ];
    for (node, expected) in printed {
        assert_prints(&checked_marginal(&engine, &none, node), &expected);
    }
}

fn criterion_5() {
    let engine = Engine::compile(fixture("ex3.bnet"));
    let e = ev(&[
        ("Q11", "5"),
        ("Q12", "3"),
        ("Q13", "3"),
        ("Q14", "2"),
        ("Q15", "3"),
    ]);
    let f = checked_marginal(&engine, &e, "F");
    assert_prints(&f, &["0.05", "0.36", "0.33", "0.11", "0.14"]);

    let score = score_trait(&engine, "F", &e, &[">=3".parse().unwrap()]).unwrap();
    let oracle = brute_force_marginal(engine.network(), &e, "F").unwrap();
    let oracle_tail = oracle[3] + oracle[4];
    let p = score.thresholds[0].probability;
    assert!(
        (p - oracle_tail).abs() <= 1e-3,
        "P(F>=3) = {p}, oracle {oracle_tail}"
    );
    assert!((p - 0.257).abs() <= 1e-3, "P(F>=3) = {p}");
}

fn criterion_6() {
    let engine = Engine::compile(fixture("ex3.bnet"));
    let e = ev(&[("Q11", "5"), ("Q12", "3"), ("Q13", "3")]);
    let q14 = checked_marginal(&engine, &e, "Q14");
    assert_prints(&q14, &["0.29", "0.26", "0.24", "0.15", "0.07"]);
    // printed output has 0.19 for grade 4 (sums to 1.07); the oracle value is 0.128
    let q15 = checked_marginal(&engine, &e, "Q15");
    assert_prints(&q15, &["0.34", "0.25", "0.23", "0.13", "0.06"]);
    assert!(rounded(&q15, 2)[3] != "0.19");
}

fn criterion_7() {
    let net = fixture("ex1.bnet");
    let cpt = net.cpt("Q11").unwrap().clone();
    assert!((cpt.row(0)[0] - 0.70).abs() <= 1e-12);
    assert!((cpt.row(3)[4] - 0.20).abs() <= 1e-12);
    assert!((cpt.row(0)[4] - 0.02).abs() <= 1e-12);
    let engine = Engine::compile(net);
    for (f, label) in ["0", "1", "2", "3", "4"].iter().enumerate() {
        let q11 = marginal(&engine, &ev(&[("F", label)]), "Q11");
        assert!(max_abs_diff(&q11, cpt.row(f)) <= 1e-12, "F={label}");
    }
}

fn criterion_8() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x0AC1E);
    let mut impossible = 0;
    for case in 0..500 {
        let net = random_network(&mut rng);
        let evidence = if case % 5 == 0 {
            Evidence::new()
        } else {
            random_evidence(&mut rng, &net)
        };
        let engine = Engine::compile(net.clone());
        let names: Vec<&str> = net.variables().iter().map(|v| v.name()).collect();
        let joint = brute_force_joint(&net, &evidence).unwrap();
        if joint.total() == 0.0 {
            assert!(
                engine.query(&evidence, &names).is_err(),
                "case {case}: zero mass must fail"
            );
            impossible += 1;
            continue;
        }
        let result = engine.query(&evidence, &names).unwrap();
        assert!(
            (result.evidence_probability() - joint.total()).abs() <= ORACLE_TOL,
            "case {case}"
        );
        for m in result.marginals() {
            let oracle = brute_force_marginal(&net, &evidence, m.variable()).unwrap();
            let diff = max_abs_diff(m.probs(), &oracle);
            assert!(
                diff <= ORACLE_TOL,
                "case {case}, {}: {diff:e}",
                m.variable()
            );
        }
    }
    assert!(impossible < 500);
}

fn criterion_9() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xFAC7);
    let pool: Vec<_> = ["A", "B", "C", "D"]
        .iter()
        .map(|n| variable(n, rng.gen_range(2..=4)))
        .collect();
    for case in 0..200 {
        let a = random_factor(&mut rng, &pool);
        let b = random_factor(&mut rng, &pool);
        let c = random_factor(&mut rng, &pool);

        let ab = a.product(&b).unwrap();
        let ba = b.product(&a).unwrap().permute(&ab.scope_names()).unwrap();
        assert!(
            max_rel_diff(ab.values(), ba.values()) <= ALGEBRA_TOL,
            "commutativity, case {case}"
        );

        let left = ab.product(&c).unwrap();
        let right = a
            .product(&b.product(&c).unwrap())
            .unwrap()
            .permute(&left.scope_names())
            .unwrap();
        assert!(
            max_rel_diff(left.values(), right.values()) <= ALGEBRA_TOL,
            "associativity, case {case}"
        );

        for var in left.scope_names() {
            let reduced = left.marginalize(var).unwrap();
            let (x, y) = (left.total(), reduced.total());
            assert!(
                (x - y).abs() <= ALGEBRA_TOL * x.abs().max(1.0),
                "mass, case {case}"
            );
        }

        // reduce commutes with a product when only `a` mentions the variable
        if let Some(v) = a.scope().iter().find(|v| !b.contains(v.name())) {
            let state = rng.gen_range(0..v.cardinality());
            let lhs = ab.reduce_index(v.name(), state).unwrap();
            let rhs = a
                .reduce_index(v.name(), state)
                .unwrap()
                .product(&b)
                .unwrap()
                .permute(&lhs.scope_names())
                .unwrap();
            assert!(
                max_rel_diff(lhs.values(), rhs.values()) <= ALGEBRA_TOL,
                "reduce, case {case}"
            );
        }
    }
}

fn criterion_10() {
    let net3 = fixture("ex3.bnet");
    let engine3 = Engine::compile(net3.clone());
    let samples = ancestral_sample(&net3, SAMPLE_COUNT, 20_240_601).unwrap();
    let nodes = ["Q11", "Q12", "Q13", "Q14", "Q15"];
    for m in empirical_marginals(&samples, &nodes).unwrap() {
        let exact = marginal(&engine3, &Evidence::new(), m.variable());
        let diff = max_abs_diff(m.probs(), &exact);
        assert!(diff <= SAMPLING_TOL, "{}: {diff}", m.variable());
    }

    let net2 = fixture("ex2.bnet");
    let e = ev(&[("Q11", "2"), ("Q12", "3")]);
    let weighted = likelihood_weighted_sample(&net2, &e, SAMPLE_COUNT, 7).unwrap();
    let f = &empirical_marginals(&weighted, &["F"]).unwrap()[0];
    assert!(
        (f.probs()[0] - 10.0 / 11.0).abs() <= SAMPLING_TOL,
        "weighted P(F=0) = {}",
        f.probs()[0]
    );
}

const MALFORMED: [(&str, usize); 20] = [
    ("", 1),
    ("var X : a\nprior X = [ 1 ]\n", 1),
    ("var X : a b\nprior X = [ 1 2 3 ]\n", 2),
    ("var X : a b\nprior X = [ 0 0 ]\n", 2),
    ("var X : a b\nvar X : c d\n", 2),
    ("var X : a b\nprior X = [ 1 1 ]\nprior X = [ 1 1 ]\n", 3),
    ("var X : a b\nprior Y = [ 1 1 ]\n", 2),
    ("var X : a b\nprior X = [ 1 -1 ]\n", 2),
    ("var X : a b\n\nprior X = [ 1 abc ]\n", 3),
    ("# comment\nbogus X\n", 2),
    ("var X a b\n", 1),
    ("var X : a b @role\n", 1),
    ("var X : \"a b\nprior X = [ 1 1 ]\n", 1),
    ("var X : a b\nprior X = [ 1 1\n", 2),
    (
        "var A : 0 1\nvar B : 0 1\nprior A = [ 1 1 ]\ncpt B | A = [ 1 1 ]\n",
        4,
    ),
    ("var X : a a\n", 1),
    (
        "var A : 0 1\nvar B : 0 1\n\ncpt A | B = [ 1 1 ; 1 1 ]\ncpt B | A = [ 1 1 ; 1 1 ]\n",
        4,
    ),
    ("var X : a b\nvar Y : c d\nprior Y = [ 1 1 ]\n", 1),
    ("var X : a b\nprior X = [ 1 1 ] extra\n", 2),
    (
        "var A : 0 1\nvar B : 0 1\nprior A = [ 1 1 ]\ncpt B | A, A = [ 1 1 ; 1 1 ; 1 1 ; 1 1 ]\n",
        4,
    ),
];

fn criterion_11() {
    for name in ["ex2.bnet", "ex3.bnet"] {
        let net = fixture(name);
        let text = netdef::serialize_network(&net);
        let back: traitnet::Network = netdef::parse_network(&text).unwrap();
        assert_eq!(back, net, "{name} round trip");
        assert_eq!(
            netdef::serialize_network(&back),
            text,
            "{name} canonical form"
        );
    }
    for (i, (text, line)) in MALFORMED.iter().enumerate() {
        let err = netdef::parse_network::<f64>(text).expect_err(&format!("case {i} must fail"));
        assert_eq!(err.line, *line, "case {i}: {err}");
    }
    let dot = netdef::export_dot(&fixture("ex3.bnet"));
    let nodes = dot.lines().filter(|l| l.contains("[label=")).count();
    let edges = dot.lines().filter(|l| l.contains("->")).count();
    assert_eq!((nodes, edges), (6, 5));
    for q in ["Q11", "Q12", "Q13", "Q14", "Q15"] {
        assert!(dot.contains(&format!("\"F\" -> \"{q}\";")));
    }
}

fn criterion_12() {
    let net = fixture("ex3.bnet");
    for cpt in net.cpts() {
        assert_eq!(&apply_slip_noise(cpt, &NoiseSpec::new(0.0).unwrap()), cpt);
        let uniform = apply_slip_noise(cpt, &NoiseSpec::new(1.0).unwrap());
        let k = cpt.row(0).len() as f64;
        assert!(uniform.rows().iter().flatten().all(|&p| p == 1.0 / k));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5119);
    for case in 0..100 {
        let net = random_network(&mut rng);
        let cpt = &net.cpts()[rng.gen_range(0..net.len())];
        let eps: f64 = rng.gen_range(0.0..=1.0);
        let noisy = apply_slip_noise(cpt, &NoiseSpec::new(eps).unwrap());
        for row in noisy.rows() {
            let total: f64 = row.iter().sum();
            assert!(
                (total - 1.0).abs() <= 1e-12,
                "case {case}: row sums to {total}"
            );
        }
    }
    // exact arithmetic keeps rows summing to one with no rounding at all
    let exact: ExactNetwork = netdef::parse_network(&fixture_text("ex3.bnet")).unwrap();
    let eps = NoiseSpec::new(Rational::new(1.into(), 7.into())).unwrap();
    for cpt in exact.cpts() {
        for row in apply_slip_noise(cpt, &eps).rows() {
            assert!(row.iter().fold(Rational::zero(), |a, p| a + p).is_one());
        }
    }
}

fn main() {
    let criteria: [(&str, fn()); 12] = [
        ("two questions, task 1: prior answer marginals", criterion_1),
        ("two questions, task 2: trait posterior", criterion_2),
        (
            "two questions, task 3: second answer given the first",
            criterion_3,
        ),
        (
            "five questions, task 1: prior answer marginals",
            criterion_4,
        ),
        (
            "five questions, task 2: trait posterior and P(F>=3)",
            criterion_5,
        ),
        ("five questions, task 3: Q14/Q15 posteriors", criterion_6),
        (
            "single question: table constraints and row recovery",
            criterion_7,
        ),
        ("oracle equivalence on 500 random networks", criterion_8),
        ("factor algebra on 200 random factors", criterion_9),
        ("sampling cross-check", criterion_10),
        ("parser round trip, malformed inputs, DOT", criterion_11),
        ("slip noise transform", criterion_12),
    ];
    std::panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match catch_unwind(AssertUnwindSafe(check)) {
            Ok(()) => println!("PASS  criterion {:>2}: {name}", i + 1),
            Err(payload) => {
                failed += 1;
                let reason = payload
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| payload.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default();
                println!("FAIL  criterion {:>2}: {name}: {reason}", i + 1);
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
