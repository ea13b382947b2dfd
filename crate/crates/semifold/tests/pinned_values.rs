//! Values pinned by hand: small fixtures whose answers were worked out
//! independently and frozen here. If one of these moves, the engine
//! changed meaning, not just implementation.

mod common;

use semifold::algebra::registry_lookup;
use semifold::bp::run_tree;
use semifold::cnf::{encode_cnf, Cnf, Literal};
use semifold::exact::{evaluate_query, EvalOptions};
use semifold::format::load_fg;
use semifold::graph::FactorGraph;
use semifold::parse_query;
use semifold::value::Value;
use std::path::Path;

fn fixture(name: &str) -> FactorGraph {
    let path = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/data")
        .join(name);
    load_fg(&path).expect("fixture parses").graph
}

/// Fold a factor graph's entries at one assignment with min, indexing each
/// table by hand. This is the expanded form under a min expansion written
/// out by definition; no bundled semiring provides it.
fn min_fold(fg: &FactorGraph, z: &[usize]) -> Value {
    let mut acc: Option<Value> = None;
    for f in fg.factors() {
        let mut idx = 0;
        for &v in &f.scope {
            idx = idx * fg.domains()[v] + z[v];
        }
        let cell = &f.table[idx];
        acc = Some(match acc {
            None => cell.clone(),
            Some(a) => a.min_choice(cell).expect("counts compare"),
        });
    }
    acc.expect("fixture has factors")
}

#[test]
fn counting_fixture_evaluations_are_frozen() {
    let fg = fixture("counting12.fg");
    assert_eq!(fg.num_vars(), 12);
    assert_eq!(fg.num_factors(), 12);

    let alternating: Vec<usize> = (0..12).map(|v| v % 2).collect();
    assert_eq!(min_fold(&fg, &alternating), Value::int(0));
    assert_eq!(min_fold(&fg, &vec![0; 12]), Value::int(0));

    let min_sum = registry_lookup("min-sum").unwrap();
    assert_eq!(fg.evaluate(&min_sum, &alternating).unwrap(), Value::int(16));

    // One factor counts zero ones at the alternating assignment, and zero
    // annihilates the product.
    let max_prod = registry_lookup("max-product").unwrap();
    assert_eq!(fg.evaluate(&max_prod, &alternating).unwrap(), Value::int(0));
}

#[test]
fn identity_pairs_match_the_published_table() {
    let cases = [
        ("sum-product", Value::int(1), Value::int(0)),
        ("min-sum", Value::int(0), Value::PosInf),
        ("min-max", Value::NegInf, Value::PosInf),
    ];
    for (name, one_times, one_plus) in cases {
        let s = registry_lookup(name).unwrap();
        assert_eq!(s.one_times, one_times, "{name} expansion identity");
        assert_eq!(s.one_plus, one_plus, "{name} marginalization identity");
    }
}

#[test]
fn chain_marginals_and_decomposition_are_exact() {
    let fg = fixture("chain.fg");
    let s = registry_lookup("sum-product").unwrap();
    let state = run_tree(&fg, &s).unwrap();

    assert_eq!(
        state.marginal_variable(0).unwrap(),
        vec![Value::ratio(3, 10), Value::ratio(7, 10)]
    );
    assert_eq!(
        state.marginal_variable(1).unwrap(),
        vec![Value::ratio(2, 5), Value::ratio(3, 5)]
    );
    assert_eq!(state.integral_decomposition().unwrap(), Value::int(10));
}

#[test]
fn min_sum_beliefs_are_grounded_at_zero() {
    let fg = fixture("chain.fg");
    let s = registry_lookup("min-sum").unwrap();
    let state = run_tree(&fg, &s).unwrap();

    // Raw folds: x0 keeps min(1,2)=1 and min(3,4)=3; x1 keeps 1 and 2.
    assert_eq!(
        state.marginal_variable(0).unwrap(),
        vec![Value::int(0), Value::int(2)]
    );
    assert_eq!(
        state.marginal_variable(1).unwrap(),
        vec![Value::int(0), Value::int(1)]
    );
}

#[test]
fn witness_shows_the_operations_do_not_commute() {
    let fg = fixture("witness.fg");
    let opts = EvalOptions::default();

    let outer_min = parse_query("min@{0};max@{1}::prod", 2).unwrap();
    let val = evaluate_query(&fg, &outer_min, &opts).unwrap();
    assert_eq!(val.as_scalar(), Some(&Value::int(1)));

    let outer_max = parse_query("max@{1};min@{0}::prod", 2).unwrap();
    let val = evaluate_query(&fg, &outer_max, &opts).unwrap();
    assert_eq!(val.as_scalar(), Some(&Value::int(0)));
}

#[test]
fn clause_encoding_pins_the_violating_cell() {
    // x0 or not x1: exactly the assignment (0, 1) violates.
    let cnf = Cnf::new(2, vec![vec![Literal::pos(0), Literal::neg(1)]]);
    let s = registry_lookup("or-and").unwrap();
    let fg = encode_cnf(&cnf, &s).unwrap();

    assert_eq!(fg.num_factors(), 1);
    assert_eq!(fg.factors()[0].scope, vec![0, 1]);
    assert_eq!(
        fg.factors()[0].table,
        vec![
            Value::Bool(true),
            Value::Bool(false),
            Value::Bool(true),
            Value::Bool(true),
        ]
    );
}

#[test]
fn naive_oracle_agrees_on_the_chain_fixture() {
    // Sanity-pin the oracle itself before the random suites lean on it.
    let fg = fixture("chain.fg");
    let q = parse_query("sum@all::prod", 2).unwrap();
    assert_eq!(common::naive_query(&fg, &q), vec![Value::int(10)]);

    let q = parse_query("sum@{1}::prod", 2).unwrap();
    assert_eq!(
        common::naive_query(&fg, &q),
        vec![Value::int(3), Value::int(7)]
    );
}
