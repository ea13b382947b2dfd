//! Iterative belief propagation on a cyclic graph: schedules, damping,
//! seeded random starts, and how the estimates compare to ground truth.

use semifold::algebra::registry_lookup;
use semifold::bp::{run_loopy, Init, LoopyOptions, Schedule};
use semifold::graph::{Factor, FactorGraph};
use semifold::value::Value;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // A frustrated 3-cycle: every pairwise factor prefers disagreement.
    let pair = |a: usize, b: usize| {
        Factor::new(
            vec![a, b],
            vec![Value::int(1), Value::int(3), Value::int(3), Value::int(1)],
        )
    };
    let fg = FactorGraph::build(vec![2, 2, 2], vec![pair(0, 1), pair(1, 2), pair(0, 2)])?;
    let s = registry_lookup("sum-product")?;

    // Ground truth by enumeration: 2^3 assignments.
    let mut truth = [Value::int(0), Value::int(0)];
    for z in 0..8usize {
        let assign = [z >> 2 & 1, z >> 1 & 1, z & 1];
        let w = fg.evaluate(&s, &assign)?;
        truth[assign[0]] = truth[assign[0]].add(&w)?;
    }
    let total = truth[0].add(&truth[1])?;
    println!(
        "exact p(x0): [{}, {}]",
        truth[0].to_string(),
        truth[1].to_string()
    );
    println!("         as floats: [{:.6}, {:.6}]",
        truth[0].to_f64().unwrap() / total.to_f64().unwrap(),
        truth[1].to_f64().unwrap() / total.to_f64().unwrap());

    // Loopy BP is a fixed-point iteration; on cyclic graphs its beliefs
    // are estimates. Damping trades speed for stability.
    for (label, opts) in [
        (
            "synchronous",
            LoopyOptions {
                schedule: Schedule::Synchronous,
                ..LoopyOptions::default()
            },
        ),
        (
            "sequential ",
            LoopyOptions {
                schedule: Schedule::Sequential,
                ..LoopyOptions::default()
            },
        ),
        (
            "damped 0.5 ",
            LoopyOptions {
                damping: 0.5,
                ..LoopyOptions::default()
            },
        ),
        (
            "random init",
            LoopyOptions {
                init: Init::Random,
                seed: 7,
                ..LoopyOptions::default()
            },
        ),
    ] {
        let (state, report) = run_loopy(&fg, &s, &opts)?;
        let belief = state.marginal_variable(0)?;
        println!(
            "{label} converged={} iters={:<3} belief(x0) = [{:.6}, {:.6}]",
            report.converged,
            report.iterations,
            belief[0].to_f64().unwrap(),
            belief[1].to_f64().unwrap()
        );
    }
    Ok(())
}
