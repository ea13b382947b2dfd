//! Exact belief propagation on a tree: marginals for four semirings from
//! one message pass, the integral decomposition, and decoding.

use semifold::algebra::registry_lookup;
use semifold::bp::run_tree;
use semifold::graph::{Factor, FactorGraph};
use semifold::value::Value;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // A star: x1 in the middle, three leaves coupled to it.
    let pair = |a: usize, b: usize| {
        Factor::new(
            vec![a, b],
            vec![Value::int(4), Value::int(1), Value::int(1), Value::int(2)],
        )
    };
    let fg = FactorGraph::build(vec![2, 2, 2, 2], vec![pair(0, 1), pair(1, 2), pair(1, 3)])?;

    // Same messages, different questions.
    for name in ["sum-product", "max-product", "min-sum", "min-max"] {
        let s = registry_lookup(name)?;
        let state = run_tree(&fg, &s)?;
        let belief: Vec<String> = state
            .marginal_variable(1)?
            .iter()
            .map(Value::to_string)
            .collect();
        println!("{name:<12} belief of x1: [{}]", belief.join(", "));
    }

    // For invertible semirings the local integrals recombine into the
    // global one without touching the exponential sum again.
    let s = registry_lookup("sum-product")?;
    let state = run_tree(&fg, &s)?;
    println!("\npartition function: {}", state.integral_decomposition()?);

    // Choice semirings decode an optimizing assignment from the beliefs.
    let s = registry_lookup("max-product")?;
    let state = run_tree(&fg, &s)?;
    if let Some(best) = state.decode_choice()? {
        println!("most compatible assignment: {best:?}");
        println!("its product: {}", fg.evaluate(&s, &best)?);
    }
    Ok(())
}
