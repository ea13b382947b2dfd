//! Build a factor graph in code, evaluate assignments under different
//! semirings, and clamp evidence.

use semifold::algebra::registry_lookup;
use semifold::graph::{Factor, FactorGraph, Reduced};
use semifold::value::Value;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // Three binary variables, a chain of two pairwise factors plus a unary
    // preference on the middle. Tables are row-major, last variable
    // fastest, and scopes are sorted.
    let fg = FactorGraph::build(
        vec![2, 2, 2],
        vec![
            Factor::new(
                vec![0, 1],
                vec![Value::int(3), Value::int(1), Value::int(1), Value::int(3)],
            ),
            Factor::new(
                vec![1, 2],
                vec![Value::int(2), Value::int(1), Value::int(1), Value::int(2)],
            ),
            Factor::new(vec![1], vec![Value::int(1), Value::int(4)]),
        ],
    )?;
    println!(
        "{} variables, {} factors, tree: {}",
        fg.num_vars(),
        fg.num_factors(),
        fg.is_tree()
    );

    // The expanded form at one full assignment, read under two algebras:
    // a product of compatibilities, or a total cost.
    let z = [0, 1, 1];
    let sum_product = registry_lookup("sum-product")?;
    let min_sum = registry_lookup("min-sum")?;
    println!("product at {z:?}: {}", fg.evaluate(&sum_product, &z)?);
    println!("   cost at {z:?}: {}", fg.evaluate(&min_sum, &z)?);

    // Clamping evidence renumbers the remaining variables densely.
    match fg.reduce(&sum_product, &[(1, 1)])? {
        Reduced::Graph { graph, kept } => {
            println!("\nclamp x1=1: {} variables remain, kept = {kept:?}", graph.num_vars());
            for (idx, f) in graph.factors().iter().enumerate() {
                let cells: Vec<String> = f.table.iter().map(Value::to_string).collect();
                println!("  factor {idx} over {:?}: [{}]", f.scope, cells.join(", "));
            }
        }
        Reduced::Scalar(v) => println!("graph folded to {v}"),
    }

    // Clamping everything folds the whole graph to a scalar.
    if let Reduced::Scalar(v) = fg.reduce(&min_sum, &[(0, 0), (1, 1), (2, 1)])? {
        println!("\nfully clamped cost: {v}");
    }
    Ok(())
}
