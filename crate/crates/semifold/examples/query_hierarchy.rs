//! Nested marginalization queries: the text grammar, exact evaluation, the
//! complexity classifier, and why level order matters.

use semifold::exact::{evaluate_query, EvalOptions};
use semifold::graph::{Factor, FactorGraph};
use semifold::value::Value;
use semifold::{classify, parse_query};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // A small model: two decision variables, one chance variable.
    let fg = FactorGraph::build(
        vec![2, 2, 2],
        vec![
            Factor::new(
                vec![0, 2],
                vec![Value::int(2), Value::int(1), Value::int(1), Value::int(5)],
            ),
            Factor::new(
                vec![1, 2],
                vec![Value::int(1), Value::int(3), Value::int(4), Value::int(1)],
            ),
        ],
    )?;
    let opts = EvalOptions::default();

    // `levels[0]` is outermost; `@all` covers every variable; variables
    // missing from all levels stay free and index the output table.
    for text in [
        "sum@all::prod",
        "max@{0,1};sum@{2}::prod",
        "max@{0}::prod",
    ] {
        let q = parse_query(text, 3)?;
        let result = evaluate_query(&fg, &q, &opts)?;
        match result.as_scalar() {
            Some(v) => println!("{text:<28} = {v}"),
            None => {
                let cells: Vec<String> = result.values.iter().map(Value::to_string).collect();
                println!("{text:<28} = table over {:?}: [{}]", result.vars, cells.join(", "));
            }
        }
    }

    // The classifier reads the level structure, not the graph.
    println!();
    for text in [
        "sum@all::prod",
        "max@{0,1};sum@{2}::prod",
        "max!@{0,1};sum@{2}::prod",
        "min@all::max",
    ] {
        let c = classify(&parse_query(text, 3)?)?;
        println!("{text:<28} family {:<6} complexity {}", c.family.to_string(), c.complexity());
    }

    // Reduction order is not interchangeable: the bottleneck witness.
    let witness = FactorGraph::build(
        vec![2, 2],
        vec![Factor::new(
            vec![0, 1],
            vec![Value::int(0), Value::int(1), Value::int(1), Value::int(0)],
        )],
    )?;
    let min_outer = evaluate_query(&witness, &parse_query("min@{0};max@{1}::prod", 2)?, &opts)?;
    let max_outer = evaluate_query(&witness, &parse_query("max@{1};min@{0}::prod", 2)?, &opts)?;
    println!(
        "\nmin of max = {}, max of min = {}",
        min_outer.as_scalar().unwrap(),
        max_outer.as_scalar().unwrap()
    );
    Ok(())
}
