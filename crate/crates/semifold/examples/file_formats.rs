//! The two text surfaces: the factor-graph format with its canonical
//! renderer and digest, and DIMACS CNF with its lenient parser.

use semifold::algebra::registry_lookup;
use semifold::cnf::encode_cnf;
use semifold::format::{digest_hex, parse_dimacs, parse_fg, render_fg};
use semifold::value::Value;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // Whitespace and unreduced fractions are accepted on the way in and
    // rewritten canonically on the way out.
    let messy = "FG   1
SEMIRING sum-product
VARS 2
DOM 2   3
FACTORS 1
SCOPE 2  0 1
TABLE 2/4 1 3 6/2 0.5 9
";
    let doc = parse_fg(messy)?;
    let canonical = render_fg(&doc);
    println!("--- canonical form ---\n{canonical}");
    println!("digest: {}", digest_hex(canonical.as_bytes()));

    // Rendering is idempotent: canonical text parses to the same bytes.
    assert_eq!(render_fg(&parse_fg(&canonical)?), canonical);

    // Parse errors carry line and column.
    let broken = "FG 1\nSEMIRING sum-product\nVARS 1\nDOM 2\nFACTORS 1\nSCOPE 1 0\nTABLE 1 oops\n";
    if let Err(e) = parse_fg(broken) {
        println!("\nbroken file: {e}");
    }

    // DIMACS: comments, a header, zero-terminated clauses. Recoverable
    // oddities (count mismatches, a missing final zero) become warnings.
    let dimacs = "c tiny instance
p cnf 3 3
1 -2 0
2 3 0
-1 0
";
    let (cnf, warnings) = parse_dimacs(dimacs)?;
    println!("\n{} variables, {} clauses, warnings: {warnings:?}", cnf.num_vars, cnf.clauses.len());

    // A formula is also a factor graph: clauses become constraint tables.
    let s = registry_lookup("or-and")?;
    let fg = encode_cnf(&cnf, &s)?;
    println!("encoded: {} factors over {} variables", fg.num_factors(), fg.num_vars());
    let unit = &fg.factors()[2];
    let cells: Vec<String> = unit.table.iter().map(Value::to_string).collect();
    println!("unit clause factor over {:?}: [{}]", unit.scope, cells.join(", "));
    Ok(())
}
