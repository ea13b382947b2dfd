//! SAT by survey-guided decimation: build a formula, let warning
//! propagation pick the most biased variable, walk the residual, verify.

use semifold::cnf::{Cnf, Literal};
use semifold::sat::{solve_sat, SatOptions, SolveOutcome};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // (x0 | x1) & (!x0 | x2) & (!x1 | !x2) & (x0 | x2)
    let cnf = Cnf::new(
        3,
        vec![
            vec![Literal::pos(0), Literal::pos(1)],
            vec![Literal::neg(0), Literal::pos(2)],
            vec![Literal::neg(1), Literal::neg(2)],
            vec![Literal::pos(0), Literal::pos(2)],
        ],
    );

    let opts = SatOptions::default();
    match solve_sat(&cnf, &opts)? {
        SolveOutcome::Sat { assignment } => {
            println!("model: {assignment:?}");
            let ok = cnf.clauses.iter().all(|c| {
                c.iter()
                    .any(|l| if l.positive { assignment[l.var] } else { !assignment[l.var] })
            });
            println!("verifies: {ok}");
        }
        SolveOutcome::Unknown { conflict } => {
            println!("gave up; conflicting clause: {conflict:?}");
        }
    }

    // A contradiction is certified by naming an input clause that was
    // emptied during propagation. It certifies the failed search path,
    // not unsatisfiability.
    let contradiction = Cnf::new(
        1,
        vec![vec![Literal::pos(0)], vec![Literal::neg(0)]],
    );
    if let SolveOutcome::Unknown { conflict } = solve_sat(&contradiction, &opts)? {
        println!("\nunit clash: clause {} became empty", conflict.unwrap());
    }

    // Bigger instances: parallel restarts with deterministic outcomes.
    let planted = planted_instance(40, 120, 99);
    let opts = SatOptions {
        threads: 4,
        seed: 5,
        ..SatOptions::default()
    };
    match solve_sat(&planted, &opts)? {
        SolveOutcome::Sat { assignment } => {
            println!("\nplanted 3-SAT, 40 vars 120 clauses: solved, x0..x4 = {:?}", &assignment[..5]);
        }
        SolveOutcome::Unknown { .. } => println!("\nplanted instance: gave up"),
    }
    Ok(())
}

/// Random 3-SAT with a hidden model, so the instance is satisfiable by
/// construction.
fn planted_instance(n: usize, m: usize, seed: u64) -> Cnf {
    // A tiny xorshift keeps the example dependency-free.
    let mut state = seed | 1;
    let mut next = move || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        state
    };
    let hidden: Vec<bool> = (0..n).map(|_| next() % 2 == 0).collect();
    let mut clauses = Vec::with_capacity(m);
    while clauses.len() < m {
        let mut vars = [0usize; 3];
        for slot in &mut vars {
            *slot = next() as usize % n;
        }
        if vars[0] == vars[1] || vars[1] == vars[2] || vars[0] == vars[2] {
            continue;
        }
        let clause: Vec<Literal> = vars
            .iter()
            .map(|&v| {
                if next() % 2 == 0 {
                    Literal::pos(v)
                } else {
                    Literal::neg(v)
                }
            })
            .collect();
        // Keep only clauses the hidden assignment satisfies.
        if clause
            .iter()
            .any(|l| if l.positive { hidden[l.var] } else { !hidden[l.var] })
        {
            clauses.push(clause);
        }
    }
    Cnf::new(n, clauses)
}
