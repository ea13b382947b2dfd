//! Survey propagation over the message space of BP: enumerate in-grid
//! fixed points, count them by meta-inference, and read the surveys.

use semifold::algebra::registry_lookup;
use semifold::bp::LoopyOptions;
use semifold::graph::{Factor, FactorGraph};
use semifold::sp::{
    enumerate_bp_fixed_points, fixed_point_frequencies, run_sp, sp_integral, MessageGrid, SpMode,
};
use semifold::value::Value;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // Two binary variables tied by an equality constraint.
    let fg = FactorGraph::build(
        vec![2, 2],
        vec![Factor::new(
            vec![0, 1],
            vec![
                Value::Bool(true),
                Value::Bool(false),
                Value::Bool(false),
                Value::Bool(true),
            ],
        )],
    )?;
    let s = registry_lookup("or-and")?;

    // The grid holds every message BP could pass: boolean vectors here.
    let grid = MessageGrid::auto(&fg, &s)?;
    println!("grid sizes per variable: {:?}", (0..2).map(|v| grid.size(v)).collect::<Vec<_>>());

    // Brute force over all message configurations.
    let points = enumerate_bp_fixed_points(&fg, &s, &grid, None)?;
    println!("enumerated fixed points: {}", points.len());
    for p in &points {
        println!("  v2f candidates {:?}, f2v candidates {:?}", p.v2f, p.f2v);
    }

    // Surveys are distributions over candidates per directed edge. On a
    // tree they converge to the enumeration frequencies exactly.
    let opts = LoopyOptions {
        tol: 1e-12,
        ..LoopyOptions::default()
    };
    let (state, report) = run_sp(&fg, &s, &grid, SpMode::Counting, &opts)?;
    println!("\nsurveys converged: {} in {} sweeps", report.converged, report.iterations);
    let (freq_v2f, _) = fixed_point_frequencies(&fg, &grid, &points);
    for e in 0..state.edge_index().len() {
        let eta: Vec<String> = state.eta_v2f(e).iter().map(Value::to_string).collect();
        let freq: Vec<String> = freq_v2f[e].iter().map(Value::to_string).collect();
        println!("  edge {e}: eta = [{}], enumeration = [{}]", eta.join(", "), freq.join(", "));
    }

    // The integral counts fixed points by sum-product inference on the
    // meta-graph. A tree's meta-graph is again a tree, so it is exact.
    let integral = sp_integral(&fg, &s, &grid, SpMode::Counting, &opts)?;
    println!("\nfixed-point count by meta-inference: {} (exact: {})", integral.value, integral.exact);

    // Group beliefs: the survey-weighted marginal over BP marginals.
    let groups = state.marginal_over_marginals(0)?;
    for (belief, mass) in &groups {
        let cells: Vec<String> = belief.iter().map(Value::to_string).collect();
        println!("belief [{}] carries mass {}", cells.join(", "), mass);
    }
    Ok(())
}
