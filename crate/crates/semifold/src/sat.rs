//! Satisfiability search guided by counting surveys.
//!
//! The solver runs warning propagation, the compressed form of counting
//! surveys on or-and clause factors: a clause-to-variable survey only ever
//! carries mass on {no constraint, warning, contradiction} and a
//! variable-to-clause survey on {free, forced false, forced true,
//! contradiction}, so the grid collapses to three and four numbers per
//! directed edge. The compressed update is algebraically identical to the
//! generic grid survey restricted to that support, which the tests check
//! exactly in rational arithmetic.
//!
//! Decimation clamps the most biased variable, propagates units, and
//! repeats; once every bias is weak the residual formula goes to a seeded
//! random walk. Restarts are independent and deterministically seeded, and
//! any returned assignment is verified against the original formula.

use crate::algebra::{normalize, AlgebraError, SemiringSpec};
use crate::bp::{damp_vec, residual, BpError};
use crate::cnf::{Cnf, CnfError, Literal};
use crate::value::{Value, ValueError};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::VecDeque;
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Mutex;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SatError {
    #[error(transparent)]
    Cnf(#[from] CnfError),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error(transparent)]
    Value(#[from] ValueError),
    #[error(transparent)]
    Bp(#[from] BpError),
}

#[derive(Debug, Clone)]
pub struct SatOptions {
    /// Warning-propagation sweeps per decimation round.
    pub max_iter: usize,
    /// Residual below which the sweeps stop.
    pub tol: f64,
    /// Damping for the survey sweeps.
    pub damping: f64,
    /// Leans weaker than this hand the residual formula to the walk.
    pub bias_threshold: f64,
    /// Independent restarts; the lowest-index success wins.
    pub restarts: usize,
    /// Worker threads for the restarts (1 = run them inline).
    pub threads: usize,
    /// Flip budget for the random walk per restart.
    pub walk_flips: usize,
    pub seed: u64,
}

impl Default for SatOptions {
    fn default() -> Self {
        SatOptions {
            max_iter: 120,
            tol: 1e-7,
            damping: 0.3,
            bias_threshold: 0.01,
            restarts: 4,
            threads: 1,
            walk_flips: 50_000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SolveOutcome {
    Sat { assignment: Vec<bool> },
    /// No model found. `conflict` names an original clause that decimation
    /// emptied; it certifies the failed search path, not unsatisfiability.
    Unknown { conflict: Option<usize> },
}

enum AttemptResult {
    Sat(Vec<bool>),
    Conflict(usize),
    GaveUp,
}

/// Clause set under a growing partial assignment, with unit propagation.
/// Clause indices stay the original ones so conflicts name input clauses.
struct Propagator<'a> {
    cnf: &'a Cnf,
    /// Deduplicated literals per clause, sorted by variable.
    clauses: Vec<Vec<Literal>>,
    /// Tautological clauses are satisfied by construction.
    taut: Vec<bool>,
    occ: Vec<Vec<usize>>,
    values: Vec<Option<bool>>,
}

impl<'a> Propagator<'a> {
    fn new(cnf: &'a Cnf) -> Self {
        let mut clauses = Vec::with_capacity(cnf.clauses.len());
        let mut taut = Vec::with_capacity(cnf.clauses.len());
        let mut occ = vec![Vec::new(); cnf.num_vars];
        for (c, lits) in cnf.clauses.iter().enumerate() {
            let mut seen: Vec<Literal> = Vec::with_capacity(lits.len());
            let mut tautological = false;
            for &l in lits {
                if seen.iter().any(|s| s.var == l.var && s.positive != l.positive) {
                    tautological = true;
                }
                if !seen.contains(&l) {
                    seen.push(l);
                }
            }
            seen.sort_by_key(|l| (l.var, l.positive));
            if !tautological {
                for l in &seen {
                    occ[l.var].push(c);
                }
            }
            clauses.push(seen);
            taut.push(tautological);
        }
        Propagator {
            cnf,
            clauses,
            taut,
            occ,
            values: vec![None; cnf.num_vars],
        }
    }

    fn clause_satisfied(&self, c: usize) -> bool {
        self.taut[c]
            || self.clauses[c]
                .iter()
                .any(|l| matches!(self.values[l.var], Some(v) if l.satisfied_by(v)))
    }

    fn live(&self, c: usize) -> Vec<Literal> {
        self.clauses[c]
            .iter()
            .copied()
            .filter(|l| self.values[l.var].is_none())
            .collect()
    }

    /// Assign and propagate units. `cause` is the clause that forced the
    /// root assignment, if any; a clause emptied along the way is returned
    /// as the conflict.
    fn force(&mut self, var: usize, val: bool, cause: Option<usize>) -> Result<(), usize> {
        let mut queue = VecDeque::from([(var, val, cause)]);
        while let Some((v, x, why)) = queue.pop_front() {
            match self.values[v] {
                Some(cur) if cur == x => continue,
                Some(_) => {
                    return Err(why.expect("decisions always target unassigned variables"))
                }
                None => {}
            }
            self.values[v] = Some(x);
            for &c in &self.occ[v] {
                if self.clause_satisfied(c) {
                    continue;
                }
                let live = self.live(c);
                match live.len() {
                    0 => return Err(c),
                    1 => queue.push_back((live[0].var, live[0].positive, Some(c))),
                    _ => {}
                }
            }
        }
        Ok(())
    }

    /// Propagate the formula's unit clauses.
    fn seed_units(&mut self) -> Result<(), usize> {
        for c in 0..self.clauses.len() {
            if self.taut[c] || self.clause_satisfied(c) {
                continue;
            }
            let live = self.live(c);
            match live.len() {
                0 => return Err(c),
                1 => self.force(live[0].var, live[0].positive, Some(c))?,
                _ => {}
            }
        }
        Ok(())
    }

    fn complete_with_false(&self) -> Vec<bool> {
        self.values.iter().map(|v| v.unwrap_or(false)).collect()
    }
}

/// Live clauses and literals under the current partial assignment.
struct View {
    clauses: Vec<usize>,
    lits: Vec<Vec<Literal>>,
    /// var -> (position in `clauses`, literal slot).
    occ: Vec<Vec<(usize, usize)>>,
}

impl View {
    fn build(prop: &Propagator<'_>) -> Self {
        let mut clauses = Vec::new();
        let mut lits = Vec::new();
        let mut occ = vec![Vec::new(); prop.cnf.num_vars];
        for c in 0..prop.clauses.len() {
            if prop.taut[c] || prop.clause_satisfied(c) {
                continue;
            }
            let live = prop.live(c);
            debug_assert!(live.len() >= 2, "units are propagated before viewing");
            let ci = clauses.len();
            for (k, l) in live.iter().enumerate() {
                occ[l.var].push((ci, k));
            }
            clauses.push(c);
            lits.push(live);
        }
        View { clauses, lits, occ }
    }

    /// The live formula over densely renumbered variables, plus the map
    /// back to original indices.
    fn residual_cnf(&self, num_vars: usize) -> (Cnf, Vec<usize>) {
        let back: Vec<usize> = (0..num_vars).filter(|&v| !self.occ[v].is_empty()).collect();
        let fwd: std::collections::HashMap<usize, usize> =
            back.iter().enumerate().map(|(n, &o)| (o, n)).collect();
        let clauses = self
            .lits
            .iter()
            .map(|live| {
                live.iter()
                    .map(|l| Literal {
                        var: fwd[&l.var],
                        positive: l.positive,
                    })
                    .collect()
            })
            .collect();
        (Cnf::new(back.len(), clauses), back)
    }
}

/// Clamp float rounding residue; exact backends pass through.
fn nonneg(v: Value) -> Value {
    if let Value::Float(f) = v {
        if f < 0.0 {
            return Value::Float(0.0);
        }
    }
    v
}

/// Compressed survey masses per directed edge of the live formula.
/// Clause-to-variable: [no constraint, warning, contradiction].
/// Variable-to-clause: [free, forced false, forced true, contradiction].
struct WpState {
    c2v: Vec<Vec<Vec<Value>>>,
    v2c: Vec<Vec<Vec<Value>>>,
}

impl WpState {
    fn uniform_float(view: &View) -> Self {
        let c2v = view
            .lits
            .iter()
            .map(|l| vec![vec![Value::Float(1.0 / 3.0); 3]; l.len()])
            .collect();
        let v2c = view
            .lits
            .iter()
            .map(|l| vec![vec![Value::Float(0.25); 4]; l.len()])
            .collect();
        WpState { c2v, v2c }
    }

    /// Mass vector [free, forced-false, forced-true, contradiction] a
    /// variable sends toward `skip`, or its belief when `skip` is None.
    fn v2c_mass(
        &self,
        view: &View,
        sp: &SemiringSpec,
        var: usize,
        skip: Option<(usize, usize)>,
    ) -> Result<Vec<Value>, SatError> {
        let one = Value::int(1);
        // Partial products over clauses warning toward false (t0/tw0) and
        // toward true (t1/tw1), plus the all-states total.
        let (mut t0, mut tw0) = (one.clone(), one.clone());
        let (mut t1, mut tw1) = (one.clone(), one.clone());
        let mut tot = one.clone();
        for &(cj, kj) in &view.occ[var] {
            if skip == Some((cj, kj)) {
                continue;
            }
            let m = &self.c2v[cj][kj];
            let tt_w = sp.plus(&m[0], &m[1])?;
            tot = sp.times(&tot, &sp.plus(&tt_w, &m[2])?)?;
            if view.lits[cj][kj].positive {
                t1 = sp.times(&t1, &m[0])?;
                tw1 = sp.times(&tw1, &tt_w)?;
            } else {
                t0 = sp.times(&t0, &m[0])?;
                tw0 = sp.times(&tw0, &tt_w)?;
            }
        }
        let tt = sp.times(&t0, &t1)?;
        let f1 = nonneg(sp.times(&t0, &tw1.sub(&t1)?)?);
        let f0 = nonneg(sp.times(&t1, &tw0.sub(&t0)?)?);
        let ff = nonneg(tot.sub(&tt)?.sub(&f0)?.sub(&f1)?);
        Ok(normalize(sp, &[tt, f0, f1, ff])?.values)
    }

    /// Mass vector [no constraint, warning, contradiction] clause `ci`
    /// sends through slot `k`.
    fn c2v_mass(
        &self,
        view: &View,
        sp: &SemiringSpec,
        ci: usize,
        k: usize,
    ) -> Result<Vec<Value>, SatError> {
        let one = Value::int(1);
        let mut viol = one.clone();
        let mut nonff = one.clone();
        let mut tot = one;
        for (j, lit) in view.lits[ci].iter().enumerate() {
            if j == k {
                continue;
            }
            let m = &self.v2c[ci][j];
            // Forced to the value this literal cannot satisfy.
            let v = if lit.positive { &m[1] } else { &m[2] };
            viol = sp.times(&viol, v)?;
            let nf = sp.plus(&sp.plus(&m[0], &m[1])?, &m[2])?;
            nonff = sp.times(&nonff, &nf)?;
            tot = sp.times(&tot, &sp.plus(&nf, &m[3])?)?;
        }
        let w = viol.clone();
        let ff = nonneg(tot.sub(&nonff)?);
        let tt = nonneg(nonff.sub(&viol)?);
        Ok(normalize(sp, &[tt, w, ff])?.values)
    }

    /// One synchronous sweep: both directions from the old state. Returns
    /// the worst residual.
    fn sweep(&mut self, view: &View, sp: &SemiringSpec, damping: f64) -> Result<f64, SatError> {
        let mut worst = 0.0_f64;
        let mut new_v2c = Vec::with_capacity(self.v2c.len());
        let mut new_c2v = Vec::with_capacity(self.c2v.len());
        for (ci, lits) in view.lits.iter().enumerate() {
            let mut row_v = Vec::with_capacity(lits.len());
            let mut row_c = Vec::with_capacity(lits.len());
            for (k, lit) in lits.iter().enumerate() {
                let v2c = self.v2c_mass(view, sp, lit.var, Some((ci, k)))?;
                row_v.push(damp_vec(sp, &self.v2c[ci][k], v2c, damping)?);
                let c2v = self.c2v_mass(view, sp, ci, k)?;
                row_c.push(damp_vec(sp, &self.c2v[ci][k], c2v, damping)?);
            }
            new_v2c.push(row_v);
            new_c2v.push(row_c);
        }
        for ci in 0..view.lits.len() {
            for k in 0..view.lits[ci].len() {
                worst = worst.max(residual(&new_v2c[ci][k], &self.v2c[ci][k]));
                worst = worst.max(residual(&new_c2v[ci][k], &self.c2v[ci][k]));
            }
        }
        self.v2c = new_v2c;
        self.c2v = new_c2v;
        Ok(worst)
    }

    /// Net preference toward true: forced-true minus forced-false mass of
    /// the variable's belief.
    fn lean(&self, view: &View, sp: &SemiringSpec, var: usize) -> Result<f64, SatError> {
        let belief = self.v2c_mass(view, sp, var, None)?;
        let plus = belief[2].to_f64().unwrap_or(0.0);
        let minus = belief[1].to_f64().unwrap_or(0.0);
        Ok(plus - minus)
    }
}

/// Seeded random walk: flip a variable of a violated clause, randomly or
/// by minimum break count (ties to the lowest variable).
fn walksat(cnf: &Cnf, rng: &mut ChaCha8Rng, max_flips: usize) -> Option<Vec<bool>> {
    let n = cnf.num_vars;
    let m = cnf.clauses.len();
    if m == 0 {
        return Some(vec![false; n]);
    }
    let mut assign: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.5)).collect();
    let mut occ: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (c, lits) in cnf.clauses.iter().enumerate() {
        for l in lits {
            occ[l.var].push(c);
        }
    }
    let mut sat_count: Vec<usize> = cnf
        .clauses
        .iter()
        .map(|lits| lits.iter().filter(|l| l.satisfied_by(assign[l.var])).count())
        .collect();
    let mut unsat: Vec<usize> = (0..m).filter(|&c| sat_count[c] == 0).collect();
    let mut unsat_pos: Vec<usize> = vec![usize::MAX; m];
    for (i, &c) in unsat.iter().enumerate() {
        unsat_pos[c] = i;
    }

    for _ in 0..max_flips {
        if unsat.is_empty() {
            return Some(assign);
        }
        let c = unsat[rng.gen_range(0..unsat.len())];
        let lits = &cnf.clauses[c];
        let var = if rng.gen_bool(0.5) {
            lits[rng.gen_range(0..lits.len())].var
        } else {
            let mut best = (usize::MAX, usize::MAX);
            for l in lits {
                let breaks = occ[l.var]
                    .iter()
                    .filter(|&&d| {
                        sat_count[d] == 1
                            && cnf.clauses[d]
                                .iter()
                                .any(|x| x.var == l.var && x.satisfied_by(assign[l.var]))
                    })
                    .count();
                if breaks < best.0 {
                    best = (breaks, l.var);
                }
            }
            best.1
        };
        assign[var] = !assign[var];
        for &d in &occ[var] {
            let lit = cnf.clauses[d]
                .iter()
                .find(|l| l.var == var)
                .expect("occurrence lists mirror the clauses");
            if lit.satisfied_by(assign[var]) {
                sat_count[d] += 1;
                if sat_count[d] == 1 {
                    let i = unsat_pos[d];
                    let last = *unsat.last().expect("d was violated");
                    unsat.swap_remove(i);
                    unsat_pos[last] = if last == d { usize::MAX } else { i };
                    unsat_pos[d] = usize::MAX;
                }
            } else {
                sat_count[d] -= 1;
                if sat_count[d] == 0 {
                    unsat_pos[d] = unsat.len();
                    unsat.push(d);
                }
            }
        }
    }
    if unsat.is_empty() {
        Some(assign)
    } else {
        None
    }
}

fn attempt_seed(seed: u64, restart: usize) -> u64 {
    // SplitMix64 keeps restart streams apart even for adjacent seeds.
    let mut z = seed.wrapping_add((restart as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn verify(cnf: &Cnf, assignment: Vec<bool>) -> AttemptResult {
    if cnf.is_satisfied_by(&assignment) {
        AttemptResult::Sat(assignment)
    } else {
        debug_assert!(false, "candidate assignment failed verification");
        AttemptResult::GaveUp
    }
}

fn attempt(cnf: &Cnf, opts: &SatOptions, seed: u64) -> Result<AttemptResult, SatError> {
    let sp = SemiringSpec::sum_product();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut prop = Propagator::new(cnf);
    if let Err(c) = prop.seed_units() {
        return Ok(AttemptResult::Conflict(c));
    }
    loop {
        let view = View::build(&prop);
        if view.clauses.is_empty() {
            return Ok(verify(cnf, prop.complete_with_false()));
        }
        let mut wp = WpState::uniform_float(&view);
        for _ in 0..opts.max_iter {
            if wp.sweep(&view, &sp, opts.damping)? <= opts.tol {
                break;
            }
        }
        let mut best: Option<(f64, usize, bool)> = None;
        for var in 0..cnf.num_vars {
            if view.occ[var].is_empty() {
                continue;
            }
            let lean = wp.lean(&view, &sp, var)?;
            if best.is_none_or(|(mag, _, _)| lean.abs() > mag) {
                best = Some((lean.abs(), var, lean > 0.0));
            }
        }
        let (mag, var, val) = best.expect("live clauses hold live variables");
        if mag < opts.bias_threshold {
            let (residual_cnf, back) = view.residual_cnf(cnf.num_vars);
            if let Some(sub) = walksat(&residual_cnf, &mut rng, opts.walk_flips) {
                let mut values = prop.values.clone();
                for (nv, &ov) in back.iter().enumerate() {
                    values[ov] = Some(sub[nv]);
                }
                let full: Vec<bool> = values.iter().map(|v| v.unwrap_or(false)).collect();
                return Ok(verify(cnf, full));
            }
            return Ok(AttemptResult::GaveUp);
        }
        if let Err(c) = prop.force(var, val, None) {
            return Ok(AttemptResult::Conflict(c));
        }
    }
}

/// Search for a model. Restarts are deterministic given the options: each
/// gets its own derived seed, and the lowest-index success is returned no
/// matter how many threads ran them.
pub fn solve_sat(cnf: &Cnf, opts: &SatOptions) -> Result<SolveOutcome, SatError> {
    cnf.validate()?;
    if cnf.clauses.is_empty() {
        return Ok(SolveOutcome::Sat {
            assignment: vec![false; cnf.num_vars],
        });
    }
    let total = opts.restarts.max(1);
    let mut results: Vec<Option<Result<AttemptResult, SatError>>> = Vec::new();
    if opts.threads <= 1 || total == 1 {
        for r in 0..total {
            let out = attempt(cnf, opts, attempt_seed(opts.seed, r));
            let decisive = matches!(out, Ok(AttemptResult::Sat(_)) | Err(_));
            results.push(Some(out));
            if decisive {
                break;
            }
        }
    } else {
        let next = AtomicUsize::new(0);
        let stop = AtomicBool::new(false);
        let slots: Vec<Mutex<Option<Result<AttemptResult, SatError>>>> =
            (0..total).map(|_| Mutex::new(None)).collect();
        std::thread::scope(|scope| {
            for _ in 0..opts.threads.min(total) {
                scope.spawn(|| loop {
                    if stop.load(Ordering::Relaxed) {
                        break;
                    }
                    let r = next.fetch_add(1, Ordering::Relaxed);
                    if r >= total {
                        break;
                    }
                    let out = attempt(cnf, opts, attempt_seed(opts.seed, r));
                    if matches!(out, Ok(AttemptResult::Sat(_)) | Err(_)) {
                        stop.store(true, Ordering::Relaxed);
                    }
                    *slots[r].lock().expect("no panics hold this lock") = Some(out);
                });
            }
        });
        for slot in slots {
            results.push(slot.into_inner().expect("scope joined all workers"));
        }
    }

    let mut conflict = None;
    for out in results.into_iter().flatten() {
        match out? {
            AttemptResult::Sat(assignment) => return Ok(SolveOutcome::Sat { assignment }),
            AttemptResult::Conflict(c) => conflict = conflict.or(Some(c)),
            AttemptResult::GaveUp => {}
        }
    }
    Ok(SolveOutcome::Unknown { conflict })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cnf::encode_cnf;
    use crate::sp::{MessageGrid, SpMode, SurveyState};

    fn planted_3sat(n: usize, m: usize, seed: u64) -> (Cnf, Vec<bool>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let hidden: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.5)).collect();
        let mut clauses = Vec::with_capacity(m);
        while clauses.len() < m {
            let mut vars = Vec::new();
            while vars.len() < 3 {
                let v = rng.gen_range(0..n);
                if !vars.contains(&v) {
                    vars.push(v);
                }
            }
            let lits: Vec<Literal> = vars
                .iter()
                .map(|&v| {
                    if rng.gen_bool(0.5) {
                        Literal::pos(v)
                    } else {
                        Literal::neg(v)
                    }
                })
                .collect();
            if lits.iter().any(|l| l.satisfied_by(hidden[l.var])) {
                clauses.push(lits);
            }
        }
        (Cnf::new(n, clauses), hidden)
    }

    #[test]
    fn unit_chain_solves_by_propagation_alone() {
        let cnf = Cnf::new(
            3,
            vec![
                vec![Literal::pos(0)],
                vec![Literal::neg(0), Literal::pos(1)],
                vec![Literal::neg(1), Literal::pos(2)],
            ],
        );
        let out = solve_sat(&cnf, &SatOptions::default()).unwrap();
        assert_eq!(
            out,
            SolveOutcome::Sat {
                assignment: vec![true, true, true]
            }
        );
    }

    #[test]
    fn contradictory_units_name_the_emptied_clause() {
        let cnf = Cnf::new(1, vec![vec![Literal::pos(0)], vec![Literal::neg(0)]]);
        let out = solve_sat(&cnf, &SatOptions::default()).unwrap();
        assert_eq!(out, SolveOutcome::Unknown { conflict: Some(1) });
    }

    #[test]
    fn empty_formula_is_trivially_satisfied() {
        let cnf = Cnf::new(4, vec![]);
        let out = solve_sat(&cnf, &SatOptions::default()).unwrap();
        assert_eq!(
            out,
            SolveOutcome::Sat {
                assignment: vec![false; 4]
            }
        );
    }

    #[test]
    fn planted_instances_solve_and_verify() {
        for seed in 0..5 {
            let (cnf, _) = planted_3sat(12, 36, seed);
            let opts = SatOptions {
                seed,
                ..SatOptions::default()
            };
            match solve_sat(&cnf, &opts).unwrap() {
                SolveOutcome::Sat { assignment } => {
                    assert!(cnf.is_satisfied_by(&assignment), "seed {seed}")
                }
                SolveOutcome::Unknown { .. } => panic!("planted instance unsolved, seed {seed}"),
            }
        }
    }

    #[test]
    fn two_literal_clause_masses_match_the_hand_calculation() {
        let cnf = Cnf::new(
            2,
            vec![
                vec![Literal::pos(0), Literal::pos(1)],
                vec![Literal::pos(0), Literal::neg(1)],
            ],
        );
        let prop = Propagator::new(&cnf);
        let view = View::build(&prop);
        let sp = SemiringSpec::sum_product();
        let mut wp = WpState {
            c2v: view
                .lits
                .iter()
                .map(|l| vec![vec![Value::ratio(1, 3); 3]; l.len()])
                .collect(),
            v2c: view
                .lits
                .iter()
                .map(|l| vec![vec![Value::ratio(1, 4); 4]; l.len()])
                .collect(),
        };
        wp.sweep(&view, &sp, 0.0).unwrap();
        // Hand value: toward x0 in clause 0, the other literal (x1,
        // positive) contributes viol = 1/4, nonff = 3/4, tot = 1, so the
        // unnormalized masses are [1/2, 1/4, 1/4].
        assert_eq!(
            wp.c2v[0][0],
            vec![Value::ratio(1, 2), Value::ratio(1, 4), Value::ratio(1, 4)]
        );
    }

    #[test]
    fn compressed_sweeps_match_generic_surveys_exactly() {
        // Reference: counting surveys on the or-and encoding with the full
        // four-candidate grid. After one pruning sweep from uniform, the
        // generic state is supported on the compressed states; from there
        // both iterations must agree in exact rational arithmetic.
        let (cnf, _) = planted_3sat(6, 8, 42);
        let s = crate::algebra::SemiringSpec::or_and();
        let fg = encode_cnf(&cnf, &s).unwrap();
        let grid = MessageGrid::auto(&fg, &s).unwrap();
        let mut generic = SurveyState::new(&fg, &s, &grid, SpMode::Counting).unwrap();
        generic.step(crate::bp::Schedule::Synchronous, 0.0).unwrap();

        let f = Value::Bool(false);
        let t = Value::Bool(true);
        let idx_ff = grid.index_of(0, &[f.clone(), f.clone()]).unwrap();
        let idx_f1 = grid.index_of(0, &[f.clone(), t.clone()]).unwrap();
        let idx_f0 = grid.index_of(0, &[t.clone(), f.clone()]).unwrap();
        let idx_tt = grid.index_of(0, &[t.clone(), t.clone()]).unwrap();

        let prop = Propagator::new(&cnf);
        let view = View::build(&prop);
        let sp = SemiringSpec::sum_product();
        let edges = generic.edge_index().clone();
        // Factor index == clause index; slot order == sorted scope order.
        let edge_of = |ci: usize, k: usize| -> usize {
            let fidx = view.clauses[ci];
            let var = view.lits[ci][k].var;
            edges.by_factor[fidx]
                .iter()
                .copied()
                .find(|&e| edges.edges[e].0 == var)
                .unwrap()
        };
        let mut wp = WpState {
            c2v: Vec::new(),
            v2c: Vec::new(),
        };
        for (ci, lits) in view.lits.iter().enumerate() {
            let mut row_c = Vec::new();
            let mut row_v = Vec::new();
            for (k, lit) in lits.iter().enumerate() {
                let e = edge_of(ci, k);
                let eta_c = generic.eta_f2v(e);
                let (idx_w, idx_other) = if lit.positive {
                    (idx_f1, idx_f0)
                } else {
                    (idx_f0, idx_f1)
                };
                assert_eq!(
                    eta_c[idx_other],
                    Value::int(0),
                    "wrong-direction warnings vanish after one sweep"
                );
                row_c.push(vec![
                    eta_c[idx_tt].clone(),
                    eta_c[idx_w].clone(),
                    eta_c[idx_ff].clone(),
                ]);
                let eta_v = generic.eta_v2f(e);
                row_v.push(vec![
                    eta_v[idx_tt].clone(),
                    eta_v[idx_f0].clone(),
                    eta_v[idx_f1].clone(),
                    eta_v[idx_ff].clone(),
                ]);
            }
            wp.c2v.push(row_c);
            wp.v2c.push(row_v);
        }

        for sweep in 0..6 {
            generic.step(crate::bp::Schedule::Synchronous, 0.0).unwrap();
            wp.sweep(&view, &sp, 0.0).unwrap();
            for (ci, lits) in view.lits.iter().enumerate() {
                for (k, lit) in lits.iter().enumerate() {
                    let e = edge_of(ci, k);
                    let eta_c = generic.eta_f2v(e);
                    let idx_w = if lit.positive { idx_f1 } else { idx_f0 };
                    assert_eq!(
                        wp.c2v[ci][k],
                        vec![
                            eta_c[idx_tt].clone(),
                            eta_c[idx_w].clone(),
                            eta_c[idx_ff].clone()
                        ],
                        "clause survey diverged at sweep {sweep}"
                    );
                    let eta_v = generic.eta_v2f(e);
                    assert_eq!(
                        wp.v2c[ci][k],
                        vec![
                            eta_v[idx_tt].clone(),
                            eta_v[idx_f0].clone(),
                            eta_v[idx_f1].clone(),
                            eta_v[idx_ff].clone()
                        ],
                        "variable survey diverged at sweep {sweep}"
                    );
                }
            }
        }
    }

    #[test]
    fn walk_finds_models_on_a_small_residual() {
        let (cnf, _) = planted_3sat(8, 20, 7);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let out = walksat(&cnf, &mut rng, 10_000).expect("planted formulas have models");
        assert!(cnf.is_satisfied_by(&out));
    }

    #[test]
    fn thread_count_does_not_change_the_outcome() {
        let (cnf, _) = planted_3sat(14, 40, 3);
        let base = SatOptions {
            seed: 9,
            restarts: 4,
            ..SatOptions::default()
        };
        let seq = solve_sat(&cnf, &base).unwrap();
        let par = solve_sat(
            &cnf,
            &SatOptions {
                threads: 4,
                ..base
            },
        )
        .unwrap();
        assert_eq!(seq, par);
    }

    #[test]
    fn strong_biases_are_clamped_before_walking() {
        // Both clauses force x0; with the walk disabled the solver must
        // get there by decimation.
        let cnf = Cnf::new(
            2,
            vec![
                vec![Literal::pos(0), Literal::pos(1)],
                vec![Literal::pos(0), Literal::neg(1)],
            ],
        );
        let opts = SatOptions {
            walk_flips: 0,
            bias_threshold: 1e-4,
            ..SatOptions::default()
        };
        match solve_sat(&cnf, &opts).unwrap() {
            SolveOutcome::Sat { assignment } => {
                assert!(assignment[0]);
                assert!(cnf.is_satisfied_by(&assignment));
            }
            other => panic!("expected a model, got {other:?}"),
        }
    }
}
