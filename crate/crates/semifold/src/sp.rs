//! Survey propagation: inference over the messages themselves.
//!
//! A survey is a distribution over the candidate messages of one directed
//! edge. Surveys always live in the sum-product semiring, whatever semiring
//! the underlying messages use: counting mode weighs every message
//! configuration equally, weighted mode tilts it by the local reductions of
//! the configuration it came from.
//!
//! Candidate messages come from a [`MessageGrid`]. For semirings whose
//! operations only ever choose among existing values (or-and, xor-and,
//! min-max) the grid is derived automatically from the factor tables; the
//! continuum semirings need an explicit, update-closed grid.

use crate::algebra::{invert, normalize, AlgebraError, OpTag, SemiringSpec};
use crate::bp::{
    damp_vec, finish_update, raw_f2v_from, raw_v2f_from, residual, run_loopy, run_tree, BpError,
    BpReport, EdgeIndex, LoopyOptions, Schedule,
};
use crate::graph::{row_major_strides, Factor, FactorGraph, GraphError};
use crate::value::Value;
use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};
use thiserror::Error;

/// Candidate count cap per variable.
pub const GRID_CAP: usize = 1 << 16;
/// Incoming-tuple cap per directed edge when tabulating updates.
pub const TRANSITION_CAP: u128 = 1 << 22;
/// Configuration cap for exhaustive fixed-point enumeration.
pub const ENUMERATION_CAP: u128 = 1 << 20;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpError {
    #[error("semiring {semiring} has an infinite message space; supply an explicit grid")]
    InfiniteMessageSpace { semiring: String },
    #[error("update for variable {var} left the grid: [{message}]")]
    GridClosureViolation { var: usize, message: String },
    #[error("grid for variable {var} holds {size} candidates, cap {cap}")]
    GridCapExceeded { var: usize, size: u128, cap: usize },
    #[error("edge {edge} has {size} incoming tuples, cap {cap}")]
    TransitionCapExceeded { edge: usize, size: u128, cap: u128 },
    #[error("{size} message configurations exceed the enumeration cap {cap}")]
    EnumerationCapExceeded { size: u128, cap: u128 },
    #[error("weighted surveys need an invertible product expansion, not {semiring}")]
    WeightedUnsupported { semiring: String },
    #[error("grid for variable {var} is empty")]
    EmptyGrid { var: usize },
    #[error("grid candidate for variable {var} has {got} entries, expected {expected}")]
    CandidateShape {
        var: usize,
        expected: usize,
        got: usize,
    },
    #[error(transparent)]
    Bp(#[from] BpError),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Advance a mixed-radix odometer, last digit fastest. Returns false once
/// the cell wraps back to all zeros (or immediately when empty).
fn advance(cell: &mut [usize], dims: &[usize]) -> bool {
    for k in (0..cell.len()).rev() {
        cell[k] += 1;
        if cell[k] < dims[k] {
            return true;
        }
        cell[k] = 0;
    }
    false
}

/// Per-variable candidate message vectors, sorted and indexed.
#[derive(Debug, Clone)]
pub struct MessageGrid {
    candidates: Vec<Vec<Vec<Value>>>,
    index: Vec<HashMap<Vec<Value>, usize>>,
}

impl MessageGrid {
    /// Derive the grid from the factor tables. Only semirings whose both
    /// operations choose among their arguments keep messages inside a
    /// finite set; anything else needs [`MessageGrid::explicit`].
    pub fn auto(fg: &FactorGraph, s: &SemiringSpec) -> Result<Self, SpError> {
        let closed = matches!(s.name, "or-and" | "xor-and" | "min-max");
        if !closed {
            return Err(SpError::InfiniteMessageSpace {
                semiring: s.name.to_string(),
            });
        }
        let mut values: Vec<Value> = vec![s.one_plus.clone(), s.one_times.clone()];
        for f in fg.factors() {
            values.extend(f.table.iter().cloned());
        }
        values.sort_by(|a, b| a.cmp_total(b));
        values.dedup();
        let mut per_var = Vec::with_capacity(fg.num_vars());
        for var in 0..fg.num_vars() {
            let dom = fg.domain(var);
            let size = (values.len() as u128).pow(dom as u32);
            if size > GRID_CAP as u128 {
                return Err(SpError::GridCapExceeded {
                    var,
                    size,
                    cap: GRID_CAP,
                });
            }
            let dims = vec![values.len(); dom];
            let mut cell = vec![0usize; dom];
            let mut cands = Vec::with_capacity(size as usize);
            loop {
                cands.push(cell.iter().map(|&k| values[k].clone()).collect());
                if !advance(&mut cell, &dims) {
                    break;
                }
            }
            per_var.push(cands);
        }
        Self::explicit(fg, per_var)
    }

    /// Adopt explicit candidate lists, one per variable. Lists are sorted
    /// and deduplicated; every candidate must match the variable's domain.
    /// The caller owes closure: every normalized update reachable from the
    /// grid must be in the grid, or later lookups fail.
    pub fn explicit(fg: &FactorGraph, per_var: Vec<Vec<Vec<Value>>>) -> Result<Self, SpError> {
        let mut candidates = Vec::with_capacity(fg.num_vars());
        let mut index = Vec::with_capacity(fg.num_vars());
        for (var, mut cands) in per_var.into_iter().enumerate() {
            let dom = fg.domain(var);
            for c in &cands {
                if c.len() != dom {
                    return Err(SpError::CandidateShape {
                        var,
                        expected: dom,
                        got: c.len(),
                    });
                }
            }
            cands.sort_by(|a, b| cmp_vectors(a, b));
            cands.dedup();
            if cands.is_empty() {
                return Err(SpError::EmptyGrid { var });
            }
            if cands.len() > GRID_CAP {
                return Err(SpError::GridCapExceeded {
                    var,
                    size: cands.len() as u128,
                    cap: GRID_CAP,
                });
            }
            let map: HashMap<Vec<Value>, usize> = cands
                .iter()
                .enumerate()
                .map(|(k, c)| (c.clone(), k))
                .collect();
            candidates.push(cands);
            index.push(map);
        }
        Ok(MessageGrid { candidates, index })
    }

    pub fn size(&self, var: usize) -> usize {
        self.candidates[var].len()
    }

    pub fn candidates(&self, var: usize) -> &[Vec<Value>] {
        &self.candidates[var]
    }

    pub fn index_of(&self, var: usize, message: &[Value]) -> Result<usize, SpError> {
        self.index[var]
            .get(message)
            .copied()
            .ok_or_else(|| SpError::GridClosureViolation {
                var,
                message: message
                    .iter()
                    .map(|v| v.to_string())
                    .collect::<Vec<_>>()
                    .join(", "),
            })
    }
}

fn cmp_vectors(a: &[Value], b: &[Value]) -> Ordering {
    for (x, y) in a.iter().zip(b.iter()) {
        match x.cmp_total(y) {
            Ordering::Equal => continue,
            other => return other,
        }
    }
    a.len().cmp(&b.len())
}

/// One directed edge's update, tabulated over all incoming candidate
/// tuples: `out[flat]` is the resulting candidate index, `weight[flat]`
/// the reduction of the raw composite (weighted mode only).
#[derive(Debug, Clone)]
struct Transition {
    inputs: Vec<usize>,
    dims: Vec<usize>,
    out: Vec<usize>,
    weight: Option<Vec<Value>>,
}

impl Transition {
    fn flat(&self, at: impl Fn(usize) -> usize) -> usize {
        let mut idx = 0;
        for (k, &e) in self.inputs.iter().enumerate() {
            idx = idx * self.dims[k] + at(e);
        }
        idx
    }
}

#[derive(Debug, Clone)]
struct Transitions {
    v2f: Vec<Transition>,
    f2v: Vec<Transition>,
}

fn build_transitions(
    fg: &FactorGraph,
    s: &SemiringSpec,
    grid: &MessageGrid,
    edges: &EdgeIndex,
    weighted: bool,
) -> Result<Transitions, SpError> {
    let mut v2f = Vec::with_capacity(edges.len());
    let mut f2v = Vec::with_capacity(edges.len());
    for e in 0..edges.len() {
        let (var, factor) = edges.edges[e];
        let in_v2f: Vec<usize> = edges.by_var[var]
            .iter()
            .copied()
            .filter(|&d| d != e)
            .collect();
        let in_f2v: Vec<usize> = edges.by_factor[factor]
            .iter()
            .copied()
            .filter(|&d| d != e)
            .collect();
        for (inputs, is_v2f) in [(in_v2f, true), (in_f2v, false)] {
            let dims: Vec<usize> = inputs
                .iter()
                .map(|&d| grid.size(edges.edges[d].0))
                .collect();
            let size: u128 = dims.iter().map(|&d| d as u128).product();
            if size > TRANSITION_CAP {
                return Err(SpError::TransitionCapExceeded {
                    edge: e,
                    size,
                    cap: TRANSITION_CAP,
                });
            }
            let mut out = Vec::with_capacity(size as usize);
            let mut weight = weighted.then(|| Vec::with_capacity(size as usize));
            let mut cell = vec![0usize; inputs.len()];
            loop {
                let incoming: Vec<&[Value]> = inputs
                    .iter()
                    .zip(&cell)
                    .map(|(&d, &c)| grid.candidates(edges.edges[d].0)[c].as_slice())
                    .collect();
                let raw = if is_v2f {
                    raw_v2f_from(s, fg.domain(var), &incoming)?
                } else {
                    raw_f2v_from(s, fg, factor, var, &incoming)?
                };
                if let Some(w) = weight.as_mut() {
                    w.push(s.plus_fold(raw.iter())?);
                }
                let done = finish_update(s, raw)?;
                out.push(grid.index_of(var, &done)?);
                if !advance(&mut cell, &dims) {
                    break;
                }
            }
            let t = Transition {
                inputs,
                dims,
                out,
                weight,
            };
            if is_v2f {
                v2f.push(t);
            } else {
                f2v.push(t);
            }
        }
    }
    Ok(Transitions { v2f, f2v })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpMode {
    /// Every message configuration counts once.
    Counting,
    /// Configurations are tilted by their local reductions; needs the
    /// message semiring's expansion to be an invertible product.
    Weighted,
}

fn ensure_mode(s: &SemiringSpec, mode: SpMode) -> Result<(), SpError> {
    if mode == SpMode::Weighted && !(s.expand == OpTag::Prod && s.invertible) {
        return Err(SpError::WeightedUnsupported {
            semiring: s.name.to_string(),
        });
    }
    Ok(())
}

/// Surveys for every directed edge: `eta_v2f[e]` and `eta_f2v[e]` are
/// sum-product distributions over the grid candidates of the edge's
/// variable.
#[derive(Debug, Clone)]
pub struct SurveyState<'g> {
    fg: &'g FactorGraph,
    message_semiring: SemiringSpec,
    survey_semiring: SemiringSpec,
    grid: &'g MessageGrid,
    mode: SpMode,
    edges: EdgeIndex,
    trans: Transitions,
    eta_v2f: Vec<Vec<Value>>,
    eta_f2v: Vec<Vec<Value>>,
}

impl<'g> SurveyState<'g> {
    pub fn new(
        fg: &'g FactorGraph,
        s: &SemiringSpec,
        grid: &'g MessageGrid,
        mode: SpMode,
    ) -> Result<Self, SpError> {
        ensure_mode(s, mode)?;
        let edges = EdgeIndex::build(fg);
        let trans = build_transitions(fg, s, grid, &edges, mode == SpMode::Weighted)?;
        let uniform = |var: usize| -> Vec<Value> {
            let g = grid.size(var);
            vec![Value::ratio(1, g as i64); g]
        };
        let eta: Vec<Vec<Value>> = edges.edges.iter().map(|&(var, _)| uniform(var)).collect();
        Ok(SurveyState {
            fg,
            message_semiring: s.clone(),
            survey_semiring: SemiringSpec::sum_product(),
            grid,
            mode,
            edges,
            trans,
            eta_v2f: eta.clone(),
            eta_f2v: eta,
        })
    }

    pub fn graph(&self) -> &'g FactorGraph {
        self.fg
    }

    pub fn grid(&self) -> &'g MessageGrid {
        self.grid
    }

    pub fn mode(&self) -> SpMode {
        self.mode
    }

    pub fn edge_index(&self) -> &EdgeIndex {
        &self.edges
    }

    pub fn eta_v2f(&self, edge: usize) -> &[Value] {
        &self.eta_v2f[edge]
    }

    pub fn eta_f2v(&self, edge: usize) -> &[Value] {
        &self.eta_f2v[edge]
    }

    fn eta_update(&self, t: &Transition, from_v2f: bool, var: usize) -> Result<Vec<Value>, SpError> {
        let sp = &self.survey_semiring;
        let mut out = vec![sp.one_plus.clone(); self.grid.size(var)];
        let mut cell = vec![0usize; t.inputs.len()];
        let mut flat = 0usize;
        loop {
            let mut w = sp.one_times.clone();
            for (k, &d) in t.inputs.iter().enumerate() {
                let eta = if from_v2f {
                    &self.eta_v2f[d]
                } else {
                    &self.eta_f2v[d]
                };
                w = sp.times(&w, &eta[cell[k]])?;
            }
            if let Some(weights) = &t.weight {
                w = sp.times(&w, &weights[flat])?;
            }
            out[t.out[flat]] = sp.plus(&out[t.out[flat]], &w)?;
            flat += 1;
            if !advance(&mut cell, &t.dims) {
                break;
            }
        }
        Ok(normalize(sp, &out)?.values)
    }

    /// Survey update for the variable-to-factor slot of `edge`: push the
    /// product of the other slots' factor-to-variable surveys through the
    /// message update.
    pub fn update_eta_v2f(&self, edge: usize) -> Result<Vec<Value>, SpError> {
        self.eta_update(&self.trans.v2f[edge], false, self.edges.edges[edge].0)
    }

    /// Survey update for the factor-to-variable slot of `edge`.
    pub fn update_eta_f2v(&self, edge: usize) -> Result<Vec<Value>, SpError> {
        self.eta_update(&self.trans.f2v[edge], true, self.edges.edges[edge].0)
    }

    /// Replace one survey (e.g. to seed a run from a known state).
    pub fn set_eta_v2f(&mut self, edge: usize, eta: Vec<Value>) -> Result<(), SpError> {
        let var = self.edges.edges[edge].0;
        if eta.len() != self.grid.size(var) {
            return Err(SpError::CandidateShape {
                var,
                expected: self.grid.size(var),
                got: eta.len(),
            });
        }
        self.eta_v2f[edge] = eta;
        Ok(())
    }

    pub fn set_eta_f2v(&mut self, edge: usize, eta: Vec<Value>) -> Result<(), SpError> {
        let var = self.edges.edges[edge].0;
        if eta.len() != self.grid.size(var) {
            return Err(SpError::CandidateShape {
                var,
                expected: self.grid.size(var),
                got: eta.len(),
            });
        }
        self.eta_f2v[edge] = eta;
        Ok(())
    }

    /// One full sweep over every survey; returns the worst residual.
    pub fn step(&mut self, schedule: Schedule, damping: f64) -> Result<f64, SpError> {
        let sp = self.survey_semiring.clone();
        let ne = self.edges.len();
        let mut sweep = 0.0_f64;
        match schedule {
            Schedule::Synchronous => {
                let mut new_v2f = Vec::with_capacity(ne);
                let mut new_f2v = Vec::with_capacity(ne);
                for e in 0..ne {
                    new_v2f.push(damp_vec(
                        &sp,
                        &self.eta_v2f[e],
                        self.update_eta_v2f(e)?,
                        damping,
                    )?);
                    new_f2v.push(damp_vec(
                        &sp,
                        &self.eta_f2v[e],
                        self.update_eta_f2v(e)?,
                        damping,
                    )?);
                }
                for e in 0..ne {
                    sweep = sweep
                        .max(residual(&new_v2f[e], &self.eta_v2f[e]))
                        .max(residual(&new_f2v[e], &self.eta_f2v[e]));
                }
                self.eta_v2f = new_v2f;
                self.eta_f2v = new_f2v;
            }
            Schedule::Sequential => {
                for e in 0..ne {
                    let new = damp_vec(&sp, &self.eta_v2f[e], self.update_eta_v2f(e)?, damping)?;
                    sweep = sweep.max(residual(&new, &self.eta_v2f[e]));
                    self.eta_v2f[e] = new;
                }
                for e in 0..ne {
                    let new = damp_vec(&sp, &self.eta_f2v[e], self.update_eta_f2v(e)?, damping)?;
                    sweep = sweep.max(residual(&new, &self.eta_f2v[e]));
                    self.eta_f2v[e] = new;
                }
            }
        }
        Ok(sweep)
    }

    pub fn check_fixed_point(&self, tol: Option<f64>) -> Result<(bool, f64), SpError> {
        let mut worst = 0.0_f64;
        for e in 0..self.edges.len() {
            worst = worst.max(residual(&self.update_eta_v2f(e)?, &self.eta_v2f[e]));
            worst = worst.max(residual(&self.update_eta_f2v(e)?, &self.eta_f2v[e]));
        }
        let ok = match tol {
            None => worst == 0.0,
            Some(t) => worst <= t,
        };
        Ok((ok, worst))
    }

    /// Distribution over the variable's belief vectors: enumerate incoming
    /// survey tuples, compute each tuple's belief, and pool the survey mass
    /// by belief (weighted mode also tilts by the belief's reduction).
    /// Returns `(belief, mass)` pairs, masses normalized, beliefs in total
    /// value order.
    pub fn marginal_over_marginals(
        &self,
        var: usize,
    ) -> Result<Vec<(Vec<Value>, Value)>, SpError> {
        let sp = &self.survey_semiring;
        let s = &self.message_semiring;
        let incoming_edges = &self.edges.by_var[var];
        let dims: Vec<usize> = vec![self.grid.size(var); incoming_edges.len()];
        let mut groups: BTreeMap<MsgKey, Value> = BTreeMap::new();
        let mut cell = vec![0usize; incoming_edges.len()];
        loop {
            let mut w = sp.one_times.clone();
            for (k, &e) in incoming_edges.iter().enumerate() {
                w = sp.times(&w, &self.eta_f2v[e][cell[k]])?;
            }
            let incoming: Vec<&[Value]> = cell
                .iter()
                .map(|&c| self.grid.candidates(var)[c].as_slice())
                .collect();
            let raw = raw_v2f_from(s, self.fg.domain(var), &incoming)?;
            if self.mode == SpMode::Weighted {
                w = sp.times(&w, &s.plus_fold(raw.iter())?)?;
            }
            let belief = finish_update(s, raw)?;
            let slot = groups
                .entry(MsgKey(belief))
                .or_insert_with(|| sp.one_plus.clone());
            *slot = sp.plus(slot, &w)?;
            if !advance(&mut cell, &dims) {
                break;
            }
        }
        let masses: Vec<Value> = groups.values().cloned().collect();
        let normalized = normalize(sp, &masses)?.values;
        Ok(groups
            .into_keys()
            .map(|k| k.0)
            .zip(normalized)
            .collect())
    }
}

#[derive(PartialEq, Eq)]
struct MsgKey(Vec<Value>);

impl Ord for MsgKey {
    fn cmp(&self, other: &Self) -> Ordering {
        cmp_vectors(&self.0, &other.0)
    }
}

impl PartialOrd for MsgKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Iterate surveys to a fixed point. Initialization is uniform; damping and
/// scheduling follow the options (randomized init is ignored here since
/// surveys always start from the flat distribution).
pub fn run_sp<'g>(
    fg: &'g FactorGraph,
    s: &SemiringSpec,
    grid: &'g MessageGrid,
    mode: SpMode,
    opts: &LoopyOptions,
) -> Result<(SurveyState<'g>, BpReport), SpError> {
    let start = std::time::Instant::now();
    let mut state = SurveyState::new(fg, s, grid, mode)?;
    let mut report = BpReport {
        converged: state.edges.is_empty(),
        iterations: 0,
        max_residual: 0.0,
        wall_time: std::time::Duration::ZERO,
    };
    for iter in 1..=opts.max_iter {
        let sweep = state.step(opts.schedule, opts.damping)?;
        report.iterations = iter;
        report.max_residual = sweep;
        if sweep <= opts.tol {
            report.converged = true;
            break;
        }
    }
    report.wall_time = start.elapsed();
    Ok((state, report))
}

/// One in-grid solution of all message update equations, as candidate
/// indices per edge and direction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridFixedPoint {
    pub v2f: Vec<usize>,
    pub f2v: Vec<usize>,
}

impl GridFixedPoint {
    /// Materialize the message vectors behind the indices.
    pub fn messages(
        &self,
        fg: &FactorGraph,
        grid: &MessageGrid,
    ) -> (Vec<Vec<Value>>, Vec<Vec<Value>>) {
        let edges = EdgeIndex::build(fg);
        let pick = |idx: &[usize]| -> Vec<Vec<Value>> {
            idx.iter()
                .zip(&edges.edges)
                .map(|(&c, &(var, _))| grid.candidates(var)[c].clone())
                .collect()
        };
        (pick(&self.v2f), pick(&self.f2v))
    }
}

/// Exhaustively check every grid configuration of all directed messages
/// against the update equations. The configuration space is the product of
/// `g²` per edge; anything beyond `cap` (default [`ENUMERATION_CAP`]) is
/// refused rather than attempted.
pub fn enumerate_bp_fixed_points(
    fg: &FactorGraph,
    s: &SemiringSpec,
    grid: &MessageGrid,
    cap: Option<u128>,
) -> Result<Vec<GridFixedPoint>, SpError> {
    let cap = cap.unwrap_or(ENUMERATION_CAP);
    let edges = EdgeIndex::build(fg);
    let trans = build_transitions(fg, s, grid, &edges, false)?;
    let ne = edges.len();
    let mut size: u128 = 1;
    for e in 0..ne {
        let g = grid.size(edges.edges[e].0) as u128;
        size = size.saturating_mul(g).saturating_mul(g);
    }
    if size > cap {
        return Err(SpError::EnumerationCapExceeded { size, cap });
    }
    // Slots: v2f indices first, then f2v indices.
    let mut dims = Vec::with_capacity(2 * ne);
    for e in 0..ne {
        dims.push(grid.size(edges.edges[e].0));
    }
    dims.extend_from_slice(&dims.clone());
    let mut found = Vec::new();
    let mut cell = vec![0usize; 2 * ne];
    loop {
        let ok = (0..ne).all(|e| {
            cell[e] == trans.v2f[e].out[trans.v2f[e].flat(|d| cell[ne + d])]
                && cell[ne + e] == trans.f2v[e].out[trans.f2v[e].flat(|d| cell[d])]
        });
        if ok {
            found.push(GridFixedPoint {
                v2f: cell[..ne].to_vec(),
                f2v: cell[ne..].to_vec(),
            });
        }
        if !advance(&mut cell, &dims) {
            break;
        }
    }
    Ok(found)
}

/// Empirical survey per directed edge from an enumerated fixed-point set:
/// each fixed point counts once.
pub fn fixed_point_frequencies(
    fg: &FactorGraph,
    grid: &MessageGrid,
    points: &[GridFixedPoint],
) -> (Vec<Vec<Value>>, Vec<Vec<Value>>) {
    let edges = EdgeIndex::build(fg);
    let total = points.len() as i64;
    let tally = |pick: fn(&GridFixedPoint) -> &Vec<usize>| -> Vec<Vec<Value>> {
        (0..edges.len())
            .map(|e| {
                let g = grid.size(edges.edges[e].0);
                let mut counts = vec![0i64; g];
                for p in points {
                    counts[pick(p)[e]] += 1;
                }
                counts
                    .into_iter()
                    .map(|c| {
                        if total == 0 {
                            Value::int(0)
                        } else {
                            Value::ratio(c, total)
                        }
                    })
                    .collect()
            })
            .collect()
    };
    (tally(|p| &p.v2f), tally(|p| &p.f2v))
}

/// Result of integrating over message configurations.
#[derive(Debug, Clone)]
pub struct SpIntegral {
    pub value: Value,
    /// Exact when the meta-graph was a tree; a loopy estimate otherwise.
    pub exact: bool,
    pub report: Option<BpReport>,
}

/// Integrate the survey model: count the in-grid fixed points, or in
/// weighted mode accumulate each fixed point's decomposition weight.
///
/// The integral runs as ordinary sum-product inference on a materialized
/// meta-graph: one variable per original edge ranging over candidate pairs
/// `(v2f, f2v)`, one consistency factor per original variable (its v2f
/// update equations) and per original factor (its f2v update equations,
/// with the pair-belief corrections folded in when weighted). The
/// meta-graph of a tree is again a tree, so the answer there is exact.
pub fn sp_integral(
    fg: &FactorGraph,
    s: &SemiringSpec,
    grid: &MessageGrid,
    mode: SpMode,
    opts: &LoopyOptions,
) -> Result<SpIntegral, SpError> {
    ensure_mode(s, mode)?;
    let edges = EdgeIndex::build(fg);
    let weighted = mode == SpMode::Weighted;
    if edges.is_empty() {
        // No messages: the single empty configuration, weighted by the
        // isolated variables' uniform beliefs.
        let mut value = Value::int(1);
        if weighted {
            for var in 0..fg.num_vars() {
                let unit = vec![s.one_times.clone(); fg.domain(var)];
                value = value
                    .mul(&s.plus_fold(unit.iter())?)
                    .map_err(AlgebraError::from)?;
            }
        }
        return Ok(SpIntegral {
            value,
            exact: true,
            report: None,
        });
    }
    let trans = build_transitions(fg, s, grid, &edges, false)?;
    let sp = SemiringSpec::sum_product();

    let pair_dom = |e: usize| -> usize {
        let g = grid.size(edges.edges[e].0);
        g * g
    };
    let split = |e: usize, pair: usize| -> (usize, usize) {
        let g = grid.size(edges.edges[e].0);
        (pair / g, pair % g)
    };

    let mut meta_factors: Vec<Factor> = Vec::new();
    // Consistency of every v2f update around each original variable.
    for var in 0..fg.num_vars() {
        let scope: Vec<usize> = edges.by_var[var].clone();
        if scope.is_empty() {
            continue;
        }
        let dims: Vec<usize> = scope.iter().map(|&e| pair_dom(e)).collect();
        let size: usize = dims.iter().product();
        let mut table = Vec::with_capacity(size);
        let mut cell = vec![0usize; scope.len()];
        loop {
            let mut a = vec![0usize; edges.len()];
            let mut b = vec![0usize; edges.len()];
            for (k, &e) in scope.iter().enumerate() {
                let (ae, be) = split(e, cell[k]);
                a[e] = ae;
                b[e] = be;
            }
            let consistent = scope
                .iter()
                .all(|&e| a[e] == trans.v2f[e].out[trans.v2f[e].flat(|d| b[d])]);
            let mut v = if consistent {
                Value::int(1)
            } else {
                Value::int(0)
            };
            if consistent && weighted {
                let incoming: Vec<&[Value]> = scope
                    .iter()
                    .map(|&e| grid.candidates(var)[b[e]].as_slice())
                    .collect();
                let raw = raw_v2f_from(s, fg.domain(var), &incoming)?;
                v = sp.times(&v, &s.plus_fold(raw.iter())?)?;
            }
            table.push(v);
            if !advance(&mut cell, &dims) {
                break;
            }
        }
        meta_factors.push(Factor::new(scope, table));
    }
    // Consistency of every f2v update around each original factor, with
    // the weighted pair-belief inverses folded in (each edge belongs to
    // exactly one factor, so nothing is double counted).
    for fidx in 0..fg.num_factors() {
        let scope: Vec<usize> = edges.by_factor[fidx].clone();
        let dims: Vec<usize> = scope.iter().map(|&e| pair_dom(e)).collect();
        let size: usize = dims.iter().product();
        let mut table = Vec::with_capacity(size);
        let mut cell = vec![0usize; scope.len()];
        loop {
            let mut a = vec![0usize; edges.len()];
            let mut b = vec![0usize; edges.len()];
            for (k, &e) in scope.iter().enumerate() {
                let (ae, be) = split(e, cell[k]);
                a[e] = ae;
                b[e] = be;
            }
            let consistent = scope
                .iter()
                .all(|&e| b[e] == trans.f2v[e].out[trans.f2v[e].flat(|d| a[d])]);
            let mut v = if consistent {
                Value::int(1)
            } else {
                Value::int(0)
            };
            if consistent && weighted {
                v = sp.times(&v, &factor_belief_reduce(s, fg, fidx, &edges, grid, &a)?)?;
                for &e in &scope {
                    let var = edges.edges[e].0;
                    let pair: Result<Vec<Value>, AlgebraError> = grid.candidates(var)[a[e]]
                        .iter()
                        .zip(&grid.candidates(var)[b[e]])
                        .map(|(x, y)| s.times(x, y))
                        .collect();
                    let belief = s.plus_fold(pair?.iter())?;
                    v = sp.times(&v, &invert(&sp, &belief)?)?;
                }
            }
            table.push(v);
            if !advance(&mut cell, &dims) {
                break;
            }
        }
        meta_factors.push(Factor::new(scope, table));
    }

    let domains: Vec<usize> = (0..edges.len()).map(pair_dom).collect();
    let meta = FactorGraph::build(domains, meta_factors)?;

    let mut correction = Value::int(1);
    if weighted {
        for var in 0..fg.num_vars() {
            if edges.by_var[var].is_empty() {
                let unit = vec![s.one_times.clone(); fg.domain(var)];
                correction = sp.times(&correction, &s.plus_fold(unit.iter())?)?;
            }
        }
    }

    if meta.is_tree() {
        let state = run_tree(&meta, &sp)?;
        let value = sp.times(&state.integral_decomposition()?, &correction)?;
        Ok(SpIntegral {
            value,
            exact: true,
            report: None,
        })
    } else {
        // Loopy meta-graph: estimate in floating point.
        let float_factors: Vec<Factor> = meta
            .factors()
            .iter()
            .map(|f| {
                Factor::new(
                    f.scope.clone(),
                    f.table.iter().map(|v| v.to_float_backend()).collect(),
                )
            })
            .collect();
        let metaf = FactorGraph::build(meta.domains().to_vec(), float_factors)?;
        let (state, report) = run_loopy(&metaf, &sp, opts)?;
        let value = sp.times(&state.integral_decomposition()?, &correction.to_float_backend())?;
        Ok(SpIntegral {
            value,
            exact: false,
            report: Some(report),
        })
    }
}

fn factor_belief_reduce(
    s: &SemiringSpec,
    fg: &FactorGraph,
    fidx: usize,
    edges: &EdgeIndex,
    grid: &MessageGrid,
    a: &[usize],
) -> Result<Value, SpError> {
    let f = fg.factor(fidx)?;
    let strides = row_major_strides(&f.scope, fg.domains());
    let mut acc = s.one_plus.clone();
    let mut cell = vec![0usize; f.scope.len()];
    let dims: Vec<usize> = f.scope.iter().map(|&v| fg.domain(v)).collect();
    loop {
        let mut idx = 0;
        for (k, &x) in cell.iter().enumerate() {
            idx += x * strides[k];
        }
        let mut term = f.table[idx].clone();
        for (k, &x) in cell.iter().enumerate() {
            let e = edges.by_factor[fidx][k];
            let var = edges.edges[e].0;
            term = s.times(&term, &grid.candidates(var)[a[e]][x])?;
        }
        acc = s.plus(&acc, &term)?;
        if !advance(&mut cell, &dims) {
            break;
        }
    }
    Ok(acc)
}

/// Split a normalized belief distribution over binary or-and beliefs into
/// decimation weights: mass on "only true extends", "only false extends",
/// "both extend", and "neither extends" (a contradiction).
#[derive(Debug, Clone)]
pub struct OrAndBias {
    pub w_plus: Value,
    pub w_minus: Value,
    pub w_free: Value,
    pub contradiction: Value,
}

impl OrAndBias {
    /// Net preference toward true, as a float in [-1, 1].
    pub fn lean(&self) -> f64 {
        let p = self.w_plus.to_f64().unwrap_or(0.0);
        let m = self.w_minus.to_f64().unwrap_or(0.0);
        p - m
    }
}

pub fn or_and_bias(groups: &[(Vec<Value>, Value)]) -> Result<OrAndBias, SpError> {
    let sp = SemiringSpec::sum_product();
    let mut bias = OrAndBias {
        w_plus: Value::int(0),
        w_minus: Value::int(0),
        w_free: Value::int(0),
        contradiction: Value::int(0),
    };
    for (belief, mass) in groups {
        let t0 = belief
            .first()
            .map(|v| v.numeric_eq(&Value::Bool(true)))
            .unwrap_or(false);
        let t1 = belief
            .get(1)
            .map(|v| v.numeric_eq(&Value::Bool(true)))
            .unwrap_or(false);
        let slot = match (t0, t1) {
            (true, true) => &mut bias.w_free,
            (false, true) => &mut bias.w_plus,
            (true, false) => &mut bias.w_minus,
            (false, false) => &mut bias.contradiction,
        };
        *slot = sp.plus(slot, mass)?;
    }
    Ok(bias)
}
