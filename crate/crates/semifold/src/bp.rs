//! Belief propagation over an arbitrary bundled semiring.
//!
//! Messages live on the edges of the bipartite variable/factor graph, one
//! vector over the variable's domain per direction. Updates are the usual
//! ones (a variable forwards the expansion of its other incoming messages,
//! a factor marginalizes its table against its other incoming messages)
//! with normalization applied whenever the semiring's expansion is
//! invertible. On trees a two-pass sweep is exact; on loopy graphs the
//! iteration is damped, scheduled, and seeded explicitly so runs reproduce.

use crate::algebra::{invert, normalize, AlgebraError, SemiringSpec};
use crate::exact::MarginalTable;
use crate::graph::{row_major_strides, FactorGraph, GraphError};
use crate::value::Value;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::time::{Duration, Instant};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BpError {
    #[error("graph is not a tree")]
    NotATree,
    #[error("no edge joins variable {var} and factor {factor}")]
    EdgeNotFound { var: usize, factor: usize },
    #[error("message vector for edge {edge} has {got} entries, expected {expected}")]
    MessageShape {
        edge: usize,
        expected: usize,
        got: usize,
    },
    #[error("region is empty or repeats variables")]
    BadRegion,
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Edges of the bipartite graph, indexed densely. Edge ids are assigned
/// factor-major in scope order, so both `by_var` and `by_factor` lists are
/// ascending.
#[derive(Debug, Clone)]
pub struct EdgeIndex {
    pub edges: Vec<(usize, usize)>,
    pub by_var: Vec<Vec<usize>>,
    pub by_factor: Vec<Vec<usize>>,
}

impl EdgeIndex {
    pub fn build(fg: &FactorGraph) -> Self {
        let mut edges = Vec::new();
        let mut by_var = vec![Vec::new(); fg.num_vars()];
        let mut by_factor = Vec::with_capacity(fg.num_factors());
        for (fidx, f) in fg.factors().iter().enumerate() {
            let mut ids = Vec::with_capacity(f.scope.len());
            for &v in &f.scope {
                let id = edges.len();
                edges.push((v, fidx));
                by_var[v].push(id);
                ids.push(id);
            }
            by_factor.push(ids);
        }
        EdgeIndex {
            edges,
            by_var,
            by_factor,
        }
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn id(&self, var: usize, factor: usize) -> Result<usize, BpError> {
        self.by_var
            .get(var)
            .and_then(|ids| ids.iter().find(|&&e| self.edges[e].1 == factor))
            .copied()
            .ok_or(BpError::EdgeNotFound { var, factor })
    }
}

/// Raw variable-to-factor update: the expansion of the incoming vectors,
/// `1⊗` everywhere when there are none.
pub fn raw_v2f_from(
    s: &SemiringSpec,
    dom: usize,
    incoming: &[&[Value]],
) -> Result<Vec<Value>, BpError> {
    let mut out = vec![s.one_times.clone(); dom];
    for msg in incoming {
        for (slot, v) in out.iter_mut().zip(msg.iter()) {
            *slot = s.times(slot, v)?;
        }
    }
    Ok(out)
}

/// Raw factor-to-variable update: marginalize the factor table against the
/// incoming vectors of every other scope variable. `incoming` is aligned
/// with the factor's scope minus `target`, in scope order.
pub fn raw_f2v_from(
    s: &SemiringSpec,
    fg: &FactorGraph,
    fidx: usize,
    target: usize,
    incoming: &[&[Value]],
) -> Result<Vec<Value>, BpError> {
    let f = fg.factor(fidx)?;
    let target_pos = f
        .scope
        .iter()
        .position(|&v| v == target)
        .ok_or(BpError::EdgeNotFound {
            var: target,
            factor: fidx,
        })?;
    let mut out = vec![s.one_plus.clone(); fg.domain(target)];
    let strides = row_major_strides(&f.scope, fg.domains());
    let mut cell = vec![0usize; f.scope.len()];
    loop {
        let mut idx = 0;
        for (k, &x) in cell.iter().enumerate() {
            idx += x * strides[k];
        }
        let mut term = f.table[idx].clone();
        let mut in_k = 0;
        for (k, &x) in cell.iter().enumerate() {
            if k != target_pos {
                term = s.times(&term, &incoming[in_k][x])?;
                in_k += 1;
            }
        }
        out[cell[target_pos]] = s.plus(&out[cell[target_pos]], &term)?;
        // Odometer over the scope, last fastest.
        let mut k = cell.len();
        loop {
            k -= 1;
            cell[k] += 1;
            if cell[k] < fg.domain(f.scope[k]) {
                break;
            }
            cell[k] = 0;
            if k == 0 {
                k = usize::MAX;
                break;
            }
        }
        if k == usize::MAX {
            break;
        }
    }
    Ok(out)
}

/// Normalize an update when the semiring allows it; raw otherwise.
pub fn finish_update(s: &SemiringSpec, raw: Vec<Value>) -> Result<Vec<Value>, BpError> {
    Ok(normalize(s, &raw)?.values)
}

/// Initialization for iterative schedules.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Init {
    /// Normalized all-`1⊗` vectors (raw `1⊗` when not invertible).
    #[default]
    Uniform,
    /// Seeded random positive vectors, normalized; falls back to uniform for
    /// semirings without normalization.
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Schedule {
    /// All updates computed from the previous sweep's messages.
    #[default]
    Synchronous,
    /// In-place updates in fixed edge order within each sweep.
    Sequential,
}

#[derive(Debug, Clone)]
pub struct LoopyOptions {
    pub max_iter: usize,
    pub tol: f64,
    /// Weight on the old message in `λ·old + (1−λ)·new`; ignored by
    /// semirings where the blend has no meaning (booleans, min-max).
    pub damping: f64,
    pub schedule: Schedule,
    pub init: Init,
    pub seed: u64,
}

impl Default for LoopyOptions {
    fn default() -> Self {
        LoopyOptions {
            max_iter: 200,
            tol: 1e-8,
            damping: 0.0,
            schedule: Schedule::default(),
            init: Init::default(),
            seed: 0,
        }
    }
}

/// Outcome of an iterative run.
#[derive(Debug, Clone, Serialize)]
pub struct BpReport {
    pub converged: bool,
    pub iterations: usize,
    pub max_residual: f64,
    #[serde(skip)]
    pub wall_time: Duration,
}

/// Message state: one vector per direction per edge.
#[derive(Debug, Clone)]
pub struct MessageState<'g> {
    fg: &'g FactorGraph,
    semiring: SemiringSpec,
    edges: EdgeIndex,
    v2f: Vec<Vec<Value>>,
    f2v: Vec<Vec<Value>>,
}

impl<'g> MessageState<'g> {
    pub fn new_uniform(fg: &'g FactorGraph, s: &SemiringSpec) -> Result<Self, BpError> {
        let edges = EdgeIndex::build(fg);
        let mut v2f = Vec::with_capacity(edges.len());
        let mut f2v = Vec::with_capacity(edges.len());
        for &(var, _) in &edges.edges {
            let flat = vec![s.one_times.clone(); fg.domain(var)];
            v2f.push(finish_update(s, flat.clone())?);
            f2v.push(finish_update(s, flat)?);
        }
        Ok(MessageState {
            fg,
            semiring: s.clone(),
            edges,
            v2f,
            f2v,
        })
    }

    pub fn new_random(fg: &'g FactorGraph, s: &SemiringSpec, seed: u64) -> Result<Self, BpError> {
        if !s.invertible {
            return Self::new_uniform(fg, s);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let edges = EdgeIndex::build(fg);
        let mut draw = |dom: usize| -> Result<Vec<Value>, BpError> {
            let raw: Vec<Value> = (0..dom)
                .map(|_| Value::ratio(rng.gen_range(1..=16), 16))
                .collect();
            finish_update(s, raw)
        };
        let mut v2f = Vec::with_capacity(edges.len());
        let mut f2v = Vec::with_capacity(edges.len());
        for &(var, _) in &edges.edges {
            v2f.push(draw(fg.domain(var))?);
            f2v.push(draw(fg.domain(var))?);
        }
        Ok(MessageState {
            fg,
            semiring: s.clone(),
            edges,
            v2f,
            f2v,
        })
    }

    /// Adopt explicit message vectors (e.g. a candidate fixed point).
    pub fn from_messages(
        fg: &'g FactorGraph,
        s: &SemiringSpec,
        v2f: Vec<Vec<Value>>,
        f2v: Vec<Vec<Value>>,
    ) -> Result<Self, BpError> {
        let edges = EdgeIndex::build(fg);
        for (name, msgs) in [("v2f", &v2f), ("f2v", &f2v)] {
            if msgs.len() != edges.len() {
                return Err(BpError::MessageShape {
                    edge: usize::MAX,
                    expected: edges.len(),
                    got: msgs.len(),
                });
            }
            for (e, m) in msgs.iter().enumerate() {
                let dom = fg.domain(edges.edges[e].0);
                if m.len() != dom {
                    let _ = name;
                    return Err(BpError::MessageShape {
                        edge: e,
                        expected: dom,
                        got: m.len(),
                    });
                }
            }
        }
        Ok(MessageState {
            fg,
            semiring: s.clone(),
            edges,
            v2f,
            f2v,
        })
    }

    pub fn graph(&self) -> &'g FactorGraph {
        self.fg
    }

    pub fn semiring(&self) -> &SemiringSpec {
        &self.semiring
    }

    pub fn edge_index(&self) -> &EdgeIndex {
        &self.edges
    }

    pub fn v2f_message(&self, edge: usize) -> &[Value] {
        &self.v2f[edge]
    }

    pub fn f2v_message(&self, edge: usize) -> &[Value] {
        &self.f2v[edge]
    }

    /// Raw composite `⊗_{J∈∂i∖I} μ_{J→i}`.
    pub fn raw_v2f(&self, edge: usize) -> Result<Vec<Value>, BpError> {
        let (var, factor) = self.edges.edges[edge];
        let incoming: Vec<&[Value]> = self.edges.by_var[var]
            .iter()
            .filter(|&&e| self.edges.edges[e].1 != factor)
            .map(|&e| self.f2v[e].as_slice())
            .collect();
        raw_v2f_from(&self.semiring, self.fg.domain(var), &incoming)
    }

    /// Raw composite `⊕_{x_{∂I∖i}} f_I ⊗ Π_{j≠i} μ_{j→I}`.
    pub fn raw_f2v(&self, edge: usize) -> Result<Vec<Value>, BpError> {
        let (var, factor) = self.edges.edges[edge];
        let incoming: Vec<&[Value]> = self.edges.by_factor[factor]
            .iter()
            .filter(|&&e| self.edges.edges[e].0 != var)
            .map(|&e| self.v2f[e].as_slice())
            .collect();
        raw_f2v_from(&self.semiring, self.fg, factor, var, &incoming)
    }

    /// Normalized variable-to-factor update.
    pub fn update_v2f(&self, edge: usize) -> Result<Vec<Value>, BpError> {
        finish_update(&self.semiring, self.raw_v2f(edge)?)
    }

    /// Normalized factor-to-variable update.
    pub fn update_f2v(&self, edge: usize) -> Result<Vec<Value>, BpError> {
        finish_update(&self.semiring, self.raw_f2v(edge)?)
    }

    /// Variable belief `p̂(x_i) ∝ ⊗ incoming`, normalized when possible.
    pub fn marginal_variable(&self, var: usize) -> Result<Vec<Value>, BpError> {
        let incoming: Vec<&[Value]> = self.edges.by_var[var]
            .iter()
            .map(|&e| self.f2v[e].as_slice())
            .collect();
        let raw = raw_v2f_from(&self.semiring, self.fg.domain(var), &incoming)?;
        finish_update(&self.semiring, raw)
    }

    /// Factor belief `p̂(x_∂I) ∝ f_I ⊗ Π μ_{i→I}`, in the factor's table
    /// order, normalized when possible.
    pub fn marginal_factor(&self, fidx: usize) -> Result<Vec<Value>, BpError> {
        let f = self.fg.factor(fidx)?;
        let strides = row_major_strides(&f.scope, self.fg.domains());
        let mut out = Vec::with_capacity(f.table.len());
        let mut cell = vec![0usize; f.scope.len()];
        loop {
            let mut idx = 0;
            for (k, &x) in cell.iter().enumerate() {
                idx += x * strides[k];
            }
            let mut term = f.table[idx].clone();
            for (k, &x) in cell.iter().enumerate() {
                let e = self.edges.by_factor[fidx][k];
                term = self.semiring.times(&term, &self.v2f[e][x])?;
            }
            out.push(term);
            let mut k = cell.len();
            loop {
                k -= 1;
                cell[k] += 1;
                if cell[k] < self.fg.domain(f.scope[k]) {
                    break;
                }
                cell[k] = 0;
                if k == 0 {
                    k = usize::MAX;
                    break;
                }
            }
            if k == usize::MAX {
                break;
            }
        }
        finish_update(&self.semiring, out)
    }

    /// Region belief: the expansion of every factor whose scope lies inside
    /// the region with the external messages crossing its boundary,
    /// normalized when possible. The table ranges over the sorted region.
    pub fn marginal_region(&self, region: &[usize]) -> Result<MarginalTable, BpError> {
        let mut vars: Vec<usize> = region.to_vec();
        vars.sort_unstable();
        vars.dedup();
        if vars.is_empty() || vars.len() != region.len() {
            return Err(BpError::BadRegion);
        }
        for &v in &vars {
            if v >= self.fg.num_vars() {
                return Err(BpError::Graph(GraphError::IndexOutOfRange {
                    what: "variable",
                    index: v,
                    count: self.fg.num_vars(),
                }));
            }
        }
        let inside = |v: usize| vars.binary_search(&v).is_ok();
        let internal: Vec<usize> = (0..self.fg.num_factors())
            .filter(|&fidx| self.fg.factors()[fidx].scope.iter().all(|&v| inside(v)))
            .collect();
        // External messages per region variable.
        let mut externals: Vec<Vec<usize>> = Vec::with_capacity(vars.len());
        for &v in &vars {
            externals.push(
                self.edges.by_var[v]
                    .iter()
                    .copied()
                    .filter(|&e| {
                        let fidx = self.edges.edges[e].1;
                        !self.fg.factors()[fidx].scope.iter().all(|&u| inside(u))
                    })
                    .collect(),
            );
        }

        let mut z = vec![0usize; self.fg.num_vars()];
        let mut cell = vec![0usize; vars.len()];
        let size: usize = vars.iter().map(|&v| self.fg.domain(v)).product();
        let mut table = Vec::with_capacity(size);
        loop {
            for (k, &v) in vars.iter().enumerate() {
                z[v] = cell[k];
            }
            let mut term = self.semiring.one_times.clone();
            for &fidx in &internal {
                term = self.semiring.times(&term, self.fg.entry(fidx, &z))?;
            }
            for (k, edges) in externals.iter().enumerate() {
                for &e in edges {
                    term = self.semiring.times(&term, &self.f2v[e][cell[k]])?;
                }
            }
            table.push(term);
            let mut k = cell.len();
            loop {
                k -= 1;
                cell[k] += 1;
                if cell[k] < self.fg.domain(vars[k]) {
                    break;
                }
                cell[k] = 0;
                if k == 0 {
                    k = usize::MAX;
                    break;
                }
            }
            if k == usize::MAX {
                break;
            }
        }
        Ok(MarginalTable {
            vars,
            values: finish_update(&self.semiring, table)?,
        })
    }

    /// `⊕`-reductions of the local belief functions: per-edge message
    /// composites, per-variable and per-factor beliefs, and per-edge pair
    /// beliefs `μ_{i→I} ⊗ μ_{I→i}`.
    pub fn local_integrals(&self) -> Result<LocalIntegrals, BpError> {
        let s = &self.semiring;
        let mut v2f_tilde = Vec::with_capacity(self.edges.len());
        let mut f2v_tilde = Vec::with_capacity(self.edges.len());
        let mut edge_belief = Vec::with_capacity(self.edges.len());
        for e in 0..self.edges.len() {
            v2f_tilde.push(s.plus_fold(self.raw_v2f(e)?.iter())?);
            f2v_tilde.push(s.plus_fold(self.raw_f2v(e)?.iter())?);
            let pair: Result<Vec<Value>, AlgebraError> = self.v2f[e]
                .iter()
                .zip(&self.f2v[e])
                .map(|(a, b)| s.times(a, b))
                .collect();
            edge_belief.push(s.plus_fold(pair?.iter())?);
        }
        let mut var_belief = Vec::with_capacity(self.fg.num_vars());
        for i in 0..self.fg.num_vars() {
            let incoming: Vec<&[Value]> = self.edges.by_var[i]
                .iter()
                .map(|&e| self.f2v[e].as_slice())
                .collect();
            let raw = raw_v2f_from(s, self.fg.domain(i), &incoming)?;
            var_belief.push(s.plus_fold(raw.iter())?);
        }
        let mut factor_belief = Vec::with_capacity(self.fg.num_factors());
        for fidx in 0..self.fg.num_factors() {
            let f = self.fg.factor(fidx)?;
            let strides = row_major_strides(&f.scope, self.fg.domains());
            let mut acc = s.one_plus.clone();
            let mut cell = vec![0usize; f.scope.len()];
            loop {
                let mut idx = 0;
                for (k, &x) in cell.iter().enumerate() {
                    idx += x * strides[k];
                }
                let mut term = f.table[idx].clone();
                for (k, &x) in cell.iter().enumerate() {
                    let e = self.edges.by_factor[fidx][k];
                    term = s.times(&term, &self.v2f[e][x])?;
                }
                acc = s.plus(&acc, &term)?;
                let mut k = cell.len();
                loop {
                    k -= 1;
                    cell[k] += 1;
                    if cell[k] < self.fg.domain(f.scope[k]) {
                        break;
                    }
                    cell[k] = 0;
                    if k == 0 {
                        k = usize::MAX;
                        break;
                    }
                }
                if k == usize::MAX {
                    break;
                }
            }
            factor_belief.push(acc);
        }
        Ok(LocalIntegrals {
            v2f_tilde,
            f2v_tilde,
            var_belief,
            factor_belief,
            edge_belief,
        })
    }

    /// Assemble the full integral from local reductions:
    /// `⊗_I p̃_I(∅) ⊗ ⊗_i p̃_i(∅) ⊗ (⊗_{(i,I)} b_{i,I}(∅))⁻¹`.
    /// Exact at a fixed point on a tree; a flagged estimate elsewhere.
    pub fn integral_decomposition(&self) -> Result<Value, BpError> {
        let s = &self.semiring;
        let ints = self.local_integrals()?;
        let mut acc = s.one_times.clone();
        for v in ints.factor_belief.iter().chain(&ints.var_belief) {
            acc = s.times(&acc, v)?;
        }
        for b in &ints.edge_belief {
            acc = s.times(&acc, &invert(s, b)?)?;
        }
        Ok(acc)
    }

    /// Recompute every update and compare with the stored messages. With
    /// `tol = None` the comparison is exact value equality.
    pub fn check_fixed_point(&self, tol: Option<f64>) -> Result<FixedPointCheck, BpError> {
        let mut max_residual = 0.0_f64;
        for e in 0..self.edges.len() {
            let rv = residual(&self.update_v2f(e)?, &self.v2f[e]);
            let rf = residual(&self.update_f2v(e)?, &self.f2v[e]);
            max_residual = max_residual.max(rv).max(rf);
        }
        let is_fixed = match tol {
            None => max_residual == 0.0,
            Some(t) => max_residual <= t,
        };
        Ok(FixedPointCheck {
            is_fixed,
            max_residual,
        })
    }

    /// Per-variable choice decoding: the smallest index attaining the
    /// `⊕`-reduction of the variable belief. `None` when `⊕` is not a
    /// choice operation.
    pub fn decode_choice(&self) -> Result<Option<Vec<usize>>, BpError> {
        if !self.semiring.marg.is_choice() {
            return Ok(None);
        }
        let mut out = Vec::with_capacity(self.fg.num_vars());
        for i in 0..self.fg.num_vars() {
            let belief = self.marginal_variable(i)?;
            let best = self.semiring.plus_fold(belief.iter())?;
            let idx = belief
                .iter()
                .position(|v| v.numeric_eq(&best))
                .expect("a choice reduction is attained");
            out.push(idx);
        }
        Ok(Some(out))
    }

    fn damp(&self, old: &[Value], new: Vec<Value>, lambda: f64) -> Result<Vec<Value>, BpError> {
        damp_vec(&self.semiring, old, new, lambda)
    }
}

/// Blend `λ·old + (1−λ)·new` componentwise, in plain arithmetic. Meaningful
/// only for semirings with normalization; others pass `new` through.
pub(crate) fn damp_vec(
    s: &SemiringSpec,
    old: &[Value],
    new: Vec<Value>,
    lambda: f64,
) -> Result<Vec<Value>, BpError> {
    if lambda <= 0.0 || !s.invertible {
        return Ok(new);
    }
    let lam = Value::from_f64(lambda).map_err(AlgebraError::from)?;
    let com = Value::from_f64(1.0 - lambda).map_err(AlgebraError::from)?;
    let lam = lam.to_rational_backend();
    let com = com.to_rational_backend();
    old.iter()
        .zip(new)
        .map(|(o, n)| {
            // An infinite entry would pin the blend forever; let the new
            // value through undamped instead.
            if !o.is_finite() || !n.is_finite() {
                return Ok(n);
            }
            let a = o.mul(&lam).map_err(AlgebraError::from)?;
            let b = n.mul(&com).map_err(AlgebraError::from)?;
            Ok(a.add(&b).map_err(AlgebraError::from)?)
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct LocalIntegrals {
    /// Per edge: `m̃_{i→I}(∅)`.
    pub v2f_tilde: Vec<Value>,
    /// Per edge: `m̃_{I→i}(∅)`.
    pub f2v_tilde: Vec<Value>,
    /// Per variable: `p̃_i(∅)`.
    pub var_belief: Vec<Value>,
    /// Per factor: `p̃_I(∅)`.
    pub factor_belief: Vec<Value>,
    /// Per edge: `b_{i,I}(∅)`.
    pub edge_belief: Vec<Value>,
}

#[derive(Debug, Clone, Copy)]
pub struct FixedPointCheck {
    pub is_fixed: bool,
    pub max_residual: f64,
}

/// L∞ distance between message vectors: exact-zero on equal values, the
/// absolute numeric difference otherwise, and 1 per differing boolean
/// component. Infinite against finite counts as infinite.
pub fn residual(a: &[Value], b: &[Value]) -> f64 {
    let mut worst = 0.0_f64;
    for (x, y) in a.iter().zip(b.iter()) {
        if x.numeric_eq(y) {
            continue;
        }
        let d = match (x.is_boolean(), y.is_boolean()) {
            (true, true) => 1.0,
            (false, false) => match (x.to_f64(), y.to_f64()) {
                (Some(fx), Some(fy)) => {
                    let d = (fx - fy).abs();
                    if d.is_nan() {
                        f64::INFINITY
                    } else {
                        d
                    }
                }
                _ => f64::INFINITY,
            },
            _ => f64::INFINITY,
        };
        worst = worst.max(d);
    }
    worst
}

/// Exact two-pass belief propagation on a tree (forests included). Each
/// directed message is computed once: leaves-inward first, then root-outward.
pub fn run_tree<'g>(
    fg: &'g FactorGraph,
    s: &SemiringSpec,
) -> Result<MessageState<'g>, BpError> {
    if !fg.is_tree() {
        return Err(BpError::NotATree);
    }
    let mut state = MessageState::new_uniform(fg, s)?;
    let n = fg.num_vars();
    let total = n + fg.num_factors();

    // BFS forest over variable nodes 0..n and factor nodes n..n+k.
    let mut parent: Vec<Option<usize>> = vec![None; total];
    let mut visited = vec![false; total];
    let mut order = Vec::with_capacity(total);
    for root in 0..total {
        if visited[root] {
            continue;
        }
        visited[root] = true;
        let mut queue = std::collections::VecDeque::from([root]);
        while let Some(node) = queue.pop_front() {
            order.push(node);
            let neighbors: Vec<usize> = if node < n {
                state.edges.by_var[node]
                    .iter()
                    .map(|&e| n + state.edges.edges[e].1)
                    .collect()
            } else {
                fg.factors()[node - n].scope.to_vec()
            };
            for nb in neighbors {
                if !visited[nb] {
                    visited[nb] = true;
                    parent[nb] = Some(node);
                    queue.push_back(nb);
                }
            }
        }
    }

    let edge_between = |a: usize, b: usize| -> Result<usize, BpError> {
        let (var, factor) = if a < n { (a, b - n) } else { (b, a - n) };
        state.edges.id(var, factor)
    };

    // Upward: children before parents, message toward the parent.
    for &node in order.iter().rev() {
        let Some(par) = parent[node] else { continue };
        let e = edge_between(node, par)?;
        if node < n {
            state.v2f[e] = state.update_v2f(e)?;
        } else {
            state.f2v[e] = state.update_f2v(e)?;
        }
    }
    // Downward: parents before children, message toward the child.
    for &node in order.iter() {
        let Some(par) = parent[node] else { continue };
        let e = edge_between(node, par)?;
        if par < n {
            state.v2f[e] = state.update_v2f(e)?;
        } else {
            state.f2v[e] = state.update_f2v(e)?;
        }
    }
    Ok(state)
}

/// Iterative belief propagation with explicit schedule, damping, and seed.
/// Converged means the post-normalization residual of a full sweep stayed
/// within `tol`.
pub fn run_loopy<'g>(
    fg: &'g FactorGraph,
    s: &SemiringSpec,
    opts: &LoopyOptions,
) -> Result<(MessageState<'g>, BpReport), BpError> {
    let start = Instant::now();
    let mut state = match opts.init {
        Init::Uniform => MessageState::new_uniform(fg, s)?,
        Init::Random => MessageState::new_random(fg, s, opts.seed)?,
    };
    let ne = state.edges.len();
    let mut report = BpReport {
        converged: ne == 0,
        iterations: 0,
        max_residual: 0.0,
        wall_time: Duration::ZERO,
    };
    for iter in 1..=opts.max_iter {
        let mut sweep_residual = 0.0_f64;
        match opts.schedule {
            Schedule::Synchronous => {
                let mut new_v2f = Vec::with_capacity(ne);
                let mut new_f2v = Vec::with_capacity(ne);
                for e in 0..ne {
                    new_v2f.push(state.damp(&state.v2f[e], state.update_v2f(e)?, opts.damping)?);
                    new_f2v.push(state.damp(&state.f2v[e], state.update_f2v(e)?, opts.damping)?);
                }
                for e in 0..ne {
                    sweep_residual = sweep_residual
                        .max(residual(&new_v2f[e], &state.v2f[e]))
                        .max(residual(&new_f2v[e], &state.f2v[e]));
                }
                state.v2f = new_v2f;
                state.f2v = new_f2v;
            }
            Schedule::Sequential => {
                for e in 0..ne {
                    let new = state.damp(&state.v2f[e], state.update_v2f(e)?, opts.damping)?;
                    sweep_residual = sweep_residual.max(residual(&new, &state.v2f[e]));
                    state.v2f[e] = new;
                }
                for e in 0..ne {
                    let new = state.damp(&state.f2v[e], state.update_f2v(e)?, opts.damping)?;
                    sweep_residual = sweep_residual.max(residual(&new, &state.f2v[e]));
                    state.f2v[e] = new;
                }
            }
        }
        report.iterations = iter;
        report.max_residual = sweep_residual;
        if sweep_residual <= opts.tol {
            report.converged = true;
            break;
        }
    }
    report.wall_time = start.elapsed();
    Ok((state, report))
}
