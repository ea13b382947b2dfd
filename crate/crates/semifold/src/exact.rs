//! Exact query evaluation by streaming enumeration, plus the closed-form
//! integrals for the patterns that never need enumeration.
//!
//! [`evaluate_query`] walks assignments in nested-loop order (free variables
//! outermost, then levels outermost to innermost) and folds each factor into
//! the running expansion the moment its last scope variable is assigned.
//! Memory stays proportional to the graph plus the output table; time is
//! bounded by the enumeration caps, never by surprise.

use crate::algebra::{AlgebraError, OpTag};
use crate::graph::{FactorGraph, GraphError};
use crate::query::Query;
use crate::value::Value;
use num_bigint::BigInt;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ExactError {
    #[error("{what} needs {size} entries, cap is {cap}")]
    CapExceeded {
        what: &'static str,
        size: u128,
        cap: u128,
    },
    #[error(
        "prod marginalization is evaluated by enumeration only, and this one \
         needs {size} assignments against a cap of {cap}"
    )]
    ProductMarginalizationCapped { size: u128, cap: u128 },
    #[error("query is over {query} variables, graph has {graph}")]
    VariableCountMismatch { query: usize, graph: usize },
    #[error("`{0}` is not a fast-integral pattern (expected sum-sum, min-min, or max-max)")]
    UnsupportedPattern(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}

/// A table over the sorted `vars`, row-major with the last variable fastest.
/// `vars` may be empty, in which case the table is the single value of a
/// fully reduced query.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MarginalTable {
    pub vars: Vec<usize>,
    pub values: Vec<Value>,
}

impl MarginalTable {
    pub fn scalar(v: Value) -> Self {
        MarginalTable {
            vars: Vec::new(),
            values: vec![v],
        }
    }

    /// The single value of a variable-free table.
    pub fn as_scalar(&self) -> Option<&Value> {
        if self.vars.is_empty() {
            self.values.first()
        } else {
            None
        }
    }
}

#[derive(Debug, Clone)]
pub struct EvalOptions {
    /// Cap on the output table size `|X_{J0}|`.
    pub free_cap: u128,
    /// Cap on the total number of enumerated assignments.
    pub enumeration_cap: u128,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            free_cap: 1 << 20,
            enumeration_cap: 1 << 22,
        }
    }
}

struct Walker<'a> {
    fg: &'a FactorGraph,
    expand: OpTag,
    /// Level variables in recursion order (outermost level first, ascending
    /// variable index within a level), with the level's operation.
    order: Vec<(usize, OpTag)>,
    /// Factors folded at each recursion position (their last variable).
    factors_at: Vec<Vec<usize>>,
    z: Vec<usize>,
}

impl Walker<'_> {
    /// Fold levels from position `p` inward, given the expansion of every
    /// factor completed so far. At the leaf `partial` is the full expansion
    /// `⊗_I f_I(z)`; level operations only ever combine completed leaves, so
    /// no distributivity is assumed.
    fn recurse(&mut self, p: usize, partial: Value) -> Result<Value, ExactError> {
        if p == self.order.len() {
            return Ok(partial);
        }
        let (var, op) = self.order[p];
        let mut acc: Option<Value> = None;
        for x in 0..self.fg.domain(var) {
            self.z[var] = x;
            let mut next = partial.clone();
            for k in 0..self.factors_at[p].len() {
                let fidx = self.factors_at[p][k];
                next = self.expand.apply(&next, self.fg.entry(fidx, &self.z))?;
            }
            let leaf = self.recurse(p + 1, next)?;
            acc = Some(match acc {
                None => leaf,
                Some(a) => op.apply(&a, &leaf)?,
            });
        }
        Ok(acc.expect("domains are non-empty"))
    }
}

/// Evaluate a query exactly. The result table ranges over the free variables
/// `J0` (row-major, last fastest); a query without free variables yields a
/// single value.
pub fn evaluate_query(
    fg: &FactorGraph,
    q: &Query,
    opts: &EvalOptions,
) -> Result<MarginalTable, ExactError> {
    if q.num_vars != fg.num_vars() {
        return Err(ExactError::VariableCountMismatch {
            query: q.num_vars,
            graph: fg.num_vars(),
        });
    }

    let free_vars: Vec<usize> = q.free.iter().copied().collect();
    let mut order: Vec<(usize, OpTag)> = Vec::new();
    for level in &q.levels {
        for &v in &level.vars {
            order.push((v, level.op));
        }
    }

    let mut free_count: u128 = 1;
    for &v in &free_vars {
        free_count = free_count.saturating_mul(fg.domain(v) as u128);
    }
    if free_count > opts.free_cap {
        return Err(ExactError::CapExceeded {
            what: "free-variable table",
            size: free_count,
            cap: opts.free_cap,
        });
    }
    let mut total: u128 = free_count;
    for &(v, _) in &order {
        total = total.saturating_mul(fg.domain(v) as u128);
    }
    if total > opts.enumeration_cap {
        let has_prod_level = q.levels.iter().any(|l| l.op == OpTag::Prod);
        return Err(if has_prod_level {
            ExactError::ProductMarginalizationCapped {
                size: total,
                cap: opts.enumeration_cap,
            }
        } else {
            ExactError::CapExceeded {
                what: "level enumeration",
                size: total,
                cap: opts.enumeration_cap,
            }
        });
    }

    // A factor folds into the expansion at the recursion position of the
    // deepest level variable in its scope; factors entirely over free
    // variables fold before the recursion starts.
    let mut pos_of_var = vec![None; fg.num_vars()];
    for (p, &(v, _)) in order.iter().enumerate() {
        pos_of_var[v] = Some(p);
    }
    let mut factors_at: Vec<Vec<usize>> = vec![Vec::new(); order.len()];
    let mut free_factors: Vec<usize> = Vec::new();
    for (fidx, f) in fg.factors().iter().enumerate() {
        match f.scope.iter().filter_map(|&v| pos_of_var[v]).max() {
            Some(p) => factors_at[p].push(fidx),
            None => free_factors.push(fidx),
        }
    }

    let mut walker = Walker {
        fg,
        expand: q.expand,
        order,
        factors_at,
        z: vec![0; fg.num_vars()],
    };

    let mut values = Vec::with_capacity(free_count as usize);
    let mut cursor = vec![0usize; free_vars.len()];
    loop {
        for (k, &v) in free_vars.iter().enumerate() {
            walker.z[v] = cursor[k];
        }
        let mut partial = q.expand.identity();
        for &fidx in &free_factors {
            partial = q.expand.apply(&partial, fg.entry(fidx, &walker.z))?;
        }
        values.push(walker.recurse(0, partial)?);
        // Odometer over the free variables, last fastest.
        let mut k = free_vars.len();
        loop {
            if k == 0 {
                break;
            }
            k -= 1;
            cursor[k] += 1;
            if cursor[k] < fg.domain(free_vars[k]) {
                break;
            }
            cursor[k] = 0;
            if k == 0 {
                k = usize::MAX;
                break;
            }
        }
        if k == usize::MAX || free_vars.is_empty() {
            break;
        }
    }

    Ok(MarginalTable {
        vars: free_vars,
        values,
    })
}

/// The integral patterns with closed forms.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FastPattern {
    SumSum,
    MinMin,
    MaxMax,
}

impl FastPattern {
    pub fn from_name(name: &str) -> Result<FastPattern, ExactError> {
        match name {
            "sum-sum" => Ok(FastPattern::SumSum),
            "min-min" => Ok(FastPattern::MinMin),
            "max-max" => Ok(FastPattern::MaxMax),
            other => Err(ExactError::UnsupportedPattern(other.to_string())),
        }
    }

    /// Recognize a full-reduction query matching a closed-form pattern.
    pub fn of_query(q: &Query) -> Option<FastPattern> {
        if q.m() != 1 || !q.free.is_empty() || q.levels[0].poly {
            return None;
        }
        match (q.levels[0].op, q.expand) {
            (OpTag::Sum, OpTag::Sum) => Some(FastPattern::SumSum),
            (OpTag::Min, OpTag::Min) => Some(FastPattern::MinMin),
            (OpTag::Max, OpTag::Max) => Some(FastPattern::MaxMax),
            _ => None,
        }
    }
}

/// Closed-form full integrals, linear in the total table size.
///
/// For sum-sum each factor contributes each table entry once per assignment
/// of the variables outside its scope, so the integral is
/// `Σ_I |X_{∖∂I}| · (Σ f_I)`. For min-min (max-max) every table entry is
/// attained by some full assignment, so the integral is the global minimum
/// (maximum) over all entries; an empty graph gives the expansion identity
/// folded over all assignments, i.e. `+inf` (`-inf`), and `0` for sum-sum.
pub fn fast_integral(fg: &FactorGraph, pattern: FastPattern) -> Result<Value, ExactError> {
    match pattern {
        FastPattern::SumSum => {
            let mut total = Value::int(0);
            for (fidx, f) in fg.factors().iter().enumerate() {
                let mut table_sum = f.table[0].clone();
                for v in &f.table[1..] {
                    table_sum = table_sum.add(v).map_err(AlgebraError::from)?;
                }
                let mut outside = BigInt::from(1u32);
                for (v, &d) in fg.domains().iter().enumerate() {
                    if !fg.factors()[fidx].scope.contains(&v) {
                        outside *= d;
                    }
                }
                let scaled = table_sum
                    .scale_by_count(&outside)
                    .map_err(AlgebraError::from)?;
                total = total.add(&scaled).map_err(AlgebraError::from)?;
            }
            Ok(total)
        }
        FastPattern::MinMin => {
            let mut best = Value::PosInf;
            for f in fg.factors() {
                for v in &f.table {
                    best = best.min_choice(v).map_err(AlgebraError::from)?;
                }
            }
            Ok(best)
        }
        FastPattern::MaxMax => {
            let mut best = Value::NegInf;
            for f in fg.factors() {
                for v in &f.table {
                    best = best.max_choice(v).map_err(AlgebraError::from)?;
                }
            }
            Ok(best)
        }
    }
}
