//! Marginalization queries and their complexity classification.
//!
//! A query names an ordered partition of the variables into marginalization
//! levels plus a free remainder, together with an expansion operation:
//!
//! ```text
//! query  := level (';' level)* '::' EXPAND
//! level  := OP POLY? '@' varset
//! POLY   := '!'
//! varset := '{' int (',' int)* '}' | 'all'
//! ```
//!
//! `OP` and `EXPAND` range over `sum|min|max|prod|or|and|xor`. Levels are
//! written outermost first. `all` (at most once) stands for the complement
//! of every variable listed elsewhere. A `free@{…}` clause may declare the
//! free variables explicitly; it must match the complement of the levels.
//! A `!` marks a level whose joint domain is treated as polynomially
//! enumerable.

use crate::algebra::{AlgebraError, OpTag};
use std::collections::BTreeSet;
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum QueryError {
    #[error("syntax error: {reason}")]
    Syntax { reason: String },
    #[error("partition error: {reason}")]
    Partition { reason: String },
    #[error("levels {first} and {second} both marginalize with `{op}`; merge them into one level")]
    ConsecutiveOp {
        op: OpTag,
        /// 1-based positions in the written (outermost-first) order.
        first: usize,
        second: usize,
    },
    #[error("level {level} is empty")]
    EmptyLevel { level: usize },
    #[error("level {level} marginalizes with `prod`, which has no place in the classification")]
    ProductMarginalization { level: usize },
    #[error("level {level} marginalizes with `{op}`, which is outside the classification")]
    UnsupportedMarginalization { level: usize, op: OpTag },
}

impl From<AlgebraError> for QueryError {
    fn from(e: AlgebraError) -> Self {
        QueryError::Syntax {
            reason: e.to_string(),
        }
    }
}

/// One marginalization level: an operation over a set of variables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueryLevel {
    pub op: OpTag,
    pub vars: BTreeSet<usize>,
    /// Whether this level's joint domain is polynomially enumerable.
    pub poly: bool,
}

/// A parsed query. `levels[0]` is the outermost level; the innermost level
/// has 1-based index 1 in `sum_set`/`poly_set` conventions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Query {
    pub levels: Vec<QueryLevel>,
    pub expand: OpTag,
    /// Free variables (the output table's axes), always the complement of
    /// the level variables.
    pub free: BTreeSet<usize>,
    pub num_vars: usize,
}

impl Query {
    pub fn m(&self) -> usize {
        self.levels.len()
    }

    /// 1-based innermost-first index of `levels[idx]`.
    pub fn inner_index(&self, idx: usize) -> usize {
        self.levels.len() - idx
    }
}

impl fmt::Display for Query {
    /// Canonical text: compact, levels outermost first, free set implicit.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for level in &self.levels {
            if !first {
                f.write_str(";")?;
            }
            first = false;
            write!(f, "{}{}@{{", level.op, if level.poly { "!" } else { "" })?;
            let mut sep = "";
            for v in &level.vars {
                write!(f, "{sep}{v}")?;
                sep = ",";
            }
            f.write_str("}")?;
        }
        write!(f, "::{}", self.expand)
    }
}

fn syntax(reason: impl Into<String>) -> QueryError {
    QueryError::Syntax {
        reason: reason.into(),
    }
}

fn partition(reason: impl Into<String>) -> QueryError {
    QueryError::Partition {
        reason: reason.into(),
    }
}

enum Clause {
    Level { op: OpTag, poly: bool, vars: VarSet },
    Free(VarSet),
}

enum VarSet {
    All,
    Explicit(Vec<usize>),
}

fn parse_varset(text: &str) -> Result<VarSet, QueryError> {
    let t = text.trim();
    if t == "all" {
        return Ok(VarSet::All);
    }
    let inner = t
        .strip_prefix('{')
        .and_then(|r| r.strip_suffix('}'))
        .ok_or_else(|| syntax(format!("expected `{{…}}` or `all`, found `{t}`")))?;
    if inner.trim().is_empty() {
        return Ok(VarSet::Explicit(Vec::new()));
    }
    inner
        .split(',')
        .map(|tok| {
            tok.trim()
                .parse::<usize>()
                .map_err(|_| syntax(format!("`{}` is not a variable index", tok.trim())))
        })
        .collect::<Result<Vec<_>, _>>()
        .map(VarSet::Explicit)
}

fn parse_clause(text: &str) -> Result<Clause, QueryError> {
    let (head, tail) = text
        .split_once('@')
        .ok_or_else(|| syntax(format!("clause `{}` is missing `@`", text.trim())))?;
    let head = head.trim();
    let vars = parse_varset(tail)?;
    if head == "free" {
        return Ok(Clause::Free(vars));
    }
    let (name, poly) = match head.strip_suffix('!') {
        Some(stripped) => (stripped.trim_end(), true),
        None => (head, false),
    };
    let op = OpTag::parse(name)
        .map_err(|_| syntax(format!("`{name}` is not an operation")))?;
    Ok(Clause::Level { op, poly, vars })
}

/// Parse a query over `num_vars` variables.
pub fn parse_query(text: &str, num_vars: usize) -> Result<Query, QueryError> {
    let (left, right) = text
        .split_once("::")
        .ok_or_else(|| syntax("missing `::EXPAND`"))?;
    if right.contains("::") {
        return Err(syntax("more than one `::`"));
    }
    let expand = OpTag::parse(right.trim())
        .map_err(|_| syntax(format!("`{}` is not an expansion operation", right.trim())))?;

    let mut raw_levels: Vec<(OpTag, bool, VarSet)> = Vec::new();
    let mut free_clause: Option<VarSet> = None;
    for part in left.split(';') {
        if part.trim().is_empty() {
            return Err(syntax("empty clause"));
        }
        match parse_clause(part)? {
            Clause::Free(vs) => {
                if free_clause.replace(vs).is_some() {
                    return Err(syntax("more than one `free@` clause"));
                }
            }
            Clause::Level { op, poly, vars } => raw_levels.push((op, poly, vars)),
        }
    }
    if raw_levels.is_empty() {
        return Err(syntax("query has no marginalization levels"));
    }

    // Every variable may be claimed at most once across levels and the free
    // clause; `all` (at most once anywhere) takes the unclaimed remainder.
    let mut claimed: BTreeSet<usize> = BTreeSet::new();
    let mut all_positions = 0usize;
    let claim = |vs: &VarSet, claimed: &mut BTreeSet<usize>| -> Result<(), QueryError> {
        if let VarSet::Explicit(vars) = vs {
            for &v in vars {
                if v >= num_vars {
                    return Err(partition(format!(
                        "variable {v} is out of range (query is over {num_vars} variables)"
                    )));
                }
                if !claimed.insert(v) {
                    return Err(partition(format!("variable {v} appears more than once")));
                }
            }
        }
        Ok(())
    };
    for (_, _, vs) in &raw_levels {
        if matches!(vs, VarSet::All) {
            all_positions += 1;
        }
        claim(vs, &mut claimed)?;
    }
    if let Some(vs) = &free_clause {
        if matches!(vs, VarSet::All) {
            all_positions += 1;
        }
        claim(vs, &mut claimed)?;
    }
    if all_positions > 1 {
        return Err(syntax("`all` may appear at most once"));
    }
    let remainder: BTreeSet<usize> = (0..num_vars).filter(|v| !claimed.contains(v)).collect();

    let mut levels = Vec::with_capacity(raw_levels.len());
    for (pos, (op, poly, vs)) in raw_levels.into_iter().enumerate() {
        let vars: BTreeSet<usize> = match vs {
            VarSet::All => remainder.clone(),
            VarSet::Explicit(vars) => vars.into_iter().collect(),
        };
        if vars.is_empty() {
            return Err(QueryError::EmptyLevel { level: pos + 1 });
        }
        levels.push(QueryLevel { op, vars, poly });
    }

    // The free set is the complement of the resolved level variables; an
    // explicit `free@` clause must name exactly that complement.
    let mut level_union: BTreeSet<usize> = BTreeSet::new();
    for l in &levels {
        level_union.extend(l.vars.iter().copied());
    }
    let implicit_free: BTreeSet<usize> =
        (0..num_vars).filter(|v| !level_union.contains(v)).collect();
    let free = match free_clause {
        None | Some(VarSet::All) => implicit_free,
        Some(VarSet::Explicit(vars)) => {
            let declared: BTreeSet<usize> = vars.into_iter().collect();
            if declared != implicit_free {
                return Err(partition(format!(
                    "`free@` clause does not match the unclaimed variables {implicit_free:?}"
                )));
            }
            declared
        }
    };

    for idx in 1..levels.len() {
        if levels[idx - 1].op == levels[idx].op && levels[idx - 1].poly == levels[idx].poly {
            return Err(QueryError::ConsecutiveOp {
                op: levels[idx].op,
                first: idx,
                second: idx + 1,
            });
        }
    }

    Ok(Query {
        levels,
        expand,
        free,
        num_vars,
    })
}

/// Complexity classes appearing in towers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClassTag {
    P,
    NP,
    CoNP,
    PP,
}

impl fmt::Display for ClassTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ClassTag::P => "P",
            ClassTag::NP => "NP",
            ClassTag::CoNP => "coNP",
            ClassTag::PP => "PP",
        })
    }
}

/// Query families, named by the outermost marginalization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    /// Outermost level polynomial (or the whole query collapses to P).
    Delta,
    /// Outermost exponential sum.
    Sigma,
    /// Outermost exponential min/and.
    Phi,
    /// Outermost exponential max/or.
    Psi,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::Delta => "Delta",
            Family::Sigma => "Sigma",
            Family::Phi => "Phi",
            Family::Psi => "Psi",
        })
    }
}

/// Classifier output: family, level count, the 1-based innermost-first
/// indices of exponential-sum and polynomial levels, and the oracle tower.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Classification {
    pub family: Family,
    pub m: usize,
    pub sum_set: Vec<usize>,
    pub poly_set: Vec<usize>,
    pub tower: Vec<ClassTag>,
}

impl Classification {
    /// The tower rendered as a completeness class, e.g. `NP^PP`.
    pub fn complexity(&self) -> String {
        self.tower
            .iter()
            .map(ClassTag::to_string)
            .collect::<Vec<_>>()
            .join("^")
    }
}

/// `or ≅ max` and `and ≅ min` on the ordered booleans; identity elsewhere.
fn choice_iso(op: OpTag) -> OpTag {
    match op {
        OpTag::Or => OpTag::Max,
        OpTag::And => OpTag::Min,
        other => other,
    }
}

/// Classify a query's decision complexity. Levels marginalizing with `prod`
/// or `xor` have no classification and are rejected.
pub fn classify(q: &Query) -> Result<Classification, QueryError> {
    for (idx, level) in q.levels.iter().enumerate() {
        match level.op {
            OpTag::Prod => {
                return Err(QueryError::ProductMarginalization { level: idx + 1 })
            }
            OpTag::Xor => {
                return Err(QueryError::UnsupportedMarginalization {
                    level: idx + 1,
                    op: OpTag::Xor,
                })
            }
            _ => {}
        }
    }

    let m = q.levels.len();
    let sum_set: Vec<usize> = q
        .levels
        .iter()
        .enumerate()
        .filter(|(_, l)| !l.poly && l.op == OpTag::Sum)
        .map(|(idx, _)| q.inner_index(idx))
        .rev()
        .collect();
    let poly_set: Vec<usize> = q
        .levels
        .iter()
        .enumerate()
        .filter(|(_, l)| l.poly)
        .map(|(idx, _)| q.inner_index(idx))
        .rev()
        .collect();

    // Degenerate single-level cases stay in P: a polynomial level is a
    // direct enumeration, and a level whose marginalization matches the
    // expansion is one long fold of the factor entries.
    let outer = &q.levels[0];
    let delta_one = m == 1
        && !outer.poly
        && matches!(choice_iso(outer.op), OpTag::Sum | OpTag::Min | OpTag::Max)
        && choice_iso(outer.op) == choice_iso(q.expand);
    if delta_one || (m == 1 && outer.poly) {
        return Ok(Classification {
            family: Family::Delta,
            m,
            sum_set,
            poly_set,
            tower: vec![ClassTag::P],
        });
    }

    let mut tower = vec![ClassTag::P];
    for level in q.levels.iter().rev() {
        let wrapper = if level.poly {
            ClassTag::P
        } else {
            match choice_iso(level.op) {
                OpTag::Sum => ClassTag::PP,
                OpTag::Min => ClassTag::CoNP,
                OpTag::Max => ClassTag::NP,
                _ => unreachable!("prod/xor rejected above"),
            }
        };
        if tower == [ClassTag::P] && wrapper != ClassTag::P {
            tower = vec![wrapper];
        } else if wrapper == ClassTag::P && tower[0] == ClassTag::P {
            // P^(P^X) = P^X: adjacent polynomial wrappers collapse.
        } else {
            tower.insert(0, wrapper);
        }
    }

    let family = if outer.poly {
        Family::Delta
    } else {
        match choice_iso(outer.op) {
            OpTag::Sum => Family::Sigma,
            OpTag::Min => Family::Phi,
            OpTag::Max => Family::Psi,
            _ => unreachable!("prod/xor rejected above"),
        }
    };

    Ok(Classification {
        family,
        m,
        sum_set,
        poly_set,
        tower,
    })
}
