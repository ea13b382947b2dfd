//! CNF formulas and their constraint-factor encoding.
//!
//! A clause becomes one factor whose entries are `1⊗` on satisfying
//! assignments and `1⊕` (the annihilator) on falsifying ones, so the or-and
//! integral of the encoded graph is satisfiability, the sum-product integral
//! is the model count, and the min-sum integral is the minimum number of
//! violated clauses under a violation-cost variant.

use crate::algebra::SemiringSpec;
use crate::graph::{Factor, FactorGraph, GraphError};
use crate::value::Value;
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CnfError {
    #[error("clause {clause} is empty")]
    EmptyClause { clause: usize },
    #[error("clause {clause} references variable {var}, formula has {num_vars}")]
    LiteralOutOfRange {
        clause: usize,
        var: usize,
        num_vars: usize,
    },
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// A literal: variable index plus polarity (`positive` means the variable
/// itself, not its negation).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Literal {
    pub var: usize,
    pub positive: bool,
}

impl Literal {
    pub fn pos(var: usize) -> Self {
        Literal { var, positive: true }
    }

    pub fn neg(var: usize) -> Self {
        Literal {
            var,
            positive: false,
        }
    }

    pub fn satisfied_by(&self, value: bool) -> bool {
        value == self.positive
    }
}

/// A CNF formula over `num_vars` boolean variables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cnf {
    pub num_vars: usize,
    pub clauses: Vec<Vec<Literal>>,
}

impl Cnf {
    pub fn new(num_vars: usize, clauses: Vec<Vec<Literal>>) -> Self {
        Cnf { num_vars, clauses }
    }

    pub fn validate(&self) -> Result<(), CnfError> {
        for (cidx, clause) in self.clauses.iter().enumerate() {
            if clause.is_empty() {
                return Err(CnfError::EmptyClause { clause: cidx });
            }
            for lit in clause {
                if lit.var >= self.num_vars {
                    return Err(CnfError::LiteralOutOfRange {
                        clause: cidx,
                        var: lit.var,
                        num_vars: self.num_vars,
                    });
                }
            }
        }
        Ok(())
    }

    /// Index of the first clause the assignment falsifies, if any.
    pub fn violated_clause(&self, assignment: &[bool]) -> Option<usize> {
        self.clauses.iter().position(|clause| {
            !clause
                .iter()
                .any(|lit| lit.satisfied_by(assignment[lit.var]))
        })
    }

    pub fn is_satisfied_by(&self, assignment: &[bool]) -> bool {
        self.violated_clause(assignment).is_none()
    }
}

/// Polarity summary of one clause's view of one variable, after merging
/// duplicate literals. `both` marks a tautological pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Polarity {
    Positive,
    Negative,
    Both,
}

/// Encode a formula as one constraint factor per clause over the semiring's
/// identity pair: `1⊗` where the clause holds, `1⊕` where it fails.
/// Duplicate literals merge; a clause containing both polarities of a
/// variable is a tautology and encodes as an all-`1⊗` factor.
pub fn encode_cnf(cnf: &Cnf, s: &SemiringSpec) -> Result<FactorGraph, CnfError> {
    cnf.validate()?;
    let mut factors = Vec::with_capacity(cnf.clauses.len());
    for clause in &cnf.clauses {
        let mut polarity: BTreeMap<usize, Polarity> = BTreeMap::new();
        for lit in clause {
            let p = if lit.positive {
                Polarity::Positive
            } else {
                Polarity::Negative
            };
            polarity
                .entry(lit.var)
                .and_modify(|cur| {
                    if *cur != p {
                        *cur = Polarity::Both;
                    }
                })
                .or_insert(p);
        }
        let scope: Vec<usize> = polarity.keys().copied().collect();
        let tautology = polarity.values().any(|p| *p == Polarity::Both);
        let width = scope.len();
        let mut table = Vec::with_capacity(1 << width);
        for cell in 0u64..1 << width {
            // Bit k of `cell` is the value of scope[k]; the last scope
            // variable must vary fastest, so read bits from the high end.
            let satisfied = tautology
                || scope.iter().enumerate().any(|(k, &var)| {
                    let value = (cell >> (width - 1 - k)) & 1 == 1;
                    match polarity[&var] {
                        Polarity::Positive => value,
                        Polarity::Negative => !value,
                        Polarity::Both => true,
                    }
                });
            table.push(if satisfied {
                s.one_times.clone()
            } else {
                s.one_plus.clone()
            });
        }
        factors.push(Factor::new(scope, table));
    }
    Ok(FactorGraph::build(vec![2; cnf.num_vars], factors)?)
}

/// A violation-cost encoding: each falsified clause costs 1 instead of
/// annihilating, so the min-sum integral is the minimum number of violated
/// clauses (0 exactly when the formula is satisfiable).
pub fn encode_cnf_costs(cnf: &Cnf) -> Result<FactorGraph, CnfError> {
    let strict = encode_cnf(cnf, &SemiringSpec::or_and())?;
    let factors = strict
        .factors()
        .iter()
        .map(|f| {
            let table = f
                .table
                .iter()
                .map(|v| {
                    if *v == Value::Bool(true) {
                        Value::int(0)
                    } else {
                        Value::int(1)
                    }
                })
                .collect();
            Factor::new(f.scope.clone(), table)
        })
        .collect();
    Ok(FactorGraph::build(vec![2; cnf.num_vars], factors)?)
}
