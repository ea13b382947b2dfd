//! Factor graphs: discrete variables, factors over sorted scopes, and the
//! structural queries the inference engines need.
//!
//! Tables are stored row-major with the **last** scope variable varying
//! fastest. Scopes are sorted and duplicate-free; both invariants are
//! enforced at build time, along with a hard cap on table size.

use crate::algebra::{AlgebraError, SemiringSpec};
use crate::value::Value;
use std::collections::BTreeSet;
use thiserror::Error;

/// Hard cap on the number of entries in one factor table.
pub const TABLE_CAP: usize = 1 << 20;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("factor {factor}: scope variable {var} is out of range (graph has {num_vars} variables)")]
    ScopeOutOfRange {
        factor: usize,
        var: usize,
        num_vars: usize,
    },
    #[error("factor {factor}: scope lists variable {var} more than once")]
    DuplicateInScope { factor: usize, var: usize },
    #[error("factor {factor}: scope must be sorted ascending")]
    UnsortedScope { factor: usize },
    #[error("factor {factor}: empty scope")]
    EmptyScope { factor: usize },
    #[error("factor {factor}: table has {got} entries, scope domains require {expected}")]
    TableSizeMismatch {
        factor: usize,
        expected: usize,
        got: usize,
    },
    #[error("factor {factor}: table would have {size} entries, cap is {cap}")]
    TableCapExceeded {
        factor: usize,
        size: u128,
        cap: usize,
    },
    #[error("variable {var}: empty domain")]
    EmptyDomain { var: usize },
    #[error("index {index} is out of range ({what} count is {count})")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        count: usize,
    },
    #[error("variable {var}: value {value} is outside its domain of size {domain}")]
    ValueOutOfDomain {
        var: usize,
        value: usize,
        domain: usize,
    },
    #[error("assignment has {got} entries, graph has {expected} variables")]
    AssignmentLength { expected: usize, got: usize },
    #[error("evidence lists variable {var} more than once")]
    DuplicateEvidence { var: usize },
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}

/// One factor: a table over the sorted variables in `scope`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Factor {
    pub scope: Vec<usize>,
    pub table: Vec<Value>,
}

impl Factor {
    pub fn new(scope: Vec<usize>, table: Vec<Value>) -> Self {
        Factor { scope, table }
    }
}

/// A validated factor graph.
#[derive(Debug, Clone)]
pub struct FactorGraph {
    domains: Vec<usize>,
    factors: Vec<Factor>,
    /// Row-major strides per factor, aligned with its scope.
    strides: Vec<Vec<usize>>,
    /// Sorted factor indices adjacent to each variable.
    var_adj: Vec<Vec<usize>>,
}

impl FactorGraph {
    /// Validate and index a graph. Scopes must be sorted and duplicate-free;
    /// every table length must match the product of its scope's domain sizes.
    pub fn build(domains: Vec<usize>, factors: Vec<Factor>) -> Result<Self, GraphError> {
        let num_vars = domains.len();
        for (var, &d) in domains.iter().enumerate() {
            if d == 0 {
                return Err(GraphError::EmptyDomain { var });
            }
        }
        let mut strides = Vec::with_capacity(factors.len());
        let mut var_adj = vec![Vec::new(); num_vars];
        for (fidx, f) in factors.iter().enumerate() {
            if f.scope.is_empty() {
                return Err(GraphError::EmptyScope { factor: fidx });
            }
            for (k, &v) in f.scope.iter().enumerate() {
                if v >= num_vars {
                    return Err(GraphError::ScopeOutOfRange {
                        factor: fidx,
                        var: v,
                        num_vars,
                    });
                }
                if k > 0 {
                    if f.scope[k - 1] == v {
                        return Err(GraphError::DuplicateInScope { factor: fidx, var: v });
                    }
                    if f.scope[k - 1] > v {
                        return Err(GraphError::UnsortedScope { factor: fidx });
                    }
                }
            }
            let mut size: u128 = 1;
            for &v in &f.scope {
                size *= domains[v] as u128;
                if size > TABLE_CAP as u128 {
                    return Err(GraphError::TableCapExceeded {
                        factor: fidx,
                        size,
                        cap: TABLE_CAP,
                    });
                }
            }
            let expected = size as usize;
            if f.table.len() != expected {
                return Err(GraphError::TableSizeMismatch {
                    factor: fidx,
                    expected,
                    got: f.table.len(),
                });
            }
            strides.push(row_major_strides(&f.scope, &domains));
            for &v in &f.scope {
                var_adj[v].push(fidx);
            }
        }
        Ok(FactorGraph {
            domains,
            factors,
            strides,
            var_adj,
        })
    }

    pub fn num_vars(&self) -> usize {
        self.domains.len()
    }

    pub fn num_factors(&self) -> usize {
        self.factors.len()
    }

    pub fn domains(&self) -> &[usize] {
        &self.domains
    }

    pub fn domain(&self, var: usize) -> usize {
        self.domains[var]
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    pub fn factor(&self, idx: usize) -> Result<&Factor, GraphError> {
        self.factors.get(idx).ok_or(GraphError::IndexOutOfRange {
            what: "factor",
            index: idx,
            count: self.factors.len(),
        })
    }

    /// Sorted factor indices whose scope contains `var` (∂i).
    pub fn var_neighbors(&self, var: usize) -> Result<&[usize], GraphError> {
        self.var_adj
            .get(var)
            .map(Vec::as_slice)
            .ok_or(GraphError::IndexOutOfRange {
                what: "variable",
                index: var,
                count: self.domains.len(),
            })
    }

    /// Table entry of factor `fidx` under a full assignment `z`.
    pub fn entry(&self, fidx: usize, z: &[usize]) -> &Value {
        let f = &self.factors[fidx];
        let mut idx = 0;
        for (k, &v) in f.scope.iter().enumerate() {
            idx += z[v] * self.strides[fidx][k];
        }
        &f.table[idx]
    }

    /// Table entry of factor `fidx` under an assignment to its scope only,
    /// given in scope order.
    pub fn entry_scoped(&self, fidx: usize, scope_values: &[usize]) -> &Value {
        let mut idx = 0;
        for (k, &x) in scope_values.iter().enumerate() {
            idx += x * self.strides[fidx][k];
        }
        &self.factors[fidx].table[idx]
    }

    fn check_assignment(&self, z: &[usize]) -> Result<(), GraphError> {
        if z.len() != self.domains.len() {
            return Err(GraphError::AssignmentLength {
                expected: self.domains.len(),
                got: z.len(),
            });
        }
        for (var, (&x, &d)) in z.iter().zip(&self.domains).enumerate() {
            if x >= d {
                return Err(GraphError::ValueOutOfDomain {
                    var,
                    value: x,
                    domain: d,
                });
            }
        }
        Ok(())
    }

    /// `⊗`-fold of all factor entries under the full assignment `z`.
    pub fn evaluate(&self, s: &SemiringSpec, z: &[usize]) -> Result<Value, GraphError> {
        self.check_assignment(z)?;
        let mut acc = s.one_times.clone();
        for fidx in 0..self.factors.len() {
            acc = s.times(&acc, self.entry(fidx, z))?;
        }
        Ok(acc)
    }

    /// Variables sharing a factor with `var`, excluding `var` itself.
    pub fn markov_blanket(&self, var: usize) -> Result<BTreeSet<usize>, GraphError> {
        let mut blanket = BTreeSet::new();
        for &fidx in self.var_neighbors(var)? {
            for &v in &self.factors[fidx].scope {
                if v != var {
                    blanket.insert(v);
                }
            }
        }
        Ok(blanket)
    }

    /// True when the bipartite variable/factor graph is acyclic. Forests
    /// (including graphs with isolated variables or no factors) count.
    pub fn is_tree(&self) -> bool {
        let n = self.num_vars();
        let k = self.num_factors();
        // Nodes: variables 0..n, factors n..n+k.
        let mut visited = vec![false; n + k];
        let mut stack = Vec::new();
        let mut edges_seen = 0usize;
        let mut components = 0usize;
        for start in 0..n + k {
            if visited[start] {
                continue;
            }
            components += 1;
            visited[start] = true;
            stack.push(start);
            while let Some(node) = stack.pop() {
                if node < n {
                    for &fidx in &self.var_adj[node] {
                        edges_seen += 1;
                        if !visited[n + fidx] {
                            visited[n + fidx] = true;
                            stack.push(n + fidx);
                        }
                    }
                } else {
                    for &v in &self.factors[node - n].scope {
                        edges_seen += 1;
                        if !visited[v] {
                            visited[v] = true;
                            stack.push(v);
                        }
                    }
                }
            }
        }
        // Each undirected edge was counted from both endpoints.
        let edges = edges_seen / 2;
        edges == n + k - components
    }

    /// Clamp the evidence variables and drop them from the graph. Kept
    /// variables are renumbered densely; `kept[new] = old`. Factors whose
    /// scope is fully clamped fold into a constant, attached as a uniform
    /// unary factor on the lowest kept variable; if every variable is
    /// clamped the result is the scalar `⊗`-fold of all factors.
    pub fn reduce(
        &self,
        s: &SemiringSpec,
        evidence: &[(usize, usize)],
    ) -> Result<Reduced, GraphError> {
        let mut clamp: Vec<Option<usize>> = vec![None; self.num_vars()];
        for &(var, val) in evidence {
            if var >= self.num_vars() {
                return Err(GraphError::IndexOutOfRange {
                    what: "variable",
                    index: var,
                    count: self.num_vars(),
                });
            }
            if val >= self.domains[var] {
                return Err(GraphError::ValueOutOfDomain {
                    var,
                    value: val,
                    domain: self.domains[var],
                });
            }
            if clamp[var].replace(val).is_some() {
                return Err(GraphError::DuplicateEvidence { var });
            }
        }

        let kept: Vec<usize> = (0..self.num_vars())
            .filter(|&v| clamp[v].is_none())
            .collect();
        let mut new_index = vec![usize::MAX; self.num_vars()];
        for (new, &old) in kept.iter().enumerate() {
            new_index[old] = new;
        }

        let mut constant = s.one_times.clone();
        let mut new_factors: Vec<Factor> = Vec::new();
        for (fidx, f) in self.factors.iter().enumerate() {
            let live: Vec<usize> = f
                .scope
                .iter()
                .copied()
                .filter(|&v| clamp[v].is_none())
                .collect();
            if live.is_empty() {
                // Fully clamped: one table entry survives.
                let vals: Vec<usize> = f.scope.iter().map(|&v| clamp[v].unwrap()).collect();
                constant = s.times(&constant, self.entry_scoped(fidx, &vals))?;
                continue;
            }
            // Slice the table: iterate assignments of the live scope in
            // row-major order, reading the full-scope entries.
            let mut table = Vec::with_capacity(
                live.iter().map(|&v| self.domains[v]).product::<usize>(),
            );
            let mut vals: Vec<usize> = f.scope.iter().map(|&v| clamp[v].unwrap_or(0)).collect();
            let live_pos: Vec<usize> = f
                .scope
                .iter()
                .enumerate()
                .filter(|(_, &v)| clamp[v].is_none())
                .map(|(k, _)| k)
                .collect();
            loop {
                table.push(self.entry_scoped(fidx, &vals).clone());
                // Odometer over the live positions, last fastest.
                let mut p = live_pos.len();
                loop {
                    if p == 0 {
                        break;
                    }
                    p -= 1;
                    let k = live_pos[p];
                    vals[k] += 1;
                    if vals[k] < self.domains[f.scope[k]] {
                        break;
                    }
                    vals[k] = 0;
                    if p == 0 {
                        p = usize::MAX;
                        break;
                    }
                }
                if p == usize::MAX || live_pos.is_empty() {
                    break;
                }
            }
            let scope: Vec<usize> = live.iter().map(|&v| new_index[v]).collect();
            new_factors.push(Factor::new(scope, table));
        }

        if kept.is_empty() {
            return Ok(Reduced::Scalar(constant));
        }
        if !s.is_one_times(&constant) {
            // Fold the constant into a unary factor on the lowest kept var.
            let d = self.domains[kept[0]];
            new_factors.push(Factor::new(vec![0], vec![constant; d]));
        }
        let domains: Vec<usize> = kept.iter().map(|&v| self.domains[v]).collect();
        let graph = FactorGraph::build(domains, new_factors)?;
        Ok(Reduced::Graph { graph, kept })
    }
}

/// Outcome of [`FactorGraph::reduce`].
#[derive(Debug, Clone)]
pub enum Reduced {
    /// Some variables remain; `kept[new] = old` maps the new indices back.
    Graph { graph: FactorGraph, kept: Vec<usize> },
    /// Every variable was clamped; the whole graph folded to one value.
    Scalar(Value),
}

/// Row-major strides for a sorted scope: last variable fastest.
pub fn row_major_strides(scope: &[usize], domains: &[usize]) -> Vec<usize> {
    let mut strides = vec![1; scope.len()];
    for k in (0..scope.len().saturating_sub(1)).rev() {
        strides[k] = strides[k + 1] * domains[scope[k + 1]];
    }
    strides
}

/// Total assignment count `|X|` of a domain list, capped to avoid overflow.
pub fn assignment_count(domains: &[usize]) -> u128 {
    let mut total: u128 = 1;
    for &d in domains {
        total = total.saturating_mul(d as u128);
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::SemiringSpec;

    fn pair_graph() -> FactorGraph {
        // x0, x1 binary; F(x0,x1) = [[1,2],[3,4]] row-major.
        FactorGraph::build(
            vec![2, 2],
            vec![Factor::new(
                vec![0, 1],
                vec![Value::int(1), Value::int(2), Value::int(3), Value::int(4)],
            )],
        )
        .unwrap()
    }

    #[test]
    fn build_rejects_malformed_factors() {
        let t2 = vec![Value::int(1), Value::int(2)];
        assert!(matches!(
            FactorGraph::build(vec![2], vec![Factor::new(vec![1], t2.clone())]),
            Err(GraphError::ScopeOutOfRange { .. })
        ));
        assert!(matches!(
            FactorGraph::build(vec![2, 2], vec![Factor::new(vec![1, 0], vec![Value::int(0); 4])]),
            Err(GraphError::UnsortedScope { .. })
        ));
        assert!(matches!(
            FactorGraph::build(vec![2], vec![Factor::new(vec![0, 0], vec![Value::int(0); 4])]),
            Err(GraphError::DuplicateInScope { .. })
        ));
        assert!(matches!(
            FactorGraph::build(vec![2], vec![Factor::new(vec![0], vec![Value::int(1); 3])]),
            Err(GraphError::TableSizeMismatch { expected: 2, got: 3, .. })
        ));
        assert!(matches!(
            FactorGraph::build(vec![2], vec![Factor::new(vec![], vec![])]),
            Err(GraphError::EmptyScope { .. })
        ));
        assert!(matches!(
            FactorGraph::build(vec![2, 0], vec![]),
            Err(GraphError::EmptyDomain { var: 1 })
        ));
    }

    #[test]
    fn build_enforces_table_cap() {
        // 2^21 entries over 21 binary variables.
        let scope: Vec<usize> = (0..21).collect();
        let err = FactorGraph::build(
            vec![2; 21],
            vec![Factor::new(scope, vec![Value::int(0); 1 << 21])],
        );
        assert!(matches!(err, Err(GraphError::TableCapExceeded { .. })));
    }

    #[test]
    fn entries_are_row_major_last_fastest() {
        let g = pair_graph();
        assert_eq!(*g.entry(0, &[0, 1]), Value::int(2));
        assert_eq!(*g.entry(0, &[1, 0]), Value::int(3));
    }

    #[test]
    fn evaluate_folds_all_factors() {
        let g = FactorGraph::build(
            vec![2, 2],
            vec![
                Factor::new(vec![0], vec![Value::int(2), Value::int(5)]),
                Factor::new(
                    vec![0, 1],
                    vec![Value::int(1), Value::int(2), Value::int(3), Value::int(4)],
                ),
            ],
        )
        .unwrap();
        let s = SemiringSpec::sum_product();
        assert_eq!(g.evaluate(&s, &[1, 0]).unwrap(), Value::int(15));
        assert!(matches!(
            g.evaluate(&s, &[2, 0]),
            Err(GraphError::ValueOutOfDomain { .. })
        ));
        assert!(matches!(
            g.evaluate(&s, &[0]),
            Err(GraphError::AssignmentLength { .. })
        ));
    }

    #[test]
    fn evaluate_empty_graph_is_expansion_identity() {
        let g = FactorGraph::build(vec![3], vec![]).unwrap();
        let s = SemiringSpec::min_sum();
        assert_eq!(g.evaluate(&s, &[2]).unwrap(), Value::int(0));
    }

    #[test]
    fn markov_blanket_collects_scope_neighbors() {
        let g = FactorGraph::build(
            vec![2, 2, 2, 2],
            vec![
                Factor::new(vec![0, 1], vec![Value::int(1); 4]),
                Factor::new(vec![1, 2], vec![Value::int(1); 4]),
                Factor::new(vec![3], vec![Value::int(1); 2]),
            ],
        )
        .unwrap();
        let mb: Vec<usize> = g.markov_blanket(1).unwrap().into_iter().collect();
        assert_eq!(mb, vec![0, 2]);
        assert!(g.markov_blanket(3).unwrap().is_empty());
    }

    #[test]
    fn tree_detection_accepts_forests_and_rejects_cycles() {
        let chain = FactorGraph::build(
            vec![2, 2, 2],
            vec![
                Factor::new(vec![0, 1], vec![Value::int(1); 4]),
                Factor::new(vec![1, 2], vec![Value::int(1); 4]),
            ],
        )
        .unwrap();
        assert!(chain.is_tree());

        let forest = FactorGraph::build(
            vec![2, 2, 2],
            vec![Factor::new(vec![0, 1], vec![Value::int(1); 4])],
        )
        .unwrap();
        assert!(forest.is_tree());

        let triangle = FactorGraph::build(
            vec![2, 2, 2],
            vec![
                Factor::new(vec![0, 1], vec![Value::int(1); 4]),
                Factor::new(vec![1, 2], vec![Value::int(1); 4]),
                Factor::new(vec![0, 2], vec![Value::int(1); 4]),
            ],
        )
        .unwrap();
        assert!(!triangle.is_tree());

        // A single factor over three variables is still a tree.
        let star = FactorGraph::build(
            vec![2, 2, 2],
            vec![Factor::new(vec![0, 1, 2], vec![Value::int(1); 8])],
        )
        .unwrap();
        assert!(star.is_tree());
    }

    #[test]
    fn reduce_slices_tables_and_keeps_index_map() {
        let g = FactorGraph::build(
            vec![2, 3, 2],
            vec![
                Factor::new(
                    vec![0, 1],
                    (0..6).map(Value::int).collect(),
                ),
                Factor::new(vec![1, 2], (10..16).map(Value::int).collect()),
            ],
        )
        .unwrap();
        let s = SemiringSpec::sum_product();
        let Reduced::Graph { graph, kept } = g.reduce(&s, &[(1, 2)]).unwrap() else {
            panic!("expected a graph");
        };
        assert_eq!(kept, vec![0, 2]);
        assert_eq!(graph.num_vars(), 2);
        assert_eq!(graph.domains(), &[2, 2]);
        // First factor sliced at x1=2: entries f(x0=0,2)=2, f(x0=1,2)=5.
        assert_eq!(graph.factors()[0].scope, vec![0]);
        assert_eq!(
            graph.factors()[0].table,
            vec![Value::int(2), Value::int(5)]
        );
        // Second factor sliced at x1=2: entries 14, 15 over new var 1.
        assert_eq!(graph.factors()[1].scope, vec![1]);
        assert_eq!(
            graph.factors()[1].table,
            vec![Value::int(14), Value::int(15)]
        );
    }

    #[test]
    fn reduce_folds_emptied_factors_into_a_constant() {
        let g = FactorGraph::build(
            vec![2, 2],
            vec![
                Factor::new(vec![0], vec![Value::int(3), Value::int(7)]),
                Factor::new(vec![1], vec![Value::int(1), Value::int(2)]),
            ],
        )
        .unwrap();
        let s = SemiringSpec::sum_product();
        let Reduced::Graph { graph, kept } = g.reduce(&s, &[(0, 1)]).unwrap() else {
            panic!("expected a graph");
        };
        assert_eq!(kept, vec![1]);
        // Factor on old x1 survives; clamped factor contributes constant 7
        // as a uniform unary factor.
        assert_eq!(graph.num_factors(), 2);
        assert_eq!(
            graph.factors()[1].table,
            vec![Value::int(7), Value::int(7)]
        );
        // Evaluating the reduced graph matches slicing the original.
        for x1 in 0..2 {
            assert_eq!(
                graph.evaluate(&s, &[x1]).unwrap(),
                g.evaluate(&s, &[1, x1]).unwrap()
            );
        }
    }

    #[test]
    fn reduce_of_everything_is_a_scalar() {
        let g = pair_graph();
        let s = SemiringSpec::sum_product();
        let Reduced::Scalar(v) = g.reduce(&s, &[(0, 1), (1, 0)]).unwrap() else {
            panic!("expected a scalar");
        };
        assert_eq!(v, Value::int(3));
    }

    #[test]
    fn reduce_rejects_bad_evidence() {
        let g = pair_graph();
        let s = SemiringSpec::sum_product();
        assert!(matches!(
            g.reduce(&s, &[(5, 0)]),
            Err(GraphError::IndexOutOfRange { .. })
        ));
        assert!(matches!(
            g.reduce(&s, &[(0, 2)]),
            Err(GraphError::ValueOutOfDomain { .. })
        ));
        assert!(matches!(
            g.reduce(&s, &[(0, 0), (0, 1)]),
            Err(GraphError::DuplicateEvidence { var: 0 })
        ));
    }
}
