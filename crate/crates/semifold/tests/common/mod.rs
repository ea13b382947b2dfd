//! Reference oracles and instance generators for the integration suites.
//!
//! The oracles answer queries from first principles: materialize the full
//! expanded tensor, or enumerate every assignment, with index arithmetic
//! written here. They deliberately share no reduction path with the
//! engines under test; only the scalar `Value` arithmetic is common.

#![allow(dead_code)]

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use semifold::algebra::{OpTag, SemiringSpec};
use semifold::cnf::{Cnf, Literal};
use semifold::graph::{Factor, FactorGraph};
use semifold::query::Query;
use semifold::value::Value;
use std::collections::BTreeSet;

/// Apply one marginalization or expansion operation to a pair.
pub fn apply_op(op: OpTag, a: &Value, b: &Value) -> Value {
    match op {
        OpTag::Sum => a.add(b).expect("oracle operands are compatible"),
        OpTag::Prod => a.mul(b).expect("oracle operands are compatible"),
        OpTag::Min => a.min_choice(b).expect("oracle operands are comparable"),
        OpTag::Max => a.max_choice(b).expect("oracle operands are comparable"),
        OpTag::Or | OpTag::And | OpTag::Xor => {
            let (Value::Bool(x), Value::Bool(y)) = (a, b) else {
                panic!("boolean op over non-boolean values");
            };
            Value::Bool(match op {
                OpTag::Or => *x || *y,
                OpTag::And => *x && *y,
                _ => *x ^ *y,
            })
        }
    }
}

/// A dense tensor over a sorted subset of the variables, row-major with
/// the last axis fastest. All strides are computed here.
pub struct Tensor {
    pub vars: Vec<usize>,
    pub dims: Vec<usize>,
    pub data: Vec<Value>,
}

impl Tensor {
    fn index(&self, assign: &[usize]) -> usize {
        // assign is the full assignment; project onto this tensor's vars.
        let mut idx = 0;
        for (k, &v) in self.vars.iter().enumerate() {
            idx = idx * self.dims[k] + assign[v];
        }
        idx
    }
}

fn all_assignments(dims: &[usize]) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for &d in dims {
        let mut next = Vec::with_capacity(out.len() * d);
        for prefix in &out {
            for v in 0..d {
                let mut row = prefix.clone();
                row.push(v);
                next.push(row);
            }
        }
        out = next;
    }
    out
}

/// The expanded form as a full tensor over all variables.
pub fn expand_full(fg: &FactorGraph, expand: OpTag) -> Tensor {
    let dims: Vec<usize> = fg.domains().to_vec();
    let vars: Vec<usize> = (0..fg.num_vars()).collect();
    let mut data = Vec::new();
    for assign in all_assignments(&dims) {
        let mut acc: Option<Value> = None;
        for f in fg.factors() {
            // Own stride arithmetic over the factor's scope.
            let mut idx = 0;
            for &v in &f.scope {
                idx = idx * fg.domains()[v] + assign[v];
            }
            let cell = &f.table[idx];
            acc = Some(match acc {
                None => cell.clone(),
                Some(a) => apply_op(expand, &a, cell),
            });
        }
        data.push(acc.expect("oracle graphs have at least one factor"));
    }
    Tensor { vars, dims, data }
}

/// Fold one level's variables out of the tensor.
pub fn reduce_level(t: &Tensor, op: OpTag, drop: &BTreeSet<usize>) -> Tensor {
    let kept: Vec<usize> = t.vars.iter().copied().filter(|v| !drop.contains(v)).collect();
    let kept_dims: Vec<usize> = kept
        .iter()
        .map(|v| t.dims[t.vars.iter().position(|x| x == v).unwrap()])
        .collect();
    let mut data: Vec<Option<Value>> = vec![None; kept_dims.iter().product::<usize>().max(1)];
    // Enumerate the source tensor cell by cell and fold into the target.
    let full_dims = t.dims.clone();
    for assign in all_assignments(&full_dims) {
        // assign indexes t.vars positionally; build a full map.
        let mut full = vec![0usize; t.vars.iter().copied().max().map_or(0, |m| m + 1)];
        for (k, &v) in t.vars.iter().enumerate() {
            full[v] = assign[k];
        }
        let src = &t.data[t.index(&full)];
        let mut dst = 0;
        for (k, &v) in kept.iter().enumerate() {
            dst = dst * kept_dims[k] + full[v];
        }
        data[dst] = Some(match data[dst].take() {
            None => src.clone(),
            Some(a) => apply_op(op, &a, src),
        });
    }
    Tensor {
        vars: kept,
        dims: kept_dims,
        data: data
            .into_iter()
            .map(|v| v.expect("every cell folds at least one value"))
            .collect(),
    }
}

/// Reference answer for a query: full expansion, then levels folded
/// innermost (last) to outermost (first). Returns the free-variable table
/// row-major, matching the engine's output layout contract.
pub fn naive_query(fg: &FactorGraph, q: &Query) -> Vec<Value> {
    let mut t = expand_full(fg, q.expand);
    for level in q.levels.iter().rev() {
        if level.vars.is_empty() {
            continue;
        }
        t = reduce_level(&t, level.op, &level.vars);
    }
    t.data
}

/// Exhaustive variable marginal: fold the expanded form over everything
/// but `var`.
pub fn brute_marginal(fg: &FactorGraph, s: &SemiringSpec, var: usize) -> Vec<Value> {
    let t = expand_full(fg, s.expand);
    let drop: BTreeSet<usize> = (0..fg.num_vars()).filter(|&v| v != var).collect();
    reduce_level(&t, s.marg, &drop).data
}

/// Exhaustive integral of the expanded form.
pub fn brute_integral(fg: &FactorGraph, s: &SemiringSpec) -> Value {
    let t = expand_full(fg, s.expand);
    let mut acc = t.data[0].clone();
    for v in &t.data[1..] {
        acc = apply_op(s.marg, &acc, v);
    }
    acc
}

/// Division written here so normalization shares nothing with the
/// engine's inverse.
fn oracle_div(a: &Value, b: &Value) -> Value {
    match (a, b) {
        (Value::Rational(x), Value::Rational(y)) => Value::Rational(x / y),
        _ => {
            let (x, y) = (a.to_f64().unwrap(), b.to_f64().unwrap());
            Value::from_f64(x / y).expect("finite ratio")
        }
    }
}

/// Normalize a vector the way the engine reports beliefs: divide (or
/// subtract) out the folded total for invertible semirings, pass through
/// otherwise. Uses scalar arithmetic only.
pub fn oracle_normalize(s: &SemiringSpec, vec: &[Value]) -> Vec<Value> {
    if !s.invertible {
        return vec.to_vec();
    }
    let mut total = vec[0].clone();
    for v in &vec[1..] {
        total = apply_op(s.marg, &total, v);
    }
    vec.iter()
        .map(|v| match s.expand {
            OpTag::Sum => v.sub(&total).expect("min-sum values subtract"),
            OpTag::Prod => oracle_div(v, &total),
            OpTag::Xor => apply_op(OpTag::Xor, v, &total),
            _ => v.clone(),
        })
        .collect()
}

/// Check a CNF assignment clause by clause, independently of `Cnf`
/// helpers.
pub fn check_sat(cnf: &Cnf, assign: &[bool]) -> bool {
    cnf.clauses.iter().all(|clause| {
        clause
            .iter()
            .any(|l| if l.positive { assign[l.var] } else { !assign[l.var] })
    })
}

// ---------------------------------------------------------------------
// Instance generators. All deterministic given the seed.

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random positive rational in (0, max_num].
pub fn positive_rational(rng: &mut ChaCha8Rng, max_num: i64) -> Value {
    Value::ratio(rng.gen_range(1..=max_num), rng.gen_range(1..=4))
}

/// Random rational, sign included.
pub fn signed_rational(rng: &mut ChaCha8Rng, span: i64) -> Value {
    Value::ratio(rng.gen_range(-span..=span), rng.gen_range(1..=4))
}

/// Random factor graph: `n` variables with domains in 2..=max_dom and
/// `factors` random scopes of arity 1..=3. Values drawn by `sample`.
pub fn gen_graph(
    rng: &mut ChaCha8Rng,
    n: usize,
    max_dom: usize,
    factors: usize,
    sample: &mut dyn FnMut(&mut ChaCha8Rng) -> Value,
) -> FactorGraph {
    let domains: Vec<usize> = (0..n).map(|_| rng.gen_range(2..=max_dom)).collect();
    let mut fs = Vec::with_capacity(factors);
    for _ in 0..factors {
        let arity = rng.gen_range(1..=3.min(n));
        let mut scope = BTreeSet::new();
        while scope.len() < arity {
            scope.insert(rng.gen_range(0..n));
        }
        let scope: Vec<usize> = scope.into_iter().collect();
        let len: usize = scope.iter().map(|&v| domains[v]).product();
        let table: Vec<Value> = (0..len).map(|_| sample(rng)).collect();
        fs.push(Factor { scope, table });
    }
    FactorGraph::build(domains, fs).expect("generated graphs are valid")
}

/// Random tree-shaped factor graph: each new variable hangs off an
/// earlier one through a pairwise factor; a few unary factors sprinkle on
/// top. Every variable and factor stays in one connected acyclic graph.
pub fn gen_tree(
    rng: &mut ChaCha8Rng,
    max_vars: usize,
    max_dom: usize,
    sample: &mut dyn FnMut(&mut ChaCha8Rng) -> Value,
) -> FactorGraph {
    let n = rng.gen_range(2..=max_vars);
    let domains: Vec<usize> = (0..n).map(|_| rng.gen_range(2..=max_dom)).collect();
    let mut fs = Vec::new();
    for v in 1..n {
        let parent = rng.gen_range(0..v);
        let scope = vec![parent.min(v), parent.max(v)];
        let len = domains[scope[0]] * domains[scope[1]];
        fs.push(Factor {
            scope,
            table: (0..len).map(|_| sample(rng)).collect(),
        });
    }
    for _ in 0..rng.gen_range(0..=2) {
        let v = rng.gen_range(0..n);
        fs.push(Factor {
            scope: vec![v],
            table: (0..domains[v]).map(|_| sample(rng)).collect(),
        });
    }
    FactorGraph::build(domains, fs).expect("generated trees are valid")
}

/// Uniform random 3-SAT with distinct variables per clause.
pub fn gen_3sat(rng: &mut ChaCha8Rng, n: usize, m: usize) -> Cnf {
    let mut clauses = Vec::with_capacity(m);
    for _ in 0..m {
        let mut vars = BTreeSet::new();
        while vars.len() < 3 {
            vars.insert(rng.gen_range(0..n));
        }
        clauses.push(
            vars.into_iter()
                .map(|v| {
                    if rng.gen_bool(0.5) {
                        Literal::pos(v)
                    } else {
                        Literal::neg(v)
                    }
                })
                .collect(),
        );
    }
    Cnf::new(n, clauses)
}

/// Random query text over `n` variables: 1..=3 levels with ops from
/// {sum, min, max}, a random expansion, variables split between levels
/// and free.
pub fn gen_query_text(rng: &mut ChaCha8Rng, n: usize) -> String {
    let level_count = rng.gen_range(1..=3.min(n));
    let marg_ops = ["sum", "min", "max"];
    let expand_ops = ["prod", "sum", "min", "max"];
    // Shuffle variables and cut into level slices plus a free remainder.
    let mut vars: Vec<usize> = (0..n).collect();
    for i in (1..vars.len()).rev() {
        vars.swap(i, rng.gen_range(0..=i));
    }
    let mut cuts = BTreeSet::new();
    while cuts.len() < level_count - 1 {
        cuts.insert(rng.gen_range(1..n));
    }
    let mut slices = Vec::new();
    let mut start = 0;
    for &c in &cuts {
        slices.push(&vars[start..c]);
        start = c;
    }
    // The last level takes at least one variable; the rest stay free.
    let take = rng.gen_range(1..=(n - start));
    slices.push(&vars[start..start + take]);

    let mut text = String::new();
    let mut prev_op = usize::MAX;
    for (i, slice) in slices.iter().enumerate() {
        if i > 0 {
            text.push(';');
        }
        // Consecutive levels must alternate operations or they would fold
        // into one level.
        let mut op = rng.gen_range(0..marg_ops.len());
        while op == prev_op {
            op = rng.gen_range(0..marg_ops.len());
        }
        prev_op = op;
        text.push_str(marg_ops[op]);
        text.push_str("@{");
        for (k, v) in slice.iter().enumerate() {
            if k > 0 {
                text.push(',');
            }
            text.push_str(&v.to_string());
        }
        text.push('}');
    }
    text.push_str("::");
    text.push_str(expand_ops[rng.gen_range(0..expand_ops.len())]);
    text
}
