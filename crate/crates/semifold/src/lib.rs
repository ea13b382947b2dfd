//! Factor-graph inference over commutative semirings.
//!
//! The same message-passing and enumeration machinery answers different
//! questions depending on the pair of operations it runs over: sum-product
//! for marginals and partition functions, min-sum for energy minimization,
//! max-product for most-probable assignments, min-max for bottleneck
//! objectives, or-and for satisfiability, xor-and for parity. This crate
//! makes the algebra a value, not a type parameter baked into each solver:
//!
//! - [`algebra`]: values, the six bundled semirings, normalization.
//! - [`graph`]: factor graphs, evaluation, reduction, structure checks.
//! - [`query`]: nested marginalization queries and their complexity.
//! - [`exact`]: streaming exact evaluation and closed-form integrals.
//! - [`cnf`]: CNF formulas as constraint factor graphs.
//! - [`bp`]: belief propagation, exact on trees, damped/seeded on loops.
//! - [`sp`]: survey propagation over the message space of BP.
//! - [`sat`]: SP-guided decimation for SAT.
//! - [`format`]: the factor-graph text format and DIMACS CNF.
//! - [`cli`]: the `semifold` command-line interface.
//!
//! Start with the runnable examples (`cargo run --example tree_bp`) for a
//! tour of the API.

pub mod algebra;
pub mod bp;
pub mod cli;
pub mod cnf;
pub mod exact;
pub mod format;
pub mod graph;
pub mod query;
pub mod sat;
pub mod sp;
pub mod value;

pub use algebra::{registry_lookup, OpTag, SemiringSpec};
pub use exact::MarginalTable;
pub use graph::{Factor, FactorGraph};
pub use query::{classify, parse_query, Query};
pub use value::Value;
