//! Query plans and bag-semantics evaluation.

pub mod eval;
pub mod plan;
pub mod predicate;
pub mod schema;

pub use eval::{evaluate, evaluate_all};
pub use plan::{AggFn, FlattenKind, JoinKind, OpId, OpKind, Operator, Params, QueryPlan};
pub use predicate::{CmpOp, Comparison, Operand, Predicate, Side};
pub use schema::{infer_schema, root_type, Database, DbSchema};
