//! The policy language: attribute data, expressions, constraints, rules and
//! their meanings.

mod data;
mod evaluator;
mod policy;
mod rule;
pub mod semantics;
mod universe;

pub use data::{AttrKind, AttrValue, AttributeData, AttributeSchema, Entity, EntitySpec, Side, RID, UID};
pub use evaluator::Evaluator;
pub use policy::AbacPolicy;
pub use rule::{rules_wsc, AtomicConstraint, AttrExpr, Conjunct, Rule, WscWeights};
pub use universe::{TupleSet, Universe, UpTuple};
