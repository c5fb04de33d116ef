//! Grounding of MCM rules and the order-tracking engine that guards
//! operations and decides admissibility.

mod engine;
mod ground;

pub use engine::{Engine, Mode};
pub use ground::{ground_rules, AtomIds, GroundRule, Grounding};
