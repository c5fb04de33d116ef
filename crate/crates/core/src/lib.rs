//! Bounded model checking of concurrent programs under memory consistency
//! models given as order-constraint rules over instruction lifecycles.

pub mod constraints;
pub mod corpus;
pub mod explore;
pub mod lang;
pub mod lex;
pub mod mcm;
pub mod semantics;
