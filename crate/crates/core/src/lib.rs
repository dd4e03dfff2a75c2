//! Completion of finite-state protocol automata.
//!
//! Given partial input-output automata (typically distilled from scenario
//! descriptions) and a closed environment, the crate searches for added
//! transitions making the composition deadlock-free, safe, live, and
//! non-blocking. Two engines are provided: pruned explicit search over
//! candidate transition sets and a symbolic engine over binary decision
//! diagrams with parameter variables. A polynomial reduction from 3SAT to
//! completion doubles as a SAT solving path and a cross-validation oracle.

pub mod automata;
pub mod bdd;
pub mod cli;
pub mod compose;
pub mod event;
pub mod fixtures;
pub mod manifest;
pub mod reduction;
pub mod scenarios;
pub mod search;
pub mod symbolic;
pub mod verify;
