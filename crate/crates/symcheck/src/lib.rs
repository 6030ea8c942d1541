//! Symbolic model checker for symmetric concurrent systems.
//!
//! Verifies safety properties of guarded-command models with replicated
//! components by forward reachability over BDDs, using dynamic symmetry
//! reduction to explore only orbit representatives. An explicit-state
//! oracle provides ground truth at small scale.

pub mod bdd;
pub mod bench;
pub mod model;
pub mod oracle;
pub mod reach;
pub mod symmetry;

