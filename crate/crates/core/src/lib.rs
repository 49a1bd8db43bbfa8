//! Exact labeled-copy census on bitset graphs, testers for the classical
//! quasi-randomness properties, and estimators that recover the number of
//! pattern copies in a vertex set from counts measured on larger sets.
//!
//! All counts are of *labeled* copies: injective maps from the pattern's
//! vertices into the host that send every pattern edge to a host edge. A
//! triangle in the host therefore contributes 6 copies of `K_3`, and an edge
//! contributes 2 copies of `K_2`.

pub mod census;
pub mod cli;
pub mod error;
pub mod exec;
pub mod graph;
pub mod quasitest;
pub mod reconstruct;
pub mod report;
pub mod rng;

pub use census::{
    brute_force_count, count_cut, count_edges_within, count_labeled_copies, stratified_census,
    StratifiedCensus,
};
pub use error::{Error, Result};
pub use exec::Strategy;
pub use graph::{GenSpec, Graph, Pattern, VertexSubset};
pub use quasitest::{DensityParams, DeviationReport, TestOptions, Verdict};
pub use reconstruct::{ReconstructOptions, ReconstructionReport, VandermondeSystem};
