//! A laboratory for adaptive multiway Quickselect.
//!
//! The crate pairs executable, cost-instrumented selection algorithms with
//! the analytic machinery that predicts their costs: closed-form
//! leading-term coefficients, a numerical fixed-point solver for the
//! fixed-quantile cost function of arbitrary adaptive policies, and a
//! Monte-Carlo harness that cross-validates measurements against the
//! predictions.
//!
//! Costs are tracked in three measures: key comparisons, scanned elements
//! (array cells visited by scanning indices, a proxy for memory transfers),
//! and write accesses.

pub mod analytic;
pub mod bench;
pub mod engine;
mod error;
pub mod input;
pub mod partition;
pub mod scheme;
pub mod solver;
pub mod tally;

pub use engine::{quickselect, AlgorithmPreset, SelectionResult, SimulationVariant};
pub use error::{Error, Result};
pub use input::{make_input, resolve_rank, rng_from_seed, trial_rng, RankSpec, SelectRng};
pub use partition::{
    bby_partition, betabinomial_pmf, hoare_partition, sample_pivots, waterloo_partition,
    ybb_partition, PartitionOutcome, SampleSelection,
};
pub use scheme::{AdaptivePolicy, PartitionMethod, PolicySegment, SamplingScheme};
pub use tally::{CostMeasure, CostTally};
