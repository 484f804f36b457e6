//! Hierarchical partial reinitialisation for local optimisers.
//!
//! A local optimiser run from a random start usually stops in a local
//! optimum. Instead of restarting from scratch, the [`engine`] repeatedly
//! resamples only a *subset* of the configuration's variable groups, calls
//! the optimiser again and keeps the result if it is no worse. Subset sizes
//! grow level by level up to a full reinitialisation at the top.
//!
//! Four problem backends ship with the crate:
//!
//! * [`kmeans`]: Lloyd's algorithm, one group per cluster center.
//! * [`kmedoids`]: alternating PAM on a dissimilarity matrix, one group per medoid.
//! * [`hmm`]: Baum-Welch training of a discrete HMM, one group per hidden state.
//! * [`rbm`]: contrastive-divergence training of a small RBM, one group per scalar.
//!
//! [`oracle`] holds brute-force reference computations used to check them.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod engine;
pub mod error;
pub mod hmm;
pub mod kmeans;
pub mod kmedoids;
pub mod oracle;
pub mod rbm;
pub mod rng;

pub use engine::{
    checkpoint_accept, perturb_value, pick_random_subset, required_reinits, run_hierarchy, Budget,
    Configuration, Decision, Hierarchy, Level, LocalOutcome, MLevelParams, PerturbationSpec, Problem,
    ReinitSchedule, RunTrace, SubsetPicker, TraceRecord, UniformSubsets,
};
pub use error::{Error, Result};
