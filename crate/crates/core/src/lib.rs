//! Contaminated Gibbs-type priors.
//!
//! Exact partition probabilities and predictive rules for the contaminated
//! Pitman-Yor and Dirichlet processes, generative samplers, closed-form
//! expectations of cluster-count statistics, and two MCMC engines: one for
//! species frequency data and one for Gaussian mixtures with outliers.

pub mod cgp;
pub mod conditionals;
pub mod diagnostics;
pub mod error;
pub mod gibbs;
pub mod mixture;
pub mod numerics;
pub mod partition;
pub mod species;
pub mod stats;
pub mod synthetic;

pub use cgp::{CgpParams, FrequencyVector, LabeledSequence, LatentSingletonState, SourceRelation};
pub use error::{Error, Result};
pub use gibbs::{GibbsFamily, GibbsWeights};
