//! Feature-importance stability laboratory.
//!
//! Measures how random-forest Gini importance rankings drift when model
//! performance is degraded by removing samples ("data cutting") versus removing
//! the most important features ("feature cutting"), and evaluates the
//! combinatorial model of when a training sample can distinguish two features.
//!
//! Module map:
//!
//! - [`dataset`]: synthetic generation, CSV ingestion, subsampling, correlation pruning
//! - [`forest`]: CART random forest with mean-decrease-impurity importance
//! - [`metrics`]: ROC-AUC, rank vectors and the four stability indexes
//! - [`stats`]: Shapiro-Wilk, paired t, Wilcoxon rank-sum, OLS and derived analyses
//! - [`degradation`]: bootstrap experiments and the cutting schedules
//! - [`theory`]: essential-sample probability, Gaussian window analysis, Monte-Carlo oracle

pub mod dataset;
pub mod degradation;
mod error;
pub mod forest;
pub mod metrics;
pub mod seed;
pub mod stats;
pub mod theory;

pub use dataset::{Dataset, FeatureMatrix, PruneLog, SyntheticSpec};
pub use degradation::{
    Algorithm, DegradationTrace, ExperimentConfig, ExperimentResult, TerminationReason,
};
pub use error::{Error, Result};
pub use forest::{ForestHyperparams, ForestModel, MaxFeatures};
pub use metrics::{RankVector, StabilityIndex, StabilityIndexes};
pub use stats::{AdjacencyReport, RegressionResult, TestMethod, TestResult};
pub use theory::TheoryParams;
