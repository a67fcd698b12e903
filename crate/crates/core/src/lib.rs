//! Exponential-weight averaging of a restricted and an unrestricted
//! least-squares estimator in the Gaussian linear model, together with the
//! exact finite-sample and limiting distributions of the scaled estimation
//! error, exact samplers, and experiments that probe how well those
//! distributions can be estimated.
//!
//! Module map:
//!
//! * [`design`]: partitioned design algebra (projections, symmetric roots,
//!   the coefficient matrices of the stochastic representation).
//! * [`shrink`]: the radial shrinkage map, its inverse and Jacobian.
//! * [`estimator`]: least squares under both models, risk estimates, weight.
//! * [`laws`]: densities, CDFs and L1 distances of the finite and limit laws.
//! * [`sampling`]: reproducible samplers and Kolmogorov-Smirnov distances.
//! * [`cdf_estimation`]: the plug-in CDF estimator and non-uniformity runs.
//! * [`convergence`]: sample-size ladders and consistency sweeps.

pub mod cdf_estimation;
pub mod convergence;
pub mod design;
pub mod error;
pub mod estimator;
pub mod laws;
pub mod normal;
pub mod quadrature;
pub mod sampling;
pub mod shrink;
pub mod table;

pub use design::{sym_sqrt, LimitDesign, PartitionedDesign};
pub use error::{Error, Result};
pub use cdf_estimation::{ModelSelector, SelectedModel, SelectorRule};
pub use convergence::{PathRule, Regime};
pub use design::DesignRule;
pub use estimator::{model_average, AveragingConfig, EstimateBundle};
pub use laws::{AsymptoticLaw, FiniteSampleLaw, Gamma, Law};
pub use sampling::{Representation, SampleBatch};
pub use shrink::ShrinkMap;
pub use table::{ResultTable, Value};

/// Library version, recorded in experiment manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
