//! Knockoff-based selection of features that carry signal in several
//! studies at once, with finite-sample control of the false discovery
//! rate among the reported features.
//!
//! The pipeline has three stages, each usable on its own:
//!
//! 1. [`knockoff`] builds a synthetic copy of each study's design matrix
//!    whose columns mimic the originals' correlation structure but are
//!    conditionally independent of the response.
//! 2. [`stats`] fits a lasso to the augmented design and measures each
//!    feature against its knockoff; [`combine`] folds the per-study
//!    measurements into one signed score per feature whose sign is
//!    symmetric under swapping a null feature with its knockoff.
//! 3. [`filter`] picks the data-driven score threshold that caps the
//!    estimated false discovery proportion at the requested level.
//!
//! [`methods`] wires the stages into ready-made procedures (simultaneous,
//! pooled, and per-study intersection selection), [`sim`] provides a
//! Monte-Carlo harness for measuring their realized FDR and power, and
//! [`diagnostics`] estimates how far a knockoff sampler deviates from
//! the exchangeability it promises.

pub mod combine;
pub mod design;
pub mod diagnostics;
pub mod error;
pub mod filter;
pub mod knockoff;
pub mod lasso;
mod linalg;
pub mod methods;
pub mod screen;
pub mod seed;
pub mod sim;
pub mod stats;

pub use combine::{CombinerSpec, FilterStats, MAX_PARITY_STUDIES};
pub use design::{check_shared_columns, DesignMatrix, Experiment, Family};
pub use diagnostics::{kl_hat_gaussian, kl_report, KlReport, KlStudy};
pub use error::{Error, Result};
pub use filter::{fdp_estimate, knockoff_threshold, select, SelectionReport};
pub use knockoff::{
    construct_fixed_x, construct_model_x_gaussian, construct_second_order, equicorrelated_s,
    ConstructionMethod, GaussianModel, KnockoffCopy,
};
pub use lasso::{cross_validate_lambda, lasso_fit, lasso_path_fit, CvResult, LassoFit};
pub use methods::{
    run_intersection, run_pooling, run_simultaneous, ConstructionSpec, Method, MethodReport,
    MethodResult,
};
pub use screen::{sis_screen, ScreenResult};
pub use sim::{ar1_covariance, run_grid, MCResult, Scenario, Setting, SimConfig, TruthTable};
pub use stats::{abs_coef_stats, path_entry_stats, StatisticKind, ZStats};
