//! Conditional ball divergence (cBD) for testing X ⊥ Y | Z.
//!
//! The statistic compares, at every sample point, the kernel-smoothed law of X
//! given (Y, Z) with the kernel-smoothed law of X given Z through the ball
//! divergence, and averages the result. Calibration is by resampling: the
//! conditional randomization test, the conditional permutation test, the
//! local wild bootstrap and the discrete local bootstrap.
//!
//! ```
//! use cbd_core::{datagen, estimator, kernels, rng};
//!
//! let spec = datagen::ScenarioSpec::new("ex4a", 50).with_r(1.0);
//! let ds = datagen::gen_scenario(&spec, &mut rng::rng_from_seed(7)).unwrap();
//! let bw = kernels::default_bandwidths(&ds).unwrap();
//! let stat = estimator::cbd_vstat(
//!     &ds,
//!     bw,
//!     kernels::KernelSpec::epanechnikov(),
//!     estimator::WeightFunction::One,
//! )
//! .unwrap();
//! assert!(stat.value >= 0.0 && stat.value <= 2.0);
//! ```

pub mod ball;
pub mod data;
pub mod datagen;
pub mod error;
pub mod estimator;
pub mod harness;
pub mod inference;
pub mod kernels;
pub mod par;
pub mod resampling;
pub mod rng;

pub use data::{Dataset, DistanceMatrix, DistanceOrder, Matrix, RoleMap};
pub use error::{CbdError, Result};
pub use datagen::{gen_scenario, ScenarioSpec};
pub use estimator::{CbdStatistic, EstimatorConfig, EstimatorKind, WeightFunction};
pub use inference::{run_test, KsResult, TestResult};
pub use kernels::{Bandwidths, KernelSpec};
pub use resampling::{ConditionalSampler, ResampleMethod, ResamplePlan};

