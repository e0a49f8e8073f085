//! Local Rademacher complexity calibration on exactly solvable finite
//! instances: localized Rademacher averages (exact and Monte Carlo), sub-root
//! fixed points, explicit-constant error-bound calculators, weighted-ERM
//! reductions for classification losses, kernel spectrum bounds, and a
//! seeded validation harness.
//!
//! The numeric core is generic over the scalar type via [`Real`]
//! (`f32`/`f64`); the crate root exports `f64` aliases for the main types.

// Guards written as `!(x > 0)` deliberately reject NaN inputs; the
// suggested `x <= 0` would silently accept them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod classification;
pub mod empirical;
pub mod error;
pub mod grid;
pub mod harness;
pub mod io;
pub mod kernel;
pub mod oracle;
pub mod rademacher;
pub mod real;
pub mod rng;
pub mod subroot;

pub use error::{Error, Result};
pub use real::Real;

/// `f64` aliases for the core types.
pub type DiscreteDistribution = empirical::DiscreteDistribution<f64>;
pub type TabulatedClass = empirical::TabulatedClass<f64>;
pub type StarHullSpec = empirical::StarHullSpec<f64>;
pub type SampleSet = empirical::SampleSet;
pub type SigmaVector = empirical::SigmaVector;
pub type RademacherEstimate = rademacher::RademacherEstimate<f64>;
pub type LocalizedSigmaCache = rademacher::LocalizedSigmaCache<f64>;
pub type SubRootEvaluator = subroot::SubRootEvaluator<f64>;
pub type FixedPointResult = subroot::FixedPointResult<f64>;
pub type BoundParams = bounds::BoundParams<f64>;
pub type BoundReport = bounds::BoundReport<f64>;
pub type LabeledSample = classification::LabeledSample;
pub type ErmOracle = classification::ErmOracle<f64>;
pub type KernelSpec = kernel::KernelSpec<f64>;
pub type GramMatrix = kernel::GramMatrix<f64>;
pub type EigenSpectrum = kernel::EigenSpectrum<f64>;
pub type TrialConfig = harness::TrialConfig<f64>;
pub type TrialReport = harness::TrialReport<f64>;
