//! Monte Carlo laboratory for the expected number of nodal components of
//! planar stationary Gaussian fields and of arithmetic random waves on the
//! flat torus.
//!
//! The crate is organised bottom-up:
//!
//! * [`measure`]: atomic spectral probability measures on the unit disk.
//! * [`lattice`]: lattice points on circles `a² + b² = n` and the angular
//!   measures they induce.
//! * [`synthesis`]: exact trigonometric-sum and FFT sampling of Gaussian fields.
//! * [`topology`]: marching-squares / union-find census of nodal components,
//!   nodal domains and flips.
//! * [`estimation`]: Monte Carlo estimators, sweeps and fits.
//! * [`cli`]: experiment recipes, configuration and result persistence used by
//!   the `nodal-lab` binary.
//!
//! Constants are normalized by `R²` (not by the disk area `πR²`). Torus counts
//! are reported per `R²` of the disk with the same area as the rescaled torus,
//! i.e. as `π·N/n`, so planar and toral numbers are directly comparable.

pub mod cli;
pub mod error;
pub mod estimation;
pub mod lattice;
pub mod measure;
pub mod seed;
pub mod synthesis;
pub mod topology;

pub use error::{Error, Result};
pub use estimation::{EstimateResult, SweepResult, TrialRecord};
pub use lattice::LatticeSolutionSet;
pub use measure::SpectralMeasure;
pub use synthesis::FieldSample;
pub use topology::ComponentCount;
