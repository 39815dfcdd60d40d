//! Numerical time-frequency analysis: localization operators, canonical
//! Hermite-diagonal operators, Gabor multipliers, and Toeplitz operators on
//! Bargmann-Fock space, together with the conditioning and lifting
//! experiments built on top of them.

pub mod bargmann;
pub mod error;
pub mod gabor;
pub mod gamma;
pub mod grid;
pub mod hermite;
pub mod lifting;
pub mod operators;
pub mod phase_space;
pub mod quad;
pub mod weights;

pub use error::{CoreError, Result};

pub use bargmann::FockFunction;
pub use gabor::GaborSystem;
pub use gamma::TauSpectrum;
pub use grid::{Grid1d, GridFunction};
pub use hermite::{HermiteBasis, HermiteCoeffs};
pub use lifting::{IsoReport, RatioStats, SolveTrace};
pub use operators::{DenseOperator, DiagonalOperator, TfKernel};
pub use phase_space::{ModNormResult, PhaseField, PhaseGrid};
pub use weights::{EnvelopeReport, RadialWeight, WeightSpec};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
