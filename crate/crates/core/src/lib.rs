//! Exact and floating transfer operators for the quadratic greedy beta-map
//! `T(x) = beta x mod 1` with `beta^2 = a0 beta + a1`.
//!
//! Everything exact lives in `Q(beta)` ([`QuadNum`]); functions are piecewise
//! polynomials on `[0, 1]` ([`PiecewisePoly`]). Floating engines cover general
//! smooth inputs.

pub mod asymptotics;
pub mod bernoulli;
pub mod error;
pub mod field;
pub mod functions;
pub mod partition;
pub mod piecewise;
pub mod poly;
pub mod spectral;
pub mod transfer;

pub use asymptotics::{epsilon_of, fit_log_slope, Expansion, ResidualSeries, TheoremParams};
pub use bernoulli::{BernoulliTable, EBExpansion};
pub use error::{Error, Result};
pub use field::{BetaParams, QuadNum, Rational};
pub use functions::{Builtin, Smooth, SmoothMp};
pub use partition::{BuildingBlock, LevelPartition, PartitionPoint};
pub use piecewise::{PiecewisePoly, SupNorm};
pub use poly::Polynomial;
pub use spectral::{PsiBasis, QMatrix, RestrictionMatrix, SpectralData};
pub use transfer::{GreedyDigits, PointwiseEngine};

/// Crate version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
