//! Exact and large-scale evaluation of bilinear Jacobi-symbol sums
//!
//! ```text
//!     Σ*  (nm)^c a_n b_m (n/m)
//!   z < n, m ≤ T
//!     nm ≤ T
//! ```
//!
//! over hyperbolic regions, where `Σ*` runs over odd square-free integers.
//!
//! The crate is organised bottom-up:
//!
//! * [`arith`] – the binary Jacobi symbol kernel and its test oracles.
//! * [`sieve`] – segmented Möbius / totient / smallest-prime-factor tables.
//! * [`sequences`] – bounded coefficient sequences `a_n`, `b_m` and power weights.
//! * [`regions`] – hyperbolic regions, their four-way splittings, dyadic and
//!   equal-width covers.
//! * [`sums`] – the deterministic parallel sum engine (exact `i128` mode where
//!   the coefficients allow it).
//! * [`perron`] – the truncated Perron integral used to remove the hyperbolic
//!   height condition, evaluated by panel quadrature.
//! * [`analysis`] – constants, mean-value checks, lower-bound experiments and
//!   cancellation-exponent fits.

pub mod analysis;
pub mod arith;
mod error;
mod par;
pub mod perron;
pub mod regions;
pub mod report;
pub mod sequences;
pub mod sieve;
pub mod sums;

pub use error::{Error, Result};

pub use arith::{euler_criterion_oracle, jacobi_symbol, reciprocity_sign, JacobiValue};
pub use regions::{Block, EqualWidthCover, HyperbolicRegion, Interval, Restriction};
pub use sequences::{BoundedSequence, PowerWeight};
pub use sieve::SieveTable;
pub use sums::{SumResult, SumValue, TermWeight};
