//! Numerical laboratory for the random walk pinning model.
//!
//! Two independent lattice walks `X` and `Y` interact through their
//! collision local time. The crate computes the objects that control the
//! quenched and annealed critical behaviour of that model:
//!
//! * [`walks`]: increment laws on `Z^d`, exact n-step distributions, local
//!   limit approximants and path sampling.
//! * [`renewal`]: the renewal process whose inter-arrival law is the
//!   normalised return probability of `X - Y`, its mass sequence and
//!   contact-count statistics.
//! * [`pinning`]: quenched and annealed partition functions, free energies
//!   and fractional moments.
//! * [`tilt`]: the long-range penalty kernel used for the change of measure
//!   and the increment correlations under the tilted measure.
//! * [`coarse`]: block-restricted partition functions and the coarse-grained
//!   pinning envelope.
//! * [`experiment`]: config-driven, seeded, reproducible experiment runner.

// index loops mirror the recurrences; negated comparisons reject NaN
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod coarse;
pub mod conv;
pub mod error;
pub mod experiment;
pub mod lattice;
pub mod pinning;
pub mod renewal;
pub mod rng;
pub mod stats;
pub mod tilt;
pub mod walks;

pub use error::{Error, Result};
pub use lattice::{Point, MAX_DIM};
