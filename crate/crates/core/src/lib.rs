//! Spike localization and operator recovery for measurement families built
//! from convolution and product-convolution kernels.
//!
//! The crate is organised around five areas:
//!
//! * [`family`]: sampling grids, filters, modulators and the response matrix
//!   `E(x)` that maps operator coordinates to the measurement of a point
//!   source at `x`.
//! * [`geometry`]: projectors onto `ran E(x)`, the decorrelation profile
//!   `phi`, its monotone envelopes and quantiles, and the derived stability
//!   bounds.
//! * [`localize`]: the projected-energy objective, single-spike estimation and
//!   greedy multi-peak detection.
//! * [`recover`]: operator coefficients from localized spikes, with known or
//!   unknown weights.
//! * [`experiments`]: the configuration-driven experiment harness used by the
//!   `spikeloc` binary.

pub mod error;
pub mod experiments;
pub mod family;
pub mod geometry;
pub mod linalg;
pub mod localize;
pub mod optimize;
pub mod recover;
pub mod seeds;

pub use error::{Error, Result};
