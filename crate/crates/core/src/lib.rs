//! Search for symbolic feedback-control laws on coupled van der Pol
//! oscillators, and analysis of the laws found.
//!
//! The crate is `no_std` (with `alloc`) apart from the analytic-signal code
//! in [`analysis`], which needs an FFT and is enabled by the default `std`
//! feature.
//!
//! Module map:
//!
//! - [`expr`]: typed expression trees, random generation, evaluation, parsing
//! - [`gp`]: multi-objective genetic programming (NSGA-II, varOr breeding,
//!   constant optimisation)
//! - [`dynsys`]: oscillator networks and Dormand–Prince integration
//! - [`analysis`]: observed frequencies, Kuramoto order, cost functionals,
//!   Arnold-tongue sweeps
//! - [`averaging`]: the averaged amplitude/phase system of the `-k·ẋ0`
//!   controlled pair
//! - [`continuation`]: Newton correction and pseudo-arclength path following

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod analysis;
pub mod averaging;
pub mod continuation;
pub mod dynsys;
mod error;
pub mod expr;
pub mod gp;
pub mod linalg;
mod math;
pub mod parallel;

pub use error::{Error, Result};

/// Cost assigned to anything that diverged or produced a non-finite value.
///
/// Finite so that crowding distances and medians stay well defined.
pub const WORST_COST: f64 = 1.0e100;
