//! Capacity of a free-space optical link as a function of photodetector
//! area, and the area that maximizes it.
//!
//! A larger detector collects more light but has a lower RC bandwidth
//! (`W = alpha / A`), so capacity rises and then falls with area. This crate
//! evaluates that trade-off for a single detector under thermal noise,
//! under pointing-error and turbulence fading, for EGC and MRC detector
//! arrays, and for an OOK link with signal-dependent shot noise.

pub mod arrays;
pub mod capacity;
pub mod cli;
pub mod error;
pub mod fading;
pub mod physics;
pub mod quad;
pub mod shotnoise;
pub mod special;

pub use error::{Error, Result};
