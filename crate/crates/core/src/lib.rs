//! Hitting times, local dimensions and Birkhoff sums for exactly simulated
//! hyperbolic maps, rotations and interval exchanges.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod birkhoff;
pub mod dimension;
pub mod error;
pub mod hitting;
pub mod lab;
pub mod metric;
pub mod seed;
pub mod systems;

pub use error::{Error, Result};
pub use metric::{DyadicSchedule, Fixed, Rational, ScalingEstimate, SpacePoint};
pub use systems::{MapSystem, SystemDescriptor};
