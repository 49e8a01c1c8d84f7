//! Skellam distribution, Stein's method for Skellam approximation, and exact
//! total variation checks of two approximation results.
//!
//! Every numeric routine is generic over [`Real`] (`f32` or `f64`); the
//! aliases below fix the scalar to the common choices.

pub mod error;
pub mod graph;
pub mod haar;
pub mod real;
pub mod sampling;
pub mod skellam;
pub mod special;
pub mod stein;
pub mod tv;

pub use error::{Error, Result};
pub use real::Real;
pub use skellam::SkellamParams;
pub use stein::{BivariateState, Difference, TestSet};
pub use graph::NoisyGraphModel;
pub use haar::HaarSpilloverModel;
pub use tv::{BoundCheck, IntegerDist, TvInterval};

pub type SkellamF64 = SkellamParams<f64>;
pub type SkellamF32 = SkellamParams<f32>;
pub type DistF64 = IntegerDist<f64>;
pub type DistF32 = IntegerDist<f32>;
pub type KernelF64 = stein::DifferenceKernel<f64>;
pub type NoisyGraphF64 = NoisyGraphModel<f64>;
pub type HaarModelF64 = HaarSpilloverModel<f64>;
