//! Safety-critical path tracking and collision avoidance building blocks.
//!
//! Everything is generic over [`Scalar`] (`f32` or `f64`). The aliases at the
//! bottom of this file pin the common `f64` instantiations.

pub mod cdob;
pub mod clf_cbf;
pub mod hocbf;
pub mod numerics;
pub mod path;
mod scalar;
pub mod vehicle;

pub use scalar::{lit, wrap_angle, Scalar};

pub type Mat64 = numerics::Mat<f64>;
pub type QpProblem64 = numerics::QpProblem<f64>;
pub type QpSolution64 = numerics::QpSolution<f64>;
pub type VehicleParams64 = vehicle::VehicleParams<f64>;
pub type VehicleParams32 = vehicle::VehicleParams<f32>;
pub type ParamPath64 = path::ParamPath<f64>;
pub type Lateral5DofState64 = vehicle::Lateral5DofState<f64>;
pub type ExtendedState64 = vehicle::ExtendedState<f64>;
pub type UnicycleState64 = vehicle::UnicycleState<f64>;
pub type LtiFilter64 = cdob::LtiFilter<f64>;
pub type CdobState64 = cdob::CdobState<f64>;
pub type EllipseRegion64 = clf_cbf::EllipseRegion<f64>;
pub type CircularObstacle64 = hocbf::CircularObstacle<f64>;
pub type HoConfig64 = hocbf::HoConfig<f64>;
