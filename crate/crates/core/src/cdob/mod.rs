//! Delay-tolerant path tracking: discrete LTI blocks, the communication
//! disturbance observer, PID with speed scheduling and D-stability gain
//! selection.

mod gains;
mod lti;
mod observer;
mod pid;

pub use gains::{
    admissible_gain_region, closed_loop_matrix, closed_loop_poles, DStabilitySpec, GainGrid, GainRange, GainRegion,
    GainSample,
};
pub use lti::{make_q_filter, relative_degree, LtiFilter};
pub use observer::{
    cdob_step, make_nominal_plant, nominal_relative_degree, CdobMode, CdobState, CurvatureChannel,
};
pub use pid::{pid_step, speed_schedule, GainSchedule, PidGains, PidLimits, PidState};

use thiserror::Error;

use crate::numerics::NumericsError;
use crate::vehicle::VehicleError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CdobError {
    #[error("Q filter order {order} too low, Q/G_n needs order >= {required}")]
    OrderTooLow { order: usize, required: usize },
    #[error("non-finite observer input")]
    NonFinite,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Vehicle(#[from] VehicleError),
    #[error(transparent)]
    Numerics(NumericsError),
}
