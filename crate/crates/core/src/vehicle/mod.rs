//! Plant models: unicycle, 5-DOF lateral, linear path-tracking and the
//! extended single-track model with combined-slip tires and wheel dynamics.

mod extended;
mod lateral;
mod params;
mod tire;
mod unicycle;

pub use extended::{axle_kinematics, extended_deriv, AxleKinematics, ExtendedInput, ExtendedState};
pub use lateral::{
    lateral5dof_deriv, lateral_coeffs, linear_pt_deriv, linear_pt_matrices, Lateral5DofState, LateralCoeffs,
    LinearPtMatrices, LinearPtState,
};
pub use params::VehicleParams;
pub use tire::{dugoff_forces, wheel_deriv, wheel_speed, TireForces};
pub use unicycle::{offset_point, unicycle_center_deriv, unicycle_deriv, UnicycleState};

use thiserror::Error;

/// Speed below which the dynamic models are singular.
pub const MIN_SPEED: f64 = 0.1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VehicleError {
    #[error("speed {0} m/s at or below the {MIN_SPEED} m/s singularity guard")]
    Singular(f64),
    #[error("longitudinal slip {0} outside (-1, 1)")]
    SlipDomain(f64),
    #[error("vertical load must be positive, got {0}")]
    Load(f64),
    #[error("invalid vehicle parameters: {0}")]
    InvalidParams(String),
}

pub(crate) fn guard_speed<T: crate::Scalar>(v: T) -> Result<(), VehicleError> {
    let vf = v.to_f64().unwrap_or(f64::NAN);
    // written so that NaN also fails
    if vf > MIN_SPEED {
        Ok(())
    } else {
        Err(VehicleError::Singular(vf))
    }
}
