use serde::{Deserialize, Serialize};

use super::{VehicleError, VehicleParams};
use crate::scalar::{lit, Scalar};

/// Tire forces in the wheel frame. `f_y` is the force produced by the slip
/// angle; it opposes the slip, so the vehicle sees `-f_y`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TireForces<T> {
    pub f_x: T,
    pub f_y: T,
    /// Friction utilization variable. Infinite at zero slip.
    pub z: T,
    pub f_z_factor: T,
    pub g_x: T,
    pub g_y: T,
}

/// Modified Dugoff combined-slip tire.
///
/// The correction polynomials are evaluated on `|s|` and `|tan(alpha)|` and the
/// signs restored afterwards, which keeps `f_x` odd in `s` and `f_y` odd in
/// `alpha`.
pub fn dugoff_forces<T: Scalar>(s: T, alpha: T, p: &VehicleParams<T>, f_z: T) -> Result<TireForces<T>, VehicleError> {
    let bound = T::one() - lit(1e-6);
    if !(s.abs() <= bound) {
        return Err(VehicleError::SlipDomain(s.to_f64().unwrap_or(f64::NAN)));
    }
    if !(f_z > T::zero()) {
        return Err(VehicleError::Load(f_z.to_f64().unwrap_or(f64::NAN)));
    }
    let sa = s.abs();
    let ta = alpha.tan().abs();
    let mu = p.mu;
    let g_x = (lit::<T>(1.15) - lit::<T>(0.75) * mu) * sa * sa - (lit::<T>(1.63) - lit::<T>(0.75) * mu) * sa + lit(1.5);
    let g_y = (mu - lit(1.6)) * ta + lit(1.5);
    let root = ((p.c_x * sa).powi(2) + (p.c_y * ta).powi(2)).sqrt();
    if root < lit(1e-9) {
        return Ok(TireForces { f_x: T::zero(), f_y: T::zero(), z: T::infinity(), f_z_factor: T::one(), g_x, g_y });
    }
    let z = mu * f_z * (T::one() - sa) / (lit::<T>(2.0) * root);
    let fz = if z < T::one() { z * (lit::<T>(2.0) - z) } else { T::one() };
    let inv = T::one() / (T::one() - sa);
    let f_x = p.c_x * sa * inv * fz * g_x;
    let f_y = p.c_y * ta * inv * fz * g_y;
    Ok(TireForces {
        f_x: if s < T::zero() { -f_x } else { f_x },
        f_y: if alpha.tan() < T::zero() { -f_y } else { f_y },
        z,
        f_z_factor: fz,
        g_x,
        g_y,
    })
}

/// Rate of the deviated wheel speed. It does not depend on the deviation itself.
pub fn wheel_deriv<T: Scalar>(_dw: T, m_drive: T, f_x: T, r: T, i_w: T) -> T {
    (m_drive - f_x * r) / i_w
}

/// Absolute wheel speed from the deviation and the axle speed along the wheel.
pub fn wheel_speed<T: Scalar>(dw: T, v_axle_long: T, r: T) -> T {
    dw + v_axle_long / r
}
