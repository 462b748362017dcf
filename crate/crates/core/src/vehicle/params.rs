use serde::{Deserialize, Serialize};

use super::VehicleError;
use crate::scalar::{lit, Scalar};

/// Physical constants shared by every plant model.
///
/// Defaults are the lateral parameters of the reference vehicle (3000 kg,
/// 5113 kg m^2, 3e5 N/rad per axle, 2 m to each axle) plus tire, wheel and
/// load values that the lateral tables do not cover (see field docs).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VehicleParams<T> {
    pub m: T,
    pub i_z: T,
    pub c_f: T,
    pub c_r: T,
    pub l_f: T,
    pub l_r: T,
    /// Longitudinal tire stiffness, 8e4 N by default.
    pub c_x: T,
    /// Lateral tire stiffness. 2e5 N/rad so that `c_y * g_y(0) = c_f`.
    pub c_y: T,
    pub mu: T,
    /// Axle loads, half the vehicle weight each by default.
    pub f_zf: T,
    pub f_zr: T,
    pub r_f: T,
    pub r_r: T,
    pub i_wf: T,
    pub i_wr: T,
    pub delta_f_max: T,
    pub delta_f_min: T,
    /// Preview scheduling constant `K` in `l_s = K V`.
    pub k_preview: T,
    pub t_d: T,
    /// Constant part of the resistive load.
    pub load_c0: T,
    /// Quadratic drag coefficient of the resistive load.
    pub load_c2: T,
}

impl<T: Scalar> Default for VehicleParams<T> {
    fn default() -> Self {
        let fz = 3000.0 * 9.81 / 2.0;
        Self {
            m: lit(3000.0),
            i_z: lit(5113.0),
            c_f: lit(3e5),
            c_r: lit(3e5),
            l_f: lit(2.0),
            l_r: lit(2.0),
            c_x: lit(8e4),
            c_y: lit(2e5),
            mu: lit(0.9),
            f_zf: lit(fz),
            f_zr: lit(fz),
            r_f: lit(0.3),
            r_r: lit(0.3),
            i_wf: lit(1.5),
            i_wr: lit(1.5),
            delta_f_max: lit(0.7),
            delta_f_min: lit(-0.7),
            k_preview: lit(1.0),
            t_d: lit(0.3),
            load_c0: T::zero(),
            load_c2: T::zero(),
        }
    }
}

impl<T: Scalar> VehicleParams<T> {
    pub fn validate(&self) -> Result<(), VehicleError> {
        let positive = [
            ("m", self.m),
            ("i_z", self.i_z),
            ("c_f", self.c_f),
            ("c_r", self.c_r),
            ("l_f", self.l_f),
            ("l_r", self.l_r),
            ("r_f", self.r_f),
            ("r_r", self.r_r),
            ("i_wf", self.i_wf),
            ("i_wr", self.i_wr),
        ];
        for (name, v) in positive {
            if !(v > T::zero()) || !v.is_finite() {
                return Err(VehicleError::InvalidParams(format!("{name} must be positive and finite")));
            }
        }
        if !(self.mu > T::zero() && self.mu <= lit(1.2)) {
            return Err(VehicleError::InvalidParams("mu must lie in (0, 1.2]".into()));
        }
        if !(self.delta_f_min < self.delta_f_max) {
            return Err(VehicleError::InvalidParams("delta_f_min must be below delta_f_max".into()));
        }
        Ok(())
    }

    /// Clamp a front steer command to the configured limits.
    pub fn saturate_steer(&self, delta: T) -> T {
        delta.max(self.delta_f_min).min(self.delta_f_max)
    }

    /// Resistive longitudinal load at speed `v`.
    pub fn load(&self, v: T) -> T {
        self.load_c0 + self.load_c2 * v * v
    }

    pub fn cast<U: Scalar>(&self) -> VehicleParams<U> {
        let c = |x: T| lit::<U>(x.to_f64().unwrap_or(f64::NAN));
        VehicleParams {
            m: c(self.m),
            i_z: c(self.i_z),
            c_f: c(self.c_f),
            c_r: c(self.c_r),
            l_f: c(self.l_f),
            l_r: c(self.l_r),
            c_x: c(self.c_x),
            c_y: c(self.c_y),
            mu: c(self.mu),
            f_zf: c(self.f_zf),
            f_zr: c(self.f_zr),
            r_f: c(self.r_f),
            r_r: c(self.r_r),
            i_wf: c(self.i_wf),
            i_wr: c(self.i_wr),
            delta_f_max: c(self.delta_f_max),
            delta_f_min: c(self.delta_f_min),
            k_preview: c(self.k_preview),
            t_d: c(self.t_d),
            load_c0: c(self.load_c0),
            load_c2: c(self.load_c2),
        }
    }
}
