use serde::{Deserialize, Serialize};

use super::{dugoff_forces, guard_speed, wheel_deriv, wheel_speed, VehicleError, VehicleParams};
use crate::scalar::{lit, Scalar};

/// State of the extended single-track model.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ExtendedState<T> {
    pub beta: T,
    pub v: T,
    pub r: T,
    pub psi: T,
    pub x: T,
    pub y: T,
    pub dw_f: T,
    pub dw_r: T,
}

impl<T: Scalar> ExtendedState<T> {
    pub fn to_vec(self) -> Vec<T> {
        vec![self.beta, self.v, self.r, self.psi, self.x, self.y, self.dw_f, self.dw_r]
    }

    pub fn from_slice(s: &[T]) -> Self {
        Self { beta: s[0], v: s[1], r: s[2], psi: s[3], x: s[4], y: s[5], dw_f: s[6], dw_r: s[7] }
    }

    /// Straight rolling at speed `v` along heading `psi`.
    pub fn rolling(x: T, y: T, psi: T, v: T) -> Self {
        Self { beta: T::zero(), v, r: T::zero(), psi, x, y, dw_f: T::zero(), dw_r: T::zero() }
    }
}

/// Inputs of the extended model.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ExtendedInput<T> {
    pub delta_f: T,
    pub delta_r: T,
    pub m_drive_f: T,
    pub m_drive_r: T,
    /// External longitudinal load, added to the configured drag model.
    pub f_load: T,
    pub m_zd: T,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AxleKinematics<T> {
    pub alpha_f: T,
    pub alpha_r: T,
    pub s_f: T,
    pub s_r: T,
    pub v_fxf: T,
    pub v_rxr: T,
}

fn slip<T: Scalar>(omega_r: T, v_long: T) -> T {
    let den = omega_r.abs().max(v_long.abs()).max(lit(1e-9));
    let lim = T::one() - lit(1e-6);
    ((omega_r - v_long) / den).max(-lim).min(lim)
}

/// Tire slip angles, longitudinal slips and axle speeds along each wheel.
pub fn axle_kinematics<T: Scalar>(
    s: &ExtendedState<T>,
    delta_f: T,
    delta_r: T,
    p: &VehicleParams<T>,
) -> Result<AxleKinematics<T>, VehicleError> {
    guard_speed(s.v)?;
    let (sb, cb) = s.beta.sin_cos();
    let u = s.v * cb;
    let w_f = s.v * sb + p.l_f * s.r;
    let w_r = s.v * sb - p.l_r * s.r;
    let alpha_f = w_f.atan2(u) - delta_f;
    let alpha_r = w_r.atan2(u) - delta_r;
    let (sdf, cdf) = delta_f.sin_cos();
    let (sdr, cdr) = delta_r.sin_cos();
    let v_fxf = u * cdf + w_f * sdf;
    let v_rxr = u * cdr + w_r * sdr;
    let om_f = wheel_speed(s.dw_f, v_fxf, p.r_f);
    let om_r = wheel_speed(s.dw_r, v_rxr, p.r_r);
    Ok(AxleKinematics {
        alpha_f,
        alpha_r,
        s_f: slip(om_f * p.r_f, v_fxf),
        s_r: slip(om_r * p.r_r, v_rxr),
        v_fxf,
        v_rxr,
    })
}

/// Extended single-track equations of motion with wheel rotation.
pub fn extended_deriv<T: Scalar>(
    s: &ExtendedState<T>,
    u: &ExtendedInput<T>,
    p: &VehicleParams<T>,
) -> Result<ExtendedState<T>, VehicleError> {
    let k = axle_kinematics(s, u.delta_f, u.delta_r, p)?;
    let tf = dugoff_forces(k.s_f, k.alpha_f, p, p.f_zf)?;
    let tr = dugoff_forces(k.s_r, k.alpha_r, p, p.f_zr)?;
    let (fxf, fxr) = (tf.f_x, tr.f_x);
    // lateral force on the vehicle opposes the slip angle
    let (fyf, fyr) = (-tf.f_y, -tr.f_y);
    let f_load = u.f_load + p.load(s.v);

    let mv = p.m * s.v;
    let (sfb, cfb) = (u.delta_f - s.beta).sin_cos();
    let (srb, crb) = (u.delta_r - s.beta).sin_cos();
    let (sb, cb) = s.beta.sin_cos();
    let (sdf, cdf) = u.delta_f.sin_cos();
    let (sdr, cdr) = u.delta_r.sin_cos();

    let beta_dot = (sfb * fxf + srb * fxr + cfb * fyf + crb * fyr) / mv + (-sb / mv) * (-f_load) - s.r;
    let v_dot = (cfb * fxf + crb * fxr - sfb * fyf - srb * fyr) / p.m + (cb / p.m) * (-f_load);
    let r_dot = (p.l_f * sdf * fxf - p.l_r * sdr * fxr + p.l_f * cdf * fyf - p.l_r * cdr * fyr) / p.i_z + u.m_zd / p.i_z;
    let course = s.beta + s.psi;
    Ok(ExtendedState {
        beta: beta_dot,
        v: v_dot,
        r: r_dot,
        psi: s.r,
        x: s.v * course.cos(),
        y: s.v * course.sin(),
        dw_f: wheel_deriv(s.dw_f, u.m_drive_f, fxf, p.r_f, p.i_wf),
        dw_r: wheel_deriv(s.dw_r, u.m_drive_r, fxr, p.r_r, p.i_wr),
    })
}
