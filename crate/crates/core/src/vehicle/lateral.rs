use serde::{Deserialize, Serialize};

use super::{guard_speed, VehicleError, VehicleParams};
use crate::numerics::Mat;
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Lateral5DofState<T> {
    pub beta: T,
    pub r: T,
    pub x: T,
    pub y: T,
    pub psi: T,
}

impl<T: Scalar> Lateral5DofState<T> {
    pub fn to_vec(self) -> Vec<T> {
        vec![self.beta, self.r, self.x, self.y, self.psi]
    }

    pub fn from_slice(s: &[T]) -> Self {
        Self { beta: s[0], r: s[1], x: s[2], y: s[3], psi: s[4] }
    }

    /// Course angle of the CG velocity.
    pub fn course(&self) -> T {
        self.beta + self.psi
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LinearPtState<T> {
    pub beta: T,
    pub r: T,
    pub dpsi_p: T,
    pub e_y: T,
}

impl<T: Scalar> LinearPtState<T> {
    pub fn to_vec(self) -> Vec<T> {
        vec![self.beta, self.r, self.dpsi_p, self.e_y]
    }

    pub fn from_slice(s: &[T]) -> Self {
        Self { beta: s[0], r: s[1], dpsi_p: s[2], e_y: s[3] }
    }
}

/// Speed-dependent coefficients of the single-track lateral dynamics.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LateralCoeffs<T> {
    pub a11: T,
    pub a12: T,
    pub a21: T,
    pub a22: T,
    pub b1: T,
    pub b2: T,
}

pub fn lateral_coeffs<T: Scalar>(p: &VehicleParams<T>, v: T) -> LateralCoeffs<T> {
    let mv = p.m * v;
    LateralCoeffs {
        a11: -(p.c_f + p.c_r) / mv,
        a12: -T::one() + (p.c_r * p.l_r - p.c_f * p.l_f) / (mv * v),
        a21: (p.c_r * p.l_r - p.c_f * p.l_f) / p.i_z,
        a22: -(p.c_f * p.l_f * p.l_f + p.c_r * p.l_r * p.l_r) / (p.i_z * v),
        b1: p.c_f / mv,
        b2: p.c_f * p.l_f / p.i_z,
    }
}

/// 5-DOF lateral model at fixed speed `v`.
pub fn lateral5dof_deriv<T: Scalar>(
    s: &Lateral5DofState<T>,
    delta_f: T,
    p: &VehicleParams<T>,
    v: T,
) -> Result<Lateral5DofState<T>, VehicleError> {
    guard_speed(v)?;
    let k = lateral_coeffs(p, v);
    let course = s.beta + s.psi;
    Ok(Lateral5DofState {
        beta: k.a11 * s.beta + k.a12 * s.r + k.b1 * delta_f,
        r: k.a21 * s.beta + k.a22 * s.r + k.b2 * delta_f,
        x: v * course.cos(),
        y: v * course.sin(),
        psi: s.r,
    })
}

/// State-space matrices of the linear path-tracking model.
///
/// Columns: front steer, rear steer, reference curvature, yaw disturbance.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearPtMatrices<T> {
    pub a: Mat<T>,
    pub b_front: Vec<T>,
    pub b_rear: Vec<T>,
    pub e_curv: Vec<T>,
    pub e_moment: Vec<T>,
    /// Output row selecting `e_y`.
    pub c: Vec<T>,
}

pub fn linear_pt_matrices<T: Scalar>(p: &VehicleParams<T>, v: T) -> Result<LinearPtMatrices<T>, VehicleError> {
    guard_speed(v)?;
    let k = lateral_coeffs(p, v);
    let ls = p.k_preview * v;
    let z = T::zero();
    let a = Mat::from_rows(&[
        vec![k.a11, k.a12, z, z],
        vec![k.a21, k.a22, z, z],
        vec![z, T::one(), z, z],
        vec![v, ls, v, z],
    ]);
    Ok(LinearPtMatrices {
        a,
        b_front: vec![k.b1, k.b2, z, z],
        // rear column as printed for the path-tracking model
        b_rear: vec![p.c_r / (p.m * v), p.c_r * p.l_r / p.i_z, z, z],
        e_curv: vec![z, z, -v, -ls * v],
        e_moment: vec![z, T::one() / p.i_z, z, z],
        c: vec![z, z, z, T::one()],
    })
}

/// Linear path-tracking model with curvature and yaw-moment disturbances.
#[allow(clippy::too_many_arguments)]
pub fn linear_pt_deriv<T: Scalar>(
    s: &LinearPtState<T>,
    delta_f: T,
    delta_r: T,
    rho_ref: T,
    m_zd: T,
    p: &VehicleParams<T>,
    v: T,
) -> Result<LinearPtState<T>, VehicleError> {
    let mats = linear_pt_matrices(p, v)?;
    let x = s.to_vec();
    let ax = mats.a.mul_vec(&x);
    let d: Vec<T> = (0..4)
        .map(|i| {
            ax[i] + mats.b_front[i] * delta_f + mats.b_rear[i] * delta_r + mats.e_curv[i] * rho_ref + mats.e_moment[i] * m_zd
        })
        .collect();
    Ok(LinearPtState::from_slice(&d))
}
