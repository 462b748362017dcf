//! CLF-CBF quadratic-program controller for the unicycle with elliptical
//! vehicle and obstacle regions.

mod ellipse;

pub use ellipse::{ellipse_boundary, ellipse_h, pair_barrier, pair_barrier_gradients, BarrierGradients, EllipseRegion};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::{solve_qp, Mat, NumericsError, QpProblem, QpStatus};
use crate::path::{ParamPath, PathProgress};
use crate::scalar::{lit, Scalar};
use crate::vehicle::{offset_point, UnicycleState};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClfCbfError {
    #[error("invalid controller configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClfCbfConfig<T> {
    pub alpha: T,
    pub beta_cbf: T,
    pub q: T,
    /// Control point offset ahead of the center. Must be nonzero.
    pub d_offset: T,
    pub v_max: T,
    pub omega_max: T,
    /// Error scale of the progress slow-down.
    pub sigma: T,
}

impl<T: Scalar> Default for ClfCbfConfig<T> {
    fn default() -> Self {
        Self {
            alpha: lit(1.0),
            beta_cbf: lit(1.0),
            q: lit(100.0),
            d_offset: lit(0.5),
            v_max: lit(3.0),
            omega_max: lit(2.0),
            sigma: lit(1.0),
        }
    }
}

impl<T: Scalar> ClfCbfConfig<T> {
    pub fn validate(&self) -> Result<(), ClfCbfError> {
        if !(self.alpha > T::zero() && self.beta_cbf > T::zero() && self.q > T::zero()) {
            return Err(ClfCbfError::Config("alpha, beta_cbf and q must be positive".into()));
        }
        if self.d_offset == T::zero() {
            return Err(ClfCbfError::Config("d_offset = 0 leaves the yaw-rate column of the CLF row empty".into()));
        }
        if !(self.v_max > T::zero() && self.omega_max > T::zero() && self.sigma > T::zero()) {
            return Err(ClfCbfError::Config("saturation bounds and sigma must be positive".into()));
        }
        Ok(())
    }
}

/// One inequality `coeffs . (v, omega, eps) <= bound`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QpRow<T> {
    pub coeffs: [T; 3],
    pub bound: T,
}

/// Linearized CLF decrease condition as a QP row over `(v, omega, eps)`:
/// `e' (G(theta) u - path_term) + alpha/2 |e|^2 <= eps`.
pub fn clf_row<T: Scalar>(e: [T; 2], theta: T, path_term: [T; 2], config: &ClfCbfConfig<T>) -> QpRow<T> {
    let (s, c) = theta.sin_cos();
    let d = config.d_offset;
    let cv = e[0] * c + e[1] * s;
    let cw = -e[0] * d * s + e[1] * d * c;
    let e2 = e[0] * e[0] + e[1] * e[1];
    let ep = e[0] * path_term[0] + e[1] * path_term[1];
    QpRow { coeffs: [cv, cw, -T::one()], bound: ep - config.alpha * lit(0.5) * e2 }
}

/// Obstacle region with its (measured) rigid-body velocity.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MovingEllipse<T> {
    pub region: EllipseRegion<T>,
    pub vx: T,
    pub vy: T,
    pub omega: T,
}

impl<T: Scalar> MovingEllipse<T> {
    pub fn stationary(region: EllipseRegion<T>) -> Self {
        Self { region, vx: T::zero(), vy: T::zero(), omega: T::zero() }
    }
}

/// CBF row with the barrier value it was built from.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CbfRow<T> {
    pub row: QpRow<T>,
    pub h: T,
    pub rho_star: T,
}

/// `dh/dxi_i g(xi_i) u_i + dh/dxi_j xi_j' + beta h >= 0` as a `<=` row.
///
/// `vehicle` is the vehicle ellipse centered on the unicycle center with the
/// unicycle heading; obstacle motion enters as a known constant.
pub fn cbf_row<T: Scalar>(
    vehicle: &EllipseRegion<T>,
    obstacle: &MovingEllipse<T>,
    config: &ClfCbfConfig<T>,
) -> Result<CbfRow<T>, ClfCbfError> {
    let g = pair_barrier_gradients(vehicle, &obstacle.region)?;
    let (s, c) = vehicle.theta.sin_cos();
    let cv = g.d_pi[0] * c + g.d_pi[1] * s;
    let cw = g.d_theta_i;
    let obs = g.d_pj[0] * obstacle.vx + g.d_pj[1] * obstacle.vy + g.d_theta_j * obstacle.omega;
    Ok(CbfRow {
        row: QpRow { coeffs: [-cv, -cw, T::zero()], bound: obs + config.beta_cbf * g.h },
        h: g.h,
        rho_star: g.rho_star,
    })
}

/// Controller output and diagnostics.
#[derive(Clone, Debug, PartialEq)]
pub struct UnicycleCommand<T> {
    pub v: T,
    pub omega: T,
    pub eps: T,
    pub status: QpStatus,
    /// Set when the QP failed and the emergency stop was emitted.
    pub fallback: bool,
    pub barrier_values: Vec<T>,
    pub tracking_error: [T; 2],
    /// Progress rate used in the CLF row.
    pub gamma_rate: T,
}

/// Assemble and solve the CLF-CBF-QP for one control step.
///
/// Cost `|u|^2 + q eps^2`, one CLF row, one CBF row per obstacle. The
/// result is saturated afterwards; progress is advanced by the caller.
pub fn solve_unicycle_control<T: Scalar>(
    state: &UnicycleState<T>,
    vehicle_shape: (T, T),
    path: &ParamPath<T>,
    progress: &PathProgress<T>,
    obstacles: &[MovingEllipse<T>],
    config: &ClfCbfConfig<T>,
) -> Result<UnicycleCommand<T>, ClfCbfError> {
    config.validate()?;
    let p = offset_point(state, config.d_offset);
    let pd = path.eval(progress.gamma);
    let e = [p[0] - pd.point[0], p[1] - pd.point[1]];
    let e2 = e[0] * e[0] + e[1] * e[1];
    let s2 = config.sigma * config.sigma;
    let gamma_rate = if pd.clamped || progress.gamma >= path.gamma_max() {
        T::zero()
    } else {
        progress.gamma_d * s2 / (s2 + e2)
    };
    let path_term = [pd.tangent[0] * gamma_rate, pd.tangent[1] * gamma_rate];

    let vehicle = EllipseRegion::new([state.x_c, state.y_c], state.theta, vehicle_shape.0, vehicle_shape.1);
    let mut rows = vec![clf_row(e, state.theta, path_term, config)];
    let mut barrier_values = Vec::with_capacity(obstacles.len());
    for obs in obstacles {
        let r = cbf_row(&vehicle, obs, config)?;
        barrier_values.push(r.h);
        rows.push(r.row);
    }
    let mut a = Mat::zeros(rows.len(), 3);
    let mut b = Vec::with_capacity(rows.len());
    for (i, r) in rows.iter().enumerate() {
        for j in 0..3 {
            a[(i, j)] = r.coeffs[j];
        }
        b.push(r.bound);
    }
    let two: T = lit(2.0);
    let problem = QpProblem {
        hessian: Mat::from_diag(&[two, two, two * config.q]),
        linear_cost: vec![T::zero(); 3],
        ineq_matrix: a,
        ineq_bound: b,
    };
    let sol = solve_qp(&problem, lit(1e-8), 100)?;
    let ok = sol.status == QpStatus::Optimal;
    let (v, omega, eps) = if ok { (sol.u_star[0], sol.u_star[1], sol.u_star[2]) } else { (T::zero(), T::zero(), T::zero()) };
    Ok(UnicycleCommand {
        v: v.max(-config.v_max).min(config.v_max),
        omega: omega.max(-config.omega_max).min(config.omega_max),
        eps,
        status: sol.status,
        fallback: !ok,
        barrier_values,
        tracking_error: e,
        gamma_rate,
    })
}
