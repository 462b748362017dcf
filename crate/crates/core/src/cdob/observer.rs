use serde::{Deserialize, Serialize};

use super::{make_q_filter, relative_degree, CdobError, LtiFilter};
use crate::numerics::{dot, rk4_step_tv, ss_zoh, Mat};
use crate::scalar::{lit, Scalar};
use crate::vehicle::{linear_pt_matrices, VehicleParams};

/// Steering to `e_y` transfer of the linear path-tracking model, sampled with
/// a zero-order hold (the steering command is held over each period).
pub fn make_nominal_plant<T: Scalar>(params: &VehicleParams<T>, v: T, dt: T) -> Result<LtiFilter<T>, CdobError> {
    let m = linear_pt_matrices(params, v)?;
    let ss = ss_zoh(&m.a, &m.b_front, &m.c, T::zero(), dt).map_err(CdobError::Numerics)?;
    LtiFilter::from_discrete(ss, dt)
}

/// Relative degree of the steering to `e_y` channel.
pub fn nominal_relative_degree<T: Scalar>(params: &VehicleParams<T>, v: T) -> Result<usize, CdobError> {
    let m = linear_pt_matrices(params, v)?;
    relative_degree(&m.a, &m.b_front, &m.c, T::zero())
        .ok_or_else(|| CdobError::InvalidArgument("steering does not reach e_y".into()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CdobMode {
    /// Delay compensation only; the compensated signal stays `G_n u`.
    Standard,
    /// Known path-curvature disturbance re-injected after compensation.
    Modified,
}

/// Communication disturbance observer around the delayed `e_y` measurement.
///
/// The delay and any output disturbance are lumped into
/// `y_meas - G_n u`; the Q-filtered residual replaces the delayed content of
/// the measurement with the undelayed model output:
/// `y_c = y_meas + Q (G_n u + d - y_meas)`.
/// This is the same transfer as estimating the disturbance through `Q / G_n`
/// and feeding `G_n` times the estimate back, without realizing `Q / G_n`
/// (whose double zero at the origin cancels the plant's integrators).
#[derive(Clone, Debug, PartialEq)]
pub struct CdobState<T> {
    pub nominal_plant: LtiFilter<T>,
    pub q_filter: LtiFilter<T>,
    pub mode: CdobMode,
    pub last_compensation: T,
}

impl<T: Scalar> CdobState<T> {
    pub fn new(nominal_plant: LtiFilter<T>, q_filter: LtiFilter<T>, mode: CdobMode) -> Result<Self, CdobError> {
        if nominal_plant.dt != q_filter.dt {
            return Err(CdobError::InvalidArgument("nominal plant and Q filter must share dt".into()));
        }
        Ok(Self { nominal_plant, q_filter, mode, last_compensation: T::zero() })
    }

    /// Observer for the linear path-tracking plant with a Butterworth Q.
    pub fn for_vehicle(
        params: &VehicleParams<T>,
        v: T,
        dt: T,
        q_order: usize,
        q_cutoff: T,
        mode: CdobMode,
    ) -> Result<Self, CdobError> {
        let rd = nominal_relative_degree(params, v)?;
        let q = make_q_filter(q_order, q_cutoff, dt, rd)?;
        Self::new(make_nominal_plant(params, v, dt)?, q, mode)
    }

    /// Current undelayed model output `G_n u`.
    pub fn model_output(&self) -> T {
        self.nominal_plant.output()
    }
}

/// One observer sample.
///
/// `u` is the steering command applied over the period that just ended,
/// `y_meas` the delayed measurement and `d_curv` the known curvature
/// contribution to `e_y` at the current instant. Returns the signal the
/// controller should feed back.
pub fn cdob_step<T: Scalar>(state: &mut CdobState<T>, u: T, y_meas: T, d_curv: T) -> Result<T, CdobError> {
    if !(u.is_finite() && y_meas.is_finite() && d_curv.is_finite()) {
        return Err(CdobError::NonFinite);
    }
    state.nominal_plant.advance(u);
    let model = state.nominal_plant.output();
    let d = match state.mode {
        CdobMode::Modified => d_curv,
        CdobMode::Standard => T::zero(),
    };
    let comp = state.q_filter.step(model + d - y_meas);
    state.last_compensation = comp;
    Ok(y_meas + comp)
}

/// Continuous curvature-to-`e_y` channel of the path-tracking model, integrated
/// with RK4 at a sub-step of the control period from a known curvature signal.
#[derive(Clone, Debug, PartialEq)]
pub struct CurvatureChannel<T> {
    a: Mat<T>,
    e: Vec<T>,
    c: Vec<T>,
    state: Vec<T>,
    substeps: usize,
}

impl<T: Scalar> CurvatureChannel<T> {
    pub fn new(params: &VehicleParams<T>, v: T, substeps: usize) -> Result<Self, CdobError> {
        let m = linear_pt_matrices(params, v)?;
        Ok(Self { a: m.a, e: m.e_curv, c: m.c, state: vec![T::zero(); 4], substeps: substeps.max(1) })
    }

    pub fn output(&self) -> T {
        dot(&self.c, &self.state)
    }

    /// Integrate over `[t, t + dt]` given curvature as a function of time.
    pub fn advance(&mut self, t: T, dt: T, rho: impl Fn(T) -> T) -> Result<(), CdobError> {
        let h = dt / lit(self.substeps as f64);
        for k in 0..self.substeps {
            let tk = t + h * lit(k as f64);
            self.state = rk4_step_tv(
                |ts, x: &[T]| {
                    let r = rho(ts);
                    let mut d = self.a.mul_vec(x);
                    for (di, &ei) in d.iter_mut().zip(&self.e) {
                        *di += ei * r;
                    }
                    d
                },
                tk,
                &self.state,
                h,
            )
            .map_err(CdobError::Numerics)?;
        }
        Ok(())
    }
}
