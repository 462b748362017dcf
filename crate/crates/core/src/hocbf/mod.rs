//! Second-order CLF/CBF steering for the 5-DOF lateral model at constant
//! speed, with circular (optionally moving) obstacles.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::{solve_qp, Mat, NumericsError, QpProblem, QpStatus};
use crate::path::ParamPath;
use crate::scalar::{lit, Scalar};
use crate::vehicle::{lateral_coeffs, Lateral5DofState, VehicleError, VehicleParams, MIN_SPEED};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HoError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Vehicle(#[from] VehicleError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// Disc obstacle moving at constant velocity.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CircularObstacle<T> {
    pub x_o: T,
    pub y_o: T,
    /// Keep-out radius, already inflated by the vehicle footprint.
    pub r_o: T,
    #[serde(default)]
    pub vx: T,
    #[serde(default)]
    pub vy: T,
}

impl<T: Scalar> CircularObstacle<T> {
    pub fn fixed(x_o: T, y_o: T, r_o: T) -> Self {
        Self { x_o, y_o, r_o, vx: T::zero(), vy: T::zero() }
    }

    /// Position after `t` seconds of constant-velocity motion.
    pub fn at(&self, t: T) -> Self {
        Self { x_o: self.x_o + self.vx * t, y_o: self.y_o + self.vy * t, ..*self }
    }

    pub fn barrier(&self, x: T, y: T) -> T {
        let (dx, dy) = (x - self.x_o, y - self.y_o);
        dx * dx + dy * dy - self.r_o * self.r_o
    }
}

/// Gains of the two second-order conditions
/// `V'' + a1 V' + a2 V <= slack` and `h'' + a3 h' + a4 h >= 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HoConfig<T> {
    pub a1: T,
    pub a2: T,
    pub a3: T,
    pub a4: T,
    /// Slack weight.
    pub q: T,
    /// Goal distance ahead of the projected point, m.
    pub lookahead: T,
    /// Drop the barrier rows (tracking only).
    pub use_cbf: bool,
}

impl<T: Scalar> Default for HoConfig<T> {
    fn default() -> Self {
        Self {
            a1: lit(3.0),
            a2: lit(2.0),
            a3: lit(5.0),
            a4: lit(6.0),
            q: lit(1000.0),
            lookahead: lit(8.0),
            use_cbf: true,
        }
    }
}

impl<T: Scalar> HoConfig<T> {
    pub fn validate(&self) -> Result<(), HoError> {
        let all = [self.a1, self.a2, self.a3, self.a4, self.q, self.lookahead];
        if all.iter().any(|&g| !(g > T::zero()) || !g.is_finite()) {
            return Err(HoError::Config("a1..a4, q and lookahead must be positive".into()));
        }
        Ok(())
    }
}

/// Value and Lie derivatives of a relative-degree-two function:
/// `d/dt value = lf`, `d2/dt2 value = lf2 + lglf * delta_f`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LieTerms<T> {
    pub value: T,
    pub lf: T,
    pub lf2: T,
    pub lglf: T,
}

struct Kin<T> {
    t: [T; 2],
    n: [T; 2],
    /// Drift part of the course rate.
    phi_dot0: T,
    b1: T,
}

fn kinematics<T: Scalar>(s: &Lateral5DofState<T>, p: &VehicleParams<T>, v: T) -> Result<Kin<T>, HoError> {
    if !(v.abs() >= lit(MIN_SPEED)) {
        return Err(VehicleError::Singular(v.to_f64().unwrap_or(f64::NAN)).into());
    }
    let k = lateral_coeffs(p, v);
    let (sn, cs) = s.course().sin_cos();
    Ok(Kin { t: [cs, sn], n: [-sn, cs], phi_dot0: k.a11 * s.beta + k.a12 * s.r + s.r, b1: k.b1 })
}

/// Terms of `V = |p - goal|^2`.
pub fn hoclf_terms<T: Scalar>(
    s: &Lateral5DofState<T>,
    goal: [T; 2],
    p: &VehicleParams<T>,
    v: T,
) -> Result<LieTerms<T>, HoError> {
    let k = kinematics(s, p, v)?;
    let e = [s.x - goal[0], s.y - goal[1]];
    let two: T = lit(2.0);
    let et = e[0] * k.t[0] + e[1] * k.t[1];
    let en = e[0] * k.n[0] + e[1] * k.n[1];
    Ok(LieTerms {
        value: e[0] * e[0] + e[1] * e[1],
        lf: two * v * et,
        lf2: two * v * v + two * v * en * k.phi_dot0,
        lglf: two * v * en * k.b1,
    })
}

/// Terms of `h = |p - p_o|^2 - r_o^2` for an obstacle moving at constant velocity.
pub fn hocbf_terms<T: Scalar>(
    s: &Lateral5DofState<T>,
    obs: &CircularObstacle<T>,
    p: &VehicleParams<T>,
    v: T,
) -> Result<LieTerms<T>, HoError> {
    let k = kinematics(s, p, v)?;
    let e = [s.x - obs.x_o, s.y - obs.y_o];
    let rel = [v * k.t[0] - obs.vx, v * k.t[1] - obs.vy];
    let two: T = lit(2.0);
    let en = e[0] * k.n[0] + e[1] * k.n[1];
    Ok(LieTerms {
        value: obs.barrier(s.x, s.y),
        lf: two * (e[0] * rel[0] + e[1] * rel[1]),
        lf2: two * (rel[0] * rel[0] + rel[1] * rel[1]) + two * v * en * k.phi_dot0,
        lglf: two * v * en * k.b1,
    })
}

/// Pure-pursuit steering toward `target` from the rear-axle-free bicycle geometry.
pub fn pure_pursuit<T: Scalar>(s: &Lateral5DofState<T>, target: [T; 2], p: &VehicleParams<T>) -> T {
    let (dx, dy) = (target[0] - s.x, target[1] - s.y);
    let ld = (dx * dx + dy * dy).sqrt().max(lit(1e-3));
    let alpha = dy.atan2(dx) - s.psi;
    let wheelbase = p.l_f + p.l_r;
    (lit::<T>(2.0) * wheelbase * alpha.sin() / ld).atan()
}

#[derive(Clone, Debug, PartialEq)]
pub struct HoCommand<T> {
    pub delta_f: T,
    pub slack: T,
    pub status: QpStatus,
    /// QP failed; the previous command was held.
    pub fallback: bool,
    pub clf_value: T,
    pub barrier_values: Vec<T>,
    pub iterations: usize,
}

/// Build and solve the QP over `(delta_f, slack)` with cost
/// `(delta_f - u_ref)^2 + q slack^2`, one CLF row, one CBF row per obstacle
/// and the steering box.
#[allow(clippy::too_many_arguments)]
pub fn assemble_and_solve<T: Scalar>(
    s: &Lateral5DofState<T>,
    goal: [T; 2],
    obstacles: &[CircularObstacle<T>],
    u_ref: T,
    p: &VehicleParams<T>,
    v: T,
    config: &HoConfig<T>,
    prev_command: T,
) -> Result<HoCommand<T>, HoError> {
    config.validate()?;
    let clf = hoclf_terms(s, goal, p, v)?;
    let mut rows: Vec<([T; 2], T)> = Vec::with_capacity(obstacles.len() + 3);
    rows.push(([clf.lglf, -T::one()], -(clf.lf2 + config.a1 * clf.lf + config.a2 * clf.value)));
    let mut barrier_values = Vec::new();
    if config.use_cbf {
        for obs in obstacles {
            let h = hocbf_terms(s, obs, p, v)?;
            barrier_values.push(h.value);
            rows.push(([-h.lglf, T::zero()], h.lf2 + config.a3 * h.lf + config.a4 * h.value));
        }
    }
    rows.push(([T::one(), T::zero()], p.delta_f_max));
    rows.push(([-T::one(), T::zero()], -p.delta_f_min));

    let mut a = Mat::zeros(rows.len(), 2);
    let mut b = Vec::with_capacity(rows.len());
    for (i, (c, bound)) in rows.iter().enumerate() {
        a[(i, 0)] = c[0];
        a[(i, 1)] = c[1];
        b.push(*bound);
    }
    let two: T = lit(2.0);
    let problem = QpProblem {
        hessian: Mat::from_diag(&[two, two * config.q]),
        linear_cost: vec![-two * u_ref, T::zero()],
        ineq_matrix: a,
        ineq_bound: b,
    };
    let sol = solve_qp(&problem, lit(1e-9), 100)?;
    let ok = sol.status == QpStatus::Optimal;
    let delta_f = if ok { p.saturate_steer(sol.u_star[0]) } else { p.saturate_steer(prev_command) };
    Ok(HoCommand {
        delta_f,
        slack: if ok { sol.u_star[1] } else { T::zero() },
        status: sol.status,
        fallback: !ok,
        clf_value: clf.value,
        barrier_values,
        iterations: sol.iterations,
    })
}

/// Tracking step against a reference path: the goal sits `lookahead` metres
/// of arc ahead of the projected position, and pure pursuit toward it is the
/// reference the QP stays close to. Returns the command and the projected
/// progress (pass it back as `gamma_hint` next step).
#[allow(clippy::too_many_arguments)]
pub fn track_reference_path<T: Scalar>(
    s: &Lateral5DofState<T>,
    path: &ParamPath<T>,
    gamma_hint: Option<T>,
    obstacles: &[CircularObstacle<T>],
    p: &VehicleParams<T>,
    v: T,
    config: &HoConfig<T>,
    prev_command: T,
) -> Result<(HoCommand<T>, T), HoError> {
    let window = gamma_hint.map(|g| (g, (path.gamma_max() - path.gamma_min()) * lit(0.05) + lit(1.0)));
    let gamma = path.project([s.x, s.y], window);
    let arc = path.arc_at_gamma(gamma) + config.lookahead;
    let goal = path.eval(path.gamma_at_arc(arc)).point;
    let u_ref = pure_pursuit(s, goal, p);
    let cmd = assemble_and_solve(s, goal, obstacles, u_ref, p, v, config, prev_command)?;
    Ok((cmd, gamma))
}
