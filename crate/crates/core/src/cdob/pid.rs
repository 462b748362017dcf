use serde::{Deserialize, Serialize};

use crate::scalar::{lit, Scalar};

/// PID gains tied to one scheduled speed.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PidGains<T> {
    pub k_p: T,
    pub k_i: T,
    pub k_d: T,
    /// Speed bucket the triple belongs to, m/s.
    pub v: T,
}

impl<T: Scalar> PidGains<T> {
    pub fn new(k_p: T, k_i: T, k_d: T, v: T) -> Self {
        Self { k_p, k_i, k_d, v }
    }

    pub fn norm(&self) -> T {
        (self.k_p * self.k_p + self.k_i * self.k_i + self.k_d * self.k_d).sqrt()
    }
}

/// Integrator and derivative-filter memory.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PidState<T> {
    pub integral: T,
    pub prev_error: T,
    pub deriv: T,
    pub primed: bool,
}

/// Output limits and derivative filter bandwidth.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PidLimits<T> {
    pub out_min: T,
    pub out_max: T,
    /// Derivative low-pass corner, rad/s.
    pub deriv_cutoff: T,
}

impl<T: Scalar> Default for PidLimits<T> {
    fn default() -> Self {
        // 10x a 10 rad/s loop bandwidth
        Self { out_min: lit(-0.7), out_max: lit(0.7), deriv_cutoff: lit(100.0) }
    }
}

/// Discrete PID: trapezoidal integral, Tustin-filtered derivative, clamped
/// output. The integrator stops charging while the output is saturated in
/// the direction of the error.
pub fn pid_step<T: Scalar>(error: T, gains: &PidGains<T>, dt: T, state: &mut PidState<T>, limits: &PidLimits<T>) -> T {
    let prev = if state.primed { state.prev_error } else { T::zero() };
    let half: T = lit(0.5);
    let candidate = state.integral + half * dt * (error + prev);

    // filtered derivative  D(s) = s / (s/wd + 1)
    let wd = limits.deriv_cutoff;
    let deriv = if state.primed {
        let a = lit::<T>(2.0) / dt;
        ((a - wd) * state.deriv + lit::<T>(2.0) * wd * (error - prev) / dt) / (a + wd)
    } else {
        T::zero()
    };

    let raw = gains.k_p * error + gains.k_i * candidate + gains.k_d * deriv;
    let out = raw.max(limits.out_min).min(limits.out_max);
    let saturated_same_way = (raw > limits.out_max && error > T::zero()) || (raw < limits.out_min && error < T::zero());
    if !saturated_same_way {
        state.integral = candidate;
    }
    state.deriv = deriv;
    state.prev_error = error;
    state.primed = true;
    out
}

/// Gains for a set of speed buckets with nearest-bucket lookup.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GainSchedule<T> {
    pub buckets: Vec<PidGains<T>>,
}

impl<T: Scalar> GainSchedule<T> {
    /// Default bucket speeds, m/s.
    pub const SPEEDS: [f64; 4] = [2.0, 5.0, 8.0, 12.0];

    /// Nearest bucket; ties go to the slower bucket.
    pub fn lookup(&self, v: T) -> Option<&PidGains<T>> {
        let mut best: Option<&PidGains<T>> = None;
        for g in &self.buckets {
            match best {
                Some(b) if (b.v - v).abs() <= (g.v - v).abs() => {}
                _ => best = Some(g),
            }
        }
        best
    }
}

/// Speed that keeps lateral acceleration `V^2 |rho|` within `a_lat_max`.
pub fn speed_schedule<T: Scalar>(rho_ref: T, a_lat_max: T, v_max: T) -> T {
    let rho = rho_ref.abs().max(lit(1e-6));
    v_max.min((a_lat_max / rho).sqrt())
}
