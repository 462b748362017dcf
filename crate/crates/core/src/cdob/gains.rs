use nalgebra::{Complex, DMatrix};
use serde::{Deserialize, Serialize};

use super::{CdobError, PidGains};
use crate::scalar::{lit, to_f64, Scalar};
use crate::vehicle::{linear_pt_matrices, VehicleParams};

/// Allowed closed-loop pole region: a damping cone, a decay margin and a
/// natural-frequency cap.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DStabilitySpec {
    pub min_damping: f64,
    pub min_decay: f64,
    pub max_natural_freq: f64,
}

impl Default for DStabilitySpec {
    fn default() -> Self {
        Self { min_damping: 0.5, min_decay: 1.0, max_natural_freq: 300.0 }
    }
}

impl DStabilitySpec {
    pub fn validate(&self) -> Result<(), CdobError> {
        if !(self.min_damping > 0.0 && self.min_damping < 1.0) || !(self.min_decay >= 0.0) {
            return Err(CdobError::InvalidArgument("min_damping must be in (0,1) and min_decay >= 0".into()));
        }
        Ok(())
    }

    pub fn contains(&self, p: Complex<f64>) -> bool {
        let wn = p.norm();
        if !(p.re <= -self.min_decay) || !(wn <= self.max_natural_freq) {
            return false;
        }
        wn == 0.0 || -p.re / wn >= self.min_damping - 1e-12
    }
}

/// Closed-loop matrix of the path-tracking model under PID on `-e_y`, with
/// the integrator appended as a fifth state. The derivative acts on the
/// state-feedback form `e_y' = C A x` since the steering has no direct path
/// to `e_y'`.
pub fn closed_loop_matrix<T: Scalar>(params: &VehicleParams<T>, v: T, gains: &PidGains<T>) -> Result<DMatrix<f64>, CdobError> {
    let m = linear_pt_matrices(params, v)?;
    let n = 4;
    let a = DMatrix::from_fn(n, n, |i, j| to_f64(m.a[(i, j)]));
    let b: Vec<f64> = m.b_front.iter().map(|&x| to_f64(x)).collect();
    let c: Vec<f64> = m.c.iter().map(|&x| to_f64(x)).collect();
    let ca: Vec<f64> = (0..n).map(|j| (0..n).map(|i| c[i] * a[(i, j)]).sum()).collect();
    let (kp, ki, kd) = (to_f64(gains.k_p), to_f64(gains.k_i), to_f64(gains.k_d));
    let mut cl = DMatrix::<f64>::zeros(n + 1, n + 1);
    for i in 0..n {
        for j in 0..n {
            cl[(i, j)] = a[(i, j)] - b[i] * (kp * c[j] + kd * ca[j]);
        }
        cl[(i, n)] = b[i] * ki;
        cl[(n, i)] = -c[i];
    }
    Ok(cl)
}

/// Eigenvalues of the delay-free closed loop.
pub fn closed_loop_poles<T: Scalar>(params: &VehicleParams<T>, v: T, gains: &PidGains<T>) -> Result<Vec<Complex<f64>>, CdobError> {
    let cl = closed_loop_matrix(params, v, gains)?;
    let mut poles: Vec<Complex<f64>> = cl.complex_eigenvalues().iter().copied().collect();
    poles.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    Ok(poles)
}

/// Inclusive range `lo..=hi` sampled every `step`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GainRange {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

impl GainRange {
    pub fn new(lo: f64, hi: f64, step: f64) -> Self {
        Self { lo, hi, step }
    }

    pub fn values(&self) -> Vec<f64> {
        if !(self.step > 0.0) || self.hi < self.lo {
            return vec![self.lo];
        }
        let n = ((self.hi - self.lo) / self.step + 1e-9).floor() as usize;
        (0..=n).map(|k| self.lo + self.step * k as f64).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GainGrid {
    pub k_p: GainRange,
    pub k_i: GainRange,
    pub k_d: GainRange,
}

impl Default for GainGrid {
    fn default() -> Self {
        Self {
            k_p: GainRange::new(0.0, 3.0, 0.05),
            k_i: GainRange::new(0.0, 3.0, 0.05),
            k_d: GainRange::new(0.0, 1.0, 0.05),
        }
    }
}

/// One evaluated grid point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GainSample {
    pub v: f64,
    pub kp: f64,
    pub ki: f64,
    pub kd: f64,
    pub admissible: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GainRegion<T> {
    pub samples: Vec<GainSample>,
    pub admissible: Vec<PidGains<T>>,
    /// Admissible triple of smallest Euclidean norm (first in grid order on ties).
    pub minimal: Option<PidGains<T>>,
    pub diagnostics: String,
}

/// Sweep a gain grid and keep every triple whose closed-loop poles lie in the
/// D-stability region.
pub fn admissible_gain_region<T: Scalar>(
    params: &VehicleParams<T>,
    v: T,
    spec: &DStabilitySpec,
    grid: &GainGrid,
) -> Result<GainRegion<T>, CdobError> {
    spec.validate()?;
    let (kps, kis, kds) = (grid.k_p.values(), grid.k_i.values(), grid.k_d.values());
    let mut samples = Vec::with_capacity(kps.len() * kis.len() * kds.len());
    let mut admissible = Vec::new();
    let mut minimal: Option<PidGains<T>> = None;
    let mut best_margin = f64::NEG_INFINITY;
    for &kp in &kps {
        for &ki in &kis {
            for &kd in &kds {
                let g = PidGains::new(lit(kp), lit(ki), lit(kd), v);
                let poles = closed_loop_poles(params, v, &g)?;
                let ok = poles.iter().all(|&p| spec.contains(p));
                let worst = poles.iter().map(|p| p.re).fold(f64::NEG_INFINITY, f64::max);
                best_margin = best_margin.max(-worst);
                samples.push(GainSample { v: to_f64(v), kp, ki, kd, admissible: ok });
                if ok {
                    if minimal.map_or(true, |m| to_f64(g.norm()) < to_f64(m.norm())) {
                        minimal = Some(g);
                    }
                    admissible.push(g);
                }
            }
        }
    }
    let diagnostics = if admissible.is_empty() {
        format!(
            "no admissible triple among {} grid points; best decay margin reached {:.4} 1/s against {:.4} required",
            samples.len(),
            best_margin,
            spec.min_decay
        )
    } else {
        format!("{} of {} grid points admissible", admissible.len(), samples.len())
    };
    Ok(GainRegion { samples, admissible, minimal, diagnostics })
}
