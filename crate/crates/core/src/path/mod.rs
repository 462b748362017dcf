//! Reference paths: waypoint densification, segmented polynomial fitting with
//! C1 joints, evaluation with curvature, progress dynamics and path-frame
//! errors.
//!
//! Sign conventions: lateral error is positive to the left of the path and
//! curvature is positive for left turns.

mod fit;
mod progress;

pub use fit::{densify_waypoints, fit_segmented_path, lane_change_samples};
pub use progress::{advance_progress, path_frame_error, FrameError, PathProgress};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::{lit, Scalar};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PathError {
    #[error("need at least two samples, got {0}")]
    TooFewSamples(usize),
    #[error("duplicate consecutive samples at index {0}")]
    DuplicateSample(usize),
    #[error("spacing must be positive")]
    Spacing,
    #[error("segment {segment} has {points} points, degree {degree} needs at least {needed}")]
    TooFewPoints { segment: usize, points: usize, degree: usize, needed: usize },
    #[error("rank-deficient fit on segment {0}")]
    RankDeficient(usize),
    #[error("segment count must be at least one")]
    NoSegments,
}

/// One polynomial piece `p(u) = sum c_j u^j` with `u = (gamma - g0) / (g1 - g0)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolySegment<T> {
    pub cx: Vec<T>,
    pub cy: Vec<T>,
    pub g0: T,
    pub g1: T,
}

impl<T: Scalar> PolySegment<T> {
    fn local(&self, gamma: T) -> T {
        (gamma - self.g0) / (self.g1 - self.g0)
    }

    /// Value and first two derivatives with respect to gamma.
    pub fn derivs(&self, gamma: T) -> [[T; 2]; 3] {
        let u = self.local(gamma);
        let inv = T::one() / (self.g1 - self.g0);
        let poly = |c: &[T]| {
            let (mut p, mut d1, mut d2) = (T::zero(), T::zero(), T::zero());
            for &cj in c.iter().rev() {
                d2 = d2 * u + d1 * lit(2.0);
                d1 = d1 * u + p;
                p = p * u + cj;
            }
            [p, d1 * inv, d2 * inv * inv]
        };
        let x = poly(&self.cx);
        let y = poly(&self.cy);
        [[x[0], y[0]], [x[1], y[1]], [x[2], y[2]]]
    }
}

/// Piecewise-polynomial planar path parameterized by progress `gamma`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamPath<T> {
    pub segments: Vec<PolySegment<T>>,
    /// Monotone `(gamma, arc length)` samples.
    pub arc_table: Vec<(T, T)>,
}

/// Result of evaluating a path.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PathPoint<T> {
    pub point: [T; 2],
    /// First derivative with respect to gamma.
    pub tangent: [T; 2],
    pub heading: T,
    pub curvature: T,
    /// Set when the requested gamma was outside the domain.
    pub clamped: bool,
}

impl<T: Scalar> ParamPath<T> {
    pub(crate) fn from_segments(segments: Vec<PolySegment<T>>) -> Self {
        let mut path = Self { segments, arc_table: Vec::new() };
        path.build_arc_table();
        path
    }

    fn build_arc_table(&mut self) {
        let per_seg = 256;
        let mut table = Vec::with_capacity(self.segments.len() * per_seg + 1);
        let mut s = T::zero();
        let first = self.segments[0].g0;
        table.push((first, s));
        let mut prev_speed = self.speed(first);
        for seg in &self.segments {
            let step = (seg.g1 - seg.g0) / lit(per_seg as f64);
            for k in 1..=per_seg {
                let g1 = seg.g0 + step * lit(k as f64);
                let gm = g1 - step * lit(0.5);
                let mid = self.speed(gm);
                let end = self.speed(g1);
                // Simpson on each sub-interval
                s += step / lit(6.0) * (prev_speed + mid * lit(4.0) + end);
                prev_speed = end;
                table.push((g1, s));
            }
        }
        self.arc_table = table;
    }

    fn speed(&self, gamma: T) -> T {
        let d = self.segment_for(gamma).1.derivs(gamma);
        (d[1][0] * d[1][0] + d[1][1] * d[1][1]).sqrt()
    }

    pub fn gamma_min(&self) -> T {
        self.segments[0].g0
    }

    pub fn gamma_max(&self) -> T {
        self.segments[self.segments.len() - 1].g1
    }

    pub fn length(&self) -> T {
        self.arc_table.last().map_or(T::zero(), |e| e.1)
    }

    fn segment_for(&self, gamma: T) -> (usize, &PolySegment<T>) {
        let n = self.segments.len();
        let idx = self.segments.partition_point(|s| s.g1 < gamma).min(n - 1);
        (idx, &self.segments[idx])
    }

    /// Point, heading and signed curvature at `gamma` (clamped to the domain).
    pub fn eval(&self, gamma: T) -> PathPoint<T> {
        let lo = self.gamma_min();
        let hi = self.gamma_max();
        let clamped = gamma < lo || gamma > hi;
        let g = gamma.max(lo).min(hi);
        let d = self.segment_for(g).1.derivs(g);
        let [dx, dy] = d[1];
        let [ddx, ddy] = d[2];
        let sp2 = dx * dx + dy * dy;
        let curvature = if sp2 > T::zero() { (dx * ddy - dy * ddx) / (sp2 * sp2.sqrt()) } else { T::zero() };
        PathPoint { point: d[0], tangent: d[1], heading: dy.atan2(dx), curvature, clamped }
    }

    /// Arc length at `gamma`, interpolated from the arc table.
    pub fn arc_at_gamma(&self, gamma: T) -> T {
        interp(&self.arc_table, gamma, |e| e.0, |e| e.1)
    }

    /// Progress value at arc length `s`.
    pub fn gamma_at_arc(&self, s: T) -> T {
        interp(&self.arc_table, s, |e| e.1, |e| e.0)
    }

    /// Closest-point projection. Searches a window around `hint` when given,
    /// else the whole path. Ties go to the smaller gamma.
    pub fn project(&self, point: [T; 2], hint: Option<(T, T)>) -> T {
        let (lo, hi) = match hint {
            Some((center, half)) => (
                (center - half).max(self.gamma_min()),
                (center + half).min(self.gamma_max()),
            ),
            None => (self.gamma_min(), self.gamma_max()),
        };
        let d2 = |g: T| {
            let p = self.eval(g).point;
            let (ex, ey) = (p[0] - point[0], p[1] - point[1]);
            ex * ex + ey * ey
        };
        let samples = 64usize.max(((hi - lo) / lit(0.5)).to_usize().unwrap_or(64).min(4096));
        let step = (hi - lo) / lit(samples as f64);
        let mut best_g = lo;
        let mut best = d2(lo);
        for k in 1..=samples {
            let g = lo + step * lit(k as f64);
            let v = d2(g);
            if v < best {
                best = v;
                best_g = g;
            }
        }
        // golden refinement inside the neighbouring cells
        let mut a = (best_g - step).max(lo);
        let mut b = (best_g + step).min(hi);
        let r: T = lit(0.618_033_988_749_894_8);
        let mut c = b - r * (b - a);
        let mut d = a + r * (b - a);
        let (mut fc, mut fd) = (d2(c), d2(d));
        for _ in 0..60 {
            if fc <= fd {
                b = d;
                d = c;
                fd = fc;
                c = b - r * (b - a);
                fc = d2(c);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + r * (b - a);
                fd = d2(d);
            }
        }
        let g = (a + b) * lit(0.5);
        if d2(g) <= best {
            g
        } else {
            best_g
        }
    }
}

fn interp<T: Scalar, E>(table: &[E], key: T, k: impl Fn(&E) -> T, v: impl Fn(&E) -> T) -> T {
    let n = table.len();
    if key <= k(&table[0]) {
        return v(&table[0]);
    }
    if key >= k(&table[n - 1]) {
        return v(&table[n - 1]);
    }
    let i = table.partition_point(|e| k(e) <= key).clamp(1, n - 1);
    let (k0, k1) = (k(&table[i - 1]), k(&table[i]));
    let w = if k1 > k0 { (key - k0) / (k1 - k0) } else { T::zero() };
    v(&table[i - 1]) + w * (v(&table[i]) - v(&table[i - 1]))
}
