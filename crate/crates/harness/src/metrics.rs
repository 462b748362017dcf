//! Run metrics. Everything here is a pure function of logged samples.

use serde::{Deserialize, Serialize};

use crate::HarnessError;

/// TTZ thresholds, s.
pub const TTZ_BANDS: [f64; 3] = [2.0, 4.0, 6.0];

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TtzBand {
    #[serde(rename = "<2")]
    Below2,
    #[serde(rename = "<4")]
    Below4,
    #[serde(rename = "<6")]
    Below6,
}

impl TtzBand {
    /// Tightest band containing both times, if any.
    pub fn joint(a: f64, b: f64) -> Option<Self> {
        let worst = a.max(b);
        [Self::Below2, Self::Below4, Self::Below6].into_iter().zip(TTZ_BANDS).find(|&(_, th)| worst < th).map(|(band, _)| band)
    }
}

/// Planar actor sample: position, heading and speed.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActorSample {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    pub speed: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TtzSample {
    pub t: f64,
    pub ttz_vehicle: f64,
    pub ttz_vru: f64,
    pub band: Option<TtzBand>,
}

/// Entry of the joint TTZ into a band.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TtzEvent {
    pub t: f64,
    pub actor: usize,
    pub ttz_vehicle: f64,
    pub ttz_vru: f64,
    pub band: TtzBand,
}

fn cross(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

pub fn point_in_polygon(p: [f64; 2], poly: &[[f64; 2]]) -> bool {
    let mut inside = false;
    let n = poly.len();
    for i in 0..n {
        let (a, b) = (poly[i], poly[(i + 1) % n]);
        if (a[1] > p[1]) != (b[1] > p[1]) {
            let x = a[0] + (p[1] - a[1]) * (b[0] - a[0]) / (b[1] - a[1]);
            if p[0] < x {
                inside = !inside;
            }
        }
    }
    inside
}

/// Distance along the ray from `p` in direction `heading` to the polygon
/// boundary; 0 inside, infinite when the ray misses.
pub fn ray_distance_to_zone(p: [f64; 2], heading: f64, zone: &[[f64; 2]]) -> f64 {
    if point_in_polygon(p, zone) {
        return 0.0;
    }
    let d = [heading.cos(), heading.sin()];
    let mut best = f64::INFINITY;
    for i in 0..zone.len() {
        let (a, b) = (zone[i], zone[(i + 1) % zone.len()]);
        let e = [b[0] - a[0], b[1] - a[1]];
        let den = cross(d, e);
        if den.abs() < 1e-15 {
            continue;
        }
        let ap = [a[0] - p[0], a[1] - p[1]];
        let s = cross(ap, e) / den;
        let u = cross(ap, d) / den;
        if s >= 0.0 && (-1e-12..=1.0 + 1e-12).contains(&u) {
            best = best.min(s);
        }
    }
    best
}

/// Time to reach the zone at the current speed and heading.
pub fn actor_ttz(a: &ActorSample, zone: &[[f64; 2]]) -> f64 {
    let dist = ray_distance_to_zone([a.x, a.y], a.heading, zone);
    if dist == 0.0 {
        0.0
    } else if a.speed <= 1e-9 || !dist.is_finite() {
        f64::INFINITY
    } else {
        dist / a.speed
    }
}

/// TTZ series of the vehicle against each VRU and the band-entry events.
///
/// Series are returned per VRU; every trajectory must share the vehicle's
/// sample times.
pub fn compute_ttz(
    vehicle: &[ActorSample],
    vrus: &[Vec<ActorSample>],
    zone: &[[f64; 2]],
) -> Result<(Vec<Vec<TtzSample>>, Vec<TtzEvent>), HarnessError> {
    let mut series = Vec::with_capacity(vrus.len());
    let mut events = Vec::new();
    for (k, vru) in vrus.iter().enumerate() {
        if vru.len() != vehicle.len() {
            return Err(HarnessError::Metrics(format!("vru {k} has {} samples, vehicle has {}", vru.len(), vehicle.len())));
        }
        let mut s = Vec::with_capacity(vehicle.len());
        let mut prev: Option<TtzBand> = None;
        for (a, b) in vehicle.iter().zip(vru) {
            let (tv, tu) = (actor_ttz(a, zone), actor_ttz(b, zone));
            let band = TtzBand::joint(tv, tu);
            if let Some(bd) = band {
                if prev.map_or(true, |p| bd < p) {
                    events.push(TtzEvent { t: a.t, actor: k, ttz_vehicle: tv, ttz_vru: tu, band: bd });
                }
            }
            prev = band;
            s.push(TtzSample { t: a.t, ttz_vehicle: tv, ttz_vru: tu, band });
        }
        series.push(s);
    }
    Ok((series, events))
}

/// Pointwise minimum distance of two sampled trajectories: `(t, d)`.
pub fn min_distance(a: &[(f64, [f64; 2])], b: &[[f64; 2]]) -> Result<(f64, f64), HarnessError> {
    if a.len() != b.len() {
        return Err(HarnessError::Metrics(format!("trajectory lengths differ: {} vs {}", a.len(), b.len())));
    }
    let mut best = (f64::NAN, f64::INFINITY);
    for ((t, p), q) in a.iter().zip(b) {
        let d = (p[0] - q[0]).hypot(p[1] - q[1]);
        if d < best.1 {
            best = (*t, d);
        }
    }
    Ok(best)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveTimeStats {
    pub count: usize,
    pub mean_s: f64,
    pub p99_s: f64,
    pub max_s: f64,
}

impl SolveTimeStats {
    /// Nearest-rank percentile.
    pub fn from_samples(samples: &[f64]) -> Option<Self> {
        if samples.is_empty() {
            return None;
        }
        let mut s = samples.to_vec();
        s.sort_by(f64::total_cmp);
        let rank = ((0.99 * s.len() as f64).ceil() as usize).clamp(1, s.len());
        Some(Self {
            count: s.len(),
            mean_s: s.iter().sum::<f64>() / s.len() as f64,
            p99_s: s[rank - 1],
            max_s: s[s.len() - 1],
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimedValue {
    pub t: f64,
    pub value: f64,
}

/// First crossing of the divergence threshold.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Divergence {
    pub t: f64,
    /// Arc length travelled along the path at that time, m.
    pub arc: f64,
    pub fraction_of_path: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BandFractions {
    pub lt2: f64,
    pub lt4: f64,
    pub lt6: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub samples: usize,
    pub rms_e_y: Option<f64>,
    pub max_abs_e_y: Option<f64>,
    pub min_obstacle_distance: Option<TimedValue>,
    /// Smallest barrier value `d^2 - r^2` over the samples before the first QP failure.
    pub min_barrier_while_feasible: Option<f64>,
    pub ttz_events: Vec<TtzEvent>,
    /// Share of samples whose joint TTZ sits in each band (cumulative), worst VRU.
    pub ttz_band_fractions: Option<BandFractions>,
    pub collision: bool,
    pub solve_time_stats: Option<SolveTimeStats>,
    pub qp_failures: usize,
    pub divergence: Option<Divergence>,
    pub completed: bool,
    pub aborted: bool,
    pub path_length: Option<f64>,
}

pub fn rms(v: &[f64]) -> Option<f64> {
    if v.is_empty() {
        None
    } else {
        Some((v.iter().map(|x| x * x).sum::<f64>() / v.len() as f64).sqrt())
    }
}

pub fn max_abs(v: &[f64]) -> Option<f64> {
    v.iter().map(|x| x.abs()).fold(None, |m, x| Some(m.map_or(x, |m: f64| m.max(x))))
}

/// Tracking and distance metrics from logged columns.
pub fn tracking_metrics(t: &[f64], e_y: &[f64], obs_dist: &[f64], m: &mut Metrics) {
    m.samples = t.len();
    m.rms_e_y = rms(e_y);
    m.max_abs_e_y = max_abs(e_y);
    m.min_obstacle_distance = t
        .iter()
        .zip(obs_dist)
        .filter(|(_, d)| d.is_finite())
        .fold(None, |best: Option<TimedValue>, (&t, &d)| match best {
            Some(b) if b.value <= d => Some(b),
            _ => Some(TimedValue { t, value: d }),
        });
}

pub fn band_fractions(series: &[Vec<TtzSample>]) -> Option<BandFractions> {
    let n = series.first()?.len();
    if n == 0 {
        return None;
    }
    let mut f = BandFractions::default();
    for i in 0..n {
        let worst = series.iter().filter_map(|s| s[i].band).min();
        match worst {
            Some(TtzBand::Below2) => {
                f.lt2 += 1.0;
                f.lt4 += 1.0;
                f.lt6 += 1.0;
            }
            Some(TtzBand::Below4) => {
                f.lt4 += 1.0;
                f.lt6 += 1.0;
            }
            Some(TtzBand::Below6) => f.lt6 += 1.0,
            None => {}
        }
    }
    let n = n as f64;
    Some(BandFractions { lt2: f.lt2 / n, lt4: f.lt4 / n, lt6: f.lt6 / n })
}
