use super::{ParamPath, PathError, PolySegment};
use crate::numerics::Mat;
use crate::scalar::{lit, Scalar};

/// Insert linearly interpolated points so that neighbours are at most
/// `spacing` apart. Endpoints and original samples are kept.
pub fn densify_waypoints<T: Scalar>(samples: &[[T; 2]], spacing: T) -> Result<Vec<[T; 2]>, PathError> {
    if samples.len() < 2 {
        return Err(PathError::TooFewSamples(samples.len()));
    }
    if !(spacing > T::zero()) {
        return Err(PathError::Spacing);
    }
    let mut out = vec![samples[0]];
    for (i, w) in samples.windows(2).enumerate() {
        let (a, b) = (w[0], w[1]);
        let len = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
        if len == T::zero() {
            return Err(PathError::DuplicateSample(i + 1));
        }
        let n = (len / spacing).ceil().to_usize().unwrap_or(1).max(1);
        for k in 1..=n {
            if k == n {
                out.push(b);
            } else {
                let t = lit::<T>(k as f64) / lit(n as f64);
                out.push([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]);
            }
        }
    }
    Ok(out)
}

/// Sample points of a single lane change: straight until `x_start`, a
/// raised-cosine blend of lateral `offset` until `x_end`, straight to `x_total`.
pub fn lane_change_samples<T: Scalar>(x_start: T, x_end: T, x_total: T, offset: T, spacing: T) -> Vec<[T; 2]> {
    let n = (x_total / spacing).round().to_usize().unwrap_or(1).max(1);
    (0..=n)
        .map(|k| {
            let x = x_total * lit(k as f64) / lit(n as f64);
            let y = if x <= x_start {
                T::zero()
            } else if x >= x_end {
                offset
            } else {
                let w = (x - x_start) / (x_end - x_start);
                offset * lit::<T>(0.5) * (T::one() - (T::PI() * w).cos())
            };
            [x, y]
        })
        .collect()
}

/// Least-squares polynomial fit per segment with position and first-derivative
/// continuity enforced at every joint.
///
/// Points are split into `n_segments` contiguous groups sharing their boundary
/// points and parameterized by cumulative chord length.
pub fn fit_segmented_path<T: Scalar>(dense: &[[T; 2]], n_segments: usize, degree: usize) -> Result<ParamPath<T>, PathError> {
    if n_segments == 0 {
        return Err(PathError::NoSegments);
    }
    if dense.len() < 2 {
        return Err(PathError::TooFewSamples(dense.len()));
    }
    let mut gamma = vec![T::zero(); dense.len()];
    for i in 1..dense.len() {
        let (a, b) = (dense[i - 1], dense[i]);
        let d = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
        if d == T::zero() {
            return Err(PathError::DuplicateSample(i));
        }
        gamma[i] = gamma[i - 1] + d;
    }

    let last = dense.len() - 1;
    let bounds: Vec<usize> = (0..=n_segments).map(|k| (k * last + n_segments / 2) / n_segments).collect();
    let nc = degree + 1;
    for k in 0..n_segments {
        let pts = bounds[k + 1] - bounds[k] + 1;
        if pts < nc || bounds[k + 1] <= bounds[k] {
            return Err(PathError::TooFewPoints { segment: k, points: pts, degree, needed: nc });
        }
    }

    let nvar = n_segments * nc;
    let ncon = 2 * (n_segments - 1);
    let mut ata = Mat::<T>::zeros(nvar, nvar);
    let mut atx = vec![T::zero(); nvar];
    let mut aty = vec![T::zero(); nvar];
    let mut row = vec![T::zero(); nc];
    for k in 0..n_segments {
        let (i0, i1) = (bounds[k], bounds[k + 1]);
        let (g0, g1) = (gamma[i0], gamma[i1]);
        // boundary points belong to both neighbours; weight them half
        for i in i0..=i1 {
            let w: T = if (i == i0 && k > 0) || (i == i1 && k + 1 < n_segments) { lit(0.5) } else { T::one() };
            let u = (gamma[i] - g0) / (g1 - g0);
            let mut pw = T::one();
            for r in row.iter_mut() {
                *r = pw;
                pw = pw * u;
            }
            for a in 0..nc {
                atx[k * nc + a] += w * row[a] * dense[i][0];
                aty[k * nc + a] += w * row[a] * dense[i][1];
                for b in 0..nc {
                    ata[(k * nc + a, k * nc + b)] += w * row[a] * row[b];
                }
            }
        }
        let mut local = Mat::<T>::zeros(nc, nc);
        for a in 0..nc {
            for b in 0..nc {
                local[(a, b)] = ata[(k * nc + a, k * nc + b)];
            }
        }
        if local.lu().is_none() {
            return Err(PathError::RankDeficient(k));
        }
    }

    let mut kkt = Mat::<T>::zeros(nvar + ncon, nvar + ncon);
    for i in 0..nvar {
        for j in 0..nvar {
            kkt[(i, j)] = ata[(i, j)];
        }
    }
    for k in 0..n_segments.saturating_sub(1) {
        let len_a = gamma[bounds[k + 1]] - gamma[bounds[k]];
        let len_b = gamma[bounds[k + 2]] - gamma[bounds[k + 1]];
        let (c0, c1) = (nvar + 2 * k, nvar + 2 * k + 1);
        for j in 0..nc {
            // value: p_k(1) - p_{k+1}(0) = 0
            let va = T::one();
            let vb = if j == 0 { T::one() } else { T::zero() };
            // slope in gamma: p_k'(1)/len_a - p_{k+1}'(0)/len_b = 0
            let da = lit::<T>(j as f64) / len_a;
            let db = if j == 1 { T::one() / len_b } else { T::zero() };
            let (ia, ib) = (k * nc + j, (k + 1) * nc + j);
            kkt[(c0, ia)] = va;
            kkt[(ia, c0)] = va;
            kkt[(c0, ib)] = -vb;
            kkt[(ib, c0)] = -vb;
            kkt[(c1, ia)] = da;
            kkt[(ia, c1)] = da;
            kkt[(c1, ib)] = -db;
            kkt[(ib, c1)] = -db;
        }
    }
    let lu = kkt.lu().ok_or(PathError::RankDeficient(0))?;
    let mut rhs_x = atx.clone();
    rhs_x.resize(nvar + ncon, T::zero());
    let mut rhs_y = aty.clone();
    rhs_y.resize(nvar + ncon, T::zero());
    let sx = lu.solve(&rhs_x);
    let sy = lu.solve(&rhs_y);

    let segments = (0..n_segments)
        .map(|k| PolySegment {
            cx: sx[k * nc..(k + 1) * nc].to_vec(),
            cy: sy[k * nc..(k + 1) * nc].to_vec(),
            g0: gamma[bounds[k]],
            g1: gamma[bounds[k + 1]],
        })
        .collect();
    Ok(ParamPath::from_segments(segments))
}
