use serde::{Deserialize, Serialize};

use crate::numerics::{minimize_on_circle, NumericsError};
use crate::scalar::{lit, Scalar};

/// Ellipse with center `p_c`, orientation `theta` and semi-axes `a` (along
/// the heading) and `b`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EllipseRegion<T> {
    pub p_c: [T; 2],
    pub theta: T,
    pub a: T,
    pub b: T,
}

impl<T: Scalar> EllipseRegion<T> {
    pub fn new(p_c: [T; 2], theta: T, a: T, b: T) -> Self {
        Self { p_c, theta, a, b }
    }

    /// Shape matrix `R diag(1/a^2, 1/b^2) R'` as `[h11, h12, h22]`.
    pub fn shape(&self) -> [T; 3] {
        shape_matrix(self.theta, self.a, self.b)
    }
}

fn shape_matrix<T: Scalar>(theta: T, a: T, b: T) -> [T; 3] {
    let (s, c) = theta.sin_cos();
    let la = T::one() / (a * a);
    let lb = T::one() / (b * b);
    [la * c * c + lb * s * s, (la - lb) * s * c, la * s * s + lb * c * c]
}

/// Derivative of the shape matrix with respect to `theta`.
fn shape_matrix_dtheta<T: Scalar>(theta: T, a: T, b: T) -> [T; 3] {
    let (s2, c2) = (theta + theta).sin_cos();
    let la = T::one() / (a * a);
    let lb = T::one() / (b * b);
    [-(la - lb) * s2, (la - lb) * c2, (la - lb) * s2]
}

fn quad<T: Scalar>(h: &[T; 3], d: [T; 2]) -> T {
    h[0] * d[0] * d[0] + (h[1] + h[1]) * d[0] * d[1] + h[2] * d[1] * d[1]
}

fn hmul<T: Scalar>(h: &[T; 3], d: [T; 2]) -> [T; 2] {
    [h[0] * d[0] + h[1] * d[1], h[1] * d[0] + h[2] * d[1]]
}

/// `h(p) = (p - p_c)' H (p - p_c) / 2 - 1/2`: negative inside, zero on the boundary.
pub fn ellipse_h<T: Scalar>(region: &EllipseRegion<T>, point: [T; 2]) -> T {
    let d = [point[0] - region.p_c[0], point[1] - region.p_c[1]];
    let half: T = lit(0.5);
    half * quad(&region.shape(), d) - half
}

/// Boundary point at parameter `rho`.
pub fn ellipse_boundary<T: Scalar>(region: &EllipseRegion<T>, rho: T) -> [T; 2] {
    let (s, c) = region.theta.sin_cos();
    let (sr, cr) = rho.sin_cos();
    let (u, w) = (region.a * cr, region.b * sr);
    [region.p_c[0] + c * u - s * w, region.p_c[1] + s * u + c * w]
}

fn boundary_dtheta<T: Scalar>(region: &EllipseRegion<T>, rho: T) -> [T; 2] {
    let (s, c) = region.theta.sin_cos();
    let (sr, cr) = rho.sin_cos();
    let (u, w) = (region.a * cr, region.b * sr);
    [-s * u - c * w, c * u - s * w]
}

fn search_tol<T: Scalar>() -> T {
    T::epsilon().sqrt()
}

/// Separation between two regions: the smallest value of region `i`'s
/// barrier over region `j`'s boundary. Returns `(h_ij, rho*)`.
pub fn pair_barrier<T: Scalar>(i: &EllipseRegion<T>, j: &EllipseRegion<T>) -> Result<(T, T), NumericsError> {
    let (rho, h) = minimize_on_circle(|r| ellipse_h(i, ellipse_boundary(j, r)), search_tol())?;
    Ok((h, rho))
}

/// Pair barrier with its gradients with respect to both poses.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BarrierGradients<T> {
    pub h: T,
    pub rho_star: T,
    pub d_pi: [T; 2],
    pub d_theta_i: T,
    pub d_pj: [T; 2],
    pub d_theta_j: T,
    /// True when the minimizer was flat and finite differences were used.
    pub finite_difference: bool,
}

/// Gradients of `h_ij` by the envelope theorem at the minimizing `rho*`.
///
/// When the objective is flat in `rho` (e.g. concentric circles) the
/// minimizer is not unique and the envelope formula is not reliable, so the
/// gradient falls back to central differences of [`pair_barrier`].
pub fn pair_barrier_gradients<T: Scalar>(
    i: &EllipseRegion<T>,
    j: &EllipseRegion<T>,
) -> Result<BarrierGradients<T>, NumericsError> {
    let (h, rho) = pair_barrier(i, j)?;
    let f = |r: T| ellipse_h(i, ellipse_boundary(j, r));
    let dr: T = lit(1e-3);
    let curv = f(rho + dr) + f(rho - dr) - f(rho) - f(rho);
    let scale = T::one().max(h.abs());
    if curv.abs() <= lit::<T>(1e-9) * scale {
        return fd_gradients(i, j, h, rho);
    }
    let q = ellipse_boundary(j, rho);
    let d = [q[0] - i.p_c[0], q[1] - i.p_c[1]];
    let hd = hmul(&i.shape(), d);
    let d_theta_i = lit::<T>(0.5) * quad(&shape_matrix_dtheta(i.theta, i.a, i.b), d);
    let eq = boundary_dtheta(j, rho);
    Ok(BarrierGradients {
        h,
        rho_star: rho,
        d_pi: [-hd[0], -hd[1]],
        d_theta_i,
        d_pj: hd,
        d_theta_j: hd[0] * eq[0] + hd[1] * eq[1],
        finite_difference: false,
    })
}

fn fd_gradients<T: Scalar>(
    i: &EllipseRegion<T>,
    j: &EllipseRegion<T>,
    h: T,
    rho: T,
) -> Result<BarrierGradients<T>, NumericsError> {
    let step: T = T::epsilon().cbrt();
    let two = step + step;
    let diff = |fi: &dyn Fn(T) -> (EllipseRegion<T>, EllipseRegion<T>)| -> Result<T, NumericsError> {
        let (ip, jp) = fi(step);
        let (im, jm) = fi(-step);
        Ok((pair_barrier(&ip, &jp)?.0 - pair_barrier(&im, &jm)?.0) / two)
    };
    let dxi = diff(&|s| (EllipseRegion { p_c: [i.p_c[0] + s, i.p_c[1]], ..*i }, *j))?;
    let dyi = diff(&|s| (EllipseRegion { p_c: [i.p_c[0], i.p_c[1] + s], ..*i }, *j))?;
    let dti = diff(&|s| (EllipseRegion { theta: i.theta + s, ..*i }, *j))?;
    let dxj = diff(&|s| (*i, EllipseRegion { p_c: [j.p_c[0] + s, j.p_c[1]], ..*j }))?;
    let dyj = diff(&|s| (*i, EllipseRegion { p_c: [j.p_c[0], j.p_c[1] + s], ..*j }))?;
    let dtj = diff(&|s| (*i, EllipseRegion { theta: j.theta + s, ..*j }))?;
    Ok(BarrierGradients {
        h,
        rho_star: rho,
        d_pi: [dxi, dyi],
        d_theta_i: dti,
        d_pj: [dxj, dyj],
        d_theta_j: dtj,
        finite_difference: true,
    })
}
