use serde::{Deserialize, Serialize};

use super::ParamPath;
use crate::scalar::{wrap_angle, Scalar};

/// Progress along a path and its nominal rate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathProgress<T> {
    pub gamma: T,
    pub gamma_d: T,
}

/// `gamma' = gamma_d * sigma^2 / (sigma^2 + |e|^2)`, one explicit Euler step.
pub fn advance_progress<T: Scalar>(progress: PathProgress<T>, e: &[T], dt: T, sigma: T) -> PathProgress<T> {
    let e2 = e.iter().fold(T::zero(), |acc, &v| acc + v * v);
    let s2 = sigma * sigma;
    let rate = progress.gamma_d * s2 / (s2 + e2);
    PathProgress { gamma: progress.gamma + rate * dt, gamma_d: progress.gamma_d }
}

/// Errors of a pose relative to the path, measured at the preview point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FrameError<T> {
    pub e_y: T,
    pub dpsi_p: T,
    pub rho_ref: T,
    pub gamma: T,
}

/// Project the preview point `l_s = K V` ahead of the pose onto the path.
///
/// `hint` narrows the projection search to `(center, half_width)`.
pub fn path_frame_error<T: Scalar>(
    pose: (T, T, T),
    path: &ParamPath<T>,
    v: T,
    k: T,
    hint: Option<(T, T)>,
) -> FrameError<T> {
    let (x, y, psi) = pose;
    let ls = k * v.max(T::zero());
    let (s, c) = psi.sin_cos();
    let preview = [x + ls * c, y + ls * s];
    let gamma = path.project(preview, hint);
    let pp = path.eval(gamma);
    let (sh, ch) = pp.heading.sin_cos();
    let dx = preview[0] - pp.point[0];
    let dy = preview[1] - pp.point[1];
    let e_y = -sh * dx + ch * dy;
    FrameError { e_y, dpsi_p: wrap_angle(psi - pp.heading), rho_ref: pp.curvature, gamma }
}
