use serde::{Deserialize, Serialize};

use crate::scalar::{wrap_angle, Scalar};

/// Pose of the unicycle geometric center.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct UnicycleState<T> {
    pub x_c: T,
    pub y_c: T,
    pub theta: T,
}

impl<T: Scalar> UnicycleState<T> {
    pub fn new(x_c: T, y_c: T, theta: T) -> Self {
        Self { x_c, y_c, theta: wrap_angle(theta) }
    }

    pub fn to_vec(self) -> Vec<T> {
        vec![self.x_c, self.y_c, self.theta]
    }

    pub fn from_slice(s: &[T]) -> Self {
        Self::new(s[0], s[1], s[2])
    }
}

/// Velocity of the control point offset `d` ahead of the center, plus yaw rate.
///
/// With `d = 0` this is the center kinematics.
pub fn unicycle_deriv<T: Scalar>(state: &UnicycleState<T>, v: T, omega: T, d: T) -> [T; 3] {
    let (s, c) = state.theta.sin_cos();
    [v * c - d * omega * s, v * s + d * omega * c, omega]
}

/// Center kinematics, identical to [`unicycle_deriv`] with zero offset.
pub fn unicycle_center_deriv<T: Scalar>(state: &UnicycleState<T>, v: T, omega: T) -> [T; 3] {
    unicycle_deriv(state, v, omega, T::zero())
}

/// Control point located `d` ahead of the center along the heading.
pub fn offset_point<T: Scalar>(state: &UnicycleState<T>, d: T) -> [T; 2] {
    let (s, c) = state.theta.sin_cos();
    [state.x_c + d * c, state.y_c + d * s]
}
