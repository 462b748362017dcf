//! Integration, small dense QP, circle minimization, finite differences and
//! the linear-algebra helpers they share.

mod circle;
mod diff;
mod disc;
mod integrate;
mod mat;
mod qp;

pub use circle::{minimize_on_circle, GOLDEN_STARTS};
pub use diff::{finite_diff_gradient, finite_diff_jacobian};
pub use disc::{expm, ss_tustin, ss_zoh, DiscreteSs};
pub use integrate::{rk4_step, rk4_step_tv};
pub use mat::{Lu, Mat};
pub use qp::{solve_qp, QpProblem, QpSolution, QpStatus};

pub(crate) use mat::dot;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumericsError {
    #[error("non-finite derivative at state {state:?}")]
    NonFiniteDerivative { state: Vec<f64> },
    #[error("non-finite function value at {at}")]
    NonFiniteValue { at: String },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("singular matrix in {0}")]
    Singular(&'static str),
}
