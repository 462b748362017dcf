use super::{Mat, NumericsError};
use crate::scalar::{lit, Scalar};

/// Central-difference Jacobian of `f` at `x`, shape `len(f(x)) x len(x)`.
pub fn finite_diff_jacobian<T, F>(mut f: F, x: &[T], h: T) -> Result<Mat<T>, NumericsError>
where
    T: Scalar,
    F: FnMut(&[T]) -> Vec<T>,
{
    if !(h > T::zero()) {
        return Err(NumericsError::InvalidArgument("difference step must be positive".into()));
    }
    let f0 = f(x);
    let m = f0.len();
    let mut jac = Mat::zeros(m, x.len());
    let mut xp = x.to_vec();
    let two_h = h * lit(2.0);
    for j in 0..x.len() {
        xp[j] = x[j] + h;
        let fp = f(&xp);
        xp[j] = x[j] - h;
        let fm = f(&xp);
        xp[j] = x[j];
        if fp.len() != m || fm.len() != m {
            return Err(NumericsError::Dimension("function output length changed".into()));
        }
        for i in 0..m {
            let d = (fp[i] - fm[i]) / two_h;
            if !d.is_finite() {
                return Err(NumericsError::NonFiniteValue { at: format!("column {j}") });
            }
            jac[(i, j)] = d;
        }
    }
    Ok(jac)
}

/// Central-difference gradient of a scalar function.
pub fn finite_diff_gradient<T, F>(mut f: F, x: &[T], h: T) -> Result<Vec<T>, NumericsError>
where
    T: Scalar,
    F: FnMut(&[T]) -> T,
{
    let j = finite_diff_jacobian(|v| vec![f(v)], x, h)?;
    Ok(j.row(0).to_vec())
}
