use super::NumericsError;
use crate::scalar::{lit, to_f64, Scalar};

fn axpy<T: Scalar>(x: &[T], a: T, k: &[T]) -> Vec<T> {
    x.iter().zip(k).map(|(&xi, &ki)| xi + a * ki).collect()
}

fn check<T: Scalar>(d: Vec<T>, state: &[T]) -> Result<Vec<T>, NumericsError> {
    if d.iter().all(|v| v.is_finite()) {
        Ok(d)
    } else {
        Err(NumericsError::NonFiniteDerivative { state: state.iter().map(|&v| to_f64(v)).collect() })
    }
}

/// One classical Runge-Kutta step of an autonomous system.
pub fn rk4_step<T, F>(mut f: F, x: &[T], h: T) -> Result<Vec<T>, NumericsError>
where
    T: Scalar,
    F: FnMut(&[T]) -> Vec<T>,
{
    rk4_step_tv(|_, s| f(s), T::zero(), x, h)
}

/// One classical Runge-Kutta step of `x' = f(t, x)` from time `t`.
pub fn rk4_step_tv<T, F>(mut f: F, t: T, x: &[T], h: T) -> Result<Vec<T>, NumericsError>
where
    T: Scalar,
    F: FnMut(T, &[T]) -> Vec<T>,
{
    if !(h > T::zero()) {
        return Err(NumericsError::InvalidArgument("step must be positive".into()));
    }
    let half = h * lit(0.5);
    let k1 = check(f(t, x), x)?;
    let x2 = axpy(x, half, &k1);
    let k2 = check(f(t + half, &x2), &x2)?;
    let x3 = axpy(x, half, &k2);
    let k3 = check(f(t + half, &x3), &x3)?;
    let x4 = axpy(x, h, &k3);
    let k4 = check(f(t + h, &x4), &x4)?;
    let sixth = h / lit(6.0);
    let two: T = lit(2.0);
    Ok(x
        .iter()
        .enumerate()
        .map(|(i, &xi)| xi + sixth * (k1[i] + two * k2[i] + two * k3[i] + k4[i]))
        .collect())
}
