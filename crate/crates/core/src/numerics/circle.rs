use super::NumericsError;
use crate::scalar::{lit, Scalar};

/// Number of equal sub-arcs searched independently.
pub const GOLDEN_STARTS: usize = 12;

/// Global minimum of `f` over `[0, 2pi)` by golden-section search on
/// [`GOLDEN_STARTS`] equal sub-arcs. Returns `(angle, value)`.
pub fn minimize_on_circle<T, F>(mut f: F, tol: T) -> Result<(T, T), NumericsError>
where
    T: Scalar,
    F: FnMut(T) -> T,
{
    if !(tol > T::zero()) {
        return Err(NumericsError::InvalidArgument("tolerance must be positive".into()));
    }
    let two_pi = T::PI() + T::PI();
    let arc = two_pi / lit(GOLDEN_STARTS as f64);
    let inv_phi: T = lit(0.618_033_988_749_894_8);
    let mut eval = |r: T| -> Result<T, NumericsError> {
        let v = f(r);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(NumericsError::NonFiniteValue { at: format!("rho = {r}") })
        }
    };

    let mut best = (T::zero(), eval(T::zero())?);
    for k in 0..GOLDEN_STARTS {
        let mut a = arc * lit(k as f64);
        let mut b = a + arc;
        let edge = eval(a)?;
        if edge < best.1 {
            best = (a, edge);
        }
        let mut c = b - inv_phi * (b - a);
        let mut d = a + inv_phi * (b - a);
        let mut fc = eval(c)?;
        let mut fd = eval(d)?;
        // f32 cannot resolve arbitrarily small arcs, so cap the bracket shrinks
        let mut iters = 0;
        while b - a > tol && iters < 200 {
            iters += 1;
            if fc < fd {
                b = d;
                d = c;
                fd = fc;
                c = b - inv_phi * (b - a);
                fc = eval(c)?;
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + inv_phi * (b - a);
                fd = eval(d)?;
            }
        }
        let mid = (a + b) * lit(0.5);
        let fm = eval(mid)?;
        for (r, v) in [(mid, fm), (c, fc), (d, fd)] {
            if v < best.1 {
                best = (r, v);
            }
        }
    }
    let mut r = best.0 % two_pi;
    if r < T::zero() {
        r += two_pi;
    }
    Ok((r, best.1))
}
