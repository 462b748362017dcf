use super::{Mat, NumericsError};
use crate::scalar::{lit, Scalar};

/// Single-input single-output discrete state-space realization.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteSs<T> {
    pub a: Mat<T>,
    pub b: Vec<T>,
    pub c: Vec<T>,
    pub d: T,
}

/// Matrix exponential by scaling and squaring with a truncated Taylor series.
pub fn expm<T: Scalar>(m: &Mat<T>) -> Mat<T> {
    let n = m.rows();
    let norm = m.norm_inf();
    let mut squarings = 0u32;
    let mut scaled = m.clone();
    if norm > lit(0.5) {
        squarings = (norm / lit(0.5)).log2().ceil().to_u32().unwrap_or(0);
        scaled = m.scale(T::one() / lit(2f64.powi(squarings as i32)));
    }
    // 16 terms at norm <= 0.5 is far below f64 epsilon
    let mut term = Mat::identity(n);
    let mut sum = Mat::identity(n);
    for k in 1..=16 {
        term = term.matmul(&scaled).scale(T::one() / lit(k as f64));
        sum = sum.add(&term);
    }
    for _ in 0..squarings {
        sum = sum.matmul(&sum);
    }
    sum
}

fn check_dims<T: Scalar>(a: &Mat<T>, b: &[T], c: &[T]) -> Result<(), NumericsError> {
    let n = a.rows();
    if a.cols() != n || b.len() != n || c.len() != n {
        return Err(NumericsError::Dimension(format!(
            "A {}x{}, B {}, C {}",
            a.rows(),
            a.cols(),
            b.len(),
            c.len()
        )));
    }
    Ok(())
}

/// Bilinear (Tustin) discretization.
pub fn ss_tustin<T: Scalar>(a: &Mat<T>, b: &[T], c: &[T], d: T, dt: T) -> Result<DiscreteSs<T>, NumericsError> {
    check_dims(a, b, c)?;
    let n = a.rows();
    let half = dt * lit(0.5);
    let eye = Mat::identity(n);
    let ima = eye.sub(&a.scale(half));
    let ipa = eye.add(&a.scale(half));
    let lu = ima.lu().ok_or(NumericsError::Singular("tustin (I - A dt/2)"))?;
    let ad = {
        let mut out = Mat::zeros(n, n);
        for j in 0..n {
            let col: Vec<T> = (0..n).map(|i| ipa[(i, j)]).collect();
            let x = lu.solve(&col);
            for i in 0..n {
                out[(i, j)] = x[i];
            }
        }
        out
    };
    let bd: Vec<T> = lu.solve(&b.iter().map(|&v| v * dt).collect::<Vec<_>>());
    // C (I - A dt/2)^-1 via the transposed system
    let cd = ima.transpose().solve(c).ok_or(NumericsError::Singular("tustin transpose"))?;
    let dd = d + lit::<T>(0.5) * c.iter().zip(&bd).fold(T::zero(), |acc, (&ci, &bi)| acc + ci * bi);
    Ok(DiscreteSs { a: ad, b: bd, c: cd, d: dd })
}

/// Zero-order-hold discretization through the augmented matrix exponential.
pub fn ss_zoh<T: Scalar>(a: &Mat<T>, b: &[T], c: &[T], d: T, dt: T) -> Result<DiscreteSs<T>, NumericsError> {
    check_dims(a, b, c)?;
    let n = a.rows();
    let mut aug = Mat::zeros(n + 1, n + 1);
    for i in 0..n {
        for j in 0..n {
            aug[(i, j)] = a[(i, j)] * dt;
        }
        aug[(i, n)] = b[i] * dt;
    }
    let e = expm(&aug);
    if !e.is_finite() {
        return Err(NumericsError::Singular("zoh exponential"));
    }
    let mut ad = Mat::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            ad[(i, j)] = e[(i, j)];
        }
    }
    let bd = (0..n).map(|i| e[(i, n)]).collect();
    Ok(DiscreteSs { a: ad, b: bd, c: c.to_vec(), d })
}
