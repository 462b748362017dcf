use nalgebra::{Complex, DMatrix, DVector};

use super::CdobError;
use crate::numerics::{dot, ss_tustin, DiscreteSs, Mat};
use crate::scalar::{lit, to_f64, Scalar};

/// Discrete single-input single-output state-space block with its state.
#[derive(Clone, Debug, PartialEq)]
pub struct LtiFilter<T> {
    pub state_matrix: Mat<T>,
    pub input_matrix: Vec<T>,
    pub output_matrix: Vec<T>,
    pub feedthrough: T,
    pub state: Vec<T>,
    pub dt: T,
}

impl<T: Scalar> LtiFilter<T> {
    pub fn from_discrete(ss: DiscreteSs<T>, dt: T) -> Result<Self, CdobError> {
        if !(dt > T::zero()) {
            return Err(CdobError::InvalidArgument("dt must be positive".into()));
        }
        let n = ss.a.rows();
        Ok(Self {
            state_matrix: ss.a,
            input_matrix: ss.b,
            output_matrix: ss.c,
            feedthrough: ss.d,
            state: vec![T::zero(); n],
            dt,
        })
    }

    pub fn order(&self) -> usize {
        self.state.len()
    }

    /// Output without the feedthrough term, i.e. the value before the next input.
    pub fn output(&self) -> T {
        dot(&self.output_matrix, &self.state)
    }

    /// Advance the state by one sample under input `u`.
    pub fn advance(&mut self, u: T) {
        let mut next = self.state_matrix.mul_vec(&self.state);
        for (x, &b) in next.iter_mut().zip(&self.input_matrix) {
            *x += b * u;
        }
        self.state = next;
    }

    /// Emit `y = C x + D u` and advance.
    pub fn step(&mut self, u: T) -> T {
        let y = self.output() + self.feedthrough * u;
        self.advance(u);
        y
    }

    pub fn reset(&mut self) {
        self.state.iter_mut().for_each(|x| *x = T::zero());
    }

    /// Steady-state gain `C (I - A)^-1 B + D`, `None` when a pole sits at z = 1.
    pub fn dc_gain(&self) -> Option<T> {
        let n = self.order();
        let ima = Mat::identity(n).sub(&self.state_matrix);
        let x = ima.solve(&self.input_matrix)?;
        Some(dot(&self.output_matrix, &x) + self.feedthrough)
    }

    /// Complex response on the unit circle at angular frequency `omega` rad/s.
    pub fn frequency_response(&self, omega: f64) -> Complex<f64> {
        let n = self.order();
        let dt = to_f64(self.dt);
        let z = Complex::new(0.0, omega * dt).exp();
        let mut m = DMatrix::<Complex<f64>>::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = -Complex::new(to_f64(self.state_matrix[(i, j)]), 0.0);
            }
            m[(i, i)] += z;
        }
        let b = DVector::from_iterator(n, self.input_matrix.iter().map(|&v| Complex::new(to_f64(v), 0.0)));
        let d = Complex::new(to_f64(self.feedthrough), 0.0);
        match m.lu().solve(&b) {
            Some(x) => {
                x.iter().zip(&self.output_matrix).map(|(xi, &c)| xi * to_f64(c)).sum::<Complex<f64>>() + d
            }
            None => Complex::new(f64::INFINITY, 0.0),
        }
    }
}

/// Relative degree of a continuous SISO realization, `None` if the
/// transfer function is identically zero.
pub fn relative_degree<T: Scalar>(a: &Mat<T>, b: &[T], c: &[T], d: T) -> Option<usize> {
    let scale = a.norm_inf().max(T::one());
    if d.abs() > T::zero() {
        return Some(0);
    }
    let mut v = b.to_vec();
    let bnorm = b.iter().fold(T::zero(), |acc, &x| acc.max(x.abs()));
    let cnorm = c.iter().fold(T::zero(), |acc, &x| acc.max(x.abs()));
    for k in 1..=a.rows() {
        let mk = dot(c, &v);
        let tol = bnorm * cnorm * scale.powi(k as i32 - 1) * lit(1e-10);
        if mk.abs() > tol {
            return Some(k);
        }
        v = a.mul_vec(&v);
    }
    None
}

/// Unity-DC-gain Butterworth low-pass of the given order, Tustin-discretized
/// with the cutoff pre-warped so the -3 dB point lands on `cutoff`.
///
/// `min_order` is the relative degree of the nominal plant; `Q / G_n` is
/// proper only when `order >= min_order`.
pub fn make_q_filter<T: Scalar>(order: usize, cutoff: T, dt: T, min_order: usize) -> Result<LtiFilter<T>, CdobError> {
    if order < min_order.max(1) {
        return Err(CdobError::OrderTooLow { order, required: min_order.max(1) });
    }
    if !(cutoff > T::zero()) || !(dt > T::zero()) {
        return Err(CdobError::InvalidArgument("cutoff and dt must be positive".into()));
    }
    let wc = to_f64(cutoff);
    let h = to_f64(dt);
    let wa = 2.0 / h * (wc * h / 2.0).tan();
    // monic denominator from the Butterworth poles
    let mut den = vec![Complex::new(1.0, 0.0)];
    for k in 1..=order {
        let theta = std::f64::consts::PI * (2 * k + order - 1) as f64 / (2 * order) as f64;
        let p = Complex::new(theta.cos(), theta.sin()) * wa;
        let mut next = vec![Complex::new(0.0, 0.0); den.len() + 1];
        for (i, &c) in den.iter().enumerate() {
            next[i] += c;
            next[i + 1] -= c * p;
        }
        den = next;
    }
    // den[0] = 1, den[i] multiplies s^(order - i); controllable canonical form
    let n = order;
    let mut a = Mat::<T>::zeros(n, n);
    for i in 0..n - 1 {
        a[(i, i + 1)] = T::one();
    }
    for j in 0..n {
        a[(n - 1, j)] = lit(-den[n - j].re);
    }
    let mut b = vec![T::zero(); n];
    b[n - 1] = T::one();
    let mut c = vec![T::zero(); n];
    c[0] = lit(den[n].re);
    let ss = ss_tustin(&a, &b, &c, T::zero(), dt).map_err(CdobError::Numerics)?;
    LtiFilter::from_discrete(ss, dt)
}
