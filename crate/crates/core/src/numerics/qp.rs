use serde::{Deserialize, Serialize};

use super::{dot, Mat, NumericsError};
use crate::scalar::{lit, Scalar};

/// Minimize `0.5 u'Hu + c'u` subject to `A u <= b`.
#[derive(Clone, Debug, PartialEq)]
pub struct QpProblem<T> {
    pub hessian: Mat<T>,
    pub linear_cost: Vec<T>,
    pub ineq_matrix: Mat<T>,
    pub ineq_bound: Vec<T>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QpStatus {
    Optimal,
    Infeasible,
    MaxIter,
}

#[derive(Clone, Debug, PartialEq)]
pub struct QpSolution<T> {
    pub u_star: Vec<T>,
    pub objective: T,
    pub status: QpStatus,
    /// Rows held with equality at the solution.
    pub active_set: Vec<usize>,
    /// Lagrange multipliers, aligned with `active_set`.
    pub multipliers: Vec<T>,
    pub iterations: usize,
    pub kkt_residual: T,
}

impl<T: Scalar> QpProblem<T> {
    /// Problem without inequality rows.
    pub fn unconstrained(hessian: Mat<T>, linear_cost: Vec<T>) -> Self {
        let n = linear_cost.len();
        Self { hessian, linear_cost, ineq_matrix: Mat::zeros(0, n), ineq_bound: Vec::new() }
    }

    pub fn dim(&self) -> usize {
        self.linear_cost.len()
    }

    pub fn rows(&self) -> usize {
        self.ineq_bound.len()
    }

    pub fn objective(&self, u: &[T]) -> T {
        let hu = self.hessian.mul_vec(u);
        lit::<T>(0.5) * dot(u, &hu) + dot(&self.linear_cost, u)
    }

    /// Largest row violation `max(a_i u - b_i)`, or `-inf` with no rows.
    pub fn max_violation(&self, u: &[T]) -> T {
        (0..self.rows())
            .map(|i| dot(self.ineq_matrix.row(i), u) - self.ineq_bound[i])
            .fold(T::neg_infinity(), T::max)
    }

    fn validate(&self) -> Result<(), NumericsError> {
        let n = self.dim();
        if self.hessian.rows() != n || self.hessian.cols() != n {
            return Err(NumericsError::Dimension(format!(
                "hessian {}x{} for {n} variables",
                self.hessian.rows(),
                self.hessian.cols()
            )));
        }
        if self.ineq_matrix.rows() != self.rows() || (self.rows() > 0 && self.ineq_matrix.cols() != n) {
            return Err(NumericsError::Dimension(format!(
                "inequality matrix {}x{} with {} bounds",
                self.ineq_matrix.rows(),
                self.ineq_matrix.cols(),
                self.rows()
            )));
        }
        let finite = self.hessian.is_finite()
            && self.ineq_matrix.is_finite()
            && self.linear_cost.iter().chain(&self.ineq_bound).all(|v| v.is_finite());
        if !finite {
            return Err(NumericsError::InvalidArgument("non-finite problem data".into()));
        }
        Ok(())
    }
}

fn is_spd<T: Scalar>(h: &Mat<T>) -> bool {
    let n = h.rows();
    let mut l = Mat::<T>::zeros(n, n);
    for j in 0..n {
        let mut d = h[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !(d > T::zero()) {
            return false;
        }
        let ljj = d.sqrt();
        l[(j, j)] = ljj;
        for i in j + 1..n {
            let mut s = h[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / ljj;
        }
    }
    true
}

struct Inner<T> {
    x: Vec<T>,
    working: Vec<usize>,
    lambda: Vec<T>,
    iterations: usize,
    converged: bool,
}

/// Primal active-set iterations from a feasible `x` whose working rows hold
/// with equality.
#[allow(clippy::too_many_arguments)]
fn primal_active_set<T: Scalar>(
    h: &Mat<T>,
    c: &[T],
    a: &Mat<T>,
    b: &[T],
    mut x: Vec<T>,
    mut working: Vec<usize>,
    tol: T,
    max_iter: usize,
) -> Result<Inner<T>, NumericsError> {
    let n = c.len();
    let m = b.len();
    let mut lambda = Vec::new();
    for it in 0..max_iter {
        let g: Vec<T> = h.mul_vec(&x).iter().zip(c).map(|(&hx, &ci)| hx + ci).collect();
        let k = working.len();
        let mut kkt = Mat::zeros(n + k, n + k);
        let mut rhs = vec![T::zero(); n + k];
        for i in 0..n {
            for j in 0..n {
                kkt[(i, j)] = h[(i, j)];
            }
            rhs[i] = -g[i];
        }
        for (w, &row) in working.iter().enumerate() {
            for j in 0..n {
                let v = a[(row, j)];
                kkt[(n + w, j)] = v;
                kkt[(j, n + w)] = v;
            }
        }
        let sol = kkt.solve(&rhs).ok_or(NumericsError::Singular("active-set KKT system"))?;
        let p = &sol[..n];
        lambda = sol[n..].to_vec();
        let pnorm = p.iter().fold(T::zero(), |acc, &v| acc.max(v.abs()));
        let xnorm = x.iter().fold(T::zero(), |acc, &v| acc.max(v.abs()));
        if pnorm <= tol * (T::one() + xnorm) {
            let (mut worst, mut worst_val) = (None, -tol);
            for (w, &l) in lambda.iter().enumerate() {
                if l < worst_val {
                    worst_val = l;
                    worst = Some(w);
                }
            }
            match worst {
                None => return Ok(Inner { x, working, lambda, iterations: it + 1, converged: true }),
                Some(w) => {
                    working.remove(w);
                }
            }
            continue;
        }
        let mut alpha = T::one();
        let mut blocking = None;
        for row in 0..m {
            if working.contains(&row) {
                continue;
            }
            let ap = dot(a.row(row), p);
            if ap > T::epsilon() * lit(16.0) {
                let slack = b[row] - dot(a.row(row), &x);
                let r = (slack / ap).max(T::zero());
                if r < alpha {
                    alpha = r;
                    blocking = Some(row);
                }
            }
        }
        for i in 0..n {
            x[i] += alpha * p[i];
        }
        if let Some(row) = blocking {
            working.push(row);
        }
    }
    Ok(Inner { x, working, lambda, iterations: max_iter, converged: false })
}

/// Keep a linearly independent subset of candidate rows (modified Gram-Schmidt).
fn independent_rows<T: Scalar>(a: &Mat<T>, candidates: &[usize]) -> Vec<usize> {
    let n = a.cols();
    let mut basis: Vec<Vec<T>> = Vec::new();
    let mut keep = Vec::new();
    for &row in candidates {
        let mut v = a.row(row).to_vec();
        let scale = v.iter().fold(T::zero(), |acc, &x| acc.max(x.abs()));
        if scale == T::zero() {
            continue;
        }
        for q in &basis {
            let d = dot(&v, q);
            for j in 0..n {
                v[j] -= d * q[j];
            }
        }
        let nv = dot(&v, &v).sqrt();
        if nv > scale * lit(1e-9) && keep.len() < n {
            basis.push(v.iter().map(|&x| x / nv).collect());
            keep.push(row);
        }
    }
    keep
}

/// Minimum-norm correction putting `u` exactly on the rows `w`, via the
/// row Gram-Schmidt factor `A_w = L Q` (avoids squaring the conditioning).
fn snap_onto_rows<T: Scalar>(a: &Mat<T>, b: &[T], w: &[usize], u: &mut [T]) -> Result<(), NumericsError> {
    let n = a.cols();
    let mut q: Vec<Vec<T>> = Vec::with_capacity(w.len());
    let mut y: Vec<T> = Vec::with_capacity(w.len());
    for &ri in w {
        let row = a.row(ri);
        let mut v = row.to_vec();
        let mut rhs = b[ri] - dot(row, u);
        for (qk, &yk) in q.iter().zip(&y) {
            let l = dot(&v, qk);
            for j in 0..n {
                v[j] -= l * qk[j];
            }
            rhs -= l * yk;
        }
        let nv = dot(&v, &v).sqrt();
        if !(nv > T::zero()) {
            return Err(NumericsError::Singular("phase-1 snap"));
        }
        q.push(v.iter().map(|&x| x / nv).collect());
        y.push(rhs / nv);
    }
    for (qk, &yk) in q.iter().zip(&y) {
        for j in 0..n {
            u[j] += yk * qk[j];
        }
    }
    Ok(())
}

/// Solve a small dense strictly convex QP with a primal active-set method.
///
/// A feasible start comes from a phase-1 problem in `(u, t)` that minimizes
/// the common row relaxation `t`; it is then snapped onto its near-active rows.
pub fn solve_qp<T: Scalar>(problem: &QpProblem<T>, tol: T, max_iter: usize) -> Result<QpSolution<T>, NumericsError> {
    problem.validate()?;
    if !(tol > T::zero()) {
        return Err(NumericsError::InvalidArgument("tolerance must be positive".into()));
    }
    let n = problem.dim();
    let m = problem.rows();
    let mut h = problem.hessian.clone();
    if !is_spd(&h) {
        let reg = lit::<T>(1e-9) * (T::one() + h.norm_inf());
        for i in 0..n {
            h[(i, i)] += reg;
        }
        if !is_spd(&h) {
            return Err(NumericsError::InvalidArgument("hessian is not positive definite".into()));
        }
    }
    let c = &problem.linear_cost;
    // unit-norm rows: CLF/CBF rows can be 1e4 times larger than box rows
    let mut a_eq = problem.ineq_matrix.clone();
    let mut b_eq = problem.ineq_bound.clone();
    let mut row_norm = vec![T::one(); m];
    for i in 0..m {
        let nr = dot(a_eq.row(i), a_eq.row(i)).sqrt();
        if nr > T::zero() {
            row_norm[i] = nr;
            for j in 0..n {
                a_eq[(i, j)] /= nr;
            }
            b_eq[i] /= nr;
        }
    }
    let a = &a_eq;
    let b = &b_eq;
    let bscale = b.iter().fold(T::one(), |acc, &v| acc.max(v.abs()));
    let feas_tol = tol.max(lit(1e-7)) * bscale;

    let u0 = h.solve(&c.iter().map(|&v| -v).collect::<Vec<_>>()).ok_or(NumericsError::Singular("hessian"))?;
    let viol0 = problem.max_violation(&u0);

    let (start, working, phase1_iters) = if m == 0 || viol0 <= T::zero() {
        (u0, Vec::new(), 0)
    } else {
        // phase 1: min 0.5 t^2 + 0.5 eta |u - u0|^2  s.t.  a_i u - t <= b_i
        let eta: T = T::epsilon().sqrt() * lit(1e-2);
        let mut h1 = Mat::zeros(n + 1, n + 1);
        let mut c1 = vec![T::zero(); n + 1];
        for i in 0..n {
            h1[(i, i)] = eta;
            c1[i] = -eta * u0[i];
        }
        h1[(n, n)] = T::one();
        let mut a1 = Mat::zeros(m, n + 1);
        for i in 0..m {
            for j in 0..n {
                a1[(i, j)] = a[(i, j)];
            }
            a1[(i, n)] = -T::one();
        }
        let mut x1 = u0.clone();
        x1.push(viol0);
        let p1 = primal_active_set(&h1, &c1, &a1, b, x1, Vec::new(), tol, max_iter.max(4 * (m + n)))?;
        let t = p1.x[n];
        let u1 = p1.x[..n].to_vec();
        if t > feas_tol {
            return Ok(QpSolution {
                objective: problem.objective(&u1),
                u_star: u1,
                status: QpStatus::Infeasible,
                active_set: Vec::new(),
                multipliers: Vec::new(),
                iterations: p1.iterations,
                kkt_residual: T::infinity(),
            });
        }
        let near: Vec<usize> =
            (0..m).filter(|&i| dot(a.row(i), &u1) - b[i] >= -feas_tol).collect();
        let w = independent_rows(a, &near);
        let mut u = u1;
        snap_onto_rows(a, b, &w, &mut u)?;
        (u, w, p1.iterations)
    };

    let inner = primal_active_set(&h, c, a, b, start, working, tol, max_iter)?;
    let mut grad: Vec<T> = h.mul_vec(&inner.x).iter().zip(c).map(|(&hx, &ci)| hx + ci).collect();
    for (w, &row) in inner.working.iter().enumerate() {
        for j in 0..n {
            grad[j] += inner.lambda.get(w).copied().unwrap_or(T::zero()) * a[(row, j)];
        }
    }
    let kkt_residual = grad.iter().fold(T::zero(), |acc, &v| acc.max(v.abs()));
    let multipliers = inner.working.iter().zip(&inner.lambda).map(|(&r, &l)| l / row_norm[r]).collect();
    Ok(QpSolution {
        objective: problem.objective(&inner.x),
        status: if inner.converged { QpStatus::Optimal } else { QpStatus::MaxIter },
        active_set: inner.working,
        multipliers,
        iterations: inner.iterations + phase1_iters,
        kkt_residual,
        u_star: inner.x,
    })
}
