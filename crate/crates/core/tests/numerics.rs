use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use safedrive_core::numerics::{
    expm, finite_diff_gradient, finite_diff_jacobian, minimize_on_circle, rk4_step, solve_qp, Mat, QpProblem, QpStatus,
};

#[test]
fn rk4_zero_dynamics_is_identity() {
    let x = vec![1.5, -2.0, 3.25];
    let y = rk4_step(|s: &[f64]| vec![0.0; s.len()], &x, 0.01).unwrap();
    assert_eq!(x, y);
}

#[test]
fn rk4_exponential_one_step() {
    let y = rk4_step(|s: &[f64]| s.to_vec(), &[1.0], 0.1).unwrap();
    assert!((y[0] - 0.1f64.exp()).abs() < 1e-6, "{}", y[0]);
    assert!((y[0] - 1.105_170_83).abs() < 1e-8);
}

#[test]
fn rk4_rejects_bad_step_and_nan() {
    assert!(rk4_step(|s: &[f64]| s.to_vec(), &[1.0], 0.0).is_err());
    assert!(rk4_step(|_: &[f64]| vec![f64::NAN], &[1.0], 0.1).is_err());
}

fn linear_error(h: f64) -> f64 {
    let a = [[0.0, 1.0], [-4.0, -0.4]];
    let steps = (1.0 / h).round() as usize;
    let mut x = vec![1.0, 0.0];
    for _ in 0..steps {
        x = rk4_step(|s: &[f64]| vec![a[0][0] * s[0] + a[0][1] * s[1], a[1][0] * s[0] + a[1][1] * s[1]], &x, h).unwrap();
    }
    // independent oracle: nalgebra eigen-free exponential via high-order Taylor in f64
    let m = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -4.0, -0.4]);
    let mut term = DMatrix::<f64>::identity(2, 2);
    let mut sum = DMatrix::<f64>::identity(2, 2);
    for k in 1..60 {
        term = &term * &m / k as f64;
        sum += &term;
    }
    let exact = sum * DVector::from_vec(vec![1.0, 0.0]);
    ((x[0] - exact[0]).powi(2) + (x[1] - exact[1]).powi(2)).sqrt()
}

#[test]
fn rk4_fourth_order_convergence() {
    let e1 = linear_error(0.1);
    let e2 = linear_error(0.05);
    let ratio = e1 / e2;
    println!("rk4 error ratio {ratio:.3}");
    assert!(ratio >= 14.0, "ratio {ratio}");
}

#[test]
fn expm_matches_rotation() {
    let t: f64 = 0.7;
    let m = Mat::from_rows(&[vec![0.0, -t], vec![t, 0.0]]);
    let e = expm(&m);
    assert!((e[(0, 0)] - t.cos()).abs() < 1e-12);
    assert!((e[(1, 0)] - t.sin()).abs() < 1e-12);
}

#[test]
fn qp_unconstrained_minimum() {
    let p = QpProblem::<f64>::unconstrained(Mat::from_diag(&[2.0, 2.0]), vec![0.0, 0.0]);
    let s = solve_qp(&p, 1e-8, 100).unwrap();
    assert_eq!(s.status, QpStatus::Optimal);
    assert!(s.u_star.iter().all(|v| v.abs() < 1e-12));
    assert!(s.objective.abs() < 1e-12);
}

#[test]
fn qp_single_active_row() {
    // min u1^2 + u2^2 s.t. -u1 <= -1
    let p = QpProblem::<f64> {
        hessian: Mat::from_diag(&[2.0, 2.0]),
        linear_cost: vec![0.0, 0.0],
        ineq_matrix: Mat::from_rows(&[vec![-1.0, 0.0]]),
        ineq_bound: vec![-1.0],
    };
    let s = solve_qp(&p, 1e-8, 100).unwrap();
    assert_eq!(s.status, QpStatus::Optimal);
    assert!((s.u_star[0] - 1.0).abs() < 1e-10 && s.u_star[1].abs() < 1e-10);
    assert!((s.objective - 1.0).abs() < 1e-10);
    assert_eq!(s.active_set, vec![0]);
}

#[test]
fn qp_reports_infeasible() {
    let p = QpProblem::<f64> {
        hessian: Mat::from_diag(&[2.0]),
        linear_cost: vec![0.0],
        ineq_matrix: Mat::from_rows(&[vec![1.0], vec![-1.0]]),
        ineq_bound: vec![-1.0, -1.0],
    };
    let s = solve_qp(&p, 1e-8, 100).unwrap();
    assert_eq!(s.status, QpStatus::Infeasible);
}

struct Instance {
    h: DMatrix<f64>,
    c: DVector<f64>,
    a: DMatrix<f64>,
    b: DVector<f64>,
}

fn random_instance(rng: &mut ChaCha8Rng, n: usize, m: usize) -> Instance {
    let g = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
    let h = g.transpose() * &g + DMatrix::identity(n, n) * 0.5;
    let c = DVector::from_fn(n, |_, _| rng.gen_range(-2.0..2.0));
    let a = DMatrix::from_fn(m, n, |_, _| rng.gen_range(-1.0..1.0));
    let u0 = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
    let b = &a * &u0 + DVector::from_fn(m, |_, _| rng.gen_range(0.05..1.0));
    Instance { h, c, a, b }
}

fn to_problem(inst: &Instance) -> QpProblem<f64> {
    let n = inst.h.nrows();
    let m = inst.a.nrows();
    QpProblem {
        hessian: Mat::from_vec(n, n, (0..n * n).map(|k| inst.h[(k / n, k % n)]).collect()),
        linear_cost: inst.c.iter().copied().collect(),
        ineq_matrix: Mat::from_vec(m, n, (0..m * n).map(|k| inst.a[(k / n, k % n)]).collect()),
        ineq_bound: inst.b.iter().copied().collect(),
    }
}

fn objective(inst: &Instance, u: &DVector<f64>) -> f64 {
    0.5 * u.dot(&(&inst.h * u)) + inst.c.dot(u)
}

/// Enumerate every active subset, solve its equality-constrained problem and
/// keep the best feasible point. Exact for a convex QP.
fn brute_force(inst: &Instance) -> (DVector<f64>, f64) {
    let n = inst.h.nrows();
    let m = inst.a.nrows();
    let mut best: Option<(DVector<f64>, f64)> = None;
    for mask in 0u32..(1 << m) {
        let rows: Vec<usize> = (0..m).filter(|i| mask & (1 << i) != 0).collect();
        if rows.len() > n {
            continue;
        }
        let k = rows.len();
        let mut kkt = DMatrix::<f64>::zeros(n + k, n + k);
        let mut rhs = DVector::<f64>::zeros(n + k);
        kkt.view_mut((0, 0), (n, n)).copy_from(&inst.h);
        for (r, &i) in rows.iter().enumerate() {
            for j in 0..n {
                kkt[(n + r, j)] = inst.a[(i, j)];
                kkt[(j, n + r)] = inst.a[(i, j)];
            }
            rhs[n + r] = inst.b[i];
        }
        for j in 0..n {
            rhs[j] = -inst.c[j];
        }
        let Some(sol) = kkt.lu().solve(&rhs) else { continue };
        let u = sol.rows(0, n).into_owned();
        let viol = (&inst.a * &u - &inst.b).max();
        if viol > 1e-9 {
            continue;
        }
        let f = objective(inst, &u);
        if best.as_ref().map_or(true, |b| f < b.1) {
            best = Some((u, f));
        }
    }
    best.expect("instances are feasible by construction")
}

#[test]
fn qp_matches_brute_force_on_random_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let inst = random_instance(&mut rng, 3, 4);
        let (u_ref, f_ref) = brute_force(&inst);
        let s = solve_qp(&to_problem(&inst), 1e-10, 100).unwrap();
        assert_eq!(s.status, QpStatus::Optimal);
        let u = DVector::from_vec(s.u_star.clone());
        worst = worst.max((&u - &u_ref).amax()).max((s.objective - f_ref).abs());
        // grid sanity: no feasible grid point beats the solution
        let step = 0.25;
        for i in -8..=8 {
            for j in -8..=8 {
                for k in -8..=8 {
                    let g = DVector::from_vec(vec![i as f64 * step, j as f64 * step, k as f64 * step]);
                    if (&inst.a * &g - &inst.b).max() <= 0.0 {
                        assert!(objective(&inst, &g) >= s.objective - 1e-9);
                    }
                }
            }
        }
    }
    println!("worst qp deviation from enumeration oracle {worst:.3e}");
    assert!(worst < 1e-6);
}

#[test]
fn circle_cos_minimum() {
    let (r, v) = minimize_on_circle(|r: f64| r.cos(), 1e-8).unwrap();
    assert!((r - std::f64::consts::PI).abs() < 1e-6);
    assert!((v + 1.0).abs() < 1e-12);
}

#[test]
fn circle_constant_function() {
    let (r, v) = minimize_on_circle(|_: f64| 3.5, 1e-8).unwrap();
    assert_eq!(v, 3.5);
    assert!((0.0..std::f64::consts::TAU).contains(&r));
}

#[test]
fn circle_rejects_non_finite() {
    assert!(minimize_on_circle(|r: f64| if r > 3.0 { f64::NAN } else { r }, 1e-8).is_err());
}

#[test]
fn fd_jacobian_identity_and_quadratic() {
    let j = finite_diff_jacobian(|x: &[f64]| x.to_vec(), &[0.3, -1.0, 2.0], 1e-6).unwrap();
    for i in 0..3 {
        for k in 0..3 {
            let want = if i == k { 1.0 } else { 0.0 };
            assert!((j[(i, k)] - want).abs() < 1e-8);
        }
    }
    let g = finite_diff_gradient(|x: &[f64]| x[0] * x[0] + x[1] * x[1], &[1.0, 2.0], 1e-5).unwrap();
    assert!((g[0] - 2.0).abs() < 1e-8 && (g[1] - 4.0).abs() < 1e-8);
}

#[test]
fn generic_over_f32() {
    let y = rk4_step(|s: &[f32]| s.to_vec(), &[1.0f32], 0.1).unwrap();
    assert!((y[0] - 0.1f32.exp()).abs() < 1e-5);
    let p = QpProblem::<f32> {
        hessian: Mat::from_diag(&[2.0, 2.0]),
        linear_cost: vec![0.0, 0.0],
        ineq_matrix: Mat::from_rows(&[vec![-1.0, 0.0]]),
        ineq_bound: vec![-1.0],
    };
    let s = solve_qp(&p, 1e-5, 100).unwrap();
    assert!((s.u_star[0] - 1.0).abs() < 1e-4);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn qp_solution_is_feasible(seed in 0u64..10_000, m in 1usize..8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inst = random_instance(&mut rng, 3, m);
        let prob = to_problem(&inst);
        let s = solve_qp(&prob, 1e-9, 100).unwrap();
        prop_assert_eq!(s.status, QpStatus::Optimal);
        prop_assert!(prob.max_violation(&s.u_star) <= 1e-8);
        prop_assert!(s.objective.is_finite());
    }

    #[test]
    fn circle_beats_uniform_scan(a in -3.0f64..3.0, b in -3.0f64..3.0, k in 1u32..5, ph in 0.0f64..6.0) {
        let f = move |r: f64| a * (k as f64 * r + ph).cos() + b * (r - ph).sin();
        let (_, v) = minimize_on_circle(f, 1e-8).unwrap();
        let scan = (0..360).map(|i| f(i as f64 * std::f64::consts::TAU / 360.0)).fold(f64::INFINITY, f64::min);
        prop_assert!(v <= scan + 1e-8);
    }

    #[test]
    fn solve_qp_is_deterministic(seed in 0u64..1000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let prob = to_problem(&random_instance(&mut rng, 2, 5));
        let s1 = solve_qp(&prob, 1e-9, 100).unwrap();
        let s2 = solve_qp(&prob, 1e-9, 100).unwrap();
        prop_assert_eq!(s1, s2);
    }
}
