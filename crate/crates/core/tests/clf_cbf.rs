use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use safedrive_core::clf_cbf::*;
use safedrive_core::numerics::{rk4_step, QpStatus};
use safedrive_core::path::{advance_progress, densify_waypoints, fit_segmented_path, PathProgress};
use safedrive_core::vehicle::{offset_point, unicycle_center_deriv, UnicycleState};
use safedrive_core::{EllipseRegion64, ParamPath64};

const VEHICLE: (f64, f64) = (2.5, 1.2);

fn cfg() -> ClfCbfConfig<f64> {
    ClfCbfConfig::default()
}

fn straight(len: f64) -> ParamPath64 {
    let d = densify_waypoints(&[[0.0, 0.0], [len, 0.0]], 1.0).unwrap();
    fit_segmented_path(&d, 2, 3).unwrap()
}

fn random_region(rng: &mut ChaCha8Rng) -> EllipseRegion64 {
    let a = rng.gen_range(0.5..3.0);
    let b = rng.gen_range(0.3..a);
    EllipseRegion::new([rng.gen_range(-6.0..6.0), rng.gen_range(-6.0..6.0)], rng.gen_range(-3.1..3.1), a, b)
}

#[test]
fn clf_row_examples() {
    let r = clf_row([0.0, 0.0], 0.4, [0.3, 0.1], &cfg());
    assert_eq!(r.coeffs, [0.0, 0.0, -1.0]);
    assert_eq!(r.bound, 0.0);
    let r = clf_row([1.0, 0.0], 0.0, [0.0, 0.0], &cfg());
    assert_eq!(r.coeffs[0], 1.0);
    assert_eq!(r.bound, -0.5);
}

#[test]
fn clf_row_matches_lyapunov_rate() {
    let c = cfg();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..100 {
        let s = UnicycleState::new(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0), rng.gen_range(-3.0..3.0));
        let (v, w) = (rng.gen_range(-2.0..2.0), rng.gen_range(-1.5..1.5));
        let pd0 = [rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0)];
        let pt = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        let lyap = |st: &UnicycleState<f64>, t: f64| {
            let p = offset_point(st, c.d_offset);
            let e = [p[0] - pd0[0] - pt[0] * t, p[1] - pd0[1] - pt[1] * t];
            0.5 * (e[0] * e[0] + e[1] * e[1])
        };
        let h = 1e-5;
        let fwd = rk4_step(|x: &[f64]| unicycle_center_deriv(&UnicycleState::from_slice(x), v, w).to_vec(), &s.to_vec(), h).unwrap();
        let bwd = rk4_step(|x: &[f64]| unicycle_center_deriv(&UnicycleState::from_slice(x), -v, -w).to_vec(), &s.to_vec(), h).unwrap();
        let fwd = UnicycleState { x_c: fwd[0], y_c: fwd[1], theta: fwd[2] };
        let bwd = UnicycleState { x_c: bwd[0], y_c: bwd[1], theta: bwd[2] };
        let rate = (lyap(&fwd, h) - lyap(&bwd, -h)) / (2.0 * h);
        let p = offset_point(&s, c.d_offset);
        let e = [p[0] - pd0[0], p[1] - pd0[1]];
        let r = clf_row(e, s.theta, pt, &c);
        let e2 = e[0] * e[0] + e[1] * e[1];
        // row: coeffs.u - eps <= bound  <=>  Vdot + alpha V <= eps
        let analytic = r.coeffs[0] * v + r.coeffs[1] * w - (r.bound + c.alpha * 0.5 * e2);
        assert!((rate - analytic).abs() <= 1e-4 * analytic.abs().max(1.0), "{rate} vs {analytic}");
    }
}

#[test]
fn ellipse_h_examples() {
    let r = EllipseRegion::new([1.0, 2.0], 0.3, 2.0, 1.0);
    assert_eq!(ellipse_h(&r, [1.0, 2.0]), -0.5);
    let c = EllipseRegion::<f64>::new([0.0, 0.0], 0.0, 2.0, 2.0);
    assert!((ellipse_h(&c, [4.0, 0.0]) - 1.5).abs() < 1e-15);
}

#[test]
fn ellipse_boundary_examples() {
    let r = EllipseRegion::new([1.0, 2.0], 0.0, 3.0, 1.5);
    let p = ellipse_boundary(&r, 0.0);
    assert_eq!(p, [4.0, 2.0]);
    let p = ellipse_boundary(&r, std::f64::consts::FRAC_PI_2);
    assert!((p[0] - 1.0).abs() < 1e-15 && (p[1] - 3.5).abs() < 1e-15);
}

#[test]
fn pair_barrier_examples() {
    let r = EllipseRegion::new([0.0, 0.0], 0.2, 2.0, 1.0);
    assert!(pair_barrier(&r, &r).unwrap().0 < 0.0);
    let a = EllipseRegion::<f64>::new([0.0, 0.0], 0.0, 1.0, 1.0);
    let b = EllipseRegion::new([10.0, 0.0], 0.0, 1.0, 1.0);
    let (h, rho) = pair_barrier(&a, &b).unwrap();
    assert!((h - 40.0).abs() < 1e-9, "{h}");
    assert!((rho - std::f64::consts::PI).abs() < 1e-4);
}

#[test]
fn pair_barrier_matches_dense_scan() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let i = random_region(&mut rng);
        let j = random_region(&mut rng);
        let (h, _) = pair_barrier(&i, &j).unwrap();
        let at = |rho: f64| ellipse_h(&i, ellipse_boundary(&j, rho));
        let step = std::f64::consts::TAU / 3600.0;
        let (k_best, coarse) = (0..3600).map(|k| (k, at(k as f64 * step))).fold((0, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
        assert!(h <= coarse + 1e-12);
        // second scan of the same density inside the winning cell pair
        let centre = k_best as f64 * step;
        let fine = (0..=3600).map(|k| at(centre - step + 2.0 * step * k as f64 / 3600.0)).fold(coarse, f64::min);
        worst = worst.max((fine - h).abs());
    }
    println!("pair barrier worst gap to refined scan {worst:.3e}");
    assert!(worst <= 1e-6);
}

#[test]
fn barrier_gradients_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let step = 1e-6;
    for _ in 0..100 {
        let i = random_region(&mut rng);
        let j = random_region(&mut rng);
        let g = pair_barrier_gradients(&i, &j).unwrap();
        let f = |ii: &EllipseRegion64, jj: &EllipseRegion64| pair_barrier(ii, jj).unwrap().0;
        let cd = |plus: (EllipseRegion64, EllipseRegion64), minus: (EllipseRegion64, EllipseRegion64)| {
            (f(&plus.0, &plus.1) - f(&minus.0, &minus.1)) / (2.0 * step)
        };
        let shift = |r: &EllipseRegion64, dx: f64, dy: f64, dt: f64| EllipseRegion { p_c: [r.p_c[0] + dx, r.p_c[1] + dy], theta: r.theta + dt, ..*r };
        let fd = [
            cd((shift(&i, step, 0.0, 0.0), j), (shift(&i, -step, 0.0, 0.0), j)),
            cd((shift(&i, 0.0, step, 0.0), j), (shift(&i, 0.0, -step, 0.0), j)),
            cd((shift(&i, 0.0, 0.0, step), j), (shift(&i, 0.0, 0.0, -step), j)),
            cd((i, shift(&j, step, 0.0, 0.0)), (i, shift(&j, -step, 0.0, 0.0))),
            cd((i, shift(&j, 0.0, step, 0.0)), (i, shift(&j, 0.0, -step, 0.0))),
            cd((i, shift(&j, 0.0, 0.0, step)), (i, shift(&j, 0.0, 0.0, -step))),
        ];
        let an = [g.d_pi[0], g.d_pi[1], g.d_theta_i, g.d_pj[0], g.d_pj[1], g.d_theta_j];
        for k in 0..6 {
            assert!((fd[k] - an[k]).abs() <= 1e-3 * an[k].abs().max(1.0), "component {k}: {} vs {}", fd[k], an[k]);
        }
    }
}

#[test]
fn concentric_circles_use_fallback() {
    let a = EllipseRegion::<f64>::new([0.0, 0.0], 0.0, 3.0, 3.0);
    let b = EllipseRegion::new([0.0, 0.0], 0.0, 1.0, 1.0);
    let g = pair_barrier_gradients(&a, &b).unwrap();
    assert!(g.finite_difference);
    assert!(g.d_theta_i.abs() < 1e-6 && g.d_theta_j.abs() < 1e-6);
}

#[test]
fn far_obstacle_row_is_slack() {
    let vehicle = EllipseRegion::new([0.0, 0.0], 0.0, VEHICLE.0, VEHICLE.1);
    let obs = MovingEllipse::stationary(EllipseRegion::new([40.0, 30.0], 0.5, 2.0, 1.0));
    let r = cbf_row(&vehicle, &obs, &cfg()).unwrap();
    assert!(r.h > 100.0);
    assert!(r.row.bound > 0.0);
}

#[test]
fn head_on_geometry_has_no_turn_preference() {
    let vehicle = EllipseRegion::new([0.0, 0.0], 0.0, VEHICLE.0, VEHICLE.1);
    let obs = MovingEllipse::stationary(EllipseRegion::new([10.0, 0.0], 0.0, 1.5, 1.0));
    let r = cbf_row(&vehicle, &obs, &cfg()).unwrap();
    assert!(r.row.coeffs[1].abs() < 1e-6, "{:?}", r.row);
    assert!(r.row.coeffs[0] > 0.0);
}

#[test]
fn config_rejects_zero_offset() {
    let c = ClfCbfConfig { d_offset: 0.0, ..cfg() };
    assert!(c.validate().is_err());
    let path = straight(20.0);
    let s = UnicycleState::new(0.0, 0.0, 0.0);
    let pr = PathProgress { gamma: 0.0, gamma_d: 1.0 };
    assert!(solve_unicycle_control(&s, VEHICLE, &path, &pr, &[], &c).is_err());
}

#[test]
fn resting_on_path_commands_nothing() {
    let path = straight(50.0);
    let c = cfg();
    let g = 10.0;
    let pt = path.eval(g).point;
    let s = UnicycleState::new(pt[0] - c.d_offset, pt[1], 0.0);
    let cmd = solve_unicycle_control(&s, VEHICLE, &path, &PathProgress { gamma: g, gamma_d: 0.0 }, &[], &c).unwrap();
    assert_eq!(cmd.status, QpStatus::Optimal);
    assert!(cmd.v.abs() < 1e-12 && cmd.omega.abs() < 1e-12 && cmd.eps.abs() < 1e-12);
}

#[test]
fn clf_condition_holds_at_solution() {
    let path = straight(50.0);
    let c = ClfCbfConfig { v_max: 100.0, omega_max: 100.0, ..cfg() };
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..50 {
        let s = UnicycleState::new(rng.gen_range(0.0..30.0), rng.gen_range(-3.0..3.0), rng.gen_range(-1.0..1.0));
        let pr = PathProgress { gamma: rng.gen_range(5.0..40.0), gamma_d: 1.0 };
        let cmd = solve_unicycle_control(&s, VEHICLE, &path, &pr, &[], &c).unwrap();
        let pd = path.eval(pr.gamma);
        let pt = [pd.tangent[0] * cmd.gamma_rate, pd.tangent[1] * cmd.gamma_rate];
        let row = clf_row(cmd.tracking_error, s.theta, pt, &c);
        let lhs = row.coeffs[0] * cmd.v + row.coeffs[1] * cmd.omega - cmd.eps;
        assert!(lhs <= row.bound + 1e-9);
    }
}

/// The barrier condition holds in continuous time. With a 10 ms zero-order
/// hold and the long vehicle ellipse turning at up to 2 rad/s, grazing
/// passes dip a few 1e-3 below zero (millimetres of overlap).
const HOLD_TOL: f64 = 1e-2;

/// Closed loop on a straight path with obstacles near the line.
fn closed_loop(obstacles: &[MovingEllipse<f64>], start: UnicycleState<f64>, seconds: f64) -> (f64, f64, bool) {
    let c = cfg();
    let path = straight(60.0);
    let dt = 0.01;
    let mut s = start;
    let mut pr = PathProgress { gamma: path.gamma_min(), gamma_d: 1.0 };
    let mut min_h = f64::INFINITY;
    let mut any_fallback = false;
    for _ in 0..(seconds / dt) as usize {
        let cmd = solve_unicycle_control(&s, VEHICLE, &path, &pr, obstacles, &c).unwrap();
        assert!(cmd.v.abs() <= c.v_max && cmd.omega.abs() <= c.omega_max);
        any_fallback |= cmd.fallback;
        let x = rk4_step(|x: &[f64]| unicycle_center_deriv(&UnicycleState::from_slice(x), cmd.v, cmd.omega).to_vec(), &s.to_vec(), dt)
            .unwrap();
        s = UnicycleState::new(x[0], x[1], x[2]);
        pr = advance_progress(pr, &cmd.tracking_error, dt, c.sigma);
        pr.gamma = pr.gamma.min(path.gamma_max());
        let vehicle = EllipseRegion::new([s.x_c, s.y_c], s.theta, VEHICLE.0, VEHICLE.1);
        for o in obstacles {
            let hh = pair_barrier(&vehicle, &o.region).unwrap().0;
            min_h = min_h.min(hh);
        }
    }
    (min_h, s.x_c, any_fallback)
}

#[test]
fn blocking_obstacle_is_never_entered() {
    let obs = [MovingEllipse::stationary(EllipseRegion::new([20.0, 0.4], 0.0, 2.0, 1.5))];
    let (min_h, x_end, fallback) = closed_loop(&obs, UnicycleState::new(-0.5, 0.0, 0.0), 60.0);
    println!("blocking obstacle: min h {min_h:.2e}, final x {x_end:.2}, fallback {fallback}");
    assert!(min_h >= -HOLD_TOL, "{min_h}");
    assert!(x_end > 25.0, "vehicle should get past the obstacle, ended at {x_end}");
}

#[test]
fn randomized_static_scenes_stay_safe() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for k in 0..10 {
        let obs: Vec<_> = (0..rng.gen_range(1..4))
            .map(|_| {
                MovingEllipse::stationary(EllipseRegion::new(
                    [rng.gen_range(10.0..45.0), rng.gen_range(-2.5..2.5)],
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(1.0..2.0),
                    rng.gen_range(0.5..1.0),
                ))
            })
            .collect();
        let (min_h, _, fallback) = closed_loop(&obs, UnicycleState::new(-0.5, 0.0, 0.0), 30.0);
        println!("scene {k}: min h {min_h:.2e} fallback {fallback}");
        if !fallback {
            assert!(min_h >= -HOLD_TOL, "scene {k}: {min_h}");
        }
    }
}

proptest! {
    #[test]
    fn boundary_points_have_zero_barrier(rho in 0.0f64..6.3, x in -10.0f64..10.0, y in -10.0f64..10.0, th in -3.2f64..3.2, a in 0.3f64..5.0, ratio in 0.1f64..1.0) {
        let r = EllipseRegion::new([x, y], th, a, a * ratio);
        prop_assert!(ellipse_h(&r, ellipse_boundary(&r, rho)).abs() < 1e-12);
    }

    #[test]
    fn congruent_circles_agree_in_sign(dx in -6.0f64..6.0, dy in -6.0f64..6.0, r in 0.5f64..2.0) {
        prop_assume!(((dx * dx + dy * dy).sqrt() - 2.0 * r).abs() > 1e-6);
        let a = EllipseRegion::new([0.0, 0.0], 0.0, r, r);
        let b = EllipseRegion::new([dx, dy], 1.0, r, r);
        let hab = pair_barrier(&a, &b).unwrap().0;
        let hba = pair_barrier(&b, &a).unwrap().0;
        prop_assert_eq!(hab > 0.0, hba > 0.0);
    }
}
