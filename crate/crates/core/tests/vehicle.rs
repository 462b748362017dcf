use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use safedrive_core::numerics::{finite_diff_jacobian, rk4_step};
use safedrive_core::vehicle::*;
use safedrive_core::VehicleParams64;

fn params() -> VehicleParams64 {
    VehicleParams::default()
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * b.abs().max(1.0)
}

#[test]
fn unicycle_examples() {
    let s = UnicycleState::new(0.0, 0.0, 0.0);
    assert_eq!(unicycle_deriv(&s, 1.0, 0.0, 0.0), [1.0, 0.0, 0.0]);
    let s = UnicycleState::new(0.0, 0.0, std::f64::consts::FRAC_PI_2);
    let d = unicycle_deriv(&s, 0.0, 1.0, 2.0);
    assert!((d[0] + 2.0).abs() < 1e-12 && d[1].abs() < 1e-12 && d[2] == 1.0);
}

#[test]
fn unicycle_wraps_heading() {
    let s = UnicycleState::new(0.0, 0.0, 3.0 * std::f64::consts::PI);
    assert!((s.theta - std::f64::consts::PI).abs() < 1e-12);
}

#[test]
fn lateral_coefficients_at_five_mps() {
    let k = lateral_coeffs(&params(), 5.0);
    assert!((k.a11 + 40.0).abs() < 1e-12);
    assert!((k.a12 + 1.0).abs() < 1e-12);
    assert!(k.a21.abs() < 1e-12);
    assert!((k.a22 + 93.87).abs() < 0.01, "{}", k.a22);
    assert!((k.b1 - 20.0).abs() < 1e-12);
    assert!((k.b2 - 117.35).abs() < 0.01, "{}", k.b2);
}

#[test]
fn lateral_equilibrium_moves_along_heading() {
    let s = Lateral5DofState { beta: 0.0, r: 0.0, x: 1.0, y: 2.0, psi: 0.3 };
    let d = lateral5dof_deriv(&s, 0.0, &params(), 5.0).unwrap();
    assert_eq!((d.beta, d.r, d.psi), (0.0, 0.0, 0.0));
    assert!((d.x - 5.0 * 0.3f64.cos()).abs() < 1e-12 && (d.y - 5.0 * 0.3f64.sin()).abs() < 1e-12);
}

#[test]
fn low_speed_is_rejected() {
    let s = Lateral5DofState::default();
    assert!(lateral5dof_deriv(&s, 0.0, &params(), 0.05).is_err());
    assert!(linear_pt_deriv(&LinearPtState::default(), 0.0, 0.0, 0.0, 0.0, &params(), 0.1).is_err());
    let e = ExtendedState::rolling(0.0, 0.0, 0.0, 0.05);
    assert!(extended_deriv(&e, &ExtendedInput::default(), &params()).is_err());
}

#[test]
fn linear_pt_examples() {
    let p = params();
    let z = LinearPtState::default();
    let d = linear_pt_deriv(&z, 0.0, 0.0, 0.0, 0.0, &p, 5.0).unwrap();
    assert_eq!(d, LinearPtState::default());
    let d = linear_pt_deriv(&z, 0.0, 0.0, 0.01, 0.0, &p, 5.0).unwrap();
    assert!((d.dpsi_p + 0.05).abs() < 1e-12 && (d.e_y + 0.25).abs() < 1e-12);
    let d = linear_pt_deriv(&z, 0.0, 0.0, 0.0, 100.0, &p, 5.0).unwrap();
    assert!((d.r - 100.0 / p.i_z).abs() < 1e-15 && d.beta == 0.0);
}

#[test]
fn linear_pt_jacobian_is_state_matrix() {
    let p = params();
    let m = linear_pt_matrices(&p, 8.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..100 {
        let x: Vec<f64> = (0..4).map(|_| rng.gen_range(-0.5..0.5)).collect();
        let j = finite_diff_jacobian(
            |s: &[f64]| linear_pt_deriv(&LinearPtState::from_slice(s), 0.02, 0.0, 0.01, 0.0, &p, 8.0).unwrap().to_vec(),
            &x,
            1e-5,
        )
        .unwrap();
        for i in 0..4 {
            for k in 0..4 {
                assert!(close(j[(i, k)], m.a[(i, k)], 1e-4), "({i},{k}) {} vs {}", j[(i, k)], m.a[(i, k)]);
            }
        }
    }
}

#[test]
fn lateral_jacobian_matches_coefficients() {
    let p = params();
    let k = lateral_coeffs(&p, 5.0);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..100 {
        let x: Vec<f64> = (0..5).map(|_| rng.gen_range(-0.3..0.3)).collect();
        let j = finite_diff_jacobian(
            |s: &[f64]| lateral5dof_deriv(&Lateral5DofState::from_slice(s), 0.1, &p, 5.0).unwrap().to_vec(),
            &x,
            1e-6,
        )
        .unwrap();
        let want = [[k.a11, k.a12], [k.a21, k.a22]];
        for i in 0..2 {
            for c in 0..2 {
                assert!(close(j[(i, c)], want[i][c], 1e-4));
            }
        }
        // position rows: d(xdot)/d(beta) = -V sin(beta + psi)
        let course = x[0] + x[4];
        assert!(close(j[(2, 0)], -5.0 * course.sin(), 1e-4));
        assert!(close(j[(3, 4)], 5.0 * course.cos(), 1e-4));
    }
}

/// Derivative recovered from the RK4 flow map, with the first-order error
/// removed by Richardson extrapolation.
fn flow_derivative(f: impl Fn(&[f64]) -> Vec<f64>, x: &[f64], h: f64) -> Vec<f64> {
    let x1 = rk4_step(&f, x, h).unwrap();
    let x2 = rk4_step(&f, x, 2.0 * h).unwrap();
    (0..x.len()).map(|i| 2.0 * (x1[i] - x[i]) / h - (x2[i] - x[i]) / (2.0 * h)).collect()
}

#[test]
fn analytic_derivatives_match_flow_map() {
    let p = params();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..100 {
        let x: Vec<f64> = vec![
            rng.gen_range(-0.05..0.05),
            rng.gen_range(-0.3..0.3),
            rng.gen_range(-10.0..10.0),
            rng.gen_range(-10.0..10.0),
            rng.gen_range(-3.0..3.0),
        ];
        let delta = rng.gen_range(-0.3..0.3);
        let f = |s: &[f64]| lateral5dof_deriv(&Lateral5DofState::from_slice(s), delta, &p, 5.0).unwrap().to_vec();
        let fd = flow_derivative(f, &x, 1e-5);
        let an = f(&x);
        for i in 0..5 {
            assert!(close(fd[i], an[i], 1e-4), "lateral component {i}: {} vs {}", fd[i], an[i]);
        }

        let e = vec![
            rng.gen_range(-0.05..0.05),
            rng.gen_range(5.0..20.0),
            rng.gen_range(-0.2..0.2),
            rng.gen_range(-3.0..3.0),
            rng.gen_range(-10.0..10.0),
            rng.gen_range(-10.0..10.0),
            rng.gen_range(-0.5..0.5),
            rng.gen_range(-0.5..0.5),
        ];
        let input = ExtendedInput { delta_f: rng.gen_range(-0.05..0.05), m_drive_f: rng.gen_range(-50.0..50.0), ..Default::default() };
        let g = |s: &[f64]| extended_deriv(&ExtendedState::from_slice(s), &input, &p).unwrap().to_vec();
        let fd = flow_derivative(g, &e, 1e-7);
        let an = g(&e);
        for i in 0..8 {
            assert!(close(fd[i], an[i], 1e-4), "extended component {i}: {} vs {}", fd[i], an[i]);
        }
    }
}

#[test]
fn dugoff_zero_slip_and_g_factors() {
    let p = params();
    let t = dugoff_forces(0.0, 0.0, &p, 14715.0).unwrap();
    assert_eq!((t.f_x, t.f_y), (0.0, 0.0));
    assert!(t.z.is_infinite() && t.f_z_factor == 1.0);
    assert_eq!(t.g_x, 1.5);
    assert_eq!(t.g_y, 1.5);
    let q = VehicleParams { mu: 0.3, ..p };
    assert_eq!(dugoff_forces(0.0, 0.0, &q, 14715.0).unwrap().g_y, 1.5);
}

#[test]
fn dugoff_matches_symbolic_evaluation() {
    let p = VehicleParams { mu: 0.9, c_x: 8e4, c_y: 1.5e5, ..params() };
    let t = dugoff_forces(0.1, 0.05, &p, 7357.5).unwrap();
    // 40-digit evaluation of the same closed form
    let z = 0.271_627_216_910_110_35;
    let fx = 5_880.932_893_043_044;
    let fy = 5_736.150_659_919_093;
    assert!(t.z < 1.0);
    assert!((t.z - z).abs() < 1e-15);
    assert!((t.f_z_factor - z * (2.0 - z)).abs() < 1e-15);
    assert!((t.f_x - fx).abs() <= 1e-12 * fx, "{}", t.f_x);
    assert!((t.f_y - fy).abs() <= 1e-12 * fy, "{}", t.f_y);
}

#[test]
fn dugoff_continuous_at_unit_utilization() {
    let p = params();
    // choose alpha so that Z = 1 exactly at s = 0
    let f_z = 14715.0;
    let tan_a = p.mu * f_z / (2.0 * p.c_y);
    let a0 = tan_a.atan();
    let at = dugoff_forces(0.0, a0, &p, f_z).unwrap();
    assert!((at.z - 1.0).abs() < 1e-12);
    for eps in [1e-6, 1e-8, 1e-10] {
        let lo = dugoff_forces(0.0, a0 - eps, &p, f_z).unwrap();
        let hi = dugoff_forces(0.0, a0 + eps, &p, f_z).unwrap();
        assert!(lo.z > 1.0 && hi.z < 1.0);
        assert!((hi.f_z_factor - 1.0).abs() < 1e-6);
        assert!((lo.f_z_factor - 1.0).abs() < 1e-6);
        // Lipschitz in alpha across the branch switch: no jump
        assert!((lo.f_y - hi.f_y).abs() < 10.0 * eps * p.c_y);
    }
}

#[test]
fn dugoff_rejects_bad_domain() {
    let p = params();
    assert!(dugoff_forces(1.0, 0.0, &p, 1000.0).is_err());
    assert!(dugoff_forces(0.1, 0.0, &p, 0.0).is_err());
}

#[test]
fn wheel_examples() {
    assert_eq!(wheel_deriv(0.0, 0.0, 0.0, 0.3, 1.5), 0.0);
    assert!((wheel_deriv(0.0f64, 30.0, 0.0, 0.3, 1.5) - 20.0).abs() < 1e-12);
    assert_eq!(wheel_deriv(0.0, 300.0 * 0.3, 300.0, 0.3, 1.5), 0.0);
    assert!((wheel_speed(0.0f64, 10.0, 0.3) - 33.333_333_333_333_336).abs() < 1e-12);
    assert_eq!(wheel_speed(0.0, 0.0, 0.3), 0.0);
}

#[test]
fn axle_kinematics_examples() {
    let p = params();
    let s = ExtendedState::rolling(0.0, 0.0, 0.0, 10.0);
    let k = axle_kinematics(&s, 0.0, 0.0, &p).unwrap();
    assert_eq!((k.alpha_f, k.alpha_r, k.s_f, k.s_r), (0.0, 0.0, 0.0, 0.0));
    // yaw rate alone: front axle moves left, so its slip angle is positive
    let s = ExtendedState { r: 0.2, ..s };
    let k = axle_kinematics(&s, 0.0, 0.0, &p).unwrap();
    assert!(k.alpha_f > 0.0 && k.alpha_r < 0.0);
    let axle = (p.l_f * 0.2f64).atan2(10.0);
    let k = axle_kinematics(&s, axle, 0.0, &p).unwrap();
    assert!(k.alpha_f.abs() < 1e-15);
}

#[test]
fn extended_coasting_equilibrium() {
    let p = params();
    let s = ExtendedState::rolling(0.0, 0.0, 0.0, 12.0);
    let d = extended_deriv(&s, &ExtendedInput::default(), &p).unwrap();
    assert_eq!(d.x, 12.0);
    for v in [d.beta, d.v, d.r, d.psi, d.y, d.dw_f, d.dw_r] {
        assert!(v.abs() < 1e-12);
    }
}

#[test]
fn extended_load_and_moment_channels() {
    let p = params();
    let s = ExtendedState::rolling(0.0, 0.0, 0.0, 12.0);
    let d = extended_deriv(&s, &ExtendedInput { f_load: 300.0, ..Default::default() }, &p).unwrap();
    assert!((d.v + 0.1).abs() < 1e-12);
    let d = extended_deriv(&s, &ExtendedInput { m_zd: 100.0, ..Default::default() }, &p).unwrap();
    assert!((d.r - 100.0 / p.i_z).abs() < 1e-15);
    let m = linear_pt_matrices(&p, 12.0).unwrap();
    assert!((m.e_moment[1] - 1.0 / p.i_z).abs() < 1e-18);
}

#[test]
fn extended_matches_linear_model_for_small_steer() {
    let p = params();
    let v = 12.0;
    let h = 1e-3;
    let mut e = ExtendedState::rolling(0.0, 0.0, 0.0, v).to_vec();
    let mut l = Lateral5DofState::default().to_vec();
    let input = ExtendedInput { delta_f: 0.01, ..Default::default() };
    let (mut eb, mut lb, mut er, mut lr) = (vec![], vec![], vec![], vec![]);
    for _ in 0..1000 {
        e = rk4_step(|s: &[f64]| extended_deriv(&ExtendedState::from_slice(s), &input, &p).unwrap().to_vec(), &e, h).unwrap();
        l = rk4_step(|s: &[f64]| lateral5dof_deriv(&Lateral5DofState::from_slice(s), 0.01, &p, v).unwrap().to_vec(), &l, h)
            .unwrap();
        eb.push(e[0]);
        er.push(e[2]);
        lb.push(l[0]);
        lr.push(l[1]);
    }
    let rel = |a: &[f64], b: &[f64]| {
        let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
        let den: f64 = b.iter().map(|y| y * y).sum();
        (num / den).sqrt()
    };
    let (rb, rr) = (rel(&eb, &lb), rel(&er, &lr));
    println!("extended vs linear: beta {rb:.4}, r {rr:.4}");
    assert!(rb < 0.05 && rr < 0.05);
}

#[test]
fn extended_coasting_never_speeds_up() {
    let p = VehicleParams { load_c2: 0.4, ..params() };
    let mut s = ExtendedState::rolling(0.0, 0.0, 0.0, 15.0).to_vec();
    let input = ExtendedInput { f_load: 200.0, ..Default::default() };
    let mut prev = s[1];
    for _ in 0..2000 {
        s = rk4_step(|x: &[f64]| extended_deriv(&ExtendedState::from_slice(x), &input, &p).unwrap().to_vec(), &s, 1e-3).unwrap();
        assert!(s[1] <= prev + 1e-12);
        prev = s[1];
    }
}

#[test]
fn params_validation_and_cast() {
    let p = params();
    assert!(p.validate().is_ok());
    assert!(VehicleParams { mu: 1.5, ..p }.validate().is_err());
    assert!(VehicleParams { m: 0.0, ..p }.validate().is_err());
    assert!(VehicleParams { delta_f_min: 0.8, ..p }.validate().is_err());
    let q: VehicleParams<f32> = p.cast();
    assert_eq!(q.m, 3000.0f32);
}

proptest! {
    #[test]
    fn offset_zero_equals_center_model(x in -50.0f64..50.0, y in -50.0f64..50.0, th in -3.1f64..3.1, v in -5.0f64..5.0, w in -2.0f64..2.0) {
        let s = UnicycleState::new(x, y, th);
        prop_assert_eq!(unicycle_deriv(&s, v, w, 0.0), unicycle_center_deriv(&s, v, w));
    }

    #[test]
    fn dugoff_odd_symmetry(s in 0.0f64..0.9, a in 0.0f64..0.5) {
        let p = params();
        let fz = 14715.0;
        let pos = dugoff_forces(s, 0.0, &p, fz).unwrap();
        let neg = dugoff_forces(-s, 0.0, &p, fz).unwrap();
        prop_assert_eq!(pos.f_x, -neg.f_x);
        let pos = dugoff_forces(0.0, a, &p, fz).unwrap();
        let neg = dugoff_forces(0.0, -a, &p, fz).unwrap();
        prop_assert_eq!(pos.f_y, -neg.f_y);
    }

    #[test]
    fn dugoff_friction_sanity(s in -0.3f64..0.3, a in -0.3f64..0.3, mu in 0.2f64..1.2) {
        let p = VehicleParams { mu, ..params() };
        let fz = 14715.0;
        let t = dugoff_forces(s, a, &p, fz).unwrap();
        let res = (t.f_x * t.f_x + t.f_y * t.f_y).sqrt();
        prop_assert!(res <= mu * fz * t.g_x.max(t.g_y) * 1.05 + 1e-9, "res {} bound {}", res, mu * fz);
    }
}
