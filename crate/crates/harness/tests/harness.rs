use std::path::PathBuf;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use safedrive_harness::export::{read_metrics, read_trajectory_csv};
use safedrive_harness::metrics::{actor_ttz, compute_ttz, min_distance, tracking_metrics, ActorSample, Metrics, TtzBand};
use safedrive_harness::scenario::{Controller, Model, PathSource};
use safedrive_harness::{export_run, parse_scenario, run_scenario, DelayLine, HarnessError, ScenarioConfig};

fn scenarios_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios")
}

fn short_cdob(duration: f64) -> ScenarioConfig {
    let mut c = ScenarioConfig::new(Model::LinearPt, Controller::CdobPid, 12.0, duration);
    c.path = Some(PathSource::LaneChange { x_start: 20.0, x_end: 60.0, length: 120.0, offset: 3.5 });
    c.vehicle.k_preview = 0.5;
    c.delay = 0.1;
    c
}

// axis-aligned box zone [x0, x1] x [y0, y1]
fn slab_ttz(a: &ActorSample, b: [f64; 4]) -> f64 {
    let (x0, x1, y0, y1) = (b[0], b[1], b[2], b[3]);
    if a.x > x0 && a.x < x1 && a.y > y0 && a.y < y1 {
        return 0.0;
    }
    if a.speed <= 1e-9 {
        return f64::INFINITY;
    }
    let (dx, dy) = (a.heading.cos(), a.heading.sin());
    let mut lo = 0.0f64;
    let mut hi = f64::INFINITY;
    for (p, d, l, h) in [(a.x, dx, x0, x1), (a.y, dy, y0, y1)] {
        if d.abs() < 1e-15 {
            if p < l || p > h {
                return f64::INFINITY;
            }
        } else {
            let (t0, t1) = ((l - p) / d, (h - p) / d);
            lo = lo.max(t0.min(t1));
            hi = hi.min(t0.max(t1));
        }
    }
    if lo > hi {
        f64::INFINITY
    } else {
        lo / a.speed
    }
}

fn band_oracle(tv: f64, tu: f64) -> Option<TtzBand> {
    let w = tv.max(tu);
    if w < 2.0 {
        Some(TtzBand::Below2)
    } else if w < 4.0 {
        Some(TtzBand::Below4)
    } else if w < 6.0 {
        Some(TtzBand::Below6)
    } else {
        None
    }
}

fn rank(b: Option<TtzBand>) -> u8 {
    match b {
        Some(TtzBand::Below2) => 0,
        Some(TtzBand::Below4) => 1,
        Some(TtzBand::Below6) => 2,
        None => 3,
    }
}

fn straight_track(rng: &mut ChaCha8Rng, n: usize, dt: f64) -> Vec<ActorSample> {
    let (x, y) = (rng.gen_range(-30.0..30.0), rng.gen_range(-30.0..30.0));
    let heading: f64 = rng.gen_range(-3.1..3.1);
    let speed = if rng.gen_bool(0.1) { 0.0 } else { rng.gen_range(0.5..15.0) };
    (0..n)
        .map(|k| {
            let t = k as f64 * dt;
            ActorSample { t, x: x + speed * heading.cos() * t, y: y + speed * heading.sin() * t, heading, speed }
        })
        .collect()
}

#[test]
fn ttz_matches_slab_oracle_on_random_scenarios() {
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    for _ in 0..20 {
        let x0 = rng.gen_range(-5.0..5.0);
        let y0 = rng.gen_range(-5.0..5.0);
        let b = [x0, x0 + rng.gen_range(2.0..8.0), y0, y0 + rng.gen_range(2.0..8.0)];
        let zone = [[b[0], b[2]], [b[1], b[2]], [b[1], b[3]], [b[0], b[3]]];
        let n = 200;
        let veh = straight_track(&mut rng, n, 0.05);
        let vrus = vec![straight_track(&mut rng, n, 0.05), straight_track(&mut rng, n, 0.05)];
        let (series, events) = compute_ttz(&veh, &vrus, &zone).unwrap();

        let mut expected_events = Vec::new();
        for (k, vru) in vrus.iter().enumerate() {
            let mut prev = 3;
            for i in 0..n {
                let tv = slab_ttz(&veh[i], b);
                let tu = slab_ttz(&vru[i], b);
                let got = &series[k][i];
                for (g, e) in [(got.ttz_vehicle, tv), (got.ttz_vru, tu)] {
                    assert!((g.is_infinite() && e.is_infinite()) || (g - e).abs() <= 1e-9 * e.abs().max(1.0), "{g} vs {e}");
                }
                let band = band_oracle(tv, tu);
                assert_eq!(got.band, band);
                if rank(band) < prev {
                    expected_events.push((k, i, band.unwrap()));
                }
                prev = rank(band);
            }
        }
        let got: Vec<_> = events.iter().map(|e| (e.actor, (e.t / 0.05).round() as usize, e.band)).collect();
        assert_eq!(got, expected_events);
    }
}

#[test]
fn ttz_examples() {
    let zone = [[20.0, -2.0], [30.0, -2.0], [30.0, 2.0], [20.0, 2.0]];
    let a = ActorSample { t: 0.0, x: 0.0, y: 0.0, heading: 0.0, speed: 10.0 };
    assert!((actor_ttz(&a, &zone) - 2.0).abs() < 1e-12);
    assert_eq!(actor_ttz(&ActorSample { speed: 0.0, ..a }, &zone), f64::INFINITY);
    assert_eq!(actor_ttz(&ActorSample { heading: std::f64::consts::PI, ..a }, &zone), f64::INFINITY);
    assert_eq!(actor_ttz(&ActorSample { x: 25.0, ..a }, &zone), 0.0);
}

#[test]
fn ttz_length_mismatch_is_an_error() {
    let zone = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0]];
    let a = ActorSample { t: 0.0, x: 5.0, y: 5.0, heading: 0.0, speed: 1.0 };
    assert!(matches!(compute_ttz(&[a, a], &[vec![a]], &zone), Err(HarnessError::Metrics(_))));
}

#[test]
fn min_distance_examples() {
    let a = [(0.0, [0.0, 0.0]), (0.1, [1.0, 0.0]), (0.2, [2.0, 0.0])];
    let b = [[0.0, 5.0], [1.0, 3.0], [2.0, 4.0]];
    assert_eq!(min_distance(&a, &b).unwrap(), (0.1, 3.0));
    assert!(matches!(min_distance(&a, &b[..2]), Err(HarnessError::Metrics(_))));
}

#[test]
fn delay_line_zero_delay_is_identity() {
    let mut d = DelayLine::new(0.0, 0.01, 0).unwrap();
    for k in 1..10 {
        assert_eq!(d.push_pop(k), k);
    }
    assert!(DelayLine::new(0.1, 0.0, 0).is_err());
    assert!(DelayLine::new(-0.1, 0.01, 0).is_err());
}

#[test]
fn zero_duration_gives_an_empty_log() {
    let out = run_scenario(&short_cdob(0.0)).unwrap();
    assert!(out.log.rows.is_empty());
    assert_eq!(out.metrics.samples, 0);
    let dir = tempfile::tempdir().unwrap();
    export_run(&short_cdob(0.0), &out.log, &out.metrics, dir.path(), false).unwrap();
    assert!(read_trajectory_csv(&dir.path().join("trajectory.csv")).unwrap().is_empty());
}

#[test]
fn row_count_determinism_and_csv_metrics() {
    let cfg = short_cdob(3.0);
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let out = run_scenario(&cfg).unwrap();
        assert_eq!(out.log.rows.len(), (cfg.duration / cfg.rates.control_dt).round() as usize + 1);
        export_run(&cfg, &out.log, &out.metrics, d.path(), true).unwrap();
    }
    let csv_a = std::fs::read(a.path().join("trajectory.csv")).unwrap();
    assert_eq!(csv_a, std::fs::read(b.path().join("trajectory.csv")).unwrap());
    let text = std::fs::read_to_string(a.path().join("trajectory.csv")).unwrap();
    assert_eq!(
        text.lines().next().unwrap(),
        "t_s,x_m,y_m,psi_rad,beta_rad,r_radps,V_mps,delta_f_rad,e_y_m,gamma,min_obs_dist_m,qp_status"
    );
    assert!(a.path().join("path.svg").exists());

    let report = read_metrics(&a.path().join("metrics.json")).unwrap();
    assert_eq!(report.seed, cfg.seed);
    assert!(!report.code_version.is_empty());
    let rows = read_trajectory_csv(&a.path().join("trajectory.csv")).unwrap();
    let t: Vec<f64> = rows.iter().map(|r| r.t_s).collect();
    let e: Vec<f64> = rows.iter().map(|r| r.e_y_m).collect();
    let d: Vec<f64> = rows.iter().map(|r| r.min_obs_dist_m).collect();
    let mut m = Metrics::default();
    tracking_metrics(&t, &e, &d, &mut m);
    let j = &report.metrics;
    assert_eq!(m.samples, j.samples);
    assert!((m.rms_e_y.unwrap() - j.rms_e_y.unwrap()).abs() <= 1e-9);
    assert!((m.max_abs_e_y.unwrap() - j.max_abs_e_y.unwrap()).abs() <= 1e-9);
}

#[test]
fn metrics_json_round_trips() {
    let cfg: ScenarioConfig = parse_scenario(&std::fs::read_to_string(scenarios_dir().join("emergency_brake.json")).unwrap()).unwrap();
    let out = run_scenario(&cfg).unwrap();
    assert!(!out.metrics.ttz_events.is_empty());
    let dir = tempfile::tempdir().unwrap();
    export_run(&cfg, &out.log, &out.metrics, dir.path(), false).unwrap();
    let back = read_metrics(&dir.path().join("metrics.json")).unwrap();
    assert_eq!(back.metrics, out.metrics);
    let mut cfg2 = back.config.clone();
    cfg2.base_dir = cfg.base_dir.clone();
    assert_eq!(cfg2, cfg);
}

#[test]
fn bundled_scenarios_parse_and_validate() {
    for entry in std::fs::read_dir(scenarios_dir()).unwrap() {
        let p = entry.unwrap().path();
        if p.extension().is_some_and(|e| e == "json") {
            let cfg = safedrive_harness::load_scenario(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
            cfg.validate().unwrap_or_else(|e| panic!("{}: {e}", p.display()));
        }
    }
}

#[test]
fn model_controller_mismatch_is_rejected() {
    let mut c = short_cdob(1.0);
    c.model = Model::Unicycle;
    let err = run_scenario(&c).unwrap_err().to_string();
    assert!(err.contains("cannot drive"), "{err}");
}

#[test]
fn malformed_field_is_named() {
    let text = r#"{"schema_version": 1, "model": "linear_pt", "controller": "cdob_pid", "speed": 12.0,
        "duration": 1.0, "rates": {"control_dt": "fast"}}"#;
    let err = parse_scenario(text).unwrap_err().to_string();
    assert!(err.contains("rates.control_dt"), "{err}");
    let err = parse_scenario(r#"{"schema_version": 1, "model": "boat", "controller": "cdob_pid", "speed": 1, "duration": 1}"#)
        .unwrap_err()
        .to_string();
    assert!(err.contains("model"), "{err}");
}

#[test]
fn scripted_highway_uses_qp_and_logs_status() {
    let cfg = safedrive_harness::load_scenario(&scenarios_dir().join("three_lane_highway.json")).unwrap();
    let mut cfg = cfg;
    cfg.duration = 4.0;
    let out = run_scenario(&cfg).unwrap();
    assert_eq!(out.log.rows.len(), 401);
    assert!(out.metrics.solve_time_stats.is_some());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn delay_line_returns_the_sample_from_exactly_n_steps_ago(steps in 0usize..40, dt in 0.001f64..0.05, n in 1usize..200) {
        let delay = steps as f64 * dt;
        let mut d = DelayLine::new(delay, dt, -1i64).unwrap();
        prop_assert_eq!(d.steps(), steps);
        for k in 0..n as i64 {
            let out = d.push_pop(k);
            let expected = if (k as usize) < steps { -1 } else { k - steps as i64 };
            prop_assert_eq!(out, expected);
        }
    }

    #[test]
    fn ttz_band_is_monotone_in_both_times(a in 0.0f64..10.0, b in 0.0f64..10.0, da in 0.0f64..3.0) {
        prop_assert!(rank(TtzBand::joint(a, b)) <= rank(TtzBand::joint(a + da, b)));
        prop_assert_eq!(TtzBand::joint(a, b), band_oracle(a, b));
    }

    #[test]
    fn min_distance_is_a_lower_bound(pts in proptest::collection::vec((-50.0f64..50.0, -50.0f64..50.0, -50.0f64..50.0, -50.0f64..50.0), 1..40)) {
        let a: Vec<(f64, [f64; 2])> = pts.iter().enumerate().map(|(i, p)| (i as f64, [p.0, p.1])).collect();
        let b: Vec<[f64; 2]> = pts.iter().map(|p| [p.2, p.3]).collect();
        let (t, d) = min_distance(&a, &b).unwrap();
        for ((_, p), q) in a.iter().zip(&b) {
            prop_assert!(d <= (p[0] - q[0]).hypot(p[1] - q[1]));
        }
        let i = t as usize;
        prop_assert_eq!(d, (a[i].1[0] - b[i][0]).hypot(a[i].1[1] - b[i][1]));
    }
}
