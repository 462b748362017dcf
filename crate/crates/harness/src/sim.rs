//! Multi-rate scenario loop: physics at `physics_dt`, the controller at
//! `control_dt` on delayed measurements, decisions at `decision_dt`.

use std::fmt;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use safedrive_core::cdob::{admissible_gain_region, cdob_step, pid_step, CdobState, CurvatureChannel, PidGains, PidLimits, PidState};
use safedrive_core::clf_cbf::{pair_barrier, solve_unicycle_control, EllipseRegion, MovingEllipse};
use safedrive_core::hocbf::{assemble_and_solve, pure_pursuit, CircularObstacle};
use safedrive_core::numerics::{rk4_step, rk4_step_tv, QpStatus};
use safedrive_core::path::{advance_progress, PathProgress};
use safedrive_core::vehicle::{
    extended_deriv, lateral5dof_deriv, linear_pt_deriv, unicycle_center_deriv, ExtendedInput, ExtendedState, Lateral5DofState,
    LinearPtState, UnicycleState,
};
use safedrive_core::{wrap_angle, ParamPath64};
use safedrive_drl::checkpoint::read_checkpoint;
use safedrive_drl::highway::{HighwayAction, HighwayConfig, HighwayEnv};
use safedrive_drl::{argmax, Mlp};

use crate::delay::DelayLine;
use crate::metrics::{self, ActorSample, Divergence, Metrics, SolveTimeStats};
use crate::scenario::{Controller, Model, PolicySource, ScenarioConfig};
use crate::HarnessError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QpLabel {
    None,
    Optimal,
    Infeasible,
    MaxIter,
}

impl From<QpStatus> for QpLabel {
    fn from(s: QpStatus) -> Self {
        match s {
            QpStatus::Optimal => Self::Optimal,
            QpStatus::Infeasible => Self::Infeasible,
            QpStatus::MaxIter => Self::MaxIter,
        }
    }
}

impl fmt::Display for QpLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::None => "none",
            Self::Optimal => "optimal",
            Self::Infeasible => "infeasible",
            Self::MaxIter => "max_iter",
        })
    }
}

/// One control-rate sample. Field names are the CSV header.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogRow {
    pub t_s: f64,
    pub x_m: f64,
    pub y_m: f64,
    pub psi_rad: f64,
    pub beta_rad: f64,
    pub r_radps: f64,
    #[serde(rename = "V_mps")]
    pub v_mps: f64,
    pub delta_f_rad: f64,
    pub e_y_m: f64,
    pub gamma: f64,
    pub min_obs_dist_m: f64,
    pub qp_status: QpLabel,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrajectoryLog {
    pub rows: Vec<LogRow>,
    /// Obstacle centres per obstacle, aligned with `rows`.
    pub obstacle_tracks: Vec<Vec<[f64; 2]>>,
    pub vru_tracks: Vec<Vec<ActorSample>>,
    /// Reference polyline for plots.
    pub reference: Vec<[f64; 2]>,
    pub qp_times: Vec<f64>,
    pub min_barrier_while_feasible: Option<f64>,
    pub collision: bool,
    pub completed: bool,
    pub aborted: bool,
    pub path_length: Option<f64>,
    pub pid_gains: Option<[f64; 3]>,
}

impl TrajectoryLog {
    fn push_obstacles(&mut self, centres: impl Iterator<Item = [f64; 2]>) {
        for (k, c) in centres.enumerate() {
            if self.obstacle_tracks.len() <= k {
                self.obstacle_tracks.push(Vec::new());
            }
            self.obstacle_tracks[k].push(c);
        }
    }

    fn note_barrier(&mut self, h: f64, feasible_so_far: bool) {
        if feasible_so_far {
            self.min_barrier_while_feasible = Some(self.min_barrier_while_feasible.map_or(h, |m| m.min(h)));
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunOutput {
    pub log: TrajectoryLog,
    pub metrics: Metrics,
}

/// Metrics from the log alone.
pub fn compute_metrics(config: &ScenarioConfig, log: &TrajectoryLog) -> Result<Metrics, HarnessError> {
    let mut m = Metrics::default();
    let t: Vec<f64> = log.rows.iter().map(|r| r.t_s).collect();
    let e: Vec<f64> = log.rows.iter().map(|r| r.e_y_m).collect();
    let d: Vec<f64> = log.rows.iter().map(|r| r.min_obs_dist_m).collect();
    metrics::tracking_metrics(&t, &e, &d, &mut m);
    m.min_barrier_while_feasible = log.min_barrier_while_feasible;
    m.collision = log.collision;
    m.completed = log.completed;
    m.aborted = log.aborted;
    m.path_length = log.path_length;
    m.solve_time_stats = SolveTimeStats::from_samples(&log.qp_times);
    m.qp_failures = log.rows.iter().filter(|r| matches!(r.qp_status, QpLabel::Infeasible | QpLabel::MaxIter)).count();
    if let Some(len) = log.path_length {
        let thr = config.limits.divergence_threshold;
        m.divergence = log.rows.iter().find(|r| r.e_y_m.abs() > thr).map(|r| {
            let arc = r.v_mps * r.t_s;
            Divergence { t: r.t_s, arc, fraction_of_path: arc / len }
        });
    }
    if let Some(ttz) = &config.ttz {
        if !log.vru_tracks.is_empty() {
            let vehicle: Vec<ActorSample> = log
                .rows
                .iter()
                .map(|r| ActorSample { t: r.t_s, x: r.x_m, y: r.y_m, heading: r.psi_rad + r.beta_rad, speed: r.v_mps })
                .collect();
            let (series, events) = metrics::compute_ttz(&vehicle, &log.vru_tracks, &ttz.zone)?;
            m.ttz_events = events;
            m.ttz_band_fractions = metrics::band_fractions(&series);
        }
    }
    Ok(m)
}

pub fn run_scenario(config: &ScenarioConfig) -> Result<RunOutput, HarnessError> {
    config.validate()?;
    let mut log = TrajectoryLog::default();
    if config.duration > 0.0 {
        match (config.model, config.controller) {
            (Model::LinearPt, _) => run_linear_pt(config, &mut log)?,
            (Model::Lateral5dof, Controller::HoclfHocbf | Controller::Hoclf) => run_hoclf(config, &mut log)?,
            (Model::Lateral5dof, _) => run_highway(config, &mut log)?,
            (Model::Unicycle, _) => run_unicycle(config, &mut log)?,
            (Model::Extended, _) => run_brake(config, &mut log)?,
        }
    }
    let metrics = compute_metrics(config, &log)?;
    Ok(RunOutput { log, metrics })
}

fn control_steps(config: &ScenarioConfig) -> usize {
    (config.duration / config.rates.control_dt).round() as usize
}

pub fn sample_reference(path: &ParamPath64) -> Vec<[f64; 2]> {
    let n = (path.length().ceil() as usize).clamp(2, 5000);
    (0..=n)
        .map(|k| path.eval(path.gamma_min() + (path.gamma_max() - path.gamma_min()) * k as f64 / n as f64).point)
        .collect()
}

fn lateral_error(path: &ParamPath64, p: [f64; 2], hint: Option<f64>) -> (f64, f64) {
    let window = hint.map(|g| (g, (path.gamma_max() - path.gamma_min()) * 0.05 + 1.0));
    let gamma = path.project(p, window);
    let pp = path.eval(gamma);
    let (s, c) = pp.heading.sin_cos();
    (-s * (p[0] - pp.point[0]) + c * (p[1] - pp.point[1]), gamma)
}

fn nearest(centres: &[[f64; 2]], p: [f64; 2]) -> f64 {
    centres.iter().map(|c| (c[0] - p[0]).hypot(c[1] - p[1])).fold(f64::INFINITY, f64::min)
}

fn path_of(config: &ScenarioConfig) -> Result<ParamPath64, HarnessError> {
    config.build_path()?.ok_or_else(|| HarnessError::Config("scenario needs a path".into()))
}

/// CDOB + PID or PID alone on the linear path-tracking model; the vehicle
/// moves along the path at constant speed.
fn run_linear_pt(config: &ScenarioConfig, log: &mut TrajectoryLog) -> Result<(), HarnessError> {
    let path = path_of(config)?;
    let p = &config.vehicle;
    let v = config.speed;
    let dt = config.rates.control_dt;
    let sub = config.rates.physics_per_control();
    let h = dt / sub as f64;
    let ls = p.k_preview * v;

    let gains = match &config.cdob.gains {
        crate::scenario::GainChoice::Fixed(g) => PidGains::new(g.kp, g.ki, g.kd, v),
        crate::scenario::GainChoice::Sweep => {
            let region = admissible_gain_region(p, v, &config.cdob.dstability, &config.cdob.grid)?;
            region.minimal.ok_or_else(|| HarnessError::Config(format!("gain sweep at {v} m/s: {}", region.diagnostics)))?
        }
    };
    log.pid_gains = Some([gains.k_p, gains.k_i, gains.k_d]);
    let limits = PidLimits { out_min: p.delta_f_min, out_max: p.delta_f_max, ..PidLimits::default() };
    let use_cdob = config.controller == Controller::CdobPid;
    let mut observer = CdobState::for_vehicle(p, v, dt, config.cdob.q_order, config.cdob.q_cutoff, config.cdob.mode)?;
    let mut channel = CurvatureChannel::new(p, v, sub)?;
    let mut pid = PidState::default();
    let mut delay = DelayLine::new(config.delay, dt, config.initial_offset)?;

    let rho = |t: f64| path.eval(path.gamma_at_arc(v * t)).curvature;
    let mut x = LinearPtState { e_y: config.initial_offset, ..Default::default() };
    let mut u = 0.0;
    let n = control_steps(config);
    log.path_length = Some(path.length());
    log.reference = sample_reference(&path);
    for k in 0..=n {
        let t = k as f64 * dt;
        let y_meas = delay.push_pop(x.e_y);
        let y_fb = if use_cdob { cdob_step(&mut observer, u, y_meas, channel.output())? } else { y_meas };
        u = pid_step(-y_fb, &gains, dt, &mut pid, &limits);

        let gamma = path.gamma_at_arc(v * t);
        let pp = path.eval(gamma);
        let lat = x.e_y - ls * x.dpsi_p.sin();
        let (s, c) = pp.heading.sin_cos();
        log.rows.push(LogRow {
            t_s: t,
            x_m: pp.point[0] - s * lat,
            y_m: pp.point[1] + c * lat,
            psi_rad: pp.heading + x.dpsi_p,
            beta_rad: x.beta,
            r_radps: x.r,
            v_mps: v,
            delta_f_rad: u,
            e_y_m: x.e_y,
            gamma,
            min_obs_dist_m: f64::INFINITY,
            qp_status: QpLabel::None,
        });
        if x.e_y.abs() > config.limits.abort_e_y {
            log.aborted = true;
            break;
        }
        if k == n {
            break;
        }
        channel.advance(t, dt, rho)?;
        for j in 0..sub {
            let tj = t + j as f64 * h;
            let next = rk4_step_tv(
                |ts, s: &[f64]| {
                    linear_pt_deriv(&LinearPtState::from_slice(s), u, 0.0, rho(ts), 0.0, p, v)
                        .map(|d| d.to_vec())
                        .unwrap_or_else(|_| vec![f64::NAN; 4])
                },
                tj,
                &x.to_vec(),
                h,
            )?;
            x = LinearPtState::from_slice(&next);
        }
        if !x.e_y.is_finite() {
            return Err(HarnessError::Simulation("linear model state became non-finite".into()));
        }
    }
    log.completed = !log.aborted && v * config.duration >= path.length() - 0.5;
    Ok(())
}


fn start_pose(path: &ParamPath64, offset: f64) -> ([f64; 2], f64) {
    let pp = path.eval(path.gamma_min());
    let (s, c) = pp.heading.sin_cos();
    ([pp.point[0] - s * offset, pp.point[1] + c * offset], pp.heading)
}

fn disc_obstacles(config: &ScenarioConfig, t: f64) -> Vec<CircularObstacle<f64>> {
    config
        .obstacles
        .iter()
        .map(|o| {
            let c = o.position(t);
            CircularObstacle { x_o: c[0], y_o: c[1], r_o: o.radius, vx: o.vx, vy: o.vy }
        })
        .collect()
}

fn track_obstacles(config: &ScenarioConfig, log: &mut TrajectoryLog, p: [f64; 2], t: f64) -> f64 {
    let centres: Vec<[f64; 2]> = config.obstacles.iter().map(|o| o.position(t)).collect();
    for (o, c) in config.obstacles.iter().zip(&centres) {
        if (c[0] - p[0]).hypot(c[1] - p[1]) < o.crash_radius() {
            log.collision = true;
        }
    }
    log.push_obstacles(centres.iter().copied());
    nearest(&centres, p)
}

/// HOCLF-HOCBF steering on the 5-DOF model along the reference path.
fn run_hoclf(config: &ScenarioConfig, log: &mut TrajectoryLog) -> Result<(), HarnessError> {
    let path = path_of(config)?;
    let p = &config.vehicle;
    let v = config.speed;
    let dt = config.rates.control_dt;
    let sub = config.rates.physics_per_control();
    let h = dt / sub as f64;
    let mut ho = config.hocbf;
    if config.controller == Controller::Hoclf {
        ho.use_cbf = false;
    }
    let (p0, psi0) = start_pose(&path, config.initial_offset);
    let mut x = Lateral5DofState { beta: 0.0, r: 0.0, x: p0[0], y: p0[1], psi: psi0 };
    let mut delay = DelayLine::new(config.delay, dt, x)?;
    let mut delta = 0.0;
    let mut hint: Option<f64> = None;
    let mut log_hint: Option<f64> = None;
    let mut feasible = true;
    let n = control_steps(config);
    log.path_length = Some(path.length());
    log.reference = sample_reference(&path);
    for k in 0..=n {
        let t = k as f64 * dt;
        let meas = delay.push_pop(x);
        let obstacles = disc_obstacles(config, t);

        let window = hint.map(|g| (g, (path.gamma_max() - path.gamma_min()) * 0.05 + 1.0));
        let gamma = path.project([meas.x, meas.y], window);
        hint = Some(gamma);
        let goal = path.eval(path.gamma_at_arc(path.arc_at_gamma(gamma) + ho.lookahead)).point;
        let u_ref = pure_pursuit(&meas, goal, p);
        let t0 = Instant::now();
        let cmd = assemble_and_solve(&meas, goal, &obstacles, u_ref, p, v, &ho, delta)?;
        log.qp_times.push(t0.elapsed().as_secs_f64());
        delta = cmd.delta_f;
        if cmd.fallback {
            feasible = false;
        }

        for o in &obstacles {
            log.note_barrier(o.barrier(x.x, x.y), feasible);
        }
        let (e_y, g_true) = lateral_error(&path, [x.x, x.y], log_hint);
        log_hint = Some(g_true);
        let dist = track_obstacles(config, log, [x.x, x.y], t);
        log.rows.push(LogRow {
            t_s: t,
            x_m: x.x,
            y_m: x.y,
            psi_rad: x.psi,
            beta_rad: x.beta,
            r_radps: x.r,
            v_mps: v,
            delta_f_rad: delta,
            e_y_m: e_y,
            gamma: g_true,
            min_obs_dist_m: dist,
            qp_status: cmd.status.into(),
        });
        if e_y.abs() > config.limits.abort_e_y {
            log.aborted = true;
            break;
        }
        if k == n {
            break;
        }
        for _ in 0..sub {
            let next = rk4_step(
                |s: &[f64]| {
                    lateral5dof_deriv(&Lateral5DofState::from_slice(s), delta, p, v).map(|d| d.to_vec()).unwrap_or_else(|_| vec![f64::NAN; 5])
                },
                &x.to_vec(),
                h,
            )?;
            x = Lateral5DofState::from_slice(&next);
        }
        if x.to_vec().iter().any(|s| !s.is_finite()) {
            return Err(HarnessError::Simulation("5-DOF state became non-finite".into()));
        }
    }
    let last = log.rows.last().map_or(0.0, |r| r.gamma);
    log.completed = !log.aborted && path.arc_at_gamma(last) >= path.length() - ho.lookahead;
    Ok(())
}

/// Barrier overlap tolerated before a unicycle run counts as a collision; the
/// barrier is enforced in continuous time and a held command grazes by millimetres.
pub const UNICYCLE_OVERLAP_TOL: f64 = 1e-2;

/// CLF-CBF on the unicycle with elliptical obstacles.
fn run_unicycle(config: &ScenarioConfig, log: &mut TrajectoryLog) -> Result<(), HarnessError> {
    let path = path_of(config)?;
    let u = &config.unicycle;
    let dt = config.rates.control_dt;
    let sub = config.rates.physics_per_control();
    let h = dt / sub as f64;
    let (p0, th0) = start_pose(&path, config.initial_offset);
    let mut x = UnicycleState::new(p0[0], p0[1], th0);
    let mut delay = DelayLine::new(config.delay, dt, x)?;
    let mut progress = PathProgress { gamma: path.gamma_min(), gamma_d: u.gamma_d };
    let mut feasible = true;
    let mut log_hint = None;
    let n = control_steps(config);
    log.path_length = Some(path.length());
    log.reference = sample_reference(&path);
    for k in 0..=n {
        let t = k as f64 * dt;
        let meas = delay.push_pop(x);
        let obstacles: Vec<MovingEllipse<f64>> = config
            .obstacles
            .iter()
            .map(|o| {
                let c = o.position(t);
                let ax = o.semi_axes.unwrap_or([o.radius, o.radius]);
                MovingEllipse { region: EllipseRegion::new(c, o.theta, ax[0], ax[1]), vx: o.vx, vy: o.vy, omega: 0.0 }
            })
            .collect();
        let t0 = Instant::now();
        let cmd = solve_unicycle_control(&meas, (u.shape[0], u.shape[1]), &path, &progress, &obstacles, &u.config)?;
        log.qp_times.push(t0.elapsed().as_secs_f64());
        if cmd.fallback {
            feasible = false;
        }
        for &hv in &cmd.barrier_values {
            log.note_barrier(hv, feasible);
        }
        let (e_y, g) = lateral_error(&path, [x.x_c, x.y_c], log_hint);
        log_hint = Some(g);
        // ellipses collide on overlap, not on a centre distance
        let collided = log.collision;
        let dist = track_obstacles(config, log, [x.x_c, x.y_c], t);
        let ego = EllipseRegion::new([x.x_c, x.y_c], x.theta, u.shape[0], u.shape[1]);
        let mut overlap = false;
        for o in &obstacles {
            overlap |= pair_barrier(&o.region, &ego)?.0 < -UNICYCLE_OVERLAP_TOL;
        }
        log.collision = collided || overlap;
        log.rows.push(LogRow {
            t_s: t,
            x_m: x.x_c,
            y_m: x.y_c,
            psi_rad: x.theta,
            beta_rad: 0.0,
            r_radps: cmd.omega,
            v_mps: cmd.v,
            delta_f_rad: 0.0,
            e_y_m: e_y,
            gamma: progress.gamma,
            min_obs_dist_m: dist,
            qp_status: cmd.status.into(),
        });
        if k == n {
            break;
        }
        for _ in 0..sub {
            let next = rk4_step(|s: &[f64]| unicycle_center_deriv(&UnicycleState::from_slice(s), cmd.v, cmd.omega).to_vec(), &x.to_vec(), h)?;
            x = UnicycleState::from_slice(&next);
        }
        progress = advance_progress(progress, &cmd.tracking_error, dt, u.config.sigma);
    }
    log.completed = progress.gamma >= path.gamma_max() - 1e-6;
    Ok(())
}

fn vru_sample(v: &crate::scenario::VruSpec, t: f64) -> ActorSample {
    let moving = (t - v.start_time).max(0.0);
    let speed = if t >= v.start_time { v.vx.hypot(v.vy) } else { 0.0 };
    ActorSample { t, x: v.x + v.vx * moving, y: v.y + v.vy * moving, heading: v.vy.atan2(v.vx), speed }
}

/// Extended model on a straight road, braking along a linear speed ramp.
fn run_brake(config: &ScenarioConfig, log: &mut TrajectoryLog) -> Result<(), HarnessError> {
    let path = path_of(config)?;
    let p = &config.vehicle;
    let b = &config.brake;
    let dt = config.rates.control_dt;
    let sub = config.rates.physics_per_control();
    // the wheel-slip mode is much faster than the chassis; split each physics step
    const WHEEL_SPLIT: usize = 10;
    let h = dt / (sub * WHEEL_SPLIT) as f64;
    let (p0, psi0) = start_pose(&path, config.initial_offset);
    let mut x = ExtendedState::rolling(p0[0], p0[1], psi0, config.speed);
    let mut stopped = false;
    let mut log_hint = None;
    let n = control_steps(config);
    log.path_length = Some(path.length());
    log.reference = sample_reference(&path);
    if let Some(ttz) = &config.ttz {
        log.vru_tracks = vec![Vec::new(); ttz.vrus.len()];
    }
    for k in 0..=n {
        let t = k as f64 * dt;
        let v_ref = if t < b.start_time { config.speed } else { (config.speed - b.decel * (t - b.start_time)).max(0.0) };
        let braking = t >= b.start_time && v_ref > 0.0;
        // feed-forward share of the deceleration per axle plus speed feedback
        let ff = if braking { -0.5 * p.m * b.decel * p.r_f } else { 0.0 };
        let torque = ff + b.speed_gain * (v_ref - x.v);
        let input = ExtendedInput { m_drive_f: torque, m_drive_r: torque, ..Default::default() };

        let (e_y, g) = lateral_error(&path, [x.x, x.y], log_hint);
        log_hint = Some(g);
        let dist = track_obstacles(config, log, [x.x, x.y], t);
        log.rows.push(LogRow {
            t_s: t,
            x_m: x.x,
            y_m: x.y,
            psi_rad: x.psi,
            beta_rad: x.beta,
            r_radps: x.r,
            v_mps: if stopped { 0.0 } else { x.v },
            delta_f_rad: 0.0,
            e_y_m: e_y,
            gamma: g,
            min_obs_dist_m: dist,
            qp_status: QpLabel::None,
        });
        if let Some(ttz) = &config.ttz {
            for (track, v) in log.vru_tracks.iter_mut().zip(&ttz.vrus) {
                track.push(vru_sample(v, t));
            }
        }
        if k == n {
            break;
        }
        if stopped {
            continue;
        }
        for _ in 0..sub * WHEEL_SPLIT {
            let next = rk4_step(
                |s: &[f64]| extended_deriv(&ExtendedState::from_slice(s), &input, p).map(|d| d.to_vec()).unwrap_or_else(|_| vec![f64::NAN; 8]),
                &x.to_vec(),
                h,
            )?;
            x = ExtendedState::from_slice(&next);
            if x.v < b.stop_speed {
                stopped = true;
                x.v = 0.0;
                x.r = 0.0;
                x.beta = 0.0;
                break;
            }
        }
        if x.to_vec().iter().any(|s| !s.is_finite()) {
            return Err(HarnessError::Simulation("extended model state became non-finite".into()));
        }
    }
    log.completed = stopped;
    Ok(())
}

/// Decision policy for the highway runs.
pub enum HighwayPolicy {
    Rule,
    Network(Mlp),
}

impl HighwayPolicy {
    pub fn load(config: &ScenarioConfig) -> Result<Self, HarnessError> {
        match (&config.policy, config.policy_file()) {
            (Some(PolicySource::Checkpoint { .. }), Some(file)) => {
                let f = std::fs::File::open(&file).map_err(|e| HarnessError::Io { path: file.clone(), source: e })?;
                Ok(Self::Network(read_checkpoint(std::io::BufReader::new(f))?))
            }
            _ => Ok(Self::Rule),
        }
    }

    pub fn decide(&self, env: &HighwayEnv, obs: &[f64]) -> Result<HighwayAction, HarnessError> {
        let a = match self {
            Self::Network(net) => argmax(&net.forward(obs)?),
            Self::Rule => rule_action(env) as usize,
        };
        HighwayAction::from_index(a).ok_or_else(|| HarnessError::Simulation(format!("policy produced action {a}")))
    }
}

/// Head for the adjacent lane with the longest free gap ahead.
pub fn rule_action(env: &HighwayEnv) -> HighwayAction {
    let c = &env.config;
    let gap = |lane: usize| {
        let y = c.lane_center(lane);
        env.cars
            .iter()
            .filter(|k| (k.y - y).abs() < 0.5 * c.lane_width && k.x > env.ego.x - 6.0)
            .map(|k| k.x - env.ego.x)
            .fold(f64::INFINITY, f64::min)
    };
    let cur = env.target_lane;
    let mut best = cur;
    for lane in [cur.saturating_sub(1), cur, (cur + 1).min(c.n_lanes - 1)] {
        if gap(lane) > gap(best) + 1.0 {
            best = lane;
        }
    }
    match best.cmp(&cur) {
        std::cmp::Ordering::Greater => HighwayAction::LeftChange,
        std::cmp::Ordering::Less => HighwayAction::RightChange,
        std::cmp::Ordering::Equal => HighwayAction::Idle,
    }
}

/// Hierarchical highway run: decisions every `decision_dt`, the QP in between.
fn run_highway(config: &ScenarioConfig, log: &mut TrajectoryLog) -> Result<(), HarnessError> {
    let mut hc = config.highway.clone().unwrap_or_else(HighwayConfig::default);
    hc.ego_speed = config.speed;
    hc.control_dt = config.rates.control_dt;
    hc.decision_dt = config.rates.decision_dt;
    hc.horizon_s = config.duration;
    hc.vehicle = config.vehicle.clone();
    let policy = HighwayPolicy::load(config)?;
    let mut env = HighwayEnv::new(hc, config.seed)?;
    env.record_qp_time = true;
    env.record_trace = true;
    let mut obs = env.reset();
    log.path_length = Some(env.config.goal_x);
    let top = env.config.lane_center(env.config.n_lanes - 1);
    log.reference = vec![[0.0, top], [env.config.goal_x, top]];

    let mut rows = vec![(0.0, env.ego, 0.0, env.target_lane, env.min_distance(), QpLabel::None, env.cars.clone())];
    let mut feasible = true;
    loop {
        let action = policy.decide(&env, &obs)?;
        let st = env.step(action)?;
        for s in env.trace.drain(..) {
            rows.push((s.time, s.ego, s.delta_f, s.target_lane, s.min_distance, s.qp_status.map_or(QpLabel::None, Into::into), s.cars));
        }
        obs = st.obs;
        if st.collided {
            log.collision = true;
        }
        if st.reached_goal {
            log.completed = true;
        }
        if st.done || st.truncated {
            break;
        }
    }
    let r_bar = env.config.barrier_radius;
    for (t, ego, delta, lane, dist, status, cars) in rows {
        if matches!(status, QpLabel::Infeasible | QpLabel::MaxIter) {
            feasible = false;
        }
        for c in &cars {
            log.note_barrier((c.x - ego.x).powi(2) + (c.y - ego.y).powi(2) - r_bar * r_bar, feasible);
        }
        log.push_obstacles(cars.iter().map(|c| [c.x, c.y]));
        log.rows.push(LogRow {
            t_s: t,
            x_m: ego.x,
            y_m: ego.y,
            psi_rad: wrap_angle(ego.psi),
            beta_rad: ego.beta,
            r_radps: ego.r,
            v_mps: env.config.ego_speed,
            delta_f_rad: delta,
            e_y_m: ego.y - env.config.lane_center(lane),
            gamma: ego.x,
            min_obs_dist_m: dist,
            qp_status: status,
        });
    }
    log.qp_times = std::mem::take(&mut env.qp_time);
    Ok(())
}
