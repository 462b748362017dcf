//! Multi-lane straight highway driven by the 5-DOF lateral model and the
//! HOCLF-HOCBF steering controller. The agent picks a lane every decision
//! period; the low-level loop tracks that lane's centreline.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use safedrive_core::hocbf::{assemble_and_solve, pure_pursuit, CircularObstacle, HoConfig};
use safedrive_core::numerics::{rk4_step, QpStatus};
use safedrive_core::vehicle::{lateral5dof_deriv, Lateral5DofState, VehicleParams, MIN_SPEED};

use crate::DrlError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HighwayAction {
    Idle,
    LeftChange,
    RightChange,
}

impl HighwayAction {
    pub const ALL: [HighwayAction; 3] = [Self::Idle, Self::LeftChange, Self::RightChange];

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }
}

/// How the commanded lane is followed between decisions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LowLevel {
    /// HOCLF-HOCBF QP on the 5-DOF model.
    Qp,
    /// Lateral position ramps to the target lane at a fixed rate; no dynamics.
    Scripted,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrafficCar {
    pub x: f64,
    pub lane: usize,
    pub speed: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Traffic {
    /// A slow car ahead in the ego lane and a second one further on in the other lane.
    TwoLaneRandom,
    /// Waves of slow cars, each blocking one or two of three lanes.
    ThreeLaneRandom,
    Fixed(Vec<TrafficCar>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HighwayConfig {
    pub n_lanes: usize,
    pub lane_width: f64,
    pub ego_speed: f64,
    pub goal_x: f64,
    pub horizon_s: f64,
    pub decision_dt: f64,
    pub control_dt: f64,
    /// Progress reward per metre.
    pub progress_coef: f64,
    pub goal_reward: f64,
    pub collision_reward: f64,
    pub lane_change_reward: f64,
    /// Centre distance counted as a crash.
    pub collision_radius: f64,
    /// Keep-out radius used by the barrier rows.
    pub barrier_radius: f64,
    /// Lateral speed of the scripted low level, m/s.
    pub scripted_lateral_speed: f64,
    pub low_level: LowLevel,
    pub traffic: Traffic,
    pub controller: HoConfig<f64>,
    pub vehicle: VehicleParams<f64>,
}

impl Default for HighwayConfig {
    fn default() -> Self {
        Self {
            n_lanes: 2,
            lane_width: 4.0,
            ego_speed: 10.0,
            goal_x: 200.0,
            horizon_s: 40.0,
            decision_dt: 0.2,
            control_dt: 0.01,
            progress_coef: 0.1,
            goal_reward: 50.0,
            collision_reward: -100.0,
            lane_change_reward: -0.5,
            collision_radius: 3.0,
            barrier_radius: 3.5,
            scripted_lateral_speed: 2.0,
            low_level: LowLevel::Qp,
            traffic: Traffic::TwoLaneRandom,
            controller: HoConfig::default(),
            vehicle: VehicleParams::default(),
        }
    }
}

impl HighwayConfig {
    pub fn three_lane() -> Self {
        Self { n_lanes: 3, goal_x: 250.0, traffic: Traffic::ThreeLaneRandom, ..Self::default() }
    }

    pub fn validate(&self) -> Result<(), DrlError> {
        let ratio = self.decision_dt / self.control_dt;
        if !(self.control_dt > 0.0) || (ratio - ratio.round()).abs() > 1e-9 || ratio < 1.0 {
            return Err(DrlError::Config("decision_dt must be a whole multiple of control_dt".into()));
        }
        if self.n_lanes == 0 || !(self.lane_width > 0.0) {
            return Err(DrlError::Config("need at least one lane of positive width".into()));
        }
        if !(self.ego_speed >= MIN_SPEED) {
            return Err(DrlError::Config(format!("ego_speed must be at least {MIN_SPEED} m/s")));
        }
        self.vehicle.validate().map_err(|e| DrlError::Config(e.to_string()))?;
        self.controller.validate().map_err(|e| DrlError::Config(e.to_string()))
    }

    pub fn lane_center(&self, lane: usize) -> f64 {
        lane as f64 * self.lane_width
    }

    fn road_edges(&self) -> (f64, f64) {
        (-0.5 * self.lane_width, (self.n_lanes as f64 - 0.5) * self.lane_width)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RewardParts {
    pub goal: f64,
    pub collision: f64,
    pub progress: f64,
    pub lane_change: f64,
}

impl RewardParts {
    pub fn total(&self) -> f64 {
        self.goal + self.collision + self.progress + self.lane_change
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HighwayStep {
    /// Flattened 5x5 observation.
    pub obs: Vec<f64>,
    pub reward: f64,
    pub parts: RewardParts,
    pub done: bool,
    /// Horizon reached without goal or crash.
    pub truncated: bool,
    pub collided: bool,
    pub reached_goal: bool,
    pub target_lane: usize,
    /// Low-level solves this decision that fell back to the held command.
    pub fallbacks: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Car {
    pub x: f64,
    pub y: f64,
    pub speed: f64,
}

/// One low-level sample, recorded when `record_trace` is set.
#[derive(Clone, Debug, PartialEq)]
pub struct ControlSample {
    pub time: f64,
    pub ego: Lateral5DofState<f64>,
    pub delta_f: f64,
    pub target_lane: usize,
    pub min_distance: f64,
    /// `None` for the scripted low level.
    pub qp_status: Option<QpStatus>,
    pub cars: Vec<Car>,
}

#[derive(Clone, Debug)]
pub struct HighwayEnv {
    pub config: HighwayConfig,
    pub ego: Lateral5DofState<f64>,
    pub cars: Vec<Car>,
    pub target_lane: usize,
    pub time: f64,
    pub delta_f: f64,
    pub total_fallbacks: usize,
    /// Wall time spent in QP solves, seconds, and their count.
    pub qp_time: Vec<f64>,
    pub record_qp_time: bool,
    pub trace: Vec<ControlSample>,
    pub record_trace: bool,
    rng: ChaCha8Rng,
}

pub const OBS_ROWS: usize = 5;
pub const OBS_COLS: usize = 5;
/// Longitudinal scale of the observation, m.
const OBS_RANGE: f64 = 100.0;

impl HighwayEnv {
    pub const OBS_DIM: usize = OBS_ROWS * OBS_COLS;
    pub const N_ACTIONS: usize = 3;

    pub fn new(config: HighwayConfig, seed: u64) -> Result<Self, DrlError> {
        config.validate()?;
        let mut env = Self {
            config,
            ego: Lateral5DofState::default(),
            cars: Vec::new(),
            target_lane: 0,
            time: 0.0,
            delta_f: 0.0,
            total_fallbacks: 0,
            qp_time: Vec::new(),
            record_qp_time: false,
            trace: Vec::new(),
            record_trace: false,
            rng: ChaCha8Rng::seed_from_u64(seed),
        };
        env.reset();
        Ok(env)
    }

    /// Ego in the top lane at x=0; traffic drawn from the configured layout.
    pub fn reset(&mut self) -> Vec<f64> {
        let top = self.config.n_lanes - 1;
        self.target_lane = top;
        self.ego = Lateral5DofState { beta: 0.0, r: 0.0, x: 0.0, y: self.config.lane_center(top), psi: 0.0 };
        self.time = 0.0;
        self.delta_f = 0.0;
        self.total_fallbacks = 0;
        self.trace.clear();
        let cars = self.spawn();
        self.cars = cars
            .iter()
            .map(|c| Car { x: c.x, y: self.config.lane_center(c.lane.min(top)), speed: c.speed })
            .collect();
        self.observe()
    }

    fn spawn(&mut self) -> Vec<TrafficCar> {
        let n = self.config.n_lanes;
        let top = n - 1;
        match self.config.traffic.clone() {
            Traffic::Fixed(cars) => cars,
            Traffic::TwoLaneRandom => {
                let other = if top == 0 { 0 } else { top - 1 };
                let x1 = self.rng.gen_range(30.0..50.0);
                let x2 = x1 + self.rng.gen_range(35.0..55.0);
                vec![
                    TrafficCar { x: x1, lane: top, speed: self.rng.gen_range(3.0..5.0) },
                    TrafficCar { x: x2, lane: other, speed: self.rng.gen_range(3.0..5.0) },
                ]
            }
            Traffic::ThreeLaneRandom => {
                let mut cars = Vec::new();
                let mut x = self.rng.gen_range(30.0..45.0);
                for wave in 0..3 {
                    let free = if wave == 0 { self.rng.gen_range(0..top.max(1)) } else { self.rng.gen_range(0..n) };
                    let blocked: Vec<usize> = (0..n).filter(|&l| l != free).collect();
                    let take = if n > 2 && self.rng.gen::<bool>() { blocked.len() } else { 1 };
                    for &lane in blocked.iter().rev().take(take) {
                        cars.push(TrafficCar { x: x + self.rng.gen_range(-3.0..3.0), lane, speed: self.rng.gen_range(3.0..5.0) });
                    }
                    x += self.rng.gen_range(45.0..60.0);
                }
                cars
            }
        }
    }

    fn barrier_obstacles(&self) -> Vec<CircularObstacle<f64>> {
        self.cars
            .iter()
            .map(|c| CircularObstacle { x_o: c.x, y_o: c.y, r_o: self.config.barrier_radius, vx: c.speed, vy: 0.0 })
            .collect()
    }

    /// Ego row absolute, other rows relative to the ego, nearest first.
    pub fn observe(&self) -> Vec<f64> {
        let c = &self.config;
        let road = c.n_lanes as f64 * c.lane_width;
        let v = c.ego_speed;
        let course = self.ego.course();
        let (evx, evy) = (v * course.cos(), v * course.sin());
        let mut obs = vec![0.0; Self::OBS_DIM];
        obs[..5].copy_from_slice(&[1.0, self.ego.x / c.goal_x, self.ego.y / road, evx / v, evy / v]);
        let mut near: Vec<&Car> = self.cars.iter().filter(|k| (k.x - self.ego.x).abs() < OBS_RANGE).collect();
        near.sort_by(|a, b| {
            let da = (a.x - self.ego.x).hypot(a.y - self.ego.y);
            let db = (b.x - self.ego.x).hypot(b.y - self.ego.y);
            da.total_cmp(&db)
        });
        for (row, k) in near.iter().take(OBS_ROWS - 1).enumerate() {
            let o = &mut obs[(row + 1) * OBS_COLS..(row + 2) * OBS_COLS];
            o.copy_from_slice(&[1.0, (k.x - self.ego.x) / OBS_RANGE, (k.y - self.ego.y) / road, (k.speed - evx) / v, -evy / v]);
        }
        obs
    }

    pub fn min_distance(&self) -> f64 {
        self.cars.iter().map(|k| (k.x - self.ego.x).hypot(k.y - self.ego.y)).fold(f64::INFINITY, f64::min)
    }

    fn crashed(&self) -> bool {
        let (lo, hi) = self.config.road_edges();
        self.min_distance() < self.config.collision_radius || self.ego.y < lo || self.ego.y > hi
    }

    fn control_step(&mut self) -> Result<bool, DrlError> {
        let c = &self.config;
        let dt = c.control_dt;
        let lane_y = c.lane_center(self.target_lane);
        let mut fallback = false;
        let mut status = None;
        match c.low_level {
            LowLevel::Qp => {
                let goal = [self.ego.x + c.controller.lookahead, lane_y];
                let u_ref = pure_pursuit(&self.ego, goal, &c.vehicle);
                let obstacles = self.barrier_obstacles();
                let start = self.record_qp_time.then(std::time::Instant::now);
                let cmd = assemble_and_solve(&self.ego, goal, &obstacles, u_ref, &c.vehicle, c.ego_speed, &c.controller, self.delta_f)
                    .map_err(|e| DrlError::Simulation(e.to_string()))?;
                if let Some(t0) = start {
                    self.qp_time.push(t0.elapsed().as_secs_f64());
                }
                fallback = cmd.fallback;
                status = Some(cmd.status);
                self.delta_f = cmd.delta_f;
                let (p, v, d) = (&c.vehicle, c.ego_speed, self.delta_f);
                let x = rk4_step(
                    |s: &[f64]| {
                        lateral5dof_deriv(&Lateral5DofState::from_slice(s), d, p, v).map(|k| k.to_vec()).unwrap_or_else(|_| vec![f64::NAN; 5])
                    },
                    &self.ego.to_vec(),
                    dt,
                )
                .map_err(|e| DrlError::Simulation(e.to_string()))?;
                if x.iter().any(|v| !v.is_finite()) {
                    return Err(DrlError::Simulation("vehicle state became non-finite".into()));
                }
                self.ego = Lateral5DofState::from_slice(&x);
            }
            LowLevel::Scripted => {
                let step = c.scripted_lateral_speed * dt;
                let dy = (lane_y - self.ego.y).clamp(-step, step);
                self.ego.x += c.ego_speed * dt;
                self.ego.y += dy;
            }
        }
        for k in &mut self.cars {
            k.x += k.speed * dt;
        }
        self.time += dt;
        if self.record_trace {
            self.trace.push(ControlSample {
                time: self.time,
                ego: self.ego,
                delta_f: self.delta_f,
                target_lane: self.target_lane,
                min_distance: self.min_distance(),
                qp_status: status,
                cars: self.cars.clone(),
            });
        }
        Ok(fallback)
    }

    /// One decision period: set the target lane, then run the low-level loop.
    pub fn step(&mut self, action: HighwayAction) -> Result<HighwayStep, DrlError> {
        let c = self.config.clone();
        let mut parts = RewardParts::default();
        match action {
            HighwayAction::Idle => {}
            HighwayAction::LeftChange => {
                parts.lane_change = c.lane_change_reward;
                if self.target_lane + 1 < c.n_lanes {
                    self.target_lane += 1;
                }
            }
            HighwayAction::RightChange => {
                parts.lane_change = c.lane_change_reward;
                self.target_lane = self.target_lane.saturating_sub(1);
            }
        }
        let x0 = self.ego.x;
        let n = (c.decision_dt / c.control_dt).round() as usize;
        let mut fallbacks = 0;
        let mut collided = false;
        let mut reached = false;
        for _ in 0..n {
            if self.control_step()? {
                fallbacks += 1;
            }
            if self.crashed() {
                collided = true;
                break;
            }
            if self.ego.x >= c.goal_x {
                reached = true;
                break;
            }
        }
        self.total_fallbacks += fallbacks;
        parts.progress = c.progress_coef * (self.ego.x - x0);
        if collided {
            parts.collision = c.collision_reward;
        } else if reached {
            parts.goal = c.goal_reward;
        }
        let done = collided || reached;
        let truncated = !done && self.time >= c.horizon_s - 1e-9;
        Ok(HighwayStep {
            obs: self.observe(),
            reward: parts.total(),
            parts,
            done,
            truncated,
            collided,
            reached_goal: reached,
            target_lane: self.target_lane,
            fallbacks,
        })
    }

    /// Lane whose centre is nearest the ego.
    pub fn current_lane(&self) -> usize {
        let l = (self.ego.y / self.config.lane_width).round();
        l.clamp(0.0, (self.config.n_lanes - 1) as f64) as usize
    }
}
