//! Scenario files: a versioned JSON document describing one run.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use safedrive_core::cdob::{CdobMode, DStabilitySpec, GainGrid};
use safedrive_core::clf_cbf::ClfCbfConfig;
use safedrive_core::hocbf::HoConfig;
use safedrive_core::path::{densify_waypoints, fit_segmented_path, lane_change_samples};
use safedrive_core::{ParamPath64, VehicleParams64};
use safedrive_drl::highway::HighwayConfig;

use crate::HarnessError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    Unicycle,
    Lateral5dof,
    Extended,
    LinearPt,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Controller {
    CdobPid,
    PidOnly,
    ClfCbf,
    HoclfHocbf,
    /// HOCLF tracking with the barrier rows switched off.
    Hoclf,
    DdqnHier,
    Scripted,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PathSource {
    Straight {
        length: f64,
        #[serde(default)]
        y: f64,
    },
    /// Cosine lane change of `offset` between `x_start` and `x_end`.
    LaneChange { x_start: f64, x_end: f64, length: f64, offset: f64 },
    Points { points: Vec<[f64; 2]> },
    /// CSV file with `x_m,y_m` columns, relative to the scenario file.
    Waypoints { file: PathBuf },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObstacleSpec {
    pub x: f64,
    pub y: f64,
    /// Keep-out radius seen by the barrier, already inflated.
    pub radius: f64,
    #[serde(default)]
    pub vx: f64,
    #[serde(default)]
    pub vy: f64,
    /// Centre distance that counts as a crash. Defaults to `radius`.
    #[serde(default)]
    pub collision_radius: Option<f64>,
    /// Ellipse semi-axes and orientation, unicycle scenes only.
    #[serde(default)]
    pub semi_axes: Option<[f64; 2]>,
    #[serde(default)]
    pub theta: f64,
}

impl ObstacleSpec {
    pub fn position(&self, t: f64) -> [f64; 2] {
        [self.x + self.vx * t, self.y + self.vy * t]
    }

    pub fn crash_radius(&self) -> f64 {
        self.collision_radius.unwrap_or(self.radius)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Rates {
    pub physics_dt: f64,
    pub control_dt: f64,
    pub decision_dt: f64,
}

impl Default for Rates {
    fn default() -> Self {
        Self { physics_dt: 0.001, control_dt: 0.01, decision_dt: 0.2 }
    }
}

impl Rates {
    pub fn physics_per_control(&self) -> usize {
        (self.control_dt / self.physics_dt).round() as usize
    }

    pub fn control_per_decision(&self) -> usize {
        (self.decision_dt / self.control_dt).round() as usize
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixedGains {
    pub kp: f64,
    pub ki: f64,
    pub kd: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GainChoice {
    /// Smallest admissible triple of the D-stability sweep at the scenario speed.
    Sweep,
    Fixed(FixedGains),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CdobSettings {
    pub q_order: usize,
    /// Q filter corner, rad/s.
    pub q_cutoff: f64,
    pub mode: CdobMode,
    pub gains: GainChoice,
    pub dstability: DStabilitySpec,
    pub grid: GainGrid,
}

impl Default for CdobSettings {
    fn default() -> Self {
        Self {
            q_order: 2,
            q_cutoff: 30.0,
            mode: CdobMode::Modified,
            gains: GainChoice::Sweep,
            dstability: DStabilitySpec::default(),
            grid: GainGrid::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UnicycleSettings {
    pub config: ClfCbfConfig<f64>,
    /// Vehicle ellipse semi-axes.
    pub shape: [f64; 2],
    /// Nominal progress rate along the path parameter.
    pub gamma_d: f64,
}

impl Default for UnicycleSettings {
    fn default() -> Self {
        Self { config: ClfCbfConfig::default(), shape: [1.0, 0.5], gamma_d: 1.0 }
    }
}

/// Straight-line emergency stop on the extended model.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BrakeSettings {
    /// Deceleration of the linear speed ramp, m/s^2.
    pub decel: f64,
    pub start_time: f64,
    /// Below this speed the vehicle is treated as stopped.
    pub stop_speed: f64,
    /// Proportional torque gain on the speed error, N m s/m per axle.
    pub speed_gain: f64,
}

impl Default for BrakeSettings {
    fn default() -> Self {
        Self { decel: 3.0, start_time: 0.0, stop_speed: 0.5, speed_gain: 2000.0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VruSpec {
    pub x: f64,
    pub y: f64,
    pub vx: f64,
    pub vy: f64,
    /// Time the actor starts moving.
    #[serde(default)]
    pub start_time: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TtzSettings {
    /// Conflict zone polygon, counter-clockwise or clockwise.
    pub zone: Vec<[f64; 2]>,
    pub vrus: Vec<VruSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PolicySource {
    /// Move to the lane with the most free road ahead.
    Rule,
    Checkpoint { file: PathBuf },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Limits {
    /// |e_y| that counts as a tracking failure.
    pub divergence_threshold: f64,
    /// |e_y| at which the run is stopped.
    pub abort_e_y: f64,
}

impl Default for Limits {
    fn default() -> Self {
        Self { divergence_threshold: 5.0, abort_e_y: 50.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub schema_version: u32,
    #[serde(default)]
    pub name: String,
    pub model: Model,
    pub controller: Controller,
    #[serde(default)]
    pub path: Option<PathSource>,
    #[serde(default)]
    pub obstacles: Vec<ObstacleSpec>,
    /// Longitudinal speed, m/s (initial speed for the extended model).
    pub speed: f64,
    /// Measurement delay, s.
    #[serde(default)]
    pub delay: f64,
    pub duration: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub rates: Rates,
    #[serde(default)]
    pub vehicle: VehicleParams64,
    /// Initial lateral offset from the path start, m.
    #[serde(default)]
    pub initial_offset: f64,
    #[serde(default)]
    pub cdob: CdobSettings,
    #[serde(default)]
    pub hocbf: HoConfig<f64>,
    #[serde(default)]
    pub unicycle: UnicycleSettings,
    #[serde(default)]
    pub brake: BrakeSettings,
    #[serde(default)]
    pub ttz: Option<TtzSettings>,
    #[serde(default)]
    pub highway: Option<HighwayConfig>,
    #[serde(default)]
    pub policy: Option<PolicySource>,
    #[serde(default)]
    pub limits: Limits,
    /// Directory relative paths in the file are resolved against.
    #[serde(skip)]
    pub base_dir: Option<PathBuf>,
}

fn whole_ratio(big: f64, small: f64) -> bool {
    let r = big / small;
    r >= 1.0 && (r - r.round()).abs() < 1e-9
}

impl ScenarioConfig {
    /// Minimal config for `model` and `controller`; everything else defaulted.
    pub fn new(model: Model, controller: Controller, speed: f64, duration: f64) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            name: String::new(),
            model,
            controller,
            path: None,
            obstacles: Vec::new(),
            speed,
            delay: 0.0,
            duration,
            seed: 0,
            output_dir: None,
            rates: Rates::default(),
            vehicle: VehicleParams64::default(),
            initial_offset: 0.0,
            cdob: CdobSettings::default(),
            hocbf: HoConfig::default(),
            unicycle: UnicycleSettings::default(),
            brake: BrakeSettings::default(),
            ttz: None,
            highway: None,
            policy: None,
            limits: Limits::default(),
            base_dir: None,
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::Config(m));
        if self.schema_version != SCHEMA_VERSION {
            return bad(format!("schema_version {} is not supported (expected {SCHEMA_VERSION})", self.schema_version));
        }
        if !(self.duration >= 0.0) || !self.duration.is_finite() {
            return bad("duration must be finite and non-negative".into());
        }
        if !(self.delay >= 0.0) {
            return bad("delay must be non-negative".into());
        }
        let r = &self.rates;
        if !(r.physics_dt > 0.0) || !whole_ratio(r.control_dt, r.physics_dt) || !whole_ratio(r.decision_dt, r.control_dt) {
            return bad("rates: control_dt must be a whole multiple of physics_dt and decision_dt of control_dt".into());
        }
        let steps = self.delay / r.control_dt;
        if (steps - steps.round()).abs() > 1e-6 {
            return bad(format!("delay {} s is not a whole number of control periods", self.delay));
        }
        self.vehicle.validate().map_err(|e| HarnessError::Config(format!("vehicle: {e}")))?;
        use Controller::*;
        use Model::*;
        let ok = match self.controller {
            CdobPid | PidOnly => self.model == LinearPt,
            ClfCbf => self.model == Unicycle,
            HoclfHocbf | Hoclf | DdqnHier => self.model == Lateral5dof,
            Scripted => matches!(self.model, Extended | Lateral5dof),
        };
        if !ok {
            return bad(format!("controller {:?} cannot drive the {:?} model", self.controller, self.model));
        }
        let needs_path = matches!(self.controller, CdobPid | PidOnly | ClfCbf | HoclfHocbf | Hoclf)
            || (self.controller == Scripted && self.model == Extended);
        if needs_path && self.path.is_none() {
            return bad(format!("controller {:?} needs a path", self.controller));
        }
        if self.controller == DdqnHier && !matches!(self.policy, Some(PolicySource::Checkpoint { .. })) {
            return bad("ddqn_hier needs policy.kind = checkpoint".into());
        }
        if !(self.speed > 0.0) {
            return bad("speed must be positive".into());
        }
        for (i, o) in self.obstacles.iter().enumerate() {
            if !(o.radius > 0.0) {
                return bad(format!("obstacles[{i}].radius must be positive"));
            }
            if self.model == Unicycle && o.semi_axes.is_none() {
                return bad(format!("obstacles[{i}].semi_axes is required for unicycle scenes"));
            }
        }
        if let Some(t) = &self.ttz {
            if t.zone.len() < 3 {
                return bad("ttz.zone needs at least three vertices".into());
            }
        }
        if matches!(self.controller, HoclfHocbf | Hoclf) {
            self.hocbf.validate().map_err(|e| HarnessError::Config(format!("hocbf: {e}")))?;
        }
        if self.controller == ClfCbf {
            self.unicycle.config.validate().map_err(|e| HarnessError::Config(format!("unicycle: {e}")))?;
        }
        if let Some(h) = &self.highway {
            h.validate().map_err(|e| HarnessError::Config(format!("highway: {e}")))?;
        }
        Ok(())
    }

    fn resolve(&self, p: &Path) -> PathBuf {
        match &self.base_dir {
            Some(b) if p.is_relative() => b.join(p),
            _ => p.to_path_buf(),
        }
    }

    pub fn resolve_output(&self) -> Option<PathBuf> {
        self.output_dir.as_deref().map(|p| self.resolve(p))
    }

    pub fn policy_file(&self) -> Option<PathBuf> {
        match &self.policy {
            Some(PolicySource::Checkpoint { file }) => Some(self.resolve(file)),
            _ => None,
        }
    }

    /// Fit the configured reference path.
    pub fn build_path(&self) -> Result<Option<ParamPath64>, HarnessError> {
        let Some(src) = &self.path else { return Ok(None) };
        let dense = match src {
            PathSource::Straight { length, y } => densify_waypoints(&[[0.0, *y], [*length, *y]], 1.0)?,
            PathSource::LaneChange { x_start, x_end, length, offset } => lane_change_samples(*x_start, *x_end, *length, *offset, 1.0),
            PathSource::Points { points } => densify_waypoints(points, 1.0)?,
            PathSource::Waypoints { file } => densify_waypoints(&read_waypoints(&self.resolve(file))?, 1.0)?,
        };
        let length: f64 = dense.windows(2).map(|w| (w[1][0] - w[0][0]).hypot(w[1][1] - w[0][1])).sum();
        // about one polynomial piece per 20 m, at least two
        let segments = ((length / 20.0).round() as usize).clamp(2, 64).min(dense.len() / 6).max(1);
        Ok(Some(fit_segmented_path(&dense, segments, 5)?))
    }
}

#[derive(Debug, Deserialize)]
struct WaypointRow {
    x_m: f64,
    y_m: f64,
}

pub fn read_waypoints(path: &Path) -> Result<Vec<[f64; 2]>, HarnessError> {
    let mut rd = csv::Reader::from_path(path).map_err(|e| HarnessError::io_csv(path, e))?;
    let mut out = Vec::new();
    for row in rd.deserialize::<WaypointRow>() {
        let r = row.map_err(|e| HarnessError::io_csv(path, e))?;
        out.push([r.x_m, r.y_m]);
    }
    Ok(out)
}

/// Parse a scenario, naming the offending field on failure.
pub fn parse_scenario(text: &str) -> Result<ScenarioConfig, HarnessError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        HarnessError::Config(format!("at `{path}`: {}", e.into_inner()))
    })
}

pub fn load_scenario(path: &Path) -> Result<ScenarioConfig, HarnessError> {
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Io { path: path.to_path_buf(), source: e })?;
    let mut cfg = parse_scenario(&text).map_err(|e| match e {
        HarnessError::Config(m) => HarnessError::Config(format!("{}: {m}", path.display())),
        other => other,
    })?;
    cfg.base_dir = path.parent().map(Path::to_path_buf);
    Ok(cfg)
}
