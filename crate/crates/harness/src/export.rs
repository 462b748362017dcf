//! Run artifacts: trajectory CSV, metrics JSON and SVG plots.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::metrics::Metrics;
use crate::scenario::ScenarioConfig;
use crate::sim::{LogRow, TrajectoryLog};
use crate::HarnessError;

pub const CODE_VERSION: &str = env!("CARGO_PKG_VERSION");

pub const TTZ_DEFINITION: &str = "TTZ = distance along the current heading to the conflict zone boundary / current speed; \
0 inside the zone, infinite when stopped or when the heading ray misses the zone. \
A sample is banded <2/<4/<6 s when both the vehicle and the VRU TTZ are below the threshold; \
an event is the entry into a tighter band.";

/// Everything written to `metrics.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub code_version: String,
    pub scenario: String,
    pub seed: u64,
    pub ttz_definition: String,
    pub pid_gains: Option<[f64; 3]>,
    pub metrics: Metrics,
    pub config: ScenarioConfig,
}

impl MetricsReport {
    pub fn new(config: &ScenarioConfig, log: &TrajectoryLog, metrics: &Metrics) -> Self {
        Self {
            code_version: CODE_VERSION.to_string(),
            scenario: config.name.clone(),
            seed: config.seed,
            ttz_definition: TTZ_DEFINITION.to_string(),
            pid_gains: log.pid_gains,
            metrics: metrics.clone(),
            config: config.clone(),
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |e| HarnessError::Io { path: path.to_path_buf(), source: e }
}

pub fn write_trajectory_csv(rows: &[LogRow], path: &Path) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| HarnessError::io_csv(path, e))?;
    if rows.is_empty() {
        w.write_record(["t_s", "x_m", "y_m", "psi_rad", "beta_rad", "r_radps", "V_mps", "delta_f_rad", "e_y_m", "gamma", "min_obs_dist_m", "qp_status"])
            .map_err(|e| HarnessError::io_csv(path, e))?;
    }
    for r in rows {
        w.serialize(r).map_err(|e| HarnessError::io_csv(path, e))?;
    }
    w.flush().map_err(io_err(path))
}

pub fn read_trajectory_csv(path: &Path) -> Result<Vec<LogRow>, HarnessError> {
    let mut rd = csv::Reader::from_path(path).map_err(|e| HarnessError::io_csv(path, e))?;
    rd.deserialize().map(|r| r.map_err(|e| HarnessError::io_csv(path, e))).collect()
}

pub fn read_metrics(path: &Path) -> Result<MetricsReport, HarnessError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))
}

/// Write `trajectory.csv`, `metrics.json` and, if asked, the SVG plots.
pub fn export_run(config: &ScenarioConfig, log: &TrajectoryLog, metrics: &Metrics, dir: &Path, plots: bool) -> Result<Vec<PathBuf>, HarnessError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut written = Vec::new();
    let csv_path = dir.join("trajectory.csv");
    write_trajectory_csv(&log.rows, &csv_path)?;
    written.push(csv_path);
    let json_path = dir.join("metrics.json");
    let report = MetricsReport::new(config, log, metrics);
    let text = serde_json::to_string_pretty(&report).map_err(|e| HarnessError::Simulation(e.to_string()))?;
    fs::write(&json_path, text + "\n").map_err(io_err(&json_path))?;
    written.push(json_path);
    if plots {
        written.extend(write_plots(&log.rows, &log.reference, &log.obstacle_tracks, dir)?);
    }
    Ok(written)
}

pub fn write_plots(rows: &[LogRow], reference: &[[f64; 2]], obstacles: &[Vec<[f64; 2]>], dir: &Path) -> Result<Vec<PathBuf>, HarnessError> {
    let xy: Vec<(f64, f64)> = rows.iter().map(|r| (r.x_m, r.y_m)).collect();
    let mut path_series = vec![
        Series { label: "reference".into(), points: reference.iter().map(|p| (p[0], p[1])).collect() },
        Series { label: "vehicle".into(), points: xy },
    ];
    for (k, o) in obstacles.iter().enumerate() {
        path_series.push(Series { label: format!("obstacle {k}"), points: o.iter().map(|p| (p[0], p[1])).collect() });
    }
    let over_t = |label: &str, f: &dyn Fn(&LogRow) -> f64| Series {
        label: label.into(),
        points: rows.iter().map(|r| (r.t_s, f(r))).filter(|p| p.1.is_finite()).collect(),
    };
    let figures = [
        ("path.svg", "Path and trajectory", "x, m", "y, m", path_series),
        ("e_y.svg", "Lateral error", "t, s", "e_y, m", vec![over_t("e_y", &|r| r.e_y_m)]),
        ("distance.svg", "Distance to nearest obstacle", "t, s", "d, m", vec![over_t("distance", &|r| r.min_obs_dist_m)]),
        ("steering.svg", "Front steering", "t, s", "delta_f, rad", vec![over_t("delta_f", &|r| r.delta_f_rad)]),
    ];
    let mut out = Vec::new();
    for (file, title, xl, yl, series) in figures {
        if series.iter().all(|s| s.points.is_empty()) {
            continue;
        }
        let p = dir.join(file);
        fs::write(&p, line_plot(title, xl, yl, &series)).map_err(io_err(&p))?;
        out.push(p);
    }
    Ok(out)
}

pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

/// Minimal SVG line chart with axes, ticks and a legend.
pub fn line_plot(title: &str, xlabel: &str, ylabel: &str, series: &[Series]) -> String {
    let (w, h, ml, mr, mt, mb) = (640.0, 400.0, 60.0, 20.0, 30.0, 45.0);
    let pts = series.iter().flat_map(|s| s.points.iter());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !x0.is_finite() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    if x1 - x0 < 1e-12 {
        x1 = x0 + 1.0;
    }
    if y1 - y0 < 1e-12 {
        y0 -= 0.5;
        y1 += 0.5;
    }
    let pad = 0.05 * (y1 - y0);
    let (y0, y1) = (y0 - pad, y1 + pad);
    let sx = |x: f64| ml + (x - x0) / (x1 - x0) * (w - ml - mr);
    let sy = |y: f64| h - mb - (y - y0) / (y1 - y0) * (h - mt - mb);

    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="11">"#);
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="18" text-anchor="middle" font-size="13">{title}</text>"#, w / 2.0);
    let _ = writeln!(s, r##"<rect x="{ml}" y="{mt}" width="{}" height="{}" fill="none" stroke="#444"/>"##, w - ml - mr, h - mt - mb);
    for k in 0..=5 {
        let fx = x0 + (x1 - x0) * k as f64 / 5.0;
        let fy = y0 + (y1 - y0) * k as f64 / 5.0;
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#, sx(fx), h - mb + 14.0, tick(fx));
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#, ml - 4.0, sy(fy) + 4.0, tick(fy));
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{xlabel}</text>"#, w / 2.0, h - 8.0);
    let _ = writeln!(s, r#"<text x="14" y="{}" text-anchor="middle" transform="rotate(-90 14 {})">{ylabel}</text>"#, h / 2.0, h / 2.0);
    for (i, ser) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        // thin out long series; a plot does not need every millisecond
        let stride = (ser.points.len() / 2000).max(1);
        let d: Vec<String> = ser.points.iter().step_by(stride).map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
        let _ = writeln!(s, r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#, d.join(" "));
        let ly = mt + 14.0 + 14.0 * i as f64;
        let _ = writeln!(s, r#"<text x="{}" y="{ly}" fill="{color}" text-anchor="end">{}</text>"#, w - mr - 6.0, ser.label);
    }
    s.push_str("</svg>\n");
    s
}

fn tick(v: f64) -> String {
    if v.abs() >= 100.0 {
        format!("{v:.0}")
    } else if v.abs() >= 1.0 {
        format!("{v:.1}")
    } else {
        format!("{v:.3}")
    }
}
