use std::path::Path;

use serde::Serialize;

use safedrive_core::cdob::{admissible_gain_region, DStabilitySpec, GainGrid, PidGains};
use safedrive_core::VehicleParams64;

use crate::HarnessError;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GainRow {
    #[serde(rename = "V")]
    pub v: f64,
    pub kp: f64,
    pub ki: f64,
    pub kd: f64,
    pub admissible: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepResult {
    pub rows: Vec<GainRow>,
    /// Smallest admissible triple per speed, `None` where the region is empty.
    pub minimal: Vec<(f64, Option<PidGains<f64>>)>,
    pub diagnostics: Vec<String>,
}

/// D-stability sweep at each speed; runs the speeds on separate threads.
pub fn sweep_gains(params: &VehicleParams64, speeds: &[f64], spec: &DStabilitySpec, grid: &GainGrid) -> Result<SweepResult, HarnessError> {
    let regions: Vec<_> = std::thread::scope(|s| {
        let handles: Vec<_> = speeds.iter().map(|&v| s.spawn(move || admissible_gain_region(params, v, spec, grid))).collect();
        handles.into_iter().map(|h| h.join().expect("sweep worker panicked")).collect()
    });
    let mut out = SweepResult { rows: Vec::new(), minimal: Vec::new(), diagnostics: Vec::new() };
    for (&v, region) in speeds.iter().zip(regions) {
        let region = region?;
        out.rows.extend(region.samples.iter().map(|g| GainRow { v: g.v, kp: g.kp, ki: g.ki, kd: g.kd, admissible: g.admissible }));
        out.minimal.push((v, region.minimal));
        out.diagnostics.push(format!("V={v}: {}", region.diagnostics));
    }
    Ok(out)
}

pub fn write_gain_csv(rows: &[GainRow], path: &Path) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| HarnessError::io_csv(path, e))?;
    for r in rows {
        w.serialize(r).map_err(|e| HarnessError::io_csv(path, e))?;
    }
    w.flush().map_err(|e| HarnessError::Io { path: path.to_path_buf(), source: e })
}
