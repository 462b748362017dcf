//! `safedrive` command line.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use safedrive_core::cdob::{DStabilitySpec, GainGrid};
use safedrive_core::VehicleParams64;

use crate::export::{export_run, read_metrics, read_trajectory_csv, write_plots};
use crate::scenario::load_scenario;
use crate::sim::run_scenario;
use crate::sweep::{sweep_gains, write_gain_csv};
use crate::training::{evaluate_checkpoint, run_grid_training, run_highway_training, save_outcome, window_means, GridTraining, HighwayTraining};
use crate::HarnessError;

#[derive(Debug, Parser)]
#[command(name = "safedrive", version, about = "Run path-tracking and collision-avoidance scenarios")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Clone, Default)]
pub struct Common {
    /// Override the scenario or training seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Override the run duration, s.
    #[arg(long, global = true)]
    pub duration: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a scenario file and write its artifacts.
    Run {
        scenario: PathBuf,
        /// Skip the SVG plots.
        #[arg(long)]
        no_plots: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Parameter-space sweeps.
    Sweep {
        #[command(subcommand)]
        what: SweepCommand,
    },
    /// Train a DQN/DDQN agent.
    Train {
        env: TrainEnv,
        /// Highway: training episodes.
        #[arg(long)]
        episodes: Option<usize>,
        /// Grid: environment step budget.
        #[arg(long)]
        steps: Option<u64>,
        #[command(flatten)]
        common: Common,
    },
    /// Greedy evaluation of a saved policy.
    Eval {
        checkpoint: PathBuf,
        #[arg(long, default_value_t = 100)]
        episodes: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Redraw the SVG plots of a run directory.
    Plot { run_dir: PathBuf },
}

#[derive(Debug, Subcommand)]
pub enum SweepCommand {
    /// D-stability admissible region of the PID gains per speed bucket.
    Gains {
        /// Comma-separated speeds, m/s.
        #[arg(long, value_delimiter = ',', default_values_t = vec![2.0, 5.0, 8.0, 12.0])]
        speeds: Vec<f64>,
        /// Preview constant K in l_s = K V.
        #[arg(long, default_value_t = 0.5)]
        k_preview: f64,
        #[arg(long, default_value_t = 0.5)]
        min_damping: f64,
        #[arg(long, default_value_t = 1.0)]
        min_decay: f64,
        #[arg(long, default_value_t = 300.0)]
        max_natural_freq: f64,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum TrainEnv {
    Grid,
    Highway,
}

/// Parse and run; returns the process exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn execute(cmd: Command) -> Result<(), HarnessError> {
    match cmd {
        Command::Run { scenario, no_plots, common } => {
            let mut cfg = load_scenario(&scenario)?;
            if let Some(s) = common.seed {
                cfg.seed = s;
            }
            if let Some(d) = common.duration {
                cfg.duration = d;
            }
            let out = common.out.or_else(|| cfg.resolve_output()).unwrap_or_else(|| default_run_dir(&scenario));
            let run = run_scenario(&cfg)?;
            let files = export_run(&cfg, &run.log, &run.metrics, &out, !no_plots)?;
            let m = &run.metrics;
            println!("{}: {} samples, completed {}, collision {}", display_name(&cfg.name, &scenario), m.samples, m.completed, m.collision);
            if let Some(v) = m.max_abs_e_y {
                println!("  max |e_y| {v:.4} m, rms {:.4} m", m.rms_e_y.unwrap_or(0.0));
            }
            if let Some(d) = &m.min_obstacle_distance {
                println!("  min obstacle distance {:.3} m at t {:.2} s", d.value, d.t);
            }
            if let Some(s) = &m.solve_time_stats {
                println!("  QP solve mean {:.3} ms, p99 {:.3} ms over {}", s.mean_s * 1e3, s.p99_s * 1e3, s.count);
            }
            for f in files {
                println!("  wrote {}", f.display());
            }
            Ok(())
        }
        Command::Sweep { what: SweepCommand::Gains { speeds, k_preview, min_damping, min_decay, max_natural_freq, common } } => {
            let params = VehicleParams64 { k_preview, ..VehicleParams64::default() };
            let spec = DStabilitySpec { min_damping, min_decay, max_natural_freq };
            let res = sweep_gains(&params, &speeds, &spec, &GainGrid::default())?;
            let out = common.out.unwrap_or_else(|| PathBuf::from("runs/sweep"));
            std::fs::create_dir_all(&out).map_err(|e| HarnessError::Io { path: out.clone(), source: e })?;
            let csv = out.join("gains.csv");
            write_gain_csv(&res.rows, &csv)?;
            for ((v, g), d) in res.minimal.iter().zip(&res.diagnostics) {
                match g {
                    Some(g) => println!("V={v}: minimal kp {} ki {} kd {} ({d})", g.k_p, g.k_i, g.k_d),
                    None => println!("{d}"),
                }
            }
            println!("wrote {}", csv.display());
            Ok(())
        }
        Command::Train { env, episodes, steps, common } => {
            let seed = common.seed.unwrap_or(0);
            let (out_dir, outcome) = match env {
                TrainEnv::Grid => {
                    let mut t = GridTraining::default();
                    if let Some(s) = steps {
                        t.max_env_steps = s;
                    }
                    (common.out.unwrap_or_else(|| PathBuf::from("runs/train_grid")), run_grid_training(&t, seed)?)
                }
                TrainEnv::Highway => {
                    let mut t = HighwayTraining::default();
                    if let Some(n) = episodes {
                        t.episodes = n;
                    }
                    if let Some(d) = common.duration {
                        t.env.horizon_s = d;
                    }
                    (common.out.unwrap_or_else(|| PathBuf::from("runs/train_highway")), run_highway_training(&t, seed)?)
                }
            };
            save_outcome(&outcome, &out_dir)?;
            println!("{} episodes, {} env steps", outcome.records.len(), outcome.agent.env_steps);
            let w = (outcome.records.len() / 5).clamp(1, 200);
            if let Some((first, last)) = window_means(&outcome.records, w) {
                println!("mean reward first {w}: {first:.2}, last {w}: {last:.2}");
            }
            println!("greedy success {:.3} over {} episodes", outcome.eval_success, outcome.eval_episodes);
            println!("wrote {}", out_dir.display());
            Ok(())
        }
        Command::Eval { checkpoint, episodes, common } => {
            let (kind, rate) = evaluate_checkpoint(&checkpoint, episodes, common.seed.unwrap_or(0))?;
            println!("{kind}: greedy success {rate:.3} over {episodes} episodes");
            Ok(())
        }
        Command::Plot { run_dir } => {
            let rows = read_trajectory_csv(&run_dir.join("trajectory.csv"))?;
            let reference = read_metrics(&run_dir.join("metrics.json"))
                .ok()
                .and_then(|r| r.config.build_path().ok().flatten())
                .map(|p| crate::sim::sample_reference(&p))
                .unwrap_or_default();
            for f in write_plots(&rows, &reference, &[], &run_dir)? {
                println!("wrote {}", f.display());
            }
            Ok(())
        }
    }
}

fn default_run_dir(scenario: &Path) -> PathBuf {
    let stem = scenario.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "run".into());
    PathBuf::from("runs").join(stem)
}

fn display_name(name: &str, file: &Path) -> String {
    if name.is_empty() {
        file.display().to_string()
    } else {
        name.to_string()
    }
}
