//! Training and evaluation entry points used by the CLI and the acceptance run.

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use serde::{Deserialize, Serialize};

use safedrive_drl::checkpoint::{read_checkpoint, write_checkpoint};
use safedrive_drl::grid::{GridConfig, GridWorld};
use safedrive_drl::highway::{HighwayConfig, HighwayEnv};
use safedrive_drl::train::{evaluate_grid, evaluate_highway, train_grid, train_highway, write_training_csv, EpisodeRecord};
use safedrive_drl::{Agent, AgentConfig};

use crate::HarnessError;

/// Offset between the training seed and the evaluation environment seed.
pub const EVAL_SEED_OFFSET: u64 = 1000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridTraining {
    pub max_env_steps: u64,
    pub eval_episodes: usize,
    pub agent: AgentConfig,
    pub env: GridConfig,
}

impl Default for GridTraining {
    fn default() -> Self {
        Self { max_env_steps: 50_000, eval_episodes: 200, agent: AgentConfig::grid_dqn(), env: GridConfig::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HighwayTraining {
    pub episodes: usize,
    pub eval_episodes: usize,
    pub agent: AgentConfig,
    pub env: HighwayConfig,
}

impl Default for HighwayTraining {
    fn default() -> Self {
        Self {
            episodes: 1500,
            eval_episodes: 100,
            agent: AgentConfig { eps_decay_steps: 60_000, train_every: 2, ..AgentConfig::default() },
            env: HighwayConfig::default(),
        }
    }
}

pub struct TrainingOutcome {
    pub agent: Agent,
    pub records: Vec<EpisodeRecord>,
    /// Fraction of greedy evaluation episodes that reached the goal without a crash.
    pub eval_success: f64,
    pub eval_episodes: usize,
}

/// Agent seeded with `seed`, training environment with `seed + 1`.
pub fn run_grid_training(t: &GridTraining, seed: u64) -> Result<TrainingOutcome, HarnessError> {
    let mut agent = Agent::new(GridWorld::OBS_DIM, GridWorld::N_ACTIONS, t.agent.clone(), seed)?;
    let mut env = GridWorld::new(t.env.clone(), seed.wrapping_add(1));
    let records = train_grid(&mut agent, &mut env, t.max_env_steps)?;
    let eval_success = evaluate_grid(&mut agent, &t.env, t.eval_episodes, seed.wrapping_add(EVAL_SEED_OFFSET))?;
    Ok(TrainingOutcome { agent, records, eval_success, eval_episodes: t.eval_episodes })
}

pub fn run_highway_training(t: &HighwayTraining, seed: u64) -> Result<TrainingOutcome, HarnessError> {
    let mut agent = Agent::new(HighwayEnv::OBS_DIM, HighwayEnv::N_ACTIONS, t.agent.clone(), seed)?;
    let mut env = HighwayEnv::new(t.env.clone(), seed.wrapping_add(1))?;
    let records = train_highway(&mut agent, &mut env, t.episodes)?;
    let eval_success = highway_success(&mut agent, &t.env, t.eval_episodes, seed.wrapping_add(EVAL_SEED_OFFSET))?;
    Ok(TrainingOutcome { agent, records, eval_success, eval_episodes: t.eval_episodes })
}

pub fn highway_success(agent: &mut Agent, env: &HighwayConfig, episodes: usize, seed: u64) -> Result<f64, HarnessError> {
    let eps = evaluate_highway(agent, env, episodes, seed)?;
    Ok(eps.iter().filter(|e| e.record.success && !e.record.collided).count() as f64 / episodes.max(1) as f64)
}

/// Mean total reward over `window` episodes at the start and at the end.
pub fn window_means(records: &[EpisodeRecord], window: usize) -> Option<(f64, f64)> {
    if records.len() < window || window == 0 {
        return None;
    }
    let mean = |r: &[EpisodeRecord]| r.iter().map(|e| e.total_reward).sum::<f64>() / r.len() as f64;
    Some((mean(&records[..window]), mean(&records[records.len() - window..])))
}

pub fn save_outcome(out: &TrainingOutcome, dir: &Path) -> Result<(), HarnessError> {
    std::fs::create_dir_all(dir).map_err(|e| HarnessError::Io { path: dir.to_path_buf(), source: e })?;
    let log = dir.join("training.csv");
    let f = File::create(&log).map_err(|e| HarnessError::Io { path: log.clone(), source: e })?;
    write_training_csv(&out.records, BufWriter::new(f))?;
    let ck = dir.join("policy.vqn");
    let f = File::create(&ck).map_err(|e| HarnessError::Io { path: ck.clone(), source: e })?;
    write_checkpoint(&out.agent.online, true, BufWriter::new(f))?;
    Ok(())
}

/// Greedy evaluation of a saved policy on the grid or highway environment,
/// chosen by the network's input width.
pub fn evaluate_checkpoint(path: &Path, episodes: usize, seed: u64) -> Result<(String, f64), HarnessError> {
    let f = File::open(path).map_err(|e| HarnessError::Io { path: path.to_path_buf(), source: e })?;
    let net = read_checkpoint(std::io::BufReader::new(f))?;
    let (kind, mut agent) = match net.input_dim() {
        GridWorld::OBS_DIM => ("grid", Agent::new(GridWorld::OBS_DIM, GridWorld::N_ACTIONS, AgentConfig::grid_dqn(), seed)?),
        HighwayEnv::OBS_DIM => ("highway", Agent::new(HighwayEnv::OBS_DIM, HighwayEnv::N_ACTIONS, AgentConfig::default(), seed)?),
        d => return Err(HarnessError::Config(format!("checkpoint input width {d} matches no environment"))),
    };
    if !agent.online.same_shape(&net) {
        let mut cfg = agent.config.clone();
        cfg.hidden = (0..net.num_layers() - 1).map(|k| net.layer(k).1.len()).collect();
        agent = Agent::new(net.input_dim(), net.output_dim(), cfg, seed)?;
    }
    agent.online = net.clone();
    agent.target = net;
    let rate = match kind {
        "grid" => evaluate_grid(&mut agent, &GridConfig::default(), episodes, seed)?,
        _ => highway_success(&mut agent, &HighwayConfig::default(), episodes, seed)?,
    };
    Ok((kind.to_string(), rate))
}
