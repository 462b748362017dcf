//! Episode runners, training loops and the training log.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::agent::Agent;
use crate::grid::{GridAction, GridConfig, GridEvent, GridWorld};
use crate::highway::{HighwayAction, HighwayConfig, HighwayEnv, RewardParts};
use crate::replay::Transition;
use crate::DrlError;

/// One row of the training log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub episode: usize,
    pub steps: usize,
    pub total_reward: f64,
    /// Mean learn-step loss, 0 when no learn step ran.
    pub loss_mean: f64,
    pub eps: f64,
    #[serde(skip)]
    pub success: bool,
    #[serde(skip)]
    pub collided: bool,
}

pub fn write_training_csv<W: Write>(records: &[EpisodeRecord], w: W) -> Result<(), DrlError> {
    let mut out = csv::Writer::from_writer(w);
    for r in records {
        out.serialize(r)?;
    }
    out.flush()?;
    Ok(())
}

struct LossAcc(f64, usize);

impl LossAcc {
    fn add(&mut self, l: Option<f64>) {
        if let Some(l) = l {
            self.0 += l;
            self.1 += 1;
        }
    }

    fn mean(&self) -> f64 {
        if self.1 == 0 {
            0.0
        } else {
            self.0 / self.1 as f64
        }
    }
}

/// Either an epsilon-greedy learning episode or a greedy evaluation episode.
pub fn run_grid_episode(agent: &mut Agent, env: &mut GridWorld, learn: bool, episode: usize) -> Result<EpisodeRecord, DrlError> {
    let mut obs = env.reset();
    let eps = agent.epsilon();
    let mut total = 0.0;
    let mut loss = LossAcc(0.0, 0);
    let mut steps = 0;
    loop {
        let a = if learn { agent.act(&obs)? } else { agent.greedy(&obs)? };
        let st = env.step(GridAction::from_index(a).expect("action index within the grid action set"));
        total += st.reward;
        steps += 1;
        if learn {
            loss.add(agent.observe(Transition { s: obs, a, r: st.reward, s_next: st.obs.clone(), done: st.done })?);
        }
        obs = st.obs;
        if st.done || st.truncated {
            return Ok(EpisodeRecord {
                episode,
                steps,
                total_reward: total,
                loss_mean: loss.mean(),
                eps,
                success: st.event == GridEvent::Goal,
                collided: st.event == GridEvent::Collision,
            });
        }
    }
}

/// Train for at most `max_env_steps` environment steps (whole episodes).
pub fn train_grid(agent: &mut Agent, env: &mut GridWorld, max_env_steps: u64) -> Result<Vec<EpisodeRecord>, DrlError> {
    let mut records = Vec::new();
    while agent.env_steps + env.config.max_steps as u64 <= max_env_steps {
        let r = run_grid_episode(agent, env, true, records.len())?;
        records.push(r);
    }
    Ok(records)
}

/// Fraction of greedy episodes that reach the goal without collision.
pub fn evaluate_grid(agent: &mut Agent, config: &GridConfig, episodes: usize, seed: u64) -> Result<f64, DrlError> {
    let mut env = GridWorld::new(config.clone(), seed);
    let mut ok = 0;
    for k in 0..episodes {
        if run_grid_episode(agent, &mut env, false, k)?.success {
            ok += 1;
        }
    }
    Ok(ok as f64 / episodes as f64)
}

#[derive(Clone, Debug, PartialEq)]
pub struct HighwayEpisode {
    pub record: EpisodeRecord,
    /// Target lane after each decision.
    pub lanes: Vec<usize>,
    pub parts: Vec<RewardParts>,
    pub rewards: Vec<f64>,
    pub min_distance: f64,
    pub fallbacks: usize,
    /// Ego lateral position after each decision.
    pub ego_y: Vec<f64>,
}

enum Policy<'a> {
    Learn(&'a mut Agent),
    Greedy(&'a Agent),
    Script(&'a mut dyn FnMut(&[f64], usize) -> usize),
}

fn highway_episode(mut policy: Policy<'_>, env: &mut HighwayEnv, episode: usize) -> Result<HighwayEpisode, DrlError> {
    let mut obs = env.reset();
    let eps = match &policy {
        Policy::Learn(a) => a.epsilon(),
        _ => 0.0,
    };
    let mut out = HighwayEpisode {
        record: EpisodeRecord { episode, steps: 0, total_reward: 0.0, loss_mean: 0.0, eps, success: false, collided: false },
        lanes: Vec::new(),
        parts: Vec::new(),
        rewards: Vec::new(),
        min_distance: f64::INFINITY,
        fallbacks: 0,
        ego_y: Vec::new(),
    };
    let mut loss = LossAcc(0.0, 0);
    loop {
        let k = out.record.steps;
        let a = match &mut policy {
            Policy::Learn(agent) => agent.act(&obs)?,
            Policy::Greedy(agent) => agent.greedy(&obs)?,
            Policy::Script(f) => f(&obs, k),
        };
        let action = HighwayAction::from_index(a).ok_or_else(|| DrlError::Config(format!("action {a} out of range")))?;
        let st = env.step(action)?;
        out.ego_y.push(env.ego.y);
        out.min_distance = out.min_distance.min(env.min_distance());
        out.record.steps += 1;
        out.record.total_reward += st.reward;
        out.fallbacks += st.fallbacks;
        out.lanes.push(st.target_lane);
        out.parts.push(st.parts);
        out.rewards.push(st.reward);
        if let Policy::Learn(agent) = &mut policy {
            loss.add(agent.observe(Transition { s: obs, a, r: st.reward, s_next: st.obs.clone(), done: st.done })?);
        }
        obs = st.obs;
        if st.done || st.truncated {
            out.record.success = st.reached_goal;
            out.record.collided = st.collided;
            out.record.loss_mean = loss.mean();
            return Ok(out);
        }
    }
}

/// Decision loop of the hierarchical controller: one action every decision
/// period, the low-level QP at the control rate in between.
pub fn run_hierarchical_episode(agent: &mut Agent, env: &mut HighwayEnv, learn: bool, episode: usize) -> Result<HighwayEpisode, DrlError> {
    if learn {
        highway_episode(Policy::Learn(agent), env, episode)
    } else {
        highway_episode(Policy::Greedy(agent), env, episode)
    }
}

/// Same loop with a fixed policy of `(observation, decision index) -> action`.
pub fn run_scripted_episode(policy: &mut dyn FnMut(&[f64], usize) -> usize, env: &mut HighwayEnv) -> Result<HighwayEpisode, DrlError> {
    highway_episode(Policy::Script(policy), env, 0)
}

pub fn train_highway(agent: &mut Agent, env: &mut HighwayEnv, episodes: usize) -> Result<Vec<EpisodeRecord>, DrlError> {
    (0..episodes).map(|k| run_hierarchical_episode(agent, env, true, k).map(|e| e.record)).collect()
}

pub fn evaluate_highway(agent: &mut Agent, config: &HighwayConfig, episodes: usize, seed: u64) -> Result<Vec<HighwayEpisode>, DrlError> {
    let mut env = HighwayEnv::new(config.clone(), seed)?;
    (0..episodes).map(|k| run_hierarchical_episode(agent, &mut env, false, k)).collect()
}
