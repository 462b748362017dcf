use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::net::{argmax, Mlp};
use crate::replay::{ReplayBuffer, Transition};
use crate::DrlError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Dqn,
    Ddqn,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetUpdate {
    /// Polyak averaging after every learn step.
    Soft { rate: f64 },
    /// Full copy every `period` learn steps.
    Hard { period: u64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AgentConfig {
    pub buffer_size: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub target_update: TargetUpdate,
    pub eps_start: f64,
    pub eps_end: f64,
    pub eps_decay_steps: u64,
    pub gamma_discount: f64,
    pub warmup_steps: u64,
    pub hidden: Vec<usize>,
    pub algorithm: Algorithm,
    /// Environment steps between learn steps.
    pub train_every: u64,
}

impl Default for AgentConfig {
    /// The highway DDQN settings.
    fn default() -> Self {
        Self {
            buffer_size: 100_000,
            batch_size: 64,
            lr: 1e-3,
            target_update: TargetUpdate::Hard { period: 100 },
            eps_start: 1.0,
            eps_end: 0.05,
            eps_decay_steps: 200_000,
            gamma_discount: 0.99,
            warmup_steps: 1000,
            hidden: vec![128, 128],
            algorithm: Algorithm::Ddqn,
            train_every: 1,
        }
    }
}

impl AgentConfig {
    /// Grid-world DQN: 32x32 hidden, soft target rate 0.01, shorter
    /// discount horizon and exploration schedule sized for a 50k-step budget.
    pub fn grid_dqn() -> Self {
        Self {
            hidden: vec![32, 32],
            gamma_discount: 0.9,
            eps_decay_steps: 30_000,
            target_update: TargetUpdate::Soft { rate: 0.01 },
            algorithm: Algorithm::Dqn,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), DrlError> {
        let bad = |m: &str| Err(DrlError::Config(m.to_string()));
        if !(self.gamma_discount > 0.0 && self.gamma_discount < 1.0) {
            return bad("gamma_discount must be in (0, 1)");
        }
        if !(self.eps_end <= self.eps_start) || self.eps_end < 0.0 || self.eps_start > 1.0 {
            return bad("need 0 <= eps_end <= eps_start <= 1");
        }
        if self.batch_size == 0 || self.buffer_size == 0 || self.train_every == 0 {
            return bad("batch_size, buffer_size and train_every must be positive");
        }
        if !(self.lr > 0.0) {
            return bad("lr must be positive");
        }
        match self.target_update {
            TargetUpdate::Soft { rate } if !(rate > 0.0 && rate <= 1.0) => bad("soft rate must be in (0, 1]"),
            TargetUpdate::Hard { period: 0 } => bad("hard period must be positive"),
            _ => Ok(()),
        }
    }
}

/// Linear decay from `eps_start` to `eps_end` over `eps_decay_steps`, then flat.
pub fn epsilon_at(step: u64, config: &AgentConfig) -> f64 {
    if step >= config.eps_decay_steps {
        return config.eps_end;
    }
    let frac = step as f64 / config.eps_decay_steps as f64;
    config.eps_start + (config.eps_end - config.eps_start) * frac
}

/// Returns the action and whether it came from the random branch.
pub fn epsilon_greedy<R: Rng>(q: &[f64], eps: f64, rng: &mut R) -> (usize, bool) {
    if rng.gen::<f64>() < eps {
        (rng.gen_range(0..q.len()), true)
    } else {
        (argmax(q), false)
    }
}

/// Regression targets for a batch.
pub fn compute_targets(online: &Mlp, target: &Mlp, batch: &[&Transition], gamma: f64, algorithm: Algorithm) -> Result<Vec<f64>, DrlError> {
    batch
        .iter()
        .map(|t| {
            if t.done {
                return Ok(t.r);
            }
            let qt = target.forward(&t.s_next)?;
            let next = match algorithm {
                Algorithm::Dqn => qt[argmax(&qt)],
                Algorithm::Ddqn => qt[argmax(&online.forward(&t.s_next)?)],
            };
            Ok(t.r + gamma * next)
        })
        .collect()
}

/// MSE on the taken actions followed by one Adam step. Returns the batch loss.
pub fn train_step(online: &mut Mlp, target: &Mlp, batch: &[&Transition], config: &AgentConfig) -> Result<f64, DrlError> {
    if batch.is_empty() {
        return Err(DrlError::Config("empty batch".into()));
    }
    let y = compute_targets(online, target, batch, config.gamma_discount, config.algorithm)?;
    let n = batch.len() as f64;
    let mut grad = vec![0.0; online.params.len()];
    let mut loss = 0.0;
    let mut d_out = vec![0.0; online.output_dim()];
    for (t, &yi) in batch.iter().zip(&y) {
        if t.a >= online.output_dim() {
            return Err(DrlError::Config(format!("action {} out of range", t.a)));
        }
        let trace = online.forward_trace(&t.s)?;
        let err = trace.output()[t.a] - yi;
        loss += err * err / n;
        d_out.iter_mut().for_each(|d| *d = 0.0);
        d_out[t.a] = 2.0 * err / n;
        online.backward(&trace, &d_out, &mut grad);
    }
    if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
        return Err(DrlError::NonFinite { loss });
    }
    online.adam_update(&grad, config.lr);
    Ok(loss)
}

/// Apply the configured target update after learn step number `learn_steps`.
pub fn sync_target(online: &Mlp, target: &mut Mlp, update: TargetUpdate, learn_steps: u64) {
    assert!(online.same_shape(target), "target network shape");
    match update {
        TargetUpdate::Soft { rate } => {
            for (t, &o) in target.params.iter_mut().zip(&online.params) {
                *t = rate * o + (1.0 - rate) * *t;
            }
        }
        TargetUpdate::Hard { period } => {
            if learn_steps % period == 0 {
                target.params.copy_from_slice(&online.params);
            }
        }
    }
}

/// Online and target networks, replay and counters.
#[derive(Clone, Debug)]
pub struct Agent {
    pub online: Mlp,
    pub target: Mlp,
    pub buffer: ReplayBuffer,
    pub config: AgentConfig,
    pub env_steps: u64,
    pub learn_steps: u64,
    rng: ChaCha8Rng,
}

impl Agent {
    pub fn new(obs_dim: usize, n_actions: usize, config: AgentConfig, seed: u64) -> Result<Self, DrlError> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut dims = vec![obs_dim];
        dims.extend(&config.hidden);
        dims.push(n_actions);
        let online = Mlp::new(&dims, &mut rng)?;
        let target = online.clone();
        Ok(Self { online, target, buffer: ReplayBuffer::new(config.buffer_size), config, env_steps: 0, learn_steps: 0, rng })
    }

    pub fn epsilon(&self) -> f64 {
        epsilon_at(self.env_steps, &self.config)
    }

    pub fn act(&mut self, obs: &[f64]) -> Result<usize, DrlError> {
        let q = self.online.forward(obs)?;
        let eps = self.epsilon();
        Ok(epsilon_greedy(&q, eps, &mut self.rng).0)
    }

    pub fn greedy(&self, obs: &[f64]) -> Result<usize, DrlError> {
        Ok(argmax(&self.online.forward(obs)?))
    }

    /// Store a transition and learn when due. Returns the loss of a learn step.
    pub fn observe(&mut self, t: Transition) -> Result<Option<f64>, DrlError> {
        self.buffer.push(t);
        self.env_steps += 1;
        let due = self.env_steps >= self.config.warmup_steps
            && self.buffer.len() >= self.config.batch_size
            && self.env_steps % self.config.train_every == 0;
        if !due {
            return Ok(None);
        }
        let batch = self.buffer.sample(self.config.batch_size, &mut self.rng);
        let loss = train_step(&mut self.online, &self.target, &batch, &self.config)?;
        self.learn_steps += 1;
        sync_target(&self.online, &mut self.target, self.config.target_update, self.learn_steps);
        Ok(Some(loss))
    }
}
