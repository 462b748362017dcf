//! Grid world with one patrolling obstacle.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub const GOAL_REWARD: f64 = 25.0;
pub const COLLISION_REWARD: f64 = -300.0;
pub const MOVE_REWARD: f64 = -1.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum GridAction {
    Forward,
    Back,
    Left,
    Right,
    Stay,
}

impl GridAction {
    pub const ALL: [GridAction; 5] = [Self::Forward, Self::Back, Self::Left, Self::Right, Self::Stay];

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    fn delta(self) -> (i32, i32) {
        match self {
            Self::Forward => (1, 0),
            Self::Back => (-1, 0),
            Self::Left => (0, 1),
            Self::Right => (0, -1),
            Self::Stay => (0, 0),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum GridEvent {
    Goal,
    Collision,
    Move,
}

impl GridEvent {
    pub fn reward(self) -> f64 {
        match self {
            Self::Goal => GOAL_REWARD,
            Self::Collision => COLLISION_REWARD,
            Self::Move => MOVE_REWARD,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub width: i32,
    pub height: i32,
    pub goal: (i32, i32),
    /// Column the obstacle patrols up and down.
    pub patrol_column: i32,
    /// Steps before the episode is cut off (not a terminal state).
    pub max_steps: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { width: 8, height: 6, goal: (7, 3), patrol_column: 4, max_steps: 60 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridStep {
    pub obs: Vec<f64>,
    pub reward: f64,
    pub event: GridEvent,
    /// Goal or collision.
    pub done: bool,
    pub truncated: bool,
}

#[derive(Clone, Debug)]
pub struct GridWorld {
    pub config: GridConfig,
    pub vehicle: (i32, i32),
    pub obstacle: (i32, i32),
    /// +1 moving up the column, -1 down.
    pub obstacle_dir: i32,
    pub steps: usize,
    rng: ChaCha8Rng,
}

/// Which way to swing round when the vehicle has to reach the cell behind it.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TurnSide {
    Left,
    Right,
}

/// Turn toward the side with more lateral clearance from the obstacle, left on ties.
pub fn reverse_turn_side(vehicle: (i32, i32), obstacle: (i32, i32)) -> TurnSide {
    let dy = obstacle.1 - vehicle.1;
    if dy > 0 {
        TurnSide::Right
    } else {
        TurnSide::Left
    }
}

impl GridWorld {
    pub const OBS_DIM: usize = 5;
    pub const N_ACTIONS: usize = 5;

    pub fn new(config: GridConfig, seed: u64) -> Self {
        let mut w = Self { config, vehicle: (0, 0), obstacle: (0, 0), obstacle_dir: 1, steps: 0, rng: ChaCha8Rng::seed_from_u64(seed) };
        w.reset();
        w
    }

    /// Vehicle on the left edge, obstacle at a random point of its patrol.
    pub fn reset(&mut self) -> Vec<f64> {
        let h = self.config.height;
        self.vehicle = (0, self.rng.gen_range(0..h));
        self.obstacle = (self.config.patrol_column, self.rng.gen_range(0..h));
        self.obstacle_dir = if self.rng.gen::<bool>() { 1 } else { -1 };
        self.steps = 0;
        self.observe()
    }

    /// Relative obstacle and goal offsets, scaled by the grid size, and the obstacle heading.
    pub fn observe(&self) -> Vec<f64> {
        let (w, h) = (self.config.width as f64, self.config.height as f64);
        let (vx, vy) = self.vehicle;
        vec![
            (self.obstacle.0 - vx) as f64 / w,
            (self.obstacle.1 - vy) as f64 / h,
            (self.config.goal.0 - vx) as f64 / w,
            (self.config.goal.1 - vy) as f64 / h,
            self.obstacle_dir as f64,
        ]
    }

    fn in_bounds(&self, c: (i32, i32)) -> bool {
        c.0 >= 0 && c.1 >= 0 && c.0 < self.config.width && c.1 < self.config.height
    }

    fn advance_obstacle(&mut self) {
        let mut next = self.obstacle.1 + self.obstacle_dir;
        if next < 0 || next >= self.config.height {
            self.obstacle_dir = -self.obstacle_dir;
            next = self.obstacle.1 + self.obstacle_dir;
        }
        self.obstacle.1 = next;
    }

    pub fn step(&mut self, action: GridAction) -> GridStep {
        let (dx, dy) = action.delta();
        let target = (self.vehicle.0 + dx, self.vehicle.1 + dy);
        let before = (self.vehicle, self.obstacle);
        if self.in_bounds(target) {
            self.vehicle = target;
        }
        self.advance_obstacle();
        self.steps += 1;
        let swapped = self.vehicle == before.1 && self.obstacle == before.0;
        let event = if self.vehicle == self.obstacle || swapped {
            GridEvent::Collision
        } else if self.vehicle == self.config.goal {
            GridEvent::Goal
        } else {
            GridEvent::Move
        };
        let done = event != GridEvent::Move;
        GridStep { obs: self.observe(), reward: event.reward(), event, done, truncated: !done && self.steps >= self.config.max_steps }
    }
}
