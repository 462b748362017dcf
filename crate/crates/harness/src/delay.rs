use std::collections::VecDeque;

use crate::HarnessError;

/// Fixed transport delay of `round(delay / dt)` samples.
///
/// The line starts filled with the initial sample, so early pops return it.
#[derive(Clone, Debug, PartialEq)]
pub struct DelayLine<S> {
    fifo: VecDeque<S>,
    steps: usize,
    pub delay: f64,
    pub dt: f64,
}

impl<S: Clone> DelayLine<S> {
    pub fn new(delay: f64, dt: f64, initial: S) -> Result<Self, HarnessError> {
        if !(dt > 0.0) || !(delay >= 0.0) || !delay.is_finite() {
            return Err(HarnessError::Config(format!("delay line needs dt > 0 and delay >= 0, got dt {dt}, delay {delay}")));
        }
        let steps = (delay / dt).round() as usize;
        Ok(Self { fifo: std::iter::repeat(initial).take(steps).collect(), steps, delay, dt })
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Push the current sample and get the one from `steps` pushes ago.
    pub fn push_pop(&mut self, sample: S) -> S {
        if self.steps == 0 {
            return sample;
        }
        self.fifo.push_back(sample);
        self.fifo.pop_front().expect("delay line holds `steps` samples")
    }
}
