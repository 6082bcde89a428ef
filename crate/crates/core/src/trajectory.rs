use serde::{Deserialize, Serialize};

use crate::model::TypedPartition;

/// A piecewise-constant, right-continuous path in ℰ_n(V).
///
/// `states[i]` holds on `[times[i], times[i+1])`; the last state holds up to `horizon`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<TypedPartition>,
    pub horizon: f64,
}

impl Trajectory {
    pub fn new(initial: TypedPartition, horizon: f64) -> Self {
        Self { times: vec![0.0], states: vec![initial], horizon }
    }

    /// Appends a state change; repeated states are dropped.
    pub fn record(&mut self, t: f64, state: TypedPartition) {
        if self.states.last() != Some(&state) {
            self.times.push(t);
            self.states.push(state);
        }
    }

    pub fn initial(&self) -> &TypedPartition {
        &self.states[0]
    }

    pub fn last(&self) -> &TypedPartition {
        self.states.last().expect("nonempty")
    }

    /// The state at time t (t clamped to the recorded range).
    pub fn state_at(&self, t: f64) -> &TypedPartition {
        let i = self.times.partition_point(|&s| s <= t);
        &self.states[i.saturating_sub(1)]
    }

    /// First time the path reaches a single block, if within the horizon.
    pub fn absorption_time(&self) -> Option<f64> {
        self.states.iter().position(|s| s.num_blocks() == 1).map(|i| self.times[i])
    }

    pub fn block_count_nonincreasing(&self) -> bool {
        self.states.windows(2).all(|w| w[1].num_blocks() <= w[0].num_blocks())
    }
}

/// What a path must satisfy at one time of a cylinder event.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    /// Exactly this typed partition.
    State(TypedPartition),
    /// Any partition with this many blocks, whatever the deme labels.
    BlockCount(usize),
}

impl Target {
    pub fn matches(&self, state: &TypedPartition) -> bool {
        match self {
            Target::State(s) => s == state,
            Target::BlockCount(k) => state.num_blocks() == *k,
        }
    }
}

/// The event {x(t_i) ∈ target_i for all i}, with times ascending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cylinder {
    pub points: Vec<(f64, Target)>,
}

impl Cylinder {
    pub fn new(points: Vec<(f64, Target)>) -> crate::Result<Self> {
        if points.windows(2).any(|w| w[1].0 < w[0].0) || points.iter().any(|p| !(p.0 >= 0.0 && p.0.is_finite())) {
            return Err(crate::error::invalid("cylinder times must be finite, nonnegative and ascending"));
        }
        Ok(Self { points })
    }

    /// Two or more samples merged into one block by time t.
    pub fn merged_by(t: f64) -> Self {
        Self { points: vec![(t, Target::BlockCount(1))] }
    }

    pub fn last_time(&self) -> f64 {
        self.points.last().map_or(0.0, |p| p.0)
    }

    pub fn contains(&self, path: &Trajectory) -> bool {
        self.points.iter().all(|(t, target)| target.matches(path.state_at(*t)))
    }
}
