//! Synthetic linear-dynamics benchmarks: a 4-goal didactic room with
//! a mixed-quality behavior policy, and a left-most-goal navigation
//! task whose optimal policy is discontinuous.

mod didactic;
mod nav;

pub use didactic::{DidacticRoom, GOAL_REWARDS};
pub use nav::{nav_optimal_action, nav_sample_task, nav_success, NavTask};

/// One episode: ordered (state, action, reward) steps.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub steps: Vec<(Vec<f64>, Vec<f64>, f64)>,
    pub terminal: bool,
}

impl Trajectory {
    pub fn total_reward(&self) -> f64 {
        self.steps.iter().map(|(_, _, r)| r).sum()
    }
}
