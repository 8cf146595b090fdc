use rand::Rng;

/// Single-step navigation task: reach the goal with the smallest
/// first coordinate. The policy observes (agent, g1, g2), a state of
/// dimension 3*D, and emits a D-dimensional displacement.
#[derive(Debug, Clone)]
pub struct NavTask {
    pub dim: usize,
    pub agent: Vec<f64>,
    pub g1: Vec<f64>,
    pub g2: Vec<f64>,
}

impl NavTask {
    pub fn state(&self) -> Vec<f64> {
        let mut s = Vec::with_capacity(3 * self.dim);
        s.extend_from_slice(&self.agent);
        s.extend_from_slice(&self.g1);
        s.extend_from_slice(&self.g2);
        s
    }

    /// The left-most goal; exact first-coordinate ties go to g1.
    pub fn target(&self) -> &[f64] {
        if self.g2[0] < self.g1[0] {
            &self.g2
        } else {
            &self.g1
        }
    }

    pub fn other(&self) -> &[f64] {
        if self.g2[0] < self.g1[0] {
            &self.g1
        } else {
            &self.g2
        }
    }
}

/// Sample a task: agent uniform in [-1,1]^D, goals uniform in
/// [-epsilon, epsilon]^D. In delta mode the second goal's first
/// coordinate is pinned to the first goal's plus Uniform(-delta, delta),
/// which makes the left-most goal nearly ambiguous.
pub fn nav_sample_task<R: Rng>(
    dim: usize,
    epsilon: f64,
    delta: Option<f64>,
    rng: &mut R,
) -> NavTask {
    let agent = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let g1: Vec<f64> = (0..dim).map(|_| rng.gen_range(-epsilon..epsilon)).collect();
    let mut g2: Vec<f64> = (0..dim).map(|_| rng.gen_range(-epsilon..epsilon)).collect();
    if let Some(d) = delta {
        g2[0] = g1[0] + rng.gen_range(-d..d);
    }
    NavTask {
        dim,
        agent,
        g1,
        g2,
    }
}

/// Optimal displacement a* = g* - agent.
pub fn nav_optimal_action(task: &NavTask) -> Vec<f64> {
    task.target()
        .iter()
        .zip(&task.agent)
        .map(|(g, s)| g - s)
        .collect()
}

/// Success: the final position is within 0.1*sqrt(D) of the correct
/// goal and strictly closer to it than to the other goal.
pub fn nav_success(task: &NavTask, final_pos: &[f64]) -> bool {
    let d_target = dist(final_pos, task.target());
    let d_other = dist(final_pos, task.other());
    d_target <= 0.1 * (task.dim as f64).sqrt() && d_target < d_other
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}
