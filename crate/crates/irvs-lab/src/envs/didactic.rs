use std::f64::consts::PI;

use rand::Rng;

use super::Trajectory;

/// Reward at each corner goal, ordered (-1,-1), (1,-1), (-1,1), (1,1).
/// The +1 goal sits at (1, 1) so the optimal heading from the start
/// region is about pi/4.
pub const GOAL_REWARDS: [f64; 4] = [-1.0, -0.25, 0.5, 1.0];

const GOAL_POSITIONS: [[f64; 2]; 4] = [[-1.0, -1.0], [1.0, -1.0], [-1.0, 1.0], [1.0, 1.0]];

/// Room on [-1,1]^2 with one rewarding goal in each corner. Actions
/// are headings in [-pi, pi]; dynamics are a fixed-length step along
/// the heading, clipped to the room.
#[derive(Debug, Clone)]
pub struct DidacticRoom {
    pub goal_radius: f64,
    pub horizon: usize,
    pub step_length: f64,
    /// Start positions are drawn uniformly from [-start_half, start_half]^2.
    pub start_half: f64,
    /// Behavior-policy heading noise, uniform in [-noise, noise].
    pub heading_noise: f64,
}

impl Default for DidacticRoom {
    fn default() -> Self {
        DidacticRoom {
            goal_radius: 0.1,
            horizon: 50,
            step_length: 0.1,
            start_half: 0.25,
            heading_noise: 0.1,
        }
    }
}

impl DidacticRoom {
    pub fn goals(&self) -> [([f64; 2], f64); 4] {
        [
            (GOAL_POSITIONS[0], GOAL_REWARDS[0]),
            (GOAL_POSITIONS[1], GOAL_REWARDS[1]),
            (GOAL_POSITIONS[2], GOAL_REWARDS[2]),
            (GOAL_POSITIONS[3], GOAL_REWARDS[3]),
        ]
    }

    fn goal_hit(&self, pos: [f64; 2]) -> Option<usize> {
        GOAL_POSITIONS.iter().position(|g| {
            let dx = pos[0] - g[0];
            let dy = pos[1] - g[1];
            (dx * dx + dy * dy).sqrt() <= self.goal_radius
        })
    }

    /// Advance one step along the heading. Terminates with the goal's
    /// reward when the position falls inside a goal radius; a start
    /// position already inside a goal terminates immediately.
    pub fn step(&self, pos: [f64; 2], angle: f64) -> ([f64; 2], f64, bool) {
        if let Some(i) = self.goal_hit(pos) {
            return (pos, GOAL_REWARDS[i], true);
        }
        let next = [
            (pos[0] + self.step_length * angle.cos()).clamp(-1.0, 1.0),
            (pos[1] + self.step_length * angle.sin()).clamp(-1.0, 1.0),
        ];
        match self.goal_hit(next) {
            Some(i) => (next, GOAL_REWARDS[i], true),
            None => (next, 0.0, false),
        }
    }

    /// Heading of the data-collecting policy: aim at the chosen goal
    /// plus uniform angle noise, wrapped to [-pi, pi].
    pub fn behavior_policy<R: Rng>(&self, pos: [f64; 2], chosen_goal: usize, rng: &mut R) -> f64 {
        let g = GOAL_POSITIONS[chosen_goal];
        let mut angle = (g[1] - pos[1]).atan2(g[0] - pos[0]);
        if self.heading_noise > 0.0 {
            angle += rng.gen_range(-self.heading_noise..self.heading_noise);
        }
        wrap_angle(angle)
    }

    /// One behavior episode: uniform start, uniform goal choice.
    pub fn rollout_behavior<R: Rng>(&self, rng: &mut R) -> Trajectory {
        let chosen_goal = rng.gen_range(0..4usize);
        let mut pos = [
            rng.gen_range(-self.start_half..self.start_half),
            rng.gen_range(-self.start_half..self.start_half),
        ];
        self.rollout(rng, |room, p, rng| room.behavior_policy(p, chosen_goal, rng), &mut pos)
    }

    /// Roll out an arbitrary heading policy from a uniform start.
    pub fn rollout_policy<R: Rng>(
        &self,
        rng: &mut R,
        mut policy: impl FnMut([f64; 2]) -> f64,
    ) -> Trajectory {
        let mut pos = [
            rng.gen_range(-self.start_half..self.start_half),
            rng.gen_range(-self.start_half..self.start_half),
        ];
        self.rollout(rng, |_, p, _| policy(p), &mut pos)
    }

    fn rollout<R: Rng>(
        &self,
        rng: &mut R,
        mut policy: impl FnMut(&DidacticRoom, [f64; 2], &mut R) -> f64,
        pos: &mut [f64; 2],
    ) -> Trajectory {
        let mut steps = Vec::new();
        let mut terminal = false;
        for _ in 0..self.horizon {
            let angle = policy(self, *pos, rng);
            let (next, reward, done) = self.step(*pos, angle);
            steps.push((pos.to_vec(), vec![angle], reward));
            *pos = next;
            if done {
                terminal = true;
                break;
            }
        }
        Trajectory { steps, terminal }
    }

    /// Index of the goal nearest to a terminal position, if inside
    /// any goal radius.
    pub fn reached_goal(&self, pos: [f64; 2]) -> Option<usize> {
        self.goal_hit(pos)
    }
}

pub fn wrap_angle(a: f64) -> f64 {
    let mut a = a;
    while a > PI {
        a -= 2.0 * PI;
    }
    while a < -PI {
        a += 2.0 * PI;
    }
    a
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn at_goal_center_terminates_immediately() {
        let room = DidacticRoom::default();
        let (pos, reward, done) = room.step([1.0, 1.0], 0.0);
        assert!(done);
        assert_eq!(reward, 1.0);
        assert_eq!(pos, [1.0, 1.0]);
    }

    #[test]
    fn step_moves_along_heading() {
        let room = DidacticRoom::default();
        let (pos, reward, done) = room.step([0.0, 0.0], PI / 4.0);
        assert!(!done);
        assert_eq!(reward, 0.0);
        assert!((pos[0] - 0.0707).abs() < 5e-4);
        assert!((pos[1] - 0.0707).abs() < 5e-4);
    }

    #[test]
    fn noise_free_heading_to_top_right_goal_is_quarter_pi() {
        let mut room = DidacticRoom::default();
        room.heading_noise = 0.0;
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let a = room.behavior_policy([0.0, 0.0], 3, &mut rng);
        assert!((a - PI / 4.0).abs() < 1e-12);
    }

    #[test]
    fn behavior_reaches_each_goal_about_equally() {
        let room = DidacticRoom::default();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut counts = [0usize; 4];
        let episodes = 10_000;
        for _ in 0..episodes {
            let traj = room.rollout_behavior(&mut rng);
            assert!(traj.terminal, "episode must terminate within horizon");
            let (last_state, last_action, _) = traj.steps.last().unwrap();
            let (end, _, _) = room.step([last_state[0], last_state[1]], last_action[0]);
            let goal = room.reached_goal(end).expect("terminal inside a goal");
            counts[goal] += 1;
        }
        for &c in &counts {
            let frac = c as f64 / episodes as f64;
            assert!((frac - 0.25).abs() < 0.03, "goal fraction {frac}");
        }
    }

    #[test]
    fn mean_behavior_return_matches_uniform_goal_expectation() {
        let room = DidacticRoom::default();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut total = 0.0;
        let episodes = 10_000;
        for _ in 0..episodes {
            total += room.rollout_behavior(&mut rng).total_reward();
        }
        let mean = total / episodes as f64;
        assert!((mean - 0.0625).abs() < 0.02, "mean return {mean}");
    }
}
