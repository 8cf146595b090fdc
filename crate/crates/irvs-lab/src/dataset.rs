//! Offline dataset construction: rollout collection, return-to-go
//! computation, normalization, and a diff-able text file format.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::envs::{nav_optimal_action, nav_sample_task, DidacticRoom, Trajectory};
use crate::error::{Error, Result};
use crate::ndmath::format_f64;

const STD_FLOOR: f64 = 1e-6;

/// One (state, action, return-to-go) tuple.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub state: Vec<f64>,
    pub action: Vec<f64>,
    pub ret: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReturnMode {
    Sum,
    Average,
}

impl fmt::Display for ReturnMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ReturnMode::Sum => write!(f, "sum"),
            ReturnMode::Average => write!(f, "average"),
        }
    }
}

impl FromStr for ReturnMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sum" => Ok(ReturnMode::Sum),
            "average" => Ok(ReturnMode::Average),
            other => Err(Error::argument(format!("unknown return mode '{other}'"))),
        }
    }
}

/// Per-step return-to-go values for one trajectory.
pub fn compute_returns(trajectory: &Trajectory, mode: ReturnMode) -> Result<Vec<f64>> {
    if trajectory.steps.is_empty() {
        return Err(Error::argument("empty trajectory"));
    }
    let n = trajectory.steps.len();
    let mut out = vec![0.0; n];
    let mut acc = 0.0;
    // backward recursion G_i = r_i + G_{i+1}
    for i in (0..n).rev() {
        acc += trajectory.steps[i].2;
        out[i] = acc;
    }
    if mode == ReturnMode::Average {
        for (i, g) in out.iter_mut().enumerate() {
            *g /= (n - i) as f64;
        }
    }
    Ok(out)
}

/// State standardization plus min-max scaling of actions and returns
/// into [-1, 1]. Constant coordinates map to 0 in both directions.
#[derive(Debug, Clone, PartialEq)]
pub struct Normalizer {
    pub state_mean: Vec<f64>,
    pub state_std: Vec<f64>,
    pub action_min: Vec<f64>,
    pub action_max: Vec<f64>,
    pub return_min: f64,
    pub return_max: f64,
}

pub enum Direction {
    Forward,
    Inverse,
}

pub fn fit_normalizer(raw: &[Transition]) -> Result<Normalizer> {
    if raw.is_empty() {
        return Err(Error::argument("cannot fit a normalizer on empty data"));
    }
    let sd = raw[0].state.len();
    let ad = raw[0].action.len();
    let n = raw.len() as f64;
    let mut mean = vec![0.0; sd];
    for t in raw {
        for (m, &x) in mean.iter_mut().zip(&t.state) {
            *m += x;
        }
    }
    for m in &mut mean {
        *m /= n;
    }
    let mut var = vec![0.0; sd];
    for t in raw {
        for (v, (&x, &m)) in var.iter_mut().zip(t.state.iter().zip(&mean)) {
            *v += (x - m) * (x - m);
        }
    }
    let std: Vec<f64> = var.iter().map(|v| (v / n).sqrt().max(STD_FLOOR)).collect();
    let mut amin = vec![f64::INFINITY; ad];
    let mut amax = vec![f64::NEG_INFINITY; ad];
    let mut rmin = f64::INFINITY;
    let mut rmax = f64::NEG_INFINITY;
    for t in raw {
        for ((lo, hi), &a) in amin.iter_mut().zip(&mut amax).zip(&t.action) {
            *lo = lo.min(a);
            *hi = hi.max(a);
        }
        rmin = rmin.min(t.ret);
        rmax = rmax.max(t.ret);
    }
    Ok(Normalizer {
        state_mean: mean,
        state_std: std,
        action_min: amin,
        action_max: amax,
        return_min: rmin,
        return_max: rmax,
    })
}

/// Ranges below this are treated as degenerate so float residue in an
/// otherwise-constant column does not get stretched across [-1, 1].
const MINMAX_FLOOR: f64 = 1e-9;

fn minmax_fwd(x: f64, lo: f64, hi: f64) -> f64 {
    if hi - lo > MINMAX_FLOOR {
        2.0 * (x - lo) / (hi - lo) - 1.0
    } else {
        0.0
    }
}

fn minmax_inv(x: f64, lo: f64, hi: f64) -> f64 {
    if hi - lo > MINMAX_FLOOR {
        (x + 1.0) / 2.0 * (hi - lo) + lo
    } else {
        lo
    }
}

impl Normalizer {
    pub fn state_dim(&self) -> usize {
        self.state_mean.len()
    }

    pub fn action_dim(&self) -> usize {
        self.action_min.len()
    }

    pub fn forward_state(&self, s: &[f64]) -> Vec<f64> {
        s.iter()
            .zip(self.state_mean.iter().zip(&self.state_std))
            .map(|(&x, (&m, &sd))| (x - m) / sd)
            .collect()
    }

    pub fn inverse_state(&self, s: &[f64]) -> Vec<f64> {
        s.iter()
            .zip(self.state_mean.iter().zip(&self.state_std))
            .map(|(&x, (&m, &sd))| x * sd + m)
            .collect()
    }

    pub fn forward_action(&self, a: &[f64]) -> Vec<f64> {
        a.iter()
            .zip(self.action_min.iter().zip(&self.action_max))
            .map(|(&x, (&lo, &hi))| minmax_fwd(x, lo, hi))
            .collect()
    }

    pub fn inverse_action(&self, a: &[f64]) -> Vec<f64> {
        a.iter()
            .zip(self.action_min.iter().zip(&self.action_max))
            .map(|(&x, (&lo, &hi))| minmax_inv(x, lo, hi))
            .collect()
    }

    pub fn forward_return(&self, g: f64) -> f64 {
        minmax_fwd(g, self.return_min, self.return_max)
    }

    pub fn inverse_return(&self, g: f64) -> f64 {
        minmax_inv(g, self.return_min, self.return_max)
    }
}

pub fn apply(normalizer: &Normalizer, t: &Transition, direction: Direction) -> Result<Transition> {
    if t.state.len() != normalizer.state_dim() || t.action.len() != normalizer.action_dim() {
        return Err(Error::shape(format!(
            "transition dims ({}, {}) do not match normalizer ({}, {})",
            t.state.len(),
            t.action.len(),
            normalizer.state_dim(),
            normalizer.action_dim()
        )));
    }
    Ok(match direction {
        Direction::Forward => Transition {
            state: normalizer.forward_state(&t.state),
            action: normalizer.forward_action(&t.action),
            ret: normalizer.forward_return(t.ret),
        },
        Direction::Inverse => Transition {
            state: normalizer.inverse_state(&t.state),
            action: normalizer.inverse_action(&t.action),
            ret: normalizer.inverse_return(t.ret),
        },
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetMeta {
    pub env: String,
    pub return_mode: ReturnMode,
    pub seed: u64,
    pub episodes: usize,
}

/// Normalized offline dataset plus the statistics that produced it.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub transitions: Vec<Transition>,
    pub normalizer: Normalizer,
    pub meta: DatasetMeta,
}

impl Dataset {
    pub fn state_dim(&self) -> usize {
        self.normalizer.state_dim()
    }

    pub fn action_dim(&self) -> usize {
        self.normalizer.action_dim()
    }

    pub fn len(&self) -> usize {
        self.transitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transitions.is_empty()
    }

    /// Build a normalized dataset from raw transitions.
    pub fn from_raw(raw: Vec<Transition>, meta: DatasetMeta) -> Result<Dataset> {
        let normalizer = fit_normalizer(&raw)?;
        let transitions = raw
            .iter()
            .map(|t| apply(&normalizer, t, Direction::Forward))
            .collect::<Result<_>>()?;
        Ok(Dataset {
            transitions,
            normalizer,
            meta,
        })
    }
}

/// Behavior-policy rollouts in the didactic room with sum-mode
/// returns-to-go.
pub fn generate_didactic(room: &DidacticRoom, episodes: usize, seed: u64) -> Result<Dataset> {
    if episodes == 0 {
        return Err(Error::argument("episodes must be >= 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut raw = Vec::new();
    for _ in 0..episodes {
        let traj = room.rollout_behavior(&mut rng);
        let returns = compute_returns(&traj, ReturnMode::Sum)?;
        for ((s, a, _), g) in traj.steps.iter().zip(returns) {
            raw.push(Transition {
                state: s.clone(),
                action: a.clone(),
                ret: g,
            });
        }
    }
    Dataset::from_raw(
        raw,
        DatasetMeta {
            env: "didactic".into(),
            return_mode: ReturnMode::Sum,
            seed,
            episodes,
        },
    )
}

/// Optimal single-step navigation demonstrations. The return label is
/// the negated distance between the landing point and the correct
/// goal, min-max scaled by the normalizer; with exact demonstrations
/// it is constant and normalizes to 0.
pub fn generate_nav(
    dim: usize,
    demos: usize,
    epsilon: f64,
    delta: Option<f64>,
    seed: u64,
) -> Result<Dataset> {
    if demos == 0 {
        return Err(Error::argument("demos must be >= 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut raw = Vec::with_capacity(demos);
    for _ in 0..demos {
        let task = nav_sample_task(dim, epsilon, delta, &mut rng);
        let action = nav_optimal_action(&task);
        let landing: Vec<f64> = task.agent.iter().zip(&action).map(|(s, a)| s + a).collect();
        let g = -landing
            .iter()
            .zip(task.target())
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt();
        raw.push(Transition {
            state: task.state(),
            action,
            ret: g,
        });
    }
    Dataset::from_raw(
        raw,
        DatasetMeta {
            env: format!("nav{dim}"),
            return_mode: ReturnMode::Sum,
            seed,
            episodes: demos,
        },
    )
}

fn join(values: &[f64]) -> String {
    values
        .iter()
        .map(|&v| format_f64(v))
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn save(dataset: &Dataset, path: &Path) -> Result<()> {
    let mut out = String::new();
    out.push_str("# irvs-lab dataset v1\n");
    out.push_str(&format!("# env {}\n", dataset.meta.env));
    out.push_str(&format!("# return_mode {}\n", dataset.meta.return_mode));
    out.push_str(&format!("# seed {}\n", dataset.meta.seed));
    out.push_str(&format!("# episodes {}\n", dataset.meta.episodes));
    out.push_str(&format!(
        "# dims state {} action {}\n",
        dataset.state_dim(),
        dataset.action_dim()
    ));
    let n = &dataset.normalizer;
    out.push_str(&format!("# state_mean {}\n", join(&n.state_mean)));
    out.push_str(&format!("# state_std {}\n", join(&n.state_std)));
    out.push_str(&format!("# action_min {}\n", join(&n.action_min)));
    out.push_str(&format!("# action_max {}\n", join(&n.action_max)));
    out.push_str(&format!(
        "# return_range {} {}\n",
        format_f64(n.return_min),
        format_f64(n.return_max)
    ));
    for t in &dataset.transitions {
        out.push_str(&join(&t.state));
        out.push_str(" | ");
        out.push_str(&join(&t.action));
        out.push_str(" | ");
        out.push_str(&format_f64(t.ret));
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| Error::io("dataset write", e))
}

pub fn load(path: &Path) -> Result<Dataset> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io("dataset read", e))?;
    parse(&text)
}

fn header_field<'a>(line: &'a str, key: &str, lineno: usize) -> Result<&'a str> {
    line.strip_prefix(&format!("# {key} "))
        .map(str::trim)
        .ok_or_else(|| Error::format(lineno, format!("expected '# {key} ...'")))
}

fn parse_float_list(s: &str, lineno: usize) -> Result<Vec<f64>> {
    s.split_whitespace()
        .map(|t| {
            t.parse::<f64>()
                .map_err(|_| Error::format(lineno, format!("bad float '{t}'")))
        })
        .collect()
}

pub fn parse(text: &str) -> Result<Dataset> {
    let mut lines = text.lines().enumerate();
    let mut header = Vec::new();
    let mut body_start = 0;
    // first line is the magic comment
    match lines.next() {
        Some((_, l)) if l.starts_with("# irvs-lab dataset") => {}
        _ => return Err(Error::format(1, "missing dataset magic header")),
    }
    for (i, line) in &mut lines {
        if line.starts_with('#') {
            header.push((i + 1, line));
        } else {
            body_start = i;
            break;
        }
    }
    if header.len() != 10 {
        return Err(Error::format(
            header.len() + 1,
            format!("expected 10 header lines, got {}", header.len()),
        ));
    }
    let env = header_field(header[0].1, "env", header[0].0)?.to_string();
    let return_mode: ReturnMode = header_field(header[1].1, "return_mode", header[1].0)?.parse()?;
    let seed: u64 = header_field(header[2].1, "seed", header[2].0)?
        .parse()
        .map_err(|_| Error::format(header[2].0, "bad seed"))?;
    let episodes: usize = header_field(header[3].1, "episodes", header[3].0)?
        .parse()
        .map_err(|_| Error::format(header[3].0, "bad episode count"))?;
    let dims_line = header_field(header[4].1, "dims", header[4].0)?;
    let dims: Vec<&str> = dims_line.split_whitespace().collect();
    if dims.len() != 4 || dims[0] != "state" || dims[2] != "action" {
        return Err(Error::format(header[4].0, "bad dims line"));
    }
    let state_dim: usize = dims[1]
        .parse()
        .map_err(|_| Error::format(header[4].0, "bad state dim"))?;
    let action_dim: usize = dims[3]
        .parse()
        .map_err(|_| Error::format(header[4].0, "bad action dim"))?;
    let state_mean = parse_float_list(header_field(header[5].1, "state_mean", header[5].0)?, header[5].0)?;
    let state_std = parse_float_list(header_field(header[6].1, "state_std", header[6].0)?, header[6].0)?;
    let action_min = parse_float_list(header_field(header[7].1, "action_min", header[7].0)?, header[7].0)?;
    let action_max = parse_float_list(header_field(header[8].1, "action_max", header[8].0)?, header[8].0)?;
    let rr = parse_float_list(header_field(header[9].1, "return_range", header[9].0)?, header[9].0)?;
    if state_mean.len() != state_dim
        || state_std.len() != state_dim
        || action_min.len() != action_dim
        || action_max.len() != action_dim
        || rr.len() != 2
    {
        return Err(Error::format(header[9].0, "normalizer dims inconsistent"));
    }
    let normalizer = Normalizer {
        state_mean,
        state_std,
        action_min,
        action_max,
        return_min: rr[0],
        return_max: rr[1],
    };

    let mut transitions = Vec::new();
    let body_lines = text
        .lines()
        .enumerate()
        .skip(body_start)
        .filter(|(_, l)| !l.starts_with('#') && !l.trim().is_empty());
    for (i, line) in body_lines {
        let lineno = i + 1;
        let parts: Vec<&str> = line.split('|').collect();
        if parts.len() != 3 {
            return Err(Error::format(lineno, "expected 's | a | G' fields"));
        }
        let state = parse_float_list(parts[0], lineno)?;
        let action = parse_float_list(parts[1], lineno)?;
        let ret = parse_float_list(parts[2], lineno)?;
        if state.len() != state_dim || action.len() != action_dim || ret.len() != 1 {
            return Err(Error::format(lineno, "row length mismatch"));
        }
        transitions.push(Transition {
            state,
            action,
            ret: ret[0],
        });
    }
    if transitions.is_empty() {
        return Err(Error::format(body_start + 1, "dataset has no transitions"));
    }
    Ok(Dataset {
        transitions,
        normalizer,
        meta: DatasetMeta {
            env,
            return_mode,
            seed,
            episodes,
        },
    })
}

/// Deterministic batch sampler over transition indices.
pub fn sample_batch_indices<R: Rng>(len: usize, batch: usize, rng: &mut R) -> Vec<usize> {
    (0..batch).map(|_| rng.gen_range(0..len)).collect()
}
