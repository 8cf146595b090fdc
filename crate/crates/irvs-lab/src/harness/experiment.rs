use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::{Algorithm, EnvKind, ExperimentConfig};
use crate::dataset::{self, Dataset, Normalizer};
use crate::ebm::{self, EnergyModel, TrainConfig};
use crate::envs::{nav_sample_task, nav_success, DidacticRoom};
use crate::error::{Error, Result};
use crate::langevin::{infer, LangevinSchedule, TiltConfig};
use crate::ndmath::save_mlp;
use crate::rvs_explicit::{
    act, train_policy_head, train_return_head, CategoricalReturnHead, PolicyHead,
};

/// One metrics CSV row. Column order is fixed:
/// algorithm,eta_inv,D,epsilon,delta,seed,metric_name,metric_value,wall_time_s
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub algorithm: String,
    pub eta_inv: f64,
    pub d: usize,
    pub epsilon: f64,
    pub delta: Option<f64>,
    pub seed: u64,
    pub metric_name: String,
    pub metric_value: f64,
    pub wall_time_s: f64,
}

pub const METRICS_HEADER: &str =
    "algorithm,eta_inv,D,epsilon,delta,seed,metric_name,metric_value,wall_time_s";

impl MetricsRow {
    pub fn to_csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.algorithm,
            self.eta_inv,
            self.d,
            self.epsilon,
            self.delta.map_or(String::new(), |d| d.to_string()),
            self.seed,
            self.metric_name,
            self.metric_value,
            self.wall_time_s
        )
    }
}

/// Append rows to a metrics CSV, writing the header when the file is
/// new. A single writer owns the file handle.
pub fn append_metrics(path: &Path, rows: &[MetricsRow]) -> Result<()> {
    let fresh = !path.exists();
    let mut text = String::new();
    if fresh {
        text.push_str(METRICS_HEADER);
        text.push('\n');
    }
    for r in rows {
        text.push_str(&r.to_csv_line());
        text.push('\n');
    }
    use std::io::Write;
    let mut f = std::fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| Error::io("metrics open", e))?;
    f.write_all(text.as_bytes())
        .map_err(|e| Error::io("metrics append", e))
}

pub fn read_metrics(path: &Path) -> Result<Vec<MetricsRow>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io("metrics read", e))?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h == METRICS_HEADER => {}
        Some((_, h)) => {
            return Err(Error::format(
                1,
                format!("bad metrics header '{h}', expected '{METRICS_HEADER}'"),
            ))
        }
        None => return Err(Error::format(1, "empty metrics file")),
    }
    let mut rows = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let lineno = i + 1;
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 9 {
            return Err(Error::format(lineno, "expected 9 columns"));
        }
        let fl = |s: &str| -> Result<f64> {
            s.parse()
                .map_err(|_| Error::format(lineno, format!("bad float '{s}'")))
        };
        rows.push(MetricsRow {
            algorithm: parts[0].to_string(),
            eta_inv: fl(parts[1])?,
            d: parts[2]
                .parse()
                .map_err(|_| Error::format(lineno, "bad D"))?,
            epsilon: fl(parts[3])?,
            delta: if parts[4].is_empty() {
                None
            } else {
                Some(fl(parts[4])?)
            },
            seed: parts[5]
                .parse()
                .map_err(|_| Error::format(lineno, "bad seed"))?,
            metric_name: parts[6].to_string(),
            metric_value: fl(parts[7])?,
            wall_time_s: fl(parts[8])?,
        });
    }
    Ok(rows)
}

/// Trained artifacts per algorithm family.
#[derive(Debug, Clone)]
pub enum Trained {
    Implicit(EnergyModel),
    Explicit {
        return_head: CategoricalReturnHead,
        policy: PolicyHead,
    },
    Cloning(PolicyHead),
}

fn hidden_dims(cfg: &ExperimentConfig) -> Vec<usize> {
    vec![cfg.hidden_width; cfg.hidden_depth]
}

fn train_config(cfg: &ExperimentConfig, seed: u64) -> TrainConfig {
    TrainConfig {
        batch_size: cfg.batch_size,
        n_neg: cfg.n_neg,
        lr: cfg.lr,
        lr_decay: cfg.lr_decay,
        lr_decay_steps: cfg.lr_decay_steps,
        steps: cfg.steps,
        grad_margin: cfg.grad_margin,
        boundary_buffer: cfg.boundary_buffer,
        seed,
    }
}

/// Train the configured algorithm on a normalized dataset.
pub fn train_algorithm(cfg: &ExperimentConfig, data: &Dataset, seed: u64) -> Result<Trained> {
    let hidden = hidden_dims(cfg);
    let tc = train_config(cfg, derive_seed(seed, 0x7261696e));
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 0x696e6974));
    match cfg.algorithm {
        Algorithm::Irvs | Algorithm::Ibc => {
            let model = EnergyModel::new(
                data.state_dim(),
                data.action_dim(),
                &hidden,
                cfg.spectral_norm,
                &mut rng,
            )?;
            let sched = LangevinSchedule::default().with_iterations(cfg.train_langevin_iters);
            let (model, _) = ebm::train(model, data, &tc, &sched)?;
            Ok(Trained::Implicit(model))
        }
        Algorithm::Rvs => {
            let ret = CategoricalReturnHead::new(data.state_dim(), cfg.n_atoms, &hidden, &mut rng)?;
            let ret = train_return_head(ret, data, &tc)?;
            let pol = PolicyHead::new(data.state_dim(), data.action_dim(), &hidden, true, &mut rng)?;
            let mut tc2 = tc;
            tc2.seed = derive_seed(seed, 0x706f6c69);
            let pol = train_policy_head(pol, data, &tc2)?;
            Ok(Trained::Explicit {
                return_head: ret,
                policy: pol,
            })
        }
        Algorithm::Bc => {
            let pol =
                PolicyHead::new(data.state_dim(), data.action_dim(), &hidden, false, &mut rng)?;
            let pol = train_policy_head(pol, data, &tc)?;
            Ok(Trained::Cloning(pol))
        }
    }
}

/// State-to-action policy over raw (unnormalized) coordinates.
pub struct EvalPolicy<'a> {
    pub trained: &'a Trained,
    pub normalizer: &'a Normalizer,
    pub eta_inv: f64,
    pub sched: LangevinSchedule,
    pub n_chains: usize,
}

impl EvalPolicy<'_> {
    pub fn act_raw(&self, state_raw: &[f64], rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
        let s = self.normalizer.forward_state(state_raw);
        let a_norm = match self.trained {
            Trained::Implicit(model) => {
                let tilt = TiltConfig::new(self.eta_inv)?;
                let (a, _) = infer(model, &s, tilt, &self.sched, self.n_chains, rng)?;
                a
            }
            Trained::Explicit { return_head, policy } => {
                act(return_head, policy, &s, self.eta_inv)?
            }
            Trained::Cloning(policy) => policy.mean_action(&s, 0.0)?,
        };
        Ok(self.normalizer.inverse_action(&a_norm))
    }
}

/// Evaluation environment description.
#[derive(Debug, Clone)]
pub enum EnvSpec {
    Didactic(DidacticRoom),
    Nav {
        dim: usize,
        epsilon: f64,
        delta: Option<f64>,
    },
}

#[derive(Debug, Clone)]
pub struct EpisodeRecord {
    pub index: usize,
    pub value: f64,
    pub reached_goal: Option<usize>,
}

/// splitmix64-style seed derivation; value-identity based so sweep
/// cells are independent of run order.
pub fn derive_seed(base: u64, salt: u64) -> u64 {
    let mut z = base ^ salt.wrapping_mul(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Evaluate a policy: mean episode return on the didactic room, task
/// success rate on navigation. Deterministic given the seed; the
/// policy and its checkpoints are read-only here.
pub fn rollout_eval(
    policy: &EvalPolicy<'_>,
    env: &EnvSpec,
    episodes: usize,
    seed: u64,
) -> Result<(f64, Vec<EpisodeRecord>)> {
    if episodes == 0 {
        return Err(Error::argument("episodes must be >= 1"));
    }
    let mut records = Vec::with_capacity(episodes);
    match env {
        EnvSpec::Didactic(room) => {
            for i in 0..episodes {
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, i as u64));
                let mut pos = [
                    rng.gen_range(-room.start_half..room.start_half),
                    rng.gen_range(-room.start_half..room.start_half),
                ];
                let mut total = 0.0;
                let mut reached = None;
                for _ in 0..room.horizon {
                    let a = policy.act_raw(&pos, &mut rng)?;
                    let (next, reward, done) = room.step(pos, a[0]);
                    total += reward;
                    pos = next;
                    if done {
                        reached = room.reached_goal(pos);
                        break;
                    }
                }
                records.push(EpisodeRecord {
                    index: i,
                    value: total,
                    reached_goal: reached,
                });
            }
        }
        EnvSpec::Nav {
            dim,
            epsilon,
            delta,
        } => {
            for i in 0..episodes {
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, i as u64));
                let task = nav_sample_task(*dim, *epsilon, *delta, &mut rng);
                let a = policy.act_raw(&task.state(), &mut rng)?;
                let landing: Vec<f64> = task.agent.iter().zip(&a).map(|(s, d)| s + d).collect();
                let ok = nav_success(&task, &landing);
                records.push(EpisodeRecord {
                    index: i,
                    value: if ok { 1.0 } else { 0.0 },
                    reached_goal: None,
                });
            }
        }
    }
    let mean = records.iter().map(|r| r.value).sum::<f64>() / records.len() as f64;
    Ok((mean, records))
}

/// Effective tilt used at inference: BC has none, IBC pins 0.
pub fn effective_eta(cfg: &ExperimentConfig) -> f64 {
    match cfg.algorithm {
        Algorithm::Ibc | Algorithm::Bc => 0.0,
        _ => cfg.eta_inv,
    }
}

pub fn make_dataset(cfg: &ExperimentConfig, seed: u64) -> Result<Dataset> {
    match cfg.env {
        EnvKind::Didactic => {
            dataset::generate_didactic(&DidacticRoom::default(), cfg.dataset_size, seed)
        }
        EnvKind::Nav => dataset::generate_nav(cfg.dim, cfg.dataset_size, cfg.epsilon, cfg.delta, seed),
    }
}

pub fn eval_env(cfg: &ExperimentConfig) -> EnvSpec {
    match cfg.env {
        EnvKind::Didactic => EnvSpec::Didactic(DidacticRoom::default()),
        EnvKind::Nav => EnvSpec::Nav {
            dim: cfg.dim,
            epsilon: cfg.test_epsilon,
            delta: cfg.delta,
        },
    }
}

pub fn save_trained(trained: &Trained, dir: &Path, seed: u64) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io("checkpoint dir", e))?;
    match trained {
        Trained::Implicit(m) => {
            save_mlp(&m.net, "energy", &dir.join(format!("energy_seed{seed}.ckpt")))?
        }
        Trained::Explicit { return_head, policy } => {
            save_mlp(
                &return_head.net,
                "return_head",
                &dir.join(format!("return_head_seed{seed}.ckpt")),
            )?;
            save_mlp(
                &policy.net,
                "policy_head",
                &dir.join(format!("policy_head_seed{seed}.ckpt")),
            )?;
        }
        Trained::Cloning(policy) => save_mlp(
            &policy.net,
            "bc",
            &dir.join(format!("bc_seed{seed}.ckpt")),
        )?,
    }
    Ok(())
}

/// Rebuild trained artifacts from checkpoints written by
/// [`save_trained`]. Dataset dimensions disambiguate the policy head's
/// return conditioning.
pub fn load_trained(cfg: &ExperimentConfig, data: &Dataset, seed: u64) -> Result<Trained> {
    let dir = cfg.resolved_out_dir();
    let expect_role = |got: &str, want: &str| -> Result<()> {
        if got == want {
            Ok(())
        } else {
            Err(Error::format(2, format!("checkpoint role '{got}', expected '{want}'")))
        }
    };
    match cfg.algorithm {
        Algorithm::Irvs | Algorithm::Ibc => {
            let (net, role) = crate::ndmath::load_mlp(&dir.join(format!("energy_seed{seed}.ckpt")))?;
            expect_role(&role, "energy")?;
            let action_dim = net
                .input_dim()
                .checked_sub(data.state_dim() + 1)
                .ok_or_else(|| Error::shape("energy checkpoint narrower than state_dim + 1"))?;
            if action_dim != data.action_dim() {
                return Err(Error::shape(format!(
                    "energy checkpoint action_dim {action_dim} != dataset {}",
                    data.action_dim()
                )));
            }
            Ok(Trained::Implicit(EnergyModel {
                net,
                action_bounds: vec![(-1.0, 1.0); action_dim],
                return_bounds: (-1.0, 1.0),
            }))
        }
        Algorithm::Rvs => {
            let (rnet, role) =
                crate::ndmath::load_mlp(&dir.join(format!("return_head_seed{seed}.ckpt")))?;
            expect_role(&role, "return_head")?;
            let atoms = crate::rvs_explicit::atom_grid(rnet.output_dim())?;
            let (pnet, role) =
                crate::ndmath::load_mlp(&dir.join(format!("policy_head_seed{seed}.ckpt")))?;
            expect_role(&role, "policy_head")?;
            let conditioned = pnet.input_dim() == data.state_dim() + 1;
            Ok(Trained::Explicit {
                return_head: CategoricalReturnHead { atoms, net: rnet },
                policy: PolicyHead {
                    net: pnet,
                    conditioned,
                },
            })
        }
        Algorithm::Bc => {
            let (net, role) = crate::ndmath::load_mlp(&dir.join(format!("bc_seed{seed}.ckpt")))?;
            expect_role(&role, "bc")?;
            Ok(Trained::Cloning(PolicyHead {
                net,
                conditioned: false,
            }))
        }
    }
}

/// Evaluate a trained artifact under a (possibly overridden) tilt and
/// produce metrics rows. Factored out so sweeps over eta_inv or
/// test_epsilon can reuse one training run.
pub fn evaluate_trained(
    cfg: &ExperimentConfig,
    trained: &Trained,
    data: &Dataset,
    seed: u64,
    wall_time_s: f64,
) -> Result<Vec<MetricsRow>> {
    let eta = effective_eta(cfg);
    let policy = EvalPolicy {
        trained,
        normalizer: &data.normalizer,
        eta_inv: eta,
        sched: LangevinSchedule::default().with_iterations(cfg.eval_langevin_iters),
        n_chains: cfg.eval_chains,
    };
    let env = eval_env(cfg);
    let eval_seed = derive_seed(
        derive_seed(seed, eta.to_bits()),
        cfg.test_epsilon.to_bits(),
    );
    let (mean, records) = rollout_eval(&policy, &env, cfg.eval_episodes, eval_seed)?;
    let base = MetricsRow {
        algorithm: cfg.algorithm.to_string(),
        eta_inv: eta,
        d: cfg.dim,
        epsilon: cfg.test_epsilon,
        delta: cfg.delta,
        seed,
        metric_name: String::new(),
        metric_value: 0.0,
        wall_time_s,
    };
    let mut rows = Vec::new();
    match cfg.env {
        EnvKind::Didactic => {
            rows.push(MetricsRow {
                metric_name: "mean_return".into(),
                metric_value: mean,
                ..base.clone()
            });
            let n = records.len() as f64;
            for goal in 0..4 {
                let frac = records
                    .iter()
                    .filter(|r| r.reached_goal == Some(goal))
                    .count() as f64
                    / n;
                rows.push(MetricsRow {
                    metric_name: format!("goal{goal}_frac"),
                    metric_value: frac,
                    ..base.clone()
                });
            }
        }
        EnvKind::Nav => rows.push(MetricsRow {
            metric_name: "success_rate".into(),
            metric_value: mean,
            ..base
        }),
    }
    Ok(rows)
}

/// Full pipeline for one configuration: per seed, generate the
/// dataset, train, evaluate, persist checkpoints, and append rows to
/// out_dir/metrics.csv.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<MetricsRow>> {
    cfg.validate()?;
    let out = cfg.resolved_out_dir();
    std::fs::create_dir_all(&out).map_err(|e| Error::io("output dir", e))?;
    let mut all_rows = Vec::new();
    for &seed in &cfg.seeds {
        let t0 = Instant::now();
        let data = make_dataset(cfg, seed)?;
        dataset::save(&data, &out.join(format!("dataset_seed{seed}.txt")))?;
        let trained = train_algorithm(cfg, &data, seed)?;
        save_trained(&trained, &out, seed)?;
        let wall = if cfg.record_wall_time {
            t0.elapsed().as_secs_f64()
        } else {
            0.0
        };
        let rows = evaluate_trained(cfg, &trained, &data, seed, wall)?;
        all_rows.extend(rows);
    }
    append_metrics(&out.join("metrics.csv"), &all_rows)?;
    Ok(all_rows)
}

pub fn metrics_path(cfg: &ExperimentConfig) -> PathBuf {
    cfg.resolved_out_dir().join("metrics.csv")
}
