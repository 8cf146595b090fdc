//! Explicit baselines: a categorical return head p(G|s) over an atom
//! grid with an exact discrete exponential tilt, and a
//! return-conditioned (or plain behavior-cloning) policy head.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataset::Dataset;
use crate::ebm::TrainConfig;
use crate::error::{Error, Result};
use crate::ndmath::{Activation, MlpGrads, MlpParams};

/// Evenly spaced return atoms over [-1, 1].
pub fn atom_grid(n_atoms: usize) -> Result<Vec<f64>> {
    if n_atoms < 2 {
        return Err(Error::argument("need at least 2 atoms"));
    }
    Ok((0..n_atoms)
        .map(|i| -1.0 + 2.0 * i as f64 / (n_atoms - 1) as f64)
        .collect())
}

/// State-conditional categorical distribution over return atoms.
#[derive(Debug, Clone)]
pub struct CategoricalReturnHead {
    pub atoms: Vec<f64>,
    pub net: MlpParams,
}

impl CategoricalReturnHead {
    pub fn new<R: Rng>(
        state_dim: usize,
        n_atoms: usize,
        hidden: &[usize],
        rng: &mut R,
    ) -> Result<Self> {
        let atoms = atom_grid(n_atoms)?;
        let mut dims = vec![state_dim];
        dims.extend_from_slice(hidden);
        dims.push(n_atoms);
        Ok(CategoricalReturnHead {
            atoms,
            net: MlpParams::new(&dims, Activation::Relu, false, rng)?,
        })
    }

    /// Softmax over the atom logits, max-subtracted.
    pub fn probs(&self, s: &[f64]) -> Result<Vec<f64>> {
        let logits = self.net.forward_vec(s)?;
        Ok(softmax(&logits))
    }

    /// Index of the atom nearest to g; exact midpoints round up.
    pub fn nearest_atom(&self, g: f64) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, &a) in self.atoms.iter().enumerate() {
            let d = (g - a).abs();
            if d <= best_d {
                best_d = d;
                best = i;
            }
        }
        best
    }
}

fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&l| (l - max).exp()).collect();
    let z: f64 = exps.iter().sum();
    exps.iter().map(|&e| e / z).collect()
}

/// Exact discrete exponential tilt: q_i = p_i exp(eta_inv G_i) / Z,
/// computed with max subtraction. This evaluates the tilt's
/// normalizing constant exactly, unlike the continuous model where it
/// is dropped.
pub fn tilt_distribution(p: &[f64], atoms: &[f64], eta_inv: f64) -> Result<Vec<f64>> {
    if p.len() != atoms.len() {
        return Err(Error::argument("probability/atom length mismatch"));
    }
    if eta_inv < 0.0 || !eta_inv.is_finite() {
        return Err(Error::argument("eta_inv must be finite and >= 0"));
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > 1e-6 {
        return Err(Error::argument(format!(
            "probabilities sum to {sum}, expected 1"
        )));
    }
    if p.iter().any(|&x| x < 0.0) {
        return Err(Error::argument("negative probability"));
    }
    let logw: Vec<f64> = p
        .iter()
        .zip(atoms)
        .map(|(&pi, &gi)| (pi / sum).ln() + eta_inv * gi)
        .collect();
    let max = logw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logw.iter().map(|&l| (l - max).exp()).collect();
    let z: f64 = exps.iter().sum();
    Ok(exps.iter().map(|&e| e / z).collect())
}

/// Atom maximizing p(G|s) exp(eta_inv G); ties go to the larger atom.
pub fn select_from_probs(p: &[f64], atoms: &[f64], eta_inv: f64) -> f64 {
    let mut best_atom = atoms[0];
    let mut best_score = f64::NEG_INFINITY;
    for (&pi, &gi) in p.iter().zip(atoms) {
        let score = pi.ln() + eta_inv * gi;
        // atoms ascend, so >= prefers the larger atom on ties
        if score >= best_score {
            best_score = score;
            best_atom = gi;
        }
    }
    best_atom
}

/// Target return via the tilted argmax over the learned head.
pub fn select_target_return(
    head: &CategoricalReturnHead,
    s: &[f64],
    eta_inv: f64,
) -> Result<f64> {
    let p = head.probs(s)?;
    Ok(select_from_probs(&p, &head.atoms, eta_inv))
}

/// Cross-entropy training of the return head against the one-hot of
/// each transition's nearest atom. Deterministic given cfg.seed.
pub fn train_return_head(
    mut head: CategoricalReturnHead,
    data: &Dataset,
    cfg: &TrainConfig,
) -> Result<CategoricalReturnHead> {
    if data.is_empty() {
        return Err(Error::argument("train_return_head: empty dataset"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    for step in 0..cfg.steps {
        let idx =
            crate::dataset::sample_batch_indices(data.len(), cfg.batch_size.min(data.len()), &mut rng);
        let mut grads = MlpGrads::zeros_like(&head.net);
        let inv_n = 1.0 / idx.len() as f64;
        for &i in &idx {
            let t = &data.transitions[i];
            let logits = head.net.forward_vec(&t.state)?;
            let mut d_out = softmax(&logits);
            d_out[head.nearest_atom(t.ret)] -= 1.0;
            for d in &mut d_out {
                *d *= inv_n;
            }
            let (g, _) = head.net.backward_from_output_grad(&t.state, &d_out)?;
            grads.add_scaled(1.0, &g);
        }
        head.net.sgd_step(&grads, cfg.lr_at(step));
    }
    Ok(head)
}

/// Deterministic-mean policy. In conditioned mode the input is
/// (state, G); in BC mode the return input is ignored.
#[derive(Debug, Clone)]
pub struct PolicyHead {
    pub net: MlpParams,
    pub conditioned: bool,
}

impl PolicyHead {
    pub fn new<R: Rng>(
        state_dim: usize,
        action_dim: usize,
        hidden: &[usize],
        conditioned: bool,
        rng: &mut R,
    ) -> Result<Self> {
        let input = if conditioned { state_dim + 1 } else { state_dim };
        let mut dims = vec![input];
        dims.extend_from_slice(hidden);
        dims.push(action_dim);
        Ok(PolicyHead {
            net: MlpParams::new(&dims, Activation::Relu, false, rng)?,
            conditioned,
        })
    }

    fn input(&self, s: &[f64], g: f64) -> Vec<f64> {
        let mut x = s.to_vec();
        if self.conditioned {
            x.push(g);
        }
        x
    }

    pub fn mean_action(&self, s: &[f64], g: f64) -> Result<Vec<f64>> {
        self.net.forward_vec(&self.input(s, g))
    }
}

/// Mean-squared-error regression of the policy mean onto dataset
/// actions. Deterministic given cfg.seed.
pub fn train_policy_head(
    mut head: PolicyHead,
    data: &Dataset,
    cfg: &TrainConfig,
) -> Result<PolicyHead> {
    if data.is_empty() {
        return Err(Error::argument("train_policy_head: empty dataset"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    for step in 0..cfg.steps {
        let idx =
            crate::dataset::sample_batch_indices(data.len(), cfg.batch_size.min(data.len()), &mut rng);
        let mut grads = MlpGrads::zeros_like(&head.net);
        let inv_n = 1.0 / idx.len() as f64;
        for &i in &idx {
            let t = &data.transitions[i];
            let input = head.input(&t.state, t.ret);
            let pred = head.net.forward_vec(&input)?;
            let d_out: Vec<f64> = pred
                .iter()
                .zip(&t.action)
                .map(|(p, a)| 2.0 * inv_n * (p - a))
                .collect();
            let (g, _) = head.net.backward_from_output_grad(&input, &d_out)?;
            grads.add_scaled(1.0, &g);
        }
        head.net.sgd_step(&grads, cfg.lr_at(step));
    }
    Ok(head)
}

/// Full explicit pipeline: pick the tilted target return, then the
/// policy mean at (s, G-hat). BC-mode policies ignore the return head.
pub fn act(
    return_head: &CategoricalReturnHead,
    policy_head: &PolicyHead,
    s: &[f64],
    eta_inv: f64,
) -> Result<Vec<f64>> {
    let g_hat = select_target_return(return_head, s, eta_inv)?;
    policy_head.mean_action(s, g_hat)
}
