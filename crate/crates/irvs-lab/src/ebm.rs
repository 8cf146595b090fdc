//! Energy-based joint model over (action, return) conditioned on
//! state, trained with InfoNCE against SGLD-mined counter-examples
//! plus a final-step gradient penalty.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::langevin::{sgld_chain, LangevinSchedule, SampleBounds, TiltedEnergy};
use crate::ndmath::{norm2, Activation, MlpGrads, MlpParams};

/// E(s, a, G) with the box the sampler is allowed to roam in.
#[derive(Debug, Clone)]
pub struct EnergyModel {
    pub net: MlpParams,
    pub action_bounds: Vec<(f64, f64)>,
    pub return_bounds: (f64, f64),
}

impl EnergyModel {
    /// Network over normalized inputs: actions and returns in [-1, 1].
    pub fn new<R: Rng>(
        state_dim: usize,
        action_dim: usize,
        hidden: &[usize],
        spectral_norm: bool,
        rng: &mut R,
    ) -> Result<Self> {
        let mut dims = vec![state_dim + action_dim + 1];
        dims.extend_from_slice(hidden);
        dims.push(1);
        let net = MlpParams::new(&dims, Activation::Relu, spectral_norm, rng)?;
        Ok(EnergyModel {
            net,
            action_bounds: vec![(-1.0, 1.0); action_dim],
            return_bounds: (-1.0, 1.0),
        })
    }

    pub fn state_dim(&self) -> usize {
        self.net.input_dim() - self.action_dim() - 1
    }

    pub fn action_dim(&self) -> usize {
        self.action_bounds.len()
    }

    fn check_dims(&self, s: &[f64], a: &[f64]) -> Result<()> {
        if s.len() != self.state_dim() || a.len() != self.action_dim() {
            return Err(Error::shape(format!(
                "energy input dims ({}, {}) do not match model ({}, {})",
                s.len(),
                a.len(),
                self.state_dim(),
                self.action_dim()
            )));
        }
        Ok(())
    }

    fn concat(&self, s: &[f64], a: &[f64], g: f64) -> Vec<f64> {
        let mut x = Vec::with_capacity(s.len() + a.len() + 1);
        x.extend_from_slice(s);
        x.extend_from_slice(a);
        x.push(g);
        x
    }

    pub fn energy(&self, s: &[f64], a: &[f64], g: f64) -> Result<f64> {
        self.check_dims(s, a)?;
        self.net.forward(&self.concat(s, a, g))
    }

    /// Energy plus its gradient with respect to (a, G) only.
    pub fn energy_with_input_grad(
        &self,
        s: &[f64],
        a: &[f64],
        g: f64,
    ) -> Result<(f64, Vec<f64>, f64)> {
        self.check_dims(s, a)?;
        let (value, grad) = self.net.value_and_input_grad(&self.concat(s, a, g))?;
        let sd = s.len();
        let ad = a.len();
        Ok((value, grad[sd..sd + ad].to_vec(), grad[sd + ad]))
    }

    pub fn sample_bounds(&self) -> SampleBounds {
        SampleBounds {
            action: self.action_bounds.clone(),
            ret: self.return_bounds,
        }
    }
}

/// InfoNCE/SGD training settings. Defaults follow the reference
/// configuration: batch 512, 8 counter-examples, lr 1e-3 decayed by
/// 0.99 every 100 steps, gradient margin 1.0, boundary buffer 0.05.
#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub n_neg: usize,
    pub lr: f64,
    pub lr_decay: f64,
    pub lr_decay_steps: usize,
    pub steps: usize,
    pub grad_margin: f64,
    pub boundary_buffer: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            batch_size: 512,
            n_neg: 8,
            lr: 1e-3,
            lr_decay: 0.99,
            lr_decay_steps: 100,
            steps: 2000,
            grad_margin: 1.0,
            boundary_buffer: 0.05,
            seed: 0,
        }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<()> {
        if self.n_neg < 1 {
            return Err(Error::argument("n_neg must be >= 1"));
        }
        if !(self.lr_decay > 0.0 && self.lr_decay <= 1.0) {
            return Err(Error::argument("lr_decay must be in (0, 1]"));
        }
        Ok(())
    }

    pub fn lr_at(&self, step: usize) -> f64 {
        self.lr * self.lr_decay.powi((step / self.lr_decay_steps.max(1)) as i32)
    }
}

/// Mean InfoNCE loss over a batch with exact parameter gradients.
/// Softmax terms are computed with max subtraction.
pub fn infonce_loss(
    model: &EnergyModel,
    batch: &[(&[f64], &[f64], f64)],
    negatives: &[Vec<(Vec<f64>, f64)>],
) -> Result<(f64, MlpGrads)> {
    if batch.is_empty() {
        return Err(Error::argument("infonce_loss: empty batch"));
    }
    if batch.len() != negatives.len() {
        return Err(Error::argument("batch / negatives length mismatch"));
    }
    let n_neg = negatives[0].len();
    if n_neg == 0 || negatives.iter().any(|n| n.len() != n_neg) {
        return Err(Error::argument(
            "every example needs the same nonzero negative count",
        ));
    }
    let mut loss = 0.0;
    let mut grads = MlpGrads::zeros_like(&model.net);
    let inv_n = 1.0 / batch.len() as f64;
    for ((s, a_pos, g_pos), negs) in batch.iter().zip(negatives) {
        let mut inputs = Vec::with_capacity(1 + n_neg);
        inputs.push(model.concat(s, a_pos, *g_pos));
        for (a, g) in negs {
            inputs.push(model.concat(s, a, *g));
        }
        let logits: Vec<f64> = inputs
            .iter()
            .map(|x| model.net.forward(x).map(|e| -e))
            .collect::<Result<_>>()?;
        let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = logits.iter().map(|&l| (l - max).exp()).collect();
        let z: f64 = exps.iter().sum();
        loss += inv_n * (z.ln() - (logits[0] - max));
        // d loss / d energy_k: (1 - p_0) for the positive, -p_j otherwise
        for (k, (x, &e)) in inputs.iter().zip(&exps).enumerate() {
            let p = e / z;
            let coeff = if k == 0 { 1.0 - p } else { -p };
            if coeff.abs() < 1e-300 {
                continue;
            }
            let (g, _) = model.net.backward_from_output_grad(x, &[inv_n * coeff])?;
            grads.add_scaled(1.0, &g);
        }
    }
    Ok((loss, grads))
}

/// Terminal points of independent SGLD chains minimizing the raw
/// energy at state s, clipped to the buffered bounds.
pub fn sample_negatives<R: Rng>(
    model: &EnergyModel,
    s: &[f64],
    n_neg: usize,
    schedule: &LangevinSchedule,
    boundary_buffer: f64,
    rng: &mut R,
) -> Result<Vec<(Vec<f64>, f64)>> {
    if n_neg < 1 {
        return Err(Error::argument("n_neg must be >= 1"));
    }
    let bounds = model.sample_bounds().expand(boundary_buffer);
    let objective = TiltedEnergy {
        model,
        state: s,
        eta_inv: 0.0,
    };
    let mut out = Vec::with_capacity(n_neg);
    for _ in 0..n_neg {
        let mut chain_rng = ChaCha8Rng::seed_from_u64(rng.gen());
        let res = sgld_chain(&objective, schedule, &bounds, &mut chain_rng, None)?;
        out.push((res.action, res.ret));
    }
    Ok(out)
}

/// Hinge penalty on the (a, G) input-gradient norm at the sampler's
/// final points: mean((max(0, |grad| - margin))^2).
pub fn gradient_penalty(
    model: &EnergyModel,
    final_points: &[(&[f64], &[f64], f64)],
    margin: f64,
) -> Result<(f64, MlpGrads)> {
    if margin <= 0.0 {
        return Err(Error::argument("margin must be > 0"));
    }
    let mut penalty = 0.0;
    let mut grads = MlpGrads::zeros_like(&model.net);
    if final_points.is_empty() {
        return Ok((penalty, grads));
    }
    let inv_n = 1.0 / final_points.len() as f64;
    let sd = model.state_dim();
    for (s, a, g) in final_points {
        let input = model.concat(s, a, *g);
        let pair = self_input_grad(model, &input)?;
        let tail = &pair[sd..];
        let norm = norm2(tail);
        if norm <= margin {
            continue;
        }
        penalty += inv_n * (norm - margin) * (norm - margin);
        // chain rule through the norm: v = 2 (|g| - margin) g / |g|
        let mut v = vec![0.0; input.len()];
        for (vi, &gi) in v[sd..].iter_mut().zip(tail) {
            *vi = 2.0 * (norm - margin) * gi / norm;
        }
        let g = model.net.double_backward_input(&input, &v)?;
        grads.add_scaled(inv_n, &g);
    }
    Ok((penalty, grads))
}

fn self_input_grad(model: &EnergyModel, input: &[f64]) -> Result<Vec<f64>> {
    let (_, grad) = model.net.value_and_input_grad(input)?;
    Ok(grad)
}

/// Per-step training metrics.
#[derive(Debug, Clone)]
pub struct StepMetrics {
    pub step: usize,
    pub loss: f64,
    pub penalty: f64,
    pub lr: f64,
}

/// InfoNCE + gradient-penalty training with plain SGD and a decayed
/// learning rate. Counter-examples are resampled fresh every step.
/// Deterministic given cfg.seed.
pub fn train(
    mut model: EnergyModel,
    data: &Dataset,
    cfg: &TrainConfig,
    schedule: &LangevinSchedule,
) -> Result<(EnergyModel, Vec<StepMetrics>)> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(Error::argument("train: empty dataset"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut metrics = Vec::with_capacity(cfg.steps);
    for step in 0..cfg.steps {
        if model.net.spectral_norm {
            model.net.refresh_spectral(1);
        }
        let idx = crate::dataset::sample_batch_indices(
            data.len(),
            cfg.batch_size.min(data.len()),
            &mut rng,
        );
        let mut negatives = Vec::with_capacity(idx.len());
        for &i in &idx {
            let t = &data.transitions[i];
            negatives.push(sample_negatives(
                &model,
                &t.state,
                cfg.n_neg,
                schedule,
                cfg.boundary_buffer,
                &mut rng,
            )?);
        }
        let batch: Vec<(&[f64], &[f64], f64)> = idx
            .iter()
            .map(|&i| {
                let t = &data.transitions[i];
                (t.state.as_slice(), t.action.as_slice(), t.ret)
            })
            .collect();
        let (loss, mut grads) = infonce_loss(&model, &batch, &negatives)?;
        let penalty_points: Vec<(&[f64], &[f64], f64)> = idx
            .iter()
            .zip(&negatives)
            .flat_map(|(&i, negs)| {
                let s = data.transitions[i].state.as_slice();
                negs.iter().map(move |(a, g)| (s, a.as_slice(), *g))
            })
            .collect();
        let (penalty, pgrads) = gradient_penalty(&model, &penalty_points, cfg.grad_margin)?;
        grads.add_scaled(1.0, &pgrads);
        let lr = cfg.lr_at(step);
        model.net.sgd_step(&grads, lr);
        metrics.push(StepMetrics {
            step,
            loss,
            penalty,
            lr,
        });
    }
    Ok((model, metrics))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{DatasetMeta, Normalizer, ReturnMode, Transition};
    use crate::langevin::{infer, TiltConfig};
    use crate::ndmath::Matrix;

    fn zero_model(state_dim: usize, action_dim: usize) -> EnergyModel {
        let dims = vec![state_dim + action_dim + 1, 4, 1];
        EnergyModel {
            net: MlpParams::zeros(&dims, Activation::Relu, false).unwrap(),
            action_bounds: vec![(-1.0, 1.0); action_dim],
            return_bounds: (-1.0, 1.0),
        }
    }

    fn random_model(state_dim: usize, action_dim: usize, hidden: &[usize], seed: u64) -> EnergyModel {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        EnergyModel::new(state_dim, action_dim, hidden, false, &mut rng).unwrap()
    }

    /// Identity-statistics dataset wrapper around explicit transitions.
    fn fixed_dataset(transitions: Vec<Transition>) -> Dataset {
        let sd = transitions[0].state.len();
        let ad = transitions[0].action.len();
        Dataset {
            transitions,
            normalizer: Normalizer {
                state_mean: vec![0.0; sd],
                state_std: vec![1.0; sd],
                action_min: vec![-1.0; ad],
                action_max: vec![1.0; ad],
                return_min: -1.0,
                return_max: 1.0,
            },
            meta: DatasetMeta {
                env: "fixed".into(),
                return_mode: ReturnMode::Sum,
                seed: 0,
                episodes: 1,
            },
        }
    }

    #[test]
    fn zero_network_energy_is_zero() {
        let m = zero_model(2, 1);
        assert_eq!(m.energy(&[0.3, -0.5], &[0.7], 0.1).unwrap(), 0.0);
    }

    #[test]
    fn energy_equals_forward_on_concatenation() {
        let m = random_model(2, 1, &[8], 3);
        let (s, a, g) = ([0.2, -0.4], [0.6], -0.3);
        let via_energy = m.energy(&s, &a, g).unwrap();
        let via_forward = m.net.forward(&[0.2, -0.4, 0.6, -0.3]).unwrap();
        assert!((via_energy - via_forward).abs() < 1e-15);
    }

    #[test]
    fn energy_matches_naive_oracle() {
        let m = random_model(1, 1, &[5, 5], 8);
        let x = [0.1, -0.9, 0.4];
        // straightforward loop re-evaluation
        let mut h = x.to_vec();
        for (k, layer) in m.net.layers.iter().enumerate() {
            let mut next = vec![0.0; layer.weight.rows()];
            for r in 0..layer.weight.rows() {
                let mut acc = layer.bias[r];
                for c in 0..layer.weight.cols() {
                    acc += layer.weight.get(r, c) * h[c];
                }
                next[r] = if k + 1 < m.net.layers.len() { acc.max(0.0) } else { acc };
            }
            h = next;
        }
        assert!((m.energy(&[0.1], &[-0.9], 0.4).unwrap() - h[0]).abs() < 1e-12);
    }

    #[test]
    fn uniform_energies_give_log_group_size() {
        let m = zero_model(1, 1);
        let s = [0.0];
        let batch: Vec<(&[f64], &[f64], f64)> = vec![(&s, &[0.5], 0.2)];
        let negatives = vec![vec![(vec![0.1], 0.3); 8]];
        let (loss, _) = infonce_loss(&m, &batch, &negatives).unwrap();
        assert!((loss - 9.0f64.ln()).abs() < 1e-12, "loss {loss}");
    }

    #[test]
    fn single_negative_closed_form() {
        // positive energy 0, negative energy 10 via a hand-built net
        let mut m = zero_model(1, 1);
        m.net = MlpParams::zeros(&[3, 1], Activation::Relu, false).unwrap();
        m.net.layers[0].weight = Matrix::from_vec(1, 3, vec![0.0, 0.0, 10.0]).unwrap();
        let s = [0.0];
        let batch: Vec<(&[f64], &[f64], f64)> = vec![(&s, &[0.0], 0.0)];
        let negatives = vec![vec![(vec![0.0], 1.0)]];
        let (loss, _) = infonce_loss(&m, &batch, &negatives).unwrap();
        let expect = (1.0 + (-10.0f64).exp()).ln();
        assert!((loss - expect).abs() < 1e-12, "loss {loss} expect {expect}");
    }

    #[test]
    fn empty_batch_is_argument_error() {
        let m = zero_model(1, 1);
        assert!(matches!(
            infonce_loss(&m, &[], &[]),
            Err(Error::Argument(_))
        ));
    }

    #[test]
    fn loss_invariant_to_constant_energy_shift() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for trial in 0..5 {
            let m = random_model(2, 1, &[8], 100 + trial);
            let s = [0.1, -0.2];
            let batch: Vec<(&[f64], &[f64], f64)> = vec![(&s, &[0.3], 0.4)];
            let negatives = vec![vec![
                (vec![-0.5], 0.0),
                (vec![0.9], -0.7),
                (vec![0.2], 0.6),
            ]];
            let (base, _) = infonce_loss(&m, &batch, &negatives).unwrap();
            let c: f64 = rng.gen_range(-10.0..10.0);
            let mut shifted = m.clone();
            let last = shifted.net.layers.len() - 1;
            shifted.net.layers[last].bias[0] += c;
            let (s_loss, _) = infonce_loss(&shifted, &batch, &negatives).unwrap();
            assert!((base - s_loss).abs() < 1e-9, "shift {c}: {base} vs {s_loss}");
        }
    }

    fn flatten_params(p: &MlpParams) -> Vec<f64> {
        let mut out = Vec::new();
        for l in &p.layers {
            out.extend_from_slice(l.weight.data());
            out.extend_from_slice(&l.bias);
        }
        out
    }

    fn set_params(p: &mut MlpParams, flat: &[f64]) {
        let mut i = 0;
        for l in &mut p.layers {
            let nw = l.weight.data().len();
            l.weight.data_mut().copy_from_slice(&flat[i..i + nw]);
            i += nw;
            let nb = l.bias.len();
            l.bias.copy_from_slice(&flat[i..i + nb]);
            i += nb;
        }
    }

    fn flatten_grads(g: &MlpGrads) -> Vec<f64> {
        let mut out = Vec::new();
        for (w, b) in g.weights.iter().zip(&g.biases) {
            out.extend_from_slice(w.data());
            out.extend_from_slice(b);
        }
        out
    }

    #[test]
    fn infonce_grads_match_finite_differences() {
        let m = random_model(2, 1, &[6], 77);
        let s = [0.3, -0.1];
        let batch: Vec<(&[f64], &[f64], f64)> = vec![(&s, &[0.4], -0.2)];
        let negatives = vec![vec![(vec![-0.3], 0.5), (vec![0.8], -0.9)]];
        let (_, grads) = infonce_loss(&m, &batch, &negatives).unwrap();
        let flat = flatten_params(&m.net);
        let gflat = flatten_grads(&grads);
        let h = 1e-5;
        for i in (0..flat.len()).step_by(3) {
            let eval = |delta: f64| {
                let mut q = m.clone();
                let mut f = flat.clone();
                f[i] += delta;
                set_params(&mut q.net, &f);
                infonce_loss(&q, &batch, &negatives).unwrap().0
            };
            let fd = (eval(h) - eval(-h)) / (2.0 * h);
            let denom = gflat[i].abs().max(fd.abs()).max(1e-8);
            // absolute escape hatch: FD noise dominates near-zero grads
            assert!(
                (gflat[i] - fd).abs() < 1e-9 || (gflat[i] - fd).abs() / denom < 1e-5,
                "param {i}: {} vs fd {fd}",
                gflat[i]
            );
        }
    }

    #[test]
    fn penalty_inside_margin_is_zero() {
        // E = 0.5 * a, gradient norm 0.5 over (a, G)
        let mut m = zero_model(1, 1);
        m.net = MlpParams::zeros(&[3, 1], Activation::Relu, false).unwrap();
        m.net.layers[0].weight = Matrix::from_vec(1, 3, vec![0.0, 0.5, 0.0]).unwrap();
        let s = [0.0];
        let points: Vec<(&[f64], &[f64], f64)> = vec![(&s, &[0.2], 0.1)];
        let (p, _) = gradient_penalty(&m, &points, 1.0).unwrap();
        assert_eq!(p, 0.0);
    }

    #[test]
    fn penalty_norm_two_margin_one_is_one() {
        // E = 2 a, gradient norm 2 -> (2 - 1)^2 = 1
        let mut m = zero_model(1, 1);
        m.net = MlpParams::zeros(&[3, 1], Activation::Relu, false).unwrap();
        m.net.layers[0].weight = Matrix::from_vec(1, 3, vec![0.0, 2.0, 0.0]).unwrap();
        let s = [0.0];
        let points: Vec<(&[f64], &[f64], f64)> = vec![(&s, &[0.2], 0.1)];
        let (p, _) = gradient_penalty(&m, &points, 1.0).unwrap();
        assert!((p - 1.0).abs() < 1e-12);
    }

    #[test]
    fn penalty_grads_match_finite_differences() {
        // scale a random net up so the gradient norm clears the margin
        let mut m = random_model(1, 1, &[6], 5);
        for l in &mut m.net.layers {
            l.weight.scale(6.0);
        }
        let s = [0.2];
        let points: Vec<(&[f64], &[f64], f64)> = vec![(&s, &[0.3], -0.4), (&s, &[-0.6], 0.2)];
        let (p0, grads) = gradient_penalty(&m, &points, 1.0).unwrap();
        assert!(p0 > 0.0, "test needs an active penalty");
        let flat = flatten_params(&m.net);
        let gflat = flatten_grads(&grads);
        let h = 1e-6;
        for i in (0..flat.len()).step_by(3) {
            let eval = |delta: f64| {
                let mut q = m.clone();
                let mut f = flat.clone();
                f[i] += delta;
                set_params(&mut q.net, &f);
                gradient_penalty(&q, &points, 1.0).unwrap().0
            };
            let fd = (eval(h) - eval(-h)) / (2.0 * h);
            let denom = gflat[i].abs().max(fd.abs()).max(1e-6);
            assert!(
                (gflat[i] - fd).abs() / denom < 1e-4,
                "param {i}: {} vs fd {fd}",
                gflat[i]
            );
        }
    }

    #[test]
    fn zero_iteration_negatives_equal_initialization() {
        let m = random_model(1, 1, &[4], 2);
        let sched = LangevinSchedule::default().with_iterations(0).without_noise();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut rng2 = rng.clone();
        let negs = sample_negatives(&m, &[0.0], 2, &sched, 0.05, &mut rng).unwrap();
        let bounds = m.sample_bounds().expand(0.05);
        for (a, g) in negs {
            let mut chain_rng = ChaCha8Rng::seed_from_u64(rng2.gen());
            let a0 = chain_rng.gen_range(bounds.action[0].0..bounds.action[0].1);
            let g0: f64 = chain_rng.gen_range(-1.0..1.0);
            assert_eq!(a[0], a0);
            assert_eq!(g, g0.clamp(bounds.ret.0, bounds.ret.1));
        }
    }

    /// Net computing |a - 0.3| + |G + 0.2| exactly out of four ReLUs.
    fn absolute_value_model() -> EnergyModel {
        let mut net = MlpParams::zeros(&[3, 4, 1], Activation::Relu, false).unwrap();
        net.layers[0].weight = Matrix::from_vec(
            4,
            3,
            vec![
                0.0, 1.0, 0.0, //  a
                0.0, -1.0, 0.0, // -a
                0.0, 0.0, 1.0, //  G
                0.0, 0.0, -1.0, // -G
            ],
        )
        .unwrap();
        net.layers[0].bias = vec![-0.3, 0.3, 0.2, -0.2];
        net.layers[1].weight = Matrix::from_vec(1, 4, vec![1.0, 1.0, 1.0, 1.0]).unwrap();
        EnergyModel {
            net,
            action_bounds: vec![(-1.0, 1.0)],
            return_bounds: (-1.0, 1.0),
        }
    }

    #[test]
    fn noise_free_negatives_find_the_energy_minimum() {
        let m = absolute_value_model();
        let sched = LangevinSchedule::default().without_noise();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let negs = sample_negatives(&m, &[0.0], 8, &sched, 0.05, &mut rng).unwrap();
        for (a, g) in negs {
            assert!((a[0] - 0.3).abs() < 0.05, "a = {}", a[0]);
            assert!((g + 0.2).abs() < 0.05, "g = {g}");
        }
    }

    #[test]
    fn negatives_respect_buffered_bounds() {
        let m = random_model(1, 2, &[6], 31);
        let sched = LangevinSchedule::default();
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for _ in 0..20 {
            let negs = sample_negatives(&m, &[0.4], 8, &sched, 0.05, &mut rng).unwrap();
            for (a, g) in negs {
                assert!(a.iter().all(|&x| (-1.05..=1.05).contains(&x)));
                assert!((-1.05..=1.05).contains(&g));
            }
        }
    }

    #[test]
    fn zero_steps_leaves_model_unchanged() {
        let m = random_model(1, 1, &[4], 6);
        let before = flatten_params(&m.net);
        let data = fixed_dataset(vec![Transition {
            state: vec![0.0],
            action: vec![0.5],
            ret: 0.2,
        }]);
        let cfg = TrainConfig {
            steps: 0,
            ..TrainConfig::default()
        };
        let (after, metrics) = train(m, &data, &cfg, &LangevinSchedule::default()).unwrap();
        assert!(metrics.is_empty());
        assert_eq!(flatten_params(&after.net), before);
    }

    #[test]
    fn empty_dataset_rejected() {
        let m = random_model(1, 1, &[4], 6);
        let mut data = fixed_dataset(vec![Transition {
            state: vec![0.0],
            action: vec![0.5],
            ret: 0.2,
        }]);
        data.transitions.clear();
        assert!(matches!(
            train(m, &data, &TrainConfig::default(), &LangevinSchedule::default()),
            Err(Error::Argument(_))
        ));
    }

    #[test]
    fn training_recovers_single_transition_mode() {
        let data = fixed_dataset(vec![Transition {
            state: vec![0.0],
            action: vec![0.5],
            ret: 0.2,
        }]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let model = EnergyModel::new(1, 1, &[24, 24], false, &mut rng).unwrap();
        let cfg = TrainConfig {
            batch_size: 1,
            steps: 2000,
            seed: 2,
            // plain SGD on a single transition needs a hotter rate
            // than the full-scale default to converge in 2k steps
            lr: 0.05,
            ..TrainConfig::default()
        };
        let train_sched = LangevinSchedule::default().with_iterations(30);
        let (trained, metrics) = train(model, &data, &cfg, &train_sched).unwrap();
        assert_eq!(metrics.len(), 2000);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let sched = LangevinSchedule::default();
        let (a, _) = infer(
            &trained,
            &[0.0],
            TiltConfig::new(0.0).unwrap(),
            &sched,
            32,
            &mut rng,
        )
        .unwrap();
        assert!(
            (a[0] - 0.5).abs() < 0.1,
            "inference action {} should be near the dataset action 0.5",
            a[0]
        );
    }

    #[test]
    fn training_loss_decreases_on_small_dataset() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let transitions: Vec<Transition> = (0..10)
            .map(|_| Transition {
                state: vec![rng.gen_range(-1.0..1.0)],
                action: vec![rng.gen_range(-0.8..0.8)],
                ret: rng.gen_range(-0.8..0.8),
            })
            .collect();
        let data = fixed_dataset(transitions);
        let model = EnergyModel::new(1, 1, &[24, 24], false, &mut rng).unwrap();
        let cfg = TrainConfig {
            batch_size: 10,
            steps: 2000,
            seed: 5,
            ..TrainConfig::default()
        };
        let sched = LangevinSchedule::default().with_iterations(20);
        let (_, metrics) = train(model, &data, &cfg, &sched).unwrap();
        let leading: f64 = metrics[..100].iter().map(|m| m.loss).sum::<f64>() / 100.0;
        let trailing: f64 = metrics[1900..].iter().map(|m| m.loss).sum::<f64>() / 100.0;
        assert!(
            trailing < leading,
            "trailing {trailing} should be below leading {leading}"
        );
    }

    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
}

