//! Stochastic gradient Langevin dynamics over (action, return) pairs,
//! with a polynomial step-size decay and an exponentially tilted
//! objective E(s, a, G) - eta_inv * G at inference time.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::ebm::EnergyModel;
use crate::error::{Error, Result};

/// SGLD step schedule and clipping constants.
#[derive(Debug, Clone)]
pub struct LangevinSchedule {
    pub iterations: usize,
    pub lr_init: f64,
    pub lr_final: f64,
    pub decay_power: f64,
    pub noise_scale: f64,
    pub clip_bound: f64,
    pub second_stage_lr: f64,
    pub second_stage_iters: usize,
}

impl Default for LangevinSchedule {
    fn default() -> Self {
        LangevinSchedule {
            iterations: 100,
            lr_init: 0.5,
            lr_final: 1e-5,
            decay_power: 2.0,
            noise_scale: 0.5,
            clip_bound: 0.5,
            second_stage_lr: 1e-5,
            second_stage_iters: 0,
        }
    }
}

impl LangevinSchedule {
    pub fn with_iterations(mut self, iters: usize) -> Self {
        self.iterations = iters;
        self
    }

    pub fn without_noise(mut self) -> Self {
        self.noise_scale = 0.0;
        self
    }
}

/// Exponential tilt strength and argmin tie-break rule.
#[derive(Debug, Clone, Copy)]
pub struct TiltConfig {
    /// eta_inv >= 0; 0 recovers plain energy minimization.
    pub eta_inv: f64,
}

impl TiltConfig {
    pub fn new(eta_inv: f64) -> Result<Self> {
        if !eta_inv.is_finite() || eta_inv < 0.0 {
            return Err(Error::argument(format!(
                "eta_inv must be finite and non-negative, got {eta_inv}"
            )));
        }
        Ok(TiltConfig { eta_inv })
    }
}

/// Box bounds for the sampled (action, return) coordinates.
#[derive(Debug, Clone)]
pub struct SampleBounds {
    pub action: Vec<(f64, f64)>,
    pub ret: (f64, f64),
}

impl SampleBounds {
    pub fn new(action: Vec<(f64, f64)>, ret: (f64, f64)) -> Result<Self> {
        for &(lo, hi) in action.iter().chain(std::iter::once(&ret)) {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::argument(format!("invalid bound [{lo}, {hi}]")));
            }
        }
        Ok(SampleBounds { action, ret })
    }

    pub fn expand(&self, buffer: f64) -> SampleBounds {
        SampleBounds {
            action: self
                .action
                .iter()
                .map(|&(lo, hi)| (lo - buffer, hi + buffer))
                .collect(),
            ret: (self.ret.0 - buffer, self.ret.1 + buffer),
        }
    }
}

/// Differentiable objective over (a, G): value plus input gradients.
pub trait Objective {
    fn eval(&self, a: &[f64], g: f64) -> Result<(f64, Vec<f64>, f64)>;
}

impl<F> Objective for F
where
    F: Fn(&[f64], f64) -> Result<(f64, Vec<f64>, f64)>,
{
    fn eval(&self, a: &[f64], g: f64) -> Result<(f64, Vec<f64>, f64)> {
        self(a, g)
    }
}

/// Terminal point of one chain.
#[derive(Debug, Clone)]
pub struct ChainResult {
    pub action: Vec<f64>,
    pub ret: f64,
    pub value: f64,
}

/// One row of an optional per-chain debug trace.
#[derive(Debug, Clone)]
pub struct TracePoint {
    pub iter: usize,
    pub value: f64,
    pub action: Vec<f64>,
    pub ret: f64,
}

/// Decayed step size: (lr_init - lr_final) * (1 - t/T)^p + lr_final.
pub fn schedule_lr(sched: &LangevinSchedule, t: usize) -> Result<f64> {
    if t > sched.iterations {
        return Err(Error::argument(format!(
            "schedule step {t} out of range 0..={}",
            sched.iterations
        )));
    }
    if sched.iterations == 0 {
        return Ok(sched.lr_final);
    }
    let frac = 1.0 - t as f64 / sched.iterations as f64;
    Ok((sched.lr_init - sched.lr_final) * frac.powf(sched.decay_power) + sched.lr_final)
}

fn clip(v: f64, lo: f64, hi: f64) -> f64 {
    v.clamp(lo, hi)
}

/// Run one SGLD chain: uniform initialization inside the bounds,
/// clipped noisy half-gradient updates with the decayed step size,
/// then an optional noise-free second stage.
pub fn sgld_chain<O: Objective, R: Rng>(
    objective: &O,
    sched: &LangevinSchedule,
    bounds: &SampleBounds,
    rng: &mut R,
    mut trace: Option<&mut Vec<TracePoint>>,
) -> Result<ChainResult> {
    let mut a: Vec<f64> = bounds
        .action
        .iter()
        .map(|&(lo, hi)| rng.gen_range(lo..hi))
        .collect();
    let mut g = rng.gen_range(-1.0f64..1.0);
    g = clip(g, bounds.ret.0, bounds.ret.1);

    let step = |a: &mut Vec<f64>,
                    g: &mut f64,
                    lr: f64,
                    noise: f64,
                    t: usize,
                    rng: &mut R,
                    trace: &mut Option<&mut Vec<TracePoint>>|
     -> Result<()> {
        let (value, grad_a, grad_g) = objective.eval(a, *g)?;
        if grad_a.iter().any(|v| !v.is_finite()) || !grad_g.is_finite() {
            return Err(Error::Sampler {
                iteration: t,
                message: "non-finite gradient".into(),
            });
        }
        if let Some(tr) = trace.as_deref_mut() {
            tr.push(TracePoint {
                iter: t,
                value,
                action: a.clone(),
                ret: *g,
            });
        }
        for (i, ai) in a.iter_mut().enumerate() {
            let eps: f64 = if noise > 0.0 {
                noise * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng)
            } else {
                0.0
            };
            let u = clip(0.5 * grad_a[i] + eps, -sched.clip_bound, sched.clip_bound);
            *ai = clip(*ai - lr * u, bounds.action[i].0, bounds.action[i].1);
        }
        let eps: f64 = if noise > 0.0 {
            noise * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng)
        } else {
            0.0
        };
        let u = clip(0.5 * grad_g + eps, -sched.clip_bound, sched.clip_bound);
        *g = clip(*g - lr * u, bounds.ret.0, bounds.ret.1);
        Ok(())
    };

    for t in 0..sched.iterations {
        let lr = schedule_lr(sched, t)?;
        step(&mut a, &mut g, lr, sched.noise_scale, t, rng, &mut trace)?;
    }
    for t in 0..sched.second_stage_iters {
        step(
            &mut a,
            &mut g,
            sched.second_stage_lr,
            0.0,
            sched.iterations + t,
            rng,
            &mut trace,
        )?;
    }
    let (value, _, _) = objective.eval(&a, g)?;
    if let Some(tr) = trace {
        tr.push(TracePoint {
            iter: sched.iterations + sched.second_stage_iters,
            value,
            action: a.clone(),
            ret: g,
        });
    }
    Ok(ChainResult {
        action: a,
        ret: g,
        value,
    })
}

/// Tilted objective for an energy model: E(s, a, G) - eta_inv * G.
pub struct TiltedEnergy<'a> {
    pub model: &'a EnergyModel,
    pub state: &'a [f64],
    pub eta_inv: f64,
}

impl Objective for TiltedEnergy<'_> {
    fn eval(&self, a: &[f64], g: f64) -> Result<(f64, Vec<f64>, f64)> {
        let (value, grad_a, grad_g) = self.model.energy_with_input_grad(self.state, a, g)?;
        Ok((value - self.eta_inv * g, grad_a, grad_g - self.eta_inv))
    }
}

/// Best-of-n-chains tilted inference (argmin of E - eta_inv * G).
/// With eta_inv = 0 this is plain implicit behavior cloning.
pub fn infer<R: Rng>(
    model: &EnergyModel,
    s: &[f64],
    tilt: TiltConfig,
    sched: &LangevinSchedule,
    n_chains: usize,
    rng: &mut R,
) -> Result<(Vec<f64>, f64)> {
    if n_chains == 0 {
        return Err(Error::argument("infer requires n_chains >= 1"));
    }
    let objective = TiltedEnergy {
        model,
        state: s,
        eta_inv: tilt.eta_inv,
    };
    let bounds = model.sample_bounds();
    let mut best: Option<ChainResult> = None;
    for _ in 0..n_chains {
        let mut chain_rng = ChaCha8Rng::seed_from_u64(rng.gen());
        let result = sgld_chain(&objective, sched, &bounds, &mut chain_rng, None)?;
        let better = match &best {
            None => true,
            Some(b) => {
                result.value < b.value || (result.value == b.value && result.ret > b.ret)
            }
        };
        if better {
            best = Some(result);
        }
    }
    let best = best.unwrap();
    Ok((best.action, best.ret))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn quadratic(center_a: f64, center_g: f64) -> impl Objective {
        move |a: &[f64], g: f64| {
            let da = a[0] - center_a;
            let dg = g - center_g;
            Ok((da * da + dg * dg, vec![2.0 * da], 2.0 * dg))
        }
    }

    fn unit_bounds() -> SampleBounds {
        SampleBounds::new(vec![(-1.0, 1.0)], (-1.0, 1.0)).unwrap()
    }

    #[test]
    fn schedule_hits_endpoints() {
        let s = LangevinSchedule::default();
        assert_eq!(schedule_lr(&s, 0).unwrap(), 0.5);
        assert_eq!(schedule_lr(&s, 100).unwrap(), 1e-5);
        // midpoint of the default schedule
        let mid = schedule_lr(&s, 50).unwrap();
        assert!((mid - (0.49999 * 0.25 + 1e-5)).abs() < 1e-12, "mid {mid}");
        assert!(schedule_lr(&s, 101).is_err());
    }

    #[test]
    fn schedule_non_increasing() {
        let s = LangevinSchedule::default();
        let mut prev = f64::INFINITY;
        for t in 0..=100 {
            let lr = schedule_lr(&s, t).unwrap();
            assert!(lr <= prev);
            prev = lr;
        }
    }

    #[test]
    fn zero_iterations_returns_initialization() {
        let sched = LangevinSchedule::default()
            .with_iterations(0)
            .without_noise();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut rng2 = rng.clone();
        let bounds = unit_bounds();
        let res = sgld_chain(&quadratic(0.3, 0.1), &sched, &bounds, &mut rng, None).unwrap();
        let a0 = rng2.gen_range(-1.0f64..1.0);
        let g0 = rng2.gen_range(-1.0f64..1.0);
        assert_eq!(res.action[0], a0);
        assert_eq!(res.ret, g0);
    }

    #[test]
    fn noise_free_chain_finds_quadratic_minimum() {
        let sched = LangevinSchedule::default().without_noise();
        let bounds = unit_bounds();
        for seed in 0..20 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let res = sgld_chain(&quadratic(0.3, 0.1), &sched, &bounds, &mut rng, None).unwrap();
            assert!(
                (res.action[0] - 0.3).abs() < 0.05 && (res.ret - 0.1).abs() < 0.05,
                "seed {seed}: ({}, {})",
                res.action[0],
                res.ret
            );
        }
    }

    #[test]
    fn update_direction_clipped_to_half() {
        // g = (100, 100), no noise -> u = (0.5, 0.5) exactly
        let steep = |_a: &[f64], _g: f64| Ok((0.0, vec![100.0], 100.0));
        let mut sched = LangevinSchedule::default().without_noise();
        sched.iterations = 1;
        sched.lr_init = 1.0;
        sched.lr_final = 1.0;
        let bounds = SampleBounds::new(vec![(-10.0, 10.0)], (-10.0, 10.0)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut rng2 = rng.clone();
        let res = sgld_chain(&steep, &sched, &bounds, &mut rng, None).unwrap();
        let a0 = rng2.gen_range(-10.0f64..10.0);
        let g0 = rng2.gen_range(-1.0f64..1.0);
        assert!((res.action[0] - (a0 - 0.5)).abs() < 1e-15);
        assert!((res.ret - (g0 - 0.5)).abs() < 1e-15);
    }

    #[test]
    fn outputs_respect_bounds_for_all_seeds() {
        let sched = LangevinSchedule::default();
        let bounds = SampleBounds::new(vec![(-0.4, 0.2)], (-0.9, 0.3)).unwrap();
        for seed in 0..50 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let res = sgld_chain(&quadratic(0.9, 0.9), &sched, &bounds, &mut rng, None).unwrap();
            assert!(res.action[0] >= -0.4 && res.action[0] <= 0.2);
            assert!(res.ret >= -0.9 && res.ret <= 0.3);
        }
    }

    #[test]
    fn identical_seeds_give_identical_trajectories() {
        let sched = LangevinSchedule::default();
        let bounds = unit_bounds();
        let run = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut trace = Vec::new();
            sgld_chain(
                &quadratic(0.0, 0.0),
                &sched,
                &bounds,
                &mut rng,
                Some(&mut trace),
            )
            .unwrap();
            trace
                .iter()
                .map(|p| (p.action[0].to_bits(), p.ret.to_bits()))
                .collect::<Vec<_>>()
        };
        assert_eq!(run(5), run(5));
        assert_ne!(run(5), run(6));
    }

    #[test]
    fn nan_gradient_reports_iteration() {
        let bad = |_a: &[f64], _g: f64| Ok((0.0, vec![f64::NAN], 0.0));
        let sched = LangevinSchedule::default();
        let bounds = unit_bounds();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        match sgld_chain(&bad, &sched, &bounds, &mut rng, None) {
            Err(Error::Sampler { iteration, .. }) => assert_eq!(iteration, 0),
            other => panic!("expected sampler error, got {other:?}"),
        }
    }
}
