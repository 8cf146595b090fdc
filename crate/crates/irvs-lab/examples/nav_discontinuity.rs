//! Left-most-goal navigation with nearly tied goals (delta = 1e-4):
//! the optimal action flips discontinuously with the sign of
//! g2.x - g1.x. The implicit model can represent that flip; a mean
//! regression policy averages the two branches and misses both goals.
//! Scaled down from the full benchmark to run in a few minutes.
//!
//!     cargo run --release --example nav_discontinuity

use irvs_lab::harness::{
    evaluate_trained, make_dataset, train_algorithm, Algorithm, ExperimentConfig,
};

fn main() -> anyhow::Result<()> {
    let base = ExperimentConfig {
        env: "nav".parse()?,
        eta_inv: 0.0,
        dataset_size: 2000,
        dim: 2,
        // a wide goal box keeps the two branches farther apart than
        // the success radius, so averaging them misses both goals
        epsilon: 1.0,
        test_epsilon: 1.0,
        delta: Some(1e-4),
        seeds: vec![0],
        eval_episodes: 200,
        hidden_width: 48,
        hidden_depth: 2,
        steps: 3000,
        batch_size: 32,
        lr: 0.1,
        spectral_norm: false,
        train_langevin_iters: 10,
        eval_langevin_iters: 60,
        eval_chains: 16,
        record_wall_time: false,
        ..ExperimentConfig::default()
    };

    for algorithm in [Algorithm::Ibc, Algorithm::Bc] {
        let cfg = ExperimentConfig { algorithm, ..base.clone() };
        eprintln!("training {algorithm}...");
        let data = make_dataset(&cfg, 0)?;
        let trained = train_algorithm(&cfg, &data, 0)?;
        let rows = evaluate_trained(&cfg, &trained, &data, 0, 0.0)?;
        println!(
            "{algorithm}: success rate {:.3} over {} near-tied tasks",
            rows[0].metric_value, cfg.eval_episodes
        );
    }
    Ok(())
}
