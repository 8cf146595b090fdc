//! Tiny end-to-end sweep: train explicit RvS once, evaluate across
//! inverse temperatures, and render the summary table plus an SVG
//! plot from the metrics CSV.
//!
//!     cargo run --release --example sweep_and_report

use irvs_lab::harness::{
    metrics_path, read_metrics, report, sweep, Algorithm, ExperimentConfig, SweepAxis,
};

fn main() -> anyhow::Result<()> {
    let dir = tempfile::tempdir()?;
    let cfg = ExperimentConfig {
        algorithm: Algorithm::Rvs,
        dataset_size: 500,
        seeds: vec![0, 1],
        eval_episodes: 50,
        hidden_width: 32,
        hidden_depth: 2,
        steps: 400,
        batch_size: 64,
        lr: 0.1,
        spectral_norm: false,
        n_atoms: 21,
        out_dir: dir.path().join("run"),
        record_wall_time: false,
        ..ExperimentConfig::default()
    };

    eprintln!("sweeping eta_inv (one training per seed, reused across values)...");
    let cells = sweep(&cfg, SweepAxis::EtaInv, &[0.0, 1.0, 3.0, 5.0])?;
    for cell in &cells {
        match &cell.error {
            None => println!("eta_inv {}: {} metric rows", cell.value, cell.rows.len()),
            Some(e) => println!("eta_inv {}: failed ({e})", cell.value),
        }
    }

    let metrics = metrics_path(&cfg);
    println!("\n{} rows in {}", read_metrics(&metrics)?.len(), metrics.display());
    for path in report(&metrics, &dir.path().join("report"))? {
        println!("wrote {path}");
    }
    Ok(())
}
