//! Thin CLI over the library: gen-data, train, eval, sweep, report.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use irvs_lab::dataset;
use irvs_lab::harness::{
    append_metrics, evaluate_trained, load_trained, make_dataset, metrics_path, report,
    run_experiment, summarize, summary_table, sweep, ExperimentConfig, SweepAxis,
};

#[derive(Parser)]
#[command(name = "irvs-lab", about = "Implicit RvS lab: energy-based policies on synthetic control tasks", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// Flat key=value config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// key=value overrides; applied after the file, repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
}

impl ConfigArgs {
    fn build(&self) -> irvs_lab::Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::from_file(path)?,
            None => ExperimentConfig::default(),
        };
        for s in &self.sets {
            let (k, v) = s.split_once('=').ok_or_else(|| {
                irvs_lab::Error::argument(format!("--set expects key=value, got '{s}'"))
            })?;
            cfg.set(k.trim(), v.trim())?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate a dataset and write it to a file.
    GenData {
        #[command(flatten)]
        config: ConfigArgs,
        /// Output file (defaults to <out_dir>/dataset_seed<seed>.txt per seed).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train the configured algorithm, checkpoint it, and record metrics.
    Train {
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Re-evaluate checkpoints from a previous train run.
    Eval {
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Sweep one axis over a list of values.
    Sweep {
        #[command(flatten)]
        config: ConfigArgs,
        /// eta_inv | epsilon | dim | delta
        #[arg(long)]
        axis: SweepAxis,
        /// Comma-separated axis values.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
    },
    /// Summarize a metrics CSV into a table and SVG plots.
    Report {
        /// Metrics CSV to read.
        #[arg(long)]
        metrics: PathBuf,
        /// Directory for summary.txt and plots.
        #[arg(long)]
        out: PathBuf,
    },
}

fn run(cli: Cli) -> irvs_lab::Result<()> {
    match cli.command {
        Command::GenData { config, out } => {
            let cfg = config.build()?;
            let out_dir = cfg.resolved_out_dir();
            std::fs::create_dir_all(&out_dir)
                .map_err(|e| irvs_lab::Error::io("output dir", e))?;
            for &seed in &cfg.seeds {
                let data = make_dataset(&cfg, seed)?;
                let path = match (&out, cfg.seeds.len()) {
                    (Some(p), 1) => p.clone(),
                    _ => out_dir.join(format!("dataset_seed{seed}.txt")),
                };
                dataset::save(&data, &path)?;
                println!(
                    "wrote {} ({} transitions, state_dim {})",
                    path.display(),
                    data.transitions.len(),
                    data.state_dim()
                );
            }
            Ok(())
        }
        Command::Train { config } => {
            let cfg = config.build()?;
            let rows = run_experiment(&cfg)?;
            print!("{}", summary_table(&summarize(&rows)));
            println!("metrics -> {}", metrics_path(&cfg).display());
            Ok(())
        }
        Command::Eval { config } => {
            let cfg = config.build()?;
            let mut rows = Vec::new();
            for &seed in &cfg.seeds {
                let data = make_dataset(&cfg, seed)?;
                let trained = load_trained(&cfg, &data, seed)?;
                rows.extend(evaluate_trained(&cfg, &trained, &data, seed, 0.0)?);
            }
            append_metrics(&metrics_path(&cfg), &rows)?;
            print!("{}", summary_table(&summarize(&rows)));
            Ok(())
        }
        Command::Sweep {
            config,
            axis,
            values,
        } => {
            let cfg = config.build()?;
            let cells = sweep(&cfg, axis, &values)?;
            let mut failed = 0usize;
            for cell in &cells {
                match &cell.error {
                    None => println!("{axis}={} ok ({} rows)", cell.value, cell.rows.len()),
                    Some(e) => {
                        failed += 1;
                        eprintln!("{axis}={} failed: {e}", cell.value);
                    }
                }
            }
            println!("metrics -> {}", metrics_path(&cfg).display());
            if failed == cells.len() {
                return Err(irvs_lab::Error::argument("every sweep cell failed"));
            }
            Ok(())
        }
        Command::Report { metrics, out } => {
            let written = report(&metrics, &out)?;
            for path in written {
                println!("wrote {path}");
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
