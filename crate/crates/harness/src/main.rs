use clap::{Parser, Subcommand};
use mobles_harness::{config, plot, run, sweep, HarnessError};
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "mobles",
    about = "Gridworld learning benchmarks: run experiments, plot curves, validate maps"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment config and write returns.csv / weights.csv.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory (overrides the config's out_dir).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Base seed (overrides the config's base_seed).
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads; 0 means one per hardware thread.
        #[arg(long)]
        parallel: Option<usize>,
    },
    /// Render SVG figures from a directory holding returns.csv and weights.csv.
    Plot {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Parse a map file and report its dimensions, goal, and free cells.
    ValidateMap { map: PathBuf },
    /// Grid-search the baseline hyperparameters of an experiment's agents.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        parallel: Option<usize>,
    },
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    if let Err(e) = dispatch() {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}

fn dispatch() -> Result<(), HarnessError> {
    match Cli::parse().command {
        Command::Run {
            config,
            out,
            seed,
            parallel,
        } => {
            let mut exp = config::load_config(&config)?;
            if let Some(out) = out {
                exp.out_dir = out;
            }
            if let Some(seed) = seed {
                exp.base_seed = seed;
            }
            if let Some(parallel) = parallel {
                exp.workers = parallel;
            }
            let (returns, weights) = run::run_experiment(&exp)?;
            let (rp, wp) = run::write_outputs(&exp.out_dir, &returns, &weights)?;
            println!(
                "wrote {} return rows to {} and {} weight rows to {}",
                returns.len(),
                rp.display(),
                weights.len(),
                wp.display()
            );
            Ok(())
        }
        Command::Plot { input, out } => {
            let written = plot::plot(&input.join("returns.csv"), &input.join("weights.csv"), &out)?;
            for path in written {
                println!("wrote {}", path.display());
            }
            Ok(())
        }
        Command::ValidateMap { map } => {
            let text = std::fs::read_to_string(&map)
                .map_err(|e| HarnessError::Config(format!("cannot read {}: {e}", map.display())))?;
            let maze = mobles_core::gridworld::GridMaze::load(&text)
                .map_err(|e| HarnessError::Config(format!("{}: {e}", map.display())))?;
            println!(
                "{}: {}x{}, goal at ({}, {}), {} free non-goal cells",
                map.display(),
                maze.width(),
                maze.height(),
                maze.goal().x,
                maze.goal().y,
                maze.free_non_goal_cells().len()
            );
            Ok(())
        }
        Command::Sweep {
            config,
            out,
            parallel,
        } => {
            let mut exp = config::load_config(&config)?;
            if let Some(out) = out {
                exp.out_dir = out;
            }
            if let Some(parallel) = parallel {
                exp.workers = parallel;
            }
            let rows = sweep::sweep(&exp)?;
            if rows.is_empty() {
                return Err(HarnessError::Config(
                    "no sweepable agents in the config".into(),
                ));
            }
            std::fs::create_dir_all(&exp.out_dir)?;
            let path = exp.out_dir.join("sweep.csv");
            let mut w = csv::Writer::from_path(&path)?;
            for row in &rows {
                w.serialize(row)?;
            }
            w.flush()?;
            println!("wrote {} sweep rows to {}", rows.len(), path.display());
            for best in sweep::best_per_agent(&rows) {
                let mut parts = Vec::new();
                if let Some(l) = best.lambda {
                    parts.push(format!("lambda={l}"));
                }
                if let Some(a) = best.alpha_schedule {
                    parts.push(format!("alpha_schedule={a}"));
                }
                if let Some(b) = best.beta_schedule {
                    parts.push(format!("beta_schedule={b}"));
                }
                println!(
                    "best for {}: {} (mean return {:.3})",
                    best.agent,
                    parts.join(", "),
                    best.mean_return
                );
            }
            Ok(())
        }
    }
}
