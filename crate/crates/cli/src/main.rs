use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use snake_cli::{front_metrics, plot, run_experiment, workers_from_env, ExperimentSpec, Result};
use snake_core::benchmarks::reference_front;
use snake_core::multi::{read_front_csv, write_front_csv};
use snake_core::Benchmark;

#[derive(Parser)]
#[command(
    name = "snake",
    version,
    about = "Movement-cost-aware Bayesian optimization experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every planner and seed of an experiment spec (TOML).
    ///
    /// Concurrency is set by the SNAKE_WORKERS environment variable.
    Run {
        spec: PathBuf,
        /// Overrides the spec's output directory.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// GD, IGD and MPFE of a front against a reference front (both CSV).
    Metrics {
        front: PathBuf,
        truth: PathBuf,
        /// Extract the approximate front with this dominance tolerance.
        #[arg(long, value_name = "EPS")]
        relaxed: Option<f64>,
    },
    /// Dense-grid reference Pareto front of a benchmark, as CSV.
    Front {
        benchmark: String,
        #[arg(long, default_value_t = 20)]
        grid: usize,
        /// Write to a file instead of stdout.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Regret-vs-cost SVG from an aggregate.csv and its curve files.
    Plot {
        aggregate: PathBuf,
        /// Defaults to plot.svg next to the aggregate file.
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long)]
        title: Option<String>,
    },
}

fn run(spec: PathBuf, output: Option<PathBuf>) -> Result<ExitCode> {
    let mut spec = ExperimentSpec::load(spec)?;
    if let Some(out) = output {
        spec.output = out;
    }
    let experiment = spec.resolve()?;
    let workers = workers_from_env()?;
    let result = run_experiment(&experiment, workers)?;
    for g in &result.groups {
        let regret = g
            .final_regret
            .map_or(String::new(), |r| format!(" regret {:.4e}", r.mean));
        println!(
            "{:<16} budget used {:>7.2}  cost {:>9.3} ± {:<8.3}{regret}{}",
            g.label,
            g.avg_budget_used,
            g.cost.mean,
            g.cost.std,
            if g.failed > 0 {
                format!("  ({} failed)", g.failed)
            } else {
                String::new()
            }
        );
    }
    println!(
        "wrote {}",
        experiment.output.join(&experiment.benchmark).display()
    );
    if result.failed() > 0 {
        eprintln!("{} campaign(s) failed", result.failed());
        return Ok(ExitCode::from(2));
    }
    Ok(ExitCode::SUCCESS)
}

fn dispatch(cmd: Command) -> Result<ExitCode> {
    match cmd {
        Command::Run { spec, output } => run(spec, output),
        Command::Metrics {
            front,
            truth,
            relaxed,
        } => {
            let approx = read_front_csv(front)?;
            let truth = read_front_csv(truth)?;
            let [g, i, m] = front_metrics(&approx, &truth, relaxed.unwrap_or(0.0))?;
            println!("gd,igd,mpfe\n{g},{i},{m}");
            Ok(ExitCode::SUCCESS)
        }
        Command::Front {
            benchmark,
            grid,
            output,
        } => {
            let front = reference_front(&Benchmark::by_name(&benchmark)?, grid)?;
            match output {
                Some(p) => {
                    let mut f = std::io::BufWriter::new(std::fs::File::create(p)?);
                    write_front_csv(&front, &mut f)?;
                    f.flush()?;
                }
                None => write_front_csv(&front, std::io::stdout().lock())?,
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Plot {
            aggregate,
            output,
            title,
        } => {
            let series = plot::load_series(&aggregate)?;
            let title = title.unwrap_or_else(|| {
                aggregate
                    .parent()
                    .and_then(|p| p.file_name())
                    .map_or("regret".into(), |n| n.to_string_lossy().into_owned())
            });
            let out = output.unwrap_or_else(|| aggregate.with_file_name("plot.svg"));
            std::fs::write(&out, plot::render_svg(&series, &title))?;
            println!("wrote {}", out.display());
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
