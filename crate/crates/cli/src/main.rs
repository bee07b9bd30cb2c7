use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use psodesign_cli::benchmark::{cmd_benchmark, Algorithm, BenchmarkSpec, Family};
use psodesign_cli::design_io::write_text;
use psodesign_cli::sweep::{cmd_sweep, render_summary, SweepMode, SweepSpec};
use psodesign_cli::{
    cmd_efficiency, cmd_find, cmd_verify, exit, init_workers, load_design, load_problem, CliError, PsoOverrides,
};
use psodesign_core::LinkKind;

/// Locally D-optimal designs for binary-response models by particle swarm.
#[derive(Parser, Debug)]
#[command(name = "psodesign", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Default)]
struct SwarmFlags {
    /// Random seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Number of particles.
    #[arg(long)]
    particles: Option<usize>,
    /// Iterations per swarm.
    #[arg(long = "max-iter")]
    max_iter: Option<usize>,
    /// Restarts allowed when the equivalence check fails.
    #[arg(long = "max-resets")]
    max_resets: Option<usize>,
    /// Required efficiency lower bound.
    #[arg(long = "eff-bound")]
    eff_bound: Option<f64>,
    /// Grid points per continuous factor for the equivalence check.
    #[arg(long)]
    resolution: Option<usize>,
}

impl SwarmFlags {
    fn overrides(&self) -> PsoOverrides {
        PsoOverrides {
            seed: self.seed,
            n_particles: self.particles,
            max_iter: self.max_iter,
            max_resets: self.max_resets,
            eff_bound: self.eff_bound,
            check_resolution: self.resolution,
            ..Default::default()
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Search for an optimal design.
    Find {
        problem: PathBuf,
        #[command(flatten)]
        swarm: SwarmFlags,
        /// Write the design to <OUT>.json and <OUT>.csv.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a design against the equivalence theorem.
    Verify {
        problem: PathBuf,
        /// Design file (.json or .csv).
        design: PathBuf,
        #[arg(long, default_value_t = 101)]
        resolution: usize,
        #[arg(long = "eff-bound", default_value_t = 0.99)]
        eff_bound: f64,
        /// Write the sensitivity profile as CSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// D-efficiency of a design relative to a reference design.
    Efficiency {
        problem: PathBuf,
        design: PathBuf,
        reference: PathBuf,
    },
    /// Random-parameter comparison of the swarm and the baselines.
    Benchmark {
        /// 2x2, 2x3, 2x4 or continuous2.
        #[arg(long, default_value = "2x2")]
        family: String,
        #[arg(long, default_value_t = 100)]
        problems: usize,
        /// Comma-separated list of pso, multiplicative, fedorov-wynn.
        #[arg(long, default_value = "pso,multiplicative,fedorov-wynn")]
        algorithms: String,
        /// Baseline grid points per continuous factor.
        #[arg(long = "grid-points", default_value_t = 21)]
        grid_points: usize,
        #[command(flatten)]
        swarm: SwarmFlags,
        /// Write per-problem rows as CSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sweep (beta1, beta2) for a three-parameter problem.
    Sweep {
        problem: PathBuf,
        #[arg(long, value_enum, default_value_t = Mode::Misspec)]
        mode: Mode,
        #[arg(long, default_value_t = 1.0)]
        beta0: f64,
        /// Spacing of the (beta1, beta2) grid.
        #[arg(long, default_value_t = 0.5)]
        step: f64,
        /// True links compared in misspec mode (comma-separated).
        #[arg(long, default_value = "probit,loglog,cloglog")]
        links: String,
        #[command(flatten)]
        swarm: SwarmFlags,
        /// CSV output; existing rows are kept and skipped.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Mode {
    Misspec,
    MinimalSupport,
}

fn split_list<T: std::str::FromStr<Err = E>, E>(s: &str) -> Result<Vec<T>, E> {
    s.split(',')
        .map(str::trim)
        .filter(|x| !x.is_empty())
        .map(str::parse)
        .collect()
}

fn run(cli: Cli) -> Result<i32, CliError> {
    init_workers()?;
    match cli.command {
        Command::Find { problem, swarm, out } => {
            let (config, problem) = load_problem(&problem)?;
            let (_, outcome) = cmd_find(&config, &problem, &swarm.overrides(), out.as_deref())?;
            print!("{}", outcome.text);
            Ok(outcome.code)
        }
        Command::Verify {
            problem,
            design,
            resolution,
            eff_bound,
            out,
        } => {
            let (_, problem) = load_problem(&problem)?;
            let design = load_design(&design, &problem.space)?;
            let (_, outcome) = cmd_verify(&problem, &design, resolution, eff_bound, out.as_deref())?;
            print!("{}", outcome.text);
            Ok(outcome.code)
        }
        Command::Efficiency {
            problem,
            design,
            reference,
        } => {
            let (_, problem) = load_problem(&problem)?;
            let d = load_design(&design, &problem.space)?;
            let r = load_design(&reference, &problem.space)?;
            let (_, outcome) = cmd_efficiency(&problem, &d, &r)?;
            print!("{}", outcome.text);
            Ok(outcome.code)
        }
        Command::Benchmark {
            family,
            problems,
            algorithms,
            grid_points,
            swarm,
            out,
        } => {
            let family: Family = family.parse()?;
            let mut spec = BenchmarkSpec::new(family, problems, swarm.seed.unwrap_or(0));
            spec.algorithms = split_list::<Algorithm, _>(&algorithms)?;
            spec.grid_points = grid_points;
            spec.pso = PsoOverrides {
                seed: None,
                ..swarm.overrides()
            };
            let report = cmd_benchmark(&spec)?;
            print!("{}", report.render());
            if let Some(path) = out {
                write_text(&path, &report.to_csv())?;
            }
            Ok(exit::PASS)
        }
        Command::Sweep {
            problem,
            mode,
            beta0,
            step,
            links,
            swarm,
            out,
        } => {
            let (config, problem) = load_problem(&problem)?;
            let pso = config.pso_config(&swarm.overrides())?;
            let mode = match mode {
                Mode::Misspec => SweepMode::Misspec(split_list::<LinkKind, _>(&links)?),
                Mode::MinimalSupport => SweepMode::MinimalSupport,
            };
            let spec = SweepSpec::new(mode, beta0, step);
            let rows = cmd_sweep(&problem, &pso, &spec, out.as_deref())?;
            print!("{}", render_summary(&spec, &rows));
            Ok(exit::PASS)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("psodesign: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
