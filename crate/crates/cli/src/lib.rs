//! Command-line front end: problem files, design tables, and the `find`,
//! `verify`, `efficiency`, `benchmark` and `sweep` commands.

pub mod benchmark;
pub mod commands;
pub mod config;
pub mod design_io;
pub mod error;
pub mod sweep;

pub use commands::{cmd_efficiency, cmd_find, cmd_verify, render_design, Outcome, VerifyResult};
pub use config::{load_problem, ProblemConfig, PsoOverrides};
pub use design_io::{load_design, DesignFile};
pub use error::{exit, CliError};

/// Environment variable holding the worker-thread count.
pub const WORKERS_ENV: &str = "PSODESIGN_WORKERS";

/// Sizes the global thread pool from [`WORKERS_ENV`] if it is set.
pub fn init_workers() -> Result<(), CliError> {
    let Ok(v) = std::env::var(WORKERS_ENV) else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Config(format!("{WORKERS_ENV} must be a positive integer, got `{v}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))
}
