//! Suite runner and report plumbing for the `qrl` command-line tool.
//!
//! A run draws every instance from streams derived from one seed, builds
//! the objects under test, checks each inequality, and writes
//! `<suite>.json` and `<suite>.csv`. The wall time goes to
//! `<suite>.timing.json` so that the reports themselves are reproducible.

use std::time::Instant;

pub mod config;
pub mod error;
pub mod eval;
pub mod report;
pub mod suites;

pub use config::{ConfigFile, RunConfig, Suite};
pub use error::{CliError, CliResult};
pub use eval::{eval_state_against_test, evaluate, EvalReport};
pub use report::{Summary, SuiteReport};

/// Runs every family of `cfg.suite`, without writing anything.
pub fn execute(cfg: &RunConfig) -> CliResult<SuiteReport> {
    cfg.validate()?;
    let started = Instant::now();
    let ctx = suites::Ctx::from_config(cfg);
    let mut checks = Vec::new();
    for family in suites::families_of(cfg.suite) {
        checks.extend((family.run)(&ctx, cfg.instance_count)?);
    }
    checks.sort_by(|a, b| a.instance.cmp(&b.instance));
    Ok(SuiteReport {
        suite: cfg.suite.name().to_string(),
        seed: cfg.seed,
        n_max: cfg.n_max,
        instance_count: cfg.instance_count,
        delta: cfg.delta,
        tolerances: cfg.tolerances,
        summary: Summary::of(&checks),
        checks,
        wall_time: started.elapsed(),
    })
}

/// Runs the suite and writes its reports into `cfg.output_dir`.
pub fn run_suite(cfg: &RunConfig) -> CliResult<SuiteReport> {
    let report = execute(cfg)?;
    report.write(&cfg.output_dir)?;
    Ok(report)
}
