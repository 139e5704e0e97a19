use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use qrl::format::{state_to_json, test_to_json};
use qrl::gen::{random_dense_state, random_diagonal_state, random_qmlt, rng_for};
use qrl::{make_bernoulli, make_classical, make_tau, Bitstring, QSigmaPrefix, QuantumTest, Tolerances};
use qrl_cli::config::parse_tol;
use qrl_cli::{eval_state_against_test, run_suite, CliError, CliResult, ConfigFile, RunConfig, Suite};

#[derive(Parser)]
#[command(name = "qrl", version, about = "Finite-depth checks of quantum randomness tests")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Run a check suite and write its JSON and CSV reports.
    Run {
        #[arg(long)]
        suite: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        n_max: Option<usize>,
        #[arg(long)]
        count: Option<usize>,
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Tolerance override, e.g. `--tol nest=1e-7`; repeatable.
        #[arg(long = "tol", value_name = "KEY=VAL")]
        tol: Vec<String>,
        /// Also print the full report to stdout.
        #[arg(long, value_enum)]
        format: Option<Format>,
        /// TOML file with the same keys; flags take precedence.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Evaluate a state against a test at order δ.
    Eval {
        #[arg(long)]
        state: PathBuf,
        #[arg(long)]
        test: PathBuf,
        #[arg(long)]
        delta: f64,
        #[arg(long = "tol", value_name = "KEY=VAL")]
        tol: Vec<String>,
        #[arg(long, value_enum)]
        format: Option<Format>,
    },
    /// Write a state as JSON.
    GenState {
        #[arg(long, value_enum)]
        kind: StateKindArg,
        #[arg(long)]
        depth: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Bits of a classical state; shorter patterns repeat.
        #[arg(long)]
        bits: Option<String>,
        #[arg(long)]
        p: Option<f64>,
        #[arg(long, default_value_t = 2)]
        rank: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a quantum test as JSON.
    GenTest {
        #[arg(long, value_enum)]
        kind: TestKindArg,
        #[arg(long)]
        depth: usize,
        #[arg(long)]
        members: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Pattern whose prefixes give the cylinders; zeros by default.
        #[arg(long)]
        bits: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum StateKindArg {
    Tau,
    Classical,
    Bernoulli,
    Dense,
    Diagonal,
}

#[derive(Clone, Copy, ValueEnum)]
enum TestKindArg {
    /// Cylinders of the first `m` bits, a q-MLT.
    Cylinder,
    RandomQmlt,
}

fn tolerances(overrides: &[String]) -> CliResult<Tolerances> {
    let mut t = Tolerances::default();
    for s in overrides {
        let (k, v) = parse_tol(s)?;
        t.set(&k, v)?;
    }
    Ok(t)
}

fn emit(out: Option<&PathBuf>, text: &str) -> CliResult<()> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| CliError::io(path, e)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> CliResult<ExitCode> {
    match cli.command {
        Command::Run { suite, seed, n_max, count, delta, out, tol, format, config } => {
            let mut cfg = RunConfig::default();
            let mut format = format;
            if let Some(path) = &config {
                let file = ConfigFile::load(path)?;
                cfg.apply_file(&file)?;
                if format.is_none() {
                    format = match file.format.as_deref() {
                        None => None,
                        Some("json") => Some(Format::Json),
                        Some("csv") => Some(Format::Csv),
                        Some(f) => return Err(CliError::Config(format!("unknown format {f:?}"))),
                    };
                }
            }
            if let Some(s) = suite {
                cfg.suite = s.parse::<Suite>()?;
            }
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if n_max.is_some() {
                cfg.n_max = n_max;
            }
            if let Some(c) = count {
                cfg.instance_count = c;
            }
            if delta.is_some() {
                cfg.delta = delta;
            }
            if let Some(o) = out {
                cfg.output_dir = o;
            }
            for s in &tol {
                let (k, v) = parse_tol(s)?;
                cfg.tolerances.set(&k, v)?;
            }
            let report = run_suite(&cfg)?;
            match format {
                Some(Format::Json) => print!("{}", report.to_json()?),
                Some(Format::Csv) => print!("{}", report.to_csv()?),
                None => {}
            }
            for c in report.failures() {
                eprintln!("FAIL {}: {} (lhs {}, rhs {}, margin {:e})", c.instance, c.inequality, c.lhs, c.rhs, c.margin);
            }
            eprintln!(
                "{}: {} checks, {} passed, {} failed in {:.2}s; reports in {}",
                report.suite,
                report.summary.total,
                report.summary.passed,
                report.summary.failed,
                report.wall_time.as_secs_f64(),
                cfg.output_dir.display()
            );
            Ok(if report.passed() { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
        Command::Eval { state, test, delta, tol, format } => {
            let report = eval_state_against_test(&state, &test, delta, &tolerances(&tol)?)?;
            match format {
                Some(Format::Json) => println!("{}", serde_json::to_string_pretty(&report)?),
                Some(Format::Csv) => print!("{}", report.to_csv()?),
                None => print!("{}", report.to_text()),
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::GenState { kind, depth, seed, bits, p, rank, out } => {
            let mut rng = rng_for(seed, 0, 0);
            let rho = match kind {
                StateKindArg::Tau => make_tau(depth)?,
                StateKindArg::Classical => {
                    let pattern = bits.ok_or_else(|| CliError::Config("--bits is required for a classical state".into()))?;
                    make_classical(Bitstring::periodic(&pattern, depth)?, depth)?
                }
                StateKindArg::Bernoulli => {
                    let p = p.ok_or_else(|| CliError::Config("--p is required for a Bernoulli state".into()))?;
                    make_bernoulli(p, depth)?
                }
                StateKindArg::Dense => random_dense_state(&mut rng, depth, rank)?,
                StateKindArg::Diagonal => random_diagonal_state(&mut rng, depth)?,
            };
            emit(out.as_ref(), &(state_to_json(&rho)? + "\n"))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::GenTest { kind, depth, members, seed, bits, out } => {
            let tol = Tolerances::default();
            let t = match kind {
                TestKindArg::Cylinder => {
                    if members > depth {
                        return Err(CliError::Config(format!("{members} cylinder members need depth ≥ {members}")));
                    }
                    let x = Bitstring::periodic(bits.as_deref().unwrap_or("0"), depth)?;
                    let gs = (1..=members).map(|m| QSigmaPrefix::cylinder(x.prefix(m), depth)).collect::<Result<Vec<_>, _>>()?;
                    QuantumTest::qmlt(gs, &tol)?
                }
                TestKindArg::RandomQmlt => random_qmlt(&mut rng_for(seed, 0, 1), depth, members)?,
            };
            emit(out.as_ref(), &(test_to_json(&t)? + "\n"))?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
