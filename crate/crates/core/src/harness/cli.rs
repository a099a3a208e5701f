use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use super::counterexample::run_counterexamples;
use super::generate::{gen_experiment, ExperimentKind, ExperimentSpec};
use super::race::{entries_for, race_experiment, race_problem, RaceSummary, RACE_ITERS_PER_COORD};
use super::verify::verify_all;
use crate::analysis::{rate_table, ConvexityConstants};
use crate::descent::{run, write_csv, RunOptions, StepStrategy, DEFAULT_TOL};
use crate::error::{Error, Result};
use crate::problems::{load_manifest, Problem};
use crate::rules::{ErrorSchedule, RuleKind, SelectionRule};
use crate::tracker::Backend;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "greedycd", version, about = "Greedy and randomized coordinate descent: runs, races, rate bounds and checks")]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic problem and write Matrix Market files plus a JSON manifest.
    Gen {
        #[command(flatten)]
        source: SourceArgs,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run one rule and emit its trace as CSV.
    Run {
        #[command(flatten)]
        source: SourceArgs,
        /// Selection rule.
        #[arg(long, value_parser = parse_rule)]
        rule: RuleKind,
        #[command(flatten)]
        solver: SolverArgs,
        /// Output CSV file (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run several rules from the same start over several seeds and rank them.
    Race {
        #[command(flatten)]
        source: SourceArgs,
        /// Comma-separated selection rules.
        #[arg(long, value_delimiter = ',', value_parser = parse_rule, required = true)]
        rules: Vec<RuleKind>,
        /// Number of seeds, starting at --seed.
        #[arg(long, default_value_t = 1)]
        seeds: u64,
        #[command(flatten)]
        solver: SolverArgs,
        /// Directory for per-seed CSV traces and the summary.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the convergence-rate table for a problem.
    Bounds {
        #[command(flatten)]
        source: SourceArgs,
        /// Strong-convexity lower bound, required for non-quadratic problems.
        #[arg(long)]
        mu: Option<f64>,
        /// Comma-separated multiplicative errors for approximate GS lines.
        #[arg(long, value_delimiter = ',')]
        eps: Vec<f64>,
        #[arg(long, value_enum, default_value_t = Format::Both)]
        format: Format,
    },
    /// Run the fixed counterexamples for the proximal GS variants.
    Counterexample,
    /// Run the invariant suite on small instances.
    Verify,
}

#[derive(Debug, Args)]
struct SourceArgs {
    /// Synthetic experiment to generate.
    #[arg(long, value_parser = parse_kind, conflicts_with = "manifest")]
    problem: Option<ExperimentKind>,
    /// Load a problem from a manifest written by `gen`.
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Row count (samples); default depends on --problem.
    #[arg(long)]
    m: Option<usize>,
    /// Column count, or points for two_moons.
    #[arg(long)]
    n: Option<usize>,
    /// Regularization weight (ℓ₂, or ℓ₁ for l1_underdet_ls).
    #[arg(long)]
    lambda: Option<f64>,
    /// Instance seed; also the master PRNG seed for randomized rules.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Use the reduced desk-scale sizes instead of the full-size defaults.
    #[arg(long)]
    desk: bool,
}

#[derive(Debug, Args)]
struct SolverArgs {
    /// Step strategy; defaults per rule.
    #[arg(long, value_parser = parse_step)]
    step: Option<StepStrategy>,
    #[arg(long, value_enum, default_value_t = BackendArg::Heap)]
    backend: BackendArg,
    /// Iteration cap (run: 50n, race: 5n).
    #[arg(long)]
    iters: Option<usize>,
    /// Stop when the residual ∞-norm falls below this.
    #[arg(long, default_value_t = DEFAULT_TOL)]
    tol: f64,
    /// Starting point: a constant, or a file of whitespace/comma-separated values.
    #[arg(long)]
    x0: Option<String>,
    /// Constant error level for the approximate GS rules.
    #[arg(long, default_value_t = 0.0)]
    eps: f64,
    /// Skip the per-iteration progress-bound assertions.
    #[arg(long)]
    no_check: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum BackendArg {
    Heap,
    Scan,
    Nns,
}

impl From<BackendArg> for Backend {
    fn from(b: BackendArg) -> Self {
        match b {
            BackendArg::Heap => Backend::Heap,
            BackendArg::Scan => Backend::Scan,
            BackendArg::Nns => Backend::Nns,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Csv,
    Both,
}

fn parse_rule(s: &str) -> std::result::Result<RuleKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_step(s: &str) -> std::result::Result<StepStrategy, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_kind(s: &str) -> std::result::Result<ExperimentKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

impl SourceArgs {
    fn spec(&self) -> Result<ExperimentSpec> {
        let kind = self.problem.ok_or_else(|| Error::invalid("one of --problem or --manifest is required"))?;
        let base = if self.desk {
            ExperimentSpec::desk(kind, self.seed)
        } else {
            ExperimentSpec::full(kind, self.seed)
        };
        Ok(ExperimentSpec {
            m: self.m.unwrap_or(base.m),
            n: self.n.unwrap_or(base.n),
            lambda: self.lambda.unwrap_or(base.lambda),
            ..base
        })
    }

    /// Problem and default start point.
    fn load(&self) -> Result<(Problem, Vec<f64>)> {
        match &self.manifest {
            Some(path) => {
                let (m, p) = load_manifest(path)?;
                let x0 = m.x0.unwrap_or_else(|| vec![0.0; p.dim()]);
                Ok((p, x0))
            }
            None => {
                let e = gen_experiment(&self.spec()?)?;
                Ok((e.problem, e.x0))
            }
        }
    }
}

impl SolverArgs {
    fn options(&self, default_iters: Option<usize>) -> RunOptions {
        RunOptions {
            max_iters: self.iters.or(default_iters),
            tol: self.tol,
            backend: self.backend.into(),
            check_bounds: !self.no_check,
            ..RunOptions::default()
        }
    }

    fn x0(&self, default: Vec<f64>) -> Result<Vec<f64>> {
        let Some(s) = &self.x0 else { return Ok(default) };
        if let Ok(c) = s.parse::<f64>() {
            return Ok(vec![c; default.len()]);
        }
        let text = fs::read_to_string(s)?;
        let x = text
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|t| !t.is_empty())
            .map(|t| t.parse::<f64>().map_err(|e| Error::invalid(format!("--x0 entry `{t}`: {e}"))))
            .collect::<Result<Vec<f64>>>()?;
        if x.len() != default.len() {
            return Err(Error::DimensionMismatch { expected: default.len(), got: x.len() });
        }
        Ok(x)
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidArgument(_) | Error::Incompatible(_) | Error::DimensionMismatch { .. } => EXIT_USAGE,
        _ => EXIT_FAILED,
    }
}

fn csv_file(path: &Path, records: &[crate::descent::IterRecord]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_csv(records, &mut w)?;
    w.flush()?;
    Ok(())
}

fn execute(cmd: Command, out: &mut dyn Write) -> Result<i32> {
    match cmd {
        Command::Gen { source, out: dir } => {
            let exp = gen_experiment(&source.spec()?)?;
            let path = exp.write_files(&dir)?;
            writeln!(out, "{}", path.display())?;
        }
        Command::Run { source, rule, solver, out: path } => {
            let (problem, x0) = source.load()?;
            let x0 = solver.x0(x0)?;
            let step = solver.step.unwrap_or_else(|| StepStrategy::default_for(rule));
            let opts = solver.options(None);
            let mut sel = SelectionRule::new(rule, source.seed).with_schedule(ErrorSchedule::Constant(solver.eps));
            let tr = run(&problem, &mut sel, step, &x0, &opts)?;
            match path {
                Some(p) => csv_file(&p, &tr.records)?,
                None => write_csv(&tr.records, &mut *out)?,
            }
        }
        Command::Race { source, rules, seeds, solver, out: dir } => {
            let seed_list: Vec<u64> = (source.seed..source.seed + seeds).collect();
            let (entries, runs) = match (&source.manifest, source.problem) {
                (Some(_), _) => {
                    let (problem, x0) = source.load()?;
                    let x0 = solver.x0(x0)?;
                    let opts = solver.options(Some(RACE_ITERS_PER_COORD * problem.dim()));
                    let entries = entries_for(&rules, problem.is_composite(), solver.step, solver.eps);
                    let runs = seed_list
                        .iter()
                        .map(|&s| race_problem(&problem, &x0, &entries, &opts, s))
                        .collect::<Result<Vec<_>>>()?;
                    (entries, runs)
                }
                _ => {
                    let spec = source.spec()?;
                    if solver.x0.is_some() {
                        return Err(Error::invalid("--x0 with --problem races is not supported; use gen + --manifest"));
                    }
                    race_experiment(&spec, &rules, solver.step, solver.eps, &seed_list, &solver.options(None))?
                }
            };
            let summary = RaceSummary::from_runs(&entries, &runs);
            if let Some(dir) = dir {
                fs::create_dir_all(&dir)?;
                for r in &runs {
                    for (e, t) in entries.iter().zip(&r.traces) {
                        csv_file(&dir.join(format!("{}_seed{}.csv", e.rule, r.seed)), &t.records)?;
                    }
                }
                fs::write(dir.join("summary.txt"), summary.to_text())?;
                fs::write(dir.join("summary.json"), serde_json::to_string_pretty(&summary)?)?;
            }
            write!(out, "{}", summary.to_text())?;
        }
        Command::Bounds { source, mu, eps, format } => {
            let (problem, _) = source.load()?;
            let lips = problem.f().lipschitz();
            let consts = ConvexityConstants::for_problem(&problem, mu)?;
            let report = rate_table(&consts, lips, &eps)?;
            if format != Format::Csv {
                write!(out, "{}", report.to_text())?;
            }
            if format == Format::Both {
                writeln!(out)?;
            }
            if format != Format::Text {
                write!(out, "{}", report.to_csv())?;
            }
        }
        Command::Counterexample => {
            let r = run_counterexamples()?;
            write!(out, "{}", r.to_text())?;
            if !r.passed() {
                return Ok(EXIT_FAILED);
            }
        }
        Command::Verify => {
            let r = verify_all();
            write!(out, "{}", r.to_text())?;
            if !r.passed() {
                return Ok(EXIT_FAILED);
            }
        }
    }
    Ok(EXIT_OK)
}

/// Parses `argv` (program name first) and runs the command, writing results
/// to `out` and diagnostics to `err`.
pub fn cli_main_with<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let target: &mut dyn Write = if e.use_stderr() { err } else { out };
            let _ = write!(target, "{}", e.render());
            return code;
        }
    };
    match execute(cli.cmd, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

/// [`cli_main_with`] on the process's stdout and stderr.
pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let (stdout, stderr) = (io::stdout(), io::stderr());
    let code = cli_main_with(argv, &mut stdout.lock(), &mut stderr.lock());
    let _ = io::stdout().flush();
    code
}
