//! Argument parsing and command execution for the `gld` binary.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use anyhow::Context;
use clap::error::{ContextKind, ContextValue, ErrorKind};
use clap::{Parser, Subcommand, ValueEnum};
use gld_core::{
    run_convergence_study, run_stability_study, run_truncation_study, solve_model_with,
    write_snapshot, BoundaryPolicy, DtRule, ErrorAccumulator, ErrorNorm, InterpOrder,
    ManufacturedProblem, Model, SchemeConfig, StartMode, StudyOptions, EXAMPLE_NAMES,
};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum CliError {
    #[error("unknown example '{0}' (expected one of: {list})", list = EXAMPLE_NAMES.join(", "))]
    UnknownExample(String),
    #[error("invalid combination: {0}")]
    InvalidCombination(String),
    #[error("missing value for {0}")]
    MissingValue(String),
    #[error("invalid value '{value}' for {flag}")]
    InvalidValue { flag: String, value: String },
    /// Help or version text requested; not a failure.
    #[error("{0}")]
    Info(String),
    #[error("{0}")]
    Usage(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Solve,
    Converge,
    Stability,
    Truncation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Markdown,
}

/// Fully resolved run description. Every field carries a concrete value.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub command: Command,
    pub example: String,
    pub order: InterpOrder,
    pub rule: DtRule,
    /// Grid sizes; a single entry for `solve` and `stability`.
    pub n_list: Vec<usize>,
    pub model: Model,
    pub boundary: BoundaryPolicy,
    pub norm: ErrorNorm,
    pub start: StartMode,
    pub k_max: u32,
    pub format: Format,
    pub output: Option<PathBuf>,
    /// Write a snapshot every this many steps; 0 disables.
    pub snapshot: usize,
    pub snapshot_dir: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SchemeArg {
    S1,
    S2,
    S1p,
    S2p,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BoundaryArg {
    Inflow,
    Neumann,
    Clamped,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum NormArg {
    Maxmax,
    L2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum StartArg {
    Euler,
    Exact,
}

#[derive(Debug, Parser)]
#[command(
    name = "gld",
    version,
    about = "Semi-Lagrangian solver for the upper-convected derivative"
)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Debug, Subcommand)]
enum Sub {
    /// Single run; prints the error against the exact solution.
    Solve(RunArgs),
    /// Errors and observed orders over a sequence of grids.
    Converge(RunArgs),
    /// Fixed grid, successively halved time steps.
    Stability(RunArgs),
    /// Residual of the discrete operator applied to the exact solution.
    Truncation(RunArgs),
}

#[derive(Debug, clap::Args)]
struct RunArgs {
    #[arg(long)]
    example: Option<String>,
    /// s1/s2: p = 1/2 for the convected derivative; s1p/s2p: the Oldroyd-B variants.
    #[arg(long, value_enum)]
    scheme: Option<SchemeArg>,
    /// Interpolation degree (1 or 2).
    #[arg(long)]
    p: Option<u32>,
    /// dt = c sqrt(h).
    #[arg(long)]
    c: Option<String>,
    /// dt = c' h.
    #[arg(long)]
    cprime: Option<String>,
    /// Intervals per axis, comma separated.
    #[arg(long = "N", value_delimiter = ',')]
    n: Option<Vec<usize>>,
    /// Grid spacing as a unit fraction, e.g. 1/40.
    #[arg(long)]
    h: Option<String>,
    /// Number of time-step halvings for `stability`.
    #[arg(long)]
    kmax: Option<u32>,
    #[arg(long = "Wi")]
    wi: Option<String>,
    #[arg(long)]
    beta: Option<String>,
    #[arg(long, value_enum)]
    boundary: Option<BoundaryArg>,
    #[arg(long, value_enum)]
    norm: Option<NormArg>,
    #[arg(long, value_enum)]
    start: Option<StartArg>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    snapshot: usize,
    #[arg(long, default_value = "snapshots")]
    snapshot_dir: PathBuf,
}

/// Parses `a/b` or a decimal literal.
pub fn parse_number(flag: &str, text: &str) -> Result<f64, CliError> {
    let bad = || CliError::InvalidValue {
        flag: flag.to_string(),
        value: text.to_string(),
    };
    let v = match text.split_once('/') {
        Some((a, b)) => {
            let a: f64 = a.trim().parse().map_err(|_| bad())?;
            let b: f64 = b.trim().parse().map_err(|_| bad())?;
            a / b
        }
        None => text.trim().parse().map_err(|_| bad())?,
    };
    if v.is_finite() {
        Ok(v)
    } else {
        Err(bad())
    }
}

/// Number of intervals for a unit-fraction spacing such as `1/40`.
fn parse_spacing(text: &str) -> Result<usize, CliError> {
    let bad = || CliError::InvalidValue {
        flag: "--h".into(),
        value: text.to_string(),
    };
    let (a, b) = text.split_once('/').ok_or_else(bad)?;
    let a: usize = a.trim().parse().map_err(|_| bad())?;
    let b: usize = b.trim().parse().map_err(|_| bad())?;
    if a == 0 || !b.is_multiple_of(a) {
        return Err(bad());
    }
    Ok(b / a)
}

fn from_clap(err: clap::Error) -> CliError {
    match err.kind() {
        ErrorKind::DisplayHelp
        | ErrorKind::DisplayVersion
        | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => {
            CliError::Info(err.render().to_string())
        }
        ErrorKind::InvalidValue | ErrorKind::NoEquals => {
            let flag = match err.get(ContextKind::InvalidArg) {
                Some(ContextValue::String(s)) => {
                    s.split_whitespace().next().unwrap_or(s).to_string()
                }
                _ => String::new(),
            };
            match err.get(ContextKind::InvalidValue) {
                Some(ContextValue::String(v)) if !v.is_empty() => CliError::InvalidValue {
                    flag,
                    value: v.clone(),
                },
                _ => CliError::MissingValue(flag),
            }
        }
        _ => CliError::Usage(err.render().to_string()),
    }
}

fn default_n_list(command: Command, dim: usize) -> Vec<usize> {
    match command {
        Command::Solve => vec![10],
        Command::Stability => vec![40],
        Command::Converge | Command::Truncation if dim == 1 => vec![10, 20, 40, 80, 160, 320],
        Command::Converge | Command::Truncation => vec![10, 20, 40, 80],
    }
}

/// Parses the full argument vector (including the program name).
pub fn parse_args<I, T>(argv: I) -> Result<RunSpec, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv).map_err(from_clap)?;
    let (command, args) = match cli.command {
        Sub::Solve(a) => (Command::Solve, a),
        Sub::Converge(a) => (Command::Converge, a),
        Sub::Stability(a) => (Command::Stability, a),
        Sub::Truncation(a) => (Command::Truncation, a),
    };

    let example = args.example.clone().unwrap_or_else(|| {
        if command == Command::Stability {
            "ex1d-ii"
        } else {
            "ex1d-i"
        }
        .to_string()
    });
    let problem = ManufacturedProblem::named(&example)
        .map_err(|_| CliError::UnknownExample(example.clone()))?;
    let oldroyd = matches!(problem.model(), Model::OldroydB { .. });

    let scheme_degree = match args.scheme {
        Some(SchemeArg::S1 | SchemeArg::S2) if oldroyd => {
            return Err(CliError::InvalidCombination(format!(
                "--scheme s1/s2 apply to the convected-derivative examples; use s1p/s2p for {example}"
            )))
        }
        Some(SchemeArg::S1p | SchemeArg::S2p) if !oldroyd => {
            return Err(CliError::InvalidCombination(format!(
                "--scheme s1p/s2p require an Oldroyd-B example, got {example}"
            )))
        }
        Some(SchemeArg::S1 | SchemeArg::S1p) => Some(1),
        Some(SchemeArg::S2 | SchemeArg::S2p) => Some(2),
        None => None,
    };
    let degree = match (scheme_degree, args.p) {
        (Some(a), Some(b)) if a != b => {
            return Err(CliError::InvalidCombination(format!(
                "--scheme implies p={a} but --p {b} was given"
            )))
        }
        (Some(a), _) => a,
        (None, Some(b)) => b,
        (None, None) => 1,
    };
    let order = InterpOrder::from_degree(degree).map_err(|_| CliError::InvalidValue {
        flag: "--p".into(),
        value: degree.to_string(),
    })?;

    let rule = match (&args.c, &args.cprime) {
        (Some(_), Some(_)) => {
            return Err(CliError::InvalidCombination(
                "--c and --cprime are mutually exclusive".into(),
            ))
        }
        (Some(c), None) => DtRule::SqrtH(parse_number("--c", c)?),
        (None, Some(c)) => DtRule::LinearH(parse_number("--cprime", c)?),
        (None, None) => problem.default_rule(order),
    };
    let positive = match rule {
        DtRule::SqrtH(c) | DtRule::LinearH(c) => c > 0.0,
    };
    if !positive {
        return Err(CliError::InvalidCombination(
            "time-step constant must be positive".into(),
        ));
    }

    let n_list = match (&args.n, &args.h) {
        (Some(_), Some(_)) => {
            return Err(CliError::InvalidCombination(
                "--N and --h are mutually exclusive".into(),
            ))
        }
        (Some(n), None) => n.clone(),
        (None, Some(h)) => vec![parse_spacing(h)?],
        (None, None) => default_n_list(command, problem.dim()),
    };
    if n_list.is_empty() || n_list.contains(&0) {
        return Err(CliError::InvalidCombination(
            "grid sizes must be positive".into(),
        ));
    }
    if matches!(command, Command::Solve | Command::Stability) && n_list.len() != 1 {
        return Err(CliError::InvalidCombination(
            "solve and stability take a single grid size".into(),
        ));
    }
    if matches!(command, Command::Converge | Command::Truncation)
        && n_list.windows(2).any(|w| w[0] >= w[1])
    {
        return Err(CliError::InvalidCombination(
            "--N must be strictly increasing".into(),
        ));
    }
    if order == InterpOrder::Quadratic {
        if let Some(n) = n_list.iter().find(|n| *n % 2 != 0) {
            return Err(CliError::InvalidCombination(format!(
                "p=2 requires even N, got {n}"
            )));
        }
    }

    let model = match problem.model() {
        Model::PureUctd => {
            if args.wi.is_some() || args.beta.is_some() {
                return Err(CliError::InvalidCombination(format!(
                    "--Wi/--beta apply to Oldroyd-B examples only, got {example}"
                )));
            }
            Model::PureUctd
        }
        Model::OldroydB { weissenberg, beta } => {
            let weissenberg = match &args.wi {
                Some(w) => parse_number("--Wi", w)?,
                None => weissenberg,
            };
            let beta = match &args.beta {
                Some(b) => parse_number("--beta", b)?,
                None => beta,
            };
            if weissenberg <= 0.0 || !(0.0..1.0).contains(&beta) || beta == 0.0 {
                return Err(CliError::InvalidCombination(
                    "need Wi > 0 and 0 < beta < 1".into(),
                ));
            }
            Model::OldroydB { weissenberg, beta }
        }
    };

    let k_max = args.kmax.unwrap_or(6);
    if command == Command::Stability && k_max == 0 {
        return Err(CliError::InvalidCombination(
            "--kmax must be at least 1".into(),
        ));
    }
    if args.snapshot > 0 && command != Command::Solve {
        return Err(CliError::InvalidCombination(
            "--snapshot applies to solve only".into(),
        ));
    }

    Ok(RunSpec {
        command,
        example,
        order,
        rule,
        n_list,
        model,
        boundary: match args.boundary {
            None | Some(BoundaryArg::Inflow) => BoundaryPolicy::InflowExact,
            Some(BoundaryArg::Neumann) => BoundaryPolicy::NeumannOutflow,
            Some(BoundaryArg::Clamped) => BoundaryPolicy::ClampedNearest,
        },
        norm: match args.norm {
            None | Some(NormArg::Maxmax) => ErrorNorm::MaxMax,
            Some(NormArg::L2) => ErrorNorm::DiscreteL2,
        },
        start: match args.start {
            None | Some(StartArg::Euler) => StartMode::BackwardEuler,
            Some(StartArg::Exact) => StartMode::Exact,
        },
        k_max,
        format: args.format,
        output: args.output,
        snapshot: args.snapshot,
        snapshot_dir: args.snapshot_dir,
    })
}

impl RunSpec {
    fn problem(&self) -> anyhow::Result<ManufacturedProblem> {
        Ok(ManufacturedProblem::named(&self.example)?.with_model(self.model))
    }

    fn options(&self) -> StudyOptions {
        StudyOptions {
            norm: self.norm,
            start: Some(self.start),
            boundary: Some(self.boundary),
        }
    }
}

fn render(
    format: Format,
    csv: impl FnOnce(&mut Vec<u8>) -> gld_core::Result<()>,
    markdown: String,
) -> anyhow::Result<String> {
    match format {
        Format::Csv => {
            let mut buf = Vec::new();
            csv(&mut buf)?;
            Ok(String::from_utf8(buf)?)
        }
        Format::Markdown => Ok(markdown),
    }
}

fn run_solve(spec: &RunSpec, problem: &ManufacturedProblem) -> anyhow::Result<String> {
    let n = spec.n_list[0];
    let grid = problem.grid(n, spec.order)?;
    let dt = spec.rule.dt(1.0 / n as f64);
    let config = SchemeConfig::new(spec.order, dt, problem.final_time())
        .with_model(spec.model)
        .with_boundary(spec.boundary)
        .with_start(spec.start);
    let data = problem.problem_data();
    let exact = problem.exact().clone();
    let mut acc = ErrorAccumulator::new(spec.norm, problem.dim());
    if spec.snapshot > 0 {
        fs::create_dir_all(&spec.snapshot_dir)
            .with_context(|| format!("creating {}", spec.snapshot_dir.display()))?;
    }
    let steps = config.step_count();
    solve_model_with(&data, &config, &grid, |step, t, field| {
        if step >= 1 {
            acc.observe(field, |x, t| exact.value(x, t), t);
        }
        if spec.snapshot > 0 && (step % spec.snapshot == 0 || step == steps) {
            let path = spec
                .snapshot_dir
                .join(format!("{}_N{}_step{:06}.csv", spec.example, n, step));
            let file = File::create(&path)
                .map_err(|e| gld_core::GldError::Csv(format!("{}: {e}", path.display())))?;
            write_snapshot(field, BufWriter::new(file))?;
        }
        Ok(())
    })
    .with_context(|| format!("solving {} with N={n}", spec.example))?;

    let comps = problem.components();
    let mut header = vec!["N".to_string(), "dt".to_string(), "steps".to_string()];
    header.extend(comps.iter().map(|c| format!("E{}", c.label())));
    let mut row = vec![n.to_string(), format!("{dt:.6e}"), steps.to_string()];
    row.extend(acc.errors().iter().map(|e| format!("{e:.6e}")));
    Ok(match spec.format {
        Format::Csv => format!("{}\n{}\n", header.join(","), row.join(",")),
        Format::Markdown => format!(
            "| {} |\n|{}|\n| {} |\n",
            header.join(" | "),
            vec!["---:"; header.len()].join("|"),
            row.join(" | ")
        ),
    })
}

/// Runs a parsed command; the rendered table is returned and also written to
/// `spec.output` when set.
pub fn execute(spec: &RunSpec) -> anyhow::Result<String> {
    let problem = spec.problem()?;
    let text = match spec.command {
        Command::Solve => run_solve(spec, &problem)?,
        Command::Converge => {
            let table = run_convergence_study(
                &problem,
                spec.order,
                spec.rule,
                &spec.n_list,
                &spec.options(),
            )
            .with_context(|| format!("convergence study for {}", spec.example))?;
            for row in &table.rows {
                if let Some(f) = &row.failure {
                    log::error!("{} N={}: {f}", spec.example, row.n);
                }
            }
            if let Some(row) = table.rows.iter().find(|r| r.failure.is_some()) {
                anyhow::bail!(
                    "{} N={}: {}",
                    spec.example,
                    row.n,
                    row.failure.as_deref().unwrap_or_default()
                );
            }
            render(spec.format, |w| table.to_csv(w), table.to_markdown())?
        }
        Command::Stability => {
            let table = run_stability_study(
                &problem,
                spec.order,
                spec.rule,
                spec.n_list[0],
                spec.k_max,
                &spec.options(),
            )
            .with_context(|| {
                format!(
                    "stability study for {} h=1/{}",
                    spec.example, spec.n_list[0]
                )
            })?;
            render(spec.format, |w| table.to_csv(w), table.to_markdown())?
        }
        Command::Truncation => {
            let table = run_truncation_study(&problem, spec.order, spec.rule, &spec.n_list)
                .with_context(|| format!("truncation study for {}", spec.example))?;
            render(spec.format, |w| table.to_csv(w), table.to_markdown())?
        }
    };
    if let Some(path) = &spec.output {
        fs::write(path, &text).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(text)
}

/// Configures the global worker pool from `GLD_THREADS`, if set.
pub fn configure_threads() -> anyhow::Result<()> {
    if let Ok(v) = std::env::var("GLD_THREADS") {
        let n: usize = v.parse().with_context(|| format!("GLD_THREADS='{v}'"))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()?;
    }
    Ok(())
}

/// Writes the table to standard output.
pub fn emit(text: &str) -> io::Result<()> {
    let mut out = io::stdout().lock();
    out.write_all(text.as_bytes())?;
    out.flush()
}
