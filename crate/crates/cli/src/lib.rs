//! Command-line front end for the `devmean` library.
//!
//! [`main_with`] is the whole program: it parses arguments (merging an
//! optional `--config` file), runs the command, writes CSV or JSON, and
//! returns the exit code. Errors go to standard error as one-line JSON
//! objects `{"error": kind, "message": text}`.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use devmean::{
    asymptotic_constants, check_deviation_axioms_default, deviation_mean, ld_rate, population_mean, run_clt, run_ld,
    run_lil, run_slln, Checkpoints, Deviation, DistributionSpec, ExperimentConfig, QuadratureConfig,
};

pub mod golden;
pub mod registry;
pub mod table;

pub use golden::{verify_paper, GoldenCheck};
pub use table::Cell;
use table::Table;

/// Process exit codes.
pub const EXIT_OK: i32 = 0;
pub const EXIT_COMPUTE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Compute(#[from] devmean::Error),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Compute(_) | CliError::Io(_) => EXIT_COMPUTE,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "UsageError",
            CliError::Compute(e) => e.kind(),
            CliError::Io(_) => "IoError",
        }
    }

    /// The single-line JSON object written to standard error.
    pub fn to_json_line(&self) -> String {
        serde_json::json!({ "error": self.kind(), "message": self.to_string() }).to_string()
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Experiment {
    Slln,
    Clt,
    Lil,
    Ld,
}

#[derive(Parser, Debug)]
#[command(name = "devmean", version, about = "Deviation means, their limit constants and Monte Carlo checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Deviation mean of a finite sample.
    #[command(args_override_self = true)]
    Mean(Opts),
    /// Deviation mean of a distribution.
    #[command(args_override_self = true)]
    PopulationMean(Opts),
    /// CLT variance and LIL constant.
    #[command(args_override_self = true)]
    Constants(Opts),
    /// Large-deviation rate at a threshold.
    #[command(args_override_self = true)]
    LdRate(Opts),
    /// Monte Carlo experiment.
    #[command(args_override_self = true)]
    Simulate {
        #[arg(value_enum)]
        experiment: Experiment,
        #[command(flatten)]
        opts: Opts,
    },
    /// Grid check of the deviation axioms.
    #[command(args_override_self = true)]
    Axioms(Opts),
    /// Reference-value suite; exit 0 iff every check passes.
    #[command(args_override_self = true)]
    VerifyPaper(Opts),
}

#[derive(Args, Debug, Default, Clone)]
struct Opts {
    /// Deviation, e.g. `power:p=2`.
    #[arg(long)]
    deviation: Option<String>,
    /// Distribution, e.g. `exponential:rate=1`.
    #[arg(long)]
    distribution: Option<String>,
    /// Comma-separated sample.
    #[arg(long, allow_hyphen_values = true)]
    data: Option<String>,
    /// Threshold for large-deviation commands.
    #[arg(long, allow_hyphen_values = true)]
    x: Option<String>,
    /// Sample size (clt), trajectory length (lil) or largest exact n (ld).
    #[arg(long)]
    n: Option<usize>,
    /// Comma-separated increasing sample sizes.
    #[arg(long)]
    n_list: Option<String>,
    #[arg(long)]
    replications: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    threads: Option<usize>,
    /// File of `key=value` lines mirroring the flags; flags win.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output file (default: standard output).
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

/// The validated command line.
#[derive(Debug, Clone, PartialEq)]
pub enum CommandKind {
    Mean,
    PopulationMean,
    Constants,
    LdRate,
    Simulate(Experiment),
    Axioms,
    VerifyPaper,
}

/// Defaults used when a flag is absent.
pub const DEFAULT_SEED: u64 = 1;
pub const DEFAULT_REPLICATIONS: usize = 100;
pub const DEFAULT_N_LIST: [usize; 3] = [100, 1000, 10_000];
pub const DEFAULT_CLT_N: usize = 1000;
pub const DEFAULT_LIL_N: usize = 1_000_000;
pub const DEFAULT_LD_N: usize = 500;

#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub command: CommandKind,
    pub deviation: Option<String>,
    pub distribution: Option<String>,
    pub data: Option<Vec<f64>>,
    pub x: Option<f64>,
    pub n: Option<usize>,
    pub n_list: Option<Vec<usize>>,
    pub replications: usize,
    pub seed: u64,
    pub threads: Option<usize>,
    pub output: Option<PathBuf>,
    pub format: Format,
}

const CONFIG_KEYS: &[&str] =
    &["deviation", "distribution", "data", "x", "n", "n-list", "replications", "seed", "threads", "output", "format"];

/// Reads a `key=value` config file into `--key=value` arguments. Blank
/// lines and lines starting with `#` are skipped; `_` in keys reads as `-`.
fn config_args(path: &Path) -> Result<Vec<OsString>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("{}:{}: expected key=value", path.display(), i + 1)))?;
        let key = k.trim().replace('_', "-");
        if !CONFIG_KEYS.contains(&key.as_str()) {
            return Err(CliError::Usage(format!("{}:{}: unknown key `{}`", path.display(), i + 1, k.trim())));
        }
        out.push(OsString::from(format!("--{key}={}", v.trim())));
    }
    Ok(out)
}

fn find_config(args: &[OsString]) -> Option<PathBuf> {
    let mut it = args.iter();
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            return it.next().map(PathBuf::from);
        }
        if let Some(v) = s.strip_prefix("--config=") {
            return Some(PathBuf::from(v));
        }
    }
    None
}

fn parse_list<T: std::str::FromStr>(flag: &str, s: &str) -> Result<Vec<T>, CliError> {
    s.split(',')
        .map(|v| {
            v.trim().parse::<T>().map_err(|_| CliError::Usage(format!("--{flag}: `{}` is not a number", v.trim())))
        })
        .collect()
}

/// Outcome of argument parsing: a spec to run, or text (help, version) to
/// print before exiting successfully.
#[derive(Debug)]
pub enum Parsed {
    Run(Box<RunSpec>),
    Print(String),
}

/// Parses `argv` (program name first). Values from `--config` are applied
/// first so that explicit flags override them.
pub fn parse_args<I, T>(argv: I) -> Result<Parsed, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let mut args: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    if let Some(path) = find_config(&args[1.min(args.len())..]) {
        let extra = config_args(&path)?;
        let at = 2.min(args.len());
        args.splice(at..at, extra);
    }
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => Ok(Parsed::Print(e.render().to_string())),
                _ => {
                    let text = e.render().to_string();
                    let first = text.lines().next().unwrap_or("invalid arguments").trim_start_matches("error: ");
                    Err(CliError::Usage(format!("{first} (see `devmean --help`)")))
                }
            };
        }
    };
    let (command, opts) = match cli.command {
        Command::Mean(o) => (CommandKind::Mean, o),
        Command::PopulationMean(o) => (CommandKind::PopulationMean, o),
        Command::Constants(o) => (CommandKind::Constants, o),
        Command::LdRate(o) => (CommandKind::LdRate, o),
        Command::Simulate { experiment, opts } => (CommandKind::Simulate(experiment), opts),
        Command::Axioms(o) => (CommandKind::Axioms, o),
        Command::VerifyPaper(o) => (CommandKind::VerifyPaper, o),
    };
    let spec = RunSpec {
        deviation: opts.deviation,
        distribution: opts.distribution,
        data: opts.data.as_deref().map(|s| parse_list("data", s)).transpose()?,
        x: opts
            .x
            .as_deref()
            .map(|s| registry::parse_f64(s).map_err(|_| CliError::Usage(format!("--x: `{s}` is not a number"))))
            .transpose()?,
        n: opts.n,
        n_list: opts.n_list.as_deref().map(|s| parse_list("n-list", s)).transpose()?,
        replications: opts.replications.unwrap_or(DEFAULT_REPLICATIONS),
        seed: opts.seed.unwrap_or(DEFAULT_SEED),
        threads: opts.threads,
        output: opts.output,
        format: opts.format.unwrap_or_default(),
        command,
    };
    validate(&spec)?;
    Ok(Parsed::Run(Box::new(spec)))
}

fn require<'a, T>(v: &'a Option<T>, flag: &str, command: &CommandKind) -> Result<&'a T, CliError> {
    v.as_ref().ok_or_else(|| CliError::Usage(format!("{command:?} requires --{flag}")))
}

/// Checks required flags and that registry strings resolve.
fn validate(spec: &RunSpec) -> Result<(), CliError> {
    let c = &spec.command;
    let needs_dev = !matches!(c, CommandKind::VerifyPaper);
    let needs_dist = !matches!(c, CommandKind::VerifyPaper | CommandKind::Mean | CommandKind::Axioms);
    let needs_x = matches!(c, CommandKind::LdRate | CommandKind::Simulate(Experiment::Ld));
    if needs_dev {
        registry::deviation(require(&spec.deviation, "deviation", c)?)?;
    }
    if needs_dist {
        registry::distribution(require(&spec.distribution, "distribution", c)?)?;
    }
    if needs_x {
        require(&spec.x, "x", c)?;
    }
    if matches!(c, CommandKind::Mean) {
        require(&spec.data, "data", c)?;
    }
    if spec.threads == Some(0) {
        return Err(CliError::Usage("--threads must be at least 1".into()));
    }
    if spec.replications == 0 {
        return Err(CliError::Usage("--replications must be at least 1".into()));
    }
    Ok(())
}

/// A command's result: a table, and whether the run counts as a success.
struct Outcome {
    table: Table,
    ok: bool,
}

fn ok(table: Table) -> Outcome {
    Outcome { table, ok: true }
}

fn resolve(spec: &RunSpec) -> Result<(Deviation, Option<DistributionSpec>), CliError> {
    let d = registry::deviation(spec.deviation.as_deref().unwrap_or("linear"))?;
    let law = spec.distribution.as_deref().map(registry::distribution).transpose()?;
    Ok((d, law))
}

fn experiment_config(spec: &RunSpec, n_list: Vec<usize>, max_n: usize) -> ExperimentConfig {
    ExperimentConfig {
        n_list,
        replications: spec.replications,
        seed: spec.seed,
        max_n,
        checkpoints: Checkpoints::Dyadic,
        ..ExperimentConfig::default()
    }
}

fn execute(spec: &RunSpec) -> Result<Outcome, CliError> {
    let quad = QuadratureConfig::default();
    if spec.command == CommandKind::VerifyPaper {
        let checks = verify_paper();
        let mut t = Table::new(vec!["id", "expected", "computed", "tolerance", "relative", "source", "pass"]);
        for c in &checks {
            t.push(vec![
                c.id.clone().into(),
                c.expected.into(),
                c.computed.into(),
                c.tolerance.into(),
                c.relative.into(),
                c.source.clone().into(),
                c.pass.into(),
            ]);
        }
        return Ok(Outcome { table: t, ok: checks.iter().all(|c| c.pass) });
    }
    let (d, law) = resolve(spec)?;
    let law = || law.as_ref().expect("validated distribution");
    let n_list = || spec.n_list.clone().unwrap_or_else(|| DEFAULT_N_LIST.to_vec());
    let x = || spec.x.expect("validated threshold");
    match &spec.command {
        CommandKind::Mean => {
            let xs = spec.data.as_ref().expect("validated data");
            let r = deviation_mean(&d, xs)?;
            let mut t = Table::new(vec![
                "deviation",
                "n",
                "root",
                "bracket_lo",
                "bracket_hi",
                "residual",
                "iterations",
                "converged",
            ]);
            t.push(vec![
                d.name().into(),
                xs.len().into(),
                r.root.into(),
                r.bracket_lo.into(),
                r.bracket_hi.into(),
                r.residual.into(),
                r.iterations.into(),
                r.converged.into(),
            ]);
            Ok(ok(t))
        }
        CommandKind::PopulationMean => {
            let r = population_mean(&d, law(), d.domain(), &quad)?;
            let mut t = Table::new(vec![
                "deviation",
                "distribution",
                "t0",
                "residual",
                "interior_point",
                "boundary",
                "probe_verdict",
                "iterations",
            ]);
            let verdict = serde_json::to_value(r.probe.verdict).ok().and_then(|v| v.as_str().map(String::from));
            t.push(vec![
                d.name().into(),
                law().name().into(),
                r.t0.into(),
                r.residual.into(),
                r.interior_point.into(),
                r.boundary.clone().into(),
                verdict.into(),
                r.iterations.into(),
            ]);
            Ok(ok(t))
        }
        CommandKind::Constants => {
            let k = asymptotic_constants(&d, law(), &quad)?;
            let mut t = Table::new(vec!["deviation", "distribution", "t0", "m2", "d1", "sigma2", "lil_c"]);
            t.push(vec![
                d.name().into(),
                law().name().into(),
                k.t0.into(),
                k.m2.into(),
                k.d1.into(),
                k.sigma2.into(),
                k.lil_c.into(),
            ]);
            Ok(ok(t))
        }
        CommandKind::LdRate => {
            let r = ld_rate(&d, law(), x(), &quad)?;
            let mut t =
                Table::new(vec!["deviation", "distribution", "x", "inf_phi", "c_star", "gamma", "c_lo", "c_hi"]);
            t.push(vec![
                d.name().into(),
                law().name().into(),
                r.x.into(),
                r.inf_phi.into(),
                r.c_star.into(),
                r.gamma.into(),
                r.c_lo.into(),
                r.c_hi.into(),
            ]);
            Ok(ok(t))
        }
        CommandKind::Axioms => {
            let r = check_deviation_axioms_default(&d)?;
            let mut t = Table::new(vec![
                "deviation",
                "diagonal_max_abs",
                "monotone_violations",
                "x_grid_len",
                "t_grid_len",
                "pass",
            ]);
            t.push(vec![
                d.name().into(),
                r.diagonal_max_abs.into(),
                r.monotone_violations.into(),
                r.x_grid_len.into(),
                r.t_grid_len.into(),
                r.pass.into(),
            ]);
            Ok(ok(t))
        }
        CommandKind::Simulate(Experiment::Slln) => {
            let cfg = experiment_config(spec, n_list(), 0);
            let r = run_slln(&d, law(), &cfg)?;
            let mut t = Table::new(vec!["n", "t0", "mean_abs_error", "envelope_ok"]);
            for (n, e) in r.n_list.iter().zip(&r.mean_abs_error) {
                t.push(vec![(*n).into(), r.t0.into(), (*e).into(), r.envelope_ok.into()]);
            }
            Ok(ok(t))
        }
        CommandKind::Simulate(Experiment::Clt) => {
            let n = spec.n.or(spec.n_list.as_ref().and_then(|l| l.last().copied())).unwrap_or(DEFAULT_CLT_N);
            let cfg = experiment_config(spec, vec![n], 0);
            let r = run_clt(&d, law(), &cfg)?;
            let mut t = Table::new(vec!["replication", "z", "n", "t0", "sigma2", "ks_stat"]);
            for (i, z) in r.z.iter().enumerate() {
                t.push(vec![i.into(), (*z).into(), r.n.into(), r.t0.into(), r.sigma2.into(), r.ks_stat.into()]);
            }
            Ok(ok(t))
        }
        CommandKind::Simulate(Experiment::Lil) => {
            let cfg = experiment_config(spec, n_list(), spec.n.unwrap_or(DEFAULT_LIL_N));
            let r = run_lil(&d, law(), &cfg)?;
            let mut t = Table::new(vec!["n", "scaled", "t0", "lil_c", "running_max", "running_min"]);
            for (n, s) in r.checkpoints.iter().zip(&r.scaled) {
                t.push(vec![
                    (*n).into(),
                    (*s).into(),
                    r.t0.into(),
                    r.lil_c.into(),
                    r.running_max.into(),
                    r.running_min.into(),
                ]);
            }
            Ok(ok(t))
        }
        CommandKind::Simulate(Experiment::Ld) => {
            let cfg = experiment_config(spec, n_list(), spec.n.unwrap_or(DEFAULT_LD_N));
            let r = run_ld(&d, law(), x(), &cfg)?;
            let mut t = Table::new(vec![
                "n",
                "probability",
                "rate",
                "running_sup",
                "theory",
                "exact",
                "wilson_lo",
                "wilson_hi",
            ]);
            for i in 0..r.n.len() {
                let w = |v: &Option<Vec<f64>>| v.as_ref().map(|v| v[i]);
                t.push(vec![
                    r.n[i].into(),
                    r.probability[i].into(),
                    r.rate[i].into(),
                    r.running_sup[i].into(),
                    r.theory.into(),
                    r.exact.into(),
                    w(&r.wilson_lo).into(),
                    w(&r.wilson_hi).into(),
                ]);
            }
            Ok(ok(t))
        }
        CommandKind::VerifyPaper => unreachable!("handled above"),
    }
}

fn emit(table: &Table, spec: &RunSpec, stdout: &mut dyn Write) -> Result<(), CliError> {
    let mut sink: Box<dyn Write + '_> = match &spec.output {
        Some(p) => {
            Box::new(BufWriter::new(File::create(p).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?))
        }
        None => Box::new(stdout),
    };
    match spec.format {
        Format::Csv => table.write_csv(&mut sink).map_err(|e| CliError::Io(e.to_string()))?,
        Format::Json => writeln!(sink, "{}", table.to_json())?,
    }
    sink.flush()?;
    Ok(())
}

/// Runs a parsed spec and returns the exit code.
pub fn run(spec: &RunSpec, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    let result = match spec.threads {
        Some(k) => match rayon::ThreadPoolBuilder::new().num_threads(k).build() {
            Ok(pool) => pool.install(|| execute(spec)),
            Err(e) => Err(CliError::Io(e.to_string())),
        },
        None => execute(spec),
    };
    let outcome = result.and_then(|o| emit(&o.table, spec, stdout).map(|_| o.ok));
    match outcome {
        Ok(true) => EXIT_OK,
        Ok(false) => EXIT_COMPUTE,
        Err(e) => {
            let _ = writeln!(stderr, "{}", e.to_json_line());
            e.exit_code()
        }
    }
}

/// The complete program: parse, run, report.
pub fn main_with<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    match parse_args(argv) {
        Ok(Parsed::Run(spec)) => run(&spec, stdout, stderr),
        Ok(Parsed::Print(text)) => {
            let _ = write!(stdout, "{text}");
            EXIT_OK
        }
        Err(e) => {
            let _ = writeln!(stderr, "{}", e.to_json_line());
            e.exit_code()
        }
    }
}
