//! Command-line front end: parses flags and config files, runs the sweeps
//! from `bell_halfline`, and writes CSV and SVG artifacts.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod reproduce;
pub mod svg;

use clap::{Args, Parser, Subcommand};
use config::{RunConfig, Schema};
use error::CliError;
use std::ffi::OsString;
use std::path::PathBuf;

#[derive(Debug, Parser)]
#[command(name = "bell-halfline", version, about = "Half-line quadratic forms, Bell correlators and their numerical checks")]
pub struct Cli {
    /// `key = value` file; flags given on the command line take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Tabulate K0, K1, the cosh kernel h or the smooth step tau.
    SpecfunTable(SpecfunArgs),
    /// Sample a normalized cutoff profile.
    TestfnSample(TestfnArgs),
    /// Quadratic forms of the cutoff family along an eps list.
    FormsSweep(FormsArgs),
    /// CHSH correlators along an eps list.
    BellSweep(BellArgs),
    /// Top eigenvalues of the Galerkin compressions.
    CompressSweep(CompressArgs),
    /// Momentum-space checks.
    AppendixCheck(AppendixArgs),
    /// Every sweep with plots and a threshold report.
    ReproducePaper(ReproduceArgs),
}

#[derive(Debug, Args)]
pub struct SpecfunArgs {
    /// k0, k1, h or tau.
    #[arg(long = "fn")]
    pub function: Option<String>,
    /// `start,stop,n,log|lin`.
    #[arg(long)]
    pub grid: Option<String>,
    #[arg(long)]
    pub eps: Option<String>,
    /// Output file, `-` for stdout.
    #[arg(long)]
    pub output: Option<String>,
}

#[derive(Debug, Args)]
pub struct TestfnArgs {
    /// phi or phi-damped.
    #[arg(long)]
    pub family: Option<String>,
    #[arg(long)]
    pub eps: Option<String>,
    #[arg(long)]
    pub mass: Option<String>,
    #[arg(long)]
    pub grid: Option<String>,
    #[arg(long)]
    pub output: Option<String>,
}

#[derive(Debug, Args)]
pub struct QuadArgs {
    #[arg(long)]
    pub panels: Option<String>,
    #[arg(long = "nodes-per-panel")]
    pub nodes_per_panel: Option<String>,
}

#[derive(Debug, Args)]
pub struct FormsArgs {
    /// carleman or hankel.
    #[arg(long)]
    pub kernel: Option<String>,
    #[arg(long)]
    pub mass: Option<String>,
    #[arg(long = "eps-list")]
    pub eps_list: Option<String>,
    /// direct, log, laplace or all.
    #[arg(long)]
    pub route: Option<String>,
    #[command(flatten)]
    pub quad: QuadArgs,
    #[arg(long)]
    pub output: Option<String>,
}

#[derive(Debug, Args)]
pub struct BellArgs {
    /// massless or massive.
    #[arg(long)]
    pub kernel: Option<String>,
    #[arg(long)]
    pub mass: Option<String>,
    /// A number or `tsirelson`.
    #[arg(long)]
    pub c: Option<String>,
    #[arg(long = "eps-list")]
    pub eps_list: Option<String>,
    #[command(flatten)]
    pub quad: QuadArgs,
    #[arg(long)]
    pub output: Option<String>,
}

#[derive(Debug, Args)]
pub struct CompressArgs {
    #[arg(long = "depth-list")]
    pub depth_list: Option<String>,
    #[arg(long = "span-list")]
    pub span_list: Option<String>,
    /// Write the matrix of the last (J, K) pair to this file.
    #[arg(long = "dump-matrix")]
    pub dump_matrix: Option<String>,
    #[arg(long)]
    pub output: Option<String>,
}

#[derive(Debug, Args)]
pub struct AppendixArgs {
    /// i1-limit, i2-self, i2-vs-config, fourier-g, schedule or all.
    #[arg(long)]
    pub what: Option<String>,
    #[arg(long)]
    pub mass: Option<String>,
    /// Starting eps of the schedule search.
    #[arg(long)]
    pub eps: Option<String>,
    #[arg(long = "eta-list")]
    pub eta_list: Option<String>,
    #[arg(long)]
    pub delta: Option<String>,
    #[command(flatten)]
    pub quad: QuadArgs,
    #[arg(long)]
    pub output: Option<String>,
}

#[derive(Debug, Args)]
pub struct ReproduceArgs {
    #[arg(long = "output-dir")]
    pub output_dir: Option<String>,
    #[arg(long = "eps-list")]
    pub eps_list: Option<String>,
    #[arg(long)]
    pub mass: Option<String>,
    #[arg(long = "c-list")]
    pub c_list: Option<String>,
    #[arg(long = "depth-list")]
    pub depth_list: Option<String>,
    #[arg(long = "span-list")]
    pub span_list: Option<String>,
    #[arg(long = "eta-list")]
    pub eta_list: Option<String>,
    #[arg(long)]
    pub delta: Option<String>,
    #[arg(long = "schedule-eps")]
    pub schedule_eps: Option<String>,
    #[command(flatten)]
    pub quad: QuadArgs,
}

type Flags = Vec<(&'static str, String)>;

fn collect(pairs: Vec<(&'static str, &Option<String>)>) -> Flags {
    pairs.into_iter().filter_map(|(k, v)| v.clone().map(|v| (k, v))).collect()
}

fn quad_flags(q: &QuadArgs) -> Vec<(&'static str, &Option<String>)> {
    vec![("panels", &q.panels), ("nodes-per-panel", &q.nodes_per_panel)]
}

impl Command {
    fn schema_and_flags(&self) -> (&'static Schema, Flags) {
        match self {
            Command::SpecfunTable(a) => (
                &config::SPECFUN_TABLE,
                collect(vec![("fn", &a.function), ("grid", &a.grid), ("eps", &a.eps), ("output", &a.output)]),
            ),
            Command::TestfnSample(a) => (
                &config::TESTFN_SAMPLE,
                collect(vec![
                    ("family", &a.family),
                    ("eps", &a.eps),
                    ("mass", &a.mass),
                    ("grid", &a.grid),
                    ("output", &a.output),
                ]),
            ),
            Command::FormsSweep(a) => {
                let mut v = vec![
                    ("kernel", &a.kernel),
                    ("mass", &a.mass),
                    ("eps-list", &a.eps_list),
                    ("route", &a.route),
                    ("output", &a.output),
                ];
                v.extend(quad_flags(&a.quad));
                (&config::FORMS_SWEEP, collect(v))
            }
            Command::BellSweep(a) => {
                let mut v = vec![
                    ("kernel", &a.kernel),
                    ("mass", &a.mass),
                    ("c", &a.c),
                    ("eps-list", &a.eps_list),
                    ("output", &a.output),
                ];
                v.extend(quad_flags(&a.quad));
                (&config::BELL_SWEEP, collect(v))
            }
            Command::CompressSweep(a) => (
                &config::COMPRESS_SWEEP,
                collect(vec![
                    ("depth-list", &a.depth_list),
                    ("span-list", &a.span_list),
                    ("dump-matrix", &a.dump_matrix),
                    ("output", &a.output),
                ]),
            ),
            Command::AppendixCheck(a) => {
                let mut v = vec![
                    ("what", &a.what),
                    ("mass", &a.mass),
                    ("eps", &a.eps),
                    ("eta-list", &a.eta_list),
                    ("delta", &a.delta),
                    ("output", &a.output),
                ];
                v.extend(quad_flags(&a.quad));
                (&config::APPENDIX_CHECK, collect(v))
            }
            Command::ReproducePaper(a) => {
                let mut v = vec![
                    ("output-dir", &a.output_dir),
                    ("eps-list", &a.eps_list),
                    ("mass", &a.mass),
                    ("c-list", &a.c_list),
                    ("depth-list", &a.depth_list),
                    ("span-list", &a.span_list),
                    ("eta-list", &a.eta_list),
                    ("delta", &a.delta),
                    ("schedule-eps", &a.schedule_eps),
                ];
                v.extend(quad_flags(&a.quad));
                (&config::REPRODUCE_PAPER, collect(v))
            }
        }
    }
}

/// Reads the config file (if any) and merges it with the flags.
pub fn resolve_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let (schema, flags) = cli.command.schema_and_flags();
    let text = match &cli.config {
        Some(path) => Some(
            std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))?,
        ),
        None => None,
    };
    RunConfig::build(schema, text.as_deref(), &flags)
}

/// Caps the global worker pool from `BELL_HALFLINE_THREADS`.
fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("BELL_HALFLINE_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Usage(format!("BELL_HALFLINE_THREADS must be a positive integer, got `{raw}`")))?;
    // A pool that already exists (repeated calls in one process) is kept.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

pub fn execute(cli: &Cli) -> Result<(), CliError> {
    configure_threads()?;
    let config = resolve_config(cli)?;
    match &cli.command {
        Command::SpecfunTable(_) => output::emit(config.get("output"), &config, &commands::specfun_table(&config)?),
        Command::TestfnSample(_) => output::emit(config.get("output"), &config, &commands::testfn_sample(&config)?),
        Command::FormsSweep(_) => output::emit(config.get("output"), &config, &commands::forms_sweep(&config)?),
        Command::BellSweep(_) => output::emit(config.get("output"), &config, &commands::bell_sweep(&config)?),
        Command::CompressSweep(_) => {
            let (table, matrix) = commands::compress_sweep(&config)?;
            if let Some(m) = matrix {
                output::save_csv(std::path::Path::new(config.get("dump-matrix")), &config, &m)?;
            }
            output::emit(config.get("output"), &config, &table)
        }
        Command::AppendixCheck(_) => {
            let outcome = commands::appendix_check(&config)?;
            output::emit(config.get("output"), &config, &outcome.table)?;
            if outcome.failures.is_empty() {
                Ok(())
            } else {
                Err(CliError::Acceptance(outcome.failures.join("\n")))
            }
        }
        Command::ReproducePaper(_) => {
            let report = reproduce::reproduce_paper(&config)?;
            print!("{}", report.render());
            if report.all_pass() {
                Ok(())
            } else {
                let failed: Vec<String> =
                    report.checks.iter().filter(|c| !c.pass).map(|c| format!("{}: {}", c.name, c.detail)).collect();
                Err(CliError::Acceptance(failed.join("\n")))
            }
        }
    }
}

/// Parses `args` and runs the command, returning the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("bell-halfline: {e}");
            e.exit_code()
        }
    }
}
