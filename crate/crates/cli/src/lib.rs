//! Argument parsing and command execution for the `affectgrid` binary.

use std::io::Write;
use std::path::{Path, PathBuf};

use affectgrid::output::{self, OutputBundle};
use affectgrid::{aggregate, plot, ConfusionMatrix, Error, Execution, ScenarioConfig};
use clap::{Args, Parser, Subcommand};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_CONFIG: i32 = 3;
pub const EXIT_IO: i32 = 4;

#[derive(Debug, Parser, PartialEq)]
#[command(name = "affectgrid", version, about = "Emotion perception and contagion on a toroidal grid")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, PartialEq)]
pub enum Command {
    /// Run a scenario and write its CSV bundle, charts and manifest.
    Run(RunArgs),
    /// List the built-in scenarios.
    ListScenarios,
    /// Write a synthesized confusion matrix as CSV.
    SynthMatrix(SynthArgs),
    /// Render a time series, trust or resilience CSV as an SVG line chart.
    Plot(PlotArgs),
}

#[derive(Debug, Args, PartialEq)]
pub struct RunArgs {
    /// Built-in scenario name or path to a scenario TOML file.
    #[arg(long)]
    pub scenario: String,
    /// Master seed; overrides the scenario file.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory; the bundle goes into a subdirectory named after
    /// the scenario.
    #[arg(long, env = "AFFECTGRID_OUT", default_value = "affectgrid-out")]
    pub out: PathBuf,
    /// Number of replicates.
    #[arg(long)]
    pub runs: Option<usize>,
    /// Steps per replicate.
    #[arg(long)]
    pub steps: Option<usize>,
    /// Run replicates on this many threads.
    #[arg(long)]
    pub parallel: Option<usize>,
    /// Instead of replicates of one master seed, run a single replicate for
    /// each of N consecutive master seeds starting at the scenario seed.
    #[arg(long, value_name = "N", conflicts_with = "runs")]
    pub seed_sweep: Option<u64>,
}

#[derive(Debug, Args, PartialEq)]
pub struct SynthArgs {
    #[arg(long)]
    pub accuracy: f64,
    #[arg(long, default_value_t = 0.5)]
    pub bias: f64,
    /// Accepted for symmetry with `run`; synthesis is deterministic.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Label stored with the matrix when it is not written to a file.
    #[arg(long, default_value = "synthetic")]
    pub label: String,
    /// Destination CSV; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, PartialEq)]
pub struct PlotArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn parse_args<I, T>(argv: I) -> Result<Command, clap::Error>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    Cli::try_parse_from(argv).map(|c| c.command)
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Io { .. } => EXIT_IO,
        _ => EXIT_CONFIG,
    }
}

pub fn execute(cmd: Command, out: &mut dyn Write) -> Result<(), Error> {
    match cmd {
        Command::Run(args) => {
            let bundle = run(&args)?;
            let _ = writeln!(out, "wrote {}", bundle.dir.display());
            for f in bundle.files.iter().chain([&bundle.manifest]) {
                let _ = writeln!(out, "  {}", f.display());
            }
        }
        Command::ListScenarios => {
            for cfg in affectgrid::builtin_scenarios() {
                let groups: Vec<String> = cfg
                    .composition
                    .iter()
                    .map(|g| format!("{}={}", g.profile, g.count))
                    .collect();
                let shocks = if cfg.shocks.is_some() { " shocks" } else { "" };
                let _ = writeln!(out, "{:<18}{}{}", cfg.name, groups.join(","), shocks);
            }
        }
        Command::SynthMatrix(args) => {
            let label = match &args.out {
                Some(p) => p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or(args.label.clone()),
                None => args.label.clone(),
            };
            let m = ConfusionMatrix::synthesize(label, args.accuracy, args.bias)?;
            match &args.out {
                Some(p) => m.save(p)?,
                None => {
                    let _ = out.write_all(m.to_csv().as_bytes());
                }
            }
        }
        Command::Plot(args) => plot::render_lineplot(&args.input, &args.out)?,
    }
    Ok(())
}

pub fn run(args: &RunArgs) -> Result<OutputBundle, Error> {
    let mut cfg = affectgrid::resolve_scenario(&args.scenario)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(r) = args.runs {
        cfg.replicates = r;
    }
    if let Some(t) = args.steps {
        cfg.steps = t;
    }
    cfg.validate()?;
    let exec = match args.parallel {
        Some(0) => return Err(Error::InvalidParameter("--parallel must be at least 1".into())),
        Some(n) => Execution::Parallel(n),
        None => Execution::Sequential,
    };
    let results = match args.seed_sweep {
        Some(0) => return Err(Error::InvalidParameter("--seed-sweep must be at least 1".into())),
        Some(n) => {
            let seeds: Vec<u64> = (0..n).map(|i| cfg.seed.wrapping_add(i)).collect();
            cfg.replicates = seeds.len();
            affectgrid::run_seed_sweep(&cfg, &seeds, exec)?
        }
        None => affectgrid::run_replicates_with(&cfg, exec)?,
    };
    let agg = aggregate(&results)?;
    output::write_bundle(&cfg, &agg, &bundle_dir(&args.out, &cfg))
}

fn bundle_dir(out: &Path, cfg: &ScenarioConfig) -> PathBuf {
    let name: String = cfg
        .name
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || "-_.+".contains(c) { c } else { '_' })
        .collect();
    out.join(name)
}
