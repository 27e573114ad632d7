//! The `csbp` command line: catalog inspection, flow evaluation, population simulation
//! and the verification suites.

pub mod commands;
pub mod config;
pub mod output;

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use config::{parse_inline_mechanism, ExperimentConfig, MechanismRef};

pub const SUITES: [&str; 4] = ["theorem12", "coalescence", "extinction", "grey-limits"];

#[derive(Debug)]
pub enum CliError {
    Core(csbp::Error),
    Io { path: PathBuf, source: std::io::Error },
    Usage(String),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Core(csbp::Error::Parse { .. } | csbp::Error::InvalidMechanism(_)) => 2,
            CliError::Core(csbp::Error::Undecidable(_)) => 3,
            _ => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io { path, source } => write!(f, "{}: {source}", path.display()),
            CliError::Usage(m) => write!(f, "{m}"),
        }
    }
}

impl From<csbp::Error> for CliError {
    fn from(e: csbp::Error) -> Self {
        CliError::Core(e)
    }
}

#[derive(Debug, Parser)]
#[command(name = "csbp", version, about = "Continuous-state branching processes: flows, populations and Eve verification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Flags shared by the subcommands; each overrides the config file.
#[derive(Debug, Args, Default)]
struct Common {
    /// Catalog mechanism by name (see `catalog list`)
    #[arg(long)]
    catalog: Option<String>,
    /// Inline mechanism as a TOML table, e.g. '{ alpha = -1.0, beta = 1.0 }'
    #[arg(long)]
    mechanism: Option<String>,
    /// TOML experiment config
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for the Monte Carlo runs
    #[arg(long)]
    threads: Option<usize>,
    /// Output directory
    #[arg(long)]
    out: Option<String>,
    /// Initial mass
    #[arg(long, short = 'x')]
    x: Option<f64>,
    #[arg(long)]
    runs: Option<usize>,
    #[arg(long)]
    horizon: Option<f64>,
    /// Number of blocks for infinite-variation populations
    #[arg(long)]
    blocks: Option<usize>,
    /// Path grid step
    #[arg(long)]
    h: Option<f64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Classification report and limit-structure prediction
    Classify {
        #[command(flatten)]
        common: Common,
        /// Print a JSON document instead of the table
        #[arg(long)]
        json: bool,
    },
    /// Evaluate the flow u(t, λ); negative t runs the flow backward
    Flow {
        #[command(flatten)]
        common: Common,
        #[arg(short = 't', long = "time", allow_negative_numbers = true)]
        t: f64,
        #[arg(short = 'l', long = "lambda", allow_negative_numbers = true)]
        lambda: f64,
    },
    /// Simulate populations and write trajectories, settler reports and a summary
    Simulate {
        #[command(flatten)]
        common: Common,
    },
    /// Run a verification suite: theorem12, coalescence, extinction or grey-limits
    Verify {
        suite: String,
        #[command(flatten)]
        common: Common,
    },
    /// Built-in mechanisms
    Catalog {
        #[command(subcommand)]
        action: CatalogAction,
    },
}

#[derive(Debug, Subcommand)]
enum CatalogAction {
    /// Names and Laplace exponents of the catalog
    List,
}

fn load_config(common: &Common) -> Result<ExperimentConfig, CliError> {
    let mut c = match &common.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            ExperimentConfig::parse(&text, &path.display().to_string())?
        }
        None => ExperimentConfig::default(),
    };
    if common.catalog.is_some() && common.mechanism.is_some() {
        return Err(CliError::Usage("--catalog and --mechanism are mutually exclusive".into()));
    }
    if let Some(name) = &common.catalog {
        c.mechanism = Some(MechanismRef::Catalog(name.clone()));
    }
    if let Some(text) = &common.mechanism {
        c.mechanism = Some(MechanismRef::Inline(parse_inline_mechanism(text)?.into()));
    }
    if let Some(v) = common.seed {
        c.seed = v;
    }
    if let Some(v) = common.threads {
        c.threads = Some(v);
    }
    if let Some(v) = &common.out {
        c.out = Some(v.clone());
    }
    if let Some(v) = common.x {
        c.x = v;
    }
    if let Some(v) = common.runs {
        c.runs = v;
    }
    if let Some(v) = common.horizon {
        c.horizon = v;
    }
    if let Some(v) = common.blocks {
        c.blocks = v;
    }
    if let Some(v) = common.h {
        c.h = v;
    }
    c.validate()?;
    Ok(c)
}

/// Runs `f` on a pool of the configured size.
fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, CliError> {
    #[cfg(feature = "parallel")]
    if let Some(n) = threads {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Usage(format!("cannot build a pool of {n} threads: {e}")))?;
        return Ok(pool.install(f));
    }
    #[cfg(not(feature = "parallel"))]
    let _ = threads;
    Ok(f())
}

fn dispatch(cli: Cli, out: &mut dyn Write) -> Result<i32, CliError> {
    match cli.command {
        Command::Catalog {
            action: CatalogAction::List,
        } => commands::catalog_list(out),
        Command::Classify { common, json } => {
            let c = load_config(&common)?;
            commands::classify(&c, json, out)
        }
        Command::Flow { common, t, lambda } => {
            let c = load_config(&common)?;
            commands::flow(&c, t, lambda, out)
        }
        Command::Simulate { common } => {
            let c = load_config(&common)?;
            if c.runs == 0 {
                return Err(CliError::Usage("run count must be at least 1".into()));
            }
            let threads = c.threads;
            with_threads(threads, || commands::simulate(&c))?.and_then(|msg| {
                write!(out, "{msg}").map_err(|e| CliError::io(Path::new("<stdout>"), e))?;
                Ok(0)
            })
        }
        Command::Verify { suite, common } => {
            if !SUITES.contains(&suite.as_str()) {
                return Err(CliError::Usage(format!(
                    "unknown suite '{suite}'; available suites: {}",
                    SUITES.join(", ")
                )));
            }
            let c = load_config(&common)?;
            if c.runs == 0 {
                return Err(CliError::Usage("run count must be at least 1".into()));
            }
            let threads = c.threads;
            with_threads(threads, || commands::verify(&suite, &c))?.and_then(|msg| {
                write!(out, "{msg}").map_err(|e| CliError::io(Path::new("<stdout>"), e))?;
                Ok(0)
            })
        }
    }
}

/// Parses `args` (program name first) and runs the command. Returns the exit code:
/// 0 success, 1 runtime failure, 2 usage or parse error, 3 undecidable classification.
pub fn run<I, S>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 {
                write!(out, "{text}")
            } else {
                write!(err, "{text}")
            };
            return code;
        }
    };
    match dispatch(cli, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}
