//! Command-line front end: scenario ingestion, batch execution and artifact
//! emission for the `phlab` binary.

pub mod equilibrium;
pub mod plot;
pub mod report;
pub mod simulate;
pub mod sweep;

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use phlab::{presets, ConfigDocument, ConfigError, EquilibriumError, SimError};

/// Environment variable naming the default output directory.
pub const OUT_ENV: &str = "PHLAB_OUT";
const DEFAULT_OUT: &str = "phlab-out";

#[derive(Debug, Parser)]
#[command(name = "phlab", version, about = "Port-Hamiltonian converter control and observer laboratory")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

/// Where the scenario document comes from.
#[derive(Debug, Clone, Default, Args)]
pub struct Source {
    /// TOML scenario document.
    #[arg(long, value_name = "PATH", conflicts_with = "preset")]
    pub config: Option<PathBuf>,
    /// Built-in scenario (see `phlab presets list`).
    #[arg(long, value_name = "NAME")]
    pub preset: Option<String>,
    /// Override a config entry by dotted path, e.g. `observers.0.gamma=1e11`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    /// Reserved; simulations are deterministic and draw no random numbers.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct Output {
    /// Output directory. Defaults to `output.dir`, then $PHLAB_OUT, then `phlab-out`.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve for the operating point and print it.
    Equilibrium {
        #[command(flatten)]
        source: Source,
        /// Output-voltage reference in volts (overrides `scenario.reference`).
        #[arg(long, allow_hyphen_values = true)]
        reference: Option<f64>,
        /// Print a JSON record instead of the table.
        #[arg(long)]
        json: bool,
    },
    /// Run every scenario variant and write CSV, SVG and metrics.
    Simulate {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        output: Output,
    },
    /// Run one closed loop and tabulate the errors of all its observers.
    Compare {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        output: Output,
    },
    /// Run one scenario per value of a config entry, in parallel.
    Sweep {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        output: Output,
        /// Dotted path of the swept entry, e.g. `observers.0.gamma`.
        #[arg(long, value_name = "PATH")]
        param: String,
        /// Values as TOML literals, e.g. `1e10 1e11` or `'[0.5, 10, -1, -12]'`.
        #[arg(value_name = "VALUE", allow_hyphen_values = true)]
        values: Vec<String>,
    },
    /// Built-in scenarios.
    Presets {
        #[command(subcommand)]
        action: PresetsCommand,
    },
}

#[derive(Debug, Subcommand)]
pub enum PresetsCommand {
    /// Names and one-line summaries.
    List,
    /// Print a preset's TOML source.
    Show { name: String },
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Infeasible(EquilibriumError),
    #[error("run `{run}`: {source}")]
    Simulation {
        run: String,
        #[source]
        source: SimError,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    /// 2 config error, 3 infeasible equilibrium, 4 numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) | Self::Usage(_) => 2,
            Self::Infeasible(_) => 3,
            Self::Simulation { source, .. } => match source {
                SimError::InfeasibleEquilibrium { .. } => 3,
                SimError::InvalidScenario(_) | SimError::Model(_) => 2,
                SimError::NonFiniteState(_) => 4,
            },
            Self::Io { .. } => 1,
        }
    }
}

pub(crate) fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.to_path_buf(), source }
}

impl Source {
    /// Loads the document and applies the `--set` overrides in order.
    pub fn load(&self) -> Result<ConfigDocument, CliError> {
        let mut doc = match (&self.config, &self.preset) {
            (Some(path), _) => ConfigDocument::from_path(path)?,
            (None, Some(name)) => presets::load(name)?,
            (None, None) => return Err(CliError::Usage("pass --config PATH or --preset NAME".into())),
        };
        for assignment in &self.overrides {
            doc = doc.apply_assignment(assignment)?;
        }
        Ok(doc)
    }

    /// Like [`Source::load`], falling back to the default document.
    pub fn load_or_default(&self) -> Result<ConfigDocument, CliError> {
        if self.config.is_none() && self.preset.is_none() {
            let mut doc = ConfigDocument::default();
            for assignment in &self.overrides {
                doc = doc.apply_assignment(assignment)?;
            }
            Ok(doc)
        } else {
            self.load()
        }
    }
}

impl Output {
    pub fn resolve(&self, doc: &ConfigDocument) -> PathBuf {
        self.out
            .clone()
            .or_else(|| doc.output.dir.as_ref().map(PathBuf::from))
            .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
    }
}

/// Executes a parsed command, writing human-readable output to `out`.
pub fn run(cli: Cli, out: &mut dyn std::io::Write) -> Result<(), CliError> {
    let stdout = |e: std::io::Error| CliError::Io { path: PathBuf::from("<stdout>"), source: e };
    match cli.command {
        Command::Equilibrium { source, reference, json } => {
            let doc = source.load_or_default()?;
            equilibrium::run(&doc, reference, json, out)
        }
        Command::Simulate { source, output } => {
            let doc = source.load()?;
            simulate::simulate(&doc, &output.resolve(&doc), out)
        }
        Command::Compare { source, output } => {
            let doc = source.load()?;
            simulate::compare(&doc, &output.resolve(&doc), out)
        }
        Command::Sweep { source, output, param, values } => {
            let doc = source.load()?;
            sweep::run(&doc, &param, &values, &output.resolve(&doc), out)
        }
        Command::Presets { action: PresetsCommand::List } => {
            let width = presets::PRESETS.iter().map(|p| p.name.len()).max().unwrap_or(0);
            for p in presets::PRESETS {
                writeln!(out, "{:width$}  {}", p.name, p.summary).map_err(stdout)?;
            }
            Ok(())
        }
        Command::Presets { action: PresetsCommand::Show { name } } => {
            write!(out, "{}", presets::find(&name)?.source).map_err(stdout)
        }
    }
}
