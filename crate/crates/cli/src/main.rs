//! `ringqed` command-line front end.

mod output;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ringqed::{Error, Model, NetworkConfig};

use run::{ProtocolArgs, ProtocolName};

#[derive(Parser, Debug)]
#[command(
    name = "ringqed",
    version,
    about = "Couplings, validation and dynamics for fiber-linked atom-cavity rings"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print effective couplings, Stark shifts and Raman coefficients.
    Couplings {
        #[arg(long)]
        config: PathBuf,
        /// Write the pair coupling table as CSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check the large-detuning hierarchy of a configuration.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run one protocol and write its time series.
    Protocol {
        /// entangle, transfer, parallel, cluster or xy.
        name: String,
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        protocol: ProtocolArgs,
    },
    /// Repeat a protocol over a list of parameter values.
    Sweep {
        /// nu, delta2, g, rabi[l], detuning[l], gamma, kappa or decay.
        #[arg(long)]
        param: String,
        /// Comma-separated values.
        #[arg(long, conflicts_with = "range")]
        values: Option<String>,
        /// `start:stop:count`, endpoints included.
        #[arg(long)]
        range: Option<String>,
        #[arg(long, default_value = "entangle")]
        protocol: String,
        /// Run sweep points on all cores.
        #[arg(long)]
        parallel: bool,
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        args: ProtocolArgs,
    },
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// TOML configuration (required except for `cluster --direct`).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = "effective")]
    model: String,
    #[arg(long, default_value_t = 1)]
    cutoff: usize,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long = "t-end")]
    t_end: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
    /// Recorded samples per run.
    #[arg(long, default_value_t = 200)]
    samples: usize,
    /// Integrate the full model on the whole truncated space.
    #[arg(long)]
    no_restrict: bool,
    /// Allow full-model runs above the size guard.
    #[arg(long)]
    allow_large: bool,
}

/// Failure with the exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Parse(_) | Error::Io(_) => 2,
            _ => 1,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, Failure>;

fn load(path: &Option<PathBuf>) -> CliResult<Option<NetworkConfig>> {
    match path {
        Some(p) => Ok(Some(NetworkConfig::load(p)?)),
        None => Ok(None),
    }
}

fn require(config: Option<NetworkConfig>) -> CliResult<NetworkConfig> {
    config.ok_or_else(|| Failure::usage("--config is required"))
}

fn options(common: &Common) -> CliResult<ringqed::RunOptions> {
    let model: Model = common
        .model
        .parse()
        .map_err(|e: Error| Failure::usage(e.to_string()))?;
    let mut opts = ringqed::RunOptions::default()
        .with_model(model)
        .with_cutoff(common.cutoff);
    opts.t_end = common.t_end;
    opts.dt = common.dt;
    opts.samples = common.samples;
    opts.restrict = !common.no_restrict;
    opts.allow_large = common.allow_large;
    Ok(opts)
}

fn dispatch(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Couplings { config, out } => {
            let config = NetworkConfig::load(&config)?;
            output::couplings(&config, out.as_deref())
        }
        Command::Validate { config } => {
            let config = NetworkConfig::load(&config)?;
            output::validate(&config)
        }
        Command::Protocol {
            name,
            common,
            protocol,
        } => {
            let name: ProtocolName = name.parse()?;
            let config = load(&common.config)?;
            let opts = options(&common)?;
            let report = run::run_protocol(name, config.as_ref(), &protocol, &opts)?;
            output::write_table(&report.table, common.out.as_deref())?;
            output::summary(&report.summary, &report.notes);
            Ok(())
        }
        Command::Sweep {
            param,
            values,
            range,
            protocol,
            parallel,
            common,
            args,
        } => {
            let name: ProtocolName = protocol.parse()?;
            let config = require(load(&common.config)?)?;
            let param: run::SweepParam = param.parse()?;
            let values = run::sweep_values(values.as_deref(), range.as_deref())?;
            let opts = options(&common)?;
            let table = run::sweep(name, &config, param, &values, &args, &opts, parallel)?;
            output::write_table(&table, common.out.as_deref())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
