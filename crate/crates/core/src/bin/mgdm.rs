use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use mgdm::config::RunConfig;
use mgdm::experiment::{
    eye_diagram, run_four_channel, run_single_channel, sweep_crosstalk, write_sweep_csv, Experiment,
};
use mgdm::fec::{post_fec_bound, symbol_error_probability, POST_FEC_TARGET};
use mgdm::modes::{group_delay, group_propagation_constant};
use mgdm::transceiver::write_eye_csv;
use mgdm::Error;

#[derive(Parser)]
#[command(name = "mgdm", version, about = "Mode-group-division-multiplexed GI-MMF link simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArg {
    /// Run configuration (JSON). Defaults apply when omitted.
    #[arg(short, long)]
    config: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Print the default configuration.
    DefaultConfig,
    /// Mode groups of the configured ports: members, beta and group delay.
    Modes(ConfigArg),
    /// One transmitter at a time; writes sequences.csv, histogram.csv, summary.json.
    RunSingle {
        #[command(flatten)]
        config: ConfigArg,
        #[arg(short, long, default_value = "out")]
        out: PathBuf,
    },
    /// All transmitters at once; writes sequences.csv, histogram.csv, summary.json.
    RunFour {
        #[command(flatten)]
        config: ConfigArg,
        #[arg(short, long, default_value = "out")]
        out: PathBuf,
    },
    /// Average BER per channel over a grid of crosstalk levels [dB].
    SweepXt {
        #[command(flatten)]
        config: ConfigArg,
        /// Comma-separated levels; `-inf` is allowed.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "-25,-22,-19,-16,-13")]
        grid: Vec<String>,
        /// CSV destination, stdout when omitted.
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Post-FEC bound over a grid of pre-FEC BERs, as CSV.
    FecBudget {
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long, value_delimiter = ',', default_value = "1e-6,1e-5,1e-4,5e-4,1e-3,2e-3,5e-3,1e-2")]
        grid: Vec<f64>,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Eye diagram points of one received sequence, as CSV.
    Eye {
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long, default_value_t = 4)]
        channel: u32,
        #[arg(long, default_value_t = 0)]
        sequence: usize,
        /// Use the four-channel set-up instead of a single transmitter.
        #[arg(long)]
        four: bool,
        #[arg(long, default_value_t = 4096)]
        bits: usize,
        #[arg(short, long, default_value = "eye.csv")]
        out: PathBuf,
    },
}

enum Failure {
    Config(String),
    Sync(String),
    Other(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::SyncFailure { .. } => Failure::Sync(e.to_string()),
            Error::Config(_) | Error::InvalidSpec(_) | Error::Json(_) => Failure::Config(e.to_string()),
            _ => Failure::Other(e.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Other(e.to_string())
    }
}

fn load(arg: &ConfigArg) -> Result<RunConfig, Failure> {
    let Some(path) = &arg.config else {
        return Ok(RunConfig::default());
    };
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    RunConfig::from_json(&text).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))
}

fn sink(path: Option<&Path>) -> Result<Box<dyn Write>, Failure> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn modes(config: &RunConfig) -> Result<(), Failure> {
    let basis = config.basis()?;
    let fiber = &config.fiber;
    let mut out = sink(None)?;
    writeln!(out, "group,size,members,beta_per_m,delay_s_per_m,relative_delay_s")?;
    let earliest = basis
        .groups()
        .iter()
        .map(|g| group_delay(g.order(), fiber))
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    for g in basis.groups() {
        let members: Vec<String> = g.members().iter().map(ToString::to_string).collect();
        let tau = group_delay(g.order(), fiber)?;
        writeln!(
            out,
            "MG{},{},{},{},{},{}",
            g.order(),
            g.len(),
            members.join(" "),
            group_propagation_constant(g.order(), fiber)?,
            tau,
            (tau - earliest) * fiber.length
        )?;
    }
    out.flush()?;
    Ok(())
}

fn fec_budget(config: &RunConfig, grid: &[f64], out: Option<&Path>) -> Result<(), Failure> {
    let mut out = sink(out)?;
    writeln!(out, "pre_fec_ber,symbol_error_probability,post_fec_bound,pass")?;
    for &pre in grid {
        let bound = post_fec_bound(pre, &config.fec)?;
        writeln!(out, "{pre},{},{bound},{}", symbol_error_probability(pre, config.fec.b), bound < POST_FEC_TARGET)?;
    }
    out.flush()?;
    Ok(())
}

fn execute(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::DefaultConfig => println!("{}", RunConfig::default().to_json()),
        Command::Modes(c) => modes(&load(&c)?)?,
        Command::RunSingle { config, out } => run_single_channel(&load(&config)?)?.write(&out)?,
        Command::RunFour { config, out } => run_four_channel(&load(&config)?)?.write(&out)?,
        Command::SweepXt { config, grid, out } => {
            let grid = grid
                .iter()
                .map(|s| mgdm::db::parse(s).ok_or_else(|| Failure::Config(format!("invalid crosstalk level {s:?}"))))
                .collect::<Result<Vec<_>, _>>()?;
            let points = sweep_crosstalk(&load(&config)?, &grid)?;
            let mut w = sink(out.as_deref())?;
            write_sweep_csv(&mut w, &points)?;
            w.flush()?;
        }
        Command::FecBudget { config, grid, out } => fec_budget(&load(&config)?, &grid, out.as_deref())?,
        Command::Eye { config, channel, sequence, four, bits, out } => {
            let experiment = if four { Experiment::FourChannel } else { Experiment::SingleChannel };
            let points = eye_diagram(&load(&config)?, experiment, channel, sequence, bits)?;
            let mut w = sink(Some(&out))?;
            write_eye_csv(&mut w, &points)?;
            w.flush()?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(m)) => {
            eprintln!("config error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Sync(m)) => {
            eprintln!("sync failure: {m}");
            ExitCode::from(3)
        }
        Err(Failure::Other(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
    }
}
