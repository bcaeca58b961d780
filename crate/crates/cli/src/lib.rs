//! `frontspeed`: minimal speeds, regime sweeps, homogenization and front
//! simulation from the command line.
//!
//! Exit status: 0 on success, 2 when a hypothesis of the requested limit
//! fails, 1 on a numerical failure, 64 on a usage or configuration error.

pub mod commands;
pub mod config;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use frontspeed_core::ReactionMode;

pub use commands::{execute, CliError, Outcome};
pub use config::{parse_config, Command, ConfigError, Format, MediumSource, Regime, RunConfig};

pub const EXIT_OK: u8 = 0;
pub const EXIT_NUMERIC: u8 = 1;
pub const EXIT_HYPOTHESIS: u8 = 2;
pub const EXIT_USAGE: u8 = 64;

#[derive(Debug, Parser)]
#[command(
    name = "frontspeed",
    version,
    about = "Minimal speeds of pulsating KPP fronts"
)]
struct Cli {
    #[command(subcommand)]
    command: CliCommand,
}

#[derive(Debug, Subcommand)]
enum CliCommand {
    /// Minimal speed c* of one medium.
    Speed(Common),
    /// Rescaled speeds along a parameter sequence, with the limit column.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        regime: Regime,
        #[command(flatten)]
        sweep: SweepArgs,
    },
    /// Speeds in the medium shrunk by ε, against the averaged limit.
    Homogenize {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        sweep: SweepArgs,
    },
    /// Direct simulation of a front from step data on a line medium.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Simulated time.
        #[arg(long = "T", default_value_t = 80.0)]
        total_time: f64,
        /// Fraction of the run excluded from the speed fit.
        #[arg(long, default_value_t = 0.5)]
        burn_in: f64,
        /// Times at which the whole window is written to STEM.frames.csv.
        #[arg(long, value_delimiter = ',')]
        frames: Vec<f64>,
    },
    /// Check the structural hypotheses of a medium.
    Validate(Common),
    /// Run a JSON config file.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Debug, Args)]
struct Common {
    /// Medium document (JSON).
    #[arg(long)]
    medium: PathBuf,
    /// Grid points per direction, `N` or `N1,N2`.
    #[arg(long, value_delimiter = ',')]
    grid: Vec<usize>,
    /// Relative tolerance of the minimization over λ.
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    #[arg(long)]
    lambda_min: Option<f64>,
    #[arg(long)]
    lambda_max: Option<f64>,
    /// Output stem; STEM.csv and STEM.json are written.
    #[arg(long)]
    out: Option<PathBuf>,
    /// What to print on stdout.
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Accept a flow with nonzero cell average.
    #[arg(long)]
    waive_zero_average: bool,
    /// Accept ∇·(Ae) ≠ 0 in the averaged limits.
    #[arg(long)]
    waive_divergence_free_diffusion_flux: bool,
    /// Accept media outside the structural assumptions of the peak limits.
    #[arg(long)]
    waive_structure: bool,
}

#[derive(Debug, Args)]
struct SweepArgs {
    /// Parameter values, comma separated.
    #[arg(long, value_delimiter = ',')]
    points: Vec<f64>,
    /// Advection exponent.
    #[arg(long)]
    gamma: Option<f64>,
    /// Direction of the reaction sweep.
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
enum ModeArg {
    ToInfinity,
    ToZero,
    Monotone,
}

impl From<ModeArg> for ReactionMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::ToInfinity => ReactionMode::ToInfinity,
            ModeArg::ToZero => ReactionMode::ToZero,
            ModeArg::Monotone => ReactionMode::Monotone,
        }
    }
}

impl Common {
    fn into_config(self, command: Command) -> RunConfig {
        let mut c = RunConfig::new(command, MediumSource::Path(self.medium));
        c.grid = (!self.grid.is_empty()).then_some(self.grid);
        c.tol = self.tol;
        c.lambda_min = self.lambda_min;
        c.lambda_max = self.lambda_max;
        c.out = self.out;
        c.format = self.format;
        c.waive_zero_average = self.waive_zero_average;
        c.waive_divergence_free_diffusion_flux = self.waive_divergence_free_diffusion_flux;
        c.waive_structure = self.waive_structure;
        c
    }
}

impl SweepArgs {
    fn apply(self, c: &mut RunConfig) {
        c.points = (!self.points.is_empty()).then_some(self.points);
        c.gamma = self.gamma;
        c.mode = self.mode.map(Into::into);
    }
}

fn config_from_cli(cli: Cli) -> Result<RunConfig, CliError> {
    let config = match cli.command {
        CliCommand::Speed(common) => common.into_config(Command::Speed),
        CliCommand::Validate(common) => common.into_config(Command::Validate),
        CliCommand::Sweep {
            common,
            regime,
            sweep,
        } => {
            let mut c = common.into_config(Command::Sweep);
            c.regime = Some(regime);
            sweep.apply(&mut c);
            c
        }
        CliCommand::Homogenize { common, sweep } => {
            let mut c = common.into_config(Command::Homogenize);
            sweep.apply(&mut c);
            c
        }
        CliCommand::Simulate {
            common,
            total_time,
            burn_in,
            frames,
        } => {
            let mut c = common.into_config(Command::Simulate);
            c.total_time = total_time;
            c.burn_in = burn_in;
            c.frames = frames;
            c
        }
        CliCommand::Run { config } => {
            let text = std::fs::read_to_string(&config)
                .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", config.display())))?;
            return Ok(parse_config(&text, config.parent())?);
        }
    };
    config.validate()?;
    Ok(config)
}

/// Cap the worker pool at `FRONTSPEED_THREADS` when set.
fn configure_threads() -> Result<(), CliError> {
    let Ok(value) = std::env::var("FRONTSPEED_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| {
            CliError::Usage(format!(
                "FRONTSPEED_THREADS must be a positive integer, got {value:?}"
            ))
        })?;
    // A pool built earlier in this process (tests call `run` repeatedly) stays.
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global();
    Ok(())
}

/// Parse `args` (program name first), run, and return the exit status.
pub fn run<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let result = configure_threads()
        .and_then(|()| config_from_cli(cli))
        .and_then(|config| execute(&config));
    match result {
        Ok(outcome) => {
            for w in &outcome.warnings {
                eprintln!("warning: {w}");
            }
            print!("{}", outcome.stdout);
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
