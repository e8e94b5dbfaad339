use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use ionmotion::CancelToken;
use ionmotion_cli::output::{write_outcome, Meta};
use ionmotion_cli::run::{self, Outcome};
use ionmotion_cli::{exit, parse_config, CliError, ConfigError, RunConfig};

/// Spin-motion dynamics of a trapped ion under microwave and oscillating
/// gradient drives.
#[derive(Debug, Parser)]
#[command(name = "ionmotion", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, clap::Args)]
struct RunArgs {
    /// TOML configuration file.
    config: PathBuf,
    /// CSV output path; overrides `output.path`. Standard output when neither is set.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write an SVG plot next to the CSV.
    #[arg(long)]
    plot: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Spin-flip probability against microwave detuning.
    Spectroscopy(RunArgs),
    /// Spin-flip probability against pulse length, with a sinusoid fit.
    Rabi(RunArgs),
    /// Spin-flip rates against the field-modulation index 4Ωz/ω_g.
    Bessel(RunArgs),
    /// Sideband resonance and Rabi frequency against drive strength.
    SidebandChar(RunArgs),
    /// Pulsed red-sideband cooling followed by sideband thermometry.
    Cool(RunArgs),
    /// Sideband-ratio thermometry of the configured initial state.
    Thermometry(RunArgs),
    /// Runs the end-to-end validation criteria.
    Validate {
        /// Comma-separated criterion numbers; all when omitted.
        #[arg(long, value_delimiter = ',')]
        criteria: Vec<u32>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        plot: bool,
    },
}

fn load(path: &Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError::Io { path: path.display().to_string(), message: e.to_string() })?;
    let (config, warnings) = parse_config(&text)?;
    for w in warnings {
        eprintln!("warning: {w}");
    }
    Ok(config)
}

fn workers() -> Result<usize, CliError> {
    if let Ok(v) = std::env::var("IONMOTION_WORKERS") {
        let n: usize = v.trim().parse().ok().filter(|n| *n > 0).ok_or_else(|| ConfigError::Semantic {
            path: "IONMOTION_WORKERS".into(),
            message: format!("must be a positive integer, got `{v}`"),
        })?;
        // fails only if the pool already exists, which it cannot here
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(rayon::current_num_threads())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match real_main(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn real_main(cli: Cli) -> Result<i32, CliError> {
    let workers = workers()?;
    let cancel = CancelToken::new();
    {
        let cancel = cancel.clone();
        let _ = ctrlc::set_handler(move || {
            eprintln!("interrupt: finishing points in flight and writing partial output");
            cancel.cancel();
        });
    }
    let start = Instant::now();
    let command_line = std::env::args().collect::<Vec<_>>().join(" ");

    let (outcome, hash, out, plot) = match cli.command {
        Command::Validate { criteria, out, plot } => {
            let outcome = run::run_validate(&criteria, &cancel, |r| eprintln!("{}", r.summary()))?;
            (outcome, None, out, plot)
        }
        Command::Spectroscopy(a) => dispatch(a, &cancel, run::run_spectroscopy)?,
        Command::Rabi(a) => dispatch(a, &cancel, run::run_rabi)?,
        Command::Bessel(a) => dispatch(a, &cancel, run::run_bessel)?,
        Command::SidebandChar(a) => dispatch(a, &cancel, run::run_sideband)?,
        Command::Cool(a) => dispatch(a, &cancel, run::run_cooling)?,
        Command::Thermometry(a) => dispatch(a, &cancel, run::run_thermometry)?,
    };
    let partial = outcome.partial || cancel.is_cancelled();
    let meta = Meta {
        tool: "ionmotion",
        version: env!("CARGO_PKG_VERSION"),
        command: command_line,
        config_sha256: hash,
        wall_time_s: start.elapsed().as_secs_f64(),
        partial,
        workers,
        results: outcome.results.clone(),
    };
    for f in write_outcome(&outcome, &meta, out.as_deref(), plot)? {
        eprintln!("wrote {}", f.display());
    }
    Ok(if partial {
        exit::INTERRUPTED
    } else if outcome.failed {
        exit::FAILED
    } else {
        exit::OK
    })
}

type Dispatched = (Outcome, Option<String>, Option<PathBuf>, bool);

fn dispatch(
    args: RunArgs,
    cancel: &CancelToken,
    f: fn(&RunConfig, &CancelToken) -> Result<Outcome, ionmotion::Error>,
) -> Result<Dispatched, CliError> {
    let config = load(&args.config)?;
    let out = args.out.or_else(|| config.output.path.clone().map(PathBuf::from));
    let outcome = f(&config, cancel)?;
    Ok((outcome, Some(config.hash()), out, args.plot))
}
