use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use twoscale_cli::commands::{self, CliError, CliResult, Options};
use twoscale_cli::config::{parse_config, RunConfig};

#[derive(Parser)]
#[command(name = "twoscale", version, about = "Two-scale Landau-Lifshitz micromagnetics runs")]
struct Cli {
    /// TOML run configuration
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (created if missing)
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Overrides experiment.seed
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Relax to the frozen-time equilibrium at the first schedule knot
    Relax,
    /// Integrate over the horizon and record sampled diagnostics
    Evolve,
    /// Distance to the equilibrium for each epsilon of the ladder
    Asymptotics,
    /// Single-cell loop under a triangular field sweep
    Hysteresis,
    /// Sign of the linearized dissipation form around constant equilibria
    DissipationScan,
    /// Checks of the demagnetizing operator on a sphere
    DemagSelftest {
        /// Cells across the sphere diameter
        #[arg(long, default_value_t = 64)]
        resolution: usize,
    },
    /// Checks of the Neumann cosine projector
    SpectralSelftest,
    /// Render SVG charts for CSV tables written by other subcommands
    Plot {
        #[arg(long = "input", required = true, num_args = 1..)]
        inputs: Vec<PathBuf>,
    },
}

fn load(cli: &Cli) -> CliResult<RunConfig> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::Usage("this subcommand needs --config PATH".into()))?;
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.clone(),
        source,
    })?;
    let mut cfg = parse_config(&text)?;
    if let Some(seed) = cli.seed {
        cfg.experiment.seed = seed;
    }
    Ok(cfg)
}

fn run(cli: &Cli) -> CliResult<()> {
    std::fs::create_dir_all(&cli.out).map_err(|source| CliError::Io {
        path: cli.out.clone(),
        source,
    })?;
    let opts = Options {
        out: cli.out.clone(),
        quiet: cli.quiet,
    };
    let seed = cli.seed.unwrap_or(0);
    match &cli.command {
        Command::Relax => commands::relax(&load(cli)?, &opts),
        Command::Evolve => commands::evolve(&load(cli)?, &opts),
        Command::Asymptotics => commands::asymptotics(&load(cli)?, &opts),
        Command::Hysteresis => commands::hysteresis(&load(cli)?, &opts),
        Command::DissipationScan => commands::scan(&load(cli)?, &opts),
        Command::DemagSelftest { resolution } => commands::demag_selftest(*resolution, seed, &opts),
        Command::SpectralSelftest => commands::spectral_selftest(seed, &opts),
        Command::Plot { inputs } => commands::plot(inputs, &opts),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
