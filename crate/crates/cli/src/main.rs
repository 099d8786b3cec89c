use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use kubo_cli::{execute, CliError, Computation, Invocation, SweepParameter, UnitsFlag, OUTPUT_DIR_ENV};

/// Kubo conductivities, Chern numbers and exact-diagonalization checks for
/// two-dimensional lattice models.
#[derive(Parser)]
#[command(name = "kubo-lattice", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Free-fermion Kubo conductivity tensor with zero-frequency extrapolation.
    Conductivity(Common),
    /// Chern number of the occupied bands.
    Chern(Common),
    /// Kubo Hall conductivity against the Chern number.
    KuboVsTknn(Common),
    /// Many-body spectrum by exact diagonalization.
    EdSpectrum(Common),
    /// Conductivity of the interacting model by exact diagonalization.
    EdConductivity(Common),
    /// Hall conductivity deviation across couplings and sizes.
    EdUstability(Common),
    /// Imaginary-time against real-time evaluation of the conductivity.
    WickCheck(Common),
    /// Lattice continuity equation and its negative control.
    WardCheck(Common),
}

#[derive(Args)]
struct Common {
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Conductivity units: natural or e2h.
    #[arg(long)]
    units: Option<UnitsFlag>,
    /// Output directory (overrides the config and the environment).
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// Config override `section.key=value`; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Convergence sweep `parameter=v1,v2,...` written to convergence.csv.
    #[arg(long, value_name = "PARAM=VALUES")]
    sweep: Option<String>,
}

fn parse_sweep(s: &str) -> Result<(SweepParameter, Vec<f64>), CliError> {
    let (name, list) = s.split_once('=').ok_or_else(|| CliError::Config(format!("sweep '{s}' must look like param=v1,v2")))?;
    let param: SweepParameter = name.trim().parse().map_err(CliError::Config)?;
    let values = list
        .split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|e| CliError::Config(format!("sweep value '{v}': {e}"))))
        .collect::<Result<Vec<_>, _>>()?;
    Ok((param, values))
}

fn invocation(cli: Cli) -> Result<Invocation, CliError> {
    let (computation, c) = match cli.command {
        Command::Conductivity(c) => (Computation::Conductivity, c),
        Command::Chern(c) => (Computation::Chern, c),
        Command::KuboVsTknn(c) => (Computation::KuboVsTknn, c),
        Command::EdSpectrum(c) => (Computation::EdSpectrum, c),
        Command::EdConductivity(c) => (Computation::EdConductivity, c),
        Command::EdUstability(c) => (Computation::EdUstability, c),
        Command::WickCheck(c) => (Computation::WickCheck, c),
        Command::WardCheck(c) => (Computation::WardCheck, c),
    };
    Ok(Invocation {
        computation: Some(computation),
        config_path: c.config,
        units: c.units,
        output_dir: c.output_dir,
        overrides: c.overrides,
        env_output_dir: std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from),
        sweep: c.sweep.as_deref().map(parse_sweep).transpose()?,
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let err = CliError::Config(e.to_string().trim().to_string());
            eprintln!("{}", err.to_json());
            return ExitCode::from(err.exit_code() as u8);
        }
    };
    match invocation(cli).and_then(|inv| execute(&inv)) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("{}", err.to_json());
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
