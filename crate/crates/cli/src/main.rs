//! `rotordiag`: simulate rotors and analyse vibration records from the
//! command line. One subcommand per workflow; see `rotordiag help`.

/// `println!` that ignores a closed stdout (e.g. piped into `head`).
macro_rules! say {
    ($($arg:tt)*) => {{
        use std::io::Write as _;
        let _ = writeln!(std::io::stdout(), $($arg)*);
    }};
}

mod commands;
mod config;
mod error;
mod output;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{diagnose, frf, orbit, selftest, shock, simulate, trend};
use error::CliResult;

#[derive(Parser)]
#[command(
    name = "rotordiag",
    version,
    about = "Rotordynamics vibration diagnostics"
)]
struct Cli {
    /// JSON file with the subcommand's parameters (snake_case keys);
    /// command-line flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    Simulate(simulate::SimulateArgs),
    Orbit(orbit::OrbitArgs),
    Frf(frf::FrfArgs),
    Shock(shock::ShockArgs),
    Diagnose(diagnose::DiagnoseArgs),
    Trend(trend::TrendArgs),
    Selftest(selftest::SelftestArgs),
}

fn dispatch(cli: Cli) -> CliResult<()> {
    let cfg = cli.config.as_deref();
    match cli.command {
        Command::Simulate(a) => simulate::run(config::resolve(&a, cfg, "simulate")?),
        Command::Orbit(a) => orbit::run(config::resolve(&a, cfg, "orbit")?),
        Command::Frf(a) => frf::run(config::resolve(&a, cfg, "frf")?),
        Command::Shock(a) => shock::run(config::resolve(&a, cfg, "shock")?),
        Command::Diagnose(a) => diagnose::run(config::resolve(&a, cfg, "diagnose")?),
        Command::Trend(a) => trend::run(config::resolve(&a, cfg, "trend")?),
        Command::Selftest(a) => selftest::run(config::resolve(&a, cfg, "selftest")?),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
