//! `jitterinv`: delay-inversion analytics, the metric-difference sweep and
//! the flooding simulator behind one command.

mod exit;
mod instance;
mod output;
mod parse;
mod pdelay;
mod simulate;
mod sweep;

use clap::{Parser, Subcommand};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "jitterinv", version, about = "Delay inversion under jittered flooding")]
#[command(after_help = "\
Syntax:
  intervals   comma-separated a:b pairs in ms, e.g. --r1 0:100,20:60
  metrics     comma-separated link metrics in (0, 1], e.g. --r1-metrics 1,0.8,0.9
  mechanisms  rfc5148, deterministic, window, adaptive, bounded-adaptive

Exit status:
  0  success
  1  analytic failure, failed check, or I/O error
  2  usage error (bad flags, malformed interval or metric list)
  3  fixed-delay mechanism given to the analytic path
  4  hop-count capacity exceeded")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Probability that route 1's total jitter exceeds route 2's.
    Pdelay(pdelay::PdelayArgs),
    /// Mean inversion probability against route-metric difference.
    Sweep(sweep::SweepArgs),
    /// Flooding simulation over one or more network densities.
    Simulate(simulate::SimulateArgs),
    /// Cross-check closed form, quadrature and Monte Carlo on one instance.
    McCheck(pdelay::McCheckArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Pdelay(args) => pdelay::run_pdelay(&args),
        Command::Sweep(args) => sweep::run(&args),
        Command::Simulate(args) => simulate::run(&args),
        Command::McCheck(args) => pdelay::run_mc_check(&args),
    };
    match result {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit::code_for(&err))
        }
    }
}
