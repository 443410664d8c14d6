use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use lola_core::cli::{
    format_check, run_check, run_offline, run_online, Mode, RunConfig, RunFailure, RunReport,
    Source,
};

/// Stream runtime monitor for Lola specifications.
#[derive(Parser)]
#[command(name = "lola", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Type check and analyse specifications without evaluating them.
    Check(Common),
    /// Evaluate a complete log file.
    Offline(RunArgs),
    /// Evaluate records incrementally as they arrive.
    Online(RunArgs),
}

#[derive(Args)]
struct Common {
    /// Specification file; repeat to merge several.
    #[arg(long = "spec", required = true)]
    specs: Vec<PathBuf>,
    /// Print the report as JSON.
    #[arg(long)]
    json_report: bool,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: Common,
    /// Input log, or `-` for standard input.
    #[arg(long, conflicts_with = "listen")]
    input: Option<String>,
    /// Accept one TCP connection on this address and read records from it.
    #[arg(long)]
    listen: Option<String>,
    /// Number of records buffered before evaluation (online mode).
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    evalstep: u64,
    /// Base directory for relative tag and filter locations.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Report wall time, throughput and state size.
    #[arg(long)]
    stats: bool,
    /// Repeat the previous record instead of stopping on a malformed one.
    #[arg(long)]
    lenient: bool,
}

fn print_report(report: &RunReport, json: bool, stats: bool) {
    let text = if json {
        report.to_json() + "\n"
    } else {
        report.format_text(stats)
    };
    let _ = io::stderr().write_all(text.as_bytes());
}

fn run(args: RunArgs, mode: Mode) -> ExitCode {
    let source = match (args.input.as_deref(), args.listen) {
        (Some("-"), _) => Some(Source::Stdin),
        (Some(p), _) => Some(Source::Path(PathBuf::from(p))),
        (None, Some(addr)) if mode == Mode::Online => Some(Source::Listen(addr)),
        _ => None,
    };
    let config = RunConfig {
        specs: args.common.specs,
        mode,
        source,
        out_dir: args.out_dir,
        evalstep: args.evalstep as usize,
        lenient: args.lenient,
        stats: args.stats,
    };
    let stdout = io::stdout();
    let mut out = io::BufWriter::new(stdout.lock());
    let result = match mode {
        Mode::Online => run_online(&config, &mut out),
        _ => run_offline(&config, &mut out),
    };
    let _ = out.flush();
    match result {
        Ok(report) => {
            print_report(&report, args.common.json_report, config.stats);
            ExitCode::SUCCESS
        }
        Err(failure) => {
            let RunFailure { error, report } = *failure;
            if let Some(report) = report {
                print_report(&report, args.common.json_report, config.stats);
            }
            eprintln!("error: {error}");
            ExitCode::from(error.exit_code() as u8)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Check(common) => {
            let config = RunConfig::new(Mode::Check, common.specs);
            match run_check(&config) {
                Ok(result) => {
                    if common.json_report {
                        println!("{}", result.to_json());
                    } else {
                        print!("{}", format_check(&result));
                    }
                    if result.well_formed {
                        ExitCode::SUCCESS
                    } else {
                        ExitCode::from(1)
                    }
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(e.exit_code() as u8)
                }
            }
        }
        Command::Offline(args) => run(args, Mode::Offline),
        Command::Online(args) => run(args, Mode::Online),
    }
}
