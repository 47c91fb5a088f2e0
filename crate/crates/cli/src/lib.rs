//! Command-line front end: file loading, reports and exit codes.

mod commands;
pub mod io;
pub mod report;

use std::ffi::OsString;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use lebesgue::ToleranceConfig;

#[derive(Parser, Debug)]
#[command(name = "lebesgue", version, about = "Lebesgue decompositions of positive operators and normal functionals")]
struct Cli {
    #[command(flatten)]
    flags: Flags,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Flags {
    /// Relative stopping threshold for the iterative limit
    #[arg(long, global = true, value_name = "FLOAT")]
    tol: Option<f64>,
    /// Clipping band for slightly negative eigenvalues
    #[arg(long = "psd-tol", global = true, value_name = "FLOAT")]
    psd_tol: Option<f64>,
    /// Relative eigenvalue cutoff for ranks, ranges and pseudoinverses
    #[arg(long = "rank-cutoff", global = true, value_name = "FLOAT")]
    rank_cutoff: Option<f64>,
    #[arg(long = "max-iters", global = true, value_name = "INT")]
    max_iters: Option<usize>,
    /// Truncate sequence inputs to N x N diagonal matrices
    #[arg(long, global = true, value_name = "INT")]
    truncate: Option<usize>,
    /// Seed for sampled test panels
    #[arg(long, global = true, value_name = "INT", default_value_t = 0)]
    seed: u64,
    /// Only report errors
    #[arg(long, global = true)]
    quiet: bool,
}

impl Flags {
    pub fn config(&self) -> ToleranceConfig {
        let mut cfg = ToleranceConfig::default();
        if let Some(v) = self.tol {
            cfg.conv_tol = v;
        }
        if let Some(v) = self.psd_tol {
            cfg.psd_tol = v;
        }
        if let Some(v) = self.rank_cutoff {
            cfg.rank_cutoff = v;
        }
        if let Some(v) = self.max_iters {
            cfg.max_iters = v;
        }
        cfg
    }

    pub fn info(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            eprintln!("{}", msg.as_ref());
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Decompose S relative to T and write a run report
    Decompose { s: String, t: String, out: String },
    /// Print whether the decomposition of G relative to F is unique
    CheckUnique { g: String, f: String },
    /// Write a pair of sequences whose decomposition is not unique
    Counterexample { lambda: String, out: String },
    /// Write the convergence trace of the iterative approximants as CSV
    ConvergeReport { s: String, t: String, csv: String },
}

/// Parses `args` (including the program name), runs the command and maps
/// the outcome to an exit code: 0 success, 2 invalid input, 3 numerical
/// failure, 1 internal error.
pub fn run<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let text = e.to_string();
            let first = text.lines().next().unwrap_or("invalid arguments");
            eprintln!("error: {}", first.trim_start_matches("error: "));
            return ExitCode::from(2);
        }
    };
    let result = match &cli.command {
        Command::Decompose { s, t, out } => commands::decompose(s, t, out, &cli.flags),
        Command::CheckUnique { g, f } => commands::check_unique(g, f, &cli.flags),
        Command::Counterexample { lambda, out } => commands::counterexample(lambda, out, &cli.flags),
        Command::ConvergeReport { s, t, csv } => commands::converge_report(s, t, csv, &cli.flags),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message().replace('\n', " "));
            ExitCode::from(e.code())
        }
    }
}
