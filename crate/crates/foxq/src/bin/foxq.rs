//! Command-line driver: verification suites, oracle queries and the
//! built-in corpus listing.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use foxq::cli::{
    self, build_group, emit_report, parse_group_spec, quotient_query, run_suite, CliError, Suite,
};

#[derive(Parser)]
#[command(name = "foxq", version, about = "Exact verification of Fox and augmentation quotients of finite semidirect products")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run verification suites on a group and emit a report.
    Verify {
        /// Path to a JSON group specification.
        #[arg(long)]
        group: PathBuf,
        /// Highest degree the suites verify (suites needing more are skipped).
        #[arg(long, default_value_t = 5)]
        max_degree: usize,
        /// Comma-separated suites (default: all). One of: split, theta, q2,
        /// q3, q4, towers, amalgam, mirror, torsionfree, oracle-only.
        #[arg(long, value_delimiter = ',')]
        suite: Vec<String>,
        /// Write the report to a file instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Output format.
        #[arg(long, default_value = "json")]
        format: String,
        /// Refuse groups larger than this order.
        #[arg(long, default_value_t = 200)]
        max_order: usize,
    },
    /// Query a single Fox quotient from the lattice oracle.
    Quotient {
        #[arg(long)]
        group: PathBuf,
        /// Which relative ideal: G, N or T.
        #[arg(long)]
        ideal: String,
        /// Quotient degree.
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 200)]
        max_order: usize,
    },
    /// List the built-in corpus groups.
    Corpus,
}

fn run() -> Result<bool, CliError> {
    let cli = Cli::parse();
    match cli.cmd {
        Cmd::Verify { group, max_degree, suite, out, format, max_order } => {
            if !(2..=5).contains(&max_degree) {
                return Err(CliError::Usage("--max-degree must be between 2 and 5".into()));
            }
            let spec = parse_group_spec(&group)?;
            let sd = build_group(&spec)?;
            if sd.group.order() > max_order {
                return Err(CliError::Usage(format!(
                    "group order {} exceeds --max-order {max_order}",
                    sd.group.order()
                )));
            }
            let suites: Vec<Suite> =
                suite.iter().map(|s| s.parse()).collect::<Result<_, _>>()?;
            let report = run_suite(&sd, &spec.name, max_degree, &suites);
            let rendered = emit_report(&report, &format)?;
            match out {
                Some(path) => std::fs::write(&path, rendered)
                    .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?,
                None => print!("{rendered}"),
            }
            Ok(report.all_pass())
        }
        Cmd::Quotient { group, ideal, n, max_order } => {
            let spec = parse_group_spec(&group)?;
            let sd = build_group(&spec)?;
            if sd.group.order() > max_order {
                return Err(CliError::Usage(format!(
                    "group order {} exceeds --max-order {max_order}",
                    sd.group.order()
                )));
            }
            println!("{}", quotient_query(&sd, &spec.name, &ideal, n)?);
            Ok(true)
        }
        Cmd::Corpus => {
            print!("{}", cli::corpus_listing());
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
