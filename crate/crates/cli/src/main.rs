//! `qgraph`: generate α–β trees, solve Dirichlet problems, print DN matrices,
//! and run boundary-measure exhaustion studies.
//!
//! Exit codes: 0 success, 2 invalid input or hard error, 3 a measure or
//! convergence run that did not converge.

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::{ExhaustionArgs, TreeArgs};

#[derive(Debug, Parser)]
#[command(name = "qgraph", version, about = "Dirichlet-to-Neumann maps on metric graphs and α–β trees")]
struct Cli {
    /// TOML run configuration; flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads for per-level solves.
    #[arg(long, global = true, env = "QGRAPH_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write an α–β tree truncation as a graph file and print its report.
    Generate {
        #[command(flatten)]
        tree: TreeArgs,
        /// Extra edge `U:V:LENGTH`; repeatable.
        #[arg(long = "shortcut", value_parser = commands::parse_shortcut)]
        shortcuts: Vec<(usize, usize, f64)>,
        /// Link every sibling pair at level k with an edge of length SCALE^k.
        #[arg(long)]
        sibling_shortcuts: Option<f64>,
        /// Seed for the sampled comparability check.
        #[arg(long)]
        seed: Option<u64>,
        /// Graph file to write; standard output when absent.
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Solve a Dirichlet problem and print the identity and maximum-principle checks.
    Solve {
        #[arg(long)]
        graph: Option<PathBuf>,
        #[command(flatten)]
        tree: TreeArgs,
        /// Boundary values in boundary order, comma separated.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        values: Option<Vec<f64>>,
        /// Simple boundary function on a tree, e.g. `1*cyl:a;0.5*root`.
        #[arg(long = "F")]
        f: Option<String>,
        /// Declared data range `LO:HI`; data outside it is rejected.
        #[arg(long, allow_hyphen_values = true)]
        range: Option<String>,
        /// Skip the declared-range check.
        #[arg(long)]
        no_range_check: bool,
        /// Write vertex and edge records here instead of standard output.
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Print the Dirichlet-to-Neumann matrix and its structure checks.
    Dn {
        #[arg(long)]
        graph: Option<PathBuf>,
        #[command(flatten)]
        tree: TreeArgs,
        /// Write the labeled matrix here.
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Tabulate Λ(F, ·) on {v₀} and the depth-k cylinders.
    Measure {
        #[command(flatten)]
        tree: TreeArgs,
        #[arg(long = "F")]
        f: String,
        #[arg(long, default_value_t = 2)]
        partition_depth: usize,
        #[command(flatten)]
        exhaustion: ExhaustionArgs,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Exhaustion sequence Λ_n(F, E) with a convergence verdict.
    Converge {
        #[command(flatten)]
        tree: TreeArgs,
        #[arg(long = "F")]
        f: String,
        #[arg(long = "E")]
        e: String,
        #[command(flatten)]
        exhaustion: ExhaustionArgs,
        /// Emit whitespace-separated (n, Λ_n) columns instead of the table.
        #[arg(long)]
        plot_data: bool,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        // only fails if a pool already exists, which cannot happen this early
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match commands::run(cli) {
        Ok(status) => status.exit_code(),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
