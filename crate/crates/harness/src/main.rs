use std::io::{self, IsTerminal};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use cortexsim::cli::{self, Globals, RulesArgs};
use cortexsim::trace::TraceFormat;

#[derive(Parser, Debug)]
#[command(name = "cortexsim", version, about = "Rate-coded spiking network simulator")]
struct Args {
    /// Seed for the network rng; overrides config files and `set` lines.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// `key = value` config file applied before anything else.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Trace file format.
    #[arg(long, global = true, default_value = "csv", value_parser = ["csv", "jsonl"])]
    trace_format: String,
    /// Directory for traces and relative snapshot paths.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Run a scenario script and write its trace.
    Simulate { scenario: PathBuf },
    /// Interactive session, optionally resuming a snapshot.
    Repl { snapshot: Option<PathBuf> },
    /// Save or inspect snapshots.
    Snapshot {
        #[command(subcommand)]
        op: SnapOp,
    },
    /// Compile a rule file and query it.
    Rules {
        rulefile: PathBuf,
        /// Atoms held true during inference.
        #[arg(long, value_delimiter = ',')]
        facts: Vec<String>,
        #[arg(long)]
        horizon: Option<u64>,
        /// Print a truth table, e.g. `a,b:out`.
        #[arg(long)]
        table: Option<String>,
        /// Replays of transitive consolidation.
        #[arg(long)]
        consolidate: Option<u32>,
    },
    /// Build a sandglass network and print the positional report.
    Topo { specfile: PathBuf },
}

#[derive(Subcommand, Debug)]
enum SnapOp {
    /// Run a scenario and save the final session.
    Save { scenario: PathBuf, out: PathBuf },
    /// Load a snapshot, optionally run more ticks, and print a summary.
    Load {
        file: PathBuf,
        #[arg(long, default_value_t = 0)]
        ticks: u64,
    },
}

fn main() -> ExitCode {
    let args = Args::parse();
    let g = Globals {
        seed: args.seed,
        config: args.config,
        trace_format: args.trace_format.parse::<TraceFormat>().expect("validated by clap"),
        out_dir: args.out_dir,
    };
    let (mut out, mut err) = (io::stdout().lock(), io::stderr().lock());
    let code = match args.cmd {
        Cmd::Simulate { scenario } => cli::simulate(&g, &scenario, &mut out, &mut err),
        Cmd::Repl { snapshot } => {
            let stdin = io::stdin();
            let prompt = stdin.is_terminal();
            cli::repl(&g, snapshot.as_deref(), stdin.lock(), &mut out, &mut err, prompt)
        }
        Cmd::Snapshot { op: SnapOp::Save { scenario, out: dest } } => cli::snapshot_save(&g, &scenario, &dest, &mut out, &mut err),
        Cmd::Snapshot { op: SnapOp::Load { file, ticks } } => cli::snapshot_load(&g, &file, ticks, &mut out, &mut err),
        Cmd::Rules { rulefile, facts, horizon, table, consolidate } => {
            cli::rules(&g, &rulefile, &RulesArgs { facts, horizon, table, consolidate }, &mut out, &mut err)
        }
        Cmd::Topo { specfile } => cli::topo(&g, &specfile, &mut out, &mut err),
    };
    ExitCode::from(code as u8)
}
