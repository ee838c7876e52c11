use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use xprun::cli::{execute, Invocation};
use xprun::Scenario;

/// Runs one simulation scenario and writes CSVs plus a manifest.
#[derive(Parser, Debug)]
#[command(name = "sim", version)]
struct Args {
    /// single_qubit, quantum_walk, nine_chain, five_chain_phase_sweep,
    /// floquet_calibrate or symmetry_check.
    scenario: Scenario,
    /// JSON config, or a manifest.json from an earlier run to reproduce it.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (default: out/<scenario>).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed list: JSON array or whitespace-separated integers.
    #[arg(long)]
    seeds: Option<PathBuf>,
    /// Worker threads for trajectory ensembles.
    #[arg(long)]
    workers: Option<usize>,
    /// Replace existing output files.
    #[arg(long)]
    force: bool,
    /// Quantum walk under the lab-frame Floquet model.
    #[arg(long)]
    lab_frame: bool,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let inv = Invocation {
        scenario: args.scenario,
        out: args
            .out
            .unwrap_or_else(|| PathBuf::from("out").join(args.scenario.name())),
        config: args.config,
        seeds: args.seeds,
        workers: args
            .workers
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get())),
        force: args.force,
        lab_frame: args.lab_frame,
    };
    match execute(&inv) {
        Ok((output, manifest)) => {
            for c in &output.checks {
                println!(
                    "{} {}: {}",
                    if c.passed { "PASS" } else { "FAIL" },
                    c.name,
                    c.detail
                );
            }
            println!(
                "wrote {} files to {}",
                manifest.hashes.len() + 1,
                inv.out.display()
            );
            if output.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
