use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rse_game::harness::{
    invariant_suite, load_config, run_scenario, RunReport, Scenario, ScenarioConfig,
};
use rse_game::Result;

#[derive(Parser)]
#[command(
    name = "rse-game",
    version,
    about = "Jamming games for remote state estimation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the scenario described by a TOML config.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Use seeds 0..N instead of the config's list.
        #[arg(long)]
        seeds: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write SVG plots next to the CSV logs.
        #[arg(long)]
        plots: bool,
    },
    /// Model check, tabular oracle and invariant quick-suite on the benchmark.
    Verify {
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Solve the benchmark game with tabular minimax value iteration.
    Oracle {
        #[arg(long, default_value_t = 4)]
        depth: usize,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

fn print_report(report: &RunReport) {
    if let Some(trace) = &report.trace {
        for p in trace {
            println!("k={:<3} trace={:.6}", p.k, p.trace);
        }
    }
    if let Some(o) = &report.oracle {
        println!("equilibrium at P̄: {}", o.equilibrium);
        println!(
            "value at P̄: {:.6}  ({} states, {} sweeps)",
            o.root_value, o.states, o.sweeps
        );
        for (probe, ne) in &o.probes {
            println!("  {probe:<10} {ne}");
        }
    }
    for s in &report.seeds {
        println!(
            "seed {:<3} steps {:<6} converged {:<8} loss {:>10} / {:>10}",
            s.seed,
            s.steps,
            s.converged_at.map_or("-".into(), |c| c.to_string()),
            s.final_loss_device
                .map_or("-".into(), |l| format!("{l:.4}")),
            s.final_loss_attacker
                .map_or("-".into(), |l| format!("{l:.4}")),
        );
        for (probe, ne) in &s.equilibrium {
            println!("  {probe:<10} {ne}");
        }
    }
    if let Some(last) = report.artifacts.last() {
        println!("report: {}", last.display());
    }
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Run {
            config,
            seeds,
            out,
            plots,
        } => {
            let mut cfg = load_config(config)?;
            if let Some(n) = seeds {
                cfg.seeds = (0..n).collect();
            }
            if let Some(out) = out {
                cfg.output = out;
            }
            cfg.plots |= plots;
            print_report(&run_scenario(&cfg)?);
            Ok(true)
        }
        Command::Verify { out } => {
            let mut ok = true;
            for scenario in [Scenario::VerifyModel, Scenario::Oracle] {
                let mut cfg = ScenarioConfig::for_scenario(scenario);
                cfg.output = out.clone();
                println!("== {scenario}");
                print_report(&run_scenario(&cfg)?);
            }
            println!("== invariants");
            for c in invariant_suite(0)? {
                ok &= c.passed;
                println!(
                    "{} {} {}",
                    if c.passed { "PASS" } else { "FAIL" },
                    c.name,
                    c.detail
                );
            }
            Ok(ok)
        }
        Command::Oracle { depth, config, out } => {
            let mut cfg = match config {
                Some(path) => load_config(path)?,
                None => ScenarioConfig::default(),
            };
            cfg.scenario = Scenario::Oracle;
            cfg.oracle.depth = depth;
            cfg.output = out;
            print_report(&run_scenario(&cfg)?);
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
