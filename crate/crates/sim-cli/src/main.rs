//! `simulate`: run a periodically driven open-system model from a JSON
//! config, cross-validate the three propagation routes and emit artifacts.
//!
//! Exit code 0 iff every structural check passes.

mod config;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

#[derive(Parser)]
#[command(name = "simulate", version, about = "Periodic Lindbladian simulator")]
struct Cli {
    /// Path to the JSON configuration file.
    #[arg(long)]
    config: PathBuf,

    /// Output directory for trajectory.csv, ladder.csv, diagnostics.json,
    /// report.json and report.txt.
    #[arg(long, default_value = "out")]
    out: PathBuf,

    /// Run the checks and print the report without writing data files.
    #[arg(long)]
    check_only: bool,

    /// Print the report table and progress to stdout.
    #[arg(long)]
    verbose: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();

    let cfg = match config::load_config(&cli.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("sim-cli: {e}");
            return ExitCode::from(2);
        }
    };

    if cli.verbose {
        println!(
            "simulate: d = {}, T = {:.6}, generator = {:?}, N = {}, seed = {}",
            cfg.dimension, cfg.period, cfg.generator, cfg.truncation, cfg.seed
        );
    }

    let artifacts = match run::run(&cfg) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("sim-cli: {e}");
            return ExitCode::from(2);
        }
    };

    let report_txt = artifacts.report.render();
    let report_json = artifacts.report.to_json();

    if !cli.check_only {
        if let Err(e) = std::fs::create_dir_all(&cli.out) {
            eprintln!("sim-cli: cannot create output directory: {e}");
            return ExitCode::from(2);
        }
        let writes = [
            ("trajectory.csv", &artifacts.trajectory_csv),
            ("ladder.csv", &artifacts.ladder_csv),
            ("diagnostics.json", &artifacts.diagnostics_json),
            ("report.json", &report_json),
            ("report.txt", &report_txt),
        ];
        for (name, content) in writes {
            if let Err(e) = std::fs::write(cli.out.join(name), content) {
                eprintln!("sim-cli: cannot write {name}: {e}");
                return ExitCode::from(2);
            }
        }
    }

    if cli.verbose || cli.check_only {
        print!("{report_txt}");
    }

    if artifacts.report.all_pass() {
        ExitCode::SUCCESS
    } else {
        let failing: Vec<&str> = artifacts
            .report
            .checks
            .iter()
            .filter(|c| !c.pass)
            .map(|c| c.name.as_str())
            .collect();
        eprintln!("sim-cli: failing checks: {}", failing.join(", "));
        ExitCode::FAILURE
    }
}
