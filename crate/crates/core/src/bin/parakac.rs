//! Scenario-driven batch runner. Exit codes: 0 all checks pass,
//! 1 a check failed, 2 input problem, 3 numeric failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use parakac::error::Error;
use parakac::scenario::{self, Scenario};

#[derive(Parser)]
#[command(name = "parakac", about = "Probabilistic solver for terminal-value problems with measure data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario (a config file path or a bundled name) and write
    /// its CSV reports.
    Run {
        file: String,
        /// Override the scenario's sample-path count.
        #[arg(long)]
        paths: Option<usize>,
        /// Override the scenario's sampling seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Report directory (default: ./out/<scenario>).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the bundled scenario catalog.
    List,
    /// Run a verification suite over the bundled catalog:
    /// structural | duality | montecarlo | estimates | all.
    Check { suite: String },
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            let code = match e {
                Error::Numeric(_) | Error::IterationFailure { .. } | Error::StepSize(_) => 3,
                _ => 2,
            };
            ExitCode::from(code)
        }
    }
}

fn load(file: &str) -> Result<Scenario, Error> {
    let text = if Path::new(file).exists() {
        std::fs::read_to_string(file)?
    } else if let Some(builtin) = scenario::find_scenario(file) {
        builtin.to_string()
    } else {
        return Err(Error::Validation(format!("no such file or bundled scenario: {file}")));
    };
    Scenario::parse(&text)
}

fn dispatch(cli: Cli) -> Result<bool, Error> {
    match cli.command {
        Command::Run { file, paths, seed, out } => {
            let mut sc = load(&file)?;
            if let Some(p) = paths {
                sc.paths = p;
            }
            if let Some(s) = seed {
                sc.seed = s;
            }
            let dir = out.unwrap_or_else(|| PathBuf::from("out").join(&sc.name));
            let report = scenario::run_scenario(&sc, &dir)?;
            for c in &report.checks {
                println!(
                    "{}: {} = {:.6e} (bound {:.6e})",
                    if c.pass { "pass" } else { "FAIL" },
                    c.name,
                    c.value,
                    c.bound
                );
            }
            for e in &report.estimate_rows {
                println!(
                    "{}: {} lhs {:.6e} rhs {:.6e}",
                    if e.holds { "pass" } else { "FAIL" },
                    e.name,
                    e.lhs,
                    e.rhs
                );
            }
            println!("reports written to {}", dir.display());
            Ok(report.all_pass())
        }
        Command::List => {
            for (name, summary, _) in scenario::CATALOG {
                println!("{name:20} {summary}");
            }
            Ok(true)
        }
        Command::Check { suite } => run_suite(&suite),
    }
}

fn run_suite(suite: &str) -> Result<bool, Error> {
    let keep: &[&str] = match suite {
        "structural" => &[],
        "duality" => &["duality", "weak_form"],
        "montecarlo" => &["montecarlo", "capacity"],
        "estimates" => &["estimates", "delta"],
        "all" => &["duality", "weak_form", "montecarlo", "estimates", "capacity", "delta"],
        other => return Err(Error::Validation(format!("unknown suite `{other}`"))),
    };
    let tmp = std::env::temp_dir().join(format!("parakac-check-{}", std::process::id()));
    let mut ok = true;
    for (name, _, text) in scenario::CATALOG {
        let mut sc = Scenario::parse(text)?;
        sc.checks.retain(|c| keep.contains(&c.as_str()));
        if suite != "structural" && sc.checks.is_empty() {
            continue;
        }
        let report = scenario::run_scenario(&sc, &tmp.join(name))?;
        let pass = report.all_pass();
        ok &= pass;
        println!("{}: {name}", if pass { "pass" } else { "FAIL" });
        for c in report.checks.iter().filter(|c| !c.pass) {
            println!("  FAIL {} = {:.6e} (bound {:.6e})", c.name, c.value, c.bound);
        }
        for e in report.estimate_rows.iter().filter(|e| !e.holds) {
            println!("  FAIL {} lhs {:.6e} rhs {:.6e}", e.name, e.lhs, e.rhs);
        }
    }
    let _ = std::fs::remove_dir_all(&tmp);
    Ok(ok)
}
