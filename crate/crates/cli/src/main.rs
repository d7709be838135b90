use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::builder::PossibleValuesParser;
use clap::{Parser, Subcommand};
use persuade_core::harness::{generate_instance, run_acceptance, run_experiment, ExperimentConfig, InstanceSpec, Suite};
use persuade_core::Error;

const FAMILIES: [&str; 3] = ["coverage", "concave_cardinality", "table"];

#[derive(Parser)]
#[command(name = "persuade", version, about = "Online multi-receiver persuasion experiments")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one learner experiment from a JSON config.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Write a seeded random instance as JSON.
    Gen {
        #[arg(long, value_parser = PossibleValuesParser::new(FAMILIES))]
        family: String,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        d: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run an acceptance suite and print one line per criterion.
    Accept {
        #[arg(long, value_parser = PossibleValuesParser::new(Suite::NAMES))]
        suite: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also write the report as JSON here.
        #[arg(long)]
        json: Option<PathBuf>,
    },
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(Error::NumericalFailure(_) | Error::InvariantViolation(_)) => 3,
        _ => 2,
    }
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    match cli.cmd {
        Cmd::Run { config } => {
            let cfg = ExperimentConfig::load(&config).with_context(|| format!("reading {}", config.display()))?;
            let res = run_experiment(&cfg)?;
            let s = &res.summary;
            match s.regret {
                Some(r) => println!(
                    "T={} regret={r:.6} bound={:.6} distinct={} {}",
                    s.t,
                    s.bound,
                    s.distinct_profiles,
                    if s.passed == Some(true) { "PASS" } else { "FAIL" }
                ),
                None => println!("T={} utility={:.6} (instance too large for hindsight optimum)", s.t, s.total_utility),
            }
            println!("wrote {}", cfg.out_dir.display());
            Ok(s.passed != Some(false))
        }
        Cmd::Gen { family, n, m, d, seed, out } => {
            let spec = InstanceSpec { family: family.parse()?, n, m, d };
            let inst = generate_instance(&spec, seed)?;
            if let Some(dir) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
            inst.save(&out)?;
            println!("wrote {}", out.display());
            Ok(true)
        }
        Cmd::Accept { suite, seed, json } => {
            let report = run_acceptance(suite.parse()?, seed);
            for c in &report.criteria {
                println!("{c}");
            }
            if let Some(path) = json {
                std::fs::write(&path, serde_json::to_string_pretty(&report)?)?;
            }
            Ok(report.passed())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
