use std::path::PathBuf;
use std::process::ExitCode;

use afc_sim::config::ScenarioConfig;
use afc_sim::scenario::{run_scenario, Scenario};
use clap::Parser;

/// Atomic frequency comb memory simulator.
#[derive(Parser)]
#[command(name = "afc-sim", version)]
struct Cli {
    /// fm-spectrum, engrave, probe, store, servo or full
    scenario: String,
    /// JSON scenario configuration
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides `output_dir`)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Drift seed (overrides `seeds.drift`)
    #[arg(long)]
    seed: Option<u64>,
    /// Dotted-path override, e.g. `--set servo.cycles=4`; repeatable
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

const CONFIG_ERROR: u8 = 2;
const RUNTIME_ERROR: u8 = 3;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let scenario: Scenario = match cli.scenario.parse() {
        Ok(s) => s,
        Err(e) => {
            eprintln!(
                "afc-sim: {e} (expected one of: {})",
                Scenario::ALL.map(|s| s.name()).join(", ")
            );
            return ExitCode::from(CONFIG_ERROR);
        }
    };
    let mut sets = cli.set.clone();
    if let Some(out) = &cli.out {
        sets.push(format!(
            "output_dir={}",
            serde_json::Value::String(out.display().to_string())
        ));
    }
    if let Some(seed) = cli.seed {
        sets.push(format!("seeds.drift={seed}"));
    }
    let cfg = match ScenarioConfig::load(&cli.config).and_then(|c| c.with_overrides(&sets)) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("afc-sim: {e}");
            return ExitCode::from(CONFIG_ERROR);
        }
    };
    match run_scenario(scenario, &cfg) {
        Ok(report) => {
            match serde_json::to_string_pretty(&report.summary) {
                Ok(s) => println!("{s}"),
                Err(e) => eprintln!("afc-sim: {e}"),
            }
            eprintln!(
                "afc-sim: {} artifacts written to {}",
                report.manifest.artifacts.len() + 1,
                cfg.output_dir.display()
            );
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("afc-sim: {e}");
            ExitCode::from(if e.is_config() { CONFIG_ERROR } else { RUNTIME_ERROR })
        }
    }
}
