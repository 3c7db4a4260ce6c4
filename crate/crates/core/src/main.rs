use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use pilotlink::scenario::{self, LinkScenario, SweepSpec};
use pilotlink::sweep::{emit_results, run_sweep, run_configured};
use pilotlink::Error;

#[derive(Parser)]
#[command(name = "pilotlink", version, about = "Pilot-tone 16-QAM photonic wireless link simulator")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a scenario (file path or canonical name) and write its results.
    Run {
        scenario: String,
        /// Override the sweep: axis=start:stop:step
        #[arg(long)]
        sweep: Option<String>,
        /// Master seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, env = "PILOTLINK_OUT", default_value = "results")]
        out: PathBuf,
        /// Payload bits per point.
        #[arg(long)]
        points_bits: Option<u64>,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// List the shipped scenarios.
    ListScenarios,
    /// Check a scenario file without running it.
    Validate { scenario: String },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.cmd) {
        Ok(report) => {
            println!("{report:#}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            let report = json!({ "error": { "kind": e.kind(), "message": e.to_string() } });
            eprintln!("{report:#}");
            ExitCode::FAILURE
        }
    }
}

fn load(spec: &str) -> Result<LinkScenario, Error> {
    let path = Path::new(spec);
    if path.exists() {
        LinkScenario::load(path)
    } else {
        scenario::canonical(spec)
    }
}

fn dispatch(cmd: Cmd) -> Result<serde_json::Value, Error> {
    match cmd {
        Cmd::ListScenarios => {
            let list: Vec<_> = scenario::CANONICAL
                .iter()
                .map(|(name, text)| {
                    let desc = LinkScenario::from_toml(text).map(|s| s.description).unwrap_or_default();
                    json!({ "name": name, "description": desc })
                })
                .collect();
            Ok(json!(list))
        }
        Cmd::Validate { scenario } => {
            let s = load(&scenario)?;
            Ok(json!({ "valid": true, "name": s.name, "bits_per_point": s.bits_per_frame() }))
        }
        Cmd::Run {
            scenario,
            sweep,
            seed,
            out,
            points_bits,
            threads,
        } => {
            let mut s = load(&scenario)?;
            if let Some(seed) = seed {
                s.seed = seed;
            }
            if let Some(bits) = points_bits {
                s.set_bits_per_frame(bits);
            }
            let result = match sweep {
                Some(text) => {
                    let sw = SweepSpec::parse(&text)?;
                    run_sweep(&s, sw.axis, &sw.values, threads)?
                }
                None => run_configured(&s, threads)?,
            };
            let files = emit_results(&result, &out)?;
            let points: Vec<_> = result
                .points
                .iter()
                .map(|p| match p.result() {
                    Some(r) => json!({ "value": p.value, "ber": r.ber, "snr_db": r.snr_db, "errors": r.errors }),
                    None => json!({ "value": p.value, "failed": true }),
                })
                .collect();
            Ok(json!({
                "scenario": result.scenario,
                "config_hash": result.config_hash,
                "points": points,
                "failed_points": result.failures(),
                "files": [files.json, files.csv, files.manifest],
            }))
        }
    }
}
