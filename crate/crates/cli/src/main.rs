use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use camplace::harness::{calibrate, load_paired_points, replay, run_scenario, summarize, write_summary, Scenario};

#[derive(Parser)]
#[command(name = "camplace", version, about = "Simulate and evaluate auxiliary-camera placement")]
struct Cli {
    /// Directory for generated files.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Overrides the scenario's trajectory seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write its per-tick CSV and summary JSON.
    Run { scenario: PathBuf },
    /// Recompute metrics from the poses in a CSV log and summarize them.
    Replay {
        csv: PathBuf,
        /// Scenario supplying the desired distance and camera rig.
        #[arg(long)]
        scenario: Option<PathBuf>,
    },
    /// Summarize the metric columns of a CSV log.
    Summarize { csv: PathBuf },
    /// Register two frames from paired points (JSON or CSV).
    Calibrate {
        points: PathBuf,
        /// Refine toward the minimum mean-absolute-error transform.
        #[arg(long, value_name = "ITERATIONS")]
        l1: Option<usize>,
    },
}

fn stem(path: &Path) -> String {
    path.file_stem().map_or_else(|| "log".into(), |s| s.to_string_lossy().into_owned())
}

fn emit(out_dir: Option<&Path>, name: String, json: &serde_json::Value) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(json)?);
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let path = dir.join(name);
        std::fs::write(&path, serde_json::to_string_pretty(json)? + "\n").with_context(|| format!("writing {}", path.display()))?;
        eprintln!("wrote {}", path.display());
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let out_dir = cli.out_dir.as_deref();
    match cli.command {
        Command::Run { scenario } => {
            let s = Scenario::load_with_seed(&scenario, cli.seed)?;
            let out = run_scenario(&s, out_dir.unwrap_or(Path::new(".")))?;
            let summary = &out.simulation.summary;
            let vva = summary.metrics["vva_deg"].all;
            println!(
                "{}: {} ticks, VVA mean {:.3} deg, visibility {:.2}%, constrained ticks {}",
                s.file.name,
                summary.ticks,
                vva.mean.unwrap_or(f64::NAN),
                summary.visibility.any_pct,
                summary.solver_counts["constrained"],
            );
            println!("wrote {}", out.csv_path.display());
            println!("wrote {}", out.summary_path.display());
        }
        Command::Replay { csv, scenario } => {
            let s = scenario.map(|p| Scenario::load_with_seed(&p, cli.seed)).transpose()?;
            let summary = replay(&csv, s.as_ref())?;
            match out_dir {
                Some(dir) => {
                    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
                    let path = dir.join(format!("{}_replay_summary.json", stem(&csv)));
                    write_summary(&path, &summary)?;
                    println!("wrote {}", path.display());
                }
                None => println!("{}", serde_json::to_string_pretty(&summary)?),
            }
        }
        Command::Summarize { csv } => {
            let summary = summarize(&csv)?;
            match out_dir {
                Some(dir) => {
                    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
                    let path = dir.join(format!("{}_summarized.json", stem(&csv)));
                    write_summary(&path, &summary)?;
                    println!("wrote {}", path.display());
                }
                None => println!("{}", serde_json::to_string_pretty(&summary)?),
            }
        }
        Command::Calibrate { points, l1 } => {
            let report = calibrate(&load_paired_points(&points)?, l1)?;
            emit(out_dir, format!("{}_calibration.json", stem(&points)), &serde_json::to_value(&report)?)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            // Library errors already embed their source in the message.
            let mut message = String::new();
            for cause in e.chain().map(|c| c.to_string()) {
                if !message.contains(&cause) {
                    message += if message.is_empty() { "" } else { ": " };
                    message += &cause;
                }
            }
            eprintln!("error: {message}");
            ExitCode::FAILURE
        }
    }
}
