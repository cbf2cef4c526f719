use std::collections::BTreeMap;
use std::fs;
use std::path::PathBuf;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};

use symslam_cli::bench::{run_bench, write_run_output, BenchConfig};
use symslam_cli::metrics::{
    compute_metrics, parse_trajectory_csv, scenario_digest, FrameMetrics,
};
use symslam_cli::pipeline::{run_pipeline, PipelineKind, PipelineParams, RunMode};
use symslam_cli::presets::{preset_config, PRESET_NAMES};
use symslam_core::liegroup::Pose;
use symslam_core::sim::{generate_scenario, Scenario, ScenarioConfig};

#[derive(Parser)]
#[command(name = "symslam", about = "Symmetry-aware object SLAM benchmark harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a scenario dump (JSON lines) from a configuration.
    Simulate {
        /// Scenario configuration file (JSON).
        #[arg(long, conflicts_with = "preset")]
        config: Option<PathBuf>,
        /// Built-in scenario: disc-case-study, disc-full-slam, cts-full-slam.
        #[arg(long)]
        preset: Option<String>,
        /// Override the configured seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run one pipeline over a scenario dump.
    Run {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, value_enum)]
        pipeline: PipelineKind,
        #[arg(long, value_enum, default_value = "full-slam")]
        mode: RunMode,
        /// Pipeline parameter overrides (JSON).
        #[arg(long)]
        params: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a pipelines x seeds matrix and emit comparison tables.
    Bench {
        /// Bench configuration file (JSON).
        #[arg(long, conflicts_with = "preset")]
        config: Option<PathBuf>,
        #[arg(long)]
        preset: Option<String>,
        /// Number of seeds (0..n) when using a preset.
        #[arg(long, default_value_t = 20)]
        seeds: u64,
        /// Comma-separated pipelines when using a preset.
        #[arg(long, value_delimiter = ',', default_values_t = vec![PipelineKind::Proposed, PipelineKind::Sh, PipelineKind::Mh])]
        pipelines: Vec<PipelineKind>,
        #[arg(long, value_enum)]
        mode: Option<RunMode>,
        #[arg(long)]
        params: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Recompute metrics from a finished run directory.
    Metrics {
        #[arg(long)]
        scenario: PathBuf,
        /// Run directory containing trajectory.csv and map.json.
        #[arg(long)]
        run: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load_params(path: &Option<PathBuf>) -> anyhow::Result<PipelineParams> {
    match path {
        None => Ok(PipelineParams::default()),
        Some(p) => {
            let text = fs::read_to_string(p)
                .with_context(|| format!("reading params file {}", p.display()))?;
            Ok(serde_json::from_str(&text)?)
        }
    }
}

fn resolve_config(
    config: &Option<PathBuf>,
    preset: &Option<String>,
    seed: Option<u64>,
) -> anyhow::Result<ScenarioConfig> {
    let mut cfg = match (config, preset) {
        (Some(path), None) => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("reading config {}", path.display()))?;
            serde_json::from_str(&text)?
        }
        (None, Some(name)) => preset_config(name, seed.unwrap_or(0))
            .with_context(|| format!("unknown preset `{name}`, expected one of {PRESET_NAMES:?}"))?,
        _ => bail!("exactly one of --config or --preset is required"),
    };
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    cfg.validate().map_err(|e| anyhow::anyhow!(e.to_string()))?;
    Ok(cfg)
}

fn main() {
    let cli = Cli::parse();
    if let Err(err) = dispatch(cli) {
        let payload = serde_json::json!({
            "error": {
                "message": format!("{err:#}"),
            }
        });
        eprintln!("{payload}");
        std::process::exit(1);
    }
}

fn dispatch(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Simulate { config, preset, seed, out } => {
            let cfg = resolve_config(&config, &preset, seed)?;
            let scenario: Scenario<f64> = generate_scenario(&cfg)?;
            if let Some(parent) = out.parent() {
                if !parent.as_os_str().is_empty() {
                    fs::create_dir_all(parent)?;
                }
            }
            scenario.save(&out)?;
            println!("wrote {} frames to {}", scenario.frames.len(), out.display());
            Ok(())
        }
        Command::Run { scenario, pipeline, mode, params, out } => {
            let params = load_params(&params)?;
            let scenario = Scenario::<f64>::load(&scenario)?;
            let output = run_pipeline(&scenario, pipeline, mode, &params);
            write_run_output(&out, &output)?;
            let failed = output
                .metrics
                .failed
                .as_ref()
                .map(|f| format!("FAILED at frame {} ({})", f.frame, f.reason))
                .unwrap_or_else(|| "ok".to_string());
            println!(
                "{} {}: camera RMSE {} m, {} map objects tracked, {}",
                pipeline.name(),
                mode.name(),
                output
                    .metrics
                    .camera_rmse_t
                    .map_or("-".to_string(), |v| format!("{v:.4}")),
                output.metrics.tracking_events.values().sum::<usize>(),
                failed
            );
            Ok(())
        }
        Command::Bench { config, preset, seeds, pipelines, mode, params, out } => {
            let bench_config = match (config, preset) {
                (Some(path), None) => {
                    let text = fs::read_to_string(&path)
                        .with_context(|| format!("reading bench config {}", path.display()))?;
                    let mut cfg: BenchConfig = serde_json::from_str(&text)?;
                    if let Some(mode) = mode {
                        cfg.mode = mode;
                    }
                    cfg
                }
                (None, Some(name)) => {
                    let scenario = preset_config(&name, 0).with_context(|| {
                        format!("unknown preset `{name}`, expected one of {PRESET_NAMES:?}")
                    })?;
                    let default_mode = if name.ends_with("case-study") {
                        RunMode::CaseStudy
                    } else {
                        RunMode::FullSlam
                    };
                    BenchConfig {
                        scenario,
                        mode: mode.unwrap_or(default_mode),
                        pipelines,
                        seeds: (0..seeds).collect(),
                        params: load_params(&params)?,
                    }
                }
                _ => bail!("exactly one of --config or --preset is required"),
            };
            bench_config
                .scenario
                .validate()
                .map_err(|e| anyhow::anyhow!(e.to_string()))?;
            let summary = run_bench(&bench_config, Some(&out))?;
            for (seed, cmp) in &summary.comparisons {
                println!("== seed {seed} ==");
                print!("{}", cmp.to_text());
            }
            println!("bench outputs in {}", out.display());
            Ok(())
        }
        Command::Metrics { scenario, run, out } => {
            let text = fs::read_to_string(&scenario)?;
            let digest = scenario_digest(&text);
            let scenario = Scenario::<f64>::from_jsonl(&text)?;
            let trajectory = fs::read_to_string(run.join("trajectory.csv"))
                .context("run directory must contain trajectory.csv")?;
            let map_text = fs::read_to_string(run.join("map.json"))
                .context("run directory must contain map.json")?;
            let map: symslam_core::ObjectMap64 = serde_json::from_str(&map_text)?;
            let positions = parse_trajectory_csv(&trajectory)?;

            // orientation is not re-derivable from the position table; the
            // recomputation covers translation metrics and map statistics
            let estimates: BTreeMap<usize, Pose<f64>> = positions
                .iter()
                .map(|(&frame, p)| (frame, Pose::from_translation(*p)))
                .collect();
            let per_frame: Vec<FrameMetrics> = scenario
                .frames
                .iter()
                .filter_map(|f| {
                    positions.get(&f.frame_id).map(|p| FrameMetrics {
                        frame: f.frame_id,
                        camera_error_t: (p - f.true_camera_pose.translation).norm(),
                        object_errors_t: BTreeMap::new(),
                        informative_object_edges: 0,
                    })
                })
                .collect();
            let report = compute_metrics(
                &scenario,
                &digest,
                "recomputed",
                "recomputed",
                &estimates,
                &map,
                per_frame,
                None,
            );
            let rendered = serde_json::to_string_pretty(&report)?;
            match out {
                Some(path) => fs::write(path, rendered)?,
                None => println!("{rendered}"),
            }
            Ok(())
        }
    }
}
