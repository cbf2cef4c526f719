//! Benchmark matrices: run every pipeline over a batch of seeds for one
//! scenario family, reusing the exact same simulated data per seed.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use symslam_core::sim::{generate_scenario, Scenario, ScenarioConfig};

use crate::compare::{compare_runs, Comparison};
use crate::metrics::MetricsReport;
use crate::pipeline::{run_pipeline, PipelineKind, PipelineParams, RunMode, RunOutput};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchConfig {
    pub scenario: ScenarioConfig,
    pub mode: RunMode,
    pub pipelines: Vec<PipelineKind>,
    /// Seeds to run; the scenario seed field is replaced per run.
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub params: PipelineParams,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchSummary {
    pub mode: String,
    pub seeds: Vec<u64>,
    /// pipeline -> seed -> metrics
    pub runs: BTreeMap<String, BTreeMap<u64, MetricsReport>>,
    pub comparisons: BTreeMap<u64, Comparison>,
}

impl BenchSummary {
    pub fn reports(&self, pipeline: PipelineKind) -> Vec<&MetricsReport> {
        self.runs
            .get(pipeline.name())
            .map(|by_seed| by_seed.values().collect())
            .unwrap_or_default()
    }
}

pub fn write_run_output(dir: &Path, output: &RunOutput) -> anyhow::Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("metrics.json"), serde_json::to_string_pretty(&output.metrics)?)?;
    fs::write(dir.join("trajectory.csv"), &output.trajectory_csv)?;
    fs::write(dir.join("map.json"), serde_json::to_string_pretty(&output.map_json)?)?;
    fs::write(dir.join("solver_report.csv"), &output.solver_report_csv)?;
    fs::write(dir.join("graph.json"), serde_json::to_string_pretty(&output.graph_json)?)?;
    Ok(())
}

/// Run the full matrix. When `out` is given, every artifact is written
/// beneath it (`seed_<k>/<pipeline>/...` plus the comparison tables).
pub fn run_bench(config: &BenchConfig, out: Option<&Path>) -> anyhow::Result<BenchSummary> {
    let mut runs: BTreeMap<String, BTreeMap<u64, MetricsReport>> = BTreeMap::new();
    let mut comparisons = BTreeMap::new();

    for &seed in &config.seeds {
        let mut scenario_config = config.scenario.clone();
        scenario_config.seed = seed;
        // one simulation shared by every pipeline
        let scenario: Scenario<f64> = generate_scenario(&scenario_config)?;
        let seed_dir = out.map(|o| o.join(format!("seed_{seed}")));
        if let Some(dir) = &seed_dir {
            fs::create_dir_all(dir)?;
            scenario.save(&dir.join("scenario.jsonl"))?;
        }

        let mut seed_reports = Vec::new();
        for &pipeline in &config.pipelines {
            let output = run_pipeline(&scenario, pipeline, config.mode, &config.params);
            if let Some(dir) = &seed_dir {
                write_run_output(&dir.join(pipeline.name()), &output)?;
            }
            seed_reports.push(output.metrics.clone());
            runs.entry(pipeline.name().to_string())
                .or_default()
                .insert(seed, output.metrics);
        }
        if seed_reports.len() >= 2 {
            comparisons.insert(seed, compare_runs(&seed_reports)?);
        }
    }

    let summary = BenchSummary {
        mode: config.mode.name().to_string(),
        seeds: config.seeds.clone(),
        runs,
        comparisons,
    };
    if let Some(dir) = out {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("bench_summary.json"), serde_json::to_string_pretty(&summary)?)?;
        let mut csv = String::new();
        let mut text = String::new();
        for (seed, cmp) in &summary.comparisons {
            csv.push_str(&format!("# seed {seed}\n"));
            csv.push_str(&cmp.to_csv());
            text.push_str(&format!("== seed {seed} ==\n"));
            text.push_str(&cmp.to_text());
            text.push('\n');
        }
        fs::write(dir.join("comparison.csv"), csv)?;
        fs::write(dir.join("comparison.txt"), text)?;
    }
    Ok(summary)
}
