//! Experiment specs: a base run plus variant overrides, exported artifacts.
//!
//! A spec is a single JSON document with sections `graph`, `problem`,
//! `scheduler`, `stepsize`, `noise` and `run`, an optional list of variants
//! (each overriding some sections) and output options. Executing a spec
//! computes the reference, runs every variant, monitors the traces and
//! writes per-variant trace CSVs plus summaries and a combined
//! gap-vs-iteration file for plotting.

use std::fs;
use std::path::{Path, PathBuf};

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{primal_average, StepsizePlan, StepsizeRule};
use crate::graph::{radius_for_edge_count, random_geometric_graph, Topology};
use crate::noise::NoiseSpec;
use crate::problem::{
    CostAtom, EdgeSelection, Interval, LocalProblem, ProblemError, ProblemInstance, SelectionMap,
};
use crate::reference::{solve_consensus_scalar, tree_quadratic_reference, Reference};
use crate::rng::{derive_seed, stream, TAG_PARAMS};
use crate::runtime::{self, ChannelSet, RunConfig, RunError, RunSummary};
use crate::scheduler::{load_mask_file, SchedulerSpec};

/// Environment variable providing the default output directory.
pub const OUT_DIR_ENV: &str = "ASYNCDUAL_OUT";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NamedSelection {
    /// Identity selection matrices on every edge (consensus coupling).
    Identity,
}

/// Selection section: the `"identity"` shorthand or explicit per-edge pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SelectionSpec {
    Named(NamedSelection),
    Explicit(Vec<EdgeSelection>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemSection {
    pub locals: Vec<LocalProblem>,
    pub selection: SelectionSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NamedReference {
    /// Pick the strongest applicable oracle (tree-quadratic, then scalar
    /// consensus); run without gap metrics when none applies.
    Auto,
    /// No reference; gap channels stay empty.
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ReferenceSpec {
    Named(NamedReference),
    Explicit(Reference),
}

impl Default for ReferenceSpec {
    fn default() -> Self {
        ReferenceSpec::Named(NamedReference::Auto)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSection {
    pub iterations: u64,
    pub seed: u64,
    #[serde(default)]
    pub lambda0: Option<Vec<f64>>,
    #[serde(default)]
    pub channels: ChannelSet,
    #[serde(default)]
    pub reference: ReferenceSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantSpec {
    pub name: String,
    #[serde(default)]
    pub graph: Option<Topology>,
    #[serde(default)]
    pub scheduler: Option<SchedulerSpec>,
    #[serde(default)]
    pub stepsize: Option<StepsizePlan>,
    #[serde(default)]
    pub noise: Option<NoiseSpec>,
    #[serde(default)]
    pub iterations: Option<u64>,
    #[serde(default)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputSpec {
    #[serde(default)]
    pub dir: Option<PathBuf>,
    /// Trace CSV downsampling stride (the final row is always kept).
    #[serde(default = "default_stride")]
    pub stride: u64,
}

fn default_stride() -> u64 {
    1
}

impl Default for OutputSpec {
    fn default() -> Self {
        OutputSpec {
            dir: None,
            stride: 1,
        }
    }
}

/// A complete experiment document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub name: String,
    pub graph: Topology,
    pub problem: ProblemSection,
    pub scheduler: SchedulerSpec,
    pub stepsize: StepsizePlan,
    pub noise: NoiseSpec,
    pub run: RunSection,
    #[serde(default)]
    pub variants: Vec<VariantSpec>,
    #[serde(default)]
    pub outputs: OutputSpec,
}

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("config parse error: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("config field `{field}`: {reason}")]
    Invalid { field: &'static str, reason: String },
    #[error("scripted mask file {path}: {reason}")]
    ScriptFile { path: PathBuf, reason: String },
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error("reference oracle: {0}")]
    Reference(#[from] crate::reference::ReferenceError),
    #[error(transparent)]
    Run(#[from] RunError),
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl ExperimentSpec {
    /// Parses a spec document, resolving `{"type": "scripted", "file": ...}`
    /// scheduler sections against `base_dir`.
    pub fn from_json(text: &str, base_dir: &Path) -> Result<Self, ExperimentError> {
        let mut value: serde_json::Value = serde_json::from_str(text)?;
        if let Some(s) = value.get_mut("scheduler") {
            resolve_script_file(s, base_dir)?;
        }
        if let Some(variants) = value.get_mut("variants").and_then(|v| v.as_array_mut()) {
            for variant in variants {
                if let Some(s) = variant.get_mut("scheduler") {
                    resolve_script_file(s, base_dir)?;
                }
            }
        }
        let spec: ExperimentSpec = serde_json::from_value(value)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("spec serializes")
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        if self.outputs.stride == 0 {
            return Err(ExperimentError::Invalid {
                field: "outputs.stride",
                reason: "stride must be at least 1".to_string(),
            });
        }
        let mut names: Vec<&str> = self.variants.iter().map(|v| v.name.as_str()).collect();
        names.sort_unstable();
        names.dedup();
        if names.len() != self.variants.len() {
            return Err(ExperimentError::Invalid {
                field: "variants",
                reason: "variant names must be unique".to_string(),
            });
        }
        Ok(())
    }

    /// Builds the concrete run config for one variant (`None` = base).
    pub fn materialize(&self, variant: Option<&VariantSpec>) -> Result<RunConfig, ExperimentError> {
        let topology = variant
            .and_then(|v| v.graph.clone())
            .unwrap_or_else(|| self.graph.clone());
        let dims: Vec<usize> = self.problem.locals.iter().map(|l| l.dim).collect();
        let selection = match &self.problem.selection {
            SelectionSpec::Named(NamedSelection::Identity) => {
                SelectionMap::identity(&topology, &dims)
            }
            SelectionSpec::Explicit(edges) => SelectionMap {
                edges: edges.clone(),
            },
        };
        let problem = ProblemInstance::new(topology, self.problem.locals.clone(), selection)?;
        let reference = match &self.run.reference {
            ReferenceSpec::Named(NamedReference::Auto) => auto_reference(&problem),
            ReferenceSpec::Named(NamedReference::None) => None,
            ReferenceSpec::Explicit(r) => Some(r.clone()),
        };
        Ok(RunConfig {
            problem,
            scheduler: variant
                .and_then(|v| v.scheduler.clone())
                .unwrap_or_else(|| self.scheduler.clone()),
            stepsize: variant
                .and_then(|v| v.stepsize.clone())
                .unwrap_or_else(|| self.stepsize.clone()),
            noise: variant
                .and_then(|v| v.noise.clone())
                .unwrap_or_else(|| self.noise.clone()),
            iterations: variant
                .and_then(|v| v.iterations)
                .unwrap_or(self.run.iterations),
            seed: variant.and_then(|v| v.seed).unwrap_or(self.run.seed),
            lambda0: self.run.lambda0.clone(),
            channels: self.run.channels,
            reference,
        })
    }
}

fn resolve_script_file(
    scheduler: &mut serde_json::Value,
    base_dir: &Path,
) -> Result<(), ExperimentError> {
    let is_scripted = scheduler.get("type").and_then(|t| t.as_str()) == Some("scripted");
    if !is_scripted {
        return Ok(());
    }
    let Some(file) = scheduler.get("file").and_then(|f| f.as_str()) else {
        return Ok(());
    };
    let path = base_dir.join(file);
    let masks = load_mask_file(&path)
        .map_err(|e| ExperimentError::ScriptFile {
            path: path.clone(),
            reason: e.to_string(),
        })?
        .map_err(|e| ExperimentError::ScriptFile {
            path: path.clone(),
            reason: e.to_string(),
        })?;
    let obj = scheduler.as_object_mut().expect("scheduler object");
    obj.remove("file");
    obj.insert("masks".to_string(), serde_json::to_value(masks)?);
    Ok(())
}

/// Strongest applicable reference oracle for a problem, if any.
pub fn auto_reference(problem: &ProblemInstance) -> Option<Reference> {
    tree_quadratic_reference(problem)
        .ok()
        .or_else(|| solve_consensus_scalar(problem).ok())
}

/// Host-side options layered over the spec (CLI flags, env).
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub out_dir: Option<PathBuf>,
    pub seed: Option<u64>,
    pub iterations: Option<u64>,
    pub channels: Option<ChannelSet>,
    pub stride: Option<u64>,
    /// Skip writing artifact files (dry run / in-process use).
    pub no_artifacts: bool,
}

/// One executed variant.
#[derive(Debug, Clone, Serialize)]
pub struct VariantOutcome {
    pub name: String,
    pub summary: RunSummary,
    pub trace_file: Option<PathBuf>,
    pub summary_file: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentReport {
    pub name: String,
    pub out_dir: Option<PathBuf>,
    pub outcomes: Vec<VariantOutcome>,
    pub gap_file: Option<PathBuf>,
    pub any_violations: bool,
}

/// Runs the base config (when no variants are declared) or every variant,
/// writing trace CSVs, summaries and a combined gap file.
pub fn run_experiment(
    spec: &ExperimentSpec,
    opts: &RunOptions,
) -> Result<ExperimentReport, ExperimentError> {
    spec.validate()?;
    let out_dir = if opts.no_artifacts {
        None
    } else {
        let dir = opts
            .out_dir
            .clone()
            .or_else(|| spec.outputs.dir.clone())
            .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("out").join(&spec.name));
        fs::create_dir_all(&dir).map_err(|source| ExperimentError::Io {
            path: dir.clone(),
            source,
        })?;
        Some(dir)
    };

    let base_variant = VariantSpec {
        name: "base".to_string(),
        graph: None,
        scheduler: None,
        stepsize: None,
        noise: None,
        iterations: None,
        seed: None,
    };
    let variants: Vec<&VariantSpec> = if spec.variants.is_empty() {
        vec![&base_variant]
    } else {
        spec.variants.iter().collect()
    };

    let stride = opts.stride.unwrap_or(spec.outputs.stride).max(1) as usize;
    let mut outcomes = Vec::new();
    let mut gap_series: Vec<(String, Option<Vec<f64>>)> = Vec::new();
    let mut any_violations = false;
    for variant in variants {
        let mut config = spec.materialize(Some(variant))?;
        if let Some(seed) = opts.seed {
            config.seed = seed;
        }
        if let Some(iters) = opts.iterations {
            config.iterations = iters;
        }
        if let Some(channels) = opts.channels {
            config.channels = channels;
        }
        let (trace, _) = runtime::run(&config)?;
        let summary = runtime::summarize(&trace, &config);
        any_violations |= !summary.flags.is_empty();
        gap_series.push((variant.name.clone(), trace.gap.clone()));

        let (trace_file, summary_file) = match &out_dir {
            Some(dir) => {
                let trace_path = dir.join(format!("{}_trace.csv", variant.name));
                write_file(&trace_path, &trace.to_csv(stride))?;
                let summary_path = dir.join(format!("{}_summary.json", variant.name));
                let json =
                    serde_json::to_string_pretty(&summary).expect("summary serializes");
                write_file(&summary_path, &json)?;
                (Some(trace_path), Some(summary_path))
            }
            None => (None, None),
        };
        outcomes.push(VariantOutcome {
            name: variant.name.clone(),
            summary,
            trace_file,
            summary_file,
        });
    }

    let gap_file = match &out_dir {
        Some(dir) => {
            let path = dir.join("gaps.csv");
            write_file(&path, &combined_gap_csv(&gap_series, stride))?;
            Some(path)
        }
        None => None,
    };

    Ok(ExperimentReport {
        name: spec.name.clone(),
        out_dir,
        outcomes,
        gap_file,
        any_violations,
    })
}

fn write_file(path: &Path, content: &str) -> Result<(), ExperimentError> {
    fs::write(path, content).map_err(|source| ExperimentError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// One `k` column plus a gap column per run; rows on the stride grid.
fn combined_gap_csv(series: &[(String, Option<Vec<f64>>)], stride: usize) -> String {
    let mut out = String::from("k");
    for (name, _) in series {
        out.push(',');
        out.push_str(name);
    }
    out.push('\n');
    let rows = series
        .iter()
        .filter_map(|(_, s)| s.as_ref().map(Vec::len))
        .max()
        .unwrap_or(0);
    let mut k = 0;
    while k < rows {
        out.push_str(&format!("{k}"));
        for (_, s) in series {
            match s.as_ref().and_then(|s| s.get(k)) {
                Some(v) => out.push_str(&format!(",{v}")),
                None => out.push(','),
            }
        }
        out.push('\n');
        k += stride;
    }
    out
}

/// Convenience: run a config in memory and summarize it.
pub fn run_and_summarize(config: &RunConfig) -> Result<(runtime::Trace, RunSummary), RunError> {
    let (trace, _) = runtime::run(config)?;
    let summary = runtime::summarize(&trace, config);
    Ok((trace, summary))
}

/// Primal average helper surfaced for experiment post-processing.
pub fn ergodic_primal_average(trace: &runtime::Trace) -> Option<Vec<f64>> {
    primal_average(trace).ok()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GraphKind {
    Path,
    Rgg,
}

impl std::str::FromStr for GraphKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "path" => Ok(GraphKind::Path),
            "rgg" => Ok(GraphKind::Rgg),
            other => Err(format!("unknown graph kind `{other}` (expected path|rgg)")),
        }
    }
}

/// Reference-scale experiment family: `num_hinge` agents carry one hinge
/// cost each (slope in [0.2, 1], knee in [2, 8], zero offset), the remaining
/// `num_entropy` agents carry `x·log(p x)` with `p` in (1, 5); every agent
/// gets a base activation probability in (0.5, 1) for the adaptive-counter
/// scheduler. Hinge agents optionally take a `0.005 x²` regularizer. Boxes
/// are `[−50, 50]` for hinge agents and `[1e−4, 50]` for entropy agents, wide
/// enough that the regularized optimum is interior. Stepsizes follow the
/// closed-form shift of `0.15 (1+k)^{−0.51}`; duals start at zero.
///
/// The `rgg` graph targets an edge count scaled from 358 edges at 50 agents
/// by the pair-count ratio; the radius is found by search on the seeded
/// placement, never assumed.
pub fn generate_sect6_config(
    num_hinge: usize,
    num_entropy: usize,
    graph: GraphKind,
    seed: u64,
    regularize: bool,
) -> Result<ExperimentSpec, ExperimentError> {
    let n = num_hinge + num_entropy;
    if n == 0 {
        return Err(ExperimentError::Invalid {
            field: "agents",
            reason: "need at least one agent".to_string(),
        });
    }
    let mut rng = stream(seed, TAG_PARAMS);
    let mut locals = Vec::with_capacity(n);
    for agent in 1..=n {
        if agent <= num_hinge {
            let slope = rng.random_range(0.2..1.0);
            let knee = rng.random_range(2.0..8.0);
            let mut local = LocalProblem::scalar(
                agent,
                CostAtom::Hinge {
                    slope,
                    knee,
                    offset: 0.0,
                },
                Interval::new(-50.0, 50.0),
            );
            if regularize {
                local.regularizer = 0.005;
            }
            locals.push(local);
        } else {
            let scale = rng.random_range(1.0..5.0);
            locals.push(LocalProblem::scalar(
                agent,
                CostAtom::Entropy { scale },
                Interval::new(1e-4, 50.0),
            ));
        }
    }
    let p_tilde: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..1.0)).collect();

    let graph_seed = derive_seed(seed, crate::rng::TAG_GRAPH);
    let topology = match graph {
        GraphKind::Path => Topology::path(n).expect("n >= 1"),
        GraphKind::Rgg => {
            let pairs = n * (n - 1) / 2;
            let target = ((358.0 * pairs as f64 / 1225.0).round() as usize)
                .max(n.saturating_sub(1))
                .min(pairs);
            let radius = radius_for_edge_count(n, target, graph_seed);
            random_geometric_graph(n, radius, graph_seed)
                .expect("n >= 1")
                .topology
        }
    };

    let local_shift = StepsizePlan::uniform(StepsizeRule::ClosedFormShift { c0: 0.15, q: 0.51 });
    let global_shift = StepsizePlan::global(StepsizeRule::ClosedFormShift { c0: 0.15, q: 0.51 });
    let scheduler = SchedulerSpec::AdaptiveCounter {
        p_tilde,
        decay: 0.7,
        window: 10,
    };
    Ok(ExperimentSpec {
        name: format!("sect6_h{num_hinge}_e{num_entropy}_{graph:?}_s{seed}").to_lowercase(),
        graph: topology,
        problem: ProblemSection {
            locals,
            selection: SelectionSpec::Named(NamedSelection::Identity),
        },
        scheduler: scheduler.clone(),
        stepsize: local_shift.clone(),
        noise: NoiseSpec::none(),
        run: RunSection {
            iterations: 200_000,
            seed,
            lambda0: None,
            channels: ChannelSet::default(),
            reference: ReferenceSpec::Named(NamedReference::Auto),
        },
        variants: vec![
            VariantSpec {
                name: "synchronous".to_string(),
                graph: None,
                scheduler: Some(SchedulerSpec::Synchronous),
                stepsize: Some(global_shift.clone()),
                noise: None,
                iterations: None,
                seed: None,
            },
            VariantSpec {
                name: "async_global".to_string(),
                graph: None,
                scheduler: Some(scheduler),
                stepsize: Some(global_shift),
                noise: None,
                iterations: None,
                seed: None,
            },
            VariantSpec {
                name: "async_local".to_string(),
                graph: None,
                scheduler: None,
                stepsize: Some(local_shift),
                noise: None,
                iterations: None,
                seed: None,
            },
        ],
        // full-resolution CSVs of 2e5-step runs are enormous; downsample
        outputs: OutputSpec {
            dir: None,
            stride: 100,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sect6_shapes() {
        let spec = generate_sect6_config(5, 45, GraphKind::Path, 7, true).unwrap();
        assert_eq!(spec.graph.num_agents(), 50);
        assert_eq!(spec.graph.num_edges(), 49);
        assert_eq!(spec.problem.locals.len(), 50);
        for (idx, local) in spec.problem.locals.iter().enumerate() {
            match local.atoms[0].1 {
                CostAtom::Hinge { slope, knee, offset } => {
                    assert!(idx < 5);
                    assert!((0.2..=1.0).contains(&slope));
                    assert!((2.0..=8.0).contains(&knee));
                    assert_eq!(offset, 0.0);
                    assert_eq!(local.regularizer, 0.005);
                }
                CostAtom::Entropy { scale } => {
                    assert!(idx >= 5);
                    assert!((1.0..=5.0).contains(&scale));
                    assert_eq!(local.regularizer, 0.0);
                }
                other => panic!("unexpected atom {other:?}"),
            }
        }
        assert_eq!(spec.variants.len(), 3);
    }

    #[test]
    fn sect6_rgg_edge_target_at_full_scale() {
        let spec = generate_sect6_config(5, 45, GraphKind::Rgg, 11, true).unwrap();
        assert_eq!(spec.graph.num_edges(), 358);
    }

    #[test]
    fn sect6_single_agent_degenerate() {
        let spec = generate_sect6_config(0, 1, GraphKind::Path, 3, false).unwrap();
        assert_eq!(spec.graph.num_edges(), 0);
        let config = spec.materialize(None).unwrap();
        assert_eq!(config.problem.dual_dim(), 0);
    }

    #[test]
    fn spec_round_trips_through_json() {
        let spec = generate_sect6_config(2, 8, GraphKind::Path, 13, true).unwrap();
        let json = spec.to_json();
        let back = ExperimentSpec::from_json(&json, Path::new(".")).unwrap();
        assert_eq!(spec, back);
    }

    #[test]
    fn sect6_is_seed_deterministic() {
        let a = generate_sect6_config(2, 8, GraphKind::Rgg, 5, true).unwrap();
        let b = generate_sect6_config(2, 8, GraphKind::Rgg, 5, true).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn materialize_applies_variant_overrides() {
        let spec = generate_sect6_config(2, 8, GraphKind::Path, 13, true).unwrap();
        let base = spec.materialize(None).unwrap();
        assert_eq!(base.scheduler, spec.scheduler);
        let sync = spec.materialize(Some(&spec.variants[0])).unwrap();
        assert_eq!(sync.scheduler, SchedulerSpec::Synchronous);
        assert_eq!(sync.iterations, base.iterations);
    }

    #[test]
    fn duplicate_variant_names_rejected() {
        let mut spec = generate_sect6_config(2, 8, GraphKind::Path, 13, true).unwrap();
        spec.variants[1].name = spec.variants[0].name.clone();
        assert!(spec.validate().is_err());
    }

    #[test]
    fn experiment_runs_in_memory_and_on_disk() {
        let mut spec = generate_sect6_config(1, 2, GraphKind::Path, 21, true).unwrap();
        spec.run.iterations = 200;
        let report = run_experiment(
            &spec,
            &RunOptions {
                no_artifacts: true,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(report.outcomes.len(), 3);
        assert!(!report.any_violations);

        let dir = std::env::temp_dir().join(format!("asyncdual_test_{}", std::process::id()));
        let report = run_experiment(
            &spec,
            &RunOptions {
                out_dir: Some(dir.clone()),
                stride: Some(10),
                ..Default::default()
            },
        )
        .unwrap();
        for outcome in &report.outcomes {
            assert!(outcome.trace_file.as_ref().unwrap().exists());
            assert!(outcome.summary_file.as_ref().unwrap().exists());
        }
        let gaps = fs::read_to_string(report.gap_file.as_ref().unwrap()).unwrap();
        assert!(gaps.starts_with("k,synchronous,async_global,async_local"));
        fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn empty_variant_list_runs_base_only() {
        let mut spec = generate_sect6_config(1, 2, GraphKind::Path, 22, false).unwrap();
        spec.variants.clear();
        spec.run.iterations = 50;
        let report = run_experiment(
            &spec,
            &RunOptions {
                no_artifacts: true,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(report.outcomes.len(), 1);
        assert_eq!(report.outcomes[0].name, "base");
    }

    #[test]
    fn scripted_file_resolution() {
        let dir = std::env::temp_dir().join(format!("asyncdual_script_{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        fs::write(dir.join("masks.txt"), "10\n01\n11\n").unwrap();
        let mut spec = generate_sect6_config(1, 2, GraphKind::Path, 23, false).unwrap();
        spec.run.iterations = 3;
        spec.variants.clear();
        let mut value = serde_json::to_value(&spec).unwrap();
        value["scheduler"] = serde_json::json!({"type": "scripted", "file": "masks.txt"});
        let spec = ExperimentSpec::from_json(&value.to_string(), &dir).unwrap();
        match &spec.scheduler {
            SchedulerSpec::Scripted { masks } => {
                assert_eq!(masks, &vec![vec![1, 0], vec![0, 1], vec![1, 1]]);
            }
            other => panic!("expected scripted, got {other:?}"),
        }
        fs::remove_dir_all(&dir).ok();
    }
}
