//! Runs an experiment and writes its result files.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::catalogue::find_scenario;
use super::config::{Experiment, ExperimentConfig, FlowExperiment, LemmaExperiment};
use super::ExperimentError;
use crate::diagnostics::{self, fmt_f64};
use crate::flow::{run_flow, FlowRun, FlowState, RunOutcome};
use crate::measures::{direction_set, sample_scenario, DirectionMode, ParticleCloud, ScenarioSpec};
use crate::sliced::{slice_integral_check, SliceIntegral};

pub const METRICS_FILE: &str = "metrics.csv";
pub const TRAJECTORY_FILE: &str = "trajectory.csv";
pub const FLOWMAP_FILE: &str = "flowmap.csv";
pub const LEMMA_FILE: &str = "lemma.csv";
pub const MANIFEST_FILE: &str = "manifest.json";

/// Summary statistics of a sampled cloud, plus closed forms of its law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasureStats {
    pub m2: f64,
    pub m_p: f64,
    pub p: f64,
    pub radius: f64,
    pub analytic_entropy: Option<f64>,
    pub analytic_m2: Option<f64>,
}

impl MeasureStats {
    fn of(cloud: &ParticleCloud, spec: &ScenarioSpec, p: f64) -> Result<Self, ExperimentError> {
        Ok(Self {
            m2: diagnostics::moment_p(cloud, 2.0)?,
            m_p: diagnostics::moment_p(cloud, p)?,
            p,
            radius: diagnostics::support_radius(cloud),
            analytic_entropy: spec.analytic_entropy(),
            analytic_m2: spec.kind.analytic_second_moment(spec.dim),
        })
    }
}

/// Everything needed to understand and repeat a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub scenario: Option<String>,
    pub experiment: String,
    /// Effective configuration (overrides applied); rerunning it reproduces
    /// the outputs.
    pub config: String,
    pub seed: u64,
    pub deterministic: bool,
    pub mode: Option<String>,
    pub direction_mode: Option<String>,
    pub directions: Option<usize>,
    pub tau: Option<f64>,
    pub t_max: Option<f64>,
    pub source: Option<ScenarioSpec>,
    pub target: Option<ScenarioSpec>,
    pub flow_seed: Option<u64>,
    pub source_stats: Option<MeasureStats>,
    pub target_stats: Option<MeasureStats>,
    pub outcome: String,
    pub steps: Option<usize>,
    pub final_time: Option<f64>,
    pub error: Option<String>,
    pub files: Vec<String>,
    pub duration_seconds: f64,
    pub exit_status: i32,
}

impl RunManifest {
    pub fn read(dir: &Path) -> Result<Self, ExperimentError> {
        let path = dir.join(MANIFEST_FILE);
        let text = fs::read_to_string(&path).map_err(|e| ExperimentError::io(&path, e))?;
        serde_json::from_str(&text)
            .map_err(|e| ExperimentError::Output(format!("{}: {e}", path.display())))
    }
}

/// Where a finished run put its files.
#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub out_dir: PathBuf,
    pub manifest: RunManifest,
}

/// Resolves the `run` argument: an experiment file, a `manifest.json` from an
/// earlier run, or the name of a built-in scenario.
pub fn load_config(arg: &str) -> Result<ExperimentConfig, ExperimentError> {
    let path = Path::new(arg);
    if path.is_file() {
        let text = fs::read_to_string(path).map_err(|e| ExperimentError::io(path, e))?;
        if path.extension().is_some_and(|e| e == "json") {
            let manifest: RunManifest = serde_json::from_str(&text)
                .map_err(|e| ExperimentError::config(e.line(), "manifest", &e.to_string()))?;
            return ExperimentConfig::parse(&manifest.config);
        }
        return ExperimentConfig::parse(&text);
    }
    if let Some(entry) = find_scenario(arg) {
        return ExperimentConfig::parse(entry.config);
    }
    if arg.contains(std::path::MAIN_SEPARATOR) || path.extension().is_some() {
        return Err(ExperimentError::io(
            path,
            std::io::Error::new(std::io::ErrorKind::NotFound, "no such file"),
        ));
    }
    Err(ExperimentError::ScenarioNotFound(arg.to_string()))
}

/// Runs `cfg` and writes its outputs into `out` (created if needed).
///
/// The manifest is written even when the run fails numerically; the error is
/// then returned after the partial outputs are on disk.
pub fn run_experiment(cfg: &ExperimentConfig, out: &Path) -> Result<RunReport, ExperimentError> {
    fs::create_dir_all(out).map_err(|e| ExperimentError::io(out, e))?;
    let start = Instant::now();
    let mut manifest = RunManifest {
        tool: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        scenario: cfg.scenario.clone(),
        experiment: String::new(),
        config: cfg.to_text(),
        seed: cfg.seed,
        deterministic: false,
        mode: None,
        direction_mode: None,
        directions: None,
        tau: None,
        t_max: None,
        source: None,
        target: None,
        flow_seed: None,
        source_stats: None,
        target_stats: None,
        outcome: String::new(),
        steps: None,
        final_time: None,
        error: None,
        files: Vec::new(),
        duration_seconds: 0.0,
        exit_status: 0,
    };
    let failure = match &cfg.experiment {
        Experiment::Flow(f) => run_flow_experiment(f, out, &mut manifest)?,
        Experiment::SliceLemma(l) => run_lemma_experiment(l, out, &mut manifest)?,
    };
    manifest.duration_seconds = start.elapsed().as_secs_f64();
    if let Some(e) = &failure {
        manifest.error = Some(e.to_string());
        manifest.exit_status = e.exit_code();
    }
    manifest.files.push(MANIFEST_FILE.into());
    let json = serde_json::to_string_pretty(&manifest)
        .map_err(|e| ExperimentError::Output(e.to_string()))?;
    write(out, MANIFEST_FILE, &json)?;
    match failure {
        Some(e) => Err(e),
        None => Ok(RunReport {
            out_dir: out.to_path_buf(),
            manifest,
        }),
    }
}

fn run_flow_experiment(
    f: &FlowExperiment,
    out: &Path,
    manifest: &mut RunManifest,
) -> Result<Option<ExperimentError>, ExperimentError> {
    let source = sample_scenario(&f.source).map_err(ExperimentError::Validation)?;
    let target = sample_scenario(&f.target).map_err(ExperimentError::Validation)?;
    let cfg = &f.flow;
    manifest.experiment = "flow".into();
    manifest.deterministic = cfg.deterministic;
    manifest.mode = Some(cfg.mode.name().into());
    manifest.direction_mode = Some(cfg.resolved_direction_mode(f.source.dim).name().into());
    manifest.directions = Some(cfg.directions);
    manifest.tau = Some(cfg.tau);
    manifest.t_max = Some(cfg.t_max);
    manifest.source = Some(f.source.clone());
    manifest.target = Some(f.target.clone());
    manifest.flow_seed = Some(cfg.seed);
    manifest.source_stats = Some(MeasureStats::of(&source, &f.source, cfg.moment_p)?);
    manifest.target_stats = Some(MeasureStats::of(&target, &f.target, cfg.moment_p)?);

    let run = run_flow(&source, &target, cfg).map_err(ExperimentError::Validation)?;
    write_flow_outputs(&run, cfg.record_trajectory, out, manifest)?;
    let last = run.final_state();
    manifest.steps = Some(last.step_index);
    manifest.final_time = Some(last.time);
    manifest.outcome = run.outcome.name().into();
    Ok(match run.outcome {
        RunOutcome::Failed(e) => Some(ExperimentError::from(e)),
        _ => None,
    })
}

fn write_flow_outputs(
    run: &FlowRun,
    trajectory: bool,
    out: &Path,
    manifest: &mut RunManifest,
) -> Result<(), ExperimentError> {
    write(out, METRICS_FILE, &diagnostics::metrics_to_csv(&run.metrics))?;
    manifest.files.push(METRICS_FILE.into());
    write(out, FLOWMAP_FILE, &flowmap_csv(run.final_state()))?;
    manifest.files.push(FLOWMAP_FILE.into());
    if trajectory {
        write(out, TRAJECTORY_FILE, &trajectory_csv(&run.snapshots))?;
        manifest.files.push(TRAJECTORY_FILE.into());
    }
    Ok(())
}

fn coordinate_header(prefix: &str, d: usize) -> String {
    (1..=d).map(|c| format!(",{prefix}{c}")).collect()
}

/// `id,x1..xd,y1..yd`: starting point and current position of each particle.
pub fn flowmap_csv(state: &FlowState) -> String {
    let d = state.cloud.dim();
    let mut s = format!("id{}{}\n", coordinate_header("x", d), coordinate_header("y", d));
    for (i, (x, y)) in state
        .initial_points
        .chunks_exact(d)
        .zip(state.cloud.rows())
        .enumerate()
    {
        write!(s, "{i}").expect("writing to a String");
        for v in x.iter().chain(y) {
            write!(s, ",{}", fmt_f64(*v)).expect("writing to a String");
        }
        s.push('\n');
    }
    s
}

/// `step,t,id,x1..xd`: one row per particle per snapshot.
pub fn trajectory_csv(snapshots: &[FlowState]) -> String {
    let d = snapshots.first().map_or(1, |s| s.cloud.dim());
    let mut s = format!("step,t,id{}\n", coordinate_header("x", d));
    for snap in snapshots {
        let t = fmt_f64(snap.time);
        for (i, x) in snap.cloud.rows().enumerate() {
            write!(s, "{},{t},{i}", snap.step_index).expect("writing to a String");
            for v in x {
                write!(s, ",{}", fmt_f64(*v)).expect("writing to a String");
            }
            s.push('\n');
        }
    }
    s
}

/// One hyperplane-integration case.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LemmaCase {
    pub dim: usize,
    /// `None` for the Gaussian density, `Some(R)` for the ball indicator.
    pub radius: Option<f64>,
    pub result: SliceIntegral,
}

pub const LEMMA_HEADER: &str = "dim,function,radius,lhs,rhs,prefactor,relative_error";

/// Evaluates every case of a lemma experiment.
pub fn lemma_cases(l: &LemmaExperiment) -> Result<Vec<LemmaCase>, ExperimentError> {
    let mut cases = Vec::new();
    for &d in &l.dims {
        let mode = if d == 2 {
            DirectionMode::Grid2d
        } else {
            DirectionMode::AntitheticMonteCarlo
        };
        let dirs = direction_set(d, l.directions, mode, l.seed)?;
        for &r in &l.radii {
            let result = slice_integral_check(
                move |x: &[f64]| {
                    if x.iter().map(|c| c * c).sum::<f64>() < r * r {
                        1.0
                    } else {
                        0.0
                    }
                },
                d,
                &dirs,
                l.grid,
            )?;
            cases.push(LemmaCase {
                dim: d,
                radius: Some(r),
                result,
            });
        }
        if l.gaussian {
            let norm = (2.0 * std::f64::consts::PI).powf(-(d as f64) / 2.0);
            let result = slice_integral_check(
                move |x: &[f64]| norm * (-0.5 * x.iter().map(|c| c * c).sum::<f64>()).exp(),
                d,
                &dirs,
                l.grid,
            )?;
            cases.push(LemmaCase {
                dim: d,
                radius: None,
                result,
            });
        }
    }
    Ok(cases)
}

fn run_lemma_experiment(
    l: &LemmaExperiment,
    out: &Path,
    manifest: &mut RunManifest,
) -> Result<Option<ExperimentError>, ExperimentError> {
    manifest.experiment = "slice-lemma".into();
    manifest.directions = Some(l.directions);
    let cases = match lemma_cases(l) {
        Ok(c) => c,
        Err(e @ ExperimentError::Numerical(_)) => {
            manifest.outcome = "failed".into();
            return Ok(Some(e));
        }
        Err(e) => return Err(e),
    };
    let mut s = String::from(LEMMA_HEADER);
    s.push('\n');
    for c in &cases {
        let (function, radius) = match c.radius {
            Some(r) => ("ball", fmt_f64(r)),
            None => ("gaussian", String::new()),
        };
        writeln!(
            s,
            "{},{function},{radius},{},{},{},{}",
            c.dim,
            fmt_f64(c.result.lhs),
            fmt_f64(c.result.rhs),
            fmt_f64(c.result.prefactor),
            fmt_f64(c.result.relative_error())
        )
        .expect("writing to a String");
    }
    write(out, LEMMA_FILE, &s)?;
    manifest.files.push(LEMMA_FILE.into());
    manifest.outcome = "completed".into();
    Ok(None)
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<(), ExperimentError> {
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| ExperimentError::io(path, e))
}
