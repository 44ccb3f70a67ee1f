//! Re-checks a finished run against the criteria of its catalogue entry.

use std::fmt;
use std::fs;
use std::path::Path;

use super::catalogue::{find_scenario, Criterion};
use super::runner::{
    RunManifest, FLOWMAP_FILE, LEMMA_FILE, LEMMA_HEADER, METRICS_FILE, TRAJECTORY_FILE,
};
use super::ExperimentError;
use crate::diagnostics::{self, MetricsRecord};
use crate::sliced::c_pd;

/// Outcome of one criterion.
#[derive(Debug, Clone, PartialEq)]
pub struct CriterionResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// All criterion lines of a verification, plus informational notes.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct VerifyReport {
    pub scenario: Option<String>,
    pub results: Vec<CriterionResult>,
    pub notes: Vec<String>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.results.iter().all(|r| r.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CriterionResult> {
        self.results.iter().filter(|r| !r.passed)
    }

    fn push(&mut self, name: &str, passed: bool, detail: String) {
        self.results.push(CriterionResult {
            name: name.to_string(),
            passed,
            detail,
        });
    }
}

impl fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in &self.results {
            let tag = if r.passed { "PASS" } else { "FAIL" };
            writeln!(f, "{tag} {}: {}", r.name, r.detail)?;
        }
        for n in &self.notes {
            writeln!(f, "INFO {n}")?;
        }
        Ok(())
    }
}

/// Reads the outputs in `dir` and evaluates the stored criteria.
///
/// Missing or unreadable files are errors; failed criteria are reported in
/// the returned report.
pub fn verify(dir: &Path) -> Result<VerifyReport, ExperimentError> {
    let manifest = RunManifest::read(dir)?;
    let mut report = VerifyReport {
        scenario: manifest.scenario.clone(),
        ..VerifyReport::default()
    };
    report.push(
        "run-status",
        manifest.exit_status == 0,
        format!("outcome {}, exit status {}", manifest.outcome, manifest.exit_status),
    );
    let outputs = Outputs::load(dir, &manifest)?;
    if let Some(rows) = &outputs.metrics {
        let bad = rows
            .iter()
            .position(|r| !(r.sw2_sq >= 0.0 && r.radius >= 0.0 && r.max_speed.is_finite()));
        report.push(
            "metrics-valid",
            !rows.is_empty() && bad.is_none(),
            match bad {
                Some(i) => format!("row {i} has a negative or non-finite entry"),
                None => format!("{} rows", rows.len()),
            },
        );
    }
    let criteria = manifest
        .scenario
        .as_deref()
        .and_then(find_scenario)
        .map_or(&[][..], |e| e.criteria);
    for c in criteria {
        let (passed, detail) = match check(c, &manifest, &outputs, &mut report.notes) {
            Ok(v) => v,
            Err(e) => (false, e),
        };
        report.push(c.name(), passed, detail);
    }
    Ok(report)
}

struct Outputs {
    metrics: Option<Vec<MetricsRecord>>,
    dir: std::path::PathBuf,
}

impl Outputs {
    fn load(dir: &Path, manifest: &RunManifest) -> Result<Self, ExperimentError> {
        let metrics = if manifest.experiment == "flow" {
            let text = read(dir, METRICS_FILE)?;
            Some(diagnostics::metrics_from_csv(&text).map_err(|e| {
                ExperimentError::Output(format!("{METRICS_FILE}: {e}"))
            })?)
        } else {
            None
        };
        Ok(Self {
            metrics,
            dir: dir.to_path_buf(),
        })
    }

    fn rows(&self) -> Result<&[MetricsRecord], String> {
        match &self.metrics {
            Some(r) if !r.is_empty() => Ok(r),
            _ => Err("no metrics rows".into()),
        }
    }

    fn table(&self, name: &str) -> Result<Vec<Vec<String>>, String> {
        let text = read(&self.dir, name).map_err(|e| e.to_string())?;
        Ok(text
            .lines()
            .skip(1)
            .filter(|l| !l.trim().is_empty())
            .map(|l| l.split(',').map(str::to_string).collect())
            .collect())
    }

    /// `(sources, images)` from `flowmap.csv`.
    fn flowmap(&self, d: usize) -> Result<(Vec<f64>, Vec<f64>), String> {
        let mut x = Vec::new();
        let mut y = Vec::new();
        for row in self.table(FLOWMAP_FILE)? {
            if row.len() != 1 + 2 * d {
                return Err(format!("{FLOWMAP_FILE}: row with {} fields", row.len()));
            }
            for (c, v) in row[1..].iter().enumerate() {
                let v: f64 = v.parse().map_err(|e| format!("{FLOWMAP_FILE}: {e}"))?;
                if c < d {
                    x.push(v);
                } else {
                    y.push(v);
                }
            }
        }
        Ok((x, y))
    }
}

fn read(dir: &Path, name: &str) -> Result<String, ExperimentError> {
    let path = dir.join(name);
    fs::read_to_string(&path).map_err(|e| ExperimentError::io(path, e))
}

fn parse(v: &str) -> Result<f64, String> {
    v.trim().parse::<f64>().map_err(|e| format!("{v:?}: {e}"))
}

fn check(
    c: &Criterion,
    manifest: &RunManifest,
    out: &Outputs,
    notes: &mut Vec<String>,
) -> Result<(bool, String), String> {
    let dim = manifest.source.as_ref().map_or(0, |s| s.dim);
    Ok(match *c {
        Criterion::MaxSpeedBelow(b) => {
            let m = out.rows()?.iter().map(|r| r.max_speed).fold(0.0, f64::max);
            (m <= b, format!("max speed {m:.3e} <= {b:e}"))
        }
        Criterion::InitialSpeedAbove(b) => {
            let s = out.rows()?[0].max_speed;
            (s >= b, format!("initial speed {s:.4} >= {b}"))
        }
        Criterion::CoordinateBelow { axis, bound } => {
            let mut worst: f64 = 0.0;
            let mut seen = 0;
            if manifest.files.iter().any(|f| f == TRAJECTORY_FILE) {
                for row in out.table(TRAJECTORY_FILE)? {
                    let v = row.get(3 + axis).ok_or("short trajectory row")?;
                    worst = worst.max(parse(v)?.abs());
                    seen += 1;
                }
            }
            let (_, images) = out.flowmap(dim)?;
            for y in images.chunks_exact(dim) {
                worst = worst.max(y[axis].abs());
                seen += 1;
            }
            (
                worst <= bound,
                format!("max |x{}| = {worst:.3e} over {seen} positions (bound {bound:e})", axis + 1),
            )
        }
        Criterion::Sw2Above(b) => {
            let m = out.rows()?.iter().map(|r| r.sw2_sq).fold(f64::INFINITY, f64::min);
            (m >= b, format!("min sw2_sq {m:.4} >= {b}"))
        }
        Criterion::EnergyNonincreasing(tol) => {
            let rows = out.rows()?;
            let worst = rows
                .windows(2)
                .map(|w| w[1].sw2_sq - w[0].sw2_sq)
                .fold(f64::NEG_INFINITY, f64::max);
            (
                rows.len() < 2 || worst <= tol,
                format!("largest increase between records {worst:.3e} (slack {tol:e})"),
            )
        }
        Criterion::DecaySlope { t_min, bound } => {
            let fit = diagnostics::decay_fit(out.rows()?, t_min).map_err(|e| e.to_string())?;
            (
                fit.slope <= bound,
                format!("slope {:.3} over {} records with t >= {t_min} (bound {bound})", fit.slope, fit.records),
            )
        }
        Criterion::DecayConstant { t_min, slack } => {
            let fit = diagnostics::decay_fit(out.rows()?, t_min).map_err(|e| e.to_string())?;
            let stats = manifest.source_stats.ok_or("manifest lacks source statistics")?;
            let (Some(ent), Some(m2)) = (stats.analytic_entropy, stats.analytic_m2) else {
                return Err("source law has no closed-form entropy or second moment".into());
            };
            let log2pi = (2.0 * std::f64::consts::PI).ln();
            let corrected = 2.0 * (ent + 0.5 * m2 + 0.5 * dim as f64 * log2pi);
            notes.push(format!(
                "decay constants: c_hat = {:.5}; 2(E+M2) = {:.5}; 2(E+M2/2) = {:.5}; \
                 with the Gaussian normalization 2(E+M2/2+(d/2)log 2π) = {corrected:.5}",
                fit.c_hat,
                2.0 * (ent + m2),
                2.0 * (ent + 0.5 * m2),
            ));
            (
                fit.c_hat <= corrected + slack,
                format!("max t*sw2_sq = {:.5} <= {corrected:.5} + {slack}", fit.c_hat),
            )
        }
        Criterion::MomentBounds { slack } => {
            let rows = out.rows()?;
            let s0 = manifest.source_stats.ok_or("manifest lacks source statistics")?;
            let nu = manifest.target_stats.ok_or("manifest lacks target statistics")?;
            let d = dim as f64;
            let cp = c_pd(nu.p, dim, 2000).map_err(|e| e.to_string())?;
            let b2 = s0.m2.max(nu.m2) * (1.0 + slack);
            let bp = s0.m_p.max(d.powf(nu.p / 2.0) * cp * nu.m_p) * (1.0 + slack);
            let br = s0.radius.max(d.sqrt() * nu.radius) * (1.0 + slack);
            let m2 = rows.iter().map(|r| r.m2).fold(0.0, f64::max);
            let mp = rows.iter().filter_map(|r| r.m_p).fold(0.0, f64::max);
            let r = rows.iter().map(|r| r.radius).fold(0.0, f64::max);
            (
                m2 <= b2 && mp <= bp && r <= br,
                format!(
                    "M2 {m2:.4} <= {b2:.4}, M{} {mp:.4} <= {bp:.4}, R {r:.4} <= {br:.4}",
                    nu.p
                ),
            )
        }
        Criterion::FinalSw2Below(b) => {
            let s = out.rows()?.last().map_or(f64::NAN, |r| r.sw2_sq);
            (s <= b, format!("final sw2_sq {s:.3e} <= {b:e}"))
        }
        Criterion::Sw2Decreased => {
            let rows = out.rows()?;
            let (a, b) = (rows[0].sw2_sq, rows[rows.len() - 1].sw2_sq);
            (b < a, format!("sw2_sq {a:.3e} -> {b:.3e}"))
        }
        Criterion::Converged(s) => {
            let last = out.rows()?.last().map_or(f64::NAN, |r| r.max_speed);
            (
                manifest.outcome == "converged" && last < s,
                format!("outcome {}, final max speed {last:.3e} (target {s:e})", manifest.outcome),
            )
        }
        Criterion::FlowMapGapPositive => {
            let (x, y) = out.flowmap(dim)?;
            let lag = diagnostics::lagrangian_cost(&x, &y, dim).map_err(|e| e.to_string())?;
            let opt = diagnostics::assignment_cost(&x, &y, dim).map_err(|e| e.to_string())?;
            let gap = lag - opt.cost;
            (
                gap > 1e-12 * (1.0 + opt.cost),
                format!("flow-map cost {lag:.6} - assignment cost {:.6} = {gap:.3e}", opt.cost),
            )
        }
        Criterion::MonotonicityViolated => {
            let (x, y) = out.flowmap(dim)?;
            let v = diagnostics::monotonicity_violations(&x, &y, dim, None)
                .map_err(|e| e.to_string())?;
            (v.count > 0, format!("{} violating pairs", v.count))
        }
        Criterion::LemmaRelativeError(tol) => {
            let rows = lemma_rows(out)?;
            let worst = rows.iter().map(|r| r.3).fold(0.0, f64::max);
            (
                !rows.is_empty() && worst <= tol,
                format!("{} cases, worst relative error {worst:.3e} (bound {tol:e})", rows.len()),
            )
        }
        Criterion::LemmaPlanarPrefactor(tol) => {
            let rows = lemma_rows(out)?;
            let planar: Vec<_> = rows.iter().filter(|r| r.0 == 2).collect();
            let err = planar
                .iter()
                .map(|r| (r.2 - std::f64::consts::FRAC_1_PI).abs())
                .fold(0.0, f64::max);
            (
                !planar.is_empty() && err <= tol,
                format!("|prefactor - 1/π| = {err:.3e} for d = 2"),
            )
        }
    })
}

/// `(dim, function, prefactor, relative_error)` per lemma row.
fn lemma_rows(out: &Outputs) -> Result<Vec<(usize, String, f64, f64)>, String> {
    let text = read(&out.dir, LEMMA_FILE).map_err(|e| e.to_string())?;
    if text.lines().next() != Some(LEMMA_HEADER) {
        return Err(format!("{LEMMA_FILE}: unexpected header"));
    }
    out.table(LEMMA_FILE)?
        .into_iter()
        .map(|row| {
            if row.len() != 7 {
                return Err(format!("{LEMMA_FILE}: row with {} fields", row.len()));
            }
            let dim = row[0].parse::<usize>().map_err(|e| e.to_string())?;
            Ok((dim, row[1].clone(), parse(&row[5])?, parse(&row[6])?))
        })
        .collect()
}
