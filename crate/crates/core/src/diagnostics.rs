//! Monitors and optimality probes: moments, support radius, entropy, exact
//! assignment, pairwise monotonicity and decay-rate fitting.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::measures::{ParticleCloud, ScenarioSpec};

/// Largest problem accepted by [`assignment_cost`] unless a cap is given.
pub const DEFAULT_ASSIGNMENT_CAP: usize = 2048;

/// Column order of `metrics.csv`.
pub const METRICS_HEADER: &str =
    "t,sw2_sq,m2,m_p,p,radius,entropy,max_speed,lagrangian_cost";

/// One row of per-step diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsRecord {
    pub t: f64,
    pub sw2_sq: f64,
    pub m2: f64,
    pub m_p: Option<f64>,
    pub p: Option<f64>,
    pub radius: f64,
    pub entropy: Option<f64>,
    pub max_speed: f64,
    pub lagrangian_cost: Option<f64>,
}

impl MetricsRecord {
    /// CSV row in [`METRICS_HEADER`] order. Numbers carry 17 significant
    /// digits; absent values are empty fields.
    pub fn to_csv_row(&self) -> String {
        let mut row = String::new();
        let fields = [
            Some(self.t),
            Some(self.sw2_sq),
            Some(self.m2),
            self.m_p,
            self.p,
            Some(self.radius),
            self.entropy,
            Some(self.max_speed),
            self.lagrangian_cost,
        ];
        for (i, f) in fields.iter().enumerate() {
            if i > 0 {
                row.push(',');
            }
            if let Some(x) = f {
                write!(row, "{}", fmt_f64(*x)).expect("writing to a String");
            }
        }
        row
    }

    pub fn from_csv_row(line: &str) -> Result<Self> {
        let cols: Vec<&str> = line.trim_end().split(',').collect();
        if cols.len() != 9 {
            return Err(Error::Validation(format!(
                "metrics row has {} fields, expected 9: {line:?}",
                cols.len()
            )));
        }
        let opt = |i: usize| -> Result<Option<f64>> {
            let c = cols[i].trim();
            if c.is_empty() {
                Ok(None)
            } else {
                c.parse::<f64>()
                    .map(Some)
                    .map_err(|e| Error::Validation(format!("metrics field {i} ({c:?}): {e}")))
            }
        };
        let req = |i: usize| -> Result<f64> {
            opt(i)?.ok_or_else(|| Error::Validation(format!("metrics field {i} is empty")))
        };
        Ok(Self {
            t: req(0)?,
            sw2_sq: req(1)?,
            m2: req(2)?,
            m_p: opt(3)?,
            p: opt(4)?,
            radius: req(5)?,
            entropy: opt(6)?,
            max_speed: req(7)?,
            lagrangian_cost: opt(8)?,
        })
    }
}

/// `{:.16e}`, with infinities spelled so that `f64::from_str` reads them back.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

/// Writes a header line followed by one row per record.
pub fn metrics_to_csv(records: &[MetricsRecord]) -> String {
    let mut out = String::with_capacity(64 * (records.len() + 1));
    out.push_str(METRICS_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&r.to_csv_row());
        out.push('\n');
    }
    out
}

pub fn metrics_from_csv(text: &str) -> Result<Vec<MetricsRecord>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim() == METRICS_HEADER => {}
        other => {
            return Err(Error::Validation(format!(
                "unexpected metrics header {other:?}"
            )))
        }
    }
    lines
        .filter(|l| !l.trim().is_empty())
        .map(MetricsRecord::from_csv_row)
        .collect()
}

/// `Σ w_i |x_i|^p`.
pub fn moment_p(cloud: &ParticleCloud, p: f64) -> Result<f64> {
    if !(p >= 1.0) || !p.is_finite() {
        return Err(Error::Parameter(format!("moment order must be >= 1, got {p}")));
    }
    Ok(cloud
        .rows()
        .zip(cloud.weights())
        .map(|(x, w)| {
            let r2: f64 = x.iter().map(|c| c * c).sum();
            if p == 2.0 {
                w * r2
            } else {
                w * r2.powf(0.5 * p)
            }
        })
        .sum())
}

/// `max_i |x_i|`.
pub fn support_radius(cloud: &ParticleCloud) -> f64 {
    cloud
        .rows()
        .map(|x| x.iter().map(|c| c * c).sum::<f64>().sqrt())
        .fold(0.0, f64::max)
}

/// Kernel bandwidth for [`entropy_estimate`].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Bandwidth {
    /// Per-axis standard deviation times `N^{-1/(d+4)}`.
    #[default]
    Auto,
    /// The same bandwidth on every axis.
    Fixed(f64),
}

/// Closed-form `∫ ρ log ρ` of the law behind a scenario, when one exists.
pub fn analytic_entropy(spec: &ScenarioSpec) -> Option<f64> {
    spec.analytic_entropy()
}

/// Gridded Gaussian-kernel estimate of `∫ ρ log ρ`.
///
/// The cloud is linearly binned on a bounding grid, smoothed by a separable
/// Gaussian kernel and summed as `Σ ρ̂ log ρ̂ · cell volume`. The estimate is
/// biased (it measures the smoothed density) and meant for monitoring.
/// Returns `-∞` when the cloud has no spread along some axis.
pub fn entropy_estimate(cloud: &ParticleCloud, bandwidth: Bandwidth) -> Result<f64> {
    let d = cloud.dim();
    let n = cloud.len();
    if d > 3 {
        return Err(Error::Parameter(format!(
            "gridded entropy estimate supports d <= 3, got {d}"
        )));
    }
    if n < 2 {
        return Err(Error::Validation("entropy estimate needs at least two particles".into()));
    }
    let mut lo = vec![f64::INFINITY; d];
    let mut hi = vec![f64::NEG_INFINITY; d];
    let mut mean = vec![0.0; d];
    for (x, w) in cloud.rows().zip(cloud.weights()) {
        for c in 0..d {
            lo[c] = lo[c].min(x[c]);
            hi[c] = hi[c].max(x[c]);
            mean[c] += w * x[c];
        }
    }
    let mut var = vec![0.0; d];
    for (x, w) in cloud.rows().zip(cloud.weights()) {
        for c in 0..d {
            var[c] += w * (x[c] - mean[c]).powi(2);
        }
    }
    let h: Vec<f64> = match bandwidth {
        Bandwidth::Auto => {
            let factor = (n as f64).powf(-1.0 / (d as f64 + 4.0));
            var.iter().map(|v| v.sqrt() * factor).collect()
        }
        Bandwidth::Fixed(b) => {
            if !(b > 0.0) || !b.is_finite() {
                return Err(Error::Parameter(format!("bandwidth must be positive, got {b}")));
            }
            vec![b; d]
        }
    };
    if (0..d).any(|c| hi[c] <= lo[c]) || h.iter().any(|b| !(*b > 0.0)) {
        return Ok(f64::NEG_INFINITY);
    }
    let cells = match d {
        1 => 4096,
        2 => 256,
        _ => 64,
    };
    let start: Vec<f64> = (0..d).map(|c| lo[c] - 4.0 * h[c]).collect();
    let step: Vec<f64> = (0..d)
        .map(|c| (hi[c] + 4.0 * h[c] - start[c]) / (cells - 1) as f64)
        .collect();
    let shape = vec![cells; d];
    let total: usize = shape.iter().product();
    let mut grid = vec![0.0; total];
    let strides: Vec<usize> = (0..d).map(|c| cells.pow(c as u32)).collect();
    // linear binning
    for (x, w) in cloud.rows().zip(cloud.weights()) {
        let mut base = vec![0usize; d];
        let mut frac = vec![0.0; d];
        for c in 0..d {
            let u = ((x[c] - start[c]) / step[c]).clamp(0.0, (cells - 1) as f64 - 1e-9);
            base[c] = u.floor() as usize;
            frac[c] = u - base[c] as f64;
        }
        for corner in 0..(1usize << d) {
            let mut idx = 0;
            let mut wt = *w;
            for c in 0..d {
                let bit = (corner >> c) & 1;
                idx += (base[c] + bit) * strides[c];
                wt *= if bit == 1 { frac[c] } else { 1.0 - frac[c] };
            }
            grid[idx] += wt;
        }
    }
    for c in 0..d {
        convolve_axis(&mut grid, &shape, strides[c], c, h[c] / step[c]);
    }
    let vol: f64 = step.iter().product();
    let mass: f64 = grid.iter().sum();
    let mut ent = 0.0;
    for g in &grid {
        let rho = g / (mass * vol);
        if rho > 0.0 {
            ent += rho * rho.ln() * vol;
        }
    }
    Ok(ent)
}

/// Gaussian smoothing along one axis with standard deviation `sigma` cells.
fn convolve_axis(grid: &mut [f64], shape: &[usize], stride: usize, axis: usize, sigma: f64) {
    let len = shape[axis];
    let radius = ((4.0 * sigma).ceil() as usize).min(len - 1);
    let kernel: Vec<f64> = (0..=radius)
        .map(|j| (-0.5 * (j as f64 / sigma).powi(2)).exp())
        .collect();
    let norm = kernel[0] + 2.0 * kernel[1..].iter().sum::<f64>();
    let mut line = vec![0.0; len];
    let mut out = vec![0.0; len];
    let total = grid.len();
    for start in 0..total {
        if !(start / stride).is_multiple_of(len) {
            continue;
        }
        for (j, l) in line.iter_mut().enumerate() {
            *l = grid[start + j * stride];
        }
        for (i, o) in out.iter_mut().enumerate() {
            let lo = i.saturating_sub(radius);
            let hi = (i + radius).min(len - 1);
            *o = (lo..=hi).map(|j| kernel[i.abs_diff(j)] * line[j]).sum::<f64>() / norm;
        }
        for (j, o) in out.iter().enumerate() {
            grid[start + j * stride] = *o;
        }
    }
}

/// Optimal pairing between two equal-size uniform point sets.
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    /// `min_σ (1/N) Σ |x_i - y_σ(i)|^2`.
    pub cost: f64,
    /// `permutation[i] = σ(i)`.
    pub permutation: Vec<usize>,
}

/// Exact squared-distance assignment between `x` and `y` (row-major, same
/// length, dimension `dim`), capped at [`DEFAULT_ASSIGNMENT_CAP`] points.
pub fn assignment_cost(x: &[f64], y: &[f64], dim: usize) -> Result<Assignment> {
    assignment_cost_capped(x, y, dim, DEFAULT_ASSIGNMENT_CAP)
}

/// [`assignment_cost`] with an explicit size cap.
pub fn assignment_cost_capped(x: &[f64], y: &[f64], dim: usize, cap: usize) -> Result<Assignment> {
    check_pairs(x, y, dim)?;
    let n = x.len() / dim;
    if n > cap {
        return Err(Error::Size(format!(
            "assignment of {n} points exceeds the cap of {cap}"
        )));
    }
    let cost = |i: usize, j: usize| sq_dist(&x[i * dim..(i + 1) * dim], &y[j * dim..(j + 1) * dim]);
    let permutation = hungarian(n, cost);
    let total = canonical_mean((0..n).map(|i| cost(i, permutation[i])).collect());
    Ok(Assignment {
        cost: total,
        permutation,
    })
}

/// `(1/N) Σ |x_i - y_i|^2`, the cost of the identity pairing.
pub fn lagrangian_cost(x: &[f64], y: &[f64], dim: usize) -> Result<f64> {
    check_pairs(x, y, dim)?;
    let costs = x
        .chunks_exact(dim)
        .zip(y.chunks_exact(dim))
        .map(|(a, b)| sq_dist(a, b))
        .collect();
    Ok(canonical_mean(costs))
}

fn check_pairs(x: &[f64], y: &[f64], dim: usize) -> Result<()> {
    if dim == 0 || x.is_empty() || !x.len().is_multiple_of(dim) {
        return Err(Error::Validation(format!(
            "{} coordinates do not form points of dimension {dim}",
            x.len()
        )));
    }
    if x.len() != y.len() {
        return Err(Error::Validation(format!(
            "point sets differ in size: {} vs {} coordinates",
            x.len(),
            y.len()
        )));
    }
    Ok(())
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum()
}

/// Mean of the costs summed in ascending order, so that any permutation of
/// the same costs gives the same bits.
fn canonical_mean(mut costs: Vec<f64>) -> f64 {
    let n = costs.len() as f64;
    costs.sort_by(f64::total_cmp);
    costs.iter().sum::<f64>() / n
}

/// Shortest augmenting path Hungarian algorithm, `O(n^3)`.
fn hungarian(n: usize, cost: impl Fn(usize, usize) -> f64) -> Vec<usize> {
    // 1-based arrays; column 0 is a sentinel.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    let mut minv = vec![0.0; n + 1];
    let mut used = vec![false; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        minv.fill(f64::INFINITY);
        used.fill(false);
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut perm = vec![0; n];
    for j in 1..=n {
        perm[p[j] - 1] = j - 1;
    }
    perm
}

/// Pairs that break order-2 monotonicity of a map.
#[derive(Debug, Clone, PartialEq)]
pub struct Violations {
    pub count: usize,
    /// Violating `(i, j)` with `i < j`, at most [`Violations::MAX_LISTED`].
    pub pairs: Vec<(usize, usize)>,
    pub tolerance: f64,
}

impl Violations {
    pub const MAX_LISTED: usize = 100_000;
}

/// Counts pairs with `(y_i - y_j)·(x_i - x_j) < -tol`. The default tolerance
/// is `1e-9 · scale²`, with `scale` the largest coordinate norm among inputs.
pub fn monotonicity_violations(
    x: &[f64],
    y: &[f64],
    dim: usize,
    tol: Option<f64>,
) -> Result<Violations> {
    check_pairs(x, y, dim)?;
    let n = x.len() / dim;
    if n < 2 {
        return Err(Error::Validation("monotonicity needs at least two pairs".into()));
    }
    let tolerance = tol.unwrap_or_else(|| {
        let scale = x
            .chunks_exact(dim)
            .chain(y.chunks_exact(dim))
            .map(|p| p.iter().map(|c| c * c).sum::<f64>().sqrt())
            .fold(0.0, f64::max);
        1e-9 * scale * scale
    });
    let mut count = 0;
    let mut pairs = Vec::new();
    for i in 0..n {
        let (xi, yi) = (&x[i * dim..(i + 1) * dim], &y[i * dim..(i + 1) * dim]);
        for j in i + 1..n {
            let (xj, yj) = (&x[j * dim..(j + 1) * dim], &y[j * dim..(j + 1) * dim]);
            let dot: f64 = (0..dim).map(|c| (yi[c] - yj[c]) * (xi[c] - xj[c])).sum();
            if dot < -tolerance {
                count += 1;
                if pairs.len() < Violations::MAX_LISTED {
                    pairs.push((i, j));
                }
            }
        }
    }
    Ok(Violations {
        count,
        pairs,
        tolerance,
    })
}

/// Empirical constant and rate of `SW_2^2(ρ_t, ν) ~ C / t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit {
    /// `max t · sw2_sq` over the fitted records.
    pub c_hat: f64,
    /// Least-squares slope of `log sw2_sq` against `log t`.
    pub slope: f64,
    pub records: usize,
}

/// Fits records with `t >= t_min` (and positive `t`, `sw2_sq`); needs ten.
pub fn decay_fit(metrics: &[MetricsRecord], t_min: f64) -> Result<DecayFit> {
    let pts: Vec<(f64, f64)> = metrics
        .iter()
        .filter(|r| r.t >= t_min && r.t > 0.0 && r.sw2_sq > 0.0)
        .map(|r| (r.t, r.sw2_sq))
        .collect();
    if pts.len() < 10 {
        return Err(Error::Validation(format!(
            "decay fit needs at least 10 usable records with t >= {t_min}, found {}",
            pts.len()
        )));
    }
    let c_hat = pts.iter().map(|(t, s)| t * s).fold(f64::NEG_INFINITY, f64::max);
    let n = pts.len() as f64;
    let mx = pts.iter().map(|(t, _)| t.ln()).sum::<f64>() / n;
    let my = pts.iter().map(|(_, s)| s.ln()).sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (t, s) in &pts {
        let (dx, dy) = (t.ln() - mx, s.ln() - my);
        sxy += dx * dy;
        sxx += dx * dx;
    }
    if !(sxx > 0.0) {
        return Err(Error::Validation("decay fit needs distinct times".into()));
    }
    Ok(DecayFit {
        c_hat,
        slope: sxy / sxx,
        records: pts.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(t: f64, sw2_sq: f64) -> MetricsRecord {
        MetricsRecord {
            t,
            sw2_sq,
            m2: 1.0,
            m_p: None,
            p: None,
            radius: 1.0,
            entropy: None,
            max_speed: 0.0,
            lagrangian_cost: Some(0.5),
        }
    }

    #[test]
    fn atom_moments_and_radius() {
        let c = ParticleCloud::from_rows(&[[-1.0, 0.0], [1.0, 0.0]]).unwrap();
        for p in [1.0, 2.0, 3.5, 8.0] {
            assert!((moment_p(&c, p).unwrap() - 1.0).abs() < 1e-15);
        }
        assert_eq!(support_radius(&c), 1.0);
        assert_eq!(support_radius(&c.scaled(3.0).unwrap()), 3.0);
        let origin = ParticleCloud::from_rows(&[[0.0, 0.0]]).unwrap();
        assert_eq!(moment_p(&origin, 2.0).unwrap(), 0.0);
        assert!(moment_p(&origin, 0.5).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let r = MetricsRecord {
            m_p: Some(0.1 + 0.2),
            p: Some(4.0),
            entropy: Some(f64::NEG_INFINITY),
            ..record(1.0 / 3.0, 2.0f64.sqrt())
        };
        let back = MetricsRecord::from_csv_row(&r.to_csv_row()).unwrap();
        assert_eq!(back, r);
        let empty = record(1.0, 2.0);
        assert!(empty.to_csv_row().contains(",,"));
        let parsed = metrics_from_csv(&metrics_to_csv(&[r, empty])).unwrap();
        assert_eq!(parsed, vec![r, empty]);
    }

    #[test]
    fn assignment_small_cases() {
        let x = [0.0, 1.0, 2.0];
        let a = assignment_cost(&x, &x, 1).unwrap();
        assert_eq!(a.cost, 0.0);
        assert_eq!(a.permutation, vec![0, 1, 2]);
        let y = [2.0, 0.0, 1.0];
        let b = assignment_cost(&x, &y, 1).unwrap();
        assert_eq!(b.cost, 0.0);
        assert_eq!(b.permutation, vec![1, 2, 0]);
        assert!(matches!(
            assignment_cost_capped(&x, &y, 1, 2),
            Err(Error::Size(_))
        ));
    }

    #[test]
    fn monotone_and_swapped_maps() {
        let x = [0.0, 1.0, 2.0];
        assert_eq!(monotonicity_violations(&x, &x, 1, None).unwrap().count, 0);
        let y = [1.0, 0.0, 2.0];
        let v = monotonicity_violations(&x, &y, 1, None).unwrap();
        assert_eq!(v.count, 1);
        assert_eq!(v.pairs, vec![(0, 1)]);
    }

    #[test]
    fn synthetic_decay() {
        for c in [1.0, 5.0] {
            let rs: Vec<_> = (1..=100).map(|t| record(t as f64, c / t as f64)).collect();
            let fit = decay_fit(&rs, 0.0).unwrap();
            assert!((fit.c_hat - c).abs() < 1e-10);
            assert!((fit.slope + 1.0).abs() < 1e-10);
        }
        let few: Vec<_> = (1..=5).map(|t| record(t as f64, 1.0)).collect();
        assert!(decay_fit(&few, 0.0).is_err());
    }

    #[test]
    fn degenerate_entropy() {
        let c = ParticleCloud::from_rows(&[[1.0, 1.0], [1.0, 1.0]]).unwrap();
        assert_eq!(entropy_estimate(&c, Bandwidth::Auto).unwrap(), f64::NEG_INFINITY);
    }
}
