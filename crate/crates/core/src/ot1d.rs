//! Exact one-dimensional optimal transport.
//!
//! For measures on the line the optimal map for the quadratic cost is the
//! monotone rearrangement `T = F_tgt^{[-1]} ∘ F_src`. With equally many
//! equal-weight particles on both sides this is plain order-statistic
//! matching; otherwise the quantile construction is evaluated at every source
//! particle.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::measures::{weights_sum_to_one, ParticleCloud};

/// Slack used when comparing cumulative sums in the quantile walk.
const CUMULATIVE_EPS: f64 = 1e-12;

/// Densities below this value are treated as outside the support.
pub const DENSITY_FLOOR: f64 = 1e-12;

/// Sorted 1D projection of a cloud.
#[derive(Debug, Clone, PartialEq)]
pub struct Projection1D {
    values: Vec<f64>,
    order: Vec<usize>,
    weights: Vec<f64>,
    uniform: bool,
}

impl Projection1D {
    /// Sorts `values` (ties broken by index) and carries `weights` along.
    pub fn from_values(values: &[f64], weights: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Validation("projection of an empty measure".into()));
        }
        if values.len() != weights.len() {
            return Err(Error::Validation(format!(
                "{} values but {} weights",
                values.len(),
                weights.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Validation("non-finite projected value".into()));
        }
        if weights.iter().any(|w| !(*w > 0.0)) || !weights_sum_to_one(weights) {
            let total: f64 = weights.iter().sum();
            return Err(Error::Validation(format!(
                "projection weights must be positive and sum to 1 (sum = {total})"
            )));
        }
        let pairs = sorted_pairs(values, None);
        let order: Vec<usize> = pairs.iter().map(|p| p.1 as usize).collect();
        Ok(Self {
            values: pairs.iter().map(|p| p.0).collect(),
            weights: order.iter().map(|&i| weights[i]).collect(),
            uniform: weights.iter().all(|w| *w == weights[0]),
            order,
        })
    }

    /// Equal weights `1/N`.
    pub fn uniform(values: &[f64]) -> Result<Self> {
        let n = values.len().max(1);
        Self::from_values(values, &vec![1.0 / n as f64; values.len()])
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Nondecreasing projected values.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `order()[j]` is the original index of the `j`-th smallest value.
    pub fn order(&self) -> &[usize] {
        &self.order
    }

    /// Weights aligned with `values()`.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn is_uniform(&self) -> bool {
        self.uniform
    }

    fn scatter(&self, sorted: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; sorted.len()];
        for (j, &i) in self.order.iter().enumerate() {
            out[i] = sorted[j];
        }
        out
    }
}

/// Projects every particle on `direction` and sorts the result.
pub fn project(cloud: &ParticleCloud, direction: &[f64]) -> Result<Projection1D> {
    crate::error::ensure_dim(cloud.dim(), direction.len())?;
    let norm = direction.iter().map(|x| x * x).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(Error::Validation(format!(
            "projection direction has norm {norm}"
        )));
    }
    let mut values = Vec::with_capacity(cloud.len());
    project_into(cloud.points(), cloud.dim(), direction, &mut values);
    Projection1D::from_values(&values, cloud.weights())
}

pub(crate) fn project_into(points: &[f64], dim: usize, direction: &[f64], out: &mut Vec<f64>) {
    out.clear();
    match dim {
        1 => out.extend(points.iter().map(|x| x * direction[0] + 0.0)),
        2 => out.extend(
            points
                .chunks_exact(2)
                .map(|p| p[0] * direction[0] + p[1] * direction[1] + 0.0),
        ),
        _ => out.extend(points.chunks_exact(dim).map(|p| {
            // `+ 0.0` turns -0.0 into +0.0 so equal values sort by index.
            p.iter().zip(direction).map(|(a, b)| a * b).sum::<f64>() + 0.0
        })),
    }
}

/// Sorts `(value, index)` pairs by value, ties by index. When `hint` holds the
/// order from a previous, nearby configuration the sort starts from it, which
/// makes the adaptive merge sort close to linear; the result does not depend
/// on the hint.
pub(crate) fn sorted_pairs(values: &[f64], hint: Option<&[u32]>) -> Vec<(f64, u32)> {
    let mut pairs = Vec::with_capacity(values.len());
    sort_pairs_into(values, hint, &mut pairs);
    pairs
}

pub(crate) fn sort_pairs_into(values: &[f64], hint: Option<&[u32]>, pairs: &mut Vec<(f64, u32)>) {
    pairs.clear();
    match hint {
        Some(h) if h.len() == values.len() => {
            pairs.extend(h.iter().map(|&i| (values[i as usize], i)))
        }
        _ => pairs.extend(values.iter().enumerate().map(|(i, &v)| (v, i as u32))),
    }
    pairs.sort_by(pair_cmp);
}

#[inline]
fn pair_cmp(a: &(f64, u32), b: &(f64, u32)) -> Ordering {
    a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))
}

/// Images of the sorted source values under the monotone map, in sorted
/// source order.
pub(crate) fn sorted_images(
    src_weights: &[f64],
    src_uniform: bool,
    tgt_values: &[f64],
    tgt_weights: &[f64],
    tgt_uniform: bool,
    out: &mut [f64],
) {
    let n = src_weights.len();
    if src_uniform && tgt_uniform && n == tgt_values.len() {
        out.copy_from_slice(tgt_values);
        return;
    }
    // T(x) = inf{ t : F_tgt(t) >= F_src(x) }, with F_src(x_j) the inclusive
    // cumulative weight up to sorted position j.
    let last = tgt_values.len() - 1;
    let mut l = 0;
    let mut tgt_cum = tgt_weights[0];
    let mut src_cum = 0.0;
    for j in 0..n {
        src_cum += src_weights[j];
        while l < last && tgt_cum < src_cum - CUMULATIVE_EPS {
            l += 1;
            tgt_cum += tgt_weights[l];
        }
        out[j] = tgt_values[l];
    }
}

/// Replaces the images of runs of equal source values by their
/// weight-averaged image (the barycenter of the transport plan restricted to
/// that source atom).
pub(crate) fn average_ties(src_values: &[f64], src_weights: &[f64], images: &mut [f64]) {
    let n = src_values.len();
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && src_values[end] == src_values[start] {
            end += 1;
        }
        if end - start > 1 {
            let mass: f64 = src_weights[start..end].iter().sum();
            let mean = src_weights[start..end]
                .iter()
                .zip(&images[start..end])
                .map(|(w, t)| w * t)
                .sum::<f64>()
                / mass;
            images[start..end].fill(mean);
        }
        start = end;
    }
}

/// `T(x_i)` for every source particle, indexed like the original cloud.
pub fn monotone_map(src: &Projection1D, tgt: &Projection1D) -> Result<Vec<f64>> {
    let sorted = sorted_map(src, tgt)?;
    Ok(src.scatter(&sorted))
}

/// Monotone map where particles sharing a projected value share the mean of
/// their images. Agrees with [`monotone_map`] when all source values differ.
pub fn tie_averaged_map(src: &Projection1D, tgt: &Projection1D) -> Result<Vec<f64>> {
    let mut sorted = sorted_map(src, tgt)?;
    average_ties(&src.values, &src.weights, &mut sorted);
    Ok(src.scatter(&sorted))
}

fn sorted_map(src: &Projection1D, tgt: &Projection1D) -> Result<Vec<f64>> {
    check_mass(src)?;
    check_mass(tgt)?;
    let mut out = vec![0.0; src.len()];
    sorted_images(
        &src.weights,
        src.uniform,
        &tgt.values,
        &tgt.weights,
        tgt.uniform,
        &mut out,
    );
    Ok(out)
}

fn check_mass(p: &Projection1D) -> Result<()> {
    let total: f64 = p.weights.iter().sum();
    if p.is_empty() || !(total > 0.0) {
        Err(Error::Validation("measure has zero total weight".into()))
    } else {
        Ok(())
    }
}

/// `sum_i w_i |T(x_i) - x_i|^2` with `T` the monotone map.
pub fn w2_sq_1d(src: &Projection1D, tgt: &Projection1D) -> Result<f64> {
    check_mass(src)?;
    check_mass(tgt)?;
    if src.uniform && tgt.uniform && src.len() == tgt.len() {
        return Ok(matched_cost(&src.values, &tgt.values));
    }
    Ok(coupling_cost(&src.values, &src.weights, &tgt.values, &tgt.weights))
}

/// `(1/N) Σ (y_j - x_j)^2` for equal-size sorted uniform samples.
pub(crate) fn matched_cost(values: &[f64], images: &[f64]) -> f64 {
    let s: f64 = values
        .iter()
        .zip(images)
        .map(|(x, t)| (t - x) * (t - x))
        .sum();
    s / values.len() as f64
}

/// `∫_0^1 |F_src^{-1}(u) - F_tgt^{-1}(u)|^2 du` for sorted weighted atoms,
/// splitting atoms wherever the cumulative weights interleave.
pub(crate) fn coupling_cost(
    src_values: &[f64],
    src_weights: &[f64],
    tgt_values: &[f64],
    tgt_weights: &[f64],
) -> f64 {
    let (mut i, mut j) = (0, 0);
    let (mut a, mut b) = (src_weights[0], tgt_weights[0]);
    let mut cost = 0.0;
    loop {
        let diff = src_values[i] - tgt_values[j];
        let mass = a.min(b);
        cost += mass * diff * diff;
        if a <= b {
            b -= a;
            i += 1;
            if i == src_values.len() {
                break;
            }
            a = src_weights[i];
        } else {
            a -= b;
            j += 1;
            if j == tgt_values.len() {
                break;
            }
            b = tgt_weights[j];
        }
    }
    cost
}

/// A probability density sampled on a uniform grid `x_j = start + j h`.
///
/// Node `j` stands for the cell `[x_j - h/2, x_j + h/2]` carrying mass
/// `density[j] * h`; the induced piecewise-constant density is what the CDF,
/// quantile and entropy below are computed from.
#[derive(Debug, Clone, PartialEq)]
pub struct Density1DGrid {
    start: f64,
    spacing: f64,
    density: Vec<f64>,
}

impl Density1DGrid {
    pub fn new(start: f64, spacing: f64, density: Vec<f64>) -> Result<Self> {
        if !(spacing > 0.0) || !start.is_finite() {
            return Err(Error::Validation(format!(
                "grid needs a finite start and positive spacing, got ({start}, {spacing})"
            )));
        }
        if density.len() < 3 {
            return Err(Error::Validation("grid needs at least three nodes".into()));
        }
        if density.iter().any(|p| !(*p >= 0.0) || !p.is_finite()) {
            return Err(Error::Validation("densities must be finite and nonnegative".into()));
        }
        let mass: f64 = density.iter().sum::<f64>() * spacing;
        if (mass - 1.0).abs() > 1e-10 {
            return Err(Error::Validation(format!(
                "grid density integrates to {mass}, expected 1"
            )));
        }
        Ok(Self {
            start,
            spacing,
            density,
        })
    }

    /// Samples `f` on `m` nodes spanning `[lo, hi]` and normalizes the result.
    pub fn from_fn(lo: f64, hi: f64, m: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        if m < 3 || !(hi > lo) {
            return Err(Error::Validation(format!(
                "need m >= 3 nodes on a nonempty interval, got m = {m} on [{lo}, {hi}]"
            )));
        }
        let h = (hi - lo) / (m - 1) as f64;
        let raw: Vec<f64> = (0..m).map(|j| f(lo + j as f64 * h)).collect();
        let mass: f64 = raw.iter().sum::<f64>() * h;
        if !(mass > 0.0) || !mass.is_finite() {
            return Err(Error::Validation("density has no mass on the grid".into()));
        }
        Self::new(lo, h, raw.into_iter().map(|p| p / mass).collect())
    }

    pub fn len(&self) -> usize {
        self.density.len()
    }

    pub fn is_empty(&self) -> bool {
        self.density.is_empty()
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn node(&self, j: usize) -> f64 {
        self.start + j as f64 * self.spacing
    }

    pub fn density(&self) -> &[f64] {
        &self.density
    }

    /// `∫ ρ log ρ` with `0 log 0 = 0`.
    pub fn entropy(&self) -> f64 {
        self.density
            .iter()
            .filter(|p| **p > 0.0)
            .map(|p| p * p.ln())
            .sum::<f64>()
            * self.spacing
    }

    /// Cumulative mass at the cell edges, `edges[j] = F(x_j - h/2)`.
    fn edge_cdf(&self) -> Vec<f64> {
        let mut edges = Vec::with_capacity(self.density.len() + 1);
        let mut acc = 0.0;
        edges.push(0.0);
        for p in &self.density {
            acc += p * self.spacing;
            edges.push(acc);
        }
        edges
    }

    /// `inf { x : F(x) >= u }` for the piecewise-constant density.
    fn quantile(&self, edges: &[f64], u: f64) -> f64 {
        let h = self.spacing;
        let u = u.clamp(0.0, edges[edges.len() - 1]);
        let k = edges.partition_point(|e| *e < u);
        if k == 0 {
            // u == 0: left end of the first cell with mass
            let j = self.density.iter().position(|p| *p > 0.0).unwrap_or(0);
            return self.node(j) - 0.5 * h;
        }
        let j = k - 1;
        self.node(j) - 0.5 * h + (u - edges[j]) / self.density[j]
    }
}

/// Both sides of the 1D entropy inequality
/// `∫ μ'(y) (T(y) - y) dy <= E(ν) - E(μ)`, with `T` the monotone map from `μ`
/// to `ν` and `E(ρ) = ∫ ρ log ρ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LemmaGap {
    pub lhs: f64,
    pub rhs: f64,
}

impl LemmaGap {
    pub fn holds(&self, tol: f64) -> bool {
        self.lhs <= self.rhs + tol
    }
}

/// Evaluates the entropy inequality on grid densities.
///
/// `μ'` is a central difference at interior nodes; nodes where
/// `μ < DENSITY_FLOOR` are dropped from the left-hand side. `T(y_j)` is the
/// exact monotone map between the piecewise-constant densities, evaluated at
/// the nodes of `μ`.
pub fn entropy_lemma_gap(mu: &Density1DGrid, nu: &Density1DGrid) -> Result<LemmaGap> {
    for g in [mu, nu] {
        let mass: f64 = g.density.iter().sum::<f64>() * g.spacing;
        if (mass - 1.0).abs() > 1e-10 {
            return Err(Error::Validation(format!(
                "grid density integrates to {mass}, expected 1"
            )));
        }
    }
    let mu_edges = mu.edge_cdf();
    let nu_edges = nu.edge_cdf();
    let h = mu.spacing;
    let rho = &mu.density;
    let mut lhs = 0.0;
    for j in 1..rho.len() - 1 {
        if rho[j] < DENSITY_FLOOR {
            continue;
        }
        let y = mu.node(j);
        let u = mu_edges[j] + 0.5 * rho[j] * h;
        let t = nu.quantile(&nu_edges, u);
        lhs += 0.5 * (rho[j + 1] - rho[j - 1]) * (t - y);
    }
    Ok(LemmaGap {
        lhs,
        rhs: nu.entropy() - mu.entropy(),
    })
}
