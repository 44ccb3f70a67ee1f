//! Empirical measures, scenario samplers and direction sets on the sphere.
//!
//! A [`ParticleCloud`] is the discrete stand-in for a probability measure on
//! `R^d`: `N` points with positive weights summing to one. Scenario samplers
//! build the clouds used by the experiments; [`direction_set`] builds the
//! quadrature on `S^{d-1}` that replaces the uniform average over directions.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_dim, Error, Result};

/// Base tolerance on `|sum(weights) - 1|`; see [`weights_sum_to_one`].
pub const WEIGHT_SUM_TOL: f64 = 1e-12;

/// `|sum(weights) - 1| <= WEIGHT_SUM_TOL + n·ε`, leaving room for the
/// rounding of summing `n` weights.
pub fn weights_sum_to_one(weights: &[f64]) -> bool {
    let total: f64 = weights.iter().sum();
    (total - 1.0).abs() <= WEIGHT_SUM_TOL + weights.len() as f64 * f64::EPSILON
}

/// Seedable generator used everywhere randomness enters (sampling, directions,
/// IDT rotations). ChaCha8 gives identical streams on every platform.
pub type PortableRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> PortableRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `N` weighted points in `R^d`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleCloud {
    points: Vec<f64>,
    weights: Vec<f64>,
    dim: usize,
    uniform: bool,
}

impl ParticleCloud {
    /// Builds a cloud from row-major coordinates and explicit weights.
    pub fn new(points: Vec<f64>, weights: Vec<f64>, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Validation("dimension must be at least 1".into()));
        }
        if !points.len().is_multiple_of(dim) {
            return Err(Error::Validation(format!(
                "{} coordinates cannot be split into points of dimension {dim}",
                points.len()
            )));
        }
        let n = points.len() / dim;
        if n == 0 {
            return Err(Error::Validation("a cloud needs at least one point".into()));
        }
        if weights.len() != n {
            return Err(Error::Validation(format!(
                "{n} points but {} weights",
                weights.len()
            )));
        }
        if let Some(i) = points.iter().position(|x| !x.is_finite()) {
            return Err(Error::Validation(format!(
                "point {} has a non-finite coordinate",
                i / dim
            )));
        }
        if let Some(i) = weights.iter().position(|w| !(*w > 0.0) || !w.is_finite()) {
            return Err(Error::Validation(format!(
                "weight {i} = {} is not a positive finite number",
                weights[i]
            )));
        }
        if !weights_sum_to_one(&weights) {
            let total: f64 = weights.iter().sum();
            return Err(Error::Validation(format!(
                "weights sum to {total}, expected 1"
            )));
        }
        let uniform = weights.iter().all(|w| *w == weights[0]);
        Ok(Self {
            points,
            weights,
            dim,
            uniform,
        })
    }

    /// Equal weights `1/N`.
    pub fn uniform(points: Vec<f64>, dim: usize) -> Result<Self> {
        if dim == 0 || !points.len().is_multiple_of(dim) || points.is_empty() {
            return Self::new(points, Vec::new(), dim);
        }
        let n = points.len() / dim;
        Self::new(points, vec![1.0 / n as f64; n], dim)
    }

    /// Equal-weight cloud from a list of rows.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let dim = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        let mut points = Vec::with_capacity(rows.len() * dim);
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != dim {
                return Err(Error::Validation(format!(
                    "row {i} has {} coordinates, expected {dim}",
                    row.len()
                )));
            }
            points.extend_from_slice(row);
        }
        Self::uniform(points, dim)
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Row-major coordinates, `len() * dim()` values.
    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> std::slice::ChunksExact<'_, f64> {
        self.points.chunks_exact(self.dim)
    }

    /// True when every weight is bitwise equal (the `1/N` case).
    pub fn is_uniform(&self) -> bool {
        self.uniform
    }

    /// Same weights, new positions.
    pub fn with_points(&self, points: Vec<f64>) -> Result<Self> {
        if points.len() != self.points.len() {
            return Err(Error::Validation(format!(
                "expected {} coordinates, got {}",
                self.points.len(),
                points.len()
            )));
        }
        if let Some(i) = points.iter().position(|x| !x.is_finite()) {
            return Err(Error::Validation(format!(
                "point {} has a non-finite coordinate",
                i / self.dim
            )));
        }
        Ok(Self {
            points,
            weights: self.weights.clone(),
            dim: self.dim,
            uniform: self.uniform,
        })
    }

    pub fn translated(&self, shift: &[f64]) -> Result<Self> {
        ensure_dim(self.dim, shift.len())?;
        let points = self
            .rows()
            .flat_map(|row| row.iter().zip(shift).map(|(x, s)| x + s))
            .collect();
        self.with_points(points)
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        self.with_points(self.points.iter().map(|x| x * factor).collect())
    }

    /// Applies a `d x d` row-major matrix to every point.
    pub fn linear_image(&self, matrix: &[f64]) -> Result<Self> {
        let d = self.dim;
        if matrix.len() != d * d {
            return Err(Error::Validation(format!(
                "expected a {d}x{d} matrix, got {} entries",
                matrix.len()
            )));
        }
        let mut points = Vec::with_capacity(self.points.len());
        for row in self.rows() {
            for r in 0..d {
                points.push((0..d).map(|c| matrix[r * d + c] * row[c]).sum());
            }
        }
        self.with_points(points)
    }

    pub(crate) fn points_mut(&mut self) -> &mut [f64] {
        &mut self.points
    }
}

/// How a [`DirectionSet`] was generated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DirectionMode {
    /// Equally spaced angles on the circle (`d = 2` only).
    Grid2d,
    /// Independent uniform directions.
    MonteCarlo,
    /// Uniform directions drawn in `±θ` pairs.
    AntitheticMonteCarlo,
}

impl DirectionMode {
    /// `grid2d` in the plane, antithetic sampling elsewhere.
    pub fn default_for(dim: usize) -> Self {
        if dim == 2 {
            DirectionMode::Grid2d
        } else {
            DirectionMode::AntitheticMonteCarlo
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            DirectionMode::Grid2d => "grid2d",
            DirectionMode::MonteCarlo => "montecarlo",
            DirectionMode::AntitheticMonteCarlo => "antithetic",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "grid2d" => Some(DirectionMode::Grid2d),
            "montecarlo" | "mc" => Some(DirectionMode::MonteCarlo),
            "antithetic" | "antithetic-montecarlo" => Some(DirectionMode::AntitheticMonteCarlo),
            _ => None,
        }
    }
}

/// Quadrature nodes and weights on `S^{d-1}`.
///
/// Besides the nodes, the set records a reduction order: directions that are
/// images of each other under the symmetry the set was built with (`±θ` for
/// antithetic sets, reflection across the first axis for `grid2d`) form one
/// group and their contributions are summed together before being added to
/// any running total. With exactly mirrored inputs the mirrored contributions
/// then cancel to the last bit.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectionSet {
    directions: Vec<f64>,
    weights: Vec<f64>,
    dim: usize,
    mode: DirectionMode,
    groups: Vec<DirectionGroup>,
}

/// One or two direction indices reduced together.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DirectionGroup {
    pub first: usize,
    pub partner: Option<usize>,
}

impl DirectionGroup {
    pub fn indices(self) -> impl Iterator<Item = usize> {
        std::iter::once(self.first).chain(self.partner)
    }
}

impl DirectionSet {
    /// Builds a set from explicit unit directions and weights. Every direction
    /// forms its own reduction group.
    pub fn from_parts(
        directions: Vec<f64>,
        weights: Vec<f64>,
        dim: usize,
        mode: DirectionMode,
    ) -> Result<Self> {
        let groups = (0..weights.len())
            .map(|first| DirectionGroup {
                first,
                partner: None,
            })
            .collect();
        Self::with_groups(directions, weights, dim, mode, groups)
    }

    fn with_groups(
        directions: Vec<f64>,
        weights: Vec<f64>,
        dim: usize,
        mode: DirectionMode,
        groups: Vec<DirectionGroup>,
    ) -> Result<Self> {
        if dim == 0 || directions.len() != weights.len() * dim || weights.is_empty() {
            return Err(Error::Validation(format!(
                "{} direction coordinates and {} weights do not describe directions in dimension {dim}",
                directions.len(),
                weights.len()
            )));
        }
        for (k, dir) in directions.chunks_exact(dim).enumerate() {
            let norm = dir.iter().map(|x| x * x).sum::<f64>().sqrt();
            if (norm - 1.0).abs() > 1e-12 {
                return Err(Error::Validation(format!(
                    "direction {k} has norm {norm}"
                )));
            }
        }
        if weights.iter().any(|w| !(*w > 0.0)) {
            return Err(Error::Validation("direction weights must be positive".into()));
        }
        if !weights_sum_to_one(&weights) {
            let total: f64 = weights.iter().sum();
            return Err(Error::Validation(format!(
                "direction weights sum to {total}"
            )));
        }
        Ok(Self {
            directions,
            weights,
            dim,
            mode,
            groups,
        })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn mode(&self) -> DirectionMode {
        self.mode
    }

    pub fn direction(&self, k: usize) -> &[f64] {
        &self.directions[k * self.dim..(k + 1) * self.dim]
    }

    pub fn directions(&self) -> &[f64] {
        &self.directions
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn groups(&self) -> &[DirectionGroup] {
        &self.groups
    }

    /// `sum_k w_k θ_k θ_k^T`, row-major `d x d`. Equals `Id/d` for an exact
    /// quadrature of the uniform measure.
    pub fn second_moment(&self) -> Vec<f64> {
        let d = self.dim;
        let mut m = vec![0.0; d * d];
        for (dir, w) in self.directions.chunks_exact(d).zip(&self.weights) {
            for r in 0..d {
                for c in 0..d {
                    m[r * d + c] += w * dir[r] * dir[c];
                }
            }
        }
        m
    }

    /// `sum_k w_k θ_k`, accumulated group by group.
    pub fn first_moment(&self) -> Vec<f64> {
        let d = self.dim;
        let mut m = vec![0.0; d];
        for g in &self.groups {
            let mut part = vec![0.0; d];
            for k in g.indices() {
                for (p, x) in part.iter_mut().zip(self.direction(k)) {
                    *p += self.weights[k] * x;
                }
            }
            for (a, p) in m.iter_mut().zip(part) {
                *a += p;
            }
        }
        m
    }

    /// Rotates every direction by `angle` (plane only); grouping is kept.
    pub fn rotated_2d(&self, angle: f64) -> Self {
        debug_assert_eq!(self.dim, 2);
        let (s, c) = angle.sin_cos();
        let mut directions = Vec::with_capacity(self.directions.len());
        for dir in self.directions.chunks_exact(2) {
            let x = c * dir[0] - s * dir[1];
            let y = s * dir[0] + c * dir[1];
            let n = (x * x + y * y).sqrt();
            directions.push(x / n);
            directions.push(y / n);
        }
        Self {
            directions,
            ..self.clone()
        }
    }
}

/// Builds `m` quadrature directions on `S^{d-1}`.
///
/// - `d = 1` always yields `{+1, -1}` with weights `1/2` (except `grid2d`,
///   which is rejected outside the plane).
/// - `grid2d` places `θ_k = (cos 2πk/m, sin 2πk/m)`; coordinates are generated
///   so the set is exactly symmetric under both axis reflections.
/// - `antithetic` draws `ceil(m/2)` uniform directions and their negatives.
pub fn direction_set(dim: usize, m: usize, mode: DirectionMode, seed: u64) -> Result<DirectionSet> {
    if dim == 0 {
        return Err(Error::Parameter("dimension must be at least 1".into()));
    }
    if m == 0 {
        return Err(Error::Parameter("direction count must be at least 1".into()));
    }
    if mode == DirectionMode::Grid2d && dim != 2 {
        return Err(Error::Mode(format!(
            "grid2d directions require d = 2, got d = {dim}"
        )));
    }
    if dim == 1 {
        return DirectionSet::with_groups(
            vec![1.0, -1.0],
            vec![0.5, 0.5],
            1,
            mode,
            vec![DirectionGroup {
                first: 0,
                partner: Some(1),
            }],
        );
    }
    match mode {
        DirectionMode::Grid2d => grid2d(m),
        DirectionMode::MonteCarlo => {
            let mut rng = rng_from_seed(seed);
            let mut directions = Vec::with_capacity(m * dim);
            for _ in 0..m {
                directions.extend(random_unit_vector(&mut rng, dim));
            }
            DirectionSet::from_parts(directions, vec![1.0 / m as f64; m], dim, mode)
        }
        DirectionMode::AntitheticMonteCarlo => {
            let pairs = m.div_ceil(2);
            let mut rng = rng_from_seed(seed);
            let mut directions = Vec::with_capacity(2 * pairs * dim);
            let mut groups = Vec::with_capacity(pairs);
            for p in 0..pairs {
                let v = random_unit_vector(&mut rng, dim);
                directions.extend(v.iter().copied());
                directions.extend(v.iter().map(|x| -x));
                groups.push(DirectionGroup {
                    first: 2 * p,
                    partner: Some(2 * p + 1),
                });
            }
            let count = 2 * pairs;
            DirectionSet::with_groups(directions, vec![1.0 / count as f64; count], dim, mode, groups)
        }
    }
}

fn grid2d(m: usize) -> Result<DirectionSet> {
    // Exact values at multiples of a quarter turn; the rest is derived from the
    // first quadrant by reflections so that mirror images match bit for bit.
    let angle_point = |k: usize| -> (f64, f64) {
        let k = k % m;
        if 4 * k == m {
            return (0.0, 1.0);
        }
        if 2 * k == m {
            return (-1.0, 0.0);
        }
        if 4 * k == 3 * m {
            return (0.0, -1.0);
        }
        if k == 0 {
            return (1.0, 0.0);
        }
        if 2 * k > m {
            let (c, s) = base_angle(m - k, m);
            return (c, -s);
        }
        base_angle(k, m)
    };
    let mut directions = Vec::with_capacity(2 * m);
    for k in 0..m {
        let (c, s) = angle_point(k);
        directions.push(c);
        directions.push(s);
    }
    let mut groups = vec![DirectionGroup {
        first: 0,
        partner: None,
    }];
    for k in 1..m.div_ceil(2) {
        groups.push(DirectionGroup {
            first: k,
            partner: Some(m - k),
        });
    }
    if m.is_multiple_of(2) && m >= 2 {
        groups.push(DirectionGroup {
            first: m / 2,
            partner: None,
        });
    }
    DirectionSet::with_groups(directions, vec![1.0 / m as f64; m], 2, DirectionMode::Grid2d, groups)
}

/// `(cos, sin)` of `2πk/m` for `0 < k <= m/2`, reflected from the first quadrant.
fn base_angle(k: usize, m: usize) -> (f64, f64) {
    if 4 * k > m {
        // second quadrant: angle = π - 2π(m/2 - k)/m
        let (c, s) = first_quadrant(m - 2 * k, m);
        (-c, s)
    } else {
        first_quadrant(2 * k, m)
    }
}

/// `(cos, sin)` of `π num / den`, for `num/den <= 1/2`.
fn first_quadrant(num: usize, den: usize) -> (f64, f64) {
    let angle = PI * num as f64 / den as f64;
    let (s, c) = angle.sin_cos();
    let n = (c * c + s * s).sqrt();
    (c / n, s / n)
}

pub(crate) fn random_unit_vector<R: Rng>(rng: &mut R, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-8 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

/// Law a scenario cloud is drawn from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ScenarioKind {
    /// Independent normal coordinates; `scale` holds the per-axis standard
    /// deviation (a single value broadcasts).
    Gaussian { mean: Vec<f64>, scale: Vec<f64> },
    /// Uniform on the box `[lo, hi]` (per axis; single values broadcast).
    UniformBox { lo: Vec<f64>, hi: Vec<f64> },
    /// Fixed atoms. With as many particles as atoms the atoms are reproduced
    /// with their own weights; otherwise each atom is repeated in proportion to
    /// its weight (largest-remainder rounding) and particles get weight `1/N`.
    Atoms {
        locations: Vec<Vec<f64>>,
        weights: Vec<f64>,
    },
    /// Uniform on `(a, b) x {0}^{d-1}`.
    Segment { a: f64, b: f64 },
    /// Uniform on the shell `r0 <= |x| <= r1`.
    RadialAnnulus { r0: f64, r1: f64 },
    /// A base law shifted by a fixed vector.
    TranslateOf {
        base: Box<ScenarioKind>,
        shift: Vec<f64>,
    },
    /// A base law rotated by `angle` radians (plane only).
    RotateOf { base: Box<ScenarioKind>, angle: f64 },
}

impl ScenarioKind {
    pub fn name(&self) -> &'static str {
        match self {
            ScenarioKind::Gaussian { .. } => "gaussian",
            ScenarioKind::UniformBox { .. } => "uniform-box",
            ScenarioKind::Atoms { .. } => "atoms",
            ScenarioKind::Segment { .. } => "segment",
            ScenarioKind::RadialAnnulus { .. } => "radial-annulus",
            ScenarioKind::TranslateOf { .. } => "translate-of",
            ScenarioKind::RotateOf { .. } => "rotate-of",
        }
    }

    fn validate(&self, dim: usize) -> Result<()> {
        match self {
            ScenarioKind::Gaussian { mean, scale } => {
                check_axis_len("gaussian mean", mean.len(), dim)?;
                check_axis_len("gaussian scale", scale.len(), dim)?;
                if scale.iter().any(|s| !(*s > 0.0) || !s.is_finite()) {
                    return Err(Error::Parameter("gaussian scale must be positive".into()));
                }
                if mean.iter().any(|m| !m.is_finite()) {
                    return Err(Error::Parameter("gaussian mean must be finite".into()));
                }
            }
            ScenarioKind::UniformBox { lo, hi } => {
                check_axis_len("box lo", lo.len(), dim)?;
                check_axis_len("box hi", hi.len(), dim)?;
                for axis in 0..dim {
                    let (l, h) = (broadcast(lo, axis), broadcast(hi, axis));
                    if !(l < h) || !l.is_finite() || !h.is_finite() {
                        return Err(Error::Parameter(format!(
                            "box axis {axis}: need lo < hi, got [{l}, {h}]"
                        )));
                    }
                }
            }
            ScenarioKind::Atoms { locations, weights } => {
                if locations.is_empty() {
                    return Err(Error::Validation("atoms need at least one location".into()));
                }
                if locations.len() != weights.len() {
                    return Err(Error::Validation(format!(
                        "{} atom locations but {} weights",
                        locations.len(),
                        weights.len()
                    )));
                }
                for loc in locations {
                    ensure_dim(dim, loc.len())?;
                }
                if weights.iter().any(|w| !(*w > 0.0)) {
                    return Err(Error::Validation("atom weights must be positive".into()));
                }
                if !weights_sum_to_one(weights) {
                    let total: f64 = weights.iter().sum();
                    return Err(Error::Validation(format!(
                        "atom weights sum to {total}, expected 1"
                    )));
                }
            }
            ScenarioKind::Segment { a, b } => {
                if !(a < b) || !a.is_finite() || !b.is_finite() {
                    return Err(Error::Parameter(format!(
                        "segment needs a < b, got ({a}, {b})"
                    )));
                }
            }
            ScenarioKind::RadialAnnulus { r0, r1 } => {
                if !(*r0 >= 0.0) || !(r0 < r1) || !r1.is_finite() {
                    return Err(Error::Parameter(format!(
                        "annulus needs 0 <= r0 < r1, got ({r0}, {r1})"
                    )));
                }
            }
            ScenarioKind::TranslateOf { base, shift } => {
                ensure_dim(dim, shift.len())?;
                base.validate(dim)?;
            }
            ScenarioKind::RotateOf { base, angle } => {
                if dim != 2 {
                    return Err(Error::Parameter("rotate-of requires d = 2".into()));
                }
                if !angle.is_finite() {
                    return Err(Error::Parameter("rotation angle must be finite".into()));
                }
                base.validate(dim)?;
            }
        }
        Ok(())
    }

    fn draw<R: Rng>(&self, dim: usize, n: usize, rng: &mut R) -> Vec<f64> {
        let mut points = Vec::with_capacity(n * dim);
        match self {
            ScenarioKind::Gaussian { mean, scale } => {
                for _ in 0..n {
                    for axis in 0..dim {
                        let z: f64 = rng.sample(StandardNormal);
                        points.push(broadcast(mean, axis) + broadcast(scale, axis) * z);
                    }
                }
            }
            ScenarioKind::UniformBox { lo, hi } => {
                for _ in 0..n {
                    for axis in 0..dim {
                        let (l, h) = (broadcast(lo, axis), broadcast(hi, axis));
                        let u: f64 = rng.random();
                        points.push(l + (h - l) * u);
                    }
                }
            }
            ScenarioKind::Segment { a, b } => {
                for _ in 0..n {
                    let u: f64 = rng.random();
                    points.push(a + (b - a) * u);
                    points.extend(std::iter::repeat_n(0.0, dim - 1));
                }
            }
            ScenarioKind::RadialAnnulus { r0, r1 } => {
                let d = dim as i32;
                let (lo, hi) = (r0.powi(d), r1.powi(d));
                for _ in 0..n {
                    let u: f64 = rng.random();
                    let r = (lo + u * (hi - lo)).powf(1.0 / dim as f64);
                    let dir = random_unit_vector(rng, dim);
                    points.extend(dir.into_iter().map(|x| r * x));
                }
            }
            ScenarioKind::TranslateOf { base, shift } => {
                let inner = base.draw(dim, n, rng);
                for row in inner.chunks_exact(dim) {
                    points.extend(row.iter().zip(shift).map(|(x, s)| x + s));
                }
            }
            ScenarioKind::RotateOf { base, angle } => {
                let (s, c) = angle.sin_cos();
                let inner = base.draw(dim, n, rng);
                for row in inner.chunks_exact(2) {
                    points.push(c * row[0] - s * row[1]);
                    points.push(s * row[0] + c * row[1]);
                }
            }
            ScenarioKind::Atoms { locations, weights } => {
                for (j, count) in atom_multiplicities(weights, n).into_iter().enumerate() {
                    for _ in 0..count {
                        points.extend_from_slice(&locations[j]);
                    }
                }
            }
        }
        points
    }

    /// `∫ ρ log ρ` of the law, when it has a density with a closed form.
    pub fn analytic_entropy(&self, dim: usize) -> Option<f64> {
        match self {
            ScenarioKind::Gaussian { scale, .. } => Some(
                (0..dim)
                    .map(|axis| {
                        let s = broadcast(scale, axis);
                        -0.5 * (2.0 * PI * std::f64::consts::E * s * s).ln()
                    })
                    .sum(),
            ),
            ScenarioKind::UniformBox { lo, hi } => Some(
                -(0..dim)
                    .map(|axis| (broadcast(hi, axis) - broadcast(lo, axis)).ln())
                    .sum::<f64>(),
            ),
            ScenarioKind::RadialAnnulus { r0, r1 } => {
                let d = dim as i32;
                Some(-(crate::sliced::unit_ball_volume(dim) * (r1.powi(d) - r0.powi(d))).ln())
            }
            ScenarioKind::TranslateOf { base, .. } | ScenarioKind::RotateOf { base, .. } => {
                base.analytic_entropy(dim)
            }
            ScenarioKind::Atoms { .. } | ScenarioKind::Segment { .. } => None,
        }
    }

    /// `∫ |x|^2` of the law, when it has a closed form.
    pub fn analytic_second_moment(&self, dim: usize) -> Option<f64> {
        match self {
            ScenarioKind::Gaussian { mean, scale } => Some(
                (0..dim)
                    .map(|a| broadcast(mean, a).powi(2) + broadcast(scale, a).powi(2))
                    .sum(),
            ),
            ScenarioKind::UniformBox { lo, hi } => Some(
                (0..dim)
                    .map(|a| {
                        let (l, h) = (broadcast(lo, a), broadcast(hi, a));
                        (h.powi(3) - l.powi(3)) / (3.0 * (h - l))
                    })
                    .sum(),
            ),
            ScenarioKind::Atoms { locations, weights } => Some(
                locations
                    .iter()
                    .zip(weights)
                    .map(|(x, w)| w * x.iter().map(|v| v * v).sum::<f64>())
                    .sum(),
            ),
            ScenarioKind::Segment { a, b } => Some((b.powi(3) - a.powi(3)) / (3.0 * (b - a))),
            ScenarioKind::RadialAnnulus { r0, r1 } => {
                let d = dim as i32;
                let num = d as f64 / (d + 2) as f64 * (r1.powi(d + 2) - r0.powi(d + 2));
                Some(num / (r1.powi(d) - r0.powi(d)))
            }
            ScenarioKind::RotateOf { base, .. } => base.analytic_second_moment(dim),
            ScenarioKind::TranslateOf { .. } => None,
        }
    }
}

fn broadcast(values: &[f64], axis: usize) -> f64 {
    if values.len() == 1 {
        values[0]
    } else {
        values[axis]
    }
}

fn check_axis_len(what: &str, len: usize, dim: usize) -> Result<()> {
    if len == 1 || len == dim {
        Ok(())
    } else {
        Err(Error::Validation(format!(
            "{what} has {len} entries, expected 1 or {dim}"
        )))
    }
}

/// Largest-remainder rounding of `n * weights`; ties go to the lower index.
fn atom_multiplicities(weights: &[f64], n: usize) -> Vec<usize> {
    let exact: Vec<f64> = weights.iter().map(|w| w * n as f64).collect();
    let mut counts: Vec<usize> = exact.iter().map(|x| x.floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = exact[a] - exact[a].floor();
        let rb = exact[b] - exact[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &j in order.iter().take(n.saturating_sub(assigned)) {
        counts[j] += 1;
    }
    counts
}

/// A named law together with the sample size and seed used to draw it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    #[serde(flatten)]
    pub kind: ScenarioKind,
    pub dim: usize,
    pub n_particles: usize,
    pub seed: u64,
    /// Draw half the sample and append its reflection across the first axis
    /// (last coordinate negated), giving an exactly mirror-symmetric cloud.
    #[serde(default)]
    pub mirror: bool,
}

impl ScenarioSpec {
    pub fn new(kind: ScenarioKind, dim: usize, n_particles: usize, seed: u64) -> Self {
        Self {
            kind,
            dim,
            n_particles,
            seed,
            mirror: false,
        }
    }

    pub fn mirrored(mut self) -> Self {
        self.mirror = true;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::Validation("scenario dimension must be at least 1".into()));
        }
        if self.n_particles == 0 {
            return Err(Error::Validation("scenario needs at least one particle".into()));
        }
        if self.mirror {
            if !self.n_particles.is_multiple_of(2) {
                return Err(Error::Validation(
                    "mirrored scenarios need an even particle count".into(),
                ));
            }
            if matches!(self.kind, ScenarioKind::Atoms { .. }) {
                return Err(Error::Validation("atom scenarios cannot be mirrored".into()));
            }
        }
        self.kind.validate(self.dim)
    }

    pub fn analytic_entropy(&self) -> Option<f64> {
        self.kind.analytic_entropy(self.dim)
    }
}

/// Draws the cloud described by `spec`; the result depends on nothing else.
pub fn sample_scenario(spec: &ScenarioSpec) -> Result<ParticleCloud> {
    spec.validate()?;
    let dim = spec.dim;
    let n = spec.n_particles;
    if let ScenarioKind::Atoms { locations, weights } = &spec.kind {
        if n == locations.len() {
            let points = locations.iter().flatten().copied().collect();
            return ParticleCloud::new(points, weights.clone(), dim);
        }
    }
    let mut rng = rng_from_seed(spec.seed);
    let points = if spec.mirror {
        let mut half = spec.kind.draw(dim, n / 2, &mut rng);
        let reflected: Vec<f64> = half
            .chunks_exact(dim)
            .flat_map(|row| {
                let mut r = row.to_vec();
                r[dim - 1] = -r[dim - 1];
                r
            })
            .collect();
        half.extend(reflected);
        half
    } else {
        spec.kind.draw(dim, n, &mut rng)
    };
    ParticleCloud::uniform(points, dim)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn atoms_spec(n: usize) -> ScenarioSpec {
        ScenarioSpec::new(
            ScenarioKind::Atoms {
                locations: vec![vec![-1.0, 0.0], vec![1.0, 0.0]],
                weights: vec![0.5, 0.5],
            },
            2,
            n,
            0,
        )
    }

    #[test]
    fn cloud_rejects_bad_weights() {
        assert!(ParticleCloud::new(vec![0.0, 1.0], vec![0.5, 0.4], 1).is_err());
        assert!(ParticleCloud::new(vec![0.0, 1.0], vec![1.5, -0.5], 1).is_err());
        assert!(ParticleCloud::new(vec![0.0, f64::NAN], vec![0.5, 0.5], 1).is_err());
        assert!(ParticleCloud::new(vec![], vec![], 2).is_err());
        assert!(ParticleCloud::new(vec![0.0, 1.0, 2.0], vec![1.0], 2).is_err());
    }

    #[test]
    fn atoms_are_reproduced_exactly() {
        let cloud = sample_scenario(&atoms_spec(2)).unwrap();
        assert_eq!(cloud.points(), &[-1.0, 0.0, 1.0, 0.0]);
        assert_eq!(cloud.weights(), &[0.5, 0.5]);
    }

    #[test]
    fn atoms_with_multiplicity_round_deterministically() {
        let spec = ScenarioSpec::new(
            ScenarioKind::Atoms {
                locations: vec![vec![0.0], vec![1.0], vec![2.0]],
                weights: vec![0.5, 0.3, 0.2],
            },
            1,
            7,
            0,
        );
        // 3.5, 2.1, 1.4 -> floors 3,2,1, remaining one goes to the largest remainder (atom 0).
        assert_eq!(atom_multiplicities(&[0.5, 0.3, 0.2], 7), vec![4, 2, 1]);
        let cloud = sample_scenario(&spec).unwrap();
        assert_eq!(cloud.points(), &[0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 2.0]);
        assert!(cloud.is_uniform());
    }

    #[test]
    fn atom_weights_must_sum_to_one() {
        let spec = ScenarioSpec::new(
            ScenarioKind::Atoms {
                locations: vec![vec![0.0], vec![1.0]],
                weights: vec![0.5, 0.6],
            },
            1,
            2,
            0,
        );
        assert!(matches!(sample_scenario(&spec), Err(Error::Validation(_))));
    }

    #[test]
    fn invalid_ranges_are_parameter_errors() {
        let annulus = ScenarioSpec::new(ScenarioKind::RadialAnnulus { r0: 2.0, r1: 1.0 }, 2, 4, 0);
        assert!(matches!(sample_scenario(&annulus), Err(Error::Parameter(_))));
        let boxed = ScenarioSpec::new(
            ScenarioKind::UniformBox {
                lo: vec![1.0],
                hi: vec![1.0],
            },
            2,
            4,
            0,
        );
        assert!(matches!(sample_scenario(&boxed), Err(Error::Parameter(_))));
    }

    #[test]
    fn segment_lies_on_first_axis() {
        let spec = ScenarioSpec::new(ScenarioKind::Segment { a: -1.0, b: 1.0 }, 2, 500, 3);
        let cloud = sample_scenario(&spec).unwrap();
        for row in cloud.rows() {
            assert_eq!(row[1], 0.0);
            assert!(row[0] > -1.0 && row[0] < 1.0);
        }
    }

    #[test]
    fn mirrored_sample_is_symmetric() {
        let spec = ScenarioSpec::new(ScenarioKind::RadialAnnulus { r0: 1.0, r1: 2.0 }, 2, 10, 9)
            .mirrored();
        let cloud = sample_scenario(&spec).unwrap();
        for i in 0..5 {
            let (a, b) = (cloud.point(i), cloud.point(i + 5));
            assert_eq!(a[0], b[0]);
            assert_eq!(a[1], -b[1]);
            let r = (a[0] * a[0] + a[1] * a[1]).sqrt();
            assert!((1.0..=2.0).contains(&r));
        }
        let odd = ScenarioSpec { n_particles: 9, ..spec };
        assert!(sample_scenario(&odd).is_err());
    }

    #[test]
    fn sampling_is_a_function_of_the_seed() {
        let spec = ScenarioSpec::new(
            ScenarioKind::Gaussian {
                mean: vec![0.0],
                scale: vec![1.0],
            },
            3,
            64,
            11,
        );
        assert_eq!(sample_scenario(&spec).unwrap(), sample_scenario(&spec).unwrap());
        let other = ScenarioSpec { seed: 12, ..spec.clone() };
        assert_ne!(sample_scenario(&spec).unwrap(), sample_scenario(&other).unwrap());
    }

    #[test]
    fn one_dimensional_sphere_has_two_points() {
        for m in [1, 5, 100] {
            let dirs = direction_set(1, m, DirectionMode::AntitheticMonteCarlo, 0).unwrap();
            assert_eq!(dirs.directions(), &[1.0, -1.0]);
            assert_eq!(dirs.weights(), &[0.5, 0.5]);
        }
    }

    #[test]
    fn grid_of_four_is_the_axes() {
        let dirs = direction_set(2, 4, DirectionMode::Grid2d, 0).unwrap();
        assert_eq!(dirs.directions(), &[1.0, 0.0, 0.0, 1.0, -1.0, 0.0, 0.0, -1.0]);
        assert_eq!(dirs.weights(), &[0.25; 4]);
    }

    #[test]
    fn grid_matches_trigonometry_and_is_mirror_exact() {
        for m in [3, 7, 64, 100, 4096] {
            let dirs = direction_set(2, m, DirectionMode::Grid2d, 0).unwrap();
            for k in 0..m {
                let t = 2.0 * PI * k as f64 / m as f64;
                let dir = dirs.direction(k);
                assert!((dir[0] - t.cos()).abs() < 1e-14, "m={m} k={k}");
                assert!((dir[1] - t.sin()).abs() < 1e-14, "m={m} k={k}");
            }
            for g in dirs.groups() {
                if let Some(p) = g.partner {
                    let (a, b) = (dirs.direction(g.first), dirs.direction(p));
                    assert_eq!(a[0], b[0]);
                    assert_eq!(a[1], -b[1]);
                } else {
                    assert_eq!(dirs.direction(g.first)[1], 0.0);
                }
            }
            let covered: usize = dirs.groups().iter().map(|g| g.indices().count()).sum();
            assert_eq!(covered, m);
        }
    }

    #[test]
    fn grid_second_moment_is_isotropic() {
        for m in [3, 5, 8, 64, 4096] {
            let dirs = direction_set(2, m, DirectionMode::Grid2d, 0).unwrap();
            let s = dirs.second_moment();
            assert!((s[0] - 0.5).abs() < 1e-12, "m={m}: {s:?}");
            assert!((s[3] - 0.5).abs() < 1e-12);
            assert!(s[1].abs() < 1e-12);
        }
    }

    #[test]
    fn grid_requires_the_plane() {
        assert!(matches!(
            direction_set(3, 8, DirectionMode::Grid2d, 0),
            Err(Error::Mode(_))
        ));
        assert!(matches!(
            direction_set(1, 8, DirectionMode::Grid2d, 0),
            Err(Error::Mode(_))
        ));
    }

    #[test]
    fn antithetic_pairs_cancel_exactly() {
        let dirs = direction_set(3, 101, DirectionMode::AntitheticMonteCarlo, 5).unwrap();
        assert_eq!(dirs.len(), 102);
        for k in (0..dirs.len()).step_by(2) {
            let (a, b) = (dirs.direction(k), dirs.direction(k + 1));
            assert!(a.iter().zip(b).all(|(x, y)| *x == -*y));
            assert_eq!(dirs.weights()[k], dirs.weights()[k + 1]);
        }
        assert!(dirs.first_moment().iter().all(|x| *x == 0.0));
    }

    #[test]
    fn antithetic_second_moment_is_close_to_isotropic() {
        let dirs = direction_set(3, 10_000, DirectionMode::AntitheticMonteCarlo, 1).unwrap();
        let s = dirs.second_moment();
        for r in 0..3 {
            for c in 0..3 {
                let expected = if r == c { 1.0 / 3.0 } else { 0.0 };
                assert!((s[r * 3 + c] - expected).abs() < 0.02);
            }
        }
    }

    #[test]
    fn analytic_entropy_values() {
        let unit_box = ScenarioKind::UniformBox {
            lo: vec![0.0],
            hi: vec![1.0],
        };
        assert_eq!(unit_box.analytic_entropy(2), Some(0.0));
        let gauss = ScenarioKind::Gaussian {
            mean: vec![0.0],
            scale: vec![1.0],
        };
        let expected = -0.5 * (2.0 * PI * std::f64::consts::E).ln();
        assert!((gauss.analytic_entropy(1).unwrap() - expected).abs() < 1e-15);
        assert!((expected + 1.4189385332).abs() < 1e-9);
        assert_eq!(ScenarioKind::Segment { a: 0.0, b: 1.0 }.analytic_entropy(2), None);
    }
}
