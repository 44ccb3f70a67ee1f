//! Sliced-Wasserstein distance, the SWF velocity field, the moment constants
//! `c_{p,d}` and the hyperplane-integration identity.
//!
//! The target cloud and the direction set stay fixed during a flow, so
//! [`SlicedEvaluator`] sorts the target projections once and then answers
//! repeated queries for moving source clouds. One projection sort per
//! direction serves both the distance and the velocity.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{ensure_dim, Error, Result};
use crate::measures::{DirectionGroup, DirectionSet, ParticleCloud};
use crate::ot1d;

/// Number of fixed reduction blocks used in deterministic mode.
const REDUCTION_BLOCKS: usize = 16;

/// How particles with equal projections share their images.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TieRule {
    /// Tied particles move toward the mean of their images (the barycentric
    /// projection of the 1D plan). Keeps the field symmetric at directions
    /// where a source atom projects to a single point.
    #[default]
    Average,
    /// Ties are broken by particle index, exactly as [`ot1d::monotone_map`].
    Index,
}

/// One velocity vector per source particle.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityField {
    vectors: Vec<f64>,
    dim: usize,
    max_speed: f64,
    direction_count: usize,
}

impl VelocityField {
    fn new(vectors: Vec<f64>, dim: usize, direction_count: usize) -> Self {
        let max_speed = vectors
            .chunks_exact(dim)
            .map(|v| v.iter().map(|x| x * x).sum::<f64>().sqrt())
            .fold(0.0, f64::max);
        Self {
            vectors,
            dim,
            max_speed,
            direction_count,
        }
    }

    pub fn len(&self) -> usize {
        self.vectors.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Row-major `N x d` velocities.
    pub fn vectors(&self) -> &[f64] {
        &self.vectors
    }

    pub fn vector(&self, i: usize) -> &[f64] {
        &self.vectors[i * self.dim..(i + 1) * self.dim]
    }

    /// Largest Euclidean norm over the rows.
    pub fn max_speed(&self) -> f64 {
        self.max_speed
    }

    pub fn direction_count(&self) -> usize {
        self.direction_count
    }

    pub(crate) fn scale(&mut self, factor: f64) {
        for v in &mut self.vectors {
            *v *= factor;
        }
        self.max_speed *= factor.abs();
    }
}

/// Distance and velocity from a single pass over the directions.
#[derive(Debug, Clone, PartialEq)]
pub struct SlicedEvaluation {
    pub sw2_sq: f64,
    pub velocity: VelocityField,
}

/// Target projections sorted once per direction, plus per-direction sort
/// orders of the last source seen (used only to speed up the next sort).
#[derive(Debug, Clone)]
pub struct SlicedEvaluator {
    dirs: DirectionSet,
    target_values: Vec<Vec<f64>>,
    target_weights: Option<Vec<Vec<f64>>>,
    uniform_target_weights: Vec<f64>,
    hints: Vec<Vec<Vec<u32>>>,
    deterministic: bool,
    tie_rule: TieRule,
}

impl SlicedEvaluator {
    pub fn new(target: &ParticleCloud, dirs: &DirectionSet) -> Result<Self> {
        ensure_dim(target.dim(), dirs.dim())?;
        let n = target.len();
        let uniform = target.is_uniform();
        let mut target_values = Vec::with_capacity(dirs.len());
        let mut target_weights = Vec::new();
        let mut buf = Vec::with_capacity(n);
        let mut pairs = Vec::with_capacity(n);
        for k in 0..dirs.len() {
            ot1d::project_into(target.points(), target.dim(), dirs.direction(k), &mut buf);
            ot1d::sort_pairs_into(&buf, None, &mut pairs);
            target_values.push(pairs.iter().map(|p| p.0).collect());
            if !uniform {
                target_weights.push(pairs.iter().map(|p| target.weights()[p.1 as usize]).collect());
            }
        }
        let hints = dirs
            .groups()
            .iter()
            .map(|g| g.indices().map(|_| Vec::new()).collect())
            .collect();
        Ok(Self {
            dirs: dirs.clone(),
            target_values,
            target_weights: (!uniform).then_some(target_weights),
            uniform_target_weights: vec![1.0 / n as f64; n],
            hints,
            deterministic: false,
            tie_rule: TieRule::default(),
        })
    }

    /// Fixed-order reduction over directions, independent of the thread count.
    pub fn deterministic(mut self, on: bool) -> Self {
        self.deterministic = on;
        self
    }

    pub fn tie_rule(mut self, rule: TieRule) -> Self {
        self.tie_rule = rule;
        self
    }

    pub fn directions(&self) -> &DirectionSet {
        &self.dirs
    }

    /// Sliced distance and velocity of `source` against the stored target.
    pub fn evaluate(&mut self, source: &ParticleCloud) -> Result<SlicedEvaluation> {
        let (sw2_sq, vectors) = self.pass(source, true)?;
        Ok(SlicedEvaluation {
            sw2_sq,
            velocity: VelocityField::new(vectors, source.dim(), self.dirs.len()),
        })
    }

    pub fn sw2_sq(&mut self, source: &ParticleCloud) -> Result<f64> {
        Ok(self.pass(source, false)?.0)
    }

    fn pass(&mut self, source: &ParticleCloud, velocity: bool) -> Result<(f64, Vec<f64>)> {
        ensure_dim(self.dirs.dim(), source.dim())?;
        let width = if velocity { source.points().len() } else { 0 };
        let mut hints = std::mem::take(&mut self.hints);
        let this = &*self;
        let groups = this.dirs.groups();
        let ctx = PassContext {
            eval: this,
            source,
            source_weights: source.weights(),
            uniform_source_weights: vec![1.0 / source.len() as f64; source.len()],
        };
        let (cost, acc) = if this.deterministic {
            let block = groups.len().div_ceil(REDUCTION_BLOCKS).max(1);
            let partials: Vec<(f64, Vec<f64>)> = groups
                .par_chunks(block)
                .zip(hints.par_chunks_mut(block))
                .map(|(gs, hs)| {
                    let mut scratch = Scratch::new(source.len());
                    let mut acc = vec![0.0; width];
                    let mut cost = 0.0;
                    for (g, h) in gs.iter().zip(hs) {
                        cost += ctx.group(*g, h, &mut scratch, velocity.then_some(&mut acc[..]));
                    }
                    (cost, acc)
                })
                .collect();
            let mut acc = vec![0.0; width];
            let mut cost = 0.0;
            for (c, a) in partials {
                cost += c;
                for (x, y) in acc.iter_mut().zip(a) {
                    *x += y;
                }
            }
            (cost, acc)
        } else {
            groups
                .par_iter()
                .zip(hints.par_iter_mut())
                .fold(
                    || (0.0, vec![0.0; width], Scratch::new(source.len())),
                    |(mut cost, mut acc, mut scratch), (g, h)| {
                        cost += ctx.group(*g, h, &mut scratch, velocity.then_some(&mut acc[..]));
                        (cost, acc, scratch)
                    },
                )
                .map(|(c, a, _)| (c, a))
                .reduce(
                    || (0.0, vec![0.0; width]),
                    |(c1, mut a1), (c2, a2)| {
                        for (x, y) in a1.iter_mut().zip(a2) {
                            *x += y;
                        }
                        (c1 + c2, a1)
                    },
                )
        };
        self.hints = hints;
        Ok((cost.max(0.0), acc))
    }
}

struct PassContext<'a> {
    eval: &'a SlicedEvaluator,
    source: &'a ParticleCloud,
    source_weights: &'a [f64],
    uniform_source_weights: Vec<f64>,
}

struct Scratch {
    values: Vec<f64>,
    pairs: Vec<(f64, u32)>,
    sorted: Vec<f64>,
    sorted_weights: Vec<f64>,
    images: Vec<f64>,
    displacement: [Vec<f64>; 2],
}

impl Scratch {
    fn new(n: usize) -> Self {
        Self {
            values: Vec::with_capacity(n),
            pairs: Vec::with_capacity(n),
            sorted: vec![0.0; n],
            sorted_weights: vec![0.0; n],
            images: vec![0.0; n],
            displacement: [vec![0.0; n], vec![0.0; n]],
        }
    }
}

impl PassContext<'_> {
    /// Adds the group's velocity contribution to `acc` and returns its
    /// weighted transport cost.
    fn group(
        &self,
        group: DirectionGroup,
        hints: &mut [Vec<u32>],
        scratch: &mut Scratch,
        acc: Option<&mut [f64]>,
    ) -> f64 {
        let dirs = &self.eval.dirs;
        let mut cost = 0.0;
        let members: Vec<usize> = group.indices().collect();
        for (slot, &k) in members.iter().enumerate() {
            cost += dirs.weights()[k] * self.direction(k, &mut hints[slot], scratch, slot);
        }
        if let Some(acc) = acc {
            let d = self.source.dim();
            let [d0, d1] = &scratch.displacement;
            let w0 = dirs.weights()[members[0]];
            let t0 = dirs.direction(members[0]);
            if let Some(&k1) = members.get(1) {
                let w1 = dirs.weights()[k1];
                let t1 = dirs.direction(k1);
                for i in 0..self.source.len() {
                    let (a, b) = (w0 * d0[i], w1 * d1[i]);
                    for c in 0..d {
                        acc[i * d + c] += a * t0[c] + b * t1[c];
                    }
                }
            } else {
                for i in 0..self.source.len() {
                    let a = w0 * d0[i];
                    for c in 0..d {
                        acc[i * d + c] += a * t0[c];
                    }
                }
            }
        }
        cost
    }

    /// Fills `displacement[slot]` with `T(x_i·θ) - x_i·θ` in particle order and
    /// returns the 1D squared distance along direction `k`.
    fn direction(&self, k: usize, hint: &mut Vec<u32>, s: &mut Scratch, slot: usize) -> f64 {
        let eval = self.eval;
        let src = self.source;
        let n = src.len();
        ot1d::project_into(src.points(), src.dim(), eval.dirs.direction(k), &mut s.values);
        ot1d::sort_pairs_into(&s.values, Some(hint), &mut s.pairs);
        hint.clear();
        hint.extend(s.pairs.iter().map(|p| p.1));
        for (j, p) in s.pairs.iter().enumerate() {
            s.sorted[j] = p.0;
        }
        let src_uniform = src.is_uniform();
        let weights: &[f64] = if src_uniform {
            &self.uniform_source_weights
        } else {
            for (j, p) in s.pairs.iter().enumerate() {
                s.sorted_weights[j] = self.source_weights[p.1 as usize];
            }
            &s.sorted_weights
        };
        let (tgt_weights, tgt_uniform) = match &eval.target_weights {
            Some(w) => (&w[k][..], false),
            None => (&eval.uniform_target_weights[..], true),
        };
        ot1d::sorted_images(
            weights,
            src_uniform,
            &eval.target_values[k],
            tgt_weights,
            tgt_uniform,
            &mut s.images,
        );
        let cost = if src_uniform && tgt_uniform && n == tgt_weights.len() {
            ot1d::matched_cost(&s.sorted, &s.images)
        } else {
            ot1d::coupling_cost(&s.sorted, weights, &eval.target_values[k], tgt_weights)
        };
        if eval.tie_rule == TieRule::Average {
            ot1d::average_ties(&s.sorted, weights, &mut s.images);
        }
        let disp = &mut s.displacement[slot];
        for (j, p) in s.pairs.iter().enumerate().take(n) {
            disp[p.1 as usize] = s.images[j] - s.sorted[j];
        }
        cost
    }
}

/// `Σ_k w_k W_2^2` of the projections of `rho` and `nu` along each direction.
pub fn sw2_sq(rho: &ParticleCloud, nu: &ParticleCloud, dirs: &DirectionSet) -> Result<f64> {
    ensure_dim(rho.dim(), nu.dim())?;
    SlicedEvaluator::new(nu, dirs)?.deterministic(true).sw2_sq(rho)
}

/// The direction-averaged displacement field `Σ_k w_k (T_k(x·θ_k) - x·θ_k) θ_k`.
pub fn velocity_field(
    rho: &ParticleCloud,
    nu: &ParticleCloud,
    dirs: &DirectionSet,
) -> Result<VelocityField> {
    Ok(evaluate(rho, nu, dirs)?.velocity)
}

/// Distance and velocity together.
pub fn evaluate(
    rho: &ParticleCloud,
    nu: &ParticleCloud,
    dirs: &DirectionSet,
) -> Result<SlicedEvaluation> {
    ensure_dim(rho.dim(), nu.dim())?;
    SlicedEvaluator::new(nu, dirs)?.deterministic(true).evaluate(rho)
}

/// Volume of the unit ball in `R^k` (`ω_0 = 1`, `ω_1 = 2`, `ω_2 = π`, ...).
pub fn unit_ball_volume(k: usize) -> f64 {
    let (mut even, mut odd) = (1.0, 2.0);
    for j in 2..=k {
        if j % 2 == 0 {
            even *= 2.0 * PI / j as f64;
        } else {
            odd *= 2.0 * PI / j as f64;
        }
    }
    if k.is_multiple_of(2) {
        even
    } else {
        odd
    }
}

/// `c_{p,d} = avg over the sphere of |e·θ|^p` for a unit vector `e`.
///
/// Computed as `∫ cos^p φ sin^{d-2} φ / ∫ sin^{d-2} φ` over `[0, π/2]` with a
/// composite Simpson rule of `m` intervals (rounded up to even). Relative
/// accuracy is about `1e-12` already for `m = 2000` and smooth integrands.
pub fn c_pd(p: f64, d: usize, m: usize) -> Result<f64> {
    if !(p >= 1.0) || !p.is_finite() {
        return Err(Error::Parameter(format!("c_pd needs finite p >= 1, got {p}")));
    }
    if d == 0 {
        return Err(Error::Parameter("c_pd needs d >= 1".into()));
    }
    if d == 1 {
        return Ok(1.0);
    }
    let m = m.max(2).next_multiple_of(2);
    let k = (d - 2) as i32;
    let num = simpson(|phi| phi.cos().abs().powf(p) * phi.sin().powi(k), 0.0, PI / 2.0, m);
    let den = simpson(|phi| phi.sin().powi(k), 0.0, PI / 2.0, m);
    Ok(num / den)
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, m: usize) -> f64 {
    let h = (b - a) / m as f64;
    let mut s = f(a) + f(b);
    for j in 1..m {
        let w = if j % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + j as f64 * h);
    }
    s * h / 3.0
}

/// The constant `(d-1) ω_{d-1} / (d ω_d)` relating direction-averaged
/// hyperplane integrals to `∫ f(x)/|x| dx`.
pub fn slice_prefactor(d: usize) -> f64 {
    let d_f = d as f64;
    (d_f - 1.0) * unit_ball_volume(d - 1) / (d_f * unit_ball_volume(d))
}

/// Resolution of the polar quadratures used by [`slice_integral_check`].
///
/// Integrals are truncated to `|x| <= half_width`. Radial and angular
/// integrals use midpoint rules with the given numbers of cells; indicator
/// functions of balls are integrated exactly when their radius is a multiple
/// of `half_width / radial_cells`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegrationGrid {
    pub half_width: f64,
    pub radial_cells: usize,
    pub angular_cells: usize,
}

impl Default for IntegrationGrid {
    fn default() -> Self {
        Self {
            half_width: 6.0,
            radial_cells: 1200,
            angular_cells: 256,
        }
    }
}

/// Both sides of `avg_k ∫_{θ_k^⊥} f = c_d ∫ f(x)/|x| dx`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SliceIntegral {
    pub lhs: f64,
    pub rhs: f64,
    pub prefactor: f64,
}

impl SliceIntegral {
    pub fn relative_error(&self) -> f64 {
        (self.lhs - self.rhs).abs() / self.rhs.abs().max(f64::MIN_POSITIVE)
    }
}

/// Evaluates the hyperplane-integration identity for `f` in `d ∈ {2, 3}`.
///
/// The left side averages hyperplane integrals over `dirs`; the right side is
/// the prefactor times a polar quadrature of `f/|x|`. If the radial integral
/// of the right side keeps growing under refinement (a non-integrable
/// singularity at the origin) a numerical error is returned.
pub fn slice_integral_check<F>(
    f: F,
    d: usize,
    dirs: &DirectionSet,
    grid: IntegrationGrid,
) -> Result<SliceIntegral>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    if !(2..=3).contains(&d) {
        return Err(Error::Parameter(format!(
            "the integration harness supports d = 2 or 3, got {d}"
        )));
    }
    ensure_dim(d, dirs.dim())?;
    if !(grid.half_width > 0.0) || grid.radial_cells < 4 || grid.angular_cells < 4 {
        return Err(Error::Parameter(format!("integration grid too coarse: {grid:?}")));
    }
    let n = grid.radial_cells;
    let coarse = [n / 4, n / 2, n].map(|cells| radial_volume_integral(&f, d, grid, cells));
    let (d1, d2) = (coarse[1] - coarse[0], coarse[2] - coarse[1]);
    if d2.abs() > 1e-6 * (coarse[2].abs() + 1.0) && d2.abs() >= 0.75 * d1.abs() {
        return Err(Error::Numerical(format!(
            "∫ f(x)/|x| dx does not settle under radial refinement ({} -> {} -> {}); \
             f is likely not integrable against 1/|x| at the origin",
            coarse[0], coarse[1], coarse[2]
        )));
    }
    let prefactor = slice_prefactor(d);
    let rhs = prefactor * coarse[2];
    let lhs: f64 = (0..dirs.len())
        .into_par_iter()
        .map(|k| dirs.weights()[k] * hyperplane_integral(&f, dirs.direction(k), grid))
        .collect::<Vec<_>>()
        .into_iter()
        .sum();
    if !lhs.is_finite() || !rhs.is_finite() {
        return Err(Error::Numerical("non-finite slice integral".into()));
    }
    Ok(SliceIntegral {
        lhs,
        rhs,
        prefactor,
    })
}

/// `∫_{S^{d-1}} ∫_0^L f(rω) r^{d-2} dr dω = ∫_{|x|<=L} f(x)/|x| dx`.
fn radial_volume_integral<F>(f: &F, d: usize, grid: IntegrationGrid, radial: usize) -> f64
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let h = grid.half_width / radial as f64;
    let na = grid.angular_cells;
    let ray = |omega: &[f64]| -> f64 {
        let mut x = vec![0.0; d];
        let mut s = 0.0;
        for j in 0..radial {
            let r = (j as f64 + 0.5) * h;
            for (xc, oc) in x.iter_mut().zip(omega) {
                *xc = r * oc;
            }
            s += f(&x) * r.powi(d as i32 - 2);
        }
        s * h
    };
    let parts: Vec<f64> = if d == 2 {
        let da = 2.0 * PI / na as f64;
        (0..na)
            .into_par_iter()
            .map(|a| {
                let (s, c) = ((a as f64 + 0.5) * da).sin_cos();
                ray(&[c, s]) * da
            })
            .collect()
    } else {
        let dt = PI / na as f64;
        let nphi = 2 * na;
        let dp = 2.0 * PI / nphi as f64;
        (0..na)
            .into_par_iter()
            .map(|a| {
                let (st, ct) = ((a as f64 + 0.5) * dt).sin_cos();
                (0..nphi)
                    .map(|b| {
                        let (sp, cp) = ((b as f64 + 0.5) * dp).sin_cos();
                        ray(&[st * cp, st * sp, ct])
                    })
                    .sum::<f64>()
                    * st
                    * dt
                    * dp
            })
            .collect()
    };
    parts.into_iter().sum()
}

/// `∫_{θ^⊥} f` restricted to the disc of radius `half_width`.
fn hyperplane_integral<F>(f: &F, theta: &[f64], grid: IntegrationGrid) -> f64
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let n = grid.radial_cells;
    let h = grid.half_width / n as f64;
    if theta.len() == 2 {
        let u = [-theta[1], theta[0]];
        let mut s = 0.0;
        for j in 0..n {
            let r = (j as f64 + 0.5) * h;
            s += f(&[r * u[0], r * u[1]]) + f(&[-r * u[0], -r * u[1]]);
        }
        return s * h;
    }
    let (e1, e2) = plane_basis(theta);
    let na = grid.angular_cells;
    let da = 2.0 * PI / na as f64;
    let mut total = 0.0;
    let mut x = [0.0; 3];
    for a in 0..na {
        let (sa, ca) = ((a as f64 + 0.5) * da).sin_cos();
        let mut s = 0.0;
        for j in 0..n {
            let r = (j as f64 + 0.5) * h;
            for c in 0..3 {
                x[c] = r * (ca * e1[c] + sa * e2[c]);
            }
            s += f(&x) * r;
        }
        total += s * h * da;
    }
    total
}

/// Orthonormal basis of the plane orthogonal to the unit vector `theta`.
fn plane_basis(theta: &[f64]) -> ([f64; 3], [f64; 3]) {
    let axis = (0..3)
        .min_by(|&a, &b| theta[a].abs().total_cmp(&theta[b].abs()))
        .unwrap_or(0);
    let mut e = [0.0; 3];
    e[axis] = 1.0;
    let dot: f64 = (0..3).map(|c| e[c] * theta[c]).sum();
    let mut e1 = [0.0; 3];
    for c in 0..3 {
        e1[c] = e[c] - dot * theta[c];
    }
    let n1 = e1.iter().map(|x| x * x).sum::<f64>().sqrt();
    e1.iter_mut().for_each(|x| *x /= n1);
    let e2 = [
        theta[1] * e1[2] - theta[2] * e1[1],
        theta[2] * e1[0] - theta[0] * e1[2],
        theta[0] * e1[1] - theta[1] * e1[0],
    ];
    (e1, e2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::{direction_set, DirectionMode};

    fn grid(m: usize) -> DirectionSet {
        direction_set(2, m, DirectionMode::Grid2d, 0).unwrap()
    }

    fn two_atoms(a: f64) -> (ParticleCloud, ParticleCloud) {
        (
            ParticleCloud::from_rows(&[[-1.0, 0.0], [1.0, 0.0]]).unwrap(),
            ParticleCloud::from_rows(&[[0.0, -a], [0.0, a]]).unwrap(),
        )
    }

    #[test]
    fn zero_field_on_identical_clouds() {
        let rho = ParticleCloud::from_rows(&[[0.1, 0.2], [-0.5, 1.0], [2.0, -1.0]]).unwrap();
        let e = evaluate(&rho, &rho, &grid(64)).unwrap();
        assert_eq!(e.sw2_sq, 0.0);
        assert_eq!(e.velocity.max_speed(), 0.0);
    }

    #[test]
    fn translation_field_is_half_the_shift() {
        let rho = ParticleCloud::from_rows(&[[0.1, 0.2], [-0.5, 1.0], [2.0, -1.0], [0.0, 0.0]]).unwrap();
        let nu = rho.translated(&[1.0, 0.0]).unwrap();
        let e = evaluate(&rho, &nu, &grid(64)).unwrap();
        for i in 0..rho.len() {
            let v = e.velocity.vector(i);
            assert!((v[0] - 0.5).abs() < 1e-12 && v[1].abs() < 1e-12, "{v:?}");
        }
        assert!((e.sw2_sq - 0.5).abs() < 1e-12);
    }

    #[test]
    fn two_atoms_stationary_at_half_pi() {
        let (rho, nu) = two_atoms(PI / 2.0);
        let v = velocity_field(&rho, &nu, &grid(4096)).unwrap();
        assert!(v.max_speed() < 1e-4, "{}", v.max_speed());
        let (rho, nu) = two_atoms(1.0);
        let v = velocity_field(&rho, &nu, &grid(4096)).unwrap();
        assert!(v.max_speed() > 0.05, "{}", v.max_speed());
    }

    #[test]
    fn deterministic_and_parallel_agree_closely() {
        let rho = ParticleCloud::from_rows(&[[0.3, 0.2], [-0.5, 1.0], [2.0, -1.0]]).unwrap();
        let nu = ParticleCloud::from_rows(&[[1.0, 0.0], [0.0, 1.0], [-1.0, -1.0]]).unwrap();
        let dirs = grid(100);
        let a = SlicedEvaluator::new(&nu, &dirs).unwrap().deterministic(true).evaluate(&rho).unwrap();
        let b = SlicedEvaluator::new(&nu, &dirs).unwrap().evaluate(&rho).unwrap();
        assert!((a.sw2_sq - b.sw2_sq).abs() < 1e-12);
        for (x, y) in a.velocity.vectors().iter().zip(b.velocity.vectors()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn unequal_sizes_use_quantiles() {
        let rho = ParticleCloud::from_rows(&[[0.0], [1.0], [2.0]]).unwrap();
        let nu = ParticleCloud::from_rows(&[[5.0], [7.0]]).unwrap();
        let dirs = direction_set(1, 1, DirectionMode::MonteCarlo, 0).unwrap();
        let v = velocity_field(&rho, &nu, &dirs).unwrap();
        // +1 gives images (5, 7, 7); -1 gives (5, 5, 7): averaged, every
        // particle moves by 5.
        assert_eq!(v.vectors(), &[5.0, 5.0, 5.0]);
    }

    #[test]
    fn ball_volumes() {
        assert_eq!(unit_ball_volume(0), 1.0);
        assert_eq!(unit_ball_volume(1), 2.0);
        assert!((unit_ball_volume(2) - PI).abs() < 1e-15);
        assert!((unit_ball_volume(3) - 4.0 * PI / 3.0).abs() < 1e-14);
        assert!((unit_ball_volume(4) - PI * PI / 2.0).abs() < 1e-14);
    }

    #[test]
    fn planar_prefactor() {
        assert!((slice_prefactor(2) - 1.0 / PI).abs() < 1e-15);
        assert!((slice_prefactor(3) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn c_pd_values() {
        for d in 1..=5 {
            assert!((c_pd(2.0, d, 2000).unwrap() - 1.0 / d as f64).abs() < 1e-12);
        }
        assert!(matches!(c_pd(0.5, 2, 100), Err(Error::Parameter(_))));
        let c8 = c_pd(8.0, 3, 2000).unwrap();
        let c64 = c_pd(64.0, 3, 2000).unwrap();
        assert!(c64 < c8 && c64 > 0.0);
        // c_{p,3} = 1/(p+1)
        assert!((c8 - 1.0 / 9.0).abs() < 1e-12);
    }

    #[test]
    fn ball_slices_in_the_plane() {
        let dirs = grid(8);
        let g = IntegrationGrid {
            half_width: 3.0,
            radial_cells: 600,
            angular_cells: 64,
        };
        let s = slice_integral_check(|x| if x[0] * x[0] + x[1] * x[1] < 1.0 { 1.0 } else { 0.0 }, 2, &dirs, g)
            .unwrap();
        assert!((s.lhs - 2.0).abs() < 1e-12, "{s:?}");
        assert!((s.rhs - 2.0).abs() < 1e-12, "{s:?}");
    }

    #[test]
    fn divergent_integrand_is_flagged() {
        let dirs = grid(8);
        let r = slice_integral_check(
            |x| 1.0 / (x[0] * x[0] + x[1] * x[1]).sqrt(),
            2,
            &dirs,
            IntegrationGrid::default(),
        );
        assert!(matches!(r, Err(Error::Numerical(_))), "{r:?}");
    }
}
