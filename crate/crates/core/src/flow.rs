//! Explicit Euler integration of the sliced-Wasserstein flow, the IDT
//! variant, and flow-map bookkeeping.
//!
//! Each particle keeps its identity for the whole run, so the state at time
//! `t` is at once the pushed-forward measure `ρ_t` and the Lagrangian map
//! `x ↦ Y_t(x)`.

use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::diagnostics::{self, Bandwidth, MetricsRecord};
use crate::error::{ensure_dim, Error, Result};
use crate::measures::{direction_set, rng_from_seed, DirectionMode, DirectionSet, ParticleCloud};
use crate::sliced::{SlicedEvaluator, TieRule, VelocityField};

/// Time integration scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum FlowMode {
    /// `x ← x + τ v(x)` with `v` the direction-averaged field.
    #[default]
    Swf,
    /// Full steps along a freshly rotated orthonormal basis.
    Idt,
}

impl FlowMode {
    pub fn name(self) -> &'static str {
        match self {
            FlowMode::Swf => "swf",
            FlowMode::Idt => "idt",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "swf" => Some(FlowMode::Swf),
            "idt" => Some(FlowMode::Idt),
            _ => None,
        }
    }
}

/// Parameters of a flow run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowConfig {
    /// Step size (ignored by IDT, which always takes unit steps).
    pub tau: f64,
    pub t_max: f64,
    /// Number of quadrature directions `M`.
    pub directions: usize,
    /// `None` picks grid2d in the plane and antithetic sampling otherwise.
    pub direction_mode: Option<DirectionMode>,
    pub mode: FlowMode,
    /// Stop once the largest particle speed drops below this value.
    pub stop_speed: f64,
    /// Record metrics every this many steps (the final state is always recorded).
    pub record_every: usize,
    /// Fixed-order reductions for bit-reproducible runs.
    pub deterministic: bool,
    pub seed: u64,
    /// Draw a fresh direction set at every step instead of freezing one.
    pub resample_directions: bool,
    /// Keep a snapshot at every recorded step.
    pub record_trajectory: bool,
    /// Order of the extra moment reported in the metrics.
    pub moment_p: f64,
    /// Include the (costly) kernel entropy estimate in the metrics.
    pub track_entropy: bool,
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self {
            tau: 0.05,
            t_max: 10.0,
            directions: 256,
            direction_mode: None,
            mode: FlowMode::Swf,
            stop_speed: 0.0,
            record_every: 10,
            deterministic: false,
            seed: 0,
            resample_directions: false,
            record_trajectory: false,
            moment_p: 4.0,
            track_entropy: false,
        }
    }
}

impl FlowConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0) || !self.tau.is_finite() {
            return Err(Error::Parameter(format!("tau must be positive, got {}", self.tau)));
        }
        if !(self.t_max >= 0.0) || !self.t_max.is_finite() {
            return Err(Error::Parameter(format!("t_max must be >= 0, got {}", self.t_max)));
        }
        if !(self.stop_speed >= 0.0) {
            return Err(Error::Parameter(format!(
                "stop_speed must be >= 0, got {}",
                self.stop_speed
            )));
        }
        if self.directions == 0 {
            return Err(Error::Parameter("direction count must be at least 1".into()));
        }
        if self.record_every == 0 {
            return Err(Error::Parameter("record_every must be at least 1".into()));
        }
        if !(self.moment_p >= 1.0) {
            return Err(Error::Parameter(format!(
                "moment order must be >= 1, got {}",
                self.moment_p
            )));
        }
        Ok(())
    }

    /// Step length actually used by the scheme.
    pub fn step_size(&self) -> f64 {
        match self.mode {
            FlowMode::Swf => self.tau,
            FlowMode::Idt => 1.0,
        }
    }

    /// Number of steps needed to reach `t_max`.
    pub fn step_count(&self) -> usize {
        let h = self.step_size();
        let raw = self.t_max / h;
        let rounded = raw.round();
        if (raw - rounded).abs() <= 1e-9 * raw.max(1.0) {
            rounded as usize
        } else {
            raw.ceil() as usize
        }
    }

    pub fn resolved_direction_mode(&self, dim: usize) -> DirectionMode {
        self.direction_mode.unwrap_or_else(|| DirectionMode::default_for(dim))
    }
}

/// Particles at one instant together with their starting positions.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowState {
    pub time: f64,
    pub cloud: ParticleCloud,
    pub initial_points: Arc<Vec<f64>>,
    pub step_index: usize,
}

impl FlowState {
    pub fn new(cloud: ParticleCloud) -> Self {
        Self {
            time: 0.0,
            initial_points: Arc::new(cloud.points().to_vec()),
            cloud,
            step_index: 0,
        }
    }

    /// `(1/N) Σ |Y_t(x_i) - x_i|^2` for uniform clouds, weighted otherwise.
    pub fn lagrangian_cost(&self) -> f64 {
        let d = self.cloud.dim();
        self.cloud
            .rows()
            .zip(self.initial_points.chunks_exact(d))
            .zip(self.cloud.weights())
            .map(|((y, x), w)| w * y.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum::<f64>())
            .sum()
    }

    fn advanced(&self, displacement: &[f64], scale: f64, dt: f64) -> Result<Self> {
        let mut cloud = self.cloud.clone();
        let d = cloud.dim();
        for (i, (x, v)) in cloud
            .points_mut()
            .chunks_exact_mut(d)
            .zip(displacement.chunks_exact(d))
            .enumerate()
        {
            for (xc, vc) in x.iter_mut().zip(v) {
                *xc += scale * vc;
            }
            if x.iter().any(|c| !c.is_finite()) {
                return Err(Error::Integration {
                    step: self.step_index,
                    message: format!(
                        "particle {i} left the finite range: position {:?}, displacement {:?}, \
                         starting point {:?}",
                        x,
                        v,
                        &self.initial_points[i * d..(i + 1) * d]
                    ),
                });
            }
        }
        Ok(Self {
            time: (self.step_index + 1) as f64 * dt,
            cloud,
            initial_points: Arc::clone(&self.initial_points),
            step_index: self.step_index + 1,
        })
    }
}

/// One explicit Euler step `x ← x + τ v(x)`.
pub fn euler_step(
    state: &FlowState,
    nu: &ParticleCloud,
    dirs: &DirectionSet,
    tau: f64,
) -> Result<FlowState> {
    if !(tau > 0.0) {
        return Err(Error::Parameter(format!("tau must be positive, got {tau}")));
    }
    ensure_dim(state.cloud.dim(), nu.dim())?;
    let v = crate::sliced::velocity_field(&state.cloud, nu, dirs)?;
    step_with(state, &v, tau, tau)
}

fn step_with(state: &FlowState, v: &VelocityField, tau: f64, dt: f64) -> Result<FlowState> {
    if let Some(i) = v.vectors().iter().position(|x| !x.is_finite()) {
        let d = v.dim();
        return Err(Error::Integration {
            step: state.step_index,
            message: format!(
                "non-finite velocity for particle {} at {:?}",
                i / d,
                state.cloud.point(i / d)
            ),
        });
    }
    state.advanced(v.vectors(), tau, dt)
}

/// One IDT step: `x ← x + Σ_j (T_j(x·e_j) - x·e_j) e_j` over the rows of the
/// orthonormal `basis` (`d x d`, row-major).
pub fn idt_step(state: &FlowState, nu: &ParticleCloud, basis: &[f64]) -> Result<FlowState> {
    let d = state.cloud.dim();
    ensure_dim(d, nu.dim())?;
    let dirs = basis_directions(basis, d)?;
    let mut eval = SlicedEvaluator::new(nu, &dirs)?
        .deterministic(true)
        .tie_rule(TieRule::Index);
    idt_apply(state, &mut eval, d)
}

fn idt_apply(state: &FlowState, eval: &mut SlicedEvaluator, d: usize) -> Result<FlowState> {
    let mut v = eval.evaluate(&state.cloud)?.velocity;
    // the evaluator averages over the basis; IDT sums
    v.scale(d as f64);
    step_with(state, &v, 1.0, 1.0)
}

fn basis_directions(basis: &[f64], d: usize) -> Result<DirectionSet> {
    if basis.len() != d * d {
        return Err(Error::Validation(format!(
            "basis needs {d} rows of length {d}, got {} numbers",
            basis.len()
        )));
    }
    for a in 0..d {
        for b in a..d {
            let dot: f64 = (0..d).map(|c| basis[a * d + c] * basis[b * d + c]).sum();
            let expected = if a == b { 1.0 } else { 0.0 };
            if (dot - expected).abs() > 1e-10 {
                return Err(Error::Validation(format!(
                    "basis is not orthonormal: <e{a}, e{b}> = {dot}"
                )));
            }
        }
    }
    // unit length to 1e-12 for the direction set
    let mut rows = basis.to_vec();
    for row in rows.chunks_exact_mut(d) {
        let n = row.iter().map(|x| x * x).sum::<f64>().sqrt();
        row.iter_mut().for_each(|x| *x /= n);
    }
    DirectionSet::from_parts(rows, vec![1.0 / d as f64; d], d, DirectionMode::MonteCarlo)
}

/// Uniformly random orthonormal basis (Gram-Schmidt on a Gaussian matrix),
/// rows in row-major order.
pub fn random_orthonormal_basis<R: Rng + ?Sized>(rng: &mut R, d: usize) -> Vec<f64> {
    loop {
        let mut m: Vec<f64> = (0..d * d).map(|_| rng.sample(StandardNormal)).collect();
        let mut ok = true;
        for a in 0..d {
            for b in 0..a {
                let dot: f64 = (0..d).map(|c| m[a * d + c] * m[b * d + c]).sum();
                for c in 0..d {
                    m[a * d + c] -= dot * m[b * d + c];
                }
            }
            let n = (0..d).map(|c| m[a * d + c].powi(2)).sum::<f64>().sqrt();
            if n < 1e-8 {
                ok = false;
                break;
            }
            for c in 0..d {
                m[a * d + c] /= n;
            }
        }
        if ok {
            return m;
        }
    }
}

/// How a run ended.
#[derive(Debug, Clone, PartialEq)]
pub enum RunOutcome {
    /// Reached `t_max`.
    Horizon,
    /// Largest speed fell below `stop_speed`.
    Converged,
    /// A step failed; snapshots and metrics hold everything up to the failure.
    Failed(Error),
}

impl RunOutcome {
    pub fn name(&self) -> &'static str {
        match self {
            RunOutcome::Horizon => "horizon",
            RunOutcome::Converged => "converged",
            RunOutcome::Failed(_) => "failed",
        }
    }
}

/// Result of [`run_flow`].
#[derive(Debug, Clone)]
pub struct FlowRun {
    /// Initial state, recorded states (when requested) and the final state.
    pub snapshots: Vec<FlowState>,
    pub metrics: Vec<MetricsRecord>,
    /// `(t, sw2_sq)` at every evaluated state: every step for SWF, recorded
    /// steps for IDT.
    pub energy: Vec<(f64, f64)>,
    pub outcome: RunOutcome,
    /// Directions used for the velocity (SWF) or for monitoring (IDT).
    pub directions: DirectionSet,
}

impl FlowRun {
    pub fn final_state(&self) -> &FlowState {
        self.snapshots.last().expect("a run always has an initial snapshot")
    }

    pub fn flow_map(&self) -> FlowMap {
        FlowMap::from_state(self.final_state())
    }
}

/// Integrates from `rho0` toward `nu` until `t_max` or until the largest
/// speed drops below `cfg.stop_speed`.
///
/// Invalid inputs are reported as errors; failures during stepping end the
/// run with [`RunOutcome::Failed`] and keep the partial results.
pub fn run_flow(rho0: &ParticleCloud, nu: &ParticleCloud, cfg: &FlowConfig) -> Result<FlowRun> {
    cfg.validate()?;
    let d = rho0.dim();
    ensure_dim(d, nu.dim())?;
    let mode = cfg.resolved_direction_mode(d);
    let mut rng = rng_from_seed(cfg.seed);
    let dirs = direction_set(d, cfg.directions, mode, rng.random())?;
    let mut eval = SlicedEvaluator::new(nu, &dirs)?.deterministic(cfg.deterministic);
    let steps = cfg.step_count();
    let dt = cfg.step_size();

    let mut state = FlowState::new(rho0.clone());
    let mut snapshots = vec![state.clone()];
    let mut metrics = Vec::new();
    let mut energy = Vec::new();
    let mut outcome = RunOutcome::Horizon;

    loop {
        let step = state.step_index;
        let is_last = step >= steps;
        let recording = is_last || step.is_multiple_of(cfg.record_every);
        // Velocity at the current state (also the SWF monitor for IDT).
        let evaluation = match cfg.mode {
            FlowMode::Swf => Some(eval.evaluate(&state.cloud)),
            FlowMode::Idt if recording => Some(eval.evaluate(&state.cloud)),
            FlowMode::Idt => None,
        };
        let evaluation = match evaluation.transpose() {
            Ok(e) => e,
            Err(e) => {
                outcome = RunOutcome::Failed(e);
                break;
            }
        };
        if let Some(e) = &evaluation {
            energy.push((state.time, e.sw2_sq));
        }
        let speed = evaluation.as_ref().map(|e| e.velocity.max_speed());
        let converged = speed.is_some_and(|s| s < cfg.stop_speed);
        let done = is_last || converged;
        if recording || done {
            let e = evaluation.as_ref().expect("recorded steps are evaluated");
            match record(&state, e.sw2_sq, e.velocity.max_speed(), cfg) {
                Ok(r) => metrics.push(r),
                Err(err) => {
                    outcome = RunOutcome::Failed(err);
                    break;
                }
            }
            if cfg.record_trajectory && step > 0 && !done {
                snapshots.push(state.clone());
            }
        }
        if done {
            if converged {
                outcome = RunOutcome::Converged;
            }
            break;
        }
        let next = match cfg.mode {
            FlowMode::Swf => {
                if cfg.resample_directions {
                    let fresh = direction_set(d, cfg.directions, mode, rng.random());
                    let e = fresh.and_then(|ds| {
                        SlicedEvaluator::new(nu, &ds)?
                            .deterministic(cfg.deterministic)
                            .evaluate(&state.cloud)
                    });
                    e.and_then(|e| step_with(&state, &e.velocity, cfg.tau, dt))
                } else {
                    let e = evaluation.expect("SWF steps are evaluated");
                    step_with(&state, &e.velocity, cfg.tau, dt)
                }
            }
            FlowMode::Idt => {
                let basis = random_orthonormal_basis(&mut rng, d);
                basis_directions(&basis, d).and_then(|ds| {
                    let mut e = SlicedEvaluator::new(nu, &ds)?
                        .deterministic(true)
                        .tie_rule(TieRule::Index);
                    idt_apply(&state, &mut e, d)
                })
            }
        };
        match next {
            Ok(s) => state = s,
            Err(e) => {
                outcome = RunOutcome::Failed(e);
                break;
            }
        }
    }
    if state.step_index > 0 || snapshots.len() > 1 {
        snapshots.push(state);
    }
    Ok(FlowRun {
        snapshots,
        metrics,
        energy,
        outcome,
        directions: dirs,
    })
}

fn record(state: &FlowState, sw2_sq: f64, max_speed: f64, cfg: &FlowConfig) -> Result<MetricsRecord> {
    let cloud = &state.cloud;
    let entropy = if cfg.track_entropy && cloud.dim() <= 3 && cloud.len() >= 2 {
        Some(diagnostics::entropy_estimate(cloud, Bandwidth::Auto)?)
    } else {
        None
    };
    Ok(MetricsRecord {
        t: state.time,
        sw2_sq,
        m2: diagnostics::moment_p(cloud, 2.0)?,
        m_p: Some(diagnostics::moment_p(cloud, cfg.moment_p)?),
        p: Some(cfg.moment_p),
        radius: diagnostics::support_radius(cloud),
        entropy,
        max_speed,
        lagrangian_cost: Some(state.lagrangian_cost()),
    })
}

/// Starting and current positions, particle by particle.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowMap {
    pub dim: usize,
    pub sources: Vec<f64>,
    pub images: Vec<f64>,
}

impl FlowMap {
    pub fn from_state(state: &FlowState) -> Self {
        Self {
            dim: state.cloud.dim(),
            sources: state.initial_points.to_vec(),
            images: state.cloud.points().to_vec(),
        }
    }

    pub fn len(&self) -> usize {
        self.sources.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.sources.is_empty()
    }

    pub fn source(&self, i: usize) -> &[f64] {
        &self.sources[i * self.dim..(i + 1) * self.dim]
    }

    pub fn image(&self, i: usize) -> &[f64] {
        &self.images[i * self.dim..(i + 1) * self.dim]
    }
}

/// Pairs the initial points of a trajectory with its last recorded positions.
pub fn flow_map(trajectory: &[FlowState]) -> Option<FlowMap> {
    trajectory.last().map(FlowMap::from_state)
}
