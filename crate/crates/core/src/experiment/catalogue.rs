//! Built-in experiments and the checks `verify` applies to their outputs.

/// A check on the files written by a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Criterion {
    /// Every recorded `max_speed` is at most the bound.
    MaxSpeedBelow(f64),
    /// The first recorded `max_speed` is at least the bound.
    InitialSpeedAbove(f64),
    /// `|x_axis| <= bound` for every position in `trajectory.csv` and every
    /// image in `flowmap.csv`.
    CoordinateBelow { axis: usize, bound: f64 },
    /// Every recorded `sw2_sq` is at least the bound.
    Sw2Above(f64),
    /// Consecutive `sw2_sq` values never increase by more than the slack.
    EnergyNonincreasing(f64),
    /// Log-log slope of `sw2_sq` over `t >= t_min` is at most `bound`.
    DecaySlope { t_min: f64, bound: f64 },
    /// `max t·sw2_sq <= 2(E(ρ0) + M2(ρ0)/2 + (d/2) log 2π) + slack`, with the
    /// analytic entropy and second moment of the source law.
    DecayConstant { t_min: f64, slack: f64 },
    /// `M_2`, `M_p` and the support radius stay below their a priori bounds
    /// times `1 + slack`.
    MomentBounds { slack: f64 },
    /// The last recorded `sw2_sq` is at most the bound.
    FinalSw2Below(f64),
    /// The last `sw2_sq` is smaller than the first.
    Sw2Decreased,
    /// The run stopped on the speed criterion below the given value.
    Converged(f64),
    /// Flow-map cost exceeds the optimal assignment cost of the same endpoints.
    FlowMapGapPositive,
    /// The flow map has at least one pair breaking monotonicity.
    MonotonicityViolated,
    /// Every hyperplane-integration case agrees to this relative error.
    LemmaRelativeError(f64),
    /// The planar prefactor equals `1/π` to this tolerance.
    LemmaPlanarPrefactor(f64),
}

impl Criterion {
    pub fn name(&self) -> &'static str {
        match self {
            Criterion::MaxSpeedBelow(_) => "max-speed",
            Criterion::InitialSpeedAbove(_) => "initial-speed",
            Criterion::CoordinateBelow { .. } => "support-on-axis",
            Criterion::Sw2Above(_) => "no-convergence",
            Criterion::EnergyNonincreasing(_) => "energy-nonincreasing",
            Criterion::DecaySlope { .. } => "decay-slope",
            Criterion::DecayConstant { .. } => "decay-constant",
            Criterion::MomentBounds { .. } => "moment-bounds",
            Criterion::FinalSw2Below(_) => "final-sw2",
            Criterion::Sw2Decreased => "sw2-decreased",
            Criterion::Converged(_) => "converged",
            Criterion::FlowMapGapPositive => "flowmap-gap",
            Criterion::MonotonicityViolated => "monotonicity-violations",
            Criterion::LemmaRelativeError(_) => "lemma-relative-error",
            Criterion::LemmaPlanarPrefactor(_) => "lemma-prefactor",
        }
    }
}

/// A named experiment shipped with the tool.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CatalogueEntry {
    pub name: &'static str,
    pub description: &'static str,
    /// Experiment file contents.
    pub config: &'static str,
    pub criteria: &'static [Criterion],
}

const TWO_ATOMS_STATIONARY: &str = "\
scenario = two-atoms-stationary
dim = 2
seed = 1
source.kind = atoms
source.locations = -1,0; 1,0
source.n = 2
target.kind = atoms
target.locations = 0,-1.5707963267948966; 0,1.5707963267948966
target.n = 2
directions = 4096
direction_mode = grid2d
tau = 0.05
t_max = 1
record_every = 1
record_trajectory = true
";

const TWO_ATOMS_OFFBALANCE: &str = "\
scenario = two-atoms-offbalance
dim = 2
seed = 1
source.kind = atoms
source.locations = -1,0; 1,0
source.n = 2
target.kind = atoms
target.locations = 0,-1; 0,1
target.n = 2
directions = 4096
direction_mode = grid2d
tau = 0.05
t_max = 1
record_every = 1
record_trajectory = true
";

const SEGMENT_RADIAL: &str = "\
scenario = segment-radial
dim = 2
seed = 1
n = 512
source.kind = segment
source.a = -1
source.b = 1
target.kind = radial-annulus
target.r0 = 1
target.r1 = 2
target.mirror = true
directions = 256
direction_mode = grid2d
tau = 0.05
t_max = 25
record_every = 5
record_trajectory = true
";

const GAUSS_DECAY: &str = "\
scenario = gauss-decay
dim = 2
seed = 1
n = 4096
source.kind = uniform-box
source.lo = -1
source.hi = 1
target.kind = gaussian
target.mean = 0
target.scale = 1
directions = 256
direction_mode = grid2d
tau = 0.02
t_max = 50
record_every = 1
moment_p = 4
";

const IDT_COMPARE: &str = "\
scenario = idt-compare
dim = 2
seed = 1
n = 4096
source.kind = uniform-box
source.lo = -1
source.hi = 1
target.kind = gaussian
target.mean = 0
target.scale = 1
mode = idt
directions = 256
direction_mode = grid2d
t_max = 200
record_every = 10
";

const FLOWMAP_OPTIMALITY: &str = "\
scenario = flowmap-optimality
dim = 2
seed = 1
n = 512
source.kind = rotate-of
source.angle = 0.5
source.base.kind = uniform-box
source.base.lo = -2,-0.25
source.base.hi = 2,0.25
target.kind = uniform-box
target.lo = -0.5,-1.5
target.hi = 0.5,1.5
directions = 64
direction_mode = grid2d
tau = 0.1
t_max = 2000
stop_speed = 1e-4
record_every = 100
";

const LEMMA_SLICE_INTEGRAL: &str = "\
scenario = lemma-slice-integral
experiment = slice-lemma
seed = 1
lemma.dims = 2,3
lemma.radii = 0.5,1,2
lemma.gaussian = true
lemma.half_width = 6
lemma.radial_cells = 1200
lemma.angular_cells = 128
lemma.directions = 64
";

const MOMENT_BOUNDS: &str = "\
scenario = moment-bounds
dim = 2
seed = 1
n = 2048
source.kind = uniform-box
source.lo = -0.5
source.hi = 0.5
target.kind = radial-annulus
target.r0 = 0.5
target.r1 = 1.5
directions = 128
direction_mode = grid2d
tau = 0.05
t_max = 20
record_every = 1
moment_p = 4
";

const CATALOGUE: &[CatalogueEntry] = &[
    CatalogueEntry {
        name: "two-atoms-stationary",
        description: "atoms (±1,0) against (0,±π/2): the configuration does not move",
        config: TWO_ATOMS_STATIONARY,
        criteria: &[Criterion::MaxSpeedBelow(1e-4)],
    },
    CatalogueEntry {
        name: "two-atoms-offbalance",
        description: "atoms (±1,0) against (0,±1): non-stationary control",
        config: TWO_ATOMS_OFFBALANCE,
        criteria: &[Criterion::InitialSpeedAbove(0.05)],
    },
    CatalogueEntry {
        name: "segment-radial",
        description: "segment source, annulus target: support stays on the axis, no convergence",
        config: SEGMENT_RADIAL,
        criteria: &[
            Criterion::CoordinateBelow {
                axis: 1,
                bound: 1e-8,
            },
            Criterion::Sw2Above(0.1),
        ],
    },
    CatalogueEntry {
        name: "gauss-decay",
        description: "uniform square toward a standard Gaussian: SW2^2 decay and moment bounds",
        config: GAUSS_DECAY,
        criteria: &[
            Criterion::EnergyNonincreasing(1e-9),
            Criterion::DecaySlope {
                t_min: 5.0,
                bound: -0.8,
            },
            Criterion::DecayConstant {
                t_min: 5.0,
                slack: 0.1,
            },
            Criterion::MomentBounds { slack: 0.05 },
        ],
    },
    CatalogueEntry {
        name: "idt-compare",
        description: "iterative distribution transfer on the gauss-decay pair",
        config: IDT_COMPARE,
        criteria: &[Criterion::Sw2Decreased, Criterion::FinalSw2Below(1e-3)],
    },
    CatalogueEntry {
        name: "flowmap-optimality",
        description: "anisotropic 2D pair run to rest: the flow map is not the optimal pairing",
        config: FLOWMAP_OPTIMALITY,
        criteria: &[
            Criterion::Converged(1e-4),
            Criterion::FlowMapGapPositive,
            Criterion::MonotonicityViolated,
        ],
    },
    CatalogueEntry {
        name: "lemma-slice-integral",
        description: "hyperplane integrals against ∫f/|x| for balls and the Gaussian, d = 2, 3",
        config: LEMMA_SLICE_INTEGRAL,
        criteria: &[
            Criterion::LemmaRelativeError(1e-3),
            Criterion::LemmaPlanarPrefactor(1e-12),
        ],
    },
    CatalogueEntry {
        name: "moment-bounds",
        description: "compactly supported pair: moments and radius under their a priori bounds",
        config: MOMENT_BOUNDS,
        criteria: &[
            Criterion::MomentBounds { slack: 0.05 },
            Criterion::EnergyNonincreasing(1e-9),
        ],
    },
];

/// All built-in experiments, in listing order.
pub fn catalogue() -> &'static [CatalogueEntry] {
    CATALOGUE
}

pub fn find_scenario(name: &str) -> Option<&'static CatalogueEntry> {
    CATALOGUE.iter().find(|e| e.name == name)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::ExperimentConfig;

    #[test]
    fn every_entry_parses_and_names_itself() {
        assert_eq!(catalogue().len(), 8);
        for e in catalogue() {
            let cfg = ExperimentConfig::parse(e.config).unwrap();
            assert_eq!(cfg.scenario.as_deref(), Some(e.name));
        }
        assert!(find_scenario("nope").is_none());
    }
}
