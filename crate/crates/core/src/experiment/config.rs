//! Flat `key = value` experiment files.
//!
//! ```text
//! # comments start with '#'
//! scenario = gauss-decay
//! experiment = flow            # flow | slice-lemma
//! dim = 2
//! seed = 7                     # master seed
//! n = 4096                     # default particle count for source and target
//!
//! source.kind = uniform-box
//! source.lo = -1
//! source.hi = 1
//! target.kind = gaussian
//! target.mean = 0
//! target.scale = 1
//!
//! tau = 0.02
//! t_max = 50
//! directions = 256
//! direction_mode = grid2d
//! record_every = 25
//! ```
//!
//! Scenario keys live under `source.` and `target.`: `kind`, `n`, `seed`,
//! `mirror` and the parameters of the kind (`mean`, `scale`, `lo`, `hi`, `a`,
//! `b`, `r0`, `r1`, `locations`, `weights`, `shift`, `angle`). Vectors are
//! comma separated; atom locations are separated by `;`. Derived kinds
//! (`translate-of`, `rotate-of`) describe their base law under
//! `source.base.` (nesting further as `source.base.base.`).
//!
//! Flow keys mirror [`FlowConfig`]: `mode`, `tau`, `t_max`, `directions`,
//! `direction_mode`, `stop_speed`, `record_every`, `deterministic`,
//! `flow_seed`, `resample_directions`, `record_trajectory`, `moment_p`,
//! `track_entropy`.
//!
//! The `slice-lemma` experiment reads `lemma.dims`, `lemma.radii`,
//! `lemma.gaussian`, `lemma.half_width`, `lemma.radial_cells`,
//! `lemma.angular_cells` and `lemma.directions`.
//!
//! Unless given explicitly, the source, target and flow seeds are the master
//! seed plus 0, 1 and 2.

use std::collections::BTreeMap;
use std::fmt;

use super::ExperimentError;
use crate::flow::{FlowConfig, FlowMode};
use crate::measures::{DirectionMode, ScenarioKind, ScenarioSpec};
use crate::sliced::IntegrationGrid;

/// What an experiment file asks for.
#[derive(Debug, Clone, PartialEq)]
pub enum Experiment {
    Flow(FlowExperiment),
    SliceLemma(LemmaExperiment),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowExperiment {
    pub source: ScenarioSpec,
    pub target: ScenarioSpec,
    pub flow: FlowConfig,
}

/// Hyperplane-integration checks over ball indicators and the standard
/// Gaussian density.
#[derive(Debug, Clone, PartialEq)]
pub struct LemmaExperiment {
    pub dims: Vec<usize>,
    pub radii: Vec<f64>,
    pub gaussian: bool,
    pub grid: IntegrationGrid,
    pub directions: usize,
    pub seed: u64,
}

/// A parsed experiment file.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub scenario: Option<String>,
    pub seed: u64,
    pub experiment: Experiment,
    entries: BTreeMap<String, Entry>,
}

#[derive(Debug, Clone, PartialEq)]
struct Entry {
    value: String,
    line: usize,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, ExperimentError> {
        let mut entries = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                return Err(ExperimentError::config(line, content, "expected `key = value`"));
            };
            let key = key.trim();
            if key.is_empty() || key.contains(char::is_whitespace) {
                return Err(ExperimentError::config(line, key, "malformed key"));
            }
            let entry = Entry {
                value: value.trim().to_string(),
                line,
            };
            if let Some(prev) = entries.insert(key.to_string(), entry) {
                return Err(ExperimentError::config(
                    line,
                    key,
                    &format!("duplicate key (first set on line {})", prev.line),
                ));
            }
        }
        Self::from_entries(entries)
    }

    fn from_entries(entries: BTreeMap<String, Entry>) -> Result<Self, ExperimentError> {
        let r = Reader { entries: &entries };
        let known = r.known_keys();
        for (key, e) in &entries {
            if !known(key) {
                return Err(ExperimentError::config(e.line, key, "unknown key"));
            }
        }
        let seed = r.parse_or("seed", 0u64)?;
        let scenario = r.get("scenario").map(str::to_string);
        let experiment = match r.get("experiment").unwrap_or("flow") {
            "flow" => Experiment::Flow(r.flow_experiment(seed)?),
            "slice-lemma" => Experiment::SliceLemma(r.lemma_experiment(seed)?),
            other => {
                return Err(r.error(
                    "experiment",
                    &format!("unknown experiment {other:?} (expected flow or slice-lemma)"),
                ))
            }
        };
        Ok(Self {
            scenario,
            seed,
            experiment,
            entries,
        })
    }

    /// Replaces the master seed. Seeds set explicitly in the file still win.
    pub fn with_seed(&self, seed: u64) -> Result<Self, ExperimentError> {
        let mut entries = self.entries.clone();
        entries.insert(
            "seed".into(),
            Entry {
                value: seed.to_string(),
                line: 0,
            },
        );
        Self::from_entries(entries)
    }

    /// Forces fixed-order reductions.
    pub fn with_deterministic(&self) -> Result<Self, ExperimentError> {
        let mut entries = self.entries.clone();
        entries.insert(
            "deterministic".into(),
            Entry {
                value: "true".into(),
                line: 0,
            },
        );
        Self::from_entries(entries)
    }

    /// The configuration as `key = value` lines, sorted by key; parsing the
    /// result gives back an equal configuration.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, e) in &self.entries {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(&e.value);
            out.push('\n');
        }
        out
    }

    /// `(key, value)` pairs in key order.
    pub fn entries(&self) -> impl Iterator<Item = (&str, &str)> {
        self.entries.iter().map(|(k, e)| (k.as_str(), e.value.as_str()))
    }
}

impl fmt::Display for ExperimentConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

struct Reader<'a> {
    entries: &'a BTreeMap<String, Entry>,
}

const FLOW_KEYS: &[&str] = &[
    "mode",
    "tau",
    "t_max",
    "directions",
    "direction_mode",
    "stop_speed",
    "record_every",
    "deterministic",
    "flow_seed",
    "resample_directions",
    "record_trajectory",
    "moment_p",
    "track_entropy",
];

const LEMMA_KEYS: &[&str] = &[
    "lemma.dims",
    "lemma.radii",
    "lemma.gaussian",
    "lemma.half_width",
    "lemma.radial_cells",
    "lemma.angular_cells",
    "lemma.directions",
];

const SCENARIO_KEYS: &[&str] = &[
    "kind", "n", "seed", "mirror", "mean", "scale", "lo", "hi", "a", "b", "r0", "r1",
    "locations", "weights", "shift", "angle",
];

impl Reader<'_> {
    fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|e| e.value.as_str())
    }

    fn line(&self, key: &str) -> usize {
        self.entries.get(key).map_or(0, |e| e.line)
    }

    fn error(&self, key: &str, message: &str) -> ExperimentError {
        ExperimentError::config(self.line(key), key, message)
    }

    fn require(&self, key: &str) -> Result<&str, ExperimentError> {
        self.get(key)
            .ok_or_else(|| ExperimentError::config(0, key, "missing required key"))
    }

    fn parse_value<T: std::str::FromStr>(&self, key: &str, v: &str) -> Result<T, ExperimentError>
    where
        T::Err: fmt::Display,
    {
        v.parse::<T>()
            .map_err(|e| self.error(key, &format!("cannot parse {v:?}: {e}")))
    }

    fn parse_or<T: std::str::FromStr>(&self, key: &str, default: T) -> Result<T, ExperimentError>
    where
        T::Err: fmt::Display,
    {
        match self.get(key) {
            Some(v) => self.parse_value(key, v),
            None => Ok(default),
        }
    }

    fn parse_req<T: std::str::FromStr>(&self, key: &str) -> Result<T, ExperimentError>
    where
        T::Err: fmt::Display,
    {
        let v = self.require(key)?;
        self.parse_value(key, v)
    }

    fn vector(&self, key: &str) -> Result<Vec<f64>, ExperimentError> {
        let v = self.require(key)?;
        v.split(',')
            .map(|s| self.parse_value::<f64>(key, s.trim()))
            .collect()
    }

    fn vector_or(&self, key: &str, default: Vec<f64>) -> Result<Vec<f64>, ExperimentError> {
        if self.get(key).is_some() {
            self.vector(key)
        } else {
            Ok(default)
        }
    }

    fn known_keys(&self) -> impl Fn(&str) -> bool {
        |key: &str| {
            if ["scenario", "experiment", "dim", "seed", "n"].contains(&key)
                || FLOW_KEYS.contains(&key)
                || LEMMA_KEYS.contains(&key)
            {
                return true;
            }
            let rest = key
                .strip_prefix("source.")
                .or_else(|| key.strip_prefix("target."));
            let Some(mut rest) = rest else {
                return false;
            };
            while let Some(r) = rest.strip_prefix("base.") {
                rest = r;
            }
            SCENARIO_KEYS.contains(&rest)
        }
    }

    fn flow_experiment(&self, seed: u64) -> Result<FlowExperiment, ExperimentError> {
        let dim: usize = self.parse_req("dim")?;
        let n: Option<usize> = self.get("n").map(|v| self.parse_value("n", v)).transpose()?;
        let defaults = FlowConfig::default();
        let mode = match self.get("mode") {
            None => FlowMode::Swf,
            Some(m) => FlowMode::parse(m)
                .ok_or_else(|| self.error("mode", &format!("unknown mode {m:?} (swf or idt)")))?,
        };
        let direction_mode = match self.get("direction_mode") {
            None => None,
            Some(m) => Some(DirectionMode::parse(m).ok_or_else(|| {
                self.error(
                    "direction_mode",
                    &format!("unknown direction mode {m:?} (grid2d, montecarlo or antithetic)"),
                )
            })?),
        };
        let flow = FlowConfig {
            tau: self.parse_or("tau", defaults.tau)?,
            t_max: self.parse_or("t_max", defaults.t_max)?,
            directions: self.parse_or("directions", defaults.directions)?,
            direction_mode,
            mode,
            stop_speed: self.parse_or("stop_speed", defaults.stop_speed)?,
            record_every: self.parse_or("record_every", defaults.record_every)?,
            deterministic: self.parse_or("deterministic", defaults.deterministic)?,
            seed: self.parse_or("flow_seed", seed.wrapping_add(2))?,
            resample_directions: self.parse_or("resample_directions", defaults.resample_directions)?,
            record_trajectory: self.parse_or("record_trajectory", defaults.record_trajectory)?,
            moment_p: self.parse_or("moment_p", defaults.moment_p)?,
            track_entropy: self.parse_or("track_entropy", defaults.track_entropy)?,
        };
        let source = self.scenario("source", dim, n, seed)?;
        let target = self.scenario("target", dim, n, seed.wrapping_add(1))?;
        Ok(FlowExperiment {
            source,
            target,
            flow,
        })
    }

    fn scenario(
        &self,
        prefix: &str,
        dim: usize,
        n: Option<usize>,
        seed: u64,
    ) -> Result<ScenarioSpec, ExperimentError> {
        let key = |k: &str| format!("{prefix}.{k}");
        let kind = self.kind(prefix)?;
        let n_key = key("n");
        let n_particles = match (self.get(&n_key), n) {
            (Some(v), _) => self.parse_value(&n_key, v)?,
            (None, Some(n)) => n,
            (None, None) => return Err(ExperimentError::config(0, &n_key, "missing particle count (set it or `n`)")),
        };
        Ok(ScenarioSpec {
            kind,
            dim,
            n_particles,
            seed: self.parse_or(&key("seed"), seed)?,
            mirror: self.parse_or(&key("mirror"), false)?,
        })
    }

    fn kind(&self, prefix: &str) -> Result<ScenarioKind, ExperimentError> {
        let key = |k: &str| format!("{prefix}.{k}");
        let kind_key = key("kind");
        let kind = self.require(&kind_key)?;
        Ok(match kind {
            "gaussian" => ScenarioKind::Gaussian {
                mean: self.vector_or(&key("mean"), vec![0.0])?,
                scale: self.vector_or(&key("scale"), vec![1.0])?,
            },
            "uniform-box" => ScenarioKind::UniformBox {
                lo: self.vector(&key("lo"))?,
                hi: self.vector(&key("hi"))?,
            },
            "atoms" => {
                let loc_key = key("locations");
                let locations = self
                    .require(&loc_key)?
                    .split(';')
                    .map(|p| {
                        p.split(',')
                            .map(|s| self.parse_value::<f64>(&loc_key, s.trim()))
                            .collect::<Result<Vec<_>, _>>()
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                let weights = match self.get(&key("weights")) {
                    Some(_) => self.vector(&key("weights"))?,
                    None => vec![1.0 / locations.len() as f64; locations.len()],
                };
                ScenarioKind::Atoms { locations, weights }
            }
            "segment" => ScenarioKind::Segment {
                a: self.parse_req(&key("a"))?,
                b: self.parse_req(&key("b"))?,
            },
            "radial-annulus" => ScenarioKind::RadialAnnulus {
                r0: self.parse_req(&key("r0"))?,
                r1: self.parse_req(&key("r1"))?,
            },
            "translate-of" => ScenarioKind::TranslateOf {
                base: Box::new(self.kind(&key("base"))?),
                shift: self.vector(&key("shift"))?,
            },
            "rotate-of" => ScenarioKind::RotateOf {
                base: Box::new(self.kind(&key("base"))?),
                angle: self.parse_req(&key("angle"))?,
            },
            other => {
                return Err(self.error(
                    &kind_key,
                    &format!(
                        "unknown scenario kind {other:?} (gaussian, uniform-box, atoms, segment, \
                         radial-annulus, translate-of, rotate-of)"
                    ),
                ))
            }
        })
    }

    fn lemma_experiment(&self, seed: u64) -> Result<LemmaExperiment, ExperimentError> {
        let dims = match self.get("lemma.dims") {
            None => vec![2, 3],
            Some(v) => v
                .split(',')
                .map(|s| self.parse_value::<usize>("lemma.dims", s.trim()))
                .collect::<Result<_, _>>()?,
        };
        let defaults = IntegrationGrid::default();
        Ok(LemmaExperiment {
            dims,
            radii: self.vector_or("lemma.radii", vec![0.5, 1.0, 2.0])?,
            gaussian: self.parse_or("lemma.gaussian", true)?,
            grid: IntegrationGrid {
                half_width: self.parse_or("lemma.half_width", defaults.half_width)?,
                radial_cells: self.parse_or("lemma.radial_cells", defaults.radial_cells)?,
                angular_cells: self.parse_or("lemma.angular_cells", defaults.angular_cells)?,
            },
            directions: self.parse_or("lemma.directions", 64)?,
            seed,
        })
    }
}
