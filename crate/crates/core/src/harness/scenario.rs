//! Scenario files and the built-in scenarios.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::distribution::{Distribution, LabeledDistribution};
use crate::domain::Universe;
use crate::error::{Error, Result};
use crate::hypothesis::{ConceptClass, Halfspace, Hypothesis, MaterializedClass, TruthTable};
use crate::parity::{BitVector, Gf2Basis};
use crate::rng::{stream, Stream};
use crate::slicedice::Mode;

use super::instances::{random_parity, random_subspace, uniform_on_span};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DomainSpec {
    /// Anonymous points `0..size`.
    Finite { size: usize },
    Plane { points: Vec<[f64; 2]> },
    /// The full cube `{0,1}^dim`; point ids encode the bit vectors.
    Cube { dim: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum WeightSpec {
    Uniform,
    UniformOn { ids: Vec<usize> },
    Sparse { entries: Vec<(usize, f64)> },
    /// Uniform over the span of bit strings (cube domains).
    Span { basis: Vec<String> },
    /// Uniform over a fresh random subspace of this rank per trial.
    RandomSubspace { rank: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ClassSpec {
    /// Truth tables written as `0`/`1` strings, one character per point.
    Explicit { tables: Vec<String> },
    Halfspaces { angles: usize, offsets: usize },
    HomogeneousHalfspaces { angles: usize },
    Parities { dim: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TargetSpec {
    Constant { value: bool },
    Halfspace { angle_deg: f64, offset: f64 },
    Parity { w: String },
    /// A fresh uniformly random parity per trial.
    RandomParity,
    /// The class member at this enumeration index.
    Member { index: usize },
}

/// Label noise on the round-trip pipeline's joint distribution.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    #[serde(default)]
    pub flip_positive: f64,
    #[serde(default)]
    pub flip_negative: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pipeline {
    SliceAndDice,
    Parity,
    /// Slice-and-Dice turned back into a positive reliable learner on the
    /// joint distribution `P` labeled by the (noisy) target.
    RoundTrip,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub domain: DomainSpec,
    pub p: WeightSpec,
    pub q: WeightSpec,
    pub class: ClassSpec,
    pub target: TargetSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseSpec>,
    pub pipeline: Pipeline,
    pub mode: Mode,
    pub epsilon: f64,
    pub delta: f64,
    pub trials: u64,
    pub seed: u64,
}

/// A scenario resolved for one seed.
#[derive(Debug, Clone)]
pub struct Instance {
    pub universe: Arc<Universe>,
    pub p: Distribution,
    pub q: Distribution,
    pub target: Hypothesis,
    /// `P` labeled by the target, with noise if configured.
    pub labeled: LabeledDistribution,
    /// Materialized only for pipelines that need it.
    pub class: Option<Arc<MaterializedClass>>,
}

/// Stream id reserved for per-trial instance randomness.
const INSTANCE_STREAM: u64 = 1 << 40;

pub const MAX_TRIALS: u64 = 1_000_000;

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self> {
        let s: Scenario = serde_json::from_str(text)?;
        s.validate()?;
        Ok(s)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    /// Whether instances differ between trials.
    pub fn is_randomized(&self) -> bool {
        matches!(self.p, WeightSpec::RandomSubspace { .. })
            || matches!(self.q, WeightSpec::RandomSubspace { .. })
            || self.target == TargetSpec::RandomParity
    }

    pub fn needs_class(&self) -> bool {
        self.pipeline != Pipeline::Parity
    }

    /// Every problem found, not just the first.
    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        if self.name.trim().is_empty() {
            bad.push("name: must not be empty".to_string());
        }
        for (field, v) in [("epsilon", self.epsilon), ("delta", self.delta)] {
            if !(v > 0.0 && v < 1.0) {
                bad.push(format!("{field}: {v} is not in (0, 1)"));
            }
        }
        if self.trials > MAX_TRIALS {
            bad.push(format!("trials: {} exceeds {MAX_TRIALS}", self.trials));
        }
        let domain_dim = match &self.domain {
            DomainSpec::Cube { dim } => Some(*dim),
            _ => None,
        };
        match (&self.class, &self.domain) {
            (ClassSpec::Halfspaces { .. } | ClassSpec::HomogeneousHalfspaces { .. }, DomainSpec::Plane { .. }) => {}
            (ClassSpec::Halfspaces { .. } | ClassSpec::HomogeneousHalfspaces { .. }, _) => {
                bad.push("class: halfspaces need a plane domain".into())
            }
            (ClassSpec::Parities { dim }, _) if Some(*dim) != domain_dim => {
                bad.push("class: parity dimension must match a cube domain".into())
            }
            _ => {}
        }
        if self.pipeline == Pipeline::Parity {
            if domain_dim.is_none() {
                bad.push("pipeline: parity needs a cube domain".into());
            }
            if !matches!(self.target, TargetSpec::Parity { .. } | TargetSpec::RandomParity) {
                bad.push("target: parity pipeline needs a parity target".into());
            }
        }
        if let Some(n) = self.noise {
            for (field, v) in [("noise.flip_positive", n.flip_positive), ("noise.flip_negative", n.flip_negative)] {
                if !(0.0..=1.0).contains(&v) {
                    bad.push(format!("{field}: {v} is not in [0, 1]"));
                }
            }
            if self.pipeline != Pipeline::RoundTrip && (n.flip_positive > 0.0 || n.flip_negative > 0.0) {
                bad.push("noise: only the round_trip pipeline accepts label noise".into());
            }
        }
        if bad.is_empty() {
            // Structural checks passed; resolve one instance to catch the rest.
            if let Err(e) = self.instance(self.seed) {
                bad.push(match e {
                    Error::InvalidScenario(v) => v.join("; "),
                    other => other.to_string(),
                });
            }
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidScenario(bad))
        }
    }

    pub fn universe(&self) -> Result<Arc<Universe>> {
        match &self.domain {
            DomainSpec::Finite { size } => Universe::indexed(*size),
            DomainSpec::Plane { points } => Universe::plane(points),
            DomainSpec::Cube { dim } => Universe::cube(*dim),
        }
    }

    fn weights(&self, spec: &WeightSpec, universe: &Arc<Universe>, rng: &mut Stream, field: &str) -> Result<Distribution> {
        let invalid = |msg: String| Error::InvalidScenario(vec![format!("{field}: {msg}")]);
        let dim = universe.dimension();
        match spec {
            WeightSpec::Uniform => Distribution::uniform_all(universe.clone()),
            WeightSpec::UniformOn { ids } => {
                if ids.iter().any(|&i| i >= universe.len()) {
                    return Err(invalid("id outside the domain".into()));
                }
                Distribution::uniform(universe.clone(), ids)
            }
            WeightSpec::Sparse { entries } => {
                if entries.iter().any(|&(i, _)| i >= universe.len()) {
                    return Err(invalid("id outside the domain".into()));
                }
                Distribution::new(universe.clone(), entries.iter().copied())
            }
            WeightSpec::Span { basis } => {
                if !matches!(self.domain, DomainSpec::Cube { .. }) {
                    return Err(invalid("span weights need a cube domain".into()));
                }
                let rows = basis.iter().map(|s| BitVector::parse(s)).collect::<Result<Vec<_>>>()?;
                Ok(uniform_on_span(universe, &Gf2Basis::span_of(dim, &rows)?))
            }
            WeightSpec::RandomSubspace { rank } => {
                if !matches!(self.domain, DomainSpec::Cube { .. }) || *rank > dim {
                    return Err(invalid("random subspaces need a cube domain of at least that dimension".into()));
                }
                Ok(uniform_on_span(universe, &random_subspace(rng, dim, *rank)))
            }
        }
        .map_err(|e| match e {
            Error::InvalidScenario(_) => e,
            other => invalid(other.to_string()),
        })
    }

    pub fn concept_class(&self, universe: &Universe) -> Result<ConceptClass> {
        Ok(match &self.class {
            ClassSpec::Explicit { tables } => {
                let mut members = Vec::with_capacity(tables.len());
                for t in tables {
                    if t.len() != universe.len() || t.chars().any(|c| c != '0' && c != '1') {
                        return Err(Error::InvalidScenario(vec![format!(
                            "class: table `{t}` must have one 0/1 character per point"
                        )]));
                    }
                    let bits: Vec<bool> = t.chars().map(|c| c == '1').collect();
                    members.push(Hypothesis::table(TruthTable::from_bits(&bits)));
                }
                ConceptClass::Explicit(members)
            }
            ClassSpec::Halfspaces { angles, offsets } => ConceptClass::Halfspaces { angles: *angles, offsets: *offsets },
            ClassSpec::HomogeneousHalfspaces { angles } => ConceptClass::HomogeneousHalfspaces { angles: *angles },
            ClassSpec::Parities { dim } => ConceptClass::Parities { dim: *dim },
        })
    }

    /// Resolves the scenario with randomness drawn from `seed`.
    pub fn instance(&self, seed: u64) -> Result<Instance> {
        let universe = self.universe()?;
        let mut rng = stream(seed, INSTANCE_STREAM);
        let p = self.weights(&self.p, &universe, &mut rng, "p")?;
        let q = self.weights(&self.q, &universe, &mut rng, "q")?;
        let class = if self.needs_class() {
            let c = self.concept_class(&universe)?.materialize(&universe)?;
            if !c.contains_constant(false) || !c.contains_constant(true) {
                return Err(Error::InvalidScenario(vec!["class: must contain both constant functions".into()]));
            }
            Some(Arc::new(c))
        } else {
            None
        };
        let target = match &self.target {
            TargetSpec::Constant { value } => Hypothesis::constant(*value),
            TargetSpec::Halfspace { angle_deg, offset } => {
                Hypothesis::halfspace(Halfspace::at_angle(angle_deg.to_radians(), *offset))
            }
            TargetSpec::Parity { w } => {
                let w = BitVector::parse(w)?;
                if w.dim() != universe.dimension() {
                    return Err(Error::InvalidScenario(vec!["target: parity dimension differs from the domain".into()]));
                }
                Hypothesis::parity(w)
            }
            TargetSpec::RandomParity => {
                if !matches!(self.domain, DomainSpec::Cube { .. }) {
                    return Err(Error::InvalidScenario(vec!["target: random parities need a cube domain".into()]));
                }
                Hypothesis::parity(random_parity(&mut rng, universe.dimension()))
            }
            TargetSpec::Member { index } => {
                let members = self.concept_class(&universe)?.enumerate(&universe)?;
                members
                    .get(*index)
                    .cloned()
                    .ok_or_else(|| Error::InvalidScenario(vec![format!("target: no class member {index}")]))?
            }
        };
        if let Some(c) = &class {
            if self.pipeline == Pipeline::SliceAndDice && c.position(&target).is_none() {
                return Err(Error::InvalidScenario(vec!["target: not a member of the class on this domain".into()]));
            }
        }
        let noise = self.noise.unwrap_or_default();
        let labeled = if noise.flip_positive == 0.0 && noise.flip_negative == 0.0 {
            LabeledDistribution::noiseless(p.clone(), target.clone())
        } else {
            let eta = universe
                .points()
                .iter()
                .map(|x| if target.eval(x) { 1.0 - noise.flip_positive } else { noise.flip_negative })
                .collect();
            LabeledDistribution::noisy(p.clone(), eta)?
        };
        Ok(Instance { universe, p, q, target, labeled, class })
    }
}

fn unit(angle_deg: f64) -> [f64; 2] {
    let t = angle_deg.to_radians();
    [t.cos(), t.sin()]
}

/// `P` on two symmetric unit vectors `±u`, `Q` adding `±v` at 60°, and
/// homogeneous halfspaces: no such halfspace tells `±u` from `±v`.
pub fn fig1a() -> Scenario {
    let (u, v) = (unit(0.0), unit(60.0));
    Scenario {
        name: "fig1a".into(),
        domain: DomainSpec::Plane { points: vec![u, [-u[0], -u[1]], v, [-v[0], -v[1]]] },
        p: WeightSpec::UniformOn { ids: vec![0, 1] },
        q: WeightSpec::Uniform,
        class: ClassSpec::HomogeneousHalfspaces { angles: 720 },
        target: TargetSpec::Halfspace { angle_deg: 0.0, offset: 0.0 },
        noise: None,
        pipeline: Pipeline::SliceAndDice,
        mode: Mode::Exact,
        epsilon: 0.1,
        delta: 0.1,
        trials: 1,
        seed: 42,
    }
}

/// Two clusters in the plane: `P` on the left, `Q` spread to the right,
/// labeled by a halfspace on the default 720 × 101 grid.
pub fn halfspaces_2d() -> Scenario {
    let mut rng = stream(7, 0);
    let mut points = Vec::new();
    let mut cloud = |cx: f64, cy: f64, r: f64, n: usize, points: &mut Vec<[f64; 2]>| {
        use rand::Rng;
        for _ in 0..n {
            let (a, d): (f64, f64) = (rng.gen_range(0.0..std::f64::consts::TAU), rng.gen::<f64>().sqrt() * r);
            points.push([cx + d * a.cos(), cy + d * a.sin()]);
        }
    };
    cloud(-0.8, 0.0, 0.9, 24, &mut points);
    cloud(1.0, 0.6, 0.7, 12, &mut points);
    let n = points.len();
    Scenario {
        name: "halfspaces-2d".into(),
        domain: DomainSpec::Plane { points },
        p: WeightSpec::UniformOn { ids: (0..24).collect() },
        q: WeightSpec::UniformOn { ids: (12..n).collect() },
        class: ClassSpec::Halfspaces { angles: 720, offsets: 101 },
        target: TargetSpec::Member { index: 2 + 60 * 101 + 50 },
        noise: None,
        pipeline: Pipeline::SliceAndDice,
        mode: Mode::Exact,
        epsilon: 0.1,
        delta: 0.1,
        trials: 1,
        seed: 42,
    }
}

pub fn parity(dim: usize, rank: usize) -> Scenario {
    Scenario {
        name: format!("parity-d{dim}"),
        domain: DomainSpec::Cube { dim },
        p: WeightSpec::RandomSubspace { rank },
        q: WeightSpec::Uniform,
        class: ClassSpec::Parities { dim },
        target: TargetSpec::RandomParity,
        noise: None,
        pipeline: Pipeline::Parity,
        mode: Mode::Sampling,
        epsilon: 0.1,
        delta: 0.1,
        trials: 500,
        seed: 42,
    }
}

/// Slice-and-Dice wrapped back into a reliable learner, on a noisy
/// halfspace instance.
pub fn round_trip() -> Scenario {
    let mut s = halfspaces_2d();
    s.name = "round-trip".into();
    s.class = ClassSpec::Halfspaces { angles: 72, offsets: 11 };
    s.target = TargetSpec::Member { index: 2 + 6 * 11 + 5 };
    s.noise = Some(NoiseSpec { flip_positive: 0.2, flip_negative: 0.0 });
    s.pipeline = Pipeline::RoundTrip;
    s.trials = 20;
    s
}

pub const BUILTIN_NAMES: [&str; 6] = ["fig1a", "fig1b", "halfspaces-2d", "parity-d8", "parity-d16", "round-trip"];

pub fn builtin(name: &str) -> Option<Scenario> {
    Some(match name {
        "fig1a" => fig1a(),
        "fig1b" | "halfspaces-2d" => {
            let mut s = halfspaces_2d();
            s.name = name.into();
            s
        }
        "parity-d8" => parity(8, 4),
        "parity-d16" => parity(16, 8),
        "round-trip" => round_trip(),
        _ => return None,
    })
}
