//! Finite distributions, labeled distributions, and exact joint laws.

use std::fmt;
use std::sync::Arc;

use rand::distributions::{Distribution as _, WeightedIndex};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{Point, Universe};
use crate::error::{Error, Result};
use crate::hypothesis::Hypothesis;
use crate::oracle::Event;
use crate::rng::Stream;

type SamplerFn = dyn Fn(&mut Stream) -> usize + Send + Sync;

/// A distribution over the points of a universe.
///
/// Exact distributions carry explicit weights (sorted by point id, zero
/// weights dropped); sampler distributions only support drawing.
#[derive(Clone)]
pub struct Distribution {
    universe: Arc<Universe>,
    repr: Repr,
}

#[derive(Clone)]
enum Repr {
    Finite(Arc<Finite>),
    Sampler(Arc<SamplerFn>),
}

struct Finite {
    ids: Vec<usize>,
    weights: Vec<f64>,
    index: WeightedIndex<f64>,
}

impl Distribution {
    pub const WEIGHT_TOLERANCE: f64 = 1e-12;

    pub fn new(universe: Arc<Universe>, pairs: impl IntoIterator<Item = (usize, f64)>) -> Result<Self> {
        let mut pairs: Vec<(usize, f64)> = pairs.into_iter().collect();
        for &(id, w) in &pairs {
            if id >= universe.len() {
                return Err(Error::InvalidDistribution(format!("point {id} outside universe")));
            }
            if !(w.is_finite() && w >= 0.0) {
                return Err(Error::InvalidDistribution(format!("weight {w} on point {id}")));
            }
        }
        pairs.sort_by_key(|&(id, _)| id);
        let mut ids: Vec<usize> = Vec::with_capacity(pairs.len());
        let mut weights: Vec<f64> = Vec::with_capacity(pairs.len());
        for (id, w) in pairs {
            if ids.last() == Some(&id) {
                *weights.last_mut().unwrap() += w;
            } else {
                ids.push(id);
                weights.push(w);
            }
        }
        let keep: Vec<bool> = weights.iter().map(|&w| w > 0.0).collect();
        let mut k = keep.iter();
        ids.retain(|_| *k.next().unwrap());
        weights.retain(|&w| w > 0.0);
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > Self::WEIGHT_TOLERANCE {
            return Err(Error::InvalidDistribution(format!("weights sum to {total}")));
        }
        let index = WeightedIndex::new(&weights)
            .map_err(|e| Error::InvalidDistribution(e.to_string()))?;
        Ok(Distribution { universe, repr: Repr::Finite(Arc::new(Finite { ids, weights, index })) })
    }

    /// Normalizes nonnegative masses before validating.
    pub fn normalized(universe: Arc<Universe>, pairs: impl IntoIterator<Item = (usize, f64)>) -> Result<Self> {
        let pairs: Vec<(usize, f64)> = pairs.into_iter().collect();
        let total: f64 = pairs.iter().map(|p| p.1).sum();
        if !(total > 0.0) {
            return Err(Error::InvalidDistribution("no positive mass".into()));
        }
        Self::new(universe, pairs.into_iter().map(|(i, w)| (i, w / total)))
    }

    pub fn uniform(universe: Arc<Universe>, ids: &[usize]) -> Result<Self> {
        if ids.is_empty() {
            return Err(Error::InvalidDistribution("empty support".into()));
        }
        let w = 1.0 / ids.len() as f64;
        Self::normalized(universe, ids.iter().map(|&i| (i, w)))
    }

    pub fn uniform_all(universe: Arc<Universe>) -> Result<Self> {
        let ids: Vec<usize> = (0..universe.len()).collect();
        Self::uniform(universe, &ids)
    }

    pub fn from_dense(universe: Arc<Universe>, weights: &[f64]) -> Result<Self> {
        if weights.len() != universe.len() {
            return Err(Error::DimensionMismatch { expected: universe.len(), found: weights.len() });
        }
        Self::new(universe, weights.iter().copied().enumerate())
    }

    /// A black-box distribution; exact metrics reject it.
    pub fn sampler(universe: Arc<Universe>, f: impl Fn(&mut Stream) -> usize + Send + Sync + 'static) -> Self {
        Distribution { universe, repr: Repr::Sampler(Arc::new(f)) }
    }

    pub fn universe(&self) -> &Arc<Universe> {
        &self.universe
    }

    pub fn is_exact(&self) -> bool {
        matches!(self.repr, Repr::Finite(_))
    }

    fn finite(&self) -> Result<&Finite> {
        match &self.repr {
            Repr::Finite(f) => Ok(f),
            Repr::Sampler(_) => Err(Error::ModeMismatch),
        }
    }

    /// `(point id, weight)` pairs in id order.
    pub fn support(&self) -> Result<impl Iterator<Item = (usize, f64)> + '_> {
        let f = self.finite()?;
        Ok(f.ids.iter().copied().zip(f.weights.iter().copied()))
    }

    pub fn support_len(&self) -> Result<usize> {
        Ok(self.finite()?.ids.len())
    }

    pub fn weight(&self, id: usize) -> Result<f64> {
        let f = self.finite()?;
        Ok(f.ids.binary_search(&id).map(|i| f.weights[i]).unwrap_or(0.0))
    }

    /// Probability of `pred` under the distribution.
    pub fn mass(&self, mut pred: impl FnMut(&Point) -> bool) -> Result<f64> {
        Ok(self
            .support()?
            .filter(|&(id, _)| pred(self.universe.point(id)))
            .map(|(_, w)| w)
            .sum())
    }

    pub fn sample(&self, rng: &mut Stream) -> usize {
        match &self.repr {
            Repr::Finite(f) => f.ids[f.index.sample(rng)],
            Repr::Sampler(s) => s(rng),
        }
    }
}

impl fmt::Debug for Distribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.repr {
            Repr::Finite(fin) => f
                .debug_struct("Distribution")
                .field("support", &fin.ids.len())
                .field("universe", &self.universe.len())
                .finish(),
            Repr::Sampler(_) => f.write_str("Distribution(sampler)"),
        }
    }
}

/// How labels attach to points.
#[derive(Debug, Clone)]
pub enum Labeler {
    /// Noiseless: `y = f(x)`.
    Target(Hypothesis),
    /// `Pr[y = 1 | x]`, indexed by point id.
    Conditional(Arc<[f64]>),
}

/// A joint distribution over `X × {0,1}` given by a marginal and a labeler.
#[derive(Debug, Clone)]
pub struct LabeledDistribution {
    marginal: Distribution,
    labeler: Labeler,
}

impl LabeledDistribution {
    pub fn noiseless(marginal: Distribution, target: Hypothesis) -> Self {
        LabeledDistribution { marginal, labeler: Labeler::Target(target) }
    }

    pub fn noisy(marginal: Distribution, positive_probability: Vec<f64>) -> Result<Self> {
        if positive_probability.len() != marginal.universe().len() {
            return Err(Error::DimensionMismatch {
                expected: marginal.universe().len(),
                found: positive_probability.len(),
            });
        }
        if let Some(bad) = positive_probability.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::InvalidDistribution(format!("label probability {bad} outside [0, 1]")));
        }
        Ok(LabeledDistribution { marginal, labeler: Labeler::Conditional(positive_probability.into()) })
    }

    pub fn marginal(&self) -> &Distribution {
        &self.marginal
    }

    pub fn labeler(&self) -> &Labeler {
        &self.labeler
    }

    pub fn universe(&self) -> &Arc<Universe> {
        self.marginal.universe()
    }

    pub fn positive_probability(&self, x: &Point) -> f64 {
        match &self.labeler {
            Labeler::Target(f) => f64::from(u8::from(f.eval(x))),
            Labeler::Conditional(p) => p[x.id],
        }
    }

    pub fn sample(&self, rng: &mut Stream) -> (usize, bool) {
        let id = self.marginal.sample(rng);
        let x = self.universe().point(id);
        let y = match &self.labeler {
            Labeler::Target(f) => f.eval(x),
            Labeler::Conditional(p) => rng.gen_bool(p[id]),
        };
        (id, y)
    }
}

/// Per-point masses split by label status.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Tally<T> {
    pub unlabeled: T,
    pub neg: T,
    pub pos: T,
}

impl<T: Copy + std::ops::Add<Output = T>> Tally<T> {
    pub fn total(&self) -> T {
        self.unlabeled + self.neg + self.pos
    }

    pub fn add(&mut self, other: &Tally<T>) {
        self.unlabeled = self.unlabeled + other.unlabeled;
        self.neg = self.neg + other.neg;
        self.pos = self.pos + other.pos;
    }
}

impl<T: Copy + Default> Tally<T> {
    pub fn of_label(label: Option<bool>, value: T) -> Self {
        let mut t = Tally::default();
        match label {
            None => t.unlabeled = value,
            Some(false) => t.neg = value,
            Some(true) => t.pos = value,
        }
        t
    }

    pub fn parts(&self) -> [(Option<bool>, T); 3] {
        [(None, self.unlabeled), (Some(false), self.neg), (Some(true), self.pos)]
    }

    pub fn flipped(&self) -> Self {
        Tally { unlabeled: self.unlabeled, neg: self.pos, pos: self.neg }
    }
}

/// The exact law of an example oracle: nonnegative masses per point and
/// label status, sorted by point id.
#[derive(Debug, Clone)]
pub struct Law {
    universe: Arc<Universe>,
    entries: Vec<(usize, Tally<f64>)>,
}

impl Law {
    pub fn unlabeled(d: &Distribution) -> Result<Self> {
        Ok(Law {
            universe: d.universe().clone(),
            entries: d
                .support()?
                .map(|(id, w)| (id, Tally { unlabeled: w, neg: 0.0, pos: 0.0 }))
                .collect(),
        })
    }

    pub fn labeled(d: &LabeledDistribution) -> Result<Self> {
        let u = d.universe();
        Ok(Law {
            universe: u.clone(),
            entries: d
                .marginal()
                .support()?
                .map(|(id, w)| {
                    let eta = d.positive_probability(u.point(id));
                    let tally = if eta == 1.0 {
                        Tally { unlabeled: 0.0, neg: 0.0, pos: w }
                    } else if eta == 0.0 {
                        Tally { unlabeled: 0.0, neg: w, pos: 0.0 }
                    } else {
                        Tally { unlabeled: 0.0, neg: w * (1.0 - eta), pos: w * eta }
                    };
                    (id, tally)
                })
                .collect(),
        })
    }

    pub fn universe(&self) -> &Arc<Universe> {
        &self.universe
    }

    pub fn entries(&self) -> &[(usize, Tally<f64>)] {
        &self.entries
    }

    pub fn total(&self) -> f64 {
        self.entries.iter().map(|(_, t)| t.total()).sum()
    }

    pub fn is_labeled(&self) -> bool {
        self.entries.iter().all(|(_, t)| t.unlabeled == 0.0)
    }

    /// Unnormalized mass of an event.
    pub fn mass(&self, event: &Event) -> f64 {
        let mut m = 0.0;
        for (id, t) in &self.entries {
            let x = self.universe.point(*id);
            for (label, w) in t.parts() {
                if w > 0.0 && event.holds(x, label) {
                    m += w;
                }
            }
        }
        m
    }

    /// Probability of an event relative to the law's total mass.
    pub fn probability(&self, event: &Event) -> f64 {
        self.mass(event) / self.total()
    }

    pub fn condition(&self, event: &Event) -> Result<Law> {
        let mass = self.mass(event);
        if !(mass > 0.0) {
            return Err(Error::EventNegligible { event: event.name(), attempts: 0 });
        }
        let mut entries = Vec::new();
        for (id, t) in &self.entries {
            let x = self.universe.point(*id);
            let mut kept = Tally::default();
            for (label, w) in t.parts() {
                if w > 0.0 && event.holds(x, label) {
                    kept.add(&Tally::of_label(label, w / mass));
                }
            }
            if kept.total() > 0.0 {
                entries.push((*id, kept));
            }
        }
        Ok(Law { universe: self.universe.clone(), entries })
    }

    /// `alpha · a + (1 − alpha) · b`.
    pub fn mix(a: &Law, b: &Law, alpha: f64) -> Result<Law> {
        if !Arc::ptr_eq(&a.universe, &b.universe) && a.universe != b.universe {
            return Err(Error::UniverseMismatch);
        }
        let scale = |t: &Tally<f64>, s: f64| Tally { unlabeled: t.unlabeled * s, neg: t.neg * s, pos: t.pos * s };
        let (mut i, mut j) = (0, 0);
        let mut entries = Vec::with_capacity(a.entries.len() + b.entries.len());
        while i < a.entries.len() || j < b.entries.len() {
            let ia = a.entries.get(i).map(|e| e.0).unwrap_or(usize::MAX);
            let jb = b.entries.get(j).map(|e| e.0).unwrap_or(usize::MAX);
            if ia < jb {
                entries.push((ia, scale(&a.entries[i].1, alpha)));
                i += 1;
            } else if jb < ia {
                entries.push((jb, scale(&b.entries[j].1, 1.0 - alpha)));
                j += 1;
            } else {
                let mut t = scale(&a.entries[i].1, alpha);
                t.add(&scale(&b.entries[j].1, 1.0 - alpha));
                entries.push((ia, t));
                i += 1;
                j += 1;
            }
        }
        entries.retain(|(_, t)| t.total() > 0.0);
        Ok(Law { universe: a.universe.clone(), entries })
    }

    pub fn relabel(&self, label: bool) -> Law {
        self.map(|t| Tally::of_label(Some(label), t.total()))
    }

    pub fn unlabel(&self) -> Law {
        self.map(|t| Tally::of_label(None, t.total()))
    }

    pub fn flip(&self) -> Law {
        self.map(|t| t.flipped())
    }

    fn map(&self, f: impl Fn(&Tally<f64>) -> Tally<f64>) -> Law {
        Law {
            universe: self.universe.clone(),
            entries: self.entries.iter().map(|(id, t)| (*id, f(t))).collect(),
        }
    }

    pub fn marginal(&self) -> Result<Distribution> {
        Distribution::normalized(self.universe.clone(), self.entries.iter().map(|(id, t)| (*id, t.total())))
    }
}
