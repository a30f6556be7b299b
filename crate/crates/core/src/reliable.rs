//! Positive, negative and fully reliable learners over finite classes.
//!
//! The exhaustive learner reads the exact law of its example source and is
//! also the ground truth the sampling learner is checked against. The
//! cost-sensitive learner runs weighted ERM on a drawn sample.

use std::cmp::Ordering;
use std::ops::AddAssign;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::distribution::{LabeledDistribution, Law};
use crate::error::{check_unit_open, Error, Result};
use crate::hypothesis::{Hypothesis, MaterializedClass, SelectiveHypothesis};
use crate::oracle::{ExampleOracle, ExampleSource};
use crate::par::{self, Parallelism};
use crate::rng::stream;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Polarity {
    /// False positives are capped; false negatives compete with `opt₊`.
    Positive,
    /// The mirror image: learning `C̄` positively after a label flip.
    Negative,
}

impl Polarity {
    pub fn flipped(self) -> Self {
        match self {
            Polarity::Positive => Polarity::Negative,
            Polarity::Negative => Polarity::Positive,
        }
    }

    /// The constant every class must contain for this polarity to be
    /// well defined.
    pub fn required_constant(self) -> bool {
        self == Polarity::Negative
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReliableRequest {
    pub epsilon: f64,
    pub delta: f64,
    pub polarity: Polarity,
}

impl ReliableRequest {
    pub fn new(epsilon: f64, delta: f64, polarity: Polarity) -> Result<Self> {
        check_unit_open("epsilon", epsilon)?;
        check_unit_open("delta", delta)?;
        Ok(ReliableRequest { epsilon, delta, polarity })
    }
}

pub trait ReliableLearner: Send + Sync {
    fn learn(&self, request: &ReliableRequest, source: &mut dyn ExampleSource) -> Result<Hypothesis>;

    /// Examples drawn per call; zero for learners that read exact laws.
    fn sample_size(&self, request: &ReliableRequest) -> u64;

    fn class(&self) -> &MaterializedClass;
}

/// Scans above this many (member, point) pairs go through the thread pool.
const PARALLEL_WORK: usize = 1 << 15;

/// Per-member `(false⁺, false⁻)` given per-point `(id, neg, pos)` weights,
/// accumulated in id order.
fn one_sided<T>(class: &MaterializedClass, points: &[(usize, T, T)], mode: Parallelism) -> Vec<(T, T)>
where
    T: Copy + Default + AddAssign + Send + Sync,
{
    let scan = |i: usize| {
        let table = class.table(i);
        let (mut fp, mut fn_) = (T::default(), T::default());
        for &(x, neg, pos) in points {
            if table.get(x) {
                fp += neg;
            } else {
                fn_ += pos;
            }
        }
        (fp, fn_)
    };
    let mode = if class.len() * points.len() >= PARALLEL_WORK { mode } else { Parallelism::Sequential };
    par::map(class.len(), mode, scan)
}

fn dual_keys(class: &MaterializedClass) -> Vec<u64> {
    class.tables().iter().map(|t| t.complement().content_key()).collect()
}

fn check_constant(class: &MaterializedClass, polarity: Polarity) -> Result<()> {
    let c = polarity.required_constant();
    if class.contains_constant(c) {
        Ok(())
    } else {
        Err(Error::MissingConstant(c))
    }
}

/// Exact learner: minimizes `false⁻` subject to `false⁺ ≤ ε` (positive) or
/// `false⁺` subject to `false⁻ ≤ ε` (negative) over the whole class.
///
/// Ties go to the smaller other-side error, then to the smaller identity
/// key. The negative learner compares keys of complemented members so it
/// coincides with the positive learner run on `C̄` and flipped labels.
#[derive(Debug, Clone)]
pub struct ExhaustiveReliable {
    class: Arc<MaterializedClass>,
    dual_keys: Vec<u64>,
    parallelism: Parallelism,
}

impl ExhaustiveReliable {
    pub fn new(class: Arc<MaterializedClass>) -> Self {
        let dual_keys = dual_keys(&class);
        ExhaustiveReliable { class, dual_keys, parallelism: Parallelism::Parallel }
    }

    pub fn with_parallelism(mut self, parallelism: Parallelism) -> Self {
        self.parallelism = parallelism;
        self
    }

    pub fn learn_law(&self, law: &Law, epsilon: f64, polarity: Polarity) -> Result<Hypothesis> {
        check_constant(&self.class, polarity)?;
        if !law.is_labeled() {
            return Err(Error::Unlabeled);
        }
        let points: Vec<_> = law.entries().iter().map(|(x, t)| (*x, t.neg, t.pos)).collect();
        let rates = one_sided(&self.class, &points, self.parallelism);
        let total = |a: f64, b: f64| a.partial_cmp(&b).unwrap_or(Ordering::Equal);
        let best = match polarity {
            Polarity::Positive => (0..rates.len())
                .filter(|&i| rates[i].0 <= epsilon)
                .min_by(|&i, &j| {
                    total(rates[i].1, rates[j].1)
                        .then(total(rates[i].0, rates[j].0))
                        .then(self.class.key(i).cmp(&self.class.key(j)))
                }),
            Polarity::Negative => (0..rates.len())
                .filter(|&i| rates[i].1 <= epsilon)
                .min_by(|&i, &j| {
                    total(rates[i].0, rates[j].0)
                        .then(total(rates[i].1, rates[j].1))
                        .then(self.dual_keys[i].cmp(&self.dual_keys[j]))
                }),
        };
        // The required constant has zero error on the constrained side.
        let i = best.expect("the required constant is always feasible");
        Ok(self.class.member(i).clone())
    }
}

impl ReliableLearner for ExhaustiveReliable {
    fn learn(&self, request: &ReliableRequest, source: &mut dyn ExampleSource) -> Result<Hypothesis> {
        self.learn_law(&source.law()?, request.epsilon, request.polarity)
    }

    fn sample_size(&self, _request: &ReliableRequest) -> u64 {
        0
    }

    fn class(&self) -> &MaterializedClass {
        &self.class
    }
}

/// Weighted ERM with negative examples (positive polarity) up-weighted by
/// `w = ⌈4/ε⌉` on `m = ⌈(64/ε²)(ln|C| + ln(4/δ))⌉` draws.
#[derive(Debug, Clone)]
pub struct CostSensitiveReliable {
    class: Arc<MaterializedClass>,
    dual_keys: Vec<u64>,
    parallelism: Parallelism,
}

impl CostSensitiveReliable {
    pub fn new(class: Arc<MaterializedClass>) -> Self {
        let dual_keys = dual_keys(&class);
        CostSensitiveReliable { class, dual_keys, parallelism: Parallelism::Parallel }
    }

    pub fn with_parallelism(mut self, parallelism: Parallelism) -> Self {
        self.parallelism = parallelism;
        self
    }

    pub fn weight(epsilon: f64) -> u64 {
        (4.0 / epsilon).ceil() as u64
    }
}

pub fn sampling_sample_size(class_size: usize, epsilon: f64, delta: f64) -> u64 {
    let m = (64.0 / (epsilon * epsilon)) * ((class_size.max(1) as f64).ln() + (4.0 / delta).ln());
    m.ceil().min(u64::MAX as f64 / 4.0) as u64
}

impl ReliableLearner for CostSensitiveReliable {
    fn learn(&self, request: &ReliableRequest, source: &mut dyn ExampleSource) -> Result<Hypothesis> {
        check_constant(&self.class, request.polarity)?;
        let sample = source.draw_batch(self.sample_size(request))?;
        let mut points = Vec::with_capacity(sample.tallies().len());
        for (&x, t) in sample.tallies() {
            if t.unlabeled > 0 {
                return Err(Error::Unlabeled);
            }
            points.push((x, t.neg as u128, t.pos as u128));
        }
        let counts = one_sided(&self.class, &points, self.parallelism);
        let w = Self::weight(request.epsilon) as u128;
        // Negative polarity is positive ERM on flipped labels over `C̄`:
        // the roles of the two counts swap.
        let (keys, side): (&[u64], fn(&(u128, u128)) -> (u128, u128)) = match request.polarity {
            Polarity::Positive => (self.class.keys(), |&(fp, fn_)| (fp, fn_)),
            Polarity::Negative => (&self.dual_keys, |&(fp, fn_)| (fn_, fp)),
        };
        let best = (0..counts.len())
            .min_by_key(|&i| {
                let (heavy, light) = side(&counts[i]);
                (w * heavy + light, heavy, keys[i])
            })
            .expect("class is nonempty");
        Ok(self.class.member(best).clone())
    }

    fn sample_size(&self, request: &ReliableRequest) -> u64 {
        sampling_sample_size(self.class.len(), request.epsilon, request.delta)
    }

    fn class(&self) -> &MaterializedClass {
        &self.class
    }
}

pub fn positive_reliable_exact(class: &MaterializedClass, d: &LabeledDistribution, epsilon: f64) -> Result<Hypothesis> {
    check_unit_open("epsilon", epsilon)?;
    ExhaustiveReliable::new(Arc::new(class.clone())).learn_law(&Law::labeled(d)?, epsilon, Polarity::Positive)
}

pub fn negative_reliable_exact(class: &MaterializedClass, d: &LabeledDistribution, epsilon: f64) -> Result<Hypothesis> {
    check_unit_open("epsilon", epsilon)?;
    ExhaustiveReliable::new(Arc::new(class.clone())).learn_law(&Law::labeled(d)?, epsilon, Polarity::Negative)
}

/// Cost-sensitive ERM on `d`, drawing from a stream seeded by `seed`.
pub fn reliable_sampling(
    class: &MaterializedClass,
    request: &ReliableRequest,
    d: &LabeledDistribution,
    seed: u64,
) -> Result<Hypothesis> {
    let mut ex = ExampleOracle::labeled(d.clone(), stream(seed, 0));
    CostSensitiveReliable::new(Arc::new(class.clone())).learn(request, &mut ex)
}

/// `c₊(x)` where `c₊` and `c₋` agree, ⊥ elsewhere.
pub fn fully_reliable_pair(c_plus: Hypothesis, c_minus: Hypothesis) -> SelectiveHypothesis {
    SelectiveHypothesis::agreement(SelectiveHypothesis::Total(c_plus), SelectiveHypothesis::Total(c_minus))
}
