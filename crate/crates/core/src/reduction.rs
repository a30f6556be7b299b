//! Reliable learners from PQ learners.
//!
//! Negative examples play the role of the training distribution (labeled
//! 0) and the inputs of positive examples the role of the test
//! distribution. Whatever the PQ learner does not confidently call 0 is
//! called 1.

use serde::{Deserialize, Serialize};

use crate::error::{check_unit_open, Error, Result};
use crate::hypothesis::{Hypothesis, SelectiveHypothesis};
use crate::oracle::{condition, default_attempt_cap, estimate_prob, mixture, EstimatorBudget, Event, ExampleSource, Shared, Unlabeled};
use crate::reliable::Polarity;
use crate::rng::Seeder;
use crate::slicedice::{Mode, SliceDiceTrace};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PqOutcome {
    pub hypothesis: SelectiveHypothesis,
    pub timed_out: bool,
    pub trace: Option<SliceDiceTrace>,
}

impl PqOutcome {
    pub fn plain(hypothesis: SelectiveHypothesis) -> Self {
        PqOutcome { hypothesis, timed_out: false, trace: None }
    }
}

/// A learner taking `(ε, δ, EX(P, f), EX(Q))` and returning a selective
/// classifier with `err_Q ≤ ε` and `rej_P ≤ ε` with probability `1 − δ`.
pub trait PqLearner: Send + Sync {
    fn learn(
        &self,
        epsilon: f64,
        delta: f64,
        ex_p: &mut dyn ExampleSource,
        ex_q: &mut dyn ExampleSource,
        seeder: &mut Seeder,
    ) -> Result<PqOutcome>;

    /// Rough number of draws one call makes; sizes rejection-sampling caps
    /// in wrappers. Zero for learners that read exact laws.
    fn nominal_draws(&self, _epsilon: f64, _delta: f64) -> f64 {
        0.0
    }
}

impl<L: PqLearner + ?Sized> PqLearner for &L {
    fn learn(
        &self,
        epsilon: f64,
        delta: f64,
        ex_p: &mut dyn ExampleSource,
        ex_q: &mut dyn ExampleSource,
        seeder: &mut Seeder,
    ) -> Result<PqOutcome> {
        (**self).learn(epsilon, delta, ex_p, ex_q, seeder)
    }

    fn nominal_draws(&self, epsilon: f64, delta: f64) -> f64 {
        (**self).nominal_draws(epsilon, delta)
    }
}

/// Runs the inner learner at `ε/2` against `Q′ = ½P + ½Q`, so the result
/// also has small error under `P`.
#[derive(Debug, Clone)]
pub struct AugmentedPq<L> {
    inner: L,
}

pub fn augment_with_err_p<L: PqLearner>(inner: L) -> AugmentedPq<L> {
    AugmentedPq { inner }
}

impl<L: PqLearner> PqLearner for AugmentedPq<L> {
    fn learn(
        &self,
        epsilon: f64,
        delta: f64,
        ex_p: &mut dyn ExampleSource,
        ex_q: &mut dyn ExampleSource,
        seeder: &mut Seeder,
    ) -> Result<PqOutcome> {
        check_unit_open("epsilon", epsilon)?;
        let shared = Shared::new(ex_p);
        let mut q_prime = mixture(Unlabeled::new(shared.clone()), ex_q, 0.5, seeder.stream())?;
        let mut p = shared;
        self.inner.learn(epsilon / 2.0, delta, &mut p, &mut q_prime, seeder)
    }

    fn nominal_draws(&self, epsilon: f64, delta: f64) -> f64 {
        self.inner.nominal_draws(epsilon / 2.0, delta)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    /// Positives are too rare to matter.
    ConstantZero,
    /// Negatives are too rare to matter.
    ConstantOne,
    /// The PQ learner was run.
    Main,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReductionOutcome {
    pub hypothesis: Hypothesis,
    pub branch: Branch,
    pub pq: Option<PqOutcome>,
}

impl ReductionOutcome {
    fn constant(value: bool) -> Self {
        ReductionOutcome {
            hypothesis: Hypothesis::constant(value),
            branch: if value { Branch::ConstantOne } else { Branch::ConstantZero },
            pq: None,
        }
    }
}

const TRAIN_EVENT: &str = "train";
const TEST_EVENT: &str = "test";

pub fn pq_to_positive_reliable(
    pq: &dyn PqLearner,
    ex_d: &mut dyn ExampleSource,
    epsilon: f64,
    delta: f64,
    mode: Mode,
    seeder: &mut Seeder,
) -> Result<ReductionOutcome> {
    pq_to_reliable(Polarity::Positive, pq, ex_d, epsilon, delta, mode, seeder)
}

/// The mirror image: positives train, negatives test, ⊥ becomes 0.
pub fn pq_to_negative_reliable(
    pq: &dyn PqLearner,
    ex_d: &mut dyn ExampleSource,
    epsilon: f64,
    delta: f64,
    mode: Mode,
    seeder: &mut Seeder,
) -> Result<ReductionOutcome> {
    pq_to_reliable(Polarity::Negative, pq, ex_d, epsilon, delta, mode, seeder)
}

fn pq_to_reliable(
    polarity: Polarity,
    pq: &dyn PqLearner,
    ex_d: &mut dyn ExampleSource,
    epsilon: f64,
    delta: f64,
    mode: Mode,
    seeder: &mut Seeder,
) -> Result<ReductionOutcome> {
    check_unit_open("epsilon", epsilon)?;
    check_unit_open("delta", delta)?;
    // The label the training side carries; the test side has the other.
    let train = polarity == Polarity::Negative;

    let positive = Event::label(true);
    let (pr_one, threshold) = match mode {
        Mode::Exact => (ex_d.law()?.probability(&positive), epsilon / 2.0),
        Mode::Sampling => {
            let budget = EstimatorBudget::new(epsilon / 8.0, delta / 4.0)?;
            (estimate_prob(ex_d, &positive, &budget)?, 3.0 * epsilon / 8.0)
        }
    };
    let pr_train = if train { pr_one } else { 1.0 - pr_one };
    // Rare test labels first: the constant equal to the training label is
    // reliable on the constrained side.
    if 1.0 - pr_train <= threshold {
        return Ok(ReductionOutcome::constant(train));
    }
    if pr_train <= threshold {
        return Ok(ReductionOutcome::constant(!train));
    }

    let augmented = augment_with_err_p(pq);
    let cap = match mode {
        Mode::Exact => u64::MAX,
        Mode::Sampling => default_attempt_cap(epsilon / 2.0, augmented.nominal_draws(epsilon / 2.0, delta), delta),
    };
    let shared = Shared::new(ex_d);
    let mut ex_p = condition(shared.clone(), Event::label(train).named(TRAIN_EVENT), cap);
    let mut ex_q = Unlabeled::new(condition(shared, Event::label(!train).named(TEST_EVENT), cap));
    match augmented.learn(epsilon / 2.0, delta, &mut ex_p, &mut ex_q, seeder) {
        Ok(out) => Ok(ReductionOutcome {
            hypothesis: Hypothesis::collapse(out.hypothesis.clone(), !train),
            branch: Branch::Main,
            pq: Some(out),
        }),
        Err(Error::EventNegligible { event: TRAIN_EVENT, .. }) => Ok(ReductionOutcome::constant(!train)),
        Err(Error::EventNegligible { event: TEST_EVENT, .. }) => Ok(ReductionOutcome::constant(train)),
        Err(e) => Err(e),
    }
}
