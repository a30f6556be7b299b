//! Example oracles, their combinators, and Hoeffding-calibrated probability
//! estimation.
//!
//! Every oracle answers single draws and batched draws. A batch returns the
//! per-point label counts of `n` consecutive draws; for finite sources the
//! counts are generated by sequential binomial splitting, which has the same
//! distribution as drawing one example at a time.

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::fmt;
use std::rc::Rc;
use std::sync::Arc;

use rand::Rng;
use rand_distr::{Binomial, Distribution as _};

use crate::distribution::{Distribution, LabeledDistribution, Labeler, Law, Tally};
use crate::domain::{Point, Universe};
use crate::error::{check_unit_open, Error, Result};
use crate::rng::Stream;

type EventFn = dyn Fn(&Point, Option<bool>) -> bool + Send + Sync;

/// A named predicate on a (point, label) pair.
#[derive(Clone)]
pub struct Event {
    name: &'static str,
    test: Arc<EventFn>,
}

impl Event {
    pub fn new(name: &'static str, f: impl Fn(&Point, Option<bool>) -> bool + Send + Sync + 'static) -> Self {
        Event { name, test: Arc::new(f) }
    }

    pub fn on_point(name: &'static str, f: impl Fn(&Point) -> bool + Send + Sync + 'static) -> Self {
        Self::new(name, move |x, _| f(x))
    }

    /// The observed label equals `label`.
    pub fn label(label: bool) -> Self {
        Self::new(if label { "y=1" } else { "y=0" }, move |_, y| y == Some(label))
    }

    pub fn always() -> Self {
        Self::new("always", |_, _| true)
    }

    pub fn named(mut self, name: &'static str) -> Self {
        self.name = name;
        self
    }

    pub fn name(&self) -> &'static str {
        self.name
    }

    #[inline]
    pub fn holds(&self, x: &Point, y: Option<bool>) -> bool {
        (self.test)(x, y)
    }
}

impl fmt::Debug for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Event({})", self.name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Example {
    pub x: usize,
    pub y: Option<bool>,
}

/// Label counts per point for a batch of draws.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Sample {
    tallies: BTreeMap<usize, Tally<u64>>,
    size: u64,
}

impl Sample {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: usize, y: Option<bool>, count: u64) {
        if count == 0 {
            return;
        }
        self.tallies.entry(x).or_default().add(&Tally::of_label(y, count));
        self.size += count;
    }

    pub fn push(&mut self, e: Example) {
        self.add(e.x, e.y, 1);
    }

    pub fn merge(&mut self, other: Sample) {
        for (x, t) in other.tallies {
            self.tallies.entry(x).or_default().add(&t);
        }
        self.size += other.size;
    }

    pub fn size(&self) -> u64 {
        self.size
    }

    pub fn tallies(&self) -> &BTreeMap<usize, Tally<u64>> {
        &self.tallies
    }

    pub fn count(&self, universe: &Universe, event: &Event) -> u64 {
        let mut n = 0;
        for (&x, t) in &self.tallies {
            let p = universe.point(x);
            for (y, c) in t.parts() {
                if c > 0 && event.holds(p, y) {
                    n += c;
                }
            }
        }
        n
    }

    fn filter(self, universe: &Universe, event: &Event) -> Sample {
        let mut out = Sample::new();
        for (x, t) in self.tallies {
            let p = universe.point(x);
            for (y, c) in t.parts() {
                if c > 0 && event.holds(p, y) {
                    out.add(x, y, c);
                }
            }
        }
        out
    }

    fn map(self, f: impl Fn(&Tally<u64>) -> Tally<u64>) -> Sample {
        Sample {
            tallies: self.tallies.into_iter().map(|(x, t)| (x, f(&t))).collect(),
            size: self.size,
        }
    }
}

/// A stateful source of examples.
pub trait ExampleSource {
    fn universe(&self) -> &Arc<Universe>;

    fn draw(&mut self) -> Result<Example>;

    fn draw_batch(&mut self, n: u64) -> Result<Sample> {
        let mut s = Sample::new();
        for _ in 0..n {
            s.push(self.draw()?);
        }
        Ok(s)
    }

    /// Total number of underlying draws consumed so far.
    fn draws(&self) -> u64;

    /// The exact law of one draw, when the source is exact.
    fn law(&self) -> Result<Law>;
}

impl<S: ExampleSource + ?Sized> ExampleSource for &mut S {
    fn universe(&self) -> &Arc<Universe> {
        (**self).universe()
    }
    fn draw(&mut self) -> Result<Example> {
        (**self).draw()
    }
    fn draw_batch(&mut self, n: u64) -> Result<Sample> {
        (**self).draw_batch(n)
    }
    fn draws(&self) -> u64 {
        (**self).draws()
    }
    fn law(&self) -> Result<Law> {
        (**self).law()
    }
}

impl<S: ExampleSource + ?Sized> ExampleSource for Box<S> {
    fn universe(&self) -> &Arc<Universe> {
        (**self).universe()
    }
    fn draw(&mut self) -> Result<Example> {
        (**self).draw()
    }
    fn draw_batch(&mut self, n: u64) -> Result<Sample> {
        (**self).draw_batch(n)
    }
    fn draws(&self) -> u64 {
        (**self).draws()
    }
    fn law(&self) -> Result<Law> {
        (**self).law()
    }
}

pub(crate) fn binomial(rng: &mut Stream, n: u64, p: f64) -> u64 {
    if n == 0 || p <= 0.0 {
        0
    } else if p >= 1.0 {
        n
    } else {
        Binomial::new(n, p).expect("p checked to lie in (0, 1)").sample(rng)
    }
}

/// Counts of `n` categorical draws with the given weights.
fn multinomial(rng: &mut Stream, n: u64, weights: &[f64]) -> Vec<u64> {
    let mut suffix = vec![0.0; weights.len() + 1];
    for i in (0..weights.len()).rev() {
        suffix[i] = suffix[i + 1] + weights[i];
    }
    let mut left = n;
    let mut out = Vec::with_capacity(weights.len());
    for (i, &w) in weights.iter().enumerate() {
        let k = if i + 1 == weights.len() { left } else { binomial(rng, left, w / suffix[i]) };
        out.push(k);
        left -= k;
    }
    out
}

#[derive(Debug, Clone)]
enum Base {
    Labeled(LabeledDistribution),
    Unlabeled(Distribution),
}

/// `EX(P, f)` or `EX(P)` over a distribution, with its own random stream.
#[derive(Debug, Clone)]
pub struct ExampleOracle {
    base: Base,
    stream: Stream,
    draws: u64,
}

impl ExampleOracle {
    pub fn labeled(d: LabeledDistribution, stream: Stream) -> Self {
        ExampleOracle { base: Base::Labeled(d), stream, draws: 0 }
    }

    pub fn unlabeled(p: Distribution, stream: Stream) -> Self {
        ExampleOracle { base: Base::Unlabeled(p), stream, draws: 0 }
    }

    fn marginal(&self) -> &Distribution {
        match &self.base {
            Base::Labeled(d) => d.marginal(),
            Base::Unlabeled(p) => p,
        }
    }
}

impl ExampleSource for ExampleOracle {
    fn universe(&self) -> &Arc<Universe> {
        self.marginal().universe()
    }

    fn draw(&mut self) -> Result<Example> {
        self.draws += 1;
        Ok(match &self.base {
            Base::Labeled(d) => {
                let (x, y) = d.sample(&mut self.stream);
                Example { x, y: Some(y) }
            }
            Base::Unlabeled(p) => Example { x: p.sample(&mut self.stream), y: None },
        })
    }

    fn draw_batch(&mut self, n: u64) -> Result<Sample> {
        if !self.marginal().is_exact() {
            let mut s = Sample::new();
            for _ in 0..n {
                s.push(self.draw()?);
            }
            return Ok(s);
        }
        let (ids, weights): (Vec<usize>, Vec<f64>) = self.marginal().support()?.unzip();
        let counts = multinomial(&mut self.stream, n, &weights);
        self.draws += n;
        let mut s = Sample::new();
        for (&x, &k) in ids.iter().zip(&counts) {
            if k == 0 {
                continue;
            }
            match &self.base {
                Base::Unlabeled(_) => s.add(x, None, k),
                Base::Labeled(d) => {
                    let pos = match d.labeler() {
                        Labeler::Target(f) => {
                            if f.eval(d.universe().point(x)) {
                                k
                            } else {
                                0
                            }
                        }
                        Labeler::Conditional(p) => binomial(&mut self.stream, k, p[x]),
                    };
                    s.add(x, Some(true), pos);
                    s.add(x, Some(false), k - pos);
                }
            }
        }
        Ok(s)
    }

    fn draws(&self) -> u64 {
        self.draws
    }

    fn law(&self) -> Result<Law> {
        match &self.base {
            Base::Labeled(d) => Law::labeled(d),
            Base::Unlabeled(p) => Law::unlabeled(p),
        }
    }
}

/// `alpha · o1 + (1 − alpha) · o2`.
#[derive(Debug)]
pub struct Mixture<A, B> {
    first: A,
    second: B,
    alpha: f64,
    stream: Stream,
}

pub fn mixture<A: ExampleSource, B: ExampleSource>(
    first: A,
    second: B,
    alpha: f64,
    stream: Stream,
) -> Result<Mixture<A, B>> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidParameter(format!("mixture weight {alpha} outside [0, 1]")));
    }
    Ok(Mixture { first, second, alpha, stream })
}

impl<A: ExampleSource, B: ExampleSource> ExampleSource for Mixture<A, B> {
    fn universe(&self) -> &Arc<Universe> {
        self.first.universe()
    }

    fn draw(&mut self) -> Result<Example> {
        if self.stream.gen_bool(self.alpha) {
            self.first.draw()
        } else {
            self.second.draw()
        }
    }

    fn draw_batch(&mut self, n: u64) -> Result<Sample> {
        let k = binomial(&mut self.stream, n, self.alpha);
        let mut s = self.first.draw_batch(k)?;
        s.merge(self.second.draw_batch(n - k)?);
        Ok(s)
    }

    fn draws(&self) -> u64 {
        self.first.draws() + self.second.draws()
    }

    fn law(&self) -> Result<Law> {
        if self.alpha == 1.0 {
            self.first.law()
        } else if self.alpha == 0.0 {
            self.second.law()
        } else {
            Law::mix(&self.first.law()?, &self.second.law()?, self.alpha)
        }
    }
}

/// `o|_A`: rejection sampling until the event holds.
///
/// A single draw gives up with [`Error::EventNegligible`] after
/// `attempt_cap` consecutive misses. Batched draws see only whole rounds,
/// so they report a miss streak once an entire round (or consecutive
/// rounds) of at least `attempt_cap` draws produced no hit.
#[derive(Debug)]
pub struct Conditioned<S> {
    inner: S,
    event: Event,
    attempt_cap: u64,
    universe: Arc<Universe>,
}

/// Batches shorter than this are finished one draw at a time.
const SEQUENTIAL_TAIL: u64 = 32;

pub fn condition<S: ExampleSource>(inner: S, event: Event, attempt_cap: u64) -> Conditioned<S> {
    let universe = inner.universe().clone();
    Conditioned { inner, event, attempt_cap: attempt_cap.max(1), universe }
}

impl<S: ExampleSource> Conditioned<S> {
    fn negligible(&self, attempts: u64) -> Error {
        Error::EventNegligible { event: self.event.name(), attempts }
    }
}

impl<S: ExampleSource> ExampleSource for Conditioned<S> {
    fn universe(&self) -> &Arc<Universe> {
        &self.universe
    }

    fn draw(&mut self) -> Result<Example> {
        for _ in 0..self.attempt_cap {
            let e = self.inner.draw()?;
            if self.event.holds(self.universe.point(e.x), e.y) {
                return Ok(e);
            }
        }
        Err(self.negligible(self.attempt_cap))
    }

    fn draw_batch(&mut self, n: u64) -> Result<Sample> {
        let mut out = Sample::new();
        let mut remaining = n;
        let mut streak = 0u64;
        let mut round = remaining.min(self.attempt_cap);
        while remaining > SEQUENTIAL_TAIL {
            let kept = self.inner.draw_batch(round)?.filter(&self.universe, &self.event);
            if kept.size() == 0 {
                streak += round;
                if streak >= self.attempt_cap {
                    return Err(self.negligible(streak));
                }
            } else {
                streak = 0;
            }
            remaining -= kept.size();
            out.merge(kept);
            round = remaining;
        }
        for _ in 0..remaining {
            out.push(self.draw()?);
        }
        Ok(out)
    }

    fn draws(&self) -> u64 {
        self.inner.draws()
    }

    fn law(&self) -> Result<Law> {
        self.inner.law()?.condition(&self.event)
    }
}

/// Replaces every label with a constant, e.g. `EX(Q|E, 1)`.
#[derive(Debug)]
pub struct Relabeled<S> {
    inner: S,
    label: bool,
}

impl<S: ExampleSource> Relabeled<S> {
    pub fn new(inner: S, label: bool) -> Self {
        Relabeled { inner, label }
    }
}

impl<S: ExampleSource> ExampleSource for Relabeled<S> {
    fn universe(&self) -> &Arc<Universe> {
        self.inner.universe()
    }
    fn draw(&mut self) -> Result<Example> {
        let e = self.inner.draw()?;
        Ok(Example { x: e.x, y: Some(self.label) })
    }
    fn draw_batch(&mut self, n: u64) -> Result<Sample> {
        let label = self.label;
        Ok(self.inner.draw_batch(n)?.map(|t| Tally::of_label(Some(label), t.total())))
    }
    fn draws(&self) -> u64 {
        self.inner.draws()
    }
    fn law(&self) -> Result<Law> {
        Ok(self.inner.law()?.relabel(self.label))
    }
}

/// Drops labels, e.g. the input part of `EX(D)`.
#[derive(Debug)]
pub struct Unlabeled<S> {
    inner: S,
}

impl<S: ExampleSource> Unlabeled<S> {
    pub fn new(inner: S) -> Self {
        Unlabeled { inner }
    }
}

impl<S: ExampleSource> ExampleSource for Unlabeled<S> {
    fn universe(&self) -> &Arc<Universe> {
        self.inner.universe()
    }
    fn draw(&mut self) -> Result<Example> {
        Ok(Example { x: self.inner.draw()?.x, y: None })
    }
    fn draw_batch(&mut self, n: u64) -> Result<Sample> {
        Ok(self.inner.draw_batch(n)?.map(|t| Tally::of_label(None, t.total())))
    }
    fn draws(&self) -> u64 {
        self.inner.draws()
    }
    fn law(&self) -> Result<Law> {
        Ok(self.inner.law()?.unlabel())
    }
}

/// Swaps labels 0 and 1.
#[derive(Debug)]
pub struct Flipped<S> {
    inner: S,
}

impl<S: ExampleSource> Flipped<S> {
    pub fn new(inner: S) -> Self {
        Flipped { inner }
    }
}

impl<S: ExampleSource> ExampleSource for Flipped<S> {
    fn universe(&self) -> &Arc<Universe> {
        self.inner.universe()
    }
    fn draw(&mut self) -> Result<Example> {
        let e = self.inner.draw()?;
        Ok(Example { x: e.x, y: e.y.map(|y| !y) })
    }
    fn draw_batch(&mut self, n: u64) -> Result<Sample> {
        Ok(self.inner.draw_batch(n)?.map(Tally::flipped))
    }
    fn draws(&self) -> u64 {
        self.inner.draws()
    }
    fn law(&self) -> Result<Law> {
        Ok(self.inner.law()?.flip())
    }
}

/// One oracle consumed from several places within a single thread.
pub struct Shared<S> {
    inner: Rc<RefCell<S>>,
    universe: Arc<Universe>,
}

impl<S: ExampleSource> Shared<S> {
    pub fn new(inner: S) -> Self {
        let universe = inner.universe().clone();
        Shared { inner: Rc::new(RefCell::new(inner)), universe }
    }
}

impl<S> Clone for Shared<S> {
    fn clone(&self) -> Self {
        Shared { inner: self.inner.clone(), universe: self.universe.clone() }
    }
}

impl<S: ExampleSource> ExampleSource for Shared<S> {
    fn universe(&self) -> &Arc<Universe> {
        &self.universe
    }
    fn draw(&mut self) -> Result<Example> {
        self.inner.borrow_mut().draw()
    }
    fn draw_batch(&mut self, n: u64) -> Result<Sample> {
        self.inner.borrow_mut().draw_batch(n)
    }
    fn draws(&self) -> u64 {
        self.inner.borrow().draws()
    }
    fn law(&self) -> Result<Law> {
        self.inner.borrow().law()
    }
}

/// Sample size for an additive-accuracy estimate: `⌈ln(2/δ) / (2α²)⌉`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorBudget {
    accuracy: f64,
    confidence: f64,
    samples: u64,
}

impl EstimatorBudget {
    pub fn new(accuracy: f64, confidence: f64) -> Result<Self> {
        check_unit_open("accuracy", accuracy)?;
        check_unit_open("confidence", confidence)?;
        let m = ((2.0 / confidence).ln() / (2.0 * accuracy * accuracy)).ceil();
        if !m.is_finite() || m > u64::MAX as f64 {
            return Err(Error::InvalidParameter(format!("sample size {m} not representable")));
        }
        Ok(EstimatorBudget { accuracy, confidence, samples: (m as u64).max(1) })
    }

    pub fn accuracy(&self) -> f64 {
        self.accuracy
    }

    pub fn confidence(&self) -> f64 {
        self.confidence
    }

    pub fn samples(&self) -> u64 {
        self.samples
    }
}

/// Empirical frequency of `event` over exactly `budget.samples()` draws.
pub fn estimate_prob<S: ExampleSource + ?Sized>(o: &mut S, event: &Event, budget: &EstimatorBudget) -> Result<f64> {
    let sample = o.draw_batch(budget.samples())?;
    Ok(sample.count(o.universe(), event) as f64 / budget.samples() as f64)
}

/// `⌈(8/ε)·ln(2·total_draws/δ)⌉`: per-draw failure probability is tiny
/// whenever the conditioning event has mass at least `ε/2`.
pub fn default_attempt_cap(epsilon: f64, total_draws: f64, delta: f64) -> u64 {
    let cap = (8.0 / epsilon) * (2.0 * total_draws.max(1.0) / delta).ln();
    cap.ceil().clamp(1.0, u64::MAX as f64) as u64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hypothesis::Hypothesis;
    use crate::rng::stream;

    fn uniform(n: usize) -> Distribution {
        Distribution::uniform_all(Universe::indexed(n).unwrap()).unwrap()
    }

    #[test]
    fn hoeffding_sample_size() {
        assert_eq!(EstimatorBudget::new(0.1, 0.05).unwrap().samples(), 185);
        assert!(EstimatorBudget::new(0.0, 0.05).is_err());
        assert!(EstimatorBudget::new(0.1, 1.0).is_err());
    }

    #[test]
    fn constant_true_event_estimates_one() {
        let mut o = ExampleOracle::unlabeled(uniform(3), stream(1, 0));
        let b = EstimatorBudget::new(0.1, 0.05).unwrap();
        assert_eq!(estimate_prob(&mut o, &Event::always(), &b).unwrap(), 1.0);
        assert_eq!(o.draws(), 185);
    }

    #[test]
    fn mixture_extremes_delegate() {
        let u = Universe::indexed(4).unwrap();
        let p = Distribution::uniform(u.clone(), &[0, 1]).unwrap();
        let q = Distribution::uniform(u, &[2, 3]).unwrap();
        let mut solo = ExampleOracle::unlabeled(p.clone(), stream(3, 0));
        let mut mix = mixture(
            ExampleOracle::unlabeled(p, stream(3, 0)),
            ExampleOracle::unlabeled(q, stream(3, 1)),
            1.0,
            stream(3, 2),
        )
        .unwrap();
        for _ in 0..50 {
            assert_eq!(solo.draw().unwrap(), mix.draw().unwrap());
        }
        assert!(mixture(solo, mix, 1.5, stream(0, 0)).is_err());
    }

    #[test]
    fn condition_cap_is_exact() {
        let mut o = condition(
            ExampleOracle::unlabeled(uniform(4), stream(5, 0)),
            Event::on_point("never", |_| false),
            100,
        );
        assert_eq!(o.draw().unwrap_err(), Error::EventNegligible { event: "never", attempts: 100 });
        assert_eq!(o.draws(), 100);
        let mut batch = condition(
            ExampleOracle::unlabeled(uniform(4), stream(5, 1)),
            Event::on_point("never", |_| false),
            100,
        );
        assert!(matches!(batch.draw_batch(10_000), Err(Error::EventNegligible { attempts: 100, .. })));
        assert_eq!(batch.draws(), 100);
    }

    #[test]
    fn always_true_condition_is_transparent() {
        let mut a = ExampleOracle::unlabeled(uniform(4), stream(9, 0));
        let mut b = condition(ExampleOracle::unlabeled(uniform(4), stream(9, 0)), Event::always(), 10);
        for _ in 0..20 {
            assert_eq!(a.draw().unwrap(), b.draw().unwrap());
        }
        assert_eq!(b.draws(), 20);
    }

    #[test]
    fn batch_counts_have_the_right_size() {
        let p = uniform(6);
        let f = Hypothesis::table(crate::hypothesis::TruthTable::from_bits(&[true, false, true, false, true, false]));
        let mut o = ExampleOracle::labeled(LabeledDistribution::noiseless(p, f), stream(2, 0));
        let s = o.draw_batch(1_000_000).unwrap();
        assert_eq!(s.size(), 1_000_000);
        assert_eq!(o.draws(), 1_000_000);
        let pos = s.count(o.universe(), &Event::label(true));
        assert!((pos as f64 / 1e6 - 0.5).abs() < 0.005);
    }

    #[test]
    fn conditioned_batch_matches_law() {
        let mut o = condition(
            ExampleOracle::unlabeled(uniform(4), stream(11, 0)),
            Event::on_point("even", |x| x.id % 2 == 0),
            1000,
        );
        let s = o.draw_batch(200_000).unwrap();
        assert_eq!(s.size(), 200_000);
        assert!(s.tallies().keys().all(|x| x % 2 == 0));
        // About two underlying draws per accepted example.
        let ratio = o.draws() as f64 / 200_000.0;
        assert!((ratio - 2.0).abs() < 0.02, "ratio {ratio}");
        let law = o.law().unwrap();
        assert_eq!(law.entries().len(), 2);
    }

    #[test]
    fn same_seed_same_sequence() {
        let run = |seed| {
            let mut o = mixture(
                ExampleOracle::unlabeled(uniform(5), stream(seed, 0)),
                ExampleOracle::unlabeled(uniform(5), stream(seed, 1)),
                0.3,
                stream(seed, 2),
            )
            .unwrap();
            let v: Vec<_> = (0..100).map(|_| o.draw().unwrap()).collect();
            (v, o.draw_batch(1000).unwrap(), o.draws())
        };
        assert_eq!(run(4), run(4));
        assert_ne!(run(4).0, run(5).0);
    }
}
