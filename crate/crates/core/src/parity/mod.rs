//! Parities over GF(2) and their PQ learner.

mod gf2;

pub use gf2::{gf2_solve, span_membership, BitVector, Gf2Basis};

use serde::{Deserialize, Serialize};

use crate::domain::Point;
use crate::error::{check_unit_open, Error, Result};
use crate::hypothesis::{Classifier, Hypothesis, SelectiveHypothesis};
use crate::oracle::ExampleSource;
use crate::reduction::{PqLearner, PqOutcome};
use crate::rng::Seeder;

/// `x ↦ w·x` over GF(2); `w = 0` is the constant 0 function.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParityHypothesis {
    pub w: BitVector,
}

impl ParityHypothesis {
    pub fn eval(&self, x: &BitVector) -> bool {
        self.w.dot(x)
    }

    pub fn into_hypothesis(self) -> Hypothesis {
        Hypothesis::parity(self.w)
    }
}

/// Predicts `ĉ(x)` on the span of the training inputs and abstains off it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpanClassifier {
    pub parity: ParityHypothesis,
    pub basis: Gf2Basis,
}

impl Classifier for SpanClassifier {
    fn predict(&self, x: &Point) -> Option<bool> {
        let b = x.bits()?;
        match span_membership(&self.basis, b) {
            Ok(true) => Some(self.parity.eval(b)),
            _ => None,
        }
    }
}

/// `⌈(2/ε)·(d·ln 2 + ln(1/δ))⌉`.
pub fn parity_sample_size(epsilon: f64, delta: f64, dim: usize) -> u64 {
    ((2.0 / epsilon) * (dim as f64 * std::f64::consts::LN_2 + (1.0 / delta).ln())).ceil() as u64
}

/// Solves for a parity consistent with `m` labeled draws from `ex_p` and
/// answers only on their span. Test inputs are never needed.
pub fn pq_learn_parity<S: ExampleSource + ?Sized>(
    epsilon: f64,
    delta: f64,
    ex_p: &mut S,
    dim: usize,
) -> Result<SpanClassifier> {
    check_unit_open("epsilon", epsilon)?;
    check_unit_open("delta", delta)?;
    let universe = ex_p.universe().clone();
    if universe.dimension() != dim || universe.points().first().and_then(Point::bits).is_none() {
        return Err(Error::DimensionMismatch { expected: dim, found: universe.dimension() });
    }
    let sample = ex_p.draw_batch(parity_sample_size(epsilon, delta, dim))?;
    let mut rows = Vec::with_capacity(sample.tallies().len());
    for (&x, t) in sample.tallies() {
        let bits = universe.point(x).bits().expect("bit universe").clone();
        if t.unlabeled > 0 {
            return Err(Error::Unlabeled);
        }
        // Duplicates add nothing, but contradictory labels must surface.
        if t.neg > 0 {
            rows.push((bits.clone(), false));
        }
        if t.pos > 0 {
            rows.push((bits, true));
        }
    }
    let w = gf2_solve(dim, &rows)?;
    let basis = Gf2Basis::span_of(dim, rows.iter().map(|(x, _)| x))?;
    Ok(SpanClassifier { parity: ParityHypothesis { w }, basis })
}

/// [`pq_learn_parity`] behind the generic PQ-learner interface.
#[derive(Debug, Clone, Copy, Default)]
pub struct ParityPq;

impl PqLearner for ParityPq {
    fn learn(
        &self,
        epsilon: f64,
        delta: f64,
        ex_p: &mut dyn ExampleSource,
        _ex_q: &mut dyn ExampleSource,
        _seeder: &mut Seeder,
    ) -> Result<PqOutcome> {
        let dim = ex_p.universe().dimension();
        let h = pq_learn_parity(epsilon, delta, ex_p, dim)?;
        Ok(PqOutcome::plain(SelectiveHypothesis::Span(h)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distribution::{Distribution, LabeledDistribution};
    use crate::domain::Universe;
    use crate::metrics::{err, rej};
    use crate::oracle::ExampleOracle;
    use crate::rng::stream;

    fn id(u: &Universe, s: &str) -> usize {
        let b = BitVector::parse(s).unwrap();
        u.points().iter().position(|p| p.bits() == Some(&b)).unwrap()
    }

    #[test]
    fn sample_size_formula() {
        // (2/0.1)(16 ln 2 + ln 10) = 20 · 13.392… = 267.8…
        assert_eq!(parity_sample_size(0.1, 0.1, 16), 268);
    }

    #[test]
    fn three_bit_example() {
        let u = Universe::cube(3).unwrap();
        let p = Distribution::uniform(u.clone(), &[id(&u, "110"), id(&u, "011")]).unwrap();
        let q = Distribution::uniform_all(u.clone()).unwrap();
        let f = Hypothesis::parity(BitVector::parse("100").unwrap());
        let mut o = ExampleOracle::labeled(LabeledDistribution::noiseless(p.clone(), f.clone()), stream(1, 0));
        let h = pq_learn_parity(0.1, 0.1, &mut o, 3).unwrap();
        let span: Vec<String> = h.basis.elements().iter().map(|b| b.to_string()).collect();
        let mut span = span;
        span.sort();
        assert_eq!(span, ["000", "011", "101", "110"]);
        assert_eq!(err(&q, &h, &f).unwrap(), 0.0);
        assert_eq!(rej(&p, &h).unwrap(), 0.0);
        assert_eq!(rej(&q, &h).unwrap(), 0.5);
    }

    #[test]
    fn full_rank_support_recovers_target() {
        let u = Universe::cube(4).unwrap();
        let p = Distribution::uniform_all(u.clone()).unwrap();
        let f = Hypothesis::parity(BitVector::parse("1011").unwrap());
        let mut o = ExampleOracle::labeled(LabeledDistribution::noiseless(p.clone(), f.clone()), stream(2, 0));
        let h = pq_learn_parity(0.1, 0.1, &mut o, 4).unwrap();
        assert_eq!(h.basis.rank(), 4);
        assert_eq!(h.parity.w, BitVector::parse("1011").unwrap());
        assert_eq!(rej(&p, &h).unwrap(), 0.0);
    }

    #[test]
    fn non_bit_universe_is_rejected() {
        let u = Universe::indexed(4).unwrap();
        let p = Distribution::uniform_all(u).unwrap();
        let mut o = ExampleOracle::unlabeled(p, stream(0, 0));
        assert!(pq_learn_parity(0.1, 0.1, &mut o, 4).is_err());
    }
}
