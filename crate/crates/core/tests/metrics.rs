use std::sync::Arc;

use proptest::prelude::*;

use pqlearn_core::distribution::{Distribution, LabeledDistribution};
use pqlearn_core::domain::Universe;
use pqlearn_core::hypothesis::{Hypothesis, SelectiveHypothesis, TruthTable};
use pqlearn_core::metrics::{err, false_rates, rej, tv_distance};

const TOL: f64 = 1e-12;

fn weights(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(prop_oneof![Just(0.0), 1e-3..1.0f64], n)
        .prop_filter("some mass", |w| w.iter().any(|&v| v > 0.0))
}

fn bits(n: usize) -> impl Strategy<Value = Vec<bool>> {
    prop::collection::vec(any::<bool>(), n)
}

fn dist(u: &Arc<Universe>, w: &[f64]) -> Distribution {
    let total: f64 = w.iter().sum();
    Distribution::new(u.clone(), w.iter().enumerate().map(|(i, &v)| (i, v / total))).unwrap()
}

fn table(b: &[bool]) -> Hypothesis {
    Hypothesis::table(TruthTable::from_bits(b))
}

/// Size, two weight vectors, three truth tables and an abstention mask.
fn instance() -> impl Strategy<Value = (Vec<f64>, Vec<f64>, Vec<bool>, Vec<bool>, Vec<bool>)> {
    (1usize..40).prop_flat_map(|n| (weights(n), weights(n), bits(n), bits(n), bits(n)))
}

proptest! {
    #[test]
    fn error_is_false_positive_plus_false_negative((wp, _, f, h, _) in instance()) {
        let u = Universe::indexed(wp.len()).unwrap();
        let p = dist(&u, &wp);
        let (f, h) = (table(&f), table(&h));
        let r = false_rates(&LabeledDistribution::noiseless(p.clone(), f.clone()), &h).unwrap();
        prop_assert!((err(&p, &h, &f).unwrap() - r.positive - r.negative).abs() <= TOL);
    }

    #[test]
    fn rejection_transfers_through_total_variation((wp, wq, a, b, _) in instance()) {
        let u = Universe::indexed(wp.len()).unwrap();
        let (p, q) = (dist(&u, &wp), dist(&u, &wq));
        let h = SelectiveHypothesis::agreement(
            SelectiveHypothesis::Total(table(&a)),
            SelectiveHypothesis::Total(table(&b)),
        );
        prop_assert!(rej(&q, &h).unwrap() <= rej(&p, &h).unwrap() + tv_distance(&p, &q).unwrap() + TOL);
    }

    #[test]
    fn metrics_lie_in_the_unit_interval((wp, wq, f, a, b) in instance(), eta in 0.0..=1.0f64) {
        let u = Universe::indexed(wp.len()).unwrap();
        let (p, q) = (dist(&u, &wp), dist(&u, &wq));
        let h = SelectiveHypothesis::agreement(SelectiveHypothesis::Total(table(&a)), SelectiveHypothesis::Total(table(&b)));
        let eta: Vec<f64> = f.iter().map(|&y| if y { eta } else { 1.0 - eta }).collect();
        let f = table(&f);
        let noisy = LabeledDistribution::noisy(p.clone(), eta).unwrap();
        let r = false_rates(&noisy, &h).unwrap();
        for v in [err(&p, &h, &f).unwrap(), rej(&p, &h).unwrap(), tv_distance(&p, &q).unwrap(), r.positive, r.negative, r.total()] {
            prop_assert!((-TOL..=1.0 + TOL).contains(&v), "{v}");
        }
    }

    /// Renaming points by a permutation, applied to the distribution and
    /// hypotheses alike, leaves every metric unchanged.
    #[test]
    fn metrics_ignore_support_order((wp, wq, f, a, b) in instance(), seed in any::<u64>()) {
        let n = wp.len();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut s = seed;
        for i in (1..n).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            perm.swap(i, (s >> 33) as usize % (i + 1));
        }
        let u = Universe::indexed(n).unwrap();
        let permute_w = |w: &[f64]| { let mut o = vec![0.0; n]; for i in 0..n { o[perm[i]] = w[i]; } o };
        let permute_b = |v: &[bool]| { let mut o = vec![false; n]; for i in 0..n { o[perm[i]] = v[i]; } o };
        let eval = |wp: &[f64], wq: &[f64], f: &[bool], a: &[bool], b: &[bool]| {
            let (p, q) = (dist(&u, wp), dist(&u, wq));
            let h = SelectiveHypothesis::agreement(SelectiveHypothesis::Total(table(a)), SelectiveHypothesis::Total(table(b)));
            let f = table(f);
            let r = false_rates(&LabeledDistribution::noiseless(p.clone(), f.clone()), &h).unwrap();
            [err(&p, &h, &f).unwrap(), rej(&q, &h).unwrap(), tv_distance(&p, &q).unwrap(), r.positive, r.negative]
        };
        let before = eval(&wp, &wq, &f, &a, &b);
        let after = eval(&permute_w(&wp), &permute_w(&wq), &permute_b(&f), &permute_b(&a), &permute_b(&b));
        for (x, y) in before.iter().zip(after) {
            prop_assert!((x - y).abs() <= TOL);
        }
    }
}

#[test]
fn fig1a_rejection_and_distance() {
    let u = Universe::indexed(4).unwrap();
    let p = Distribution::uniform(u.clone(), &[0, 1]).unwrap();
    let q = Distribution::uniform_all(u.clone()).unwrap();
    let reject_v = SelectiveHypothesis::agreement(
        SelectiveHypothesis::Total(table(&[true, false, true, true])),
        SelectiveHypothesis::Total(table(&[true, false, false, false])),
    );
    assert_eq!(rej(&p, &reject_v).unwrap(), 0.0);
    assert_eq!(rej(&q, &reject_v).unwrap(), 0.5);
    assert_eq!(tv_distance(&p, &q).unwrap(), 0.5);
}
