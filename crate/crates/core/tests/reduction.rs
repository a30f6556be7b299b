use std::sync::Arc;

use proptest::prelude::*;

use pqlearn_core::distribution::{Distribution, LabeledDistribution};
use pqlearn_core::domain::Universe;
use pqlearn_core::harness::brute::opt_plus;
use pqlearn_core::harness::instances::{labeled, noisy_labels, random_instance, Noise};
use pqlearn_core::hypothesis::{Classifier, Hypothesis, MaterializedClass, TruthTable};
use pqlearn_core::metrics::{err, false_rates, rej};
use pqlearn_core::oracle::ExampleOracle;
use pqlearn_core::reduction::{augment_with_err_p, pq_to_negative_reliable, pq_to_positive_reliable, Branch, PqLearner};
use pqlearn_core::reliable::{CostSensitiveReliable, ExhaustiveReliable, Polarity};
use pqlearn_core::rng::{stream, Seeder};
use pqlearn_core::slicedice::{Mode, SliceAndDice};

const EPS: f64 = 0.1;
const DELTA: f64 = 0.1;

fn exact_sd(class: &Arc<MaterializedClass>) -> SliceAndDice {
    SliceAndDice::new(Arc::new(ExhaustiveReliable::new(class.clone())), Mode::Exact)
}

fn flip(d: &LabeledDistribution) -> LabeledDistribution {
    let eta = d.universe().points().iter().map(|x| 1.0 - d.positive_probability(x)).collect();
    LabeledDistribution::noisy(d.marginal().clone(), eta).unwrap()
}

fn noisy(seed: u64, noise: Noise) -> (Arc<MaterializedClass>, LabeledDistribution) {
    let mut rng = stream(seed, 0);
    let inst = random_instance(&mut rng, 32, 100);
    let eta = noisy_labels(&mut rng, &inst.universe, &inst.target, noise);
    (inst.class, labeled(&inst.p, eta))
}

/// Two points with `Pr[y = 1] = p1`.
fn biased(p1: f64) -> (Arc<MaterializedClass>, LabeledDistribution) {
    let u = Universe::indexed(2).unwrap();
    let class = MaterializedClass::from_tables(u.clone(), vec![TruthTable::zeros(2), TruthTable::zeros(2).complement(), TruthTable::from_bits(&[false, true])]);
    let f = Hypothesis::table(TruthTable::from_bits(&[false, true]));
    let d = LabeledDistribution::noiseless(Distribution::from_dense(u, &[1.0 - p1, p1]).unwrap(), f);
    (Arc::new(class), d)
}

#[test]
fn rare_positives_give_constant_zero() {
    let (class, d) = biased(0.01);
    for mode in [Mode::Exact, Mode::Sampling] {
        let mut ex = ExampleOracle::labeled(d.clone(), stream(1, 0));
        let out = pq_to_positive_reliable(&exact_sd(&class), &mut ex, EPS, DELTA, mode, &mut Seeder::new(1)).unwrap();
        assert_eq!(out.branch, Branch::ConstantZero, "{mode:?}");
        let r = false_rates(&d, &out.hypothesis).unwrap();
        assert_eq!(r.positive, 0.0);
        assert!((r.negative - 0.01).abs() < 1e-12);
    }
}

#[test]
fn rare_negatives_give_constant_one_for_negative_reliability() {
    let (class, d) = biased(0.97);
    let mut ex = ExampleOracle::labeled(d.clone(), stream(1, 0));
    let out = pq_to_negative_reliable(&exact_sd(&class), &mut ex, EPS, DELTA, Mode::Exact, &mut Seeder::new(1)).unwrap();
    assert_eq!(out.branch, Branch::ConstantOne);
    assert_eq!(false_rates(&d, &out.hypothesis).unwrap().negative, 0.0);
}

#[test]
fn noiseless_balanced_instances_are_learned() {
    for seed in 0..100 {
        let (class, d) = noisy(seed, Noise::None);
        let sd = exact_sd(&class);
        let mut ex = ExampleOracle::labeled(d.clone(), stream(seed, 1));
        let pos = pq_to_positive_reliable(&sd, &mut ex, EPS, DELTA, Mode::Exact, &mut Seeder::new(seed)).unwrap();
        let mut ex = ExampleOracle::labeled(d.clone(), stream(seed, 1));
        let neg = pq_to_negative_reliable(&sd, &mut ex, EPS, DELTA, Mode::Exact, &mut Seeder::new(seed)).unwrap();
        for h in [pos.hypothesis, neg.hypothesis] {
            assert!(false_rates(&d, &h).unwrap().total() <= EPS + 1e-12, "seed {seed}");
        }
    }
}

#[test]
fn negative_reduction_is_the_flipped_positive_reduction() {
    for seed in 0..100 {
        let (class, d) = noisy(seed, Noise::TwoSided { flip_positive: 0.15, flip_negative: 0.1 });
        let mut ex = ExampleOracle::labeled(d.clone(), stream(seed, 1));
        let neg = pq_to_negative_reliable(&exact_sd(&class), &mut ex, EPS, DELTA, Mode::Exact, &mut Seeder::new(seed)).unwrap();
        let complement = Arc::new(class.complement());
        let sd = exact_sd(&complement).with_base_polarity(Polarity::Negative);
        let mut ex = ExampleOracle::labeled(flip(&d), stream(seed, 1));
        let pos = pq_to_positive_reliable(&sd, &mut ex, EPS, DELTA, Mode::Exact, &mut Seeder::new(seed)).unwrap();
        let u = d.universe();
        assert_eq!(neg.branch, pos.branch, "seed {seed}");
        assert_eq!(neg.hypothesis.truth_table(u), pos.hypothesis.complement().truth_table(u), "seed {seed}");
    }
}

#[test]
fn one_sided_noise_stays_within_opt_plus() {
    let mut ok = 0;
    for seed in 0..100 {
        let (class, d) = noisy(seed, Noise::OneSided(0.2));
        let mut ex = ExampleOracle::labeled(d.clone(), stream(seed, 1));
        let g = pq_to_positive_reliable(&exact_sd(&class), &mut ex, EPS, DELTA, Mode::Exact, &mut Seeder::new(seed)).unwrap();
        let r = false_rates(&d, &g.hypothesis).unwrap();
        ok += usize::from(r.positive <= EPS && r.negative <= opt_plus(&class, &d).unwrap() + EPS);
    }
    assert!(ok >= 90, "{ok}/100");
}

#[test]
fn sampling_round_trip_meets_the_contract() {
    let mut ok = 0;
    for seed in 0..20 {
        let (class, d) = noisy(seed, Noise::None);
        let sd = SliceAndDice::new(Arc::new(CostSensitiveReliable::new(class.clone())), Mode::Sampling);
        let mut ex = ExampleOracle::labeled(d.clone(), stream(seed, 1));
        let g = pq_to_positive_reliable(&sd, &mut ex, EPS, DELTA, Mode::Sampling, &mut Seeder::new(seed)).unwrap();
        let r = false_rates(&d, &g.hypothesis).unwrap();
        ok += usize::from(r.positive <= EPS && r.negative <= opt_plus(&class, &d).unwrap() + EPS);
    }
    assert!(ok >= 18, "{ok}/20");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// The augmented learner also keeps `err_P` small; each of `err_P` and
    /// `err_Q` is at most twice the error on the mixture.
    #[test]
    fn augmentation_controls_training_error(seed in any::<u64>()) {
        let mut rng = stream(seed, 0);
        let inst = random_instance(&mut rng, 40, 100);
        let aug = augment_with_err_p(exact_sd(&inst.class));
        let mut ex_p = ExampleOracle::labeled(LabeledDistribution::noiseless(inst.p.clone(), inst.target.clone()), stream(seed, 1));
        let mut ex_q = ExampleOracle::unlabeled(inst.q.clone(), stream(seed, 2));
        let h = aug.learn(EPS, DELTA, &mut ex_p, &mut ex_q, &mut Seeder::new(seed)).unwrap().hypothesis;
        let (ep, eq) = (err(&inst.p, &h, &inst.target).unwrap(), err(&inst.q, &h, &inst.target).unwrap());
        prop_assert!(ep <= EPS + 1e-12 && eq <= EPS + 1e-12 && rej(&inst.p, &h).unwrap() <= EPS + 1e-12);
        let weights: Vec<(usize, f64)> = (0..inst.universe.len())
            .map(|i| (i, 0.5 * inst.p.weight(i).unwrap() + 0.5 * inst.q.weight(i).unwrap()))
            .collect();
        let mixed = Distribution::normalized(inst.universe.clone(), weights).unwrap();
        let em = err(&mixed, &h, &inst.target).unwrap();
        prop_assert!(ep <= 2.0 * em + 1e-12 && eq <= 2.0 * em + 1e-12);
    }
}

#[test]
fn augmentation_on_identical_marginals_matches_the_inner_learner_at_half_accuracy() {
    for seed in 0..30 {
        let mut rng = stream(seed, 0);
        let inst = random_instance(&mut rng, 40, 100);
        let sd = exact_sd(&inst.class);
        let d = LabeledDistribution::noiseless(inst.p.clone(), inst.target.clone());
        let run = |learner: &dyn PqLearner, eps: f64| {
            let mut ex_p = ExampleOracle::labeled(d.clone(), stream(seed, 1));
            let mut ex_q = ExampleOracle::unlabeled(inst.p.clone(), stream(seed, 2));
            learner.learn(eps, DELTA, &mut ex_p, &mut ex_q, &mut Seeder::new(seed)).unwrap().hypothesis
        };
        let (wrapped, plain) = (run(&augment_with_err_p(&sd), EPS), run(&sd, EPS / 2.0));
        for x in inst.universe.points() {
            assert_eq!(wrapped.predict(x), plain.predict(x), "seed {seed}");
        }
    }
}
