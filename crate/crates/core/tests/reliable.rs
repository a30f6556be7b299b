use std::sync::Arc;

use proptest::prelude::*;

use pqlearn_core::distribution::{Distribution, LabeledDistribution, Law};
use pqlearn_core::domain::Universe;
use pqlearn_core::error::Error;
use pqlearn_core::harness::brute::{all_rates, opt_plus};
use pqlearn_core::harness::instances::{labeled, noisy_labels, random_instance, Noise};
use pqlearn_core::hypothesis::{Classifier, Hypothesis, MaterializedClass, TruthTable};
use pqlearn_core::metrics::{false_rates, rej};
use pqlearn_core::oracle::ExampleOracle;
use pqlearn_core::reliable::{
    fully_reliable_pair, negative_reliable_exact, positive_reliable_exact, reliable_sampling, sampling_sample_size,
    CostSensitiveReliable, ExhaustiveReliable, Polarity, ReliableLearner, ReliableRequest,
};
use pqlearn_core::rng::stream;

const TOL: f64 = 1e-12;

fn noisy(seed: u64) -> (Arc<MaterializedClass>, LabeledDistribution) {
    let mut rng = stream(seed, 0);
    let inst = random_instance(&mut rng, 32, 100);
    let eta = noisy_labels(&mut rng, &inst.universe, &inst.target, Noise::Arbitrary);
    (inst.class, labeled(&inst.p, eta))
}

fn flip(d: &LabeledDistribution) -> LabeledDistribution {
    let u = d.universe();
    let eta = u.points().iter().map(|x| 1.0 - d.positive_probability(x)).collect();
    LabeledDistribution::noisy(d.marginal().clone(), eta).unwrap()
}

fn tables(u: &Universe, h: &Hypothesis) -> TruthTable {
    h.truth_table(u)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn exact_learner_is_feasible_and_near_optimal(seed in any::<u64>(), eps in 0.01..0.5f64) {
        let (class, d) = noisy(seed);
        let r = false_rates(&d, &positive_reliable_exact(&class, &d, eps).unwrap()).unwrap();
        prop_assert!(r.positive <= eps);
        prop_assert!(r.negative <= opt_plus(&class, &d).unwrap() + eps + TOL);
        // Nothing feasible does strictly better on the other side.
        let best = all_rates(&class, &d).unwrap().iter().filter(|s| s.positive <= eps).map(|s| s.negative).fold(f64::INFINITY, f64::min);
        prop_assert_eq!(r.negative, best);
    }

    #[test]
    fn negative_learner_is_the_flipped_positive_learner(seed in any::<u64>(), eps in 0.01..0.5f64) {
        let (class, d) = noisy(seed);
        let neg = negative_reliable_exact(&class, &d, eps).unwrap();
        let pos = positive_reliable_exact(&class.complement(), &flip(&d), eps).unwrap();
        let u = d.universe();
        prop_assert_eq!(tables(u, &neg), tables(u, &pos.complement()));
    }

    #[test]
    fn pair_inherits_guaranteed_sides(seed in any::<u64>(), eps in 0.01..0.5f64) {
        let (class, d) = noisy(seed);
        let (cp, cm) = (positive_reliable_exact(&class, &d, eps).unwrap(), negative_reliable_exact(&class, &d, eps).unwrap());
        let pair = fully_reliable_pair(cp.clone(), cm.clone());
        let (r, rp, rm) = (false_rates(&d, &pair).unwrap(), false_rates(&d, &cp).unwrap(), false_rates(&d, &cm).unwrap());
        prop_assert!(r.positive <= rp.positive + TOL);
        prop_assert!(r.negative <= rm.negative + TOL);
        let u = d.universe();
        let disagree = d.marginal().mass(|x| cp.eval(x) != cm.eval(x)).unwrap();
        prop_assert!((rej(d.marginal(), &pair).unwrap() - disagree).abs() <= TOL);
        prop_assert!(u.points().iter().all(|x| pair.predict(x).is_none_or(|v| v == cp.eval(x))));
    }
}

#[test]
fn all_negative_labels_give_no_false_negatives() {
    let (class, d) = noisy(1);
    let zero = LabeledDistribution::noiseless(d.marginal().clone(), Hypothesis::constant(false));
    let r = false_rates(&zero, &positive_reliable_exact(&class, &zero, 0.1).unwrap()).unwrap();
    assert_eq!(r.negative, 0.0);
    assert!(r.positive <= 0.1);
}

#[test]
fn noiseless_target_is_learned_to_twice_epsilon() {
    for seed in 0..50 {
        let mut rng = stream(seed, 0);
        let inst = random_instance(&mut rng, 32, 100);
        let d = LabeledDistribution::noiseless(inst.p.clone(), inst.target.clone());
        assert_eq!(opt_plus(&inst.class, &d).unwrap(), 0.0);
        let r = false_rates(&d, &positive_reliable_exact(&inst.class, &d, 0.1).unwrap()).unwrap();
        assert!(r.total() <= 0.2);
    }
}

#[test]
fn sampling_learner_returns_the_forced_constant() {
    let (class, d) = noisy(2);
    let marginal = d.marginal().clone();
    let zero = LabeledDistribution::noiseless(marginal.clone(), Hypothesis::constant(false));
    let one = LabeledDistribution::noiseless(marginal, Hypothesis::constant(true));
    let u = d.universe();
    let req = |polarity| ReliableRequest::new(0.1, 0.1, polarity).unwrap();
    let h = reliable_sampling(&class, &req(Polarity::Positive), &zero, 5).unwrap();
    assert!(tables(u, &h).is_constant(false));
    let h = reliable_sampling(&class, &req(Polarity::Negative), &one, 5).unwrap();
    assert!(tables(u, &h).is_constant(true));
}

#[test]
fn sampling_learner_meets_the_contract_on_most_seeds() {
    let req = ReliableRequest::new(0.1, 0.1, Polarity::Positive).unwrap();
    let ok = (0..200)
        .filter(|&seed| {
            let (class, d) = noisy(seed);
            let r = false_rates(&d, &reliable_sampling(&class, &req, &d, seed).unwrap()).unwrap();
            r.positive <= 0.1 && r.negative <= opt_plus(&class, &d).unwrap() + 0.1
        })
        .count();
    assert!(ok >= 180, "{ok}/200");
}

#[test]
fn sampling_learner_negative_polarity_mirrors() {
    // Same stream and flipped labels: the negative learner on D equals the
    // complement of the positive learner on flipped D over the complement.
    for seed in 0..30 {
        let (class, d) = noisy(seed);
        let neg_req = ReliableRequest::new(0.1, 0.1, Polarity::Negative).unwrap();
        let pos_req = ReliableRequest::new(0.1, 0.1, Polarity::Positive).unwrap();
        let neg = CostSensitiveReliable::new(class.clone())
            .learn(&neg_req, &mut ExampleOracle::labeled(d.clone(), stream(seed, 9)))
            .unwrap();
        let pos = CostSensitiveReliable::new(Arc::new(class.complement()))
            .learn(&pos_req, &mut ExampleOracle::labeled(flip(&d), stream(seed, 9)))
            .unwrap();
        let u = d.universe();
        assert_eq!(tables(u, &neg), tables(u, &pos.complement()), "seed {seed}");
    }
}

#[test]
fn sample_size_and_weight() {
    // ⌈6400·(ln 100 + ln 40)⌉
    let expected = (6400.0 * (100f64.ln() + 40f64.ln())).ceil() as u64;
    assert_eq!(sampling_sample_size(100, 0.1, 0.1), expected);
    assert_eq!(CostSensitiveReliable::weight(0.1), 40);
    assert_eq!(CostSensitiveReliable::weight(0.3), 14);
}

#[test]
fn missing_constant_is_a_precondition_error() {
    let u = Universe::indexed(3).unwrap();
    let tables = vec![TruthTable::from_bits(&[true, false, true]), TruthTable::zeros(3).complement()];
    let class = MaterializedClass::from_tables(u.clone(), tables);
    let d = LabeledDistribution::noiseless(Distribution::uniform_all(u).unwrap(), Hypothesis::constant(true));
    assert!(matches!(positive_reliable_exact(&class, &d, 0.1), Err(Error::MissingConstant(false))));
    assert!(negative_reliable_exact(&class, &d, 0.1).is_ok());
    assert!(matches!(negative_reliable_exact(&class.complement(), &d, 0.1), Err(Error::MissingConstant(true))));
}

#[test]
fn exact_learner_needs_labels() {
    let (class, d) = noisy(3);
    let learner = ExhaustiveReliable::new(class);
    let law = Law::unlabeled(d.marginal()).unwrap();
    assert!(matches!(learner.learn_law(&law, 0.1, Polarity::Positive), Err(Error::Unlabeled)));
}

#[test]
fn pair_of_opposite_constants_always_abstains() {
    let (_, d) = noisy(4);
    let pair = fully_reliable_pair(Hypothesis::constant(false), Hypothesis::constant(true));
    assert!((rej(d.marginal(), &pair).unwrap() - 1.0).abs() <= TOL);
    let same = fully_reliable_pair(Hypothesis::constant(true), Hypothesis::constant(true));
    assert_eq!(rej(d.marginal(), &same).unwrap(), 0.0);
}
