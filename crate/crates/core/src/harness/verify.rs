//! The acceptance suite: every guarantee checked on seeded finite
//! instances, with metrics evaluated exactly.

use std::sync::Arc;
use std::time::Instant;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::distribution::{Distribution, LabeledDistribution, Law};
use crate::domain::{Point, Universe};
use crate::error::Result;
use crate::hypothesis::{Classifier, ConceptClass, Diced, Hypothesis, SelectiveHypothesis, TruthTable};
use crate::metrics::{err, false_rates, rej, tv_distance};
use crate::oracle::{estimate_prob, EstimatorBudget, Event, ExampleOracle};
use crate::par::{self, Parallelism};
use crate::parity::{parity_sample_size, pq_learn_parity, BitVector};
use crate::reduction::pq_to_positive_reliable;
use crate::reliable::{
    fully_reliable_pair, negative_reliable_exact, positive_reliable_exact, reliable_sampling, ExhaustiveReliable,
    Polarity, ReliableRequest,
};
use crate::rng::{stream, Seeder, Stream};
use crate::slicedice::{dice0, DiceConfig, DiceTrace, Mode, SliceAndDice};

use super::brute::{opt_bottom, opt_plus};
use super::instances::{labeled, noisy_labels, random_distribution, random_instance, random_parity, random_subspace, uniform_on_span, FiniteInstance, Noise};
use super::report::to_json;
use super::run::{run_scenario, TOLERANCE};
use super::scenario::{builtin, fig1a};

pub const VERIFY_SCHEMA: &str = "pqlearn.verify/1";
pub const ALL_CRITERIA: [u8; 11] = [1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11];

const EPS: f64 = 0.1;
const DELTA: f64 = 0.1;
/// Failure descriptions kept per criterion.
const MAX_EXAMPLES: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionResult {
    pub id: u8,
    pub name: String,
    pub passed: bool,
    pub checks: u64,
    pub failures: u64,
    pub detail: String,
    pub examples: Vec<String>,
    pub elapsed_ms: f64,
    pub time_limit_ms: Option<f64>,
    pub within_time_limit: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub schema: String,
    pub seed: u64,
    pub passed: bool,
    pub criteria: Vec<CriterionResult>,
}

impl VerifyReport {
    pub fn to_json(&self, include_timing: bool) -> String {
        to_json(self, include_timing)
    }
}

/// Pass/fail bookkeeping for one batch of checks.
#[derive(Debug, Default)]
struct Checks {
    checks: u64,
    failures: u64,
    examples: Vec<String>,
}

impl Checks {
    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.checks += 1;
        if !ok {
            self.failures += 1;
            if self.examples.len() < MAX_EXAMPLES {
                self.examples.push(what());
            }
        }
    }

    fn merge(&mut self, other: Checks) {
        self.checks += other.checks;
        self.failures += other.failures;
        for e in other.examples {
            if self.examples.len() < MAX_EXAMPLES {
                self.examples.push(e);
            }
        }
    }

    fn merge_all(items: impl IntoIterator<Item = Checks>) -> Checks {
        let mut out = Checks::default();
        items.into_iter().for_each(|c| out.merge(c));
        out
    }
}

/// What a criterion body hands back: its checks and a one-line summary.
struct Finding {
    checks: Checks,
    detail: String,
}

fn le(a: f64, b: f64) -> bool {
    a <= b + TOLERANCE
}

fn rng_for(seed: u64, criterion: u8, item: u64) -> Stream {
    stream(seed ^ (u64::from(criterion) << 56), item)
}

fn random_table(rng: &mut Stream, n: usize) -> TruthTable {
    let bias = rng.gen_range(0.0..1.0);
    TruthTable::from_fn(n, |_| rng.gen_bool(bias))
}

fn random_noise(rng: &mut Stream) -> Noise {
    match rng.gen_range(0..4) {
        0 => Noise::None,
        1 => Noise::OneSided(rng.gen_range(0.05..0.5)),
        2 => Noise::TwoSided { flip_positive: rng.gen_range(0.0..0.4), flip_negative: rng.gen_range(0.0..0.4) },
        _ => Noise::Arbitrary,
    }
}

fn noisy_instance(rng: &mut Stream, max_points: usize, max_class: usize) -> (FiniteInstance, LabeledDistribution) {
    let inst = random_instance(rng, max_points, max_class);
    let noise = random_noise(rng);
    let eta = noisy_labels(rng, &inst.universe, &inst.target, noise);
    let d = labeled(&inst.p, eta);
    (inst, d)
}

fn c1_decomposition(seed: u64, _: Parallelism) -> Result<Finding> {
    let mut checks = Checks::default();
    let mut worst = 0f64;
    for k in 0..1000 {
        let mut rng = rng_for(seed, 1, k);
        let u = Universe::indexed(rng.gen_range(1..=32))?;
        let p = random_distribution(&mut rng, &u);
        let f = Hypothesis::table(random_table(&mut rng, u.len()));
        let h = Hypothesis::table(random_table(&mut rng, u.len()));
        let e = err(&p, &h, &f)?;
        let r = false_rates(&LabeledDistribution::noiseless(p.clone(), f.clone()), &h)?;
        let gap = (e - r.total()).abs();
        worst = worst.max(gap);
        checks.check(gap <= TOLERANCE, || format!("pair {k}: err {e} vs false± {}", r.total()));
        let in_unit = [e, r.positive, r.negative].iter().all(|v| (0.0..=1.0 + TOLERANCE).contains(v));
        checks.check(in_unit, || format!("pair {k}: metric outside [0, 1]"));
    }
    Ok(Finding { checks, detail: format!("1000 pairs, largest |err − (false⁺ + false⁻)| = {worst:e}") })
}

fn c2_rejection_transfer(seed: u64, _: Parallelism) -> Result<Finding> {
    let mut checks = Checks::default();
    let mut min_slack = f64::INFINITY;
    for k in 0..1000 {
        let mut rng = rng_for(seed, 2, k);
        let u = Universe::indexed(rng.gen_range(1..=32))?;
        let p = random_distribution(&mut rng, &u);
        let q = random_distribution(&mut rng, &u);
        let h = SelectiveHypothesis::agreement(
            SelectiveHypothesis::Total(Hypothesis::table(random_table(&mut rng, u.len()))),
            SelectiveHypothesis::Total(Hypothesis::table(random_table(&mut rng, u.len()))),
        );
        let (rq, rp, tv) = (rej(&q, &h)?, rej(&p, &h)?, tv_distance(&p, &q)?);
        min_slack = min_slack.min(rp + tv - rq);
        checks.check(le(rq, rp + tv), || format!("triple {k}: rej_Q {rq} > rej_P {rp} + TV {tv}"));
    }
    Ok(Finding { checks, detail: format!("1000 triples, smallest rej_P + TV − rej_Q = {min_slack:e}") })
}

fn c3_reliable(seed: u64, par_mode: Parallelism) -> Result<Finding> {
    let exact = par::map(500, par_mode, |k| -> Result<Checks> {
        let mut rng = rng_for(seed, 3, k as u64);
        let (inst, d) = noisy_instance(&mut rng, 32, 100);
        let h = positive_reliable_exact(&inst.class, &d, EPS)?;
        let r = false_rates(&d, &h)?;
        let opt = opt_plus(&inst.class, &d)?;
        let mut c = Checks::default();
        c.check(le(r.positive, EPS), || format!("exact instance {k}: false⁺ {}", r.positive));
        c.check(le(r.negative, opt + EPS), || format!("exact instance {k}: false⁻ {} vs opt₊ {opt}", r.negative));
        Ok(c)
    });
    let mut checks = Checks::merge_all(exact.into_iter().collect::<Result<Vec<_>>>()?);
    let sampled = par::map(500, par_mode, |k| -> Result<bool> {
        let mut rng = rng_for(seed, 3, 1000 + k as u64);
        let (inst, d) = noisy_instance(&mut rng, 32, 100);
        let request = ReliableRequest::new(EPS, DELTA, Polarity::Positive)?;
        let h = reliable_sampling(&inst.class, &request, &d, rng.gen())?;
        let r = false_rates(&d, &h)?;
        Ok(le(r.positive, EPS) && le(r.negative, opt_plus(&inst.class, &d)? + EPS))
    });
    let ok = sampled.into_iter().collect::<Result<Vec<_>>>()?.iter().filter(|&&b| b).count();
    checks.check(ok as f64 >= (1.0 - DELTA) * 500.0, || format!("sampling learner met both bounds in {ok}/500 seeds"));
    Ok(Finding { checks, detail: format!("exact learner on 500 instances; sampling learner {ok}/500 seeds") })
}

/// `⌈(2/ε)·ln(1/ε)⌉`.
fn iteration_cap(eps: f64) -> u64 {
    ((2.0 / eps) * (1.0 / eps).ln()).ceil() as u64
}

/// Structural checks on one dicing pass: iteration bound, nesting, decay
/// and the rejection ledger.
fn dice_invariants(
    c: &mut Checks,
    label: &str,
    u: &Universe,
    p: &Distribution,
    f: &Hypothesis,
    h: &Diced,
    trace: &DiceTrace,
) -> Result<()> {
    let params = trace.params;
    let eps = params.working_epsilon;
    let cap = iteration_cap(eps);
    c.check(trace.learner_calls <= cap, || format!("{label}: {} learner calls, cap {cap}", trace.learner_calls));
    for w in trace.iterations.windows(2) {
        c.check(le(w[1].q_mass, w[0].q_mass * (1.0 - eps / 2.0)), || {
            format!("{label}: q fell only from {} to {}", w[0].q_mass, w[1].q_mass)
        });
    }
    let in_event = |x: &Point, i: usize| h.base.eval(x) == h.slice && h.dicers[..i].iter().all(|d| d.eval(x) == h.slice);
    for x in u.points() {
        for i in 0..h.dicers.len() {
            c.check(!in_event(x, i + 1) || in_event(x, i), || format!("{label}: events not nested at point {}", x.id));
        }
        if !h.reject_slice {
            c.check((h.predict(x) == Some(h.slice)) == in_event(x, h.dicers.len()), || {
                format!("{label}: output disagrees with the final event at {}", x.id)
            });
        }
    }
    if !h.reject_slice {
        let lost: f64 = p
            .support()?
            .filter(|&(x, _)| {
                let x = u.point(x);
                f.eval(x) == h.slice && h.predict(x).is_none()
            })
            .map(|(_, w)| w)
            .sum();
        let bound = h.dicers.len() as f64 * eps / params.m.max(1.0);
        c.check(le(lost, bound), || format!("{label}: ledger {lost} > {bound}"));
    }
    Ok(())
}

fn c4_dice0(seed: u64, par_mode: Parallelism) -> Result<Finding> {
    let results = par::map(200, par_mode, |k| -> Result<(Checks, usize)> {
        let mut rng = rng_for(seed, 4, k as u64);
        let inst = random_instance(&mut rng, 64, 200);
        let c = inst.class.member(rng.gen_range(0..inst.class.len())).clone();
        let learner = ExhaustiveReliable::new(inst.class.clone()).with_parallelism(Parallelism::Sequential);
        let mut ex_p = ExampleOracle::labeled(LabeledDistribution::noiseless(inst.p.clone(), inst.target.clone()), rng_for(seed, 4, 10_000 + k as u64));
        let mut ex_q = ExampleOracle::unlabeled(inst.q.clone(), rng_for(seed, 4, 20_000 + k as u64));
        let cfg = DiceConfig::new(EPS, DELTA, Mode::Exact)?;
        let (h, trace) = dice0(&cfg, &mut ex_p, &mut ex_q, &c, &learner, &mut Seeder::new(k as u64))?;
        let f = &inst.target;
        let mut checks = Checks::default();
        let (rp, ep) = (rej(&inst.p, &h)?, err(&inst.p, &c, f)?);
        checks.check(le(rp, EPS + ep), || format!("instance {k}: rej_P {rp} > ε + err_P(c) {ep}"));
        let fneg = false_rates(&LabeledDistribution::noiseless(inst.q.clone(), f.clone()), &h)?.negative;
        checks.check(le(fneg, EPS), || format!("instance {k}: false⁻ over Q {fneg}"));
        dice_invariants(&mut checks, &format!("instance {k}"), &inst.universe, &inst.p, f, &h, &trace)?;
        Ok((checks, trace.learner_calls as usize))
    });
    let results = results.into_iter().collect::<Result<Vec<_>>>()?;
    let most = results.iter().map(|r| r.1).max().unwrap_or(0);
    Ok(Finding {
        checks: Checks::merge_all(results.into_iter().map(|r| r.0)),
        detail: format!("200 instances, at most {most} learner calls (cap {})", iteration_cap(EPS)),
    })
}

fn sd_trial(seed: u64, k: u64, mode: Mode) -> Result<(bool, bool)> {
    let mut rng = rng_for(seed, 5, k);
    let inst = random_instance(&mut rng, 64, 200);
    let learner: Arc<dyn crate::reliable::ReliableLearner> = match mode {
        Mode::Exact => Arc::new(ExhaustiveReliable::new(inst.class.clone()).with_parallelism(Parallelism::Sequential)),
        Mode::Sampling => Arc::new(
            crate::reliable::CostSensitiveReliable::new(inst.class.clone()).with_parallelism(Parallelism::Sequential),
        ),
    };
    let mut seeder = Seeder::new(rng.gen());
    let mut ex_p = ExampleOracle::labeled(LabeledDistribution::noiseless(inst.p.clone(), inst.target.clone()), seeder.stream());
    let mut ex_q = ExampleOracle::unlabeled(inst.q.clone(), seeder.stream());
    let (h, trace) = SliceAndDice::new(learner, mode).run(EPS, DELTA, &mut ex_p, &mut ex_q, &mut seeder)?;
    let agrees = inst.universe.points().iter().all(|x| h.predict(x).is_none_or(|v| v == trace.base.eval(x)));
    let ok = agrees && le(err(&inst.q, &h, &inst.target)?, EPS) && le(rej(&inst.p, &h)?, EPS);
    Ok((ok, trace.timed_out()))
}

fn c5_slice_and_dice(seed: u64, par_mode: Parallelism) -> Result<Finding> {
    let mut checks = Checks::default();
    let exact = par::map(200, par_mode, |k| sd_trial(seed, k as u64, Mode::Exact));
    for (k, r) in exact.into_iter().enumerate() {
        let (ok, _) = r?;
        checks.check(ok, || format!("exact instance {k} missed err_Q ≤ ε or rej_P ≤ ε"));
    }
    let sampled = par::map(500, par_mode, |k| sd_trial(seed, 1000 + k as u64, Mode::Sampling));
    let sampled = sampled.into_iter().collect::<Result<Vec<_>>>()?;
    let ok = sampled.iter().filter(|r| r.0).count();
    let timeouts = sampled.iter().filter(|r| r.1).count();
    checks.check(ok as f64 >= (1.0 - DELTA) * 500.0, || format!("sampling mode succeeded in {ok}/500 seeds"));
    checks.check(timeouts as f64 <= DELTA / 4.0 * 500.0, || format!("{timeouts}/500 sampling runs timed out"));
    Ok(Finding {
        checks,
        detail: format!("exact mode on 200 instances; sampling mode {ok}/500 seeds, {timeouts} timeouts"),
    })
}

fn c6_fig1a(_: u64, par_mode: Parallelism) -> Result<Finding> {
    let s = fig1a();
    let report = run_scenario(&s, par_mode)?;
    let mut checks = Checks::default();
    let h = report.hypothesis.as_ref();
    let inst = s.instance(s.seed)?;
    let u = &inst.universe;
    let out: Vec<Option<bool>> = u.points().iter().map(|x| h.and_then(|h| h.predict(x))).collect();
    checks.check(h.is_some() && out == [Some(true), Some(false), None, None], || format!("h(u, −u, v, −v) = {out:?}"));
    let t = report.trials.first();
    let metrics = t.map(|t| (t.err_q, t.rej_p, t.rej_q));
    checks.check(metrics == Some((Some(0.0), Some(0.0), Some(0.5))), || format!("(err_Q, rej_P, rej_Q) = {metrics:?}"));
    let class = s.concept_class(u)?;
    let ConceptClass::HomogeneousHalfspaces { angles } = class else { unreachable!() };
    let members = class.enumerate(u)?;
    let separating = members
        .iter()
        .filter(|c| {
            let v: Vec<bool> = u.points().iter().map(|x| c.eval(x)).collect();
            v[0] == v[1] && v[2] == v[3] && v[0] != v[2]
        })
        .count();
    checks.check(separating == 0, || format!("{separating} grid halfspaces separate ±u from ±v"));
    Ok(Finding {
        checks,
        detail: format!("h = {out:?}; {} members of the {angles}-angle grid checked, none separating", members.len()),
    })
}

fn c7_pq_to_reliable(seed: u64, par_mode: Parallelism) -> Result<Finding> {
    let results = par::map(200, par_mode, |k| -> Result<bool> {
        let mut rng = rng_for(seed, 7, k as u64);
        let inst = random_instance(&mut rng, 32, 100);
        let noise = if k % 2 == 0 {
            Noise::OneSided(rng.gen_range(0.05..0.4))
        } else {
            Noise::TwoSided { flip_positive: rng.gen_range(0.05..0.4), flip_negative: rng.gen_range(0.05..0.4) }
        };
        let eta = noisy_labels(&mut rng, &inst.universe, &inst.target, noise);
        let d = labeled(&inst.p, eta);
        let learner = Arc::new(ExhaustiveReliable::new(inst.class.clone()).with_parallelism(Parallelism::Sequential));
        let sd = SliceAndDice::new(learner, Mode::Exact);
        let mut seeder = Seeder::new(rng.gen());
        let mut ex_d = ExampleOracle::labeled(d.clone(), seeder.stream());
        let g = pq_to_positive_reliable(&sd, &mut ex_d, EPS, DELTA, Mode::Exact, &mut seeder)?.hypothesis;
        let r = false_rates(&d, &g)?;
        Ok(le(r.positive, EPS) && le(r.negative, opt_plus(&inst.class, &d)? + EPS))
    });
    let results = results.into_iter().collect::<Result<Vec<_>>>()?;
    let ok = results.iter().filter(|&&b| b).count();
    let mut checks = Checks::default();
    checks.check(ok as f64 >= (1.0 - DELTA) * 200.0, || format!("{ok}/200 instances met both bounds"));
    let missed = results.iter().enumerate().filter(|(_, b)| !**b).map(|(k, _)| format!("instance {k} missed a bound"));
    checks.examples.extend(missed.take(MAX_EXAMPLES));
    Ok(Finding { checks, detail: format!("{ok}/200 noisy instances met false⁺ ≤ ε and false⁻ ≤ opt₊ + ε") })
}

/// Every parity consistent with the training sample agrees with the
/// learned one on the training span.
fn consistency_agreement(seed: u64, dim: usize, k: u64) -> Result<Checks> {
    let mut rng = rng_for(seed, 8, (dim as u64) << 32 | k);
    let u = Universe::cube(dim)?;
    let rank = rng.gen_range(0..=dim);
    let p = uniform_on_span(&u, &random_subspace(&mut rng, dim, rank));
    let f = Hypothesis::parity(random_parity(&mut rng, dim));
    let ex = ExampleOracle::labeled(LabeledDistribution::noiseless(p, f), rng_for(seed, 8, 1 << 60 | k));
    let mut replay = ex.clone();
    let mut ex = ex;
    let h = pq_learn_parity(EPS, DELTA, &mut ex, dim)?;
    let sample = crate::oracle::ExampleSource::draw_batch(&mut replay, parity_sample_size(EPS, DELTA, dim))?;
    let rows: Vec<(BitVector, bool)> = sample
        .tallies()
        .iter()
        .map(|(&x, t)| (u.point(x).bits().unwrap().clone(), t.pos > 0))
        .collect();
    let span = h.basis.elements();
    let mut c = Checks::default();
    let mut consistent = 0;
    for w in 0..1u64 << dim {
        let w = BitVector::from_index(dim, w);
        if rows.iter().all(|(x, y)| w.dot(x) == *y) {
            consistent += 1;
            let agree = span.iter().all(|x| w.dot(x) == h.parity.eval(x));
            c.check(agree, || format!("d = {dim}: consistent parity {w} disagrees on the span"));
        }
    }
    c.check(consistent == 1usize << (dim - h.basis.rank()), || {
        format!("d = {dim}: {consistent} consistent parities for rank {}", h.basis.rank())
    });
    Ok(c)
}

fn c8_parity(seed: u64, par_mode: Parallelism) -> Result<Finding> {
    let mut checks = Checks::default();
    let mut detail = Vec::new();
    for name in ["parity-d8", "parity-d16"] {
        let mut s = builtin(name).expect("builtin");
        s.seed = seed;
        let r = run_scenario(&s, par_mode)?;
        let zero = r.trials.iter().filter(|t| t.err_q == Some(0.0)).count();
        let small = r.trials.iter().filter(|t| t.rej_p.is_some_and(|v| le(v, s.epsilon))).count();
        checks.check(zero == 500, || format!("{name}: err_Q = 0 in {zero}/500"));
        checks.check(small as f64 >= (1.0 - s.delta) * 500.0, || format!("{name}: rej_P ≤ ε in {small}/500"));
        detail.push(format!("{name}: err_Q = 0 in {zero}/500, rej_P ≤ ε in {small}/500"));
    }
    for dim in 1..=12 {
        for k in 0..4 {
            checks.merge(consistency_agreement(seed, dim, k)?);
        }
    }
    detail.push("consistency-agreement exhaustive for d = 1..=12".into());
    Ok(Finding { checks, detail: detail.join("; ") })
}

fn c9_calibration(seed: u64, par_mode: Parallelism) -> Result<Finding> {
    let mut checks = Checks::default();
    let mut detail = Vec::new();
    let u = Universe::indexed(2)?;
    for (i, (alpha, delta)) in [(0.05, 0.01), (0.1, 0.05)].into_iter().enumerate() {
        let budget = EstimatorBudget::new(alpha, delta)?;
        let hits = par::map(2000, par_mode, |k| -> Result<bool> {
            let truth = [0.5, 0.3, 0.1, 0.9][k % 4];
            let p = Distribution::from_dense(u.clone(), &[1.0 - truth, truth])?;
            let mut o = ExampleOracle::unlabeled(p, rng_for(seed, 9, (i as u64) << 32 | k as u64));
            let est = estimate_prob(&mut o, &Event::on_point("one", |x| x.id == 1), &budget)?;
            Ok((est - truth).abs() <= alpha)
        });
        let covered = hits.into_iter().collect::<Result<Vec<_>>>()?.iter().filter(|&&b| b).count();
        checks.check(covered as f64 >= (1.0 - delta) * 2000.0, || {
            format!("(α, δ) = ({alpha}, {delta}): coverage {covered}/2000")
        });
        detail.push(format!("(α, δ) = ({alpha}, {delta}), m = {}: {covered}/2000 covered", budget.samples()));
    }
    Ok(Finding { checks, detail: detail.join("; ") })
}

fn c10_fully_reliable(seed: u64, par_mode: Parallelism) -> Result<Finding> {
    let results = par::map(200, par_mode, |k| -> Result<Checks> {
        let mut rng = rng_for(seed, 10, k as u64);
        let (inst, d) = noisy_instance(&mut rng, 32, 100);
        let mut c = Checks::default();
        let c_plus = positive_reliable_exact(&inst.class, &d, EPS)?;
        let c_minus = negative_reliable_exact(&inst.class, &d, EPS)?;
        let (rp, rm) = (false_rates(&d, &c_plus)?, false_rates(&d, &c_minus)?);
        let pair = fully_reliable_pair(c_plus.clone(), c_minus.clone());
        let r = false_rates(&d, &pair)?;
        c.check(le(r.positive, rp.positive) && le(rp.positive, EPS), || format!("instance {k}: pair false⁺ {}", r.positive));
        c.check(le(r.negative, rm.negative) && le(rm.negative, EPS), || format!("instance {k}: pair false⁻ {}", r.negative));
        let abstain = rej(d.marginal(), &pair)?;
        let opt = opt_bottom(&inst.class, &d)?;
        c.check(le(abstain, opt + 2.0 * EPS), || format!("instance {k}: Pr[⊥] {abstain} > opt_⊥ {opt} + 2ε"));

        // With no slack the guaranteed sides vanish exactly.
        let law = Law::labeled(&d)?;
        let exact = ExhaustiveReliable::new(inst.class.clone()).with_parallelism(Parallelism::Sequential);
        let strict = fully_reliable_pair(
            exact.learn_law(&law, 0.0, Polarity::Positive)?,
            exact.learn_law(&law, 0.0, Polarity::Negative)?,
        );
        let rs = false_rates(&d, &strict)?;
        c.check(rs.positive == 0.0 && rs.negative == 0.0, || format!("instance {k}: strict pair errs {rs:?}"));
        let a = rej(d.marginal(), &strict)?;
        c.check((a - opt).abs() <= TOLERANCE, || format!("instance {k}: strict Pr[⊥] {a} vs opt_⊥ {opt}"));
        Ok(c)
    });
    let checks = Checks::merge_all(results.into_iter().collect::<Result<Vec<_>>>()?);
    Ok(Finding { checks, detail: "200 noisy instances, opt_⊥ brute-forced over C × C".into() })
}

type Body = fn(u64, Parallelism) -> Result<Finding>;

fn criterion(id: u8) -> Option<(&'static str, Option<f64>, Body)> {
    Some(match id {
        1 => ("error decomposes into one-sided errors", Some(1_000.0), c1_decomposition as Body),
        2 => ("rejection transfers through total variation", None, c2_rejection_transfer),
        3 => ("reliable learners meet their contract", Some(120_000.0), c3_reliable),
        4 => ("DICE₀ rejection and coverage bounds", Some(300_000.0), c4_dice0),
        5 => ("Slice-and-Dice meets the PQ contract", None, c5_slice_and_dice),
        6 => ("fig1a outputs and non-separability", Some(10_000.0), c6_fig1a),
        7 => ("PQ learner yields a positive reliable learner", None, c7_pq_to_reliable),
        8 => ("parity PQ learner", Some(60_000.0), c8_parity),
        9 => ("estimator calibration", None, c9_calibration),
        10 => ("fully reliable pair", None, c10_fully_reliable),
        _ => return None,
    })
}

fn run_one(id: u8, seed: u64, par_mode: Parallelism) -> CriterionResult {
    let (name, limit, body) = criterion(id).expect("known criterion");
    let start = Instant::now();
    let outcome = body(seed, par_mode);
    let elapsed_ms = start.elapsed().as_secs_f64() * 1e3;
    let within = limit.is_none_or(|l| elapsed_ms < l);
    match outcome {
        Ok(f) => CriterionResult {
            id,
            name: name.into(),
            passed: f.checks.failures == 0 && within,
            checks: f.checks.checks,
            failures: f.checks.failures,
            detail: f.detail,
            examples: f.checks.examples,
            elapsed_ms,
            time_limit_ms: limit,
            within_time_limit: within,
        },
        Err(e) => CriterionResult {
            id,
            name: name.into(),
            passed: false,
            checks: 0,
            failures: 1,
            detail: format!("aborted: {e}"),
            examples: Vec::new(),
            elapsed_ms,
            time_limit_ms: limit,
            within_time_limit: within,
        },
    }
}

/// Runs the selected criteria in order. Criterion 11 reruns every other
/// selected criterion and compares the timing-free JSON of both runs.
pub fn verify(seed: u64, ids: &[u8], par_mode: Parallelism) -> VerifyReport {
    let base: Vec<u8> = ids.iter().copied().filter(|&i| i != 11 && criterion(i).is_some()).collect();
    let mut criteria: Vec<CriterionResult> = base.iter().map(|&i| run_one(i, seed, par_mode)).collect();
    if ids.contains(&11) {
        let start = Instant::now();
        let first = to_json(&criteria, false);
        let again: Vec<CriterionResult> = base.iter().map(|&i| run_one(i, seed, par_mode)).collect();
        let same = first == to_json(&again, false);
        criteria.push(CriterionResult {
            id: 11,
            name: "reports are reproducible".into(),
            passed: same,
            checks: 1,
            failures: u64::from(!same),
            detail: format!("criteria {base:?} rerun with seed {seed}: JSON {}", if same { "identical" } else { "differs" }),
            examples: Vec::new(),
            elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
            time_limit_ms: None,
            within_time_limit: true,
        });
    }
    VerifyReport {
        schema: VERIFY_SCHEMA.into(),
        seed,
        passed: criteria.iter().all(|c| c.passed),
        criteria,
    }
}
