//! The Monte-Carlo trial runner.

use std::sync::Arc;
use std::time::Instant;

use crate::error::Result;
use crate::hypothesis::SelectiveHypothesis;
use crate::metrics::{err, false_rates, rej};
use crate::distribution::LabeledDistribution;
use crate::oracle::{ExampleOracle, ExampleSource};
use crate::par::{self, Parallelism};
use crate::parity::pq_learn_parity;
use crate::reduction::pq_to_positive_reliable;
use crate::reliable::{CostSensitiveReliable, ExhaustiveReliable, ReliableLearner};
use crate::rng::{trial_seed, Seeder};
use crate::slicedice::{Mode, SliceAndDice};

use super::brute::opt_plus;
use super::report::{Aggregate, TrialRecord, TrialReport, REPORT_SCHEMA};
use super::scenario::{Instance, Pipeline, Scenario};

/// Acceptance slack for floating-point comparisons against `ε`.
pub const TOLERANCE: f64 = 1e-12;

/// An instance with its learner, ready for trials.
struct Prepared {
    instance: Instance,
    learner: Option<Arc<dyn ReliableLearner>>,
    opt_plus: Option<f64>,
}

fn learner_for(mode: Mode, instance: &Instance, inner: Parallelism) -> Option<Arc<dyn ReliableLearner>> {
    let class = instance.class.clone()?;
    Some(match mode {
        Mode::Exact => Arc::new(ExhaustiveReliable::new(class).with_parallelism(inner)),
        Mode::Sampling => Arc::new(CostSensitiveReliable::new(class).with_parallelism(inner)),
    })
}

fn prepare(s: &Scenario, seed: u64, inner: Parallelism) -> Result<Prepared> {
    let instance = s.instance(seed)?;
    let learner = learner_for(s.mode, &instance, inner);
    let opt_plus = match (&instance.class, s.pipeline) {
        (Some(c), Pipeline::RoundTrip) => Some(opt_plus(c, &instance.labeled)?),
        _ => None,
    };
    Ok(Prepared { instance, learner, opt_plus })
}

struct Outcome {
    hypothesis: SelectiveHypothesis,
    record: TrialRecord,
}

fn empty_record(index: u64, seed: u64) -> TrialRecord {
    TrialRecord {
        index,
        seed,
        err_q: None,
        err_p: None,
        rej_p: None,
        rej_q: None,
        false_positive: None,
        false_negative: None,
        opt_plus: None,
        rank: None,
        success: false,
        timed_out: false,
        draws: 0,
        trace: None,
        error: None,
        wall_ms: 0.0,
    }
}

fn run_trial(s: &Scenario, prep: &Prepared, index: u64, seed: u64) -> Result<Outcome> {
    let inst = &prep.instance;
    let mut seeder = Seeder::new(seed);
    let mut record = empty_record(index, seed);
    let hypothesis = match s.pipeline {
        Pipeline::SliceAndDice | Pipeline::Parity => {
            let mut ex_p = ExampleOracle::labeled(inst.labeled.clone(), seeder.stream());
            let mut ex_q = ExampleOracle::unlabeled(inst.q.clone(), seeder.stream());
            let h = if s.pipeline == Pipeline::Parity {
                let span = pq_learn_parity(s.epsilon, s.delta, &mut ex_p, inst.universe.dimension())?;
                record.rank = Some(span.basis.rank());
                SelectiveHypothesis::Span(span)
            } else {
                let learner = prep.learner.clone().expect("class materialized");
                let sd = SliceAndDice::new(learner, s.mode);
                let (h, trace) = sd.run(s.epsilon, s.delta, &mut ex_p, &mut ex_q, &mut seeder)?;
                record.timed_out = trace.timed_out();
                record.trace = Some(trace);
                h
            };
            record.draws = ex_p.draws() + ex_q.draws();
            let f = &inst.target;
            record.err_q = Some(err(&inst.q, &h, f)?);
            record.err_p = Some(err(&inst.p, &h, f)?);
            record.rej_p = Some(rej(&inst.p, &h)?);
            record.rej_q = Some(rej(&inst.q, &h)?);
            let rates = false_rates(&LabeledDistribution::noiseless(inst.q.clone(), f.clone()), &h)?;
            record.false_positive = Some(rates.positive);
            record.false_negative = Some(rates.negative);
            record.success =
                record.err_q.unwrap() <= s.epsilon + TOLERANCE && record.rej_p.unwrap() <= s.epsilon + TOLERANCE;
            h
        }
        Pipeline::RoundTrip => {
            let learner = prep.learner.clone().expect("class materialized");
            let sd = SliceAndDice::new(learner, s.mode);
            let mut ex_d = ExampleOracle::labeled(inst.labeled.clone(), seeder.stream());
            let out = pq_to_positive_reliable(&sd, &mut ex_d, s.epsilon, s.delta, s.mode, &mut seeder)?;
            record.draws = ex_d.draws();
            if let Some(pq) = &out.pq {
                record.timed_out = pq.timed_out;
                record.trace = pq.trace.clone();
            }
            let rates = false_rates(&inst.labeled, &out.hypothesis)?;
            let opt = prep.opt_plus.expect("computed for round trips");
            record.false_positive = Some(rates.positive);
            record.false_negative = Some(rates.negative);
            record.opt_plus = Some(opt);
            record.err_p = Some(err(&inst.p, &out.hypothesis, &inst.target)?);
            record.success =
                rates.positive <= s.epsilon + TOLERANCE && rates.negative <= opt + s.epsilon + TOLERANCE;
            SelectiveHypothesis::Total(out.hypothesis)
        }
    };
    Ok(Outcome { hypothesis, record })
}

/// Runs every trial of `s`; trial `i` is seeded by `trial_seed(s.seed, i)`
/// whatever the scheduling, so reports only differ in timing fields.
pub fn run_scenario(s: &Scenario, parallelism: Parallelism) -> Result<TrialReport> {
    s.validate()?;
    let start = Instant::now();
    // Parallelize across trials when there are several, inside the learner
    // otherwise.
    let (outer, inner) = if s.trials > 1 {
        (parallelism, Parallelism::Sequential)
    } else {
        (Parallelism::Sequential, parallelism)
    };
    let fixed = if s.is_randomized() { None } else { Some(prepare(s, s.seed, inner)?) };
    let results = par::map(s.trials as usize, outer, |i| {
        let seed = trial_seed(s.seed, i as u64);
        let t0 = Instant::now();
        let prepared;
        let prep = match &fixed {
            Some(p) => p,
            None => match prepare(s, seed, inner) {
                Ok(p) => {
                    prepared = p;
                    &prepared
                }
                Err(e) => {
                    let mut r = empty_record(i as u64, seed);
                    r.error = Some(e.to_string());
                    return (r, None);
                }
            },
        };
        let (mut record, h) = match run_trial(s, prep, i as u64, seed) {
            Ok(o) => (o.record, Some(o.hypothesis)),
            Err(e) => {
                let mut r = empty_record(i as u64, seed);
                r.error = Some(e.to_string());
                (r, None)
            }
        };
        record.wall_ms = t0.elapsed().as_secs_f64() * 1e3;
        (record, h)
    });
    let mut hypothesis = None;
    let mut trials = Vec::with_capacity(results.len());
    for (i, (record, h)) in results.into_iter().enumerate() {
        if i == 0 {
            hypothesis = h;
        }
        trials.push(record);
    }
    Ok(TrialReport {
        schema: REPORT_SCHEMA.to_string(),
        scenario: s.clone(),
        aggregate: Aggregate::of(&trials, s.delta),
        trials,
        hypothesis,
        wall_ms: start.elapsed().as_secs_f64() * 1e3,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::scenario::{builtin, fig1a};

    #[test]
    fn zero_trials_give_an_empty_valid_report() {
        let mut s = fig1a();
        s.trials = 0;
        let r = run_scenario(&s, Parallelism::Sequential).unwrap();
        assert!(r.trials.is_empty());
        assert_eq!(r.schema, REPORT_SCHEMA);
        assert!(TrialReport::from_json(&r.to_json(true)).is_ok());
    }

    #[test]
    fn fig1a_report() {
        let r = run_scenario(&fig1a(), Parallelism::Sequential).unwrap();
        let t = &r.trials[0];
        assert_eq!((t.err_q, t.rej_p, t.rej_q), (Some(0.0), Some(0.0), Some(0.5)));
        assert!(t.success);
    }

    #[test]
    fn sequential_and_parallel_reports_match() {
        let mut s = builtin("parity-d8").unwrap();
        s.trials = 20;
        let a = run_scenario(&s, Parallelism::Sequential).unwrap();
        let b = run_scenario(&s, Parallelism::Parallel).unwrap();
        assert_eq!(a.to_json(false), b.to_json(false));
        assert_eq!(a.aggregate.errors, 0);
    }

    #[test]
    fn round_trip_scenario_runs() {
        let mut s = builtin("round-trip").unwrap();
        s.trials = 2;
        let r = run_scenario(&s, Parallelism::Sequential).unwrap();
        assert_eq!(r.aggregate.errors, 0, "{:?}", r.trials[0].error);
        assert!(r.trials.iter().all(|t| t.success));
    }
}
