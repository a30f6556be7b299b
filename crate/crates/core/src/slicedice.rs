//! Dicing a slice of a base classifier until the test distribution's mass
//! on the surviving region is small, and the Slice-and-Dice PQ learner
//! built from two dicing passes.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::distribution::Law;
use crate::error::{check_unit_open, Error, Result};
use crate::hypothesis::{Diced, Hypothesis, SelectiveHypothesis};
use crate::oracle::{condition, default_attempt_cap, estimate_prob, mixture, EstimatorBudget, Event, ExampleSource, Relabeled};
use crate::reduction::{PqLearner, PqOutcome};
use crate::reliable::{Polarity, ReliableLearner, ReliableRequest};
use crate::rng::Seeder;

/// How probabilities inside the algorithm are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Summation over the exact laws of the oracles.
    Exact,
    /// Hoeffding-calibrated estimates from draws.
    Sampling,
}

/// Names of the conditioning events; an exhausted attempt cap reports
/// which one ran dry.
pub const SLICE_EVENT: &str = "slice";
pub const REGION_EVENT: &str = "region";

pub const DEFAULT_DRAW_BUDGET_FACTOR: f64 = 50.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiceConfig {
    pub epsilon: f64,
    pub delta: f64,
    pub mode: Mode,
    /// Multiple of the nominal draw count after which a run gives up.
    pub draw_budget_factor: f64,
}

impl DiceConfig {
    pub fn new(epsilon: f64, delta: f64, mode: Mode) -> Result<Self> {
        check_unit_open("epsilon", epsilon)?;
        check_unit_open("delta", delta)?;
        Ok(DiceConfig { epsilon, delta, mode, draw_budget_factor: DEFAULT_DRAW_BUDGET_FACTOR })
    }
}

/// Everything derived from `(ε, δ, mode)` before the first draw.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiceParams {
    /// The accuracy the loop's thresholds use: `ε` exactly, `ε/2` when
    /// probabilities are estimated.
    pub working_epsilon: f64,
    /// `M = (2/ε)·ln(1/ε)` at the working accuracy.
    pub m: f64,
    /// `⌈M⌉`, the most learner calls one pass makes.
    pub max_iterations: u64,
    pub learner_epsilon: f64,
    pub learner_delta: f64,
    /// Estimator accuracy and per-test confidence (sampling only).
    pub test_accuracy: f64,
    pub test_confidence: f64,
}

impl DiceParams {
    pub fn new(cfg: &DiceConfig) -> Self {
        let eps = match cfg.mode {
            Mode::Exact => cfg.epsilon,
            Mode::Sampling => cfg.epsilon / 2.0,
        };
        let m = (2.0 / eps) * (1.0 / eps).ln();
        let max_iterations = m.ceil().max(1.0) as u64;
        let m_div = m.max(1.0);
        let learner_delta = match cfg.mode {
            Mode::Exact => cfg.delta / m_div,
            Mode::Sampling => cfg.delta / (4.0 * m_div),
        };
        DiceParams {
            working_epsilon: eps,
            m,
            max_iterations,
            learner_epsilon: eps / (2.0 * m_div),
            learner_delta,
            test_accuracy: eps / 4.0,
            test_confidence: cfg.delta / (4.0 * (max_iterations as f64 + 2.0)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiceExit {
    /// The slice itself is too light under `P`; all of it is rejected.
    SliceRejected,
    /// `Q` puts at most `ε` on the surviving region.
    Covered,
    /// The last dicer barely fires under `Q` and was discarded.
    Break,
    /// `⌈M⌉` dicers were trained without covering the region.
    IterationCap,
    /// The draw budget ran out.
    TimedOut,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiceIteration {
    /// `Q(ℰᵢ)`, exact or estimated.
    pub q_mass: f64,
    /// `Pr_{Q|ℰᵢ}[cᵢ fires]`; absent when the region ran dry first.
    pub fire_mass: Option<f64>,
    pub retained: bool,
    /// Underlying draws spent in this iteration.
    pub draws: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiceTrace {
    pub slice: bool,
    pub params: DiceParams,
    /// `P(c = slice)`, exact or estimated.
    pub slice_mass: f64,
    pub iterations: Vec<DiceIteration>,
    pub exit: DiceExit,
    pub learner_calls: u64,
    pub draws: u64,
}

impl DiceTrace {
    pub fn retained(&self) -> usize {
        self.iterations.iter().filter(|i| i.retained).count()
    }
}

enum Probe {
    Exact { p: Law, q: Law },
    Sampling { budget: EstimatorBudget, attempt_cap: u64 },
}

fn region_event(c: &Hypothesis, slice: bool, dicers: &[Hypothesis]) -> Event {
    let (c, dicers) = (c.clone(), dicers.to_vec());
    Event::on_point(REGION_EVENT, move |x| c.eval(x) == slice && dicers.iter().all(|d| d.eval(x) == slice))
}

fn negligible_on(e: &Error, name: &str) -> bool {
    matches!(e, Error::EventNegligible { event, .. } if *event == name)
}

/// Nominal draw count of one pass: every learner call and every test at
/// the smallest conditioning mass the loop tolerates.
pub fn nominal_draws(params: &DiceParams, learner_samples: u64, test_samples: u64) -> f64 {
    let per_mass = 2.0 / params.working_epsilon;
    let calls = params.max_iterations as f64;
    calls * learner_samples as f64 * per_mass + (calls + 2.0) * test_samples as f64 * per_mass
}

/// One dicing pass over the slice `{c = slice}`.
///
/// `slice = false` is DICE₀: `Q`-examples are labeled 1 and the learner is
/// asked for positive reliability. `slice = true` mirrors it.
pub fn dice(
    slice: bool,
    cfg: &DiceConfig,
    ex_p: &mut dyn ExampleSource,
    ex_q: &mut dyn ExampleSource,
    c: &Hypothesis,
    learner: &dyn ReliableLearner,
    seeder: &mut Seeder,
) -> Result<(Diced, DiceTrace)> {
    let params = DiceParams::new(cfg);
    let eps = params.working_epsilon;
    let polarity = if slice { Polarity::Negative } else { Polarity::Positive };
    let request = ReliableRequest::new(params.learner_epsilon, params.learner_delta, polarity)?;
    let learner_samples = learner.sample_size(&request);

    let (probe, budget) = match cfg.mode {
        Mode::Exact => (Probe::Exact { p: ex_p.law()?, q: ex_q.law()? }, f64::INFINITY),
        Mode::Sampling => {
            let budget = EstimatorBudget::new(params.test_accuracy, params.test_confidence)?;
            let total = params.max_iterations as f64 * learner_samples as f64
                + (params.max_iterations as f64 + 2.0) * budget.samples() as f64;
            let attempt_cap = default_attempt_cap(eps, total, cfg.delta);
            let nominal = nominal_draws(&params, learner_samples, budget.samples());
            (Probe::Sampling { budget, attempt_cap }, cfg.draw_budget_factor * nominal)
        }
    };
    let attempt_cap = match probe {
        Probe::Sampling { attempt_cap, .. } => attempt_cap,
        Probe::Exact { .. } => u64::MAX,
    };
    let spent = |p: &dyn ExampleSource, q: &dyn ExampleSource| p.draws() + q.draws();
    let start = spent(ex_p, ex_q);

    let base = c.clone();
    let on_slice = Event::on_point(SLICE_EVENT, move |x| base.eval(x) == slice);

    let mut trace = DiceTrace {
        slice,
        params,
        slice_mass: 0.0,
        iterations: Vec::new(),
        exit: DiceExit::Covered,
        learner_calls: 0,
        draws: 0,
    };
    let mut dicers: Vec<Hypothesis> = Vec::new();
    let mut reject_slice = false;

    trace.slice_mass = match &probe {
        Probe::Exact { p, .. } => p.probability(&on_slice),
        Probe::Sampling { budget, .. } => estimate_prob(ex_p, &on_slice, budget)?,
    };
    if trace.slice_mass < eps {
        reject_slice = true;
        trace.exit = DiceExit::SliceRejected;
    } else {
        loop {
            let before = spent(ex_p, ex_q);
            if (before - start) as f64 > budget {
                trace.exit = DiceExit::TimedOut;
                break;
            }
            let region = region_event(c, slice, &dicers);
            let q_mass = match &probe {
                Probe::Exact { q, .. } => q.probability(&region),
                Probe::Sampling { budget, .. } => estimate_prob(ex_q, &region, budget)?,
            };
            if q_mass <= eps {
                trace.exit = DiceExit::Covered;
                break;
            }
            if trace.learner_calls >= params.max_iterations {
                trace.exit = DiceExit::IterationCap;
                break;
            }
            let mut mix = mixture(
                condition(&mut *ex_p, on_slice.clone(), attempt_cap),
                Relabeled::new(condition(&mut *ex_q, region.clone(), attempt_cap), !slice),
                0.5,
                seeder.stream(),
            )?;
            trace.learner_calls += 1;
            let ci = match learner.learn(&request, &mut mix) {
                Ok(h) => h,
                Err(e) if negligible_on(&e, SLICE_EVENT) => {
                    reject_slice = true;
                    trace.exit = DiceExit::SliceRejected;
                    break;
                }
                Err(e) if negligible_on(&e, REGION_EVENT) => {
                    trace.iterations.push(DiceIteration {
                        q_mass,
                        fire_mass: None,
                        retained: false,
                        draws: spent(ex_p, ex_q) - before,
                    });
                    trace.exit = DiceExit::Covered;
                    break;
                }
                Err(e) => return Err(e),
            };
            let fires = {
                let ci = ci.clone();
                Event::on_point("fires", move |x| ci.eval(x) != slice)
            };
            let fire_mass = match &probe {
                Probe::Exact { q, .. } => {
                    let both = {
                        let (r, f) = (region.clone(), fires.clone());
                        Event::new("region_fires", move |x, y| r.holds(x, y) && f.holds(x, y))
                    };
                    Some(q.mass(&both) / q.mass(&region))
                }
                Probe::Sampling { budget, attempt_cap } => {
                    let mut cond = condition(&mut *ex_q, region.clone(), *attempt_cap);
                    match estimate_prob(&mut cond, &fires, budget) {
                        Ok(v) => Some(v),
                        Err(e) if negligible_on(&e, REGION_EVENT) => None,
                        Err(e) => return Err(e),
                    }
                }
            };
            let retained = matches!(fire_mass, Some(v) if v >= eps / 2.0);
            trace.iterations.push(DiceIteration {
                q_mass,
                fire_mass,
                retained,
                draws: spent(ex_p, ex_q) - before,
            });
            if !retained {
                trace.exit = DiceExit::Break;
                break;
            }
            dicers.push(ci);
        }
    }
    trace.draws = spent(ex_p, ex_q) - start;
    Ok((Diced { base: c.clone(), slice, dicers, reject_slice }, trace))
}

pub fn dice0(
    cfg: &DiceConfig,
    ex_p: &mut dyn ExampleSource,
    ex_q: &mut dyn ExampleSource,
    c: &Hypothesis,
    learner: &dyn ReliableLearner,
    seeder: &mut Seeder,
) -> Result<(Diced, DiceTrace)> {
    dice(false, cfg, ex_p, ex_q, c, learner, seeder)
}

pub fn dice1(
    cfg: &DiceConfig,
    ex_p: &mut dyn ExampleSource,
    ex_q: &mut dyn ExampleSource,
    c: &Hypothesis,
    learner: &dyn ReliableLearner,
    seeder: &mut Seeder,
) -> Result<(Diced, DiceTrace)> {
    dice(true, cfg, ex_p, ex_q, c, learner, seeder)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SliceDiceTrace {
    pub base: Hypothesis,
    pub dice0: DiceTrace,
    pub dice1: DiceTrace,
}

impl SliceDiceTrace {
    pub fn timed_out(&self) -> bool {
        self.dice0.exit == DiceExit::TimedOut || self.dice1.exit == DiceExit::TimedOut
    }
}

/// Base classifier from a reliable learner at `(ε/8, δ/4)`, then both
/// slices diced at `(ε/4, δ/4)`; the two results are combined by
/// agreement.
#[derive(Clone)]
pub struct SliceAndDice {
    learner: Arc<dyn ReliableLearner>,
    mode: Mode,
    base_polarity: Polarity,
    draw_budget_factor: f64,
}

impl SliceAndDice {
    pub fn new(learner: Arc<dyn ReliableLearner>, mode: Mode) -> Self {
        SliceAndDice {
            learner,
            mode,
            base_polarity: Polarity::Positive,
            draw_budget_factor: DEFAULT_DRAW_BUDGET_FACTOR,
        }
    }

    /// Either polarity yields a PAC learner for the base classifier when
    /// the target lies in the class.
    pub fn with_base_polarity(mut self, polarity: Polarity) -> Self {
        self.base_polarity = polarity;
        self
    }

    pub fn with_draw_budget_factor(mut self, factor: f64) -> Self {
        self.draw_budget_factor = factor;
        self
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn run(
        &self,
        epsilon: f64,
        delta: f64,
        ex_p: &mut dyn ExampleSource,
        ex_q: &mut dyn ExampleSource,
        seeder: &mut Seeder,
    ) -> Result<(SelectiveHypothesis, SliceDiceTrace)> {
        let base_request = ReliableRequest::new(epsilon / 8.0, delta / 4.0, self.base_polarity)?;
        let c = self.learner.learn(&base_request, ex_p)?;
        let mut cfg = DiceConfig::new(epsilon / 4.0, delta / 4.0, self.mode)?;
        cfg.draw_budget_factor = self.draw_budget_factor;
        let (h_plus, t0) = dice0(&cfg, ex_p, ex_q, &c, self.learner.as_ref(), seeder)?;
        let (h_minus, t1) = dice1(&cfg, ex_p, ex_q, &c, self.learner.as_ref(), seeder)?;
        let h = SelectiveHypothesis::agreement(SelectiveHypothesis::Diced(h_plus), SelectiveHypothesis::Diced(h_minus));
        Ok((h, SliceDiceTrace { base: c, dice0: t0, dice1: t1 }))
    }
}

impl PqLearner for SliceAndDice {
    fn learn(
        &self,
        epsilon: f64,
        delta: f64,
        ex_p: &mut dyn ExampleSource,
        ex_q: &mut dyn ExampleSource,
        seeder: &mut Seeder,
    ) -> Result<PqOutcome> {
        let (hypothesis, trace) = self.run(epsilon, delta, ex_p, ex_q, seeder)?;
        Ok(PqOutcome { hypothesis, timed_out: trace.timed_out(), trace: Some(trace) })
    }

    fn nominal_draws(&self, epsilon: f64, delta: f64) -> f64 {
        if self.mode == Mode::Exact {
            return 0.0;
        }
        let Ok(cfg) = DiceConfig::new(epsilon / 4.0, delta / 4.0, self.mode) else {
            return 0.0;
        };
        let params = DiceParams::new(&cfg);
        let req = ReliableRequest {
            epsilon: params.learner_epsilon,
            delta: params.learner_delta,
            polarity: Polarity::Positive,
        };
        let tests = EstimatorBudget::new(params.test_accuracy, params.test_confidence)
            .map(|b| b.samples())
            .unwrap_or(0);
        2.0 * nominal_draws(&params, self.learner.sample_size(&req), tests)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distribution::{Distribution, LabeledDistribution};
    use crate::domain::Universe;
    use crate::hypothesis::{Classifier, ConceptClass, Halfspace};
    use crate::metrics::{err, rej};
    use crate::oracle::ExampleOracle;
    use crate::reliable::ExhaustiveReliable;
    use crate::rng::stream;

    fn fig1a() -> (Arc<Universe>, Distribution, Distribution, Hypothesis, Arc<ExhaustiveReliable>) {
        let (c, s) = (60f64.to_radians().cos(), 60f64.to_radians().sin());
        let u = Universe::plane(&[[1.0, 0.0], [-1.0, 0.0], [c, s], [-c, -s]]).unwrap();
        let p = Distribution::uniform(u.clone(), &[0, 1]).unwrap();
        let q = Distribution::uniform_all(u.clone()).unwrap();
        let f = Hypothesis::halfspace(Halfspace::at_angle(0.0, 0.0));
        let class = ConceptClass::HomogeneousHalfspaces { angles: 720 }.materialize(&u).unwrap();
        (u, p, q, f, Arc::new(ExhaustiveReliable::new(Arc::new(class))))
    }

    fn oracles(p: &Distribution, q: &Distribution, f: &Hypothesis) -> (ExampleOracle, ExampleOracle) {
        (
            ExampleOracle::labeled(LabeledDistribution::noiseless(p.clone(), f.clone()), stream(0, 0)),
            ExampleOracle::unlabeled(q.clone(), stream(0, 1)),
        )
    }

    #[test]
    fn params_follow_the_iteration_bound() {
        let p = DiceParams::new(&DiceConfig::new(0.1, 0.1, Mode::Exact).unwrap());
        assert!((p.m - 20.0 * 10f64.ln()).abs() < 1e-12);
        assert_eq!(p.max_iterations, 47);
        let s = DiceParams::new(&DiceConfig::new(0.1, 0.1, Mode::Sampling).unwrap());
        assert_eq!(s.working_epsilon, 0.05);
        assert!((s.learner_delta - 0.1 / (4.0 * s.m)).abs() < 1e-15);
    }

    #[test]
    fn fig1a_dice0_rejects_minus_v_only() {
        let (u, p, q, f, learner) = fig1a();
        let (mut ep, mut eq) = oracles(&p, &q, &f);
        let cfg = DiceConfig::new(0.1, 0.1, Mode::Exact).unwrap();
        let (h, trace) = dice0(&cfg, &mut ep, &mut eq, &f, learner.as_ref(), &mut Seeder::new(1)).unwrap();
        assert_eq!(h.predict(u.point(1)), Some(false));
        assert_eq!(h.predict(u.point(3)), None);
        assert_eq!(h.predict(u.point(0)), Some(true));
        assert_eq!(trace.retained(), 1);
    }

    #[test]
    fn fig1a_slice_and_dice() {
        let (u, p, q, f, learner) = fig1a();
        let (mut ep, mut eq) = oracles(&p, &q, &f);
        let sd = SliceAndDice::new(learner, Mode::Exact);
        let (h, _) = sd.run(0.1, 0.1, &mut ep, &mut eq, &mut Seeder::new(1)).unwrap();
        let out: Vec<_> = u.points().iter().map(|x| h.predict(x)).collect();
        assert_eq!(out, [Some(true), Some(false), None, None]);
        assert_eq!(rej(&p, &h).unwrap(), 0.0);
        assert_eq!(rej(&q, &h).unwrap(), 0.5);
        assert_eq!(err(&q, &h, &f).unwrap(), 0.0);
    }

    #[test]
    fn same_distributions_need_no_rejection() {
        let (u, p, _, f, learner) = fig1a();
        let (mut ep, mut eq) = oracles(&p, &p, &f);
        let cfg = DiceConfig::new(0.1, 0.1, Mode::Exact).unwrap();
        for slice in [false, true] {
            let (h, trace) = dice(slice, &cfg, &mut ep, &mut eq, &f, learner.as_ref(), &mut Seeder::new(2)).unwrap();
            assert_eq!(trace.exit, DiceExit::Break);
            assert_eq!(trace.learner_calls, 1);
            assert!(u.points()[..2].iter().all(|x| h.predict(x).is_some()));
        }
    }

    #[test]
    fn light_slice_is_rejected_wholesale() {
        let (u, _, q, f, learner) = fig1a();
        let p = Distribution::new(u.clone(), [(0, 0.95), (1, 0.05)]).unwrap();
        let (mut ep, mut eq) = oracles(&p, &q, &f);
        let cfg = DiceConfig::new(0.1, 0.1, Mode::Exact).unwrap();
        let (h, trace) = dice0(&cfg, &mut ep, &mut eq, &f, learner.as_ref(), &mut Seeder::new(3)).unwrap();
        assert_eq!(trace.exit, DiceExit::SliceRejected);
        assert_eq!(h.predict(u.point(1)), None);
        assert_eq!(h.predict(u.point(0)), Some(true));
        let (h1, t1) = dice1(&cfg, &mut ep, &mut eq, &f, learner.as_ref(), &mut Seeder::new(3)).unwrap();
        assert_ne!(t1.exit, DiceExit::SliceRejected);
        assert_eq!(h1.predict(u.point(1)), Some(false));
    }

    #[test]
    fn fig1a_sampling_mode() {
        let (u, p, q, f, _) = fig1a();
        let class = ConceptClass::HomogeneousHalfspaces { angles: 72 }.materialize(&u).unwrap();
        let learner = Arc::new(crate::reliable::CostSensitiveReliable::new(Arc::new(class)));
        let (mut ep, mut eq) = oracles(&p, &q, &f);
        let sd = SliceAndDice::new(learner, Mode::Sampling);
        let (h, trace) = sd.run(0.1, 0.1, &mut ep, &mut eq, &mut Seeder::new(5)).unwrap();
        assert!(!trace.timed_out());
        assert!(rej(&p, &h).unwrap() <= 0.1);
        assert!(err(&q, &h, &f).unwrap() <= 0.1);
    }
}
