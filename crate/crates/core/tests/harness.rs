use pqlearn_core::harness::report::REPORT_SCHEMA;
use pqlearn_core::harness::{builtin, emit_plot, run_scenario, Scenario, TrialReport, BUILTIN_NAMES};
use pqlearn_core::par::Parallelism;
use pqlearn_core::slicedice::Mode;

#[test]
fn reports_are_reproducible_without_timing() {
    for name in ["fig1a", "parity-d8", "round-trip"] {
        let mut s = builtin(name).unwrap();
        s.trials = s.trials.min(30);
        let a = run_scenario(&s, Parallelism::Parallel).unwrap().to_json(false);
        let b = run_scenario(&s, Parallelism::Sequential).unwrap().to_json(false);
        assert_eq!(a, b, "{name}");
        assert!(!a.contains("wall_ms"));
    }
}

#[test]
fn report_json_round_trips() {
    let r = run_scenario(&builtin("fig1a").unwrap(), Parallelism::Parallel).unwrap();
    assert_eq!(r.schema, REPORT_SCHEMA);
    assert_eq!(TrialReport::from_json(&r.to_json(true)).unwrap(), r);
}

#[test]
fn sampling_mode_agrees_with_exact_mode_on_fig1a() {
    let mut s = builtin("fig1a").unwrap();
    assert!(run_scenario(&s, Parallelism::Parallel).unwrap().aggregate.success_fraction == 1.0);
    s.mode = Mode::Sampling;
    s.trials = 50;
    let r = run_scenario(&s, Parallelism::Parallel).unwrap();
    assert!(r.aggregate.success_fraction >= 1.0 - s.delta, "{:?}", r.aggregate);
}

#[test]
fn halfspace_scenario_succeeds_and_plots_rejection_strips() {
    let s = builtin("halfspaces-2d").unwrap();
    let r = run_scenario(&s, Parallelism::Parallel).unwrap();
    let t = &r.trials[0];
    assert!(t.success, "{t:?}");
    assert!(t.rej_q.unwrap() > 0.0, "the disjoint part of Q should be rejected");
    let svg = emit_plot(&r).unwrap();
    assert!(svg.contains("url(#reject)"), "no shaded region");
    assert!(svg.contains("stroke-dasharray"), "no base line");
}

#[test]
fn every_builtin_validates() {
    for name in BUILTIN_NAMES {
        let s = builtin(name).unwrap();
        s.validate().unwrap();
        assert_eq!(Scenario::from_json(&s.to_json()).unwrap(), s);
    }
}
