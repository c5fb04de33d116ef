//! Reported counterexamples replay to the failure they claim.

mod common;

use mcm_core::constraints::Mode;
use mcm_core::explore::{ExploreOptions, Verdict};

const MODES: [Mode; 3] = [
    Mode {
        guards: true,
        predicates: false,
        stages: false,
    },
    Mode {
        guards: true,
        predicates: true,
        stages: false,
    },
    Mode::ALL,
];

#[test]
fn every_violating_entry_replays() {
    let m = common::manifest();
    let mut checked = 0;
    for e in m.entries.iter().filter(|e| e.expect == Verdict::Violation) {
        let c = common::entry_checker(&m, e);
        let gc = e.name().contains("[0=");
        for mode in MODES {
            if gc && !mode.stages {
                // Without stages the GC models are too large to finish.
                continue;
            }
            for workers in [1, 4] {
                let mut opts = ExploreOptions::new(mode);
                opts.workers = workers;
                let r = c.explore(&opts).unwrap();
                assert_eq!(r.verdict, Verdict::Violation, "{} {mode}", e.name());
                let cx = r.counterexample.expect("violations carry a counterexample");
                let first = c.replay(&cx.steps).unwrap();
                assert!(first.confirmed(), "{} {mode}: {first}", e.name());
                assert!(first.admissible);
                assert_eq!(first.failure.as_ref(), Some(&cx.failure), "{}", e.name());
                assert_eq!(
                    c.replay(&cx.steps).unwrap(),
                    first,
                    "replay is deterministic"
                );
                checked += 1;
            }
        }
    }
    assert!(checked >= 20, "checked {checked}");
}

#[test]
fn single_worker_search_is_deterministic() {
    let m = common::manifest();
    let e = m
        .entries
        .iter()
        .find(|e| e.name().starts_with("chicken/pso[0=1,1=2]"))
        .unwrap();
    let c = common::entry_checker(&m, e);
    let a = c.explore(&ExploreOptions::new(Mode::ALL)).unwrap();
    let b = c.explore(&ExploreOptions::new(Mode::ALL)).unwrap();
    assert_eq!(a.counterexample, b.counterexample);
    assert_eq!(a.states_stored, b.states_stored);
}

#[test]
fn corrupted_traces_are_rejected() {
    let m = common::manifest();
    let e = m
        .entries
        .iter()
        .find(|e| e.name().starts_with("sb/tso"))
        .unwrap();
    let c = common::entry_checker(&m, e);
    let cx = c
        .explore(&ExploreOptions::new(Mode::ALL))
        .unwrap()
        .counterexample
        .unwrap();

    let mut bogus = cx.steps.clone();
    bogus.insert(0, "Fe(7,nowhere,0)".into());
    assert!(c.replay(&bogus).is_err());

    let mut reversed = cx.steps.clone();
    reversed.reverse();
    assert!(c.replay(&reversed).is_err());

    // A prefix is a valid trace that does not yet fail.
    let prefix = &cx.steps[..cx.steps.len() / 2];
    let r = c.replay(prefix).unwrap();
    assert!(r.failure.is_none());
    assert!(!r.confirmed());
}
