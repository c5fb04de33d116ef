//! Litmus outcomes of the bundled models against a brute-force store-buffer
//! machine.

mod common;

use common::store_buffer::{litmus, oracle, Ins, Machine};
use mcm_core::constraints::Mode;
use mcm_core::explore::{Checker, ExploreOptions, Verdict};
use mcm_core::lang::{parse_program, BoundsConfig};
use mcm_core::mcm::{parse_mcm, McmSpec};

fn mcm(m: Machine) -> McmSpec {
    parse_mcm(match m {
        Machine::Sc => include_str!("../../../corpus/mcm/sc.mcm"),
        Machine::Tso => include_str!("../../../corpus/mcm/tso.mcm"),
        Machine::Pso => include_str!("../../../corpus/mcm/pso.mcm"),
    })
    .unwrap()
}

fn checker(src: &str, m: Machine) -> Checker {
    Checker::new(parse_program(src).unwrap(), BoundsConfig::new(), mcm(m)).unwrap()
}

const MODES: [Mode; 4] = [
    Mode::BASELINE,
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

/// Timestamps make all but the smallest tests too large to enumerate
/// quickly, so the others run with order predicates only.
fn modes_for(name: &str) -> &'static [Mode] {
    if name == "sb" || name == "mp" {
        &MODES
    } else {
        &MODES[2..]
    }
}

#[test]
fn outcome_sets_match_store_buffer_machines() {
    for (name, l) in litmus().into_iter().filter(|(n, _)| *n != "dekker") {
        for m in [Machine::Sc, Machine::Tso, Machine::Pso] {
            let expected = oracle(&l.progs, l.nregs, l.nlocs, m);
            let c = checker(&l.src, m);
            for &mode in modes_for(name) {
                let got = c.collect_outcomes(mode).unwrap();
                assert_eq!(got, expected, "{name} under {m:?} in mode {mode}");
            }
        }
    }
}

fn verdict(src: &str, m: Machine, mode: Mode) -> Verdict {
    checker(src, m)
        .explore(&ExploreOptions::new(mode))
        .unwrap()
        .verdict
}

#[test]
fn litmus_verdicts() {
    let sb = include_str!("../../../corpus/litmus/sb.mcm-prog");
    let mp = include_str!("../../../corpus/litmus/mp.mcm-prog");
    let mpf = include_str!("../../../corpus/litmus/mp_fence.mcm-prog");
    let dekker = include_str!("../../../corpus/litmus/dekker.mcm-prog");
    for &mode in modes_for("sb") {
        assert_eq!(verdict(sb, Machine::Sc, mode), Verdict::Pass);
        assert_eq!(verdict(sb, Machine::Tso, mode), Verdict::Violation);
        assert_eq!(verdict(sb, Machine::Pso, mode), Verdict::Violation);
        assert_eq!(verdict(mp, Machine::Pso, mode), Verdict::Violation);
        assert_eq!(verdict(mp, Machine::Tso, mode), Verdict::Pass);
    }
    for &mode in modes_for("dekker") {
        assert_eq!(verdict(mpf, Machine::Pso, mode), Verdict::Pass);
        assert_eq!(verdict(dekker, Machine::Sc, mode), Verdict::Pass);
        assert_eq!(verdict(dekker, Machine::Tso, mode), Verdict::Violation);
    }
}

#[test]
fn iriw_divergent_views_unreachable() {
    let iriw = include_str!("../../../corpus/litmus/iriw.mcm-prog");
    for &mode in modes_for("iriw") {
        for m in [Machine::Sc, Machine::Tso, Machine::Pso] {
            assert_eq!(verdict(iriw, m, mode), Verdict::Pass, "{m:?} {mode}");
        }
    }
}

#[test]
fn dekker_verdict_matches_oracle() {
    // Both enter iff both flag loads read 0, which is the SB outcome.
    use Ins::*;
    let progs = vec![vec![St(0, 1), Ld(0, 1)], vec![St(1, 1), Ld(1, 0)]];
    for m in [Machine::Sc, Machine::Tso, Machine::Pso] {
        let both_enter = oracle(&progs, 2, 2, m).contains(&vec![0, 0]);
        let v = verdict(
            include_str!("../../../corpus/litmus/dekker.mcm-prog"),
            m,
            Mode::ALL,
        );
        assert_eq!(v == Verdict::Violation, both_enter, "{m:?}");
    }
}
