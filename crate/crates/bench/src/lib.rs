//! Corpus loading shared by the benchmarks.

use std::path::PathBuf;

use mcm_core::explore::Checker;
use mcm_core::lang::{parse_program, BoundsConfig};
use mcm_core::mcm::parse_mcm;

pub fn corpus_path(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../corpus")
        .join(rel)
}

/// Builds a checker for corpus files `prog` and `mcm` with `(process,
/// supremum)` bounds.
pub fn corpus_checker(prog: &str, mcm: &str, suprema: &[(usize, usize)]) -> Checker {
    let read = |rel: &str| std::fs::read_to_string(corpus_path(rel)).expect("corpus file");
    let mut b = BoundsConfig::new();
    for &(p, k) in suprema {
        b.set_supremum(p, k).expect("supremum at least 1");
    }
    Checker::new(
        parse_program(&read(prog)).expect("corpus program parses"),
        b,
        parse_mcm(&read(mcm)).expect("corpus MCM parses"),
    )
    .expect("bounds fit the program")
}
