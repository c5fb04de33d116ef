#![allow(dead_code)]

use std::collections::BTreeSet;
use std::path::PathBuf;

use mcm_core::corpus::{Manifest, ManifestEntry};
use mcm_core::explore::Checker;
use mcm_core::lang::{parse_program, BoundsConfig};
use mcm_core::mcm::parse_mcm;

pub fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

pub fn manifest() -> Manifest {
    Manifest::load(&corpus_dir().join("manifest.txt")).expect("bundled manifest loads")
}

pub fn read(rel: &str) -> String {
    std::fs::read_to_string(corpus_dir().join(rel)).expect("corpus file")
}

pub fn checker(src: &str, mcm: &str, bounds: BoundsConfig) -> Checker {
    Checker::new(parse_program(src).unwrap(), bounds, parse_mcm(mcm).unwrap()).unwrap()
}

pub fn entry_checker(m: &Manifest, e: &ManifestEntry) -> Checker {
    let prog = std::fs::read_to_string(m.resolve(&e.model)).unwrap();
    let mcm = std::fs::read_to_string(m.resolve(&e.mcm)).unwrap();
    checker(&prog, &mcm, e.bounds().unwrap())
}

pub mod permutations;
pub mod store_buffer;

/// Every interleaving of two CAS(x, 0, 1, r) blocks: the first to run wins.
pub fn cas_oracle() -> BTreeSet<Vec<i64>> {
    let mut out = BTreeSet::new();
    for first in 0..2 {
        let mut x = 0;
        let mut r = [0i64; 2];
        for p in [first, 1 - first] {
            if x == 0 {
                x = 1;
                r[p] = 1;
            }
        }
        out.insert(r.to_vec());
    }
    out
}
