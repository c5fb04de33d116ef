//! Corpus manifests and machine-readable run records.
//!
//! A manifest is a whitespace-separated table, one entry per line:
//!
//! ```text
//! # model                   mcm          bounds   mode                      expect     source   note
//! litmus/sb.mcm-prog        mcm/tso.mcm  -        guards,predicates,stages  violation  derived  SB allowed
//! gc/chicken.mcm-prog       mcm/pso.mcm  0=1,1=2  guards,predicates,stages  violation  published two iterations
//! ```
//!
//! Paths are relative to the manifest's directory. Everything after the
//! sixth column is a free-form note.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::constraints::Mode;
use crate::explore::{Counterexample, Report, Verdict};
use crate::lang::{BoundsConfig, BoundsError};

#[derive(Debug, Error)]
pub enum ManifestError {
    #[error("cannot read manifest {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("manifest line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("manifest line {line}: no such file {path}")]
    MissingFile { line: usize, path: PathBuf },
}

/// Where an expected verdict comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    /// Reported by the published evaluation.
    Published,
    /// Worked out independently of it.
    Derived,
}

impl Source {
    pub fn name(self) -> &'static str {
        match self {
            Source::Published => "published",
            Source::Derived => "derived",
        }
    }

    pub fn from_name(s: &str) -> Option<Source> {
        match s {
            "published" => Some(Source::Published),
            "derived" => Some(Source::Derived),
            _ => None,
        }
    }
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    /// 1-based line in the manifest.
    pub line: usize,
    pub model: PathBuf,
    pub mcm: PathBuf,
    /// Explicit `(process, supremum)` pairs.
    pub suprema: Vec<(usize, usize)>,
    pub mode: Mode,
    pub expect: Verdict,
    pub source: Source,
    pub note: String,
}

impl ManifestEntry {
    pub fn bounds(&self) -> Result<BoundsConfig, BoundsError> {
        let mut b = BoundsConfig::new();
        for &(p, k) in &self.suprema {
            b.set_supremum(p, k)?;
        }
        Ok(b)
    }

    /// `0=1,1=2`, or `-` without explicit suprema.
    pub fn bounds_text(&self) -> String {
        if self.suprema.is_empty() {
            return "-".into();
        }
        self.suprema
            .iter()
            .map(|(p, k)| format!("{p}={k}"))
            .collect::<Vec<_>>()
            .join(",")
    }

    /// Short name such as `sb/tso` or `chicken/pso[1=1]`.
    pub fn name(&self) -> String {
        let stem = |p: &Path| {
            p.file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default()
        };
        format!(
            "{}/{}[{}]",
            stem(&self.model),
            stem(&self.mcm),
            self.bounds_text()
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Manifest {
    /// Directory the entry paths are relative to.
    pub root: PathBuf,
    pub entries: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Manifest, ManifestError> {
        let text = std::fs::read_to_string(path).map_err(|source| ManifestError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let root = path.parent().unwrap_or(Path::new(".")).to_path_buf();
        let m = Manifest::parse(&text, root)?;
        m.check_files()?;
        Ok(m)
    }

    /// Parses manifest text without touching the file system.
    pub fn parse(text: &str, root: PathBuf) -> Result<Manifest, ManifestError> {
        let mut entries = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = n + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            entries.push(parse_entry(line, body)?);
        }
        Ok(Manifest { root, entries })
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        self.root.join(p)
    }

    pub fn check_files(&self) -> Result<(), ManifestError> {
        for e in &self.entries {
            for p in [&e.model, &e.mcm] {
                let full = self.resolve(p);
                if !full.is_file() {
                    return Err(ManifestError::MissingFile {
                        line: e.line,
                        path: full,
                    });
                }
            }
        }
        Ok(())
    }
}

fn parse_entry(line: usize, body: &str) -> Result<ManifestEntry, ManifestError> {
    let err = |message: String| ManifestError::Syntax { line, message };
    let mut cols = body.split_whitespace();
    let mut next = |what: &str| cols.next().ok_or_else(|| err(format!("missing {what}")));
    let model = PathBuf::from(next("model file")?);
    let mcm = PathBuf::from(next("MCM file")?);
    let bounds = next("bounds")?;
    let mode = next("mode")?;
    let expect = next("expected verdict")?;
    let source = next("source tag")?;
    let note = cols.collect::<Vec<_>>().join(" ");

    let mut suprema = Vec::new();
    if bounds != "-" {
        for part in bounds.split(',') {
            let pair = part.split_once('=').and_then(|(p, k)| {
                Some((
                    p.trim().parse::<usize>().ok()?,
                    k.trim().parse::<usize>().ok()?,
                ))
            });
            match pair {
                Some((p, k)) if k >= 1 => suprema.push((p, k)),
                _ => return Err(err(format!("bad bound `{part}`"))),
            }
        }
    }
    let mode = Mode::parse(mode).map_err(|e| err(e.to_string()))?;
    let expect =
        Verdict::from_name(expect).ok_or_else(|| err(format!("unknown verdict `{expect}`")))?;
    let source =
        Source::from_name(source).ok_or_else(|| err(format!("unknown source tag `{source}`")))?;
    Ok(ManifestEntry {
        line,
        model,
        mcm,
        suprema,
        mode,
        expect,
        source,
        note,
    })
}

/// One exploration result, serialized as a line of JSON.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputRecord {
    /// Schema version.
    pub v: u32,
    pub model: String,
    pub mcm: String,
    pub mode: String,
    pub verdict: Verdict,
    pub states: u64,
    pub terminal_states: u64,
    pub transitions: u64,
    pub residual_filtered: u64,
    pub elapsed_us: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<Counterexample>,
}

impl OutputRecord {
    pub const VERSION: u32 = 1;

    pub fn new(model: &str, mcm: &str, mode: Mode, report: &Report) -> Self {
        OutputRecord {
            v: Self::VERSION,
            model: model.to_string(),
            mcm: mcm.to_string(),
            mode: mode.to_string(),
            verdict: report.verdict,
            states: report.states_stored,
            terminal_states: report.terminal_states,
            transitions: report.transitions,
            residual_filtered: report.residual_filtered,
            elapsed_us: report.elapsed.as_micros().try_into().unwrap_or(u64::MAX),
            counterexample: report.counterexample.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("records always serialize")
    }

    pub fn from_json(s: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_entries_and_notes() {
        let m = Manifest::parse(
            "# header\n\n a.prog m.mcm 0=1,1=2 guards,predicates violation published two  words # tail\n\
             b.prog m.mcm - none pass derived\n",
            PathBuf::from("/x"),
        )
        .unwrap();
        assert_eq!(m.entries.len(), 2);
        let e = &m.entries[0];
        assert_eq!(e.line, 3);
        assert_eq!(e.suprema, vec![(0, 1), (1, 2)]);
        assert_eq!(e.expect, Verdict::Violation);
        assert_eq!(e.source, Source::Published);
        assert_eq!(e.note, "two words");
        assert_eq!(e.name(), "a/m[0=1,1=2]");
        assert_eq!(m.entries[1].mode, Mode::BASELINE);
        assert_eq!(m.entries[1].bounds_text(), "-");
        assert_eq!(m.resolve(&e.model), PathBuf::from("/x/a.prog"));
    }

    #[test]
    fn rejects_bad_columns() {
        for bad in [
            "a b",
            "a b 0=0 none pass derived",
            "a b 0:1 none pass derived",
            "a b - fast pass derived",
            "a b - none ok derived",
            "a b - none pass rumour",
        ] {
            let e = Manifest::parse(bad, PathBuf::new()).unwrap_err();
            assert!(
                matches!(e, ManifestError::Syntax { line: 1, .. }),
                "{bad}: {e}"
            );
        }
    }

    #[test]
    fn missing_files_are_reported() {
        let m = Manifest::parse(
            "nope.prog nope.mcm - none pass derived",
            PathBuf::from("/nonexistent"),
        )
        .unwrap();
        assert!(matches!(
            m.check_files(),
            Err(ManifestError::MissingFile { line: 1, .. })
        ));
    }
}
