use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use super::ast::{InstrKind, Program};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BoundsError {
    #[error("supremum for process {process} must be at least 1")]
    ZeroSupremum { process: usize },
    #[error("bound refers to process {process}, but the program has {count} processes")]
    NoSuchProcess { process: usize, count: usize },
    #[error("predicted label `{label}` does not name a jump")]
    NotAJump { label: String },
    #[error("malformed bound `{text}`: expected <proc>=<k>")]
    Malformed { text: String },
    #[error("line {line}: {message}")]
    Config { line: usize, message: String },
}

/// Loop suprema and branch-prediction settings.
///
/// Processes without an explicit supremum get 1.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct BoundsConfig {
    suprema: BTreeMap<usize, usize>,
    predict_all: bool,
    /// `(process, label)`; `None` applies to every process.
    predict: BTreeSet<(Option<usize>, String)>,
}

impl BoundsConfig {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_supremum(mut self, process: usize, k: usize) -> Result<Self, BoundsError> {
        self.set_supremum(process, k)?;
        Ok(self)
    }

    pub fn set_supremum(&mut self, process: usize, k: usize) -> Result<(), BoundsError> {
        if k == 0 {
            return Err(BoundsError::ZeroSupremum { process });
        }
        self.suprema.insert(process, k);
        Ok(())
    }

    pub fn supremum(&self, process: usize) -> usize {
        self.suprema.get(&process).copied().unwrap_or(1)
    }

    pub fn explicit_suprema(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.suprema.iter().map(|(p, k)| (*p, *k))
    }

    pub fn set_predict_all(&mut self, on: bool) {
        self.predict_all = on;
    }

    /// Enables prediction for `label`, or `p:label` for one process only.
    pub fn add_predict(&mut self, spec: &str) {
        match spec.split_once(':') {
            Some((p, l)) if p.parse::<usize>().is_ok() => {
                self.predict.insert((p.parse().ok(), l.to_string()));
            }
            _ => {
                self.predict.insert((None, spec.to_string()));
            }
        }
    }

    pub fn predicts(&self, process: usize, label: &str) -> bool {
        self.predict_all
            || self.predict.contains(&(None, label.to_string()))
            || self.predict.contains(&(Some(process), label.to_string()))
    }

    pub fn uses_prediction(&self) -> bool {
        self.predict_all || !self.predict.is_empty()
    }

    /// Parses a `--bound` argument of the form `<proc>=<k>`.
    pub fn add_bound_arg(&mut self, arg: &str) -> Result<(), BoundsError> {
        let malformed = || BoundsError::Malformed {
            text: arg.to_string(),
        };
        let (p, k) = arg.split_once('=').ok_or_else(malformed)?;
        let p: usize = p.trim().parse().map_err(|_| malformed())?;
        let k: usize = k.trim().parse().map_err(|_| malformed())?;
        self.set_supremum(p, k)
    }

    /// Parses a key-value config:
    ///
    /// ```text
    /// # comment
    /// bound 0=1
    /// bound 1=2
    /// predict L3
    /// predict 1:L4
    /// predict all
    /// ```
    pub fn parse_config(text: &str) -> Result<Self, BoundsError> {
        let mut cfg = Self::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| BoundsError::Config {
                line: n + 1,
                message,
            };
            match line.split_once(char::is_whitespace) {
                Some(("bound", v)) => cfg
                    .add_bound_arg(v.trim())
                    .map_err(|e| err(e.to_string()))?,
                Some(("predict", "all")) => cfg.predict_all = true,
                Some(("predict", v)) => cfg.add_predict(v.trim()),
                _ => return Err(err(format!("unrecognized setting `{line}`"))),
            }
        }
        Ok(cfg)
    }

    /// Checks process indices and predicted labels against `program`.
    pub fn validate(&self, program: &Program) -> Result<(), BoundsError> {
        let count = program.num_processes();
        for &p in self.suprema.keys() {
            if p >= count {
                return Err(BoundsError::NoSuchProcess { process: p, count });
            }
        }
        for (p, label) in &self.predict {
            let procs: Vec<usize> = match p {
                Some(p) if *p >= count => {
                    return Err(BoundsError::NoSuchProcess { process: *p, count })
                }
                Some(p) => vec![*p],
                None => (0..count).collect(),
            };
            let is_jump = procs.iter().any(|&q| {
                program.processes[q].label_index(label).is_some_and(|i| {
                    program.processes[q].instructions[i].raw.kind() == InstrKind::Jump
                })
            });
            if !is_jump {
                return Err(BoundsError::NotAJump {
                    label: label.clone(),
                });
            }
        }
        Ok(())
    }
}

impl fmt::Display for BoundsConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .suprema
            .iter()
            .map(|(p, k)| format!("{p}={k}"))
            .collect();
        if parts.is_empty() {
            f.write_str("default")
        } else {
            f.write_str(&parts.join(","))
        }
    }
}

/// One bounded unrolling of an instruction: the `j`-th fetch of
/// instruction `instr` on `process`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct InstructionInstance {
    pub process: usize,
    pub instr: usize,
    pub j: usize,
}

impl InstructionInstance {
    pub fn label<'a>(&self, program: &'a Program) -> &'a str {
        &program.instruction(self.process, self.instr).label.name
    }
}

/// All `(p, L, j)` with `j < supremum(p)`, ordered by process, instruction
/// and counter.
pub fn enumerate_instances(program: &Program, bounds: &BoundsConfig) -> Vec<InstructionInstance> {
    let mut out = Vec::new();
    for (p, proc) in program.processes.iter().enumerate() {
        let sup = bounds.supremum(p);
        for instr in 0..proc.instructions.len() {
            for j in 0..sup {
                out.push(InstructionInstance {
                    process: p,
                    instr,
                    j,
                });
            }
        }
    }
    out
}
