use std::cell::RefCell;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use dashmap::DashSet;
use rustc_hash::{FxBuildHasher, FxHashSet};

use super::{Checker, Counterexample, ExploreOptions, Failure, Report, Verdict};
use crate::constraints::Engine;
use crate::mcm::StageSpec;
use crate::semantics::{MachineState, OpId, StepResult, Transition};

pub(crate) trait Visited {
    /// Inserts `fp`; false if it was already present.
    fn insert(&self, fp: u128) -> bool;
}

struct LocalVisited(RefCell<FxHashSet<u128>>);

impl Visited for LocalVisited {
    fn insert(&self, fp: u128) -> bool {
        self.0.borrow_mut().insert(fp)
    }
}

impl Visited for DashSet<u128, FxBuildHasher> {
    fn insert(&self, fp: u128) -> bool {
        DashSet::insert(self, fp)
    }
}

/// Operations performed by a step from `before` to `after`.
pub(crate) fn new_ops<'a>(
    before: &'a MachineState,
    after: &'a MachineState,
) -> impl Iterator<Item = OpId> + 'a {
    before
        .end
        .iter()
        .zip(&after.end)
        .enumerate()
        .flat_map(|(w, (a, b))| {
            let mut diff = a ^ b;
            std::iter::from_fn(move || {
                if diff == 0 {
                    return None;
                }
                let bit = diff.trailing_zeros();
                diff &= diff - 1;
                Some((w * 64) as OpId + bit)
            })
        })
}

/// Counters kept per worker and merged at the end.
#[derive(Debug, Default)]
struct Stats {
    terminal: u64,
    transitions: u64,
    residual: u64,
    deadlocks: u64,
    violations: u64,
    max_depth: usize,
    truncated: bool,
    resource_hit: bool,
    counterexample: Option<Counterexample>,
}

impl Stats {
    fn merge(&mut self, o: Stats) {
        self.terminal += o.terminal;
        self.transitions += o.transitions;
        self.residual += o.residual;
        self.deadlocks += o.deadlocks;
        self.violations += o.violations;
        self.max_depth = self.max_depth.max(o.max_depth);
        self.truncated |= o.truncated;
        self.resource_hit |= o.resource_hit;
        if self.counterexample.is_none() {
            self.counterexample = o.counterexample;
        }
    }
}

/// What became of one successor.
#[allow(clippy::large_enum_variant)]
enum Visit {
    /// Pruned, already visited, or ended here.
    Done,
    /// A new non-terminal state to expand.
    Expand(MachineState),
}

struct Search<'a, V: Visited> {
    checker: &'a Checker,
    engine: &'a Engine,
    stages: Option<&'a StageSpec>,
    opts: &'a ExploreOptions,
    visited: &'a V,
    states: &'a AtomicU64,
    stop: &'a AtomicBool,
}

impl<V: Visited> Search<'_, V> {
    fn candidates(&self, st: &MachineState) -> Vec<Transition> {
        self.checker.model.transitions(st, self.stages)
    }

    fn violation(
        &self,
        stats: &mut Stats,
        path: &[Transition],
        st: &MachineState,
        failure: Failure,
    ) {
        stats.violations += 1;
        if stats.counterexample.is_none() {
            let m = &self.checker.model;
            stats.counterexample = Some(Counterexample {
                steps: path.iter().map(|t| m.transition_name(t)).collect(),
                failure,
                registers: self.checker.register_dump(st),
            });
        }
        if self.opts.stop_at_first_violation {
            self.stop.store(true, Ordering::Relaxed);
        }
    }

    /// Handles a freshly stored state: counts it and checks it if terminal.
    /// Returns whether the state should be expanded.
    fn arrive(&self, stats: &mut Stats, path: &[Transition], st: &MachineState) -> bool {
        let n = self.states.fetch_add(1, Ordering::Relaxed) + 1;
        if self.opts.state_limit.is_some_and(|l| n > l) {
            stats.resource_hit = true;
            self.stop.store(true, Ordering::Relaxed);
            return false;
        }
        stats.max_depth = stats.max_depth.max(path.len());
        let m = &self.checker.model;
        if m.is_terminal(st) {
            stats.terminal += 1;
            if !self.engine.admissible(st) {
                stats.residual += 1;
                return false;
            }
            if m.truncated(st) {
                stats.truncated = true;
            }
            if let Some(f) = self.checker.failing_final(st) {
                self.violation(stats, path, st, f);
            }
            return false;
        }
        if self.opts.depth_limit.is_some_and(|d| path.len() >= d) {
            stats.resource_hit = true;
            return false;
        }
        true
    }

    /// Steps `t` from `st`; `path` ends with `t`.
    fn visit(
        &self,
        stats: &mut Stats,
        st: &MachineState,
        t: &Transition,
        path: &[Transition],
        enabled: &mut bool,
    ) -> Visit {
        let (succ, failure) = match self.checker.model.step(st, t, self.stages, self.engine) {
            StepResult::Next(s, f) => (s, f),
            StepResult::Disabled => return Visit::Done,
            StepResult::Infeasible => {
                *enabled = true;
                return Visit::Done;
            }
        };
        *enabled = true;
        stats.transitions += 1;
        if self.opts.mode.guards && new_ops(st, &succ).any(|op| self.engine.violated_by(&succ, op))
        {
            stats.residual += 1;
            return Visit::Done;
        }
        if let Some(f) = failure {
            if self.engine.admissible(&succ) {
                let failure = self.checker.assert_failure(f.inst);
                self.violation(stats, path, &succ, failure);
            } else {
                stats.residual += 1;
            }
            return Visit::Done;
        }
        if !self.visited.insert(succ.fingerprint()) {
            return Visit::Done;
        }
        if self.arrive(stats, path, &succ) {
            Visit::Expand(succ)
        } else {
            Visit::Done
        }
    }

    /// Depth-first search below `root`, reached by `prefix`.
    fn dfs(&self, stats: &mut Stats, root: MachineState, prefix: Vec<Transition>) {
        struct Frame {
            state: MachineState,
            trans: Vec<Transition>,
            next: usize,
            enabled: bool,
        }
        let base = prefix.len();
        let mut path = prefix;
        let trans = self.candidates(&root);
        let mut stack = vec![Frame {
            state: root,
            trans,
            next: 0,
            enabled: false,
        }];
        while !self.stop.load(Ordering::Relaxed) {
            let Some(top) = stack.last_mut() else { break };
            if top.next == top.trans.len() {
                if !top.enabled {
                    stats.deadlocks += 1;
                }
                stack.pop();
                if path.len() > base {
                    path.pop();
                }
                continue;
            }
            let t = top.trans[top.next];
            top.next += 1;
            path.push(t);
            let mut enabled = top.enabled;
            let v = self.visit(stats, &top.state, &t, &path, &mut enabled);
            top.enabled = enabled;
            match v {
                Visit::Expand(s) => {
                    let trans = self.candidates(&s);
                    stack.push(Frame {
                        state: s,
                        trans,
                        next: 0,
                        enabled: false,
                    });
                }
                Visit::Done => {
                    path.pop();
                }
            }
        }
    }

    /// One breadth-first level from `frontier`.
    fn bfs_level(
        &self,
        stats: &mut Stats,
        frontier: Vec<(MachineState, Vec<Transition>)>,
    ) -> Vec<(MachineState, Vec<Transition>)> {
        let mut next = Vec::new();
        for (st, path) in frontier {
            let mut enabled = false;
            for t in self.candidates(&st) {
                if self.stop.load(Ordering::Relaxed) {
                    return next;
                }
                let mut p = path.clone();
                p.push(t);
                if let Visit::Expand(s) = self.visit(stats, &st, &t, &p, &mut enabled) {
                    next.push((s, p));
                }
            }
            if !enabled {
                stats.deadlocks += 1;
            }
        }
        next
    }
}

pub(crate) fn run(checker: &Checker, engine: &Engine, opts: &ExploreOptions) -> Report {
    let start = Instant::now();
    let stages = if opts.mode.stages {
        checker.spec.stages.as_ref()
    } else {
        None
    };
    let states = AtomicU64::new(0);
    let stop = AtomicBool::new(false);
    let init = engine.initial_state(&checker.model);
    let mut stats = Stats::default();

    if opts.workers <= 1 {
        let visited = LocalVisited(RefCell::new(FxHashSet::default()));
        let s = Search {
            checker,
            engine,
            stages,
            opts,
            visited: &visited,
            states: &states,
            stop: &stop,
        };
        visited.insert(init.fingerprint());
        if s.arrive(&mut stats, &[], &init) {
            s.dfs(&mut stats, init, Vec::new());
        }
    } else {
        let visited: DashSet<u128, FxBuildHasher> = DashSet::with_hasher(FxBuildHasher);
        let s = Search {
            checker,
            engine,
            stages,
            opts,
            visited: &visited,
            states: &states,
            stop: &stop,
        };
        visited.insert(init.fingerprint());
        let mut frontier = Vec::new();
        if s.arrive(&mut stats, &[], &init) {
            frontier.push((init, Vec::new()));
        }
        while !frontier.is_empty()
            && frontier.len() < opts.workers * 16
            && !stop.load(Ordering::Relaxed)
        {
            frontier = s.bfs_level(&mut stats, frontier);
        }
        let queue = Mutex::new(frontier);
        let results: Vec<Stats> = std::thread::scope(|scope| {
            let handles: Vec<_> = (0..opts.workers)
                .map(|_| {
                    scope.spawn(|| {
                        let mut local = Stats::default();
                        loop {
                            let item = queue.lock().expect("queue lock").pop();
                            let Some((st, path)) = item else { break };
                            s.dfs(&mut local, st, path);
                        }
                        local
                    })
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("worker panicked"))
                .collect()
        });
        for r in results {
            stats.merge(r);
        }
    }

    let verdict = if stats.counterexample.is_some() {
        Verdict::Violation
    } else if stats.resource_hit {
        Verdict::ResourceBound
    } else if stats.truncated {
        Verdict::BoundExhaustedPass
    } else {
        Verdict::Pass
    };
    Report {
        verdict,
        states_stored: states.load(Ordering::Relaxed),
        terminal_states: stats.terminal,
        transitions: stats.transitions,
        residual_filtered: stats.residual,
        deadlocks: stats.deadlocks,
        violations: stats.violations,
        max_depth: stats.max_depth,
        elapsed: start.elapsed(),
        counterexample: stats.counterexample,
    }
}
