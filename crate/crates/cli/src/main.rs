//! `mcmcheck`: check programs against memory consistency models.
//!
//! Exit status: 0 pass, 1 violation, 2 usage or input error, 3 resource
//! bound reached.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use mcm_core::constraints::Mode;
use mcm_core::corpus::{Manifest, ManifestEntry, OutputRecord};
use mcm_core::explore::{Checker, ExploreOptions, Report, Verdict};
use mcm_core::lang::{parse_program, BoundsConfig};
use mcm_core::mcm::parse_mcm;

const EXIT_PASS: u8 = 0;
const EXIT_VIOLATION: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_RESOURCE: u8 = 3;

#[derive(Parser)]
#[command(
    name = "mcmcheck",
    version,
    about = "Bounded model checking under memory consistency models"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Explore a program and report a verdict.
    Check(CheckArgs),
    /// Run every entry of a corpus manifest and compare verdicts.
    Corpus(CorpusArgs),
    /// Explore a program once per mode and compare state counts.
    Stats(StatsArgs),
    /// Re-execute a counterexample trace.
    Replay(ReplayArgs),
}

#[derive(Args)]
struct Input {
    /// Program file (.mcm-prog).
    program: PathBuf,
    /// MCM file; `--mcm` is equivalent.
    mcm_pos: Option<PathBuf>,
    #[arg(long)]
    mcm: Option<PathBuf>,
    /// Loop supremum for one process, as `<proc>=<k>`.
    #[arg(long = "bound", value_name = "PROC=K")]
    bounds: Vec<String>,
    /// Bounds configuration file with `bound` and `predict` lines.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Predict the jump at a label (`L`, `p:L`, or `all`).
    #[arg(long = "predict", value_name = "LABEL")]
    predict: Vec<String>,
}

#[derive(Args)]
struct SearchArgs {
    /// Worker threads; 1 is deterministic.
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Stop after storing this many states.
    #[arg(long)]
    state_limit: Option<u64>,
    /// Stop traces longer than this.
    #[arg(long)]
    depth_limit: Option<usize>,
    /// Emit newline-delimited JSON records.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct CheckArgs {
    #[command(flatten)]
    input: Input,
    #[command(flatten)]
    search: SearchArgs,
    /// Optimizations: any of guards, predicates, stages, or `none`.
    #[arg(long, default_value = "guards,predicates")]
    opt: String,
    /// Keep searching after the first violation.
    #[arg(long)]
    all_violations: bool,
}

#[derive(Args)]
struct CorpusArgs {
    /// Manifest file.
    #[arg(default_value = "corpus/manifest.txt")]
    manifest: PathBuf,
    /// Run only entries whose name contains one of these substrings.
    #[arg(long = "filter")]
    filters: Vec<String>,
    /// Override each entry's mode.
    #[arg(long)]
    opt: Option<String>,
    #[command(flatten)]
    search: SearchArgs,
}

#[derive(Args)]
struct StatsArgs {
    #[command(flatten)]
    input: Input,
    #[command(flatten)]
    search: SearchArgs,
    /// Semicolon-separated modes; defaults to none, guards,
    /// guards+predicates and, if the MCM has stages, all three.
    #[arg(long)]
    modes: Option<String>,
}

#[derive(Args)]
struct ReplayArgs {
    #[command(flatten)]
    input: Input,
    /// Trace file: transition labels one per line, `step n: label -> ...`
    /// lines, or a JSON record carrying a counterexample.
    #[arg(long)]
    trace: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.cmd {
        Cmd::Check(a) => cmd_check(a),
        Cmd::Corpus(a) => cmd_corpus(a),
        Cmd::Stats(a) => cmd_stats(a),
        Cmd::Replay(a) => cmd_replay(a),
    };
    match res {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}

fn exit_code(v: Verdict) -> u8 {
    match v {
        Verdict::Pass | Verdict::BoundExhaustedPass => EXIT_PASS,
        Verdict::Violation => EXIT_VIOLATION,
        Verdict::ResourceBound => EXIT_RESOURCE,
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn load_checker(program: &Path, mcm: &Path, bounds: BoundsConfig) -> Result<Checker> {
    let prog =
        parse_program(&read(program)?).with_context(|| format!("in {}", program.display()))?;
    let spec = parse_mcm(&read(mcm)?).with_context(|| format!("in {}", mcm.display()))?;
    Ok(Checker::new(prog, bounds, spec)?)
}

impl Input {
    fn mcm_path(&self) -> Result<&Path> {
        match (&self.mcm_pos, &self.mcm) {
            (Some(_), Some(_)) => {
                bail!("give the MCM file once, either positionally or with --mcm")
            }
            (Some(p), None) | (None, Some(p)) => Ok(p),
            (None, None) => bail!("no MCM file given"),
        }
    }

    fn bounds(&self) -> Result<BoundsConfig> {
        let mut b = match &self.config {
            Some(p) => BoundsConfig::parse_config(&read(p)?)
                .with_context(|| format!("in {}", p.display()))?,
            None => BoundsConfig::new(),
        };
        for s in &self.bounds {
            b.add_bound_arg(s)?;
        }
        for l in &self.predict {
            if l == "all" {
                b.set_predict_all(true);
            } else {
                b.add_predict(l);
            }
        }
        Ok(b)
    }

    fn checker(&self) -> Result<Checker> {
        load_checker(&self.program, self.mcm_path()?, self.bounds()?)
    }
}

impl SearchArgs {
    fn options(&self, mode: Mode) -> ExploreOptions {
        let mut o = ExploreOptions::new(mode);
        o.workers = self.workers.max(1);
        o.state_limit = self.state_limit;
        o.depth_limit = self.depth_limit;
        o
    }
}

fn display_name(p: &Path) -> String {
    p.file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| p.display().to_string())
}

fn fmt_elapsed(d: Duration) -> String {
    format!("{:.3} ms", d.as_secs_f64() * 1e3)
}

fn print_report(checker: &Checker, mode: Mode, r: &Report) -> Result<()> {
    println!("mcm: {}  mode: {mode}", checker.spec.name);
    println!("verdict: {}", r.verdict);
    println!(
        "states: {}  terminal: {}  transitions: {}  residual-filtered: {}  deadlocks: {}  max-depth: {}  elapsed: {}",
        r.states_stored,
        r.terminal_states,
        r.transitions,
        r.residual_filtered,
        r.deadlocks,
        r.max_depth,
        fmt_elapsed(r.elapsed)
    );
    if let Some(cx) = &r.counterexample {
        println!("counterexample:");
        print!("{}", checker.replay(&cx.steps)?);
        println!("registers: {}", cx.registers.join(" "));
    }
    Ok(())
}

fn cmd_check(a: CheckArgs) -> Result<u8> {
    let mode = Mode::parse(&a.opt).map_err(anyhow::Error::msg)?;
    let checker = a.input.checker()?;
    let mut opts = a.search.options(mode);
    opts.stop_at_first_violation = !a.all_violations;
    let r = checker.explore(&opts)?;
    if a.search.json {
        let rec = OutputRecord::new(
            &display_name(&a.input.program),
            &checker.spec.name,
            mode,
            &r,
        );
        println!("{}", rec.to_json());
    } else {
        print_report(&checker, mode, &r)?;
    }
    Ok(exit_code(r.verdict))
}

fn entry_command(manifest: &Manifest, e: &ManifestEntry, mode: Mode) -> String {
    let mut s = format!(
        "mcmcheck check {} {} --opt {mode}",
        manifest.resolve(&e.model).display(),
        manifest.resolve(&e.mcm).display()
    );
    for (p, k) in &e.suprema {
        s.push_str(&format!(" --bound {p}={k}"));
    }
    s
}

fn cmd_corpus(a: CorpusArgs) -> Result<u8> {
    let manifest = Manifest::load(&a.manifest)?;
    let override_mode = a
        .opt
        .as_deref()
        .map(Mode::parse)
        .transpose()
        .map_err(anyhow::Error::msg)?;
    let mut mismatches = Vec::new();
    let mut ran = 0;
    if !a.search.json {
        println!(
            "{:<34} {:<26} {:<21} {:<21} {:>10} {:>12}  result",
            "entry", "mode", "expected", "got", "states", "elapsed"
        );
    }
    for e in &manifest.entries {
        let name = e.name();
        if !a.filters.is_empty() && !a.filters.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        ran += 1;
        let mode = override_mode.unwrap_or(e.mode);
        let checker = load_checker(
            &manifest.resolve(&e.model),
            &manifest.resolve(&e.mcm),
            e.bounds()?,
        )
        .with_context(|| format!("manifest line {}", e.line))?;
        let r = checker.explore(&a.search.options(mode))?;
        let ok = r.verdict == e.expect;
        if a.search.json {
            let rec = OutputRecord::new(&display_name(&e.model), &checker.spec.name, mode, &r);
            println!("{}", rec.to_json());
        } else {
            println!(
                "{:<34} {:<26} {:<21} {:<21} {:>10} {:>12}  {}",
                name,
                mode.to_string(),
                e.expect.name(),
                r.verdict.name(),
                r.states_stored,
                fmt_elapsed(r.elapsed),
                if ok { "ok" } else { "MISMATCH" }
            );
        }
        if !ok {
            mismatches.push((e, mode, r.verdict));
        }
    }
    if ran == 0 {
        bail!("no manifest entry matches the filters");
    }
    if let Some((e, mode, got)) = mismatches.first() {
        eprintln!(
            "{} of {ran} entries mismatched; first: {} expected {} got {}",
            mismatches.len(),
            e.name(),
            e.expect,
            got
        );
        eprintln!("  rerun: {}", entry_command(&manifest, e, *mode));
        return Ok(EXIT_VIOLATION);
    }
    if !a.search.json {
        println!("all {ran} entries match");
    }
    Ok(EXIT_PASS)
}

fn cmd_stats(a: StatsArgs) -> Result<u8> {
    let checker = a.input.checker()?;
    let modes: Vec<Mode> = match &a.modes {
        Some(s) => s
            .split(';')
            .map(Mode::parse)
            .collect::<Result<_, _>>()
            .map_err(anyhow::Error::msg)?,
        None => {
            let mut v = vec![
                Mode::BASELINE,
                Mode {
                    guards: true,
                    ..Mode::BASELINE
                },
                Mode {
                    guards: true,
                    predicates: true,
                    stages: false,
                },
            ];
            if checker.spec.stages.is_some() {
                v.push(Mode::ALL);
            }
            v
        }
    };
    if modes.is_empty() {
        bail!("no modes given");
    }
    let rows = checker.compare_modes(&modes, &a.search.options(Mode::BASELINE))?;
    if a.search.json {
        for row in &rows {
            println!("{}", serde_json::to_string(row)?);
        }
    } else {
        println!(
            "{:<26} {:<21} {:>10} {:>10} {:>12} {:>10} {:>12}",
            "mode", "verdict", "states", "terminal", "transitions", "residual", "elapsed"
        );
        for row in &rows {
            println!(
                "{:<26} {:<21} {:>10} {:>10} {:>12} {:>10} {:>12}",
                row.mode.to_string(),
                row.verdict.name(),
                row.states,
                row.terminal_states,
                row.transitions,
                row.residual_filtered,
                fmt_elapsed(row.elapsed)
            );
        }
    }
    let last = rows.last().map(|r| r.verdict).unwrap_or(Verdict::Pass);
    Ok(exit_code(last))
}

/// Transition labels from a trace file.
fn trace_labels(text: &str) -> Result<Vec<String>> {
    let trimmed = text.trim_start();
    if trimmed.starts_with('{') {
        let rec = OutputRecord::from_json(trimmed.lines().next().unwrap_or(""))
            .context("trace file is not a valid JSON record")?;
        let cx = rec
            .counterexample
            .context("JSON record carries no counterexample")?;
        return Ok(cx.steps);
    }
    let mut out = Vec::new();
    for line in text.lines() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let label = match line.strip_prefix("step ") {
            Some(rest) => {
                let (_, after) = rest
                    .split_once(':')
                    .with_context(|| format!("malformed trace line `{line}`"))?;
                after.split(" -> ").next().unwrap_or("").trim()
            }
            None => line,
        };
        out.push(label.to_string());
    }
    Ok(out)
}

fn cmd_replay(a: ReplayArgs) -> Result<u8> {
    let checker = a.input.checker()?;
    let labels = trace_labels(&read(&a.trace)?)?;
    let r = checker.replay(&labels)?;
    print!("{r}");
    Ok(if r.confirmed() {
        EXIT_VIOLATION
    } else {
        EXIT_PASS
    })
}
