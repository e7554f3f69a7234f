//! Subcommand bodies, independent of argument parsing.
//!
//! Each entry point writes to the given streams and returns the process exit
//! code: 0 success, 1 at least one assertion failed, 2 usage, parse or
//! runtime error.

use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use cortexsim_core::logic::{all_assignments, consolidate_transitive, default_horizon, infer, truth_table, RuleBase};
use cortexsim_core::{Config, Network};

use crate::error::{HarnessError, Result};
use crate::repl::run_repl;
use crate::rules::parse_rules;
use crate::scenario::{parse_scenario, Session};
use crate::snapshot;
use crate::topo;
use crate::trace::{write_trace, TraceFormat};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ASSERT: i32 = 1;
pub const EXIT_ERROR: i32 = 2;

#[derive(Clone, Debug, Default)]
pub struct Globals {
    pub seed: Option<u64>,
    pub config: Option<PathBuf>,
    pub trace_format: TraceFormat,
    pub out_dir: Option<PathBuf>,
}

impl Globals {
    pub fn out_dir(&self) -> PathBuf {
        self.out_dir.clone().unwrap_or_else(|| PathBuf::from("."))
    }

    pub fn load_config(&self) -> Result<Config> {
        let mut c = Config::default();
        if let Some(p) = &self.config {
            let text = std::fs::read_to_string(p).map_err(|e| HarnessError::io(p, e))?;
            c.apply_text(&text)?;
        }
        if let Some(seed) = self.seed {
            c.net.rng_seed = seed;
        }
        c.validate()?;
        Ok(c)
    }

    /// Applies `--seed` to a session so that scripts cannot override it.
    fn pin(&self, s: &mut Session) -> Result<()> {
        if let Some(seed) = self.seed {
            s.pin("net.rng_seed", &seed.to_string())?;
        }
        s.out_dir = self.out_dir();
        Ok(())
    }

    pub fn session(&self) -> Result<Session> {
        let mut s = Session::new(self.load_config()?)?;
        self.pin(&mut s)?;
        Ok(s)
    }
}

fn file_stem(name: &str) -> String {
    let s: String = name.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' }).collect();
    if s.is_empty() {
        "scenario".into()
    } else {
        s
    }
}

fn report(err: &mut impl Write, e: &HarnessError) -> i32 {
    let _ = writeln!(err, "error: {e}");
    EXIT_ERROR
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))
}

/// Writes the accumulated trace as `<out_dir>/<name>.trace.<ext>`.
pub fn write_session_trace(g: &Globals, s: &Session) -> Result<PathBuf> {
    let dir = g.out_dir();
    std::fs::create_dir_all(&dir).map_err(|e| HarnessError::io(&dir, e))?;
    let path = dir.join(format!("{}.trace.{}", file_stem(&s.name), g.trace_format.extension()));
    write_trace(&path, g.trace_format, &s.probe_labels(), &s.trace)?;
    Ok(path)
}

/// Parses and runs a scenario. Returns the session even on a runtime error
/// so callers can inspect partial results.
pub fn run_scenario(g: &Globals, path: &Path) -> Result<(Session, Option<HarnessError>)> {
    let scenario = parse_scenario(&read(path)?)?;
    let mut s = g.session()?;
    s.relative_to(path);
    let err = s.run(&scenario.steps).err();
    Ok((s, err))
}

pub fn simulate(g: &Globals, path: &Path, out: &mut impl Write, err: &mut impl Write) -> i32 {
    let (s, run_err) = match run_scenario(g, path) {
        Ok(r) => r,
        Err(e) => return report(err, &e),
    };
    for line in &s.output {
        let _ = writeln!(out, "{line}");
    }
    let trace = match write_session_trace(g, &s) {
        Ok(p) => p,
        Err(e) => return report(err, &e),
    };
    let _ = writeln!(err, "trace: {}", trace.display());
    let code = match &run_err {
        Some(_) => EXIT_ERROR,
        None if s.failures.is_empty() => EXIT_OK,
        None => EXIT_ASSERT,
    };
    if let Err(e) = write_summary(g, &s, run_err.as_ref(), code) {
        return report(err, &e);
    }
    if let Some(e) = run_err {
        return report(err, &e);
    }
    for f in &s.failures {
        let _ = writeln!(err, "FAIL {f}");
    }
    code
}

/// `<out_dir>/<name>.summary.txt`: status, tick, outputs, failures.
pub fn write_summary(g: &Globals, s: &Session, run_err: Option<&HarnessError>, code: i32) -> Result<PathBuf> {
    let path = g.out_dir().join(format!("{}.summary.txt", file_stem(&s.name)));
    let status = match code {
        EXIT_OK => "ok",
        EXIT_ASSERT => "assert-failed",
        _ => "error",
    };
    let mut text = format!("name: {}\nstatus: {status}\nexit: {code}\ntick: {}\n", s.name, s.net.tick());
    if let Some(e) = run_err {
        text.push_str(&format!("error: {e}\n"));
    }
    for o in &s.output {
        text.push_str(&format!("output {o}\n"));
    }
    for f in &s.failures {
        text.push_str(&format!("FAIL {f}\n"));
    }
    std::fs::write(&path, text).map_err(|e| HarnessError::io(&path, e))?;
    Ok(path)
}

pub fn snapshot_save(g: &Globals, scenario: &Path, dest: &Path, out: &mut impl Write, err: &mut impl Write) -> i32 {
    let (s, run_err) = match run_scenario(g, scenario) {
        Ok(r) => r,
        Err(e) => return report(err, &e),
    };
    if let Some(e) = run_err {
        return report(err, &e);
    }
    if let Err(e) = snapshot::save(&s, dest) {
        return report(err, &e);
    }
    let _ = writeln!(out, "saved {} at tick {} ({} neurons, {} synapses)", dest.display(), s.net.tick(), s.net.len(), s.net.synapses().len());
    if s.failures.is_empty() {
        EXIT_OK
    } else {
        for f in &s.failures {
            let _ = writeln!(err, "FAIL {f}");
        }
        EXIT_ASSERT
    }
}

pub fn load_session(g: &Globals, path: &Path) -> Result<Session> {
    let mut s = snapshot::load(path)?;
    g.pin(&mut s)?;
    Ok(s)
}

pub fn snapshot_load(g: &Globals, path: &Path, ticks: u64, out: &mut impl Write, err: &mut impl Write) -> i32 {
    let mut s = match load_session(g, path) {
        Ok(s) => s,
        Err(e) => return report(err, &e),
    };
    let start = s.net.tick();
    if let Err(e) = s.execute(&crate::scenario::Command::Step(ticks)) {
        return report(err, &e);
    }
    let _ = writeln!(out, "name: {}", s.name);
    let _ = writeln!(out, "tick: {start} -> {}", s.net.tick());
    let _ = writeln!(out, "neurons: {}", s.net.len());
    let _ = writeln!(out, "synapses: {}", s.net.synapses().len());
    let _ = writeln!(out, "edge_hash: {:016x}", s.net.edge_hash());
    if ticks > 0 {
        match write_session_trace(g, &s) {
            Ok(p) => {
                let _ = writeln!(err, "trace: {}", p.display());
            }
            Err(e) => return report(err, &e),
        }
    }
    EXIT_OK
}

pub fn repl(g: &Globals, snapshot: Option<&Path>, input: impl BufRead, out: &mut impl Write, err: &mut impl Write, prompt: bool) -> i32 {
    let session = match snapshot {
        Some(p) => load_session(g, p),
        None => g.session(),
    };
    let mut s = match session {
        Ok(s) => s,
        Err(e) => return report(err, &e),
    };
    match run_repl(&mut s, input, out, prompt) {
        Ok(o) if o.failures > 0 => EXIT_ASSERT,
        Ok(_) => EXIT_OK,
        Err(e) => report(err, &e),
    }
}

#[derive(Clone, Debug, Default)]
pub struct RulesArgs {
    pub facts: Vec<String>,
    pub horizon: Option<u64>,
    /// `in1,in2:out`
    pub table: Option<String>,
    pub consolidate: Option<u32>,
}

pub fn rules(g: &Globals, path: &Path, args: &RulesArgs, out: &mut impl Write, err: &mut impl Write) -> i32 {
    match rules_inner(g, path, args, out) {
        Ok(()) => EXIT_OK,
        Err(e) => report(err, &e),
    }
}

fn rules_inner(g: &Globals, path: &Path, args: &RulesArgs, out: &mut impl Write) -> Result<()> {
    let rules = parse_rules(&read(path)?)?;
    let config = g.load_config()?;
    let mut net = Network::new(config.net)?;
    let mut rb = RuleBase::new();
    for r in rules {
        rb.compile(&mut net, r, &config.logic)?;
    }
    let io = |e| HarnessError::io("<stdout>", e);
    writeln!(out, "rules: {}", rb.rules().len()).map_err(io)?;
    writeln!(out, "atoms: {}", rb.atoms().keys().cloned().collect::<Vec<_>>().join(" ")).map_err(io)?;
    if !args.facts.is_empty() || (args.table.is_none() && args.consolidate.is_none()) {
        let facts: Vec<&str> = args.facts.iter().map(String::as_str).collect();
        let horizon = args.horizon.unwrap_or_else(|| default_horizon(&rb, &config.logic));
        let inf = infer(&mut net.clone(), &rb, &facts, horizon, &config.logic)?;
        let mut order: Vec<(u64, &String)> = inf.first_fire.iter().map(|(k, &v)| (v, k)).collect();
        order.sort();
        let text: Vec<String> = order.iter().map(|(t, n)| format!("{n}@{t}")).collect();
        writeln!(out, "infer: {}", text.join(" ")).map_err(io)?;
    }
    if let Some(spec) = &args.table {
        let (ins, output) = spec.split_once(':').ok_or_else(|| HarnessError::Usage(format!("--table expects in1,in2:out, got {spec:?}")))?;
        let inputs: Vec<&str> = ins.split(',').filter(|s| !s.is_empty()).collect();
        let rows = truth_table(&net, &rb, &inputs, output, &all_assignments(inputs.len()), &config.logic)?;
        writeln!(out, "{} | {output}", inputs.join(" ")).map_err(io)?;
        for (assign, v) in rows {
            let bits: Vec<&str> = assign.iter().map(|&b| if b { "1" } else { "0" }).collect();
            writeln!(out, "{} | {}", bits.join(" "), u8::from(v)).map_err(io)?;
        }
    }
    if let Some(n) = args.consolidate {
        let (net0, rb0) = (net.clone(), rb.clone());
        let sc = consolidate_transitive(&mut net, &mut rb, &config.plasticity, n, &config.logic)?;
        let text: Vec<String> = sc.iter().map(|s| format!("{}->{}@{}", s.from, s.to, s.replay)).collect();
        writeln!(out, "shortcuts: {}", text.join(" ")).map_err(io)?;
        let h = default_horizon(&rb0, &config.logic);
        let latency = |net: &Network, rb: &RuleBase, from: &str, to: &str| -> Result<String> {
            let inf = infer(&mut net.clone(), rb, &[from], h, &config.logic)?;
            Ok(inf.first_fire.get(to).map_or("-".into(), |t| t.to_string()))
        };
        for s in &sc {
            let (old, new) = (latency(&net0, &rb0, &s.from, &s.to)?, latency(&net, &rb, &s.from, &s.to)?);
            writeln!(out, "latency {} {}: {old} -> {new}", s.from, s.to).map_err(io)?;
        }
    }
    Ok(())
}

pub fn topo(g: &Globals, path: &Path, out: &mut impl Write, err: &mut impl Write) -> i32 {
    let run = || -> Result<String> {
        let file = topo::parse_topo(&read(path)?)?;
        let config = g.load_config()?;
        let sg = topo::build(&file, config.net)?;
        topo::report(&file, &sg)
    };
    match run() {
        Ok(text) => {
            let _ = write!(out, "{text}");
            EXIT_OK
        }
        Err(e) => report(err, &e),
    }
}
