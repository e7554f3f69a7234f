//! Scenario scripts.
//!
//! One command per line, `#` starts a comment, `:` separates a head from a
//! list. Names refer to plain neurons, words or rule atoms, looked up in that
//! order; `n<index>` names a neuron directly.
//!
//! ```text
//! name <text>
//! set <key> <value>                      # any config key
//! neuron <name>...                       # excitatory
//! inhibitory <name>...
//! feature <name>...                      # alias of neuron
//! synapse <pre> <post> <weight> [delay]
//! word <text>...
//! ground <word> : <feature>... [weight=<w>]
//! probe rate|sigma <name>  |  probe weight <pre> <post>
//! inject <strength> <duration> : <name>...
//! step <ticks>                           # plasticity off
//! learn <ticks>                          # plasticity on
//! train_sequence <name>... [reps=<n>] [gap=<g>]
//! recall <cue> [len=<n>]
//! learn_sentence <pattern> : <word>...
//! generate <pattern> [: <feature>...]
//! say [<feature>...]                     # generate with the latest pattern
//! rule IMP a b | rule NOT x b | rule FALSE z
//! rules <path>                           # rule file, relative to the script
//! infer [horizon=<t>] : <fact>...
//! consolidate [rate]
//! consolidate_transitive <replays>
//! groups
//! encode_object <name> : <view>... [order=<v,v,...>] [reps=<n>] [gap=<g>]
//! recognize <pool>... : <clue>...
//! measure rate|sigma <name> | measure weight|distance <a> <b>
//! assert output <label> : <value>
//! assert fired|silent <name>
//! assert rate <name> <op> <number>      # op: < <= > >= ==
//! assert weight <pre> <post> <op> <number>
//! save <path>                            # snapshot, relative to the output dir
//! ```
//!
//! Commands that produce a result print `<label>: <value>`; `assert output`
//! compares against the latest result with that label.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use cortexsim_core::competition::build_groups;
use cortexsim_core::language::{generate_sentence, learn_sentence, Lexicon, SentencePattern};
use cortexsim_core::logic::{consolidate_transitive, default_horizon, infer, Rule, RuleBase};
use cortexsim_core::network::{Probe, TraceRow};
use cortexsim_core::plasticity::{consolidate, Learner};
use cortexsim_core::sequence::{encode_object, recall_sequence, recognize, RetrievalMode, SequenceSpec};
use cortexsim_core::topology::logic_distance;
use cortexsim_core::{Config, Network, NeuronId, NeuronKind};

use crate::error::{HarnessError, Result};
use crate::rules::{parse_rule_line, parse_rules};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Cmp {
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
}

impl Cmp {
    fn parse(tok: &str) -> Option<Self> {
        Some(match tok {
            "<" => Cmp::Lt,
            "<=" => Cmp::Le,
            ">" => Cmp::Gt,
            ">=" => Cmp::Ge,
            "==" => Cmp::Eq,
            _ => return None,
        })
    }

    fn holds(self, a: f64, b: f64) -> bool {
        match self {
            Cmp::Lt => a < b,
            Cmp::Le => a <= b,
            Cmp::Gt => a > b,
            Cmp::Ge => a >= b,
            Cmp::Eq => a == b,
        }
    }

    fn symbol(self) -> &'static str {
        match self {
            Cmp::Lt => "<",
            Cmp::Le => "<=",
            Cmp::Gt => ">",
            Cmp::Ge => ">=",
            Cmp::Eq => "==",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ProbeSpec {
    Rate(String),
    Sigma(String),
    Weight(String, String),
}

impl ProbeSpec {
    pub fn label(&self) -> String {
        match self {
            ProbeSpec::Rate(n) => format!("rate:{n}"),
            ProbeSpec::Sigma(n) => format!("sigma:{n}"),
            ProbeSpec::Weight(a, b) => format!("weight:{a}>{b}"),
        }
    }

    /// Label used for `measure` output.
    pub fn measure_label(&self) -> String {
        match self {
            ProbeSpec::Rate(n) => format!("rate {n}"),
            ProbeSpec::Sigma(n) => format!("sigma {n}"),
            ProbeSpec::Weight(a, b) => format!("weight {a} {b}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Assertion {
    Output { label: String, value: String },
    Fired(String, bool),
    Rate(String, Cmp, f64),
    Weight(String, String, Cmp, f64),
}

#[derive(Clone, Debug, PartialEq)]
pub enum Command {
    Name(String),
    Set(String, String),
    Neuron(Vec<String>, NeuronKind),
    Synapse { pre: String, post: String, weight: f64, delay: u32 },
    Word(Vec<String>),
    Ground { word: String, features: Vec<String>, weight: Option<f64> },
    Probe(ProbeSpec),
    Inject { strength: f64, duration: u64, targets: Vec<String> },
    Step(u64),
    Learn(u64),
    TrainSequence { items: Vec<String>, reps: Option<u32>, gap: Option<u32> },
    Recall { cue: String, len: Option<usize> },
    LearnSentence { pattern: String, words: Vec<String> },
    Generate { pattern: Option<String>, context: Vec<String> },
    Rule(Rule),
    Rules(PathBuf),
    Infer { horizon: Option<u64>, facts: Vec<String> },
    Consolidate(Option<f64>),
    ConsolidateTransitive(u32),
    Groups,
    EncodeObject { name: String, views: Vec<String>, order: Vec<String>, reps: Option<u32>, gap: Option<u32> },
    Recognize { pool: Vec<String>, clues: Vec<String> },
    Measure(ProbeSpec),
    Distance(String, String),
    Assert(Assertion),
    Save(PathBuf),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Step {
    pub line: usize,
    pub cmd: Command,
}

fn num<T: std::str::FromStr>(tok: &str, line: usize) -> Result<T> {
    tok.parse().map_err(|_| HarnessError::parse(line, format!("bad number {tok:?}")))
}

/// Splits `key=value` options off the token list.
fn options<'a>(tokens: &[&'a str]) -> (Vec<&'a str>, BTreeMap<&'a str, &'a str>) {
    let mut plain = Vec::new();
    let mut opts = BTreeMap::new();
    for &t in tokens {
        match t.split_once('=') {
            Some((k, v)) if !k.is_empty() && !matches!(k, "<" | ">" | "=") && !t.starts_with("==") && !t.starts_with("<=") && !t.starts_with(">=") => {
                opts.insert(k, v);
            }
            _ => plain.push(t),
        }
    }
    (plain, opts)
}

fn opt<T: std::str::FromStr>(opts: &BTreeMap<&str, &str>, key: &str, line: usize) -> Result<Option<T>> {
    opts.get(key).map(|v| num(v, line)).transpose()
}

fn owned(tokens: &[&str]) -> Vec<String> {
    tokens.iter().map(|s| s.to_string()).collect()
}

/// Splits at the first `:` token.
fn split_colon<'a>(tokens: &[&'a str]) -> (Vec<&'a str>, Option<Vec<&'a str>>) {
    match tokens.iter().position(|&t| t == ":") {
        Some(i) => (tokens[..i].to_vec(), Some(tokens[i + 1..].to_vec())),
        None => (tokens.to_vec(), None),
    }
}

pub fn parse_line(raw: &str, line: usize) -> Result<Option<Command>> {
    let text = raw.split('#').next().unwrap_or("").replace(':', " : ");
    let all: Vec<&str> = text.split_whitespace().collect();
    let Some((&head, rest)) = all.split_first() else { return Ok(None) };
    let err = |m: &str| HarnessError::parse(line, format!("{head}: {m}"));
    let (plain, opts) = options(rest);
    let (before, after) = split_colon(&plain);
    let need_list = |after: &Option<Vec<&str>>| -> Result<Vec<String>> {
        match after {
            Some(l) if !l.is_empty() => Ok(owned(l)),
            _ => Err(err("expected `: <names>`")),
        }
    };
    let cmd = match head {
        "name" if !rest.is_empty() => Command::Name(rest.join(" ")),
        "set" => match rest {
            [k, v] => Command::Set(k.to_string(), v.to_string()),
            [k, "=", v] => Command::Set(k.to_string(), v.to_string()),
            _ => return Err(err("expected `set <key> <value>`")),
        },
        "neuron" | "feature" if !rest.is_empty() => Command::Neuron(owned(rest), NeuronKind::Excitatory),
        "inhibitory" if !rest.is_empty() => Command::Neuron(owned(rest), NeuronKind::Inhibitory),
        "synapse" => match rest {
            [a, b, w] => Command::Synapse { pre: a.to_string(), post: b.to_string(), weight: num(w, line)?, delay: 1 },
            [a, b, w, d] => Command::Synapse { pre: a.to_string(), post: b.to_string(), weight: num(w, line)?, delay: num(d, line)? },
            _ => return Err(err("expected `synapse <pre> <post> <weight> [delay]`")),
        },
        "word" if !rest.is_empty() => Command::Word(owned(rest)),
        "ground" => match before.as_slice() {
            [w] => Command::Ground { word: w.to_string(), features: need_list(&after)?, weight: opt(&opts, "weight", line)? },
            _ => return Err(err("expected `ground <word> : <feature>...`")),
        },
        "probe" | "measure" => {
            let spec = match rest {
                ["rate", n] => ProbeSpec::Rate(n.to_string()),
                ["sigma", n] => ProbeSpec::Sigma(n.to_string()),
                ["weight", a, b] => ProbeSpec::Weight(a.to_string(), b.to_string()),
                ["distance", a, b] if head == "measure" => return Ok(Some(Command::Distance(a.to_string(), b.to_string()))),
                _ => return Err(err("expected rate|sigma <name> or weight <pre> <post>")),
            };
            if head == "probe" {
                Command::Probe(spec)
            } else {
                Command::Measure(spec)
            }
        }
        "inject" => match before.as_slice() {
            [s, d] => Command::Inject { strength: num(s, line)?, duration: num(d, line)?, targets: need_list(&after)? },
            _ => return Err(err("expected `inject <strength> <duration> : <name>...`")),
        },
        "step" | "learn" => match rest {
            [n] => {
                let n = num(n, line)?;
                if head == "step" {
                    Command::Step(n)
                } else {
                    Command::Learn(n)
                }
            }
            _ => return Err(err("expected a tick count")),
        },
        "train_sequence" if !plain.is_empty() => {
            Command::TrainSequence { items: owned(&plain), reps: opt(&opts, "reps", line)?, gap: opt(&opts, "gap", line)? }
        }
        "recall" => match plain.as_slice() {
            [c] => Command::Recall { cue: c.to_string(), len: opt(&opts, "len", line)? },
            _ => return Err(err("expected `recall <cue> [len=<n>]`")),
        },
        "learn_sentence" => match before.as_slice() {
            [p] => Command::LearnSentence { pattern: p.to_string(), words: need_list(&after)? },
            _ => return Err(err("expected `learn_sentence <pattern> : <word>...`")),
        },
        "generate" => match before.as_slice() {
            [p] => Command::Generate { pattern: Some(p.to_string()), context: owned(&after.unwrap_or_default()) },
            _ => return Err(err("expected `generate <pattern> [: <feature>...]`")),
        },
        "say" => Command::Generate { pattern: None, context: owned(&plain) },
        "rule" => match parse_rule_line(&rest.join(" "), line)? {
            Some(r) => Command::Rule(r),
            None => return Err(err("missing rule")),
        },
        "rules" => match rest {
            [p] => Command::Rules(PathBuf::from(p)),
            _ => return Err(err("expected a path")),
        },
        "infer" if before.is_empty() => Command::Infer { horizon: opt(&opts, "horizon", line)?, facts: owned(&after.unwrap_or_default()) },
        "consolidate" => match rest {
            [] => Command::Consolidate(None),
            [r] => Command::Consolidate(Some(num(r, line)?)),
            _ => return Err(err("expected an optional rate")),
        },
        "consolidate_transitive" => match rest {
            [n] => Command::ConsolidateTransitive(num(n, line)?),
            _ => return Err(err("expected a replay count")),
        },
        "groups" if rest.is_empty() => Command::Groups,
        "encode_object" => match before.as_slice() {
            [name] => Command::EncodeObject {
                name: name.to_string(),
                views: need_list(&after)?,
                order: opts.get("order").map(|o| o.split(',').filter(|s| !s.is_empty()).map(str::to_string).collect()).unwrap_or_default(),
                reps: opt(&opts, "reps", line)?,
                gap: opt(&opts, "gap", line)?,
            },
            _ => return Err(err("expected `encode_object <name> : <view>...`")),
        },
        "recognize" if !before.is_empty() => Command::Recognize { pool: owned(&before), clues: need_list(&after)? },
        "assert" => Command::Assert(parse_assert(rest, line)?),
        "save" => match rest {
            [p] => Command::Save(PathBuf::from(p)),
            _ => return Err(err("expected a path")),
        },
        _ => return Err(HarnessError::parse(line, format!("unknown or malformed command {head:?}"))),
    };
    Ok(Some(cmd))
}

fn parse_assert(rest: &[&str], line: usize) -> Result<Assertion> {
    let err = || HarnessError::parse(line, "malformed assert");
    let cmp = |t: &str| Cmp::parse(t).ok_or_else(err);
    Ok(match rest {
        ["output", tail @ ..] => {
            let (label, value) = split_colon(tail);
            let value = value.ok_or_else(err)?;
            if label.is_empty() {
                return Err(err());
            }
            // Labels may themselves contain a colon-free word list.
            Assertion::Output { label: label.join(" "), value: value.join(" ") }
        }
        ["fired", n] => Assertion::Fired(n.to_string(), true),
        ["silent", n] => Assertion::Fired(n.to_string(), false),
        ["rate", n, op, v] => Assertion::Rate(n.to_string(), cmp(op)?, num(v, line)?),
        ["weight", a, b, op, v] => Assertion::Weight(a.to_string(), b.to_string(), cmp(op)?, num(v, line)?),
        _ => return Err(err()),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub steps: Vec<Step>,
}

pub fn parse_scenario(text: &str) -> Result<Scenario> {
    let mut steps = Vec::new();
    let mut name = String::from("scenario");
    for (i, raw) in text.lines().enumerate() {
        if let Some(cmd) = parse_line(raw, i + 1)? {
            if let Command::Name(n) = &cmd {
                name = n.clone();
            }
            steps.push(Step { line: i + 1, cmd });
        }
    }
    Ok(Scenario { name, steps })
}

/// All state a script or REPL session works on.
#[derive(Clone, Debug)]
pub struct Session {
    pub name: String,
    pub config: Config,
    pub net: Network,
    pub names: BTreeMap<String, NeuronId>,
    pub lexicon: Lexicon,
    pub patterns: BTreeMap<String, SentencePattern>,
    pub last_pattern: Option<String>,
    pub rules: RuleBase,
    pub probes: Vec<ProbeSpec>,
    /// Trace rows recorded so far.
    pub trace: Vec<TraceRow>,
    /// `label: value` lines in order of production.
    pub output: Vec<String>,
    pub results: Vec<(String, String)>,
    pub failures: Vec<String>,
    /// Config keys that `set` may not override (command line flags).
    pub pinned: Vec<(String, String)>,
    /// Base for relative input paths.
    pub base_dir: PathBuf,
    /// Base for relative output paths.
    pub out_dir: PathBuf,
    /// Ticks stepped before probes were declared.
    pub stepped: bool,
    pub saved: Vec<PathBuf>,
}

impl Session {
    pub fn new(config: Config) -> Result<Self> {
        config.validate()?;
        let mut net = Network::new(config.net)?;
        net.set_competition(config.competition);
        net.enable_recording(Vec::new());
        Ok(Self {
            name: "scenario".into(),
            config,
            net,
            names: BTreeMap::new(),
            lexicon: Lexicon::new(),
            patterns: BTreeMap::new(),
            last_pattern: None,
            rules: RuleBase::new(),
            probes: Vec::new(),
            trace: Vec::new(),
            output: Vec::new(),
            results: Vec::new(),
            failures: Vec::new(),
            pinned: Vec::new(),
            base_dir: PathBuf::from("."),
            out_dir: PathBuf::from("."),
            stepped: false,
            saved: Vec::new(),
        })
    }

    /// Pins config keys and applies them now.
    pub fn pin(&mut self, key: &str, value: &str) -> Result<()> {
        self.pinned.retain(|(k, _)| k != key);
        self.pinned.push((key.into(), value.into()));
        self.apply_config_change(key, value)
    }

    fn apply_config_change(&mut self, key: &str, value: &str) -> Result<()> {
        let mut c = self.config;
        c.set(key, value)?;
        for (k, v) in &self.pinned {
            c.set(k, v)?;
        }
        c.validate()?;
        self.net.set_params(c.net)?;
        self.net.set_competition(c.competition);
        self.config = c;
        Ok(())
    }

    pub fn probe_labels(&self) -> Vec<String> {
        self.probes.iter().map(ProbeSpec::label).collect()
    }

    pub fn resolve(&self, name: &str) -> Result<NeuronId> {
        if let Some(&id) = self.names.get(name) {
            return Ok(id);
        }
        if let Ok(w) = self.lexicon.get(name) {
            return Ok(w.neuron);
        }
        if let Ok(id) = self.rules.atom(name) {
            return Ok(id);
        }
        if let Some(idx) = name.strip_prefix('n').and_then(|s| s.parse::<u32>().ok()) {
            let id = NeuronId(idx);
            if self.net.contains(id) {
                return Ok(id);
            }
        }
        Err(HarnessError::Usage(format!("unknown name {name:?}")))
    }

    fn resolve_all(&self, names: &[String]) -> Result<Vec<NeuronId>> {
        names.iter().map(|n| self.resolve(n)).collect()
    }

    fn name_taken(&self, name: &str) -> bool {
        self.names.contains_key(name) || self.lexicon.get(name).is_ok() || self.rules.atom(name).is_ok()
    }

    fn to_probe(&self, spec: &ProbeSpec) -> Result<Probe> {
        Ok(match spec {
            ProbeSpec::Rate(n) => Probe::Rate(self.resolve(n)?),
            ProbeSpec::Sigma(n) => Probe::Sigma(self.resolve(n)?),
            ProbeSpec::Weight(a, b) => Probe::Weight { pre: self.resolve(a)?, post: self.resolve(b)? },
        })
    }

    /// Re-attaches the recorder with the current probes, keeping rows.
    pub fn attach_recorder(&mut self) -> Result<()> {
        let probes = self.probes.iter().map(|p| self.to_probe(p)).collect::<Result<Vec<_>>>()?;
        self.collect_trace();
        self.net.enable_recording(probes);
        Ok(())
    }

    fn collect_trace(&mut self) {
        let rows = self.net.drain_trace();
        if !rows.is_empty() {
            self.stepped = true;
        }
        self.trace.extend(rows);
    }

    fn emit(&mut self, label: String, value: String) {
        self.output.push(format!("{label}: {value}"));
        self.results.push((label, value));
    }

    fn name_of(&self, id: NeuronId) -> String {
        if let Some(w) = self.lexicon.by_neuron(id) {
            return w.text.clone();
        }
        if let Some((n, _)) = self.names.iter().find(|(_, &v)| v == id) {
            return n.clone();
        }
        if let Some(a) = self.rules.name_of(id) {
            return a.to_string();
        }
        id.to_string()
    }

    /// Makes plain neurons usable as atoms before rules mention them.
    fn bind_atoms(&mut self, rule: &Rule) -> Result<()> {
        let atoms: Vec<&String> = match rule {
            Rule::Imp(a, b) | Rule::Not(a, b) => vec![a, b],
            Rule::False(z) => vec![z],
        };
        for a in atoms {
            if self.rules.atom(a).is_err() {
                if let Some(id) = self.names.get(a).copied().or_else(|| self.lexicon.get(a).ok().map(|w| w.neuron)) {
                    self.rules.bind_atom(&self.net, a, id)?;
                }
            }
        }
        Ok(())
    }

    fn compile_rule(&mut self, rule: Rule) -> Result<()> {
        self.bind_atoms(&rule)?;
        let p = self.config.logic;
        self.rules.compile(&mut self.net, rule, &p)?;
        Ok(())
    }

    fn learner(&self) -> Result<Learner> {
        Ok(Learner::new(self.config.plasticity)?)
    }

    /// Executes one command. Assertion failures are recorded, not returned.
    pub fn execute(&mut self, cmd: &Command) -> Result<()> {
        let r = self.execute_inner(cmd);
        self.collect_trace();
        r
    }

    fn execute_inner(&mut self, cmd: &Command) -> Result<()> {
        match cmd {
            Command::Name(n) => self.name = n.clone(),
            Command::Set(k, v) => self.apply_config_change(k, v)?,
            Command::Neuron(names, kind) => {
                for n in names {
                    if self.name_taken(n) {
                        return Err(HarnessError::Usage(format!("name {n:?} already defined")));
                    }
                    let id = self.net.add_neuron(*kind);
                    self.names.insert(n.clone(), id);
                }
            }
            Command::Synapse { pre, post, weight, delay } => {
                let (a, b) = (self.resolve(pre)?, self.resolve(post)?);
                self.net.add_synapse(a, b, *weight, *delay)?;
            }
            Command::Word(words) => {
                for w in words {
                    if self.names.contains_key(w) || self.rules.atom(w).is_ok() {
                        return Err(HarnessError::Usage(format!("name {w:?} already defined")));
                    }
                    self.lexicon.add_word(&mut self.net, w)?;
                }
            }
            Command::Ground { word, features, weight } => {
                let w = self.lexicon.get(word)?.clone();
                let f = self.resolve_all(features)?;
                let weight = weight.unwrap_or(self.config.language.ground_weight);
                self.lexicon.ground_word(&mut self.net, &w, &f, weight)?;
            }
            Command::Probe(spec) => {
                if self.stepped || self.net.tick() > 0 {
                    return Err(HarnessError::Usage("probes must be declared before the first tick".into()));
                }
                self.to_probe(spec)?;
                self.probes.push(spec.clone());
                self.attach_recorder()?;
            }
            Command::Inject { strength, duration, targets } => {
                let ids = self.resolve_all(targets)?;
                self.net.inject_pattern(&ids, *strength, *duration)?;
            }
            Command::Step(n) => {
                self.net.run(*n)?;
            }
            Command::Learn(n) => {
                let mut l = self.learner()?;
                l.run(&mut self.net, *n)?;
            }
            Command::TrainSequence { items, reps, gap } => {
                let ids = self.resolve_all(items)?;
                let s = self.config.sequence;
                let spec = SequenceSpec {
                    items: ids,
                    gap: gap.unwrap_or(s.gap),
                    strength: s.strength,
                    repetitions: reps.unwrap_or(s.repetitions),
                };
                let mut l = self.learner()?;
                let report = cortexsim_core::sequence::train_sequence(&mut self.net, &mut l, &spec)?;
                let margins: Vec<String> = report.pairs.iter().map(|p| format!("{:.6}", p.final_margin())).collect();
                self.emit(format!("train {}", items.join(" ")), margins.join(" "));
            }
            Command::Recall { cue, len } => {
                let id = self.resolve(cue)?;
                let len = len.unwrap_or(self.net.len());
                let order = recall_sequence(&mut self.net, id, len, &self.config.sequence)?;
                let names: Vec<String> = order.iter().map(|&i| self.name_of(i)).collect();
                self.emit(format!("recall {cue}"), names.join(" "));
            }
            Command::LearnSentence { pattern, words } => {
                let refs: Vec<&str> = words.iter().map(String::as_str).collect();
                let mut l = self.learner()?;
                let p = learn_sentence(&mut self.net, &self.lexicon, &mut l, &refs, &self.config.language)?;
                let shape: Vec<String> = p
                    .slots
                    .iter()
                    .map(|s| match s {
                        cortexsim_core::language::Slot::Fixed(id) => self.name_of(*id),
                        cortexsim_core::language::Slot::Open(i) => {
                            let members: Vec<String> = p.pools[*i].members.iter().map(|&m| self.name_of(m)).collect();
                            format!("{{{}}}", members.join(","))
                        }
                    })
                    .collect();
                self.emit(format!("pattern {pattern}"), shape.join(" "));
                self.patterns.insert(pattern.clone(), p);
                self.last_pattern = Some(pattern.clone());
            }
            Command::Generate { pattern, context } => {
                let name = pattern
                    .clone()
                    .or_else(|| self.last_pattern.clone())
                    .ok_or_else(|| HarnessError::Usage("no sentence pattern learned yet".into()))?;
                let p = self.patterns.get(&name).cloned().ok_or_else(|| HarnessError::Usage(format!("unknown pattern {name:?}")))?;
                let ctx = self.resolve_all(context)?;
                let words = generate_sentence(&mut self.net, &self.lexicon, &p, &ctx, &self.config.language)?;
                self.emit(format!("generate {name}"), words.join(" "));
            }
            Command::Rule(r) => self.compile_rule(r.clone())?,
            Command::Rules(path) => {
                let path = self.base_dir.join(path);
                let text = std::fs::read_to_string(&path).map_err(|e| HarnessError::io(&path, e))?;
                for r in parse_rules(&text)? {
                    self.compile_rule(r)?;
                }
            }
            Command::Infer { horizon, facts } => {
                for f in facts {
                    if self.rules.atom(f).is_err() {
                        let id = self.resolve(f)?;
                        self.rules.bind_atom(&self.net, f, id)?;
                    }
                }
                let p = self.config.logic;
                let horizon = horizon.unwrap_or_else(|| default_horizon(&self.rules, &p));
                let refs: Vec<&str> = facts.iter().map(String::as_str).collect();
                let inf = infer(&mut self.net, &self.rules, &refs, horizon, &p)?;
                let mut order: Vec<(&u64, &String)> = inf.first_fire.iter().map(|(k, v)| (v, k)).collect();
                order.sort();
                let names: Vec<String> = order.iter().map(|(t, n)| format!("{n}@{t}")).collect();
                self.emit("infer".into(), names.join(" "));
            }
            Command::Consolidate(rate) => {
                consolidate(&mut self.net, rate.unwrap_or(self.config.plasticity.consolidate_rate))?;
            }
            Command::ConsolidateTransitive(n) => {
                let (pl, lp) = (self.config.plasticity, self.config.logic);
                let sc = consolidate_transitive(&mut self.net, &mut self.rules, &pl, *n, &lp)?;
                let list: Vec<String> = sc.iter().map(|s| format!("{}->{}@{}", s.from, s.to, s.replay)).collect();
                self.emit("shortcuts".into(), list.join(" "));
            }
            Command::Groups => {
                let c = self.config.competition;
                let groups = build_groups(&self.net, c.overlap_threshold, c.inhibition_strength)?;
                let text: Vec<String> = groups
                    .iter()
                    .map(|g| format!("{{{}}}", g.members.iter().map(|&m| self.name_of(m)).collect::<Vec<_>>().join(",")))
                    .collect();
                self.net.set_groups(groups);
                self.emit("groups".into(), text.join(" "));
            }
            Command::EncodeObject { name, views, order, reps, gap } => {
                let v = self.resolve_all(views)?;
                let o = self.resolve_all(order)?;
                let s = self.config.sequence;
                let mut l = self.learner()?;
                let c = encode_object(&mut self.net, &mut l, &v, &o, gap.unwrap_or(s.gap), reps.unwrap_or(s.repetitions), s.strength)?;
                self.emit(format!("object {name}"), self.name_of(c.anchor));
            }
            Command::Recognize { pool, clues } => {
                let p = self.resolve_all(pool)?;
                let c = self.resolve_all(clues)?;
                let r = recognize(&mut self.net, &c, &p, &self.config.sequence)?;
                let mode = match r.mode {
                    RetrievalMode::Association => "association",
                    RetrievalMode::Recognition => "recognition",
                };
                let winner = if r.fired { self.name_of(r.winner) } else { cortexsim_core::language::UNKNOWN.to_string() };
                self.emit("recognize".into(), format!("{winner} {mode}"));
            }
            Command::Measure(spec) => {
                let v = self.measure(spec)?;
                self.emit(spec.measure_label(), v.to_string());
            }
            Command::Distance(a, b) => {
                let d = logic_distance(&self.net, self.resolve(a)?, self.resolve(b)?)?;
                self.emit(format!("distance {a} {b}"), d.map_or("unreachable".into(), |d| d.to_string()));
            }
            Command::Assert(a) => {
                if let Some(msg) = self.check(a)? {
                    self.failures.push(msg);
                }
            }
            Command::Save(path) => {
                let path = self.out_dir.join(path);
                crate::snapshot::save(self, &path)?;
                self.saved.push(path);
            }
        }
        Ok(())
    }

    fn measure(&self, spec: &ProbeSpec) -> Result<f64> {
        Ok(match spec {
            ProbeSpec::Rate(n) => self.net.rate(self.resolve(n)?)?,
            ProbeSpec::Sigma(n) => self.pending_sigma(self.resolve(n)?),
            ProbeSpec::Weight(a, b) => self.net.effective_weight(self.resolve(a)?, self.resolve(b)?),
        })
    }

    /// Synaptic input waiting in the delay lines for the next tick.
    fn pending_sigma(&self, id: NeuronId) -> f64 {
        let w_max = self.net.params().w_max;
        let s: f64 = self
            .net
            .incoming(id)
            .iter()
            .map(|&s| {
                let syn = &self.net.synapses()[s];
                f64::from(syn.sign) * syn.weight.effective(w_max) * self.net.delay_lines()[s].oldest()
            })
            .sum();
        s.max(0.0)
    }

    fn check(&self, a: &Assertion) -> Result<Option<String>> {
        Ok(match a {
            Assertion::Output { label, value } => {
                let got = self.results.iter().rev().find(|(l, _)| l == label).map(|(_, v)| v.clone());
                match got {
                    Some(v) if &v == value => None,
                    Some(v) => Some(format!("assert output {label}: expected {value:?}, got {v:?}")),
                    None => Some(format!("assert output {label}: no such output")),
                }
            }
            Assertion::Fired(n, want) => {
                let fired = self.net.neuron(self.resolve(n)?)?.fired;
                (fired != *want).then(|| format!("assert {} {n}: neuron {}", if *want { "fired" } else { "silent" }, if fired { "fired" } else { "did not fire" }))
            }
            Assertion::Rate(n, op, v) => {
                let r = self.net.rate(self.resolve(n)?)?;
                (!op.holds(r, *v)).then(|| format!("assert rate {n} {} {v}: rate is {r}", op.symbol()))
            }
            Assertion::Weight(pre, post, op, v) => {
                let w = self.net.effective_weight(self.resolve(pre)?, self.resolve(post)?);
                (!op.holds(w, *v)).then(|| format!("assert weight {pre} {post} {} {v}: weight is {w}", op.symbol()))
            }
        })
    }

    /// Runs parsed steps in order. Stops at the first runtime error.
    pub fn run(&mut self, steps: &[Step]) -> Result<()> {
        for (i, step) in steps.iter().enumerate() {
            let before = self.failures.len();
            self.execute(&step.cmd).map_err(|e| HarnessError::Step { index: i + 1, line: step.line, msg: e.to_string() })?;
            if self.failures.len() > before {
                let msg = self.failures.pop().unwrap_or_default();
                self.failures.push(format!("step {} (line {}): {msg}", i + 1, step.line));
            }
        }
        Ok(())
    }

    pub fn relative_to(&mut self, script: &Path) {
        self.base_dir = script.parent().map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("."));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_every_command() {
        let text = "\
name demo
set net.c1 100
neuron a b
inhibitory i
feature furry
synapse a b 0.5 2
word cat dog
ground cat : furry weight=0.4
probe rate a
probe weight a b
inject 100 1 : a
step 5
learn 3
train_sequence a b reps=5 gap=2
recall a len=2
learn_sentence p : this is cat
generate p : furry
say furry
rule IMP a b
rules r.txt
infer horizon=10 : a
consolidate 0.5
consolidate_transitive 20
groups
encode_object cup : a b order=a,b,a reps=3
recognize a b : furry
measure rate a
measure distance a b
assert output generate p : this is cat
assert fired a
assert weight a b >= 0.5
save out.snap
";
        let s = parse_scenario(text).unwrap();
        assert_eq!(s.name, "demo");
        assert_eq!(s.steps.len(), 32);
        assert_eq!(s.steps[7].cmd, Command::Ground { word: "cat".into(), features: vec!["furry".into()], weight: Some(0.4) });
        assert_eq!(
            s.steps[28].cmd,
            Command::Assert(Assertion::Output { label: "generate p".into(), value: "this is cat".into() })
        );
    }

    #[test]
    fn parse_errors_name_the_line() {
        for (text, line) in [("step\n", 1), ("neuron a\n\nsynapse a\n", 3), ("bogus 1\n", 1), ("assert rate a ~ 1\n", 1)] {
            match parse_scenario(text) {
                Err(HarnessError::Parse { line: l, .. }) => assert_eq!(l, line, "{text:?}"),
                other => panic!("{text:?}: {other:?}"),
            }
        }
    }

    #[test]
    fn failing_assert_is_recorded() {
        let s = parse_scenario("neuron a\ninject 100 1 : a\nstep 1\nassert silent a\nassert fired a\n").unwrap();
        let mut sess = Session::new(Config::default()).unwrap();
        sess.run(&s.steps).unwrap();
        assert_eq!(sess.failures.len(), 1);
        assert!(sess.failures[0].contains("line 4"));
    }

    #[test]
    fn runtime_error_names_the_step() {
        let s = parse_scenario("neuron a\nsynapse a zz 0.5\n").unwrap();
        let mut sess = Session::new(Config::default()).unwrap();
        match sess.run(&s.steps) {
            Err(HarnessError::Step { index: 2, line: 2, .. }) => {}
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn probes_after_ticks_rejected() {
        let s = parse_scenario("neuron a\nstep 1\nprobe rate a\n").unwrap();
        let mut sess = Session::new(Config::default()).unwrap();
        assert!(sess.run(&s.steps).is_err());
    }

    #[test]
    fn pinned_seed_wins() {
        let mut sess = Session::new(Config::default()).unwrap();
        sess.pin("net.rng_seed", "42").unwrap();
        sess.execute(&Command::Set("net.rng_seed".into(), "7".into())).unwrap();
        assert_eq!(sess.config.net.rng_seed, 42);
    }
}
