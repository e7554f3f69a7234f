//! Rules as circuits.
//!
//! `IMP a b` is a strong delayed excitatory synapse, so a firing premise
//! fires its conclusion one rule delay later. `NOT x b` routes `x` through a
//! fresh inhibitory neuron onto `b`. `FALSE z` silences `z`. Inference is just
//! simulation with the facts held on.
//!
//! The atom named [`TRUE_ATOM`] is held on in every inference episode, which
//! gives gates a constant input to negate.

use alloc::collections::{BTreeMap, BTreeSet, VecDeque};
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};
use crate::network::{Network, NeuronId, NeuronKind, SynapseId};
use crate::plasticity::{consolidate, Learner, PlasticityParams, TemporalGrowth};

pub const TRUE_ATOM: &str = "TRUE";

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogicParams {
    /// Margin over the weight that just lets a threshold-rate premise fire
    /// its conclusion.
    pub safety: f64,
    pub d_rule: u32,
    /// Parallel inhibitory contacts per NOT rule.
    pub inhibition_contacts: u32,
    pub strength: f64,
}

impl Default for LogicParams {
    fn default() -> Self {
        Self { safety: 1.5, d_rule: 2, inhibition_contacts: 2, strength: 100.0 }
    }
}

impl LogicParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |key: &'static str, reason: &str| Err(Error::InvalidParam { key: key.into(), reason: reason.into() });
        if !(self.safety >= 1.0 && self.safety.is_finite()) {
            return bad("logic.safety", "must be >= 1");
        }
        if self.d_rule < 2 {
            return bad("logic.d_rule", "must be >= 2 so NOT can relay through one neuron");
        }
        if self.inhibition_contacts == 0 {
            return bad("logic.inhibition_contacts", "must be >= 1");
        }
        if !(self.strength > 0.0 && self.strength.is_finite()) {
            return bad("logic.strength", "must be > 0");
        }
        Ok(())
    }

    /// Rule weight: a premise firing at exactly `f_thr` delivers `safety`
    /// times the input needed to fire, `w_rule = safety * sigma_thr / f_thr`
    /// with `sigma_thr = -ln(1 - f_thr / c1) / c2`.
    pub fn w_rule(&self, net: &Network) -> Result<f64> {
        let p = net.params();
        let w = self.safety * p.sigma_threshold() / p.f_thr;
        if w > p.w_max {
            return Err(Error::InvalidParam {
                key: "logic.safety".into(),
                reason: alloc::format!("rule weight {w} exceeds w_max {}", p.w_max),
            });
        }
        Ok(w)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Rule {
    Imp(String, String),
    Not(String, String),
    False(String),
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rule::Imp(a, b) => write!(f, "IMP {a} {b}"),
            Rule::Not(x, b) => write!(f, "NOT {x} {b}"),
            Rule::False(z) => write!(f, "FALSE {z}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CompiledRule {
    pub rule: Rule,
    pub synapses: Vec<SynapseId>,
    pub neurons: Vec<NeuronId>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RuleBase {
    atoms: BTreeMap<String, NeuronId>,
    rules: Vec<CompiledRule>,
}

impl RuleBase {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn atoms(&self) -> &BTreeMap<String, NeuronId> {
        &self.atoms
    }

    pub fn rules(&self) -> &[CompiledRule] {
        &self.rules
    }

    pub fn atom(&self, name: &str) -> Result<NeuronId> {
        self.atoms.get(name).copied().ok_or_else(|| Error::UnknownAtom(name.into()))
    }

    pub fn name_of(&self, id: NeuronId) -> Option<&str> {
        self.atoms.iter().find(|(_, &n)| n == id).map(|(k, _)| k.as_str())
    }

    /// Registers an existing neuron as an atom.
    pub fn bind_atom(&mut self, net: &Network, name: &str, id: NeuronId) -> Result<()> {
        net.check(id)?;
        if name.is_empty() || name.chars().any(char::is_whitespace) {
            return Err(Error::InvalidArgument(alloc::format!("bad atom name {name:?}")));
        }
        match self.atoms.get(name) {
            Some(&old) if old != id => Err(Error::InvalidArgument(alloc::format!("atom {name} already bound"))),
            _ => {
                self.atoms.insert(name.into(), id);
                Ok(())
            }
        }
    }

    /// Restores a compiled rule without touching the network.
    pub fn push_compiled(&mut self, rule: CompiledRule) {
        self.rules.push(rule);
    }

    pub fn ensure_atom(&mut self, net: &mut Network, name: &str) -> Result<NeuronId> {
        if let Some(&id) = self.atoms.get(name) {
            return Ok(id);
        }
        if name.is_empty() || name.chars().any(char::is_whitespace) {
            return Err(Error::InvalidArgument(alloc::format!("bad atom name {name:?}")));
        }
        let id = net.add_neuron(NeuronKind::Excitatory);
        self.atoms.insert(name.into(), id);
        Ok(id)
    }

    pub fn compile(&mut self, net: &mut Network, rule: Rule, params: &LogicParams) -> Result<()> {
        params.validate()?;
        let w_rule = params.w_rule(net)?;
        let compiled = match &rule {
            Rule::Imp(a, b) => {
                let (a, b) = (self.ensure_atom(net, a)?, self.ensure_atom(net, b)?);
                let s = imp_edge(net, a, b, w_rule, params.d_rule)?;
                CompiledRule { rule, synapses: alloc::vec![s], neurons: Vec::new() }
            }
            Rule::Not(x, b) => {
                let (x, b) = (self.ensure_atom(net, x)?, self.ensure_atom(net, b)?);
                let inh = net.add_neuron(NeuronKind::Inhibitory);
                let w_max = net.params().w_max;
                let mut synapses = alloc::vec![net.add_synapse(x, inh, w_max, 1)?];
                for _ in 0..params.inhibition_contacts {
                    synapses.push(net.add_synapse(inh, b, w_rule, params.d_rule - 1)?);
                }
                CompiledRule { rule, synapses, neurons: alloc::vec![inh] }
            }
            Rule::False(z) => {
                let z = self.ensure_atom(net, z)?;
                net.set_silenced(z, true)?;
                CompiledRule { rule, synapses: Vec::new(), neurons: alloc::vec![z] }
            }
        };
        self.rules.push(compiled);
        Ok(())
    }

    fn imp_pairs(&self) -> impl Iterator<Item = (&str, &str)> {
        self.rules.iter().filter_map(|r| match &r.rule {
            Rule::Imp(a, b) => Some((a.as_str(), b.as_str())),
            _ => None,
        })
    }
}

/// Creates the edge or raises an existing one to rule strength and delay.
fn imp_edge(net: &mut Network, a: NeuronId, b: NeuronId, w: f64, d: u32) -> Result<SynapseId> {
    match net.find_synapse(a, b).filter(|&s| net.synapses()[s].delay == d) {
        Some(s) => {
            let ltm = net.synapses()[s].weight.ltm.max(w);
            net.set_ltm(s, ltm)?;
            Ok(s)
        }
        None => net.add_synapse(a, b, w, d),
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Inference {
    pub derived: BTreeSet<String>,
    pub first_fire: BTreeMap<String, u64>,
}

/// Holds the facts (and [`TRUE_ATOM`] if present) on for ticks `0..=horizon`
/// with plasticity off, and reports every other atom that fired together
/// with the facts that fired.
pub fn infer(net: &mut Network, rb: &RuleBase, facts: &[&str], horizon: u64, params: &LogicParams) -> Result<Inference> {
    let mut ext: Vec<(NeuronId, f64)> = facts.iter().map(|f| rb.atom(f).map(|id| (id, params.strength))).collect::<Result<_>>()?;
    if let Some(&t) = rb.atoms.get(TRUE_ATOM) {
        ext.push((t, params.strength));
    }
    net.reset_activity();
    let mut result = Inference::default();
    for t in 0..=horizon {
        let report = net.step(&ext)?;
        for &id in &report.fired {
            if let Some(name) = rb.name_of(id).filter(|&n| n != TRUE_ATOM) {
                result.first_fire.entry(name.to_string()).or_insert(t);
                result.derived.insert(name.to_string());
            }
        }
    }
    net.reset_activity();
    Ok(result)
}

/// Forward-chaining closure over the IMP rules alone.
pub fn reachability_closure(rb: &RuleBase, facts: &[&str]) -> BTreeSet<String> {
    let mut seen: BTreeSet<String> = facts.iter().map(|s| s.to_string()).collect();
    let mut queue: VecDeque<String> = seen.iter().cloned().collect();
    if rb.atoms.contains_key(TRUE_ATOM) {
        queue.push_back(TRUE_ATOM.into());
    }
    while let Some(a) = queue.pop_front() {
        for (p, c) in rb.imp_pairs() {
            if p == a && seen.insert(c.to_string()) {
                queue.push_back(c.to_string());
            }
        }
    }
    seen.remove(TRUE_ATOM);
    seen
}

/// Ticks needed for every atom to be reached along the longest simple IMP
/// path: `(atoms + 1) * d_rule`.
pub fn default_horizon(rb: &RuleBase, params: &LogicParams) -> u64 {
    (rb.atoms.len() as u64 + 1) * u64::from(params.d_rule)
}

/// Adds `NOT x -> out` using the constant atom: `IMP TRUE out`, `NOT x out`.
pub fn not_gate(net: &mut Network, rb: &mut RuleBase, x: &str, out: &str, params: &LogicParams) -> Result<()> {
    rb.compile(net, Rule::Imp(TRUE_ATOM.into(), out.into()), params)?;
    rb.compile(net, Rule::Not(x.into(), out.into()), params)
}

/// Adds `out = NAND(a, b)` as `NOT a -> na`, `NOT b -> nb`, `na -> out`,
/// `nb -> out`.
pub fn nand_gate(net: &mut Network, rb: &mut RuleBase, a: &str, b: &str, out: &str, params: &LogicParams) -> Result<()> {
    let na = alloc::format!("{out}.not_{a}");
    let nb = alloc::format!("{out}.not_{b}");
    not_gate(net, rb, a, &na, params)?;
    not_gate(net, rb, b, &nb, params)?;
    rb.compile(net, Rule::Imp(na, out.into()), params)?;
    rb.compile(net, Rule::Imp(nb, out.into()), params)
}

/// One row per assignment: the inputs and whether `output` fired. Every
/// episode runs on a fresh clone of `net`.
///
/// IMP here is causal: a true premise makes its conclusion fire, a false one
/// leaves it silent. This is forward chaining, not material implication.
pub fn truth_table(
    net: &Network,
    rb: &RuleBase,
    inputs: &[&str],
    output: &str,
    assignments: &[Vec<bool>],
    params: &LogicParams,
) -> Result<Vec<(Vec<bool>, bool)>> {
    rb.atom(output)?;
    let horizon = default_horizon(rb, params);
    let mut rows = Vec::with_capacity(assignments.len());
    for assign in assignments {
        if assign.len() != inputs.len() {
            return Err(Error::InvalidArgument("assignment length differs from input count".into()));
        }
        let facts: Vec<&str> = inputs.iter().zip(assign).filter(|(_, &v)| v).map(|(&n, _)| n).collect();
        let mut episode = net.clone();
        let inf = infer(&mut episode, rb, &facts, horizon, params)?;
        rows.push((assign.clone(), inf.derived.contains(output)));
    }
    Ok(rows)
}

pub fn all_assignments(n: usize) -> Vec<Vec<bool>> {
    (0..1u32 << n).rev().map(|m| (0..n).map(|i| m >> (n - 1 - i) & 1 == 1).collect()).collect()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Shortcut {
    pub from: String,
    pub to: String,
    /// Zero-based replay after which the edge first reached rule strength.
    pub replay: u32,
    pub synapse: SynapseId,
}

/// Replays the rule chains from their roots with plasticity on.
///
/// Direct links between atoms that fire in order are grown at the rule delay
/// and strengthened by the interval kernel. Synapses realizing compiled rules
/// are restored after every replay. Each grown edge is reported once, at the
/// replay where its long-term weight first reaches rule strength; it is then
/// recorded as an IMP rule.
pub fn consolidate_transitive(
    net: &mut Network,
    rb: &mut RuleBase,
    plasticity: &PlasticityParams,
    replays: u32,
    params: &LogicParams,
) -> Result<Vec<Shortcut>> {
    if replays == 0 {
        return Err(Error::InvalidArgument("replays must be >= 1".into()));
    }
    params.validate()?;
    let w_rule = params.w_rule(net)?;
    let premises: BTreeSet<&str> = rb.imp_pairs().map(|(a, _)| a).collect();
    let conclusions: BTreeSet<&str> = rb.imp_pairs().map(|(_, b)| b).collect();
    let mut roots: Vec<NeuronId> = premises
        .iter()
        .filter(|p| !conclusions.contains(*p) && **p != TRUE_ATOM)
        .map(|p| rb.atom(p))
        .collect::<Result<_>>()?;
    if roots.is_empty() {
        roots = premises.iter().map(|p| rb.atom(p)).collect::<Result<_>>()?;
    }
    if roots.is_empty() {
        return Ok(Vec::new());
    }

    let candidates: BTreeSet<NeuronId> =
        rb.atoms.iter().filter(|(k, _)| k.as_str() != TRUE_ATOM).map(|(_, &v)| v).collect();
    let frozen: Vec<(SynapseId, f64, f64)> = rb
        .rules
        .iter()
        .flat_map(|r| r.synapses.iter())
        .map(|&s| (s, net.synapses()[s].weight.ltm, net.synapses()[s].weight.stm))
        .collect();
    let mut learner = Learner::new(*plasticity)?;
    learner.growth = Some(TemporalGrowth { candidates, delay: params.d_rule });
    let horizon = default_horizon(rb, params) + 1;
    let mut reported: BTreeSet<SynapseId> = BTreeSet::new();
    let mut shortcuts = Vec::new();

    for replay in 0..replays {
        net.reset_activity();
        learner.rest();
        let start = net.tick();
        for &r in &roots {
            net.inject_pattern_at(&[r], params.strength, start, 1)?;
        }
        learner.run(net, horizon)?;
        net.reset_activity();
        consolidate(net, plasticity.consolidate_rate)?;
        for &(s, ltm, stm) in &frozen {
            net.set_ltm(s, ltm)?;
            net.set_stm(s, stm)?;
        }
        for &s in &learner.grown_links {
            let syn = &net.synapses()[s];
            if syn.weight.ltm >= w_rule && reported.insert(s) {
                let from = rb.name_of(syn.pre).unwrap_or_default().to_string();
                let to = rb.name_of(syn.post).unwrap_or_default().to_string();
                shortcuts.push(Shortcut { from, to, replay, synapse: s });
            }
        }
    }
    for sc in &shortcuts {
        rb.rules.push(CompiledRule {
            rule: Rule::Imp(sc.from.clone(), sc.to.clone()),
            synapses: alloc::vec![sc.synapse],
            neurons: Vec::new(),
        });
    }
    Ok(shortcuts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::NetParams;

    fn base(rules: &[Rule]) -> (Network, RuleBase) {
        let mut net = Network::new(NetParams::default()).unwrap();
        let mut rb = RuleBase::new();
        for r in rules {
            rb.compile(&mut net, r.clone(), &LogicParams::default()).unwrap();
        }
        (net, rb)
    }

    fn imp(a: &str, b: &str) -> Rule {
        Rule::Imp(a.into(), b.into())
    }

    fn names(s: &[&str]) -> BTreeSet<String> {
        s.iter().map(|x| x.to_string()).collect()
    }

    #[test]
    fn w_rule_inverts_activation() {
        let net = Network::new(NetParams::default()).unwrap();
        let w = LogicParams::default().w_rule(&net).unwrap();
        let p = net.params();
        let f = crate::activation(w * p.f_thr, p).unwrap();
        assert!(f > p.f_thr);
        let f_bare = crate::activation(w / 1.5 * p.f_thr, p).unwrap();
        assert!((f_bare - p.f_thr).abs() < 1e-9);
    }

    #[test]
    fn imp_fires_after_rule_delay() {
        let (mut net, rb) = base(&[imp("a", "b")]);
        let inf = infer(&mut net, &rb, &["a"], 6, &LogicParams::default()).unwrap();
        assert_eq!(inf.derived, names(&["a", "b"]));
        assert_eq!(inf.first_fire["b"], 2);
    }

    #[test]
    fn chain_latency_adds_up() {
        let (mut net, rb) = base(&[imp("a", "b"), imp("b", "c")]);
        let inf = infer(&mut net, &rb, &["a"], 8, &LogicParams::default()).unwrap();
        assert_eq!(inf.derived, names(&["a", "b", "c"]));
        assert_eq!(inf.first_fire["c"], inf.first_fire["a"] + 4);
        assert!(infer(&mut net, &rb, &[], 8, &LogicParams::default()).unwrap().derived.is_empty());
        assert!(infer(&mut net, &rb, &["zz"], 8, &LogicParams::default()).is_err());
    }

    #[test]
    fn not_blocks_imp() {
        let (mut net, rb) = base(&[imp("a", "b"), Rule::Not("x".into(), "b".into())]);
        let p = LogicParams::default();
        assert!(!infer(&mut net, &rb, &["a", "x"], 10, &p).unwrap().derived.contains("b"));
        assert!(infer(&mut net, &rb, &["a"], 10, &p).unwrap().derived.contains("b"));
    }

    #[test]
    fn false_never_fires() {
        let (mut net, rb) = base(&[Rule::False("z".into()), imp("a", "z")]);
        let inf = infer(&mut net, &rb, &["a", "z"], 10, &LogicParams::default()).unwrap();
        assert!(!inf.derived.contains("z"));
    }

    #[test]
    fn not_and_nand_tables() {
        let p = LogicParams::default();
        let mut net = Network::new(NetParams::default()).unwrap();
        let mut rb = RuleBase::new();
        not_gate(&mut net, &mut rb, "x", "nx", &p).unwrap();
        let t = truth_table(&net, &rb, &["x"], "nx", &all_assignments(1), &p).unwrap();
        assert_eq!(t, [(alloc::vec![true], false), (alloc::vec![false], true)]);
        nand_gate(&mut net, &mut rb, "a", "b", "q", &p).unwrap();
        let t = truth_table(&net, &rb, &["a", "b"], "q", &all_assignments(2), &p).unwrap();
        let got: Vec<bool> = t.iter().map(|r| r.1).collect();
        assert_eq!(got, [false, true, true, true]);
    }

    #[test]
    fn shortcut_emerges_and_speeds_up() {
        let p = LogicParams::default();
        let (mut net, mut rb) = base(&[imp("a", "b"), imp("b", "c")]);
        let before = infer(&mut net, &rb, &["a"], 10, &p).unwrap().first_fire["c"];
        let sc = consolidate_transitive(&mut net, &mut rb, &PlasticityParams::default(), 200, &p).unwrap();
        assert_eq!(sc.len(), 1);
        assert_eq!((sc[0].from.as_str(), sc[0].to.as_str()), ("a", "c"));
        let after = infer(&mut net, &rb, &["a"], 10, &p).unwrap().first_fire["c"];
        assert!(after < before);
    }

    #[test]
    fn single_rule_has_no_shortcut() {
        let (mut net, mut rb) = base(&[imp("a", "b")]);
        let sc = consolidate_transitive(&mut net, &mut rb, &PlasticityParams::default(), 50, &LogicParams::default()).unwrap();
        assert!(sc.is_empty());
    }

    #[test]
    fn longer_chain_grows_every_shortcut() {
        let p = LogicParams::default();
        let (mut net, mut rb) = base(&[imp("a", "b"), imp("b", "c"), imp("c", "d")]);
        let before = infer(&mut net, &rb, &["a"], 12, &p).unwrap().first_fire["d"];
        let sc = consolidate_transitive(&mut net, &mut rb, &PlasticityParams::default(), 200, &p).unwrap();
        let mut pairs: Vec<(&str, &str)> = sc.iter().map(|s| (s.from.as_str(), s.to.as_str())).collect();
        pairs.sort_unstable();
        assert_eq!(pairs, [("a", "c"), ("a", "d"), ("b", "d")]);
        let after = infer(&mut net, &rb, &["a"], 12, &p).unwrap().first_fire["d"];
        assert!(after < before);
    }
}
