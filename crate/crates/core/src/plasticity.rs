//! Activity-dependent synaptic change.
//!
//! Same-tick co-firing strengthens convergent synapses onto a shared target.
//! Ordered firing strengthens the earlier-to-later synapse and depresses the
//! reverse one, with a magnitude that shrinks exponentially with the firing
//! interval. All of it lands in the short-term trace; only [`consolidate`]
//! writes long-term weight.

use alloc::collections::{BTreeMap, BTreeSet, VecDeque};
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::network::{Network, NeuronId, NeuronKind, SynapseId, TickReport};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlasticityParams {
    pub a_plus: f64,
    pub a_minus: f64,
    pub tau_plus: f64,
    pub tau_minus: f64,
    pub eta_cofire: f64,
    pub tau_stm: f64,
    pub consolidate_rate: f64,
    /// Largest firing interval (ticks) that still produces a change.
    pub window: u64,
    /// Allocate a new shared target for pairs that keep co-firing without one.
    pub grow_new: bool,
    pub grow_threshold: u32,
    pub grow_weight: f64,
}

impl Default for PlasticityParams {
    fn default() -> Self {
        Self {
            a_plus: 0.1,
            a_minus: 0.1,
            tau_plus: 10.0,
            tau_minus: 10.0,
            eta_cofire: 0.05,
            tau_stm: 100.0,
            consolidate_rate: 0.5,
            window: 30,
            grow_new: false,
            grow_threshold: 3,
            grow_weight: 0.5,
        }
    }
}

impl PlasticityParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("plasticity.a_plus", self.a_plus),
            ("plasticity.a_minus", self.a_minus),
            ("plasticity.tau_plus", self.tau_plus),
            ("plasticity.tau_minus", self.tau_minus),
            ("plasticity.eta_cofire", self.eta_cofire),
            ("plasticity.tau_stm", self.tau_stm),
            ("plasticity.consolidate_rate", self.consolidate_rate),
        ];
        for (key, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParam { key: key.into(), reason: "must be positive".into() });
            }
        }
        if self.consolidate_rate > 1.0 {
            return Err(Error::InvalidParam {
                key: "plasticity.consolidate_rate".into(),
                reason: "must not exceed 1".into(),
            });
        }
        if (self.window as f64) < self.tau_plus.max(self.tau_minus) {
            return Err(Error::InvalidParam {
                key: "plasticity.window".into(),
                reason: "must be at least max(tau_plus, tau_minus)".into(),
            });
        }
        if self.grow_threshold == 0 {
            return Err(Error::InvalidParam {
                key: "plasticity.grow_threshold".into(),
                reason: "must be positive".into(),
            });
        }
        Ok(())
    }
}

/// Weight change for a presynaptic firing `delta_t` ticks before the
/// postsynaptic one. Negative `delta_t` (post before pre) depresses.
pub fn stdp_kernel(delta_t: i64, params: &PlasticityParams) -> f64 {
    if delta_t.unsigned_abs() > params.window {
        return 0.0;
    }
    match delta_t {
        0 => 0.0,
        d if d > 0 => params.a_plus * libm::exp(-(d as f64) / params.tau_plus),
        d => -params.a_minus * libm::exp((d as f64) / params.tau_minus),
    }
}

/// Recent firing events per neuron, pruned to the plasticity window.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FiringHistory {
    window: u64,
    events: Vec<VecDeque<(u64, f64)>>,
    now: Option<u64>,
}

impl FiringHistory {
    pub fn new(window: u64) -> Self {
        Self { window, events: Vec::new(), now: None }
    }

    pub fn window(&self) -> u64 {
        self.window
    }

    /// Last recorded tick.
    pub fn now(&self) -> Option<u64> {
        self.now
    }

    pub fn clear(&mut self) {
        self.events.iter_mut().for_each(VecDeque::clear);
        self.now = None;
    }

    pub fn record(&mut self, report: &TickReport) {
        if self.events.len() < report.rates.len() {
            self.events.resize_with(report.rates.len(), VecDeque::new);
        }
        let now = report.tick;
        for &id in &report.fired {
            self.events[id.index()].push_back((now, report.rates[id.index()]));
        }
        let horizon = now.saturating_sub(self.window);
        for q in &mut self.events {
            while q.front().is_some_and(|&(t, _)| t < horizon) {
                q.pop_front();
            }
        }
        self.now = Some(now);
    }

    /// Firing events of `id`, oldest first.
    pub fn events(&self, id: NeuronId) -> impl Iterator<Item = (u64, f64)> + '_ {
        self.events.get(id.index()).into_iter().flat_map(|q| q.iter().copied())
    }

    pub fn fired_at(&self, id: NeuronId, tick: u64) -> bool {
        self.events(id).any(|(t, _)| t == tick)
    }

    pub fn fired_now(&self) -> Vec<NeuronId> {
        let Some(now) = self.now else { return Vec::new() };
        (0..self.events.len() as u32)
            .map(NeuronId)
            .filter(|&id| self.events[id.index()].back().is_some_and(|&(t, _)| t == now))
            .collect()
    }
}

fn add_stm(net: &mut Network, s: SynapseId, delta: f64) -> f64 {
    let s_max = net.params().s_max;
    let w = &mut net.synapses_mut()[s].weight;
    let old = w.stm;
    w.stm = (old + delta).clamp(0.0, s_max);
    w.stm - old
}

/// Applies the interval kernel to every synapse whose endpoint fired on the
/// history's current tick, pairing it with earlier firings of the other
/// endpoint inside the window. Returns the change actually applied to each
/// short-term trace.
pub fn apply_temporal_plasticity(
    net: &mut Network,
    history: &FiringHistory,
    params: &PlasticityParams,
) -> Vec<(SynapseId, f64)> {
    let Some(now) = history.now() else { return Vec::new() };
    let fired = history.fired_now();
    let mut touched: BTreeSet<SynapseId> = BTreeSet::new();
    for &id in &fired {
        touched.extend(net.incoming(id).iter().copied());
        touched.extend(net.outgoing(id).iter().copied());
    }
    let mut applied = Vec::new();
    for s in touched {
        let (pre, post) = {
            let syn = &net.synapses()[s];
            (syn.pre, syn.post)
        };
        let mut delta = 0.0;
        if history.fired_at(post, now) {
            for (t, _) in history.events(pre).filter(|&(t, _)| t < now) {
                delta += stdp_kernel((now - t) as i64, params);
            }
        }
        if history.fired_at(pre, now) {
            for (t, _) in history.events(post).filter(|&(t, _)| t < now) {
                delta += stdp_kernel(-((now - t) as i64), params);
            }
        }
        if delta != 0.0 {
            let d = add_stm(net, s, delta);
            if d != 0.0 {
                applied.push((s, d));
            }
        }
    }
    applied
}

/// Counts repeated co-firing of pairs that have no shared target yet.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CofireState {
    pub counts: BTreeMap<(NeuronId, NeuronId), u32>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct CofireOutcome {
    pub deltas: Vec<(SynapseId, f64)>,
    /// Neurons allocated as new shared targets.
    pub grown: Vec<NeuronId>,
}

fn shares_target(net: &Network, u: NeuronId, v: NeuronId) -> bool {
    let targets: BTreeSet<NeuronId> =
        net.outgoing(u).iter().map(|&s| net.synapses()[s].post).collect();
    net.outgoing(v).iter().any(|&s| targets.contains(&net.synapses()[s].post))
}

/// Strengthens convergent synapses of neurons that fired in the same tick.
///
/// Every synapse from a fired neuron onto a target that receives at least one
/// other fired input gains `eta_cofire` once per tick. With `grow_new`, a pair
/// that co-fires `grow_threshold` times without any shared target gets a
/// freshly allocated one.
pub fn apply_cofire(
    net: &mut Network,
    fired: &[NeuronId],
    params: &PlasticityParams,
    state: &mut CofireState,
) -> CofireOutcome {
    let mut out = CofireOutcome::default();
    if fired.len() < 2 {
        return out;
    }
    let fired_set: BTreeSet<NeuronId> = fired.iter().copied().collect();
    let mut convergent: BTreeMap<NeuronId, Vec<SynapseId>> = BTreeMap::new();
    for &u in &fired_set {
        for &s in net.outgoing(u) {
            convergent.entry(net.synapses()[s].post).or_default().push(s);
        }
    }
    let mut strengthen = Vec::new();
    for syns in convergent.values() {
        let pres: BTreeSet<NeuronId> = syns.iter().map(|&s| net.synapses()[s].pre).collect();
        if pres.len() >= 2 {
            strengthen.extend(syns.iter().copied());
        }
    }
    strengthen.sort_unstable();
    for s in strengthen {
        let d = add_stm(net, s, params.eta_cofire);
        if d != 0.0 {
            out.deltas.push((s, d));
        }
    }

    if params.grow_new {
        let list: Vec<NeuronId> = fired_set.into_iter().collect();
        for (i, &u) in list.iter().enumerate() {
            for &v in &list[i + 1..] {
                if shares_target(net, u, v) {
                    state.counts.remove(&(u, v));
                    continue;
                }
                let c = state.counts.entry((u, v)).or_insert(0);
                *c += 1;
                if *c >= params.grow_threshold {
                    state.counts.remove(&(u, v));
                    let n = net.add_neuron(NeuronKind::Excitatory);
                    let w = params.grow_weight.min(net.params().w_max);
                    net.add_synapse(u, n, w, 1).expect("endpoints exist");
                    net.add_synapse(v, n, w, 1).expect("endpoints exist");
                    out.grown.push(n);
                }
            }
        }
    }
    out
}

/// Multiplies every short-term trace by `exp(-1 / tau_stm)`.
pub fn decay_stm(net: &mut Network, tau_stm: f64) {
    let factor = libm::exp(-1.0 / tau_stm);
    for syn in net.synapses_mut() {
        syn.weight.stm *= factor;
    }
}

/// Moves `rate * stm` of every synapse into its long-term weight (clamped to
/// `w_max`) and removes the moved amount from the trace.
pub fn consolidate(net: &mut Network, rate: f64) -> Result<()> {
    if !(rate > 0.0 && rate <= 1.0) {
        return Err(Error::InvalidArgument("consolidation rate must lie in (0, 1]".into()));
    }
    let w_max = net.params().w_max;
    for syn in net.synapses_mut() {
        let w = &mut syn.weight;
        let moved = rate * w.stm;
        if moved == 0.0 {
            continue;
        }
        w.ltm = (w.ltm + moved).min(w_max);
        w.stm = if rate == 1.0 { 0.0 } else { w.stm - moved };
    }
    Ok(())
}

/// Creates zero-weight synapses `u -> v` between candidate neurons when `v`
/// fires now and `u` fired earlier inside the window without an existing
/// connection. Returns the new synapses.
pub fn grow_temporal_links(
    net: &mut Network,
    history: &FiringHistory,
    candidates: &BTreeSet<NeuronId>,
    delay: u32,
) -> Vec<SynapseId> {
    let Some(now) = history.now() else { return Vec::new() };
    let mut created = Vec::new();
    for &v in candidates {
        if !history.fired_at(v, now) {
            continue;
        }
        for &u in candidates {
            if u == v || net.find_synapse(u, v).is_some() {
                continue;
            }
            if history.events(u).any(|(t, _)| t < now) {
                if let Ok(s) = net.add_synapse(u, v, 0.0, delay) {
                    created.push(s);
                }
            }
        }
    }
    created
}

/// Connection growth driven by ordered firing among a fixed set of neurons.
#[derive(Clone, Debug, PartialEq)]
pub struct TemporalGrowth {
    pub candidates: BTreeSet<NeuronId>,
    pub delay: u32,
}

/// Drives a network tick by tick with plasticity switched on.
#[derive(Clone, Debug, PartialEq)]
pub struct Learner {
    pub params: PlasticityParams,
    pub history: FiringHistory,
    pub cofire: CofireState,
    pub growth: Option<TemporalGrowth>,
    pub grown_links: Vec<SynapseId>,
}

impl Learner {
    pub fn new(params: PlasticityParams) -> Result<Self> {
        params.validate()?;
        Ok(Self {
            params,
            history: FiringHistory::new(params.window),
            cofire: CofireState::default(),
            growth: None,
            grown_links: Vec::new(),
        })
    }

    /// Forgets recent firing, e.g. between training episodes.
    pub fn rest(&mut self) {
        self.history.clear();
    }

    /// Steps the network, decays short-term traces, then applies growth,
    /// interval plasticity and co-firing plasticity for the new tick.
    pub fn step(&mut self, net: &mut Network, external: &[(NeuronId, f64)]) -> Result<TickReport> {
        let report = net.step(external)?;
        decay_stm(net, self.params.tau_stm);
        self.history.record(&report);
        if let Some(g) = &self.growth {
            let created = grow_temporal_links(net, &self.history, &g.candidates, g.delay);
            self.grown_links.extend(created);
        }
        apply_temporal_plasticity(net, &self.history, &self.params);
        apply_cofire(net, &report.fired, &self.params, &mut self.cofire);
        Ok(report)
    }

    pub fn run(&mut self, net: &mut Network, ticks: u64) -> Result<Vec<TickReport>> {
        (0..ticks).map(|_| self.step(net, &[])).collect()
    }
}
