//! Network data model and the synchronous discrete-time update loop.
//!
//! Time advances in whole ticks. A synapse with delay `d` delivers the
//! presynaptic rate of tick `t - d` at tick `t`. All new rates of a tick are
//! computed from the state before the tick.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::competition::{self, CompetitionParams, InhibitionGroup};
use crate::error::{Error, Result};

/// Dense neuron index, stable for the lifetime of a network.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct NeuronId(pub u32);

impl NeuronId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NeuronId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n{}", self.0)
    }
}

/// Index into [`Network::synapses`].
pub type SynapseId = usize;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NeuronKind {
    Excitatory,
    Inhibitory,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Neuron {
    pub id: NeuronId,
    pub rate: f64,
    pub fired: bool,
    pub kind: NeuronKind,
    /// A silenced neuron never leaves rate 0, whatever its input.
    pub silenced: bool,
}

/// Long-term weight plus a decaying short-term trace.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct DualTraceWeight {
    pub ltm: f64,
    pub stm: f64,
}

impl DualTraceWeight {
    pub fn new(ltm: f64) -> Self {
        Self { ltm, stm: 0.0 }
    }

    #[inline]
    pub fn effective(&self, w_max: f64) -> f64 {
        let w = self.ltm + self.stm;
        if w > w_max {
            w_max
        } else {
            w
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Synapse {
    pub pre: NeuronId,
    pub post: NeuronId,
    pub weight: DualTraceWeight,
    pub delay: u32,
    /// +1 when the presynaptic neuron is excitatory, -1 when inhibitory.
    pub sign: i8,
}

/// Ring buffer of presynaptic rates, one slot per tick of delay.
#[derive(Clone, Debug, PartialEq)]
pub struct DelayLine {
    pub slots: Vec<f64>,
    pub head: usize,
}

impl DelayLine {
    fn new(delay: u32) -> Self {
        Self { slots: vec![0.0; delay as usize], head: 0 }
    }

    #[inline]
    pub fn oldest(&self) -> f64 {
        self.slots[self.head]
    }

    #[inline]
    fn push(&mut self, rate: f64) {
        self.slots[self.head] = rate;
        self.head = (self.head + 1) % self.slots.len();
    }

    fn clear(&mut self) {
        self.slots.iter_mut().for_each(|s| *s = 0.0);
        self.head = 0;
    }
}

/// Constant external drive on one neuron for ticks `start..end`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScheduledInjection {
    pub neuron: NeuronId,
    pub strength: f64,
    pub start: u64,
    pub end: u64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NetParams {
    /// Activation ceiling.
    pub c1: f64,
    /// Activation slope.
    pub c2: f64,
    /// A neuron has fired in a tick iff its rate reaches this value.
    pub f_thr: f64,
    pub w_max: f64,
    pub s_max: f64,
    pub dt: f64,
    pub rng_seed: u64,
}

impl Default for NetParams {
    fn default() -> Self {
        Self { c1: 100.0, c2: 0.02, f_thr: 20.0, w_max: 1.0, s_max: 0.5, dt: 1.0, rng_seed: 0 }
    }
}

impl NetParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |key: &str, reason: &str| {
            Err(Error::InvalidParam { key: key.into(), reason: reason.into() })
        };
        if !(self.c1 > 0.0 && self.c1.is_finite()) {
            return bad("net.c1", "must be positive");
        }
        if !(self.c2 > 0.0 && self.c2.is_finite()) {
            return bad("net.c2", "must be positive");
        }
        if !(self.f_thr > 0.0 && self.f_thr < self.c1) {
            return bad("net.f_thr", "must lie strictly between 0 and c1");
        }
        if !(self.w_max > 0.0 && self.w_max.is_finite()) {
            return bad("net.w_max", "must be positive");
        }
        if !(self.s_max >= 0.0 && self.s_max.is_finite()) {
            return bad("net.s_max", "must be non-negative");
        }
        if self.dt != 1.0 {
            return bad("net.dt", "only unit ticks are supported");
        }
        Ok(())
    }

    /// Smallest summed input that makes a neuron fire: the inverse of the
    /// activation function evaluated at `f_thr`.
    pub fn sigma_threshold(&self) -> f64 {
        -libm::log1p(-self.f_thr / self.c1) / self.c2
    }
}

/// Saturating rate response `c1 * (1 - exp(-c2 * sigma))`.
///
/// Evaluated through `expm1` so small inputs keep full relative precision.
pub fn activation(sigma: f64, params: &NetParams) -> Result<f64> {
    if !(sigma >= 0.0) {
        return Err(Error::NegativeSigma(sigma));
    }
    Ok(activation_unchecked(sigma, params))
}

#[inline]
pub(crate) fn activation_unchecked(sigma: f64, params: &NetParams) -> f64 {
    -params.c1 * libm::expm1(-params.c2 * sigma)
}

/// Result of one tick of [`Network::step`].
#[derive(Clone, Debug, PartialEq)]
pub struct TickReport {
    /// The tick that was processed (the network tick before stepping).
    pub tick: u64,
    pub fired: Vec<NeuronId>,
    /// Floored summed input per neuron.
    pub sigma: Vec<f64>,
    /// Rate per neuron after competition.
    pub rates: Vec<f64>,
    /// Number of incoming synapses delivering nonzero input per neuron.
    pub active_inputs: Vec<u32>,
}

impl TickReport {
    pub fn has_fired(&self, id: NeuronId) -> bool {
        self.fired.binary_search(&id).is_ok()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct WeightEntry {
    pub pre: NeuronId,
    pub post: NeuronId,
    pub ltm: f64,
    pub stm: f64,
    pub delay: u32,
}

/// Immutable copy of the observable state.
#[derive(Clone, Debug, PartialEq)]
pub struct StateSnapshot {
    pub tick: u64,
    pub rates: Vec<f64>,
    pub fired: Vec<bool>,
    pub weights: Vec<WeightEntry>,
}

/// Quantity sampled into a trace row after every tick.
#[derive(Clone, Debug, PartialEq)]
pub enum Probe {
    Rate(NeuronId),
    Sigma(NeuronId),
    /// Effective weight of the first synapse `pre -> post` (0 when absent).
    Weight { pre: NeuronId, post: NeuronId },
}

#[derive(Clone, Debug, PartialEq)]
pub struct TraceRow {
    pub tick: u64,
    pub fired: Vec<NeuronId>,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct Recorder {
    pub probes: Vec<Probe>,
    pub rows: Vec<TraceRow>,
}

#[derive(Clone, Debug)]
pub struct Network {
    params: NetParams,
    neurons: Vec<Neuron>,
    synapses: Vec<Synapse>,
    incoming: Vec<Vec<SynapseId>>,
    outgoing: Vec<Vec<SynapseId>>,
    delay_lines: Vec<DelayLine>,
    schedule: Vec<ScheduledInjection>,
    groups: Vec<InhibitionGroup>,
    competition: CompetitionParams,
    tick: u64,
    rng: ChaCha8Rng,
    recorder: Option<Recorder>,
}

impl PartialEq for Network {
    fn eq(&self, other: &Self) -> bool {
        self.params == other.params
            && self.neurons == other.neurons
            && self.synapses == other.synapses
            && self.delay_lines == other.delay_lines
            && self.schedule == other.schedule
            && self.groups == other.groups
            && self.competition == other.competition
            && self.tick == other.tick
            && self.rng == other.rng
    }
}

impl Network {
    pub fn new(params: NetParams) -> Result<Self> {
        params.validate()?;
        Ok(Self {
            params,
            neurons: Vec::new(),
            synapses: Vec::new(),
            incoming: Vec::new(),
            outgoing: Vec::new(),
            delay_lines: Vec::new(),
            schedule: Vec::new(),
            groups: Vec::new(),
            competition: CompetitionParams::default(),
            tick: 0,
            rng: ChaCha8Rng::seed_from_u64(params.rng_seed),
            recorder: None,
        })
    }

    pub fn params(&self) -> &NetParams {
        &self.params
    }

    /// Replaces the parameters. The random stream is only reseeded when the
    /// seed changes.
    pub fn set_params(&mut self, params: NetParams) -> Result<()> {
        params.validate()?;
        if params.rng_seed != self.params.rng_seed {
            self.rng = ChaCha8Rng::seed_from_u64(params.rng_seed);
        }
        self.params = params;
        Ok(())
    }

    pub fn tick(&self) -> u64 {
        self.tick
    }

    pub fn len(&self) -> usize {
        self.neurons.len()
    }

    pub fn is_empty(&self) -> bool {
        self.neurons.is_empty()
    }

    pub fn neurons(&self) -> &[Neuron] {
        &self.neurons
    }

    pub fn neuron(&self, id: NeuronId) -> Result<&Neuron> {
        self.neurons.get(id.index()).ok_or(Error::UnknownNeuron(id))
    }

    pub fn neuron_ids(&self) -> impl Iterator<Item = NeuronId> + '_ {
        self.neurons.iter().map(|n| n.id)
    }

    pub fn rate(&self, id: NeuronId) -> Result<f64> {
        self.neuron(id).map(|n| n.rate)
    }

    pub fn contains(&self, id: NeuronId) -> bool {
        id.index() < self.neurons.len()
    }

    pub fn check(&self, id: NeuronId) -> Result<()> {
        if self.contains(id) {
            Ok(())
        } else {
            Err(Error::UnknownNeuron(id))
        }
    }

    pub fn synapses(&self) -> &[Synapse] {
        &self.synapses
    }

    pub fn synapse(&self, id: SynapseId) -> Result<&Synapse> {
        self.synapses.get(id).ok_or(Error::UnknownSynapse(id))
    }

    pub fn synapse_mut(&mut self, id: SynapseId) -> Result<&mut Synapse> {
        self.synapses.get_mut(id).ok_or(Error::UnknownSynapse(id))
    }

    pub(crate) fn synapses_mut(&mut self) -> &mut [Synapse] {
        &mut self.synapses
    }

    pub fn delay_lines(&self) -> &[DelayLine] {
        &self.delay_lines
    }

    pub fn incoming(&self, id: NeuronId) -> &[SynapseId] {
        self.incoming.get(id.index()).map_or(&[], |v| v.as_slice())
    }

    pub fn outgoing(&self, id: NeuronId) -> &[SynapseId] {
        self.outgoing.get(id.index()).map_or(&[], |v| v.as_slice())
    }

    /// First synapse `pre -> post`, if any.
    pub fn find_synapse(&self, pre: NeuronId, post: NeuronId) -> Option<SynapseId> {
        self.outgoing(pre).iter().copied().find(|&s| self.synapses[s].post == post)
    }

    pub fn effective_weight(&self, pre: NeuronId, post: NeuronId) -> f64 {
        self.find_synapse(pre, post)
            .map_or(0.0, |s| self.synapses[s].weight.effective(self.params.w_max))
    }

    pub fn add_neuron(&mut self, kind: NeuronKind) -> NeuronId {
        let id = NeuronId(self.neurons.len() as u32);
        self.neurons.push(Neuron { id, rate: 0.0, fired: false, kind, silenced: false });
        self.incoming.push(Vec::new());
        self.outgoing.push(Vec::new());
        id
    }

    pub fn add_neurons(&mut self, count: usize, kind: NeuronKind) -> Vec<NeuronId> {
        (0..count).map(|_| self.add_neuron(kind)).collect()
    }

    pub fn set_silenced(&mut self, id: NeuronId, silenced: bool) -> Result<()> {
        self.check(id)?;
        let n = &mut self.neurons[id.index()];
        n.silenced = silenced;
        if silenced {
            n.rate = 0.0;
            n.fired = false;
        }
        Ok(())
    }

    /// Adds a synapse with long-term weight `ltm` and an empty short-term
    /// trace. The sign follows the presynaptic neuron kind.
    pub fn add_synapse(
        &mut self,
        pre: NeuronId,
        post: NeuronId,
        ltm: f64,
        delay: u32,
    ) -> Result<SynapseId> {
        self.check(pre)?;
        self.check(post)?;
        if delay == 0 {
            return Err(Error::InvalidArgument("synapse delay must be at least 1".into()));
        }
        if !(ltm >= 0.0 && ltm <= self.params.w_max) {
            return Err(Error::InvalidArgument("synapse weight must lie in [0, w_max]".into()));
        }
        let sign = match self.neurons[pre.index()].kind {
            NeuronKind::Excitatory => 1,
            NeuronKind::Inhibitory => -1,
        };
        let id = self.synapses.len();
        self.synapses.push(Synapse { pre, post, weight: DualTraceWeight::new(ltm), delay, sign });
        self.delay_lines.push(DelayLine::new(delay));
        self.incoming[post.index()].push(id);
        self.outgoing[pre.index()].push(id);
        Ok(id)
    }

    /// Returns the first `pre -> post` synapse, creating it when absent.
    pub fn ensure_synapse(
        &mut self,
        pre: NeuronId,
        post: NeuronId,
        ltm: f64,
        delay: u32,
    ) -> Result<(SynapseId, bool)> {
        match self.find_synapse(pre, post) {
            Some(s) => Ok((s, false)),
            None => self.add_synapse(pre, post, ltm, delay).map(|s| (s, true)),
        }
    }

    pub fn set_ltm(&mut self, id: SynapseId, ltm: f64) -> Result<()> {
        let w_max = self.params.w_max;
        let syn = self.synapse_mut(id)?;
        syn.weight.ltm = ltm.clamp(0.0, w_max);
        Ok(())
    }

    pub fn set_stm(&mut self, id: SynapseId, stm: f64) -> Result<()> {
        let s_max = self.params.s_max;
        let syn = self.synapse_mut(id)?;
        syn.weight.stm = stm.clamp(0.0, s_max);
        Ok(())
    }

    pub fn groups(&self) -> &[InhibitionGroup] {
        &self.groups
    }

    pub fn set_groups(&mut self, groups: Vec<InhibitionGroup>) {
        self.groups = groups;
    }

    pub fn competition(&self) -> &CompetitionParams {
        &self.competition
    }

    pub fn set_competition(&mut self, params: CompetitionParams) {
        self.competition = params;
    }

    pub fn rng(&self) -> &ChaCha8Rng {
        &self.rng
    }

    pub fn rng_mut(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    pub fn schedule(&self) -> &[ScheduledInjection] {
        &self.schedule
    }

    /// Schedules a constant drive of `strength` on every neuron of `pattern`
    /// for the next `duration` ticks. Overlapping drives add up.
    pub fn inject_pattern(
        &mut self,
        pattern: &[NeuronId],
        strength: f64,
        duration: u64,
    ) -> Result<()> {
        self.inject_pattern_at(pattern, strength, self.tick, duration)
    }

    /// Like [`Network::inject_pattern`] but starting at an absolute tick.
    pub fn inject_pattern_at(
        &mut self,
        pattern: &[NeuronId],
        strength: f64,
        start: u64,
        duration: u64,
    ) -> Result<()> {
        if !(strength >= 0.0 && strength.is_finite()) {
            return Err(Error::InvalidArgument("injection strength must be >= 0".into()));
        }
        if duration == 0 {
            return Err(Error::InvalidArgument("injection duration must be >= 1".into()));
        }
        for &id in pattern {
            self.check(id)?;
        }
        for &neuron in pattern {
            self.schedule.push(ScheduledInjection {
                neuron,
                strength,
                start,
                end: start + duration,
            });
        }
        Ok(())
    }

    /// Zeroes rates, delay lines and pending injections. Weights and the tick
    /// counter are kept.
    pub fn reset_activity(&mut self) {
        for n in &mut self.neurons {
            n.rate = 0.0;
            n.fired = false;
        }
        self.delay_lines.iter_mut().for_each(DelayLine::clear);
        self.schedule.clear();
    }

    pub fn read_state(&self) -> StateSnapshot {
        StateSnapshot {
            tick: self.tick,
            rates: self.neurons.iter().map(|n| n.rate).collect(),
            fired: self.neurons.iter().map(|n| n.fired).collect(),
            weights: self
                .synapses
                .iter()
                .map(|s| WeightEntry {
                    pre: s.pre,
                    post: s.post,
                    ltm: s.weight.ltm,
                    stm: s.weight.stm,
                    delay: s.delay,
                })
                .collect(),
        }
    }

    pub fn enable_recording(&mut self, probes: Vec<Probe>) {
        self.recorder = Some(Recorder { probes, rows: Vec::new() });
    }

    pub fn recorder(&self) -> Option<&Recorder> {
        self.recorder.as_ref()
    }

    pub fn disable_recording(&mut self) -> Option<Recorder> {
        self.recorder.take()
    }

    /// Removes and returns the trace rows recorded so far.
    pub fn drain_trace(&mut self) -> Vec<TraceRow> {
        self.recorder.as_mut().map(|r| core::mem::take(&mut r.rows)).unwrap_or_default()
    }

    /// Advances the network by one tick with the given external drive added
    /// on top of any scheduled injections. Repeated ids add up.
    pub fn step(&mut self, external: &[(NeuronId, f64)]) -> Result<TickReport> {
        let order: Vec<usize> = (0..self.neurons.len()).collect();
        self.step_in_order(external, &order)
    }

    /// Same as [`Network::step`], visiting neurons in `order` while gathering
    /// inputs. The result does not depend on `order`.
    #[doc(hidden)]
    pub fn step_in_order(
        &mut self,
        external: &[(NeuronId, f64)],
        order: &[usize],
    ) -> Result<TickReport> {
        let n = self.neurons.len();
        let mut drive = vec![0.0; n];
        for &(id, value) in external {
            self.check(id)?;
            if !(value >= 0.0 && value.is_finite()) {
                return Err(Error::InvalidInjection { neuron: id, value });
            }
            drive[id.index()] += value;
        }
        let now = self.tick;
        for inj in &self.schedule {
            if inj.start <= now && now < inj.end {
                drive[inj.neuron.index()] += inj.strength;
            }
        }

        let w_max = self.params.w_max;
        let mut sigma = vec![0.0; n];
        let mut active = vec![0u32; n];
        for &i in order {
            let mut acc = 0.0;
            let mut count = 0;
            for &s in &self.incoming[i] {
                let syn = &self.synapses[s];
                let pre_rate = self.delay_lines[s].oldest();
                if pre_rate != 0.0 {
                    count += 1;
                }
                acc += f64::from(syn.sign) * syn.weight.effective(w_max) * pre_rate;
            }
            acc += drive[i];
            sigma[i] = if acc > 0.0 { acc } else { 0.0 };
            active[i] = count;
        }

        let mut rates: Vec<f64> = sigma
            .iter()
            .zip(&self.neurons)
            .map(|(&s, neuron)| if neuron.silenced { 0.0 } else { activation_unchecked(s, &self.params) })
            .collect();
        competition::apply_groups(
            &self.groups,
            &self.competition,
            &self.params,
            &sigma,
            &active,
            &mut rates,
        );

        let f_thr = self.params.f_thr;
        let mut fired = Vec::new();
        for (neuron, &rate) in self.neurons.iter_mut().zip(&rates) {
            neuron.rate = rate;
            neuron.fired = rate >= f_thr;
            if neuron.fired {
                fired.push(neuron.id);
            }
        }
        for (syn, line) in self.synapses.iter().zip(self.delay_lines.iter_mut()) {
            line.push(rates[syn.pre.index()]);
        }
        self.tick += 1;
        let tick = self.tick;
        self.schedule.retain(|inj| inj.end > tick);

        let report = TickReport { tick: now, fired, sigma, rates, active_inputs: active };
        if let Some(rec) = self.recorder.as_ref() {
            let values = rec.probes.iter().map(|p| self.probe_value(p, &report)).collect();
            let row = TraceRow { tick: now, fired: report.fired.clone(), values };
            self.recorder.as_mut().unwrap().rows.push(row);
        }
        Ok(report)
    }

    fn probe_value(&self, probe: &Probe, report: &TickReport) -> f64 {
        match *probe {
            Probe::Rate(id) => report.rates.get(id.index()).copied().unwrap_or(0.0),
            Probe::Sigma(id) => report.sigma.get(id.index()).copied().unwrap_or(0.0),
            Probe::Weight { pre, post } => self.effective_weight(pre, post),
        }
    }

    /// Runs `ticks` steps without external drive beyond the schedule.
    pub fn run(&mut self, ticks: u64) -> Result<Vec<TickReport>> {
        (0..ticks).map(|_| self.step(&[])).collect()
    }

    /// FNV-1a hash over the edge set (endpoints, delay, sign and weight bits)
    /// in insertion order.
    pub fn edge_hash(&self) -> u64 {
        use core::hash::Hasher;
        let mut h = fnv::FnvHasher::default();
        h.write_u64(self.neurons.len() as u64);
        for s in &self.synapses {
            h.write_u32(s.pre.0);
            h.write_u32(s.post.0);
            h.write_u32(s.delay);
            h.write_i8(s.sign);
            h.write_u64(s.weight.ltm.to_bits());
            h.write_u64(s.weight.stm.to_bits());
        }
        h.finish()
    }

    /// Rebuilds a network from raw parts, typically a decoded snapshot.
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        params: NetParams,
        neurons: Vec<Neuron>,
        synapses: Vec<Synapse>,
        delay_lines: Vec<DelayLine>,
        schedule: Vec<ScheduledInjection>,
        groups: Vec<InhibitionGroup>,
        competition: CompetitionParams,
        tick: u64,
        rng: ChaCha8Rng,
    ) -> Result<Self> {
        params.validate()?;
        let n = neurons.len();
        for (i, neuron) in neurons.iter().enumerate() {
            if neuron.id.index() != i {
                return Err(Error::InvalidArgument("neuron ids must be dense".into()));
            }
        }
        if synapses.len() != delay_lines.len() {
            return Err(Error::InvalidArgument("one delay line per synapse".into()));
        }
        let mut incoming = vec![Vec::new(); n];
        let mut outgoing = vec![Vec::new(); n];
        for (i, (s, line)) in synapses.iter().zip(&delay_lines).enumerate() {
            if s.pre.index() >= n || s.post.index() >= n {
                return Err(Error::UnknownSynapse(i));
            }
            if s.delay == 0 || line.slots.len() != s.delay as usize || line.head >= line.slots.len()
            {
                return Err(Error::InvalidArgument("delay line does not match synapse".into()));
            }
            incoming[s.post.index()].push(i);
            outgoing[s.pre.index()].push(i);
        }
        for inj in &schedule {
            if inj.neuron.index() >= n {
                return Err(Error::UnknownNeuron(inj.neuron));
            }
        }
        for g in &groups {
            if let Some(&m) = g.members.iter().find(|m| m.index() >= n) {
                return Err(Error::UnknownNeuron(m));
            }
        }
        Ok(Self {
            params,
            neurons,
            synapses,
            incoming,
            outgoing,
            delay_lines,
            schedule,
            groups,
            competition,
            tick,
            rng,
            recorder: None,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> NetParams {
        NetParams::default()
    }

    #[test]
    fn activation_zero_and_asymptote() {
        let p = params();
        assert_eq!(activation(0.0, &p).unwrap(), 0.0);
        let far = activation(1e6, &p).unwrap();
        assert!((100.0 - far).abs() <= 1e-6);
        assert!(far <= p.c1);
    }

    #[test]
    fn activation_unit_constants() {
        let p = NetParams { c1: 1.0, c2: 1.0, f_thr: 0.5, ..params() };
        // 1 - e^-1 to 20 digits: 0.63212055882855767840
        let v = activation(1.0, &p).unwrap();
        assert!((v - 0.632_120_558_828_557_7).abs() < 1e-15);
    }

    #[test]
    fn activation_rejects_negative_and_nan() {
        let p = params();
        assert!(matches!(activation(-1e-9, &p), Err(Error::NegativeSigma(_))));
        assert!(activation(f64::NAN, &p).is_err());
    }

    #[test]
    fn sigma_threshold_inverts_activation() {
        let p = params();
        let s = p.sigma_threshold();
        assert!((activation(s, &p).unwrap() - p.f_thr).abs() < 1e-12);
    }

    #[test]
    fn empty_network_step_advances_tick() {
        let mut net = Network::new(params()).unwrap();
        let r = net.step(&[]).unwrap();
        assert!(r.fired.is_empty());
        assert_eq!(r.tick, 0);
        assert_eq!(net.tick(), 1);
    }

    #[test]
    fn single_neuron_fires_under_strong_drive() {
        let mut net = Network::new(params()).unwrap();
        let a = net.add_neuron(NeuronKind::Excitatory);
        let r = net.step(&[(a, 50.0)]).unwrap();
        assert!(r.has_fired(a));
        assert!(net.neuron(a).unwrap().fired);
    }

    #[test]
    fn delay_two_chain_reaches_post_at_tick_two() {
        let mut net = Network::new(params()).unwrap();
        let a = net.add_neuron(NeuronKind::Excitatory);
        let b = net.add_neuron(NeuronKind::Excitatory);
        net.add_synapse(a, b, 0.5, 2).unwrap();
        // Two-slot ring: tick 0 reads slot 0 and writes r0 there, tick 1
        // reads slot 1 (still 0), tick 2 reads slot 0 again and sees r0.
        let r0 = net.step(&[(a, 100.0)]).unwrap();
        assert_eq!(r0.sigma[b.index()], 0.0);
        let r1 = net.step(&[]).unwrap();
        assert_eq!(r1.sigma[b.index()], 0.0);
        let r2 = net.step(&[]).unwrap();
        let expected = 0.5 * r0.rates[a.index()];
        assert_eq!(r2.sigma[b.index()], expected);
    }

    #[test]
    fn step_rejects_bad_external() {
        let mut net = Network::new(params()).unwrap();
        let a = net.add_neuron(NeuronKind::Excitatory);
        assert!(matches!(net.step(&[(NeuronId(7), 1.0)]), Err(Error::UnknownNeuron(_))));
        assert!(matches!(net.step(&[(a, -1.0)]), Err(Error::InvalidInjection { .. })));
        assert!(matches!(net.step(&[(a, f64::NAN)]), Err(Error::InvalidInjection { .. })));
        assert_eq!(net.tick(), 0);
    }

    #[test]
    fn inhibition_floors_sigma_at_zero() {
        let mut net = Network::new(params()).unwrap();
        let i = net.add_neuron(NeuronKind::Inhibitory);
        let b = net.add_neuron(NeuronKind::Excitatory);
        net.add_synapse(i, b, 1.0, 1).unwrap();
        net.step(&[(i, 100.0)]).unwrap();
        let r = net.step(&[(b, 5.0)]).unwrap();
        assert_eq!(r.sigma[b.index()], 0.0);
        assert_eq!(r.rates[b.index()], 0.0);
    }

    #[test]
    fn inject_empty_pattern_changes_nothing() {
        let mut a = Network::new(params()).unwrap();
        a.add_neurons(3, NeuronKind::Excitatory);
        let mut b = a.clone();
        a.inject_pattern(&[], 10.0, 5).unwrap();
        for _ in 0..6 {
            assert_eq!(a.step(&[]).unwrap(), b.step(&[]).unwrap());
        }
    }

    #[test]
    fn inject_single_tick_adds_exact_strength() {
        let mut net = Network::new(params()).unwrap();
        let a = net.add_neuron(NeuronKind::Excitatory);
        net.inject_pattern(&[a], 7.25, 1).unwrap();
        let r = net.step(&[]).unwrap();
        assert_eq!(r.sigma[a.index()], 7.25);
        let r = net.step(&[]).unwrap();
        assert_eq!(r.sigma[a.index()], 0.0);
    }

    #[test]
    fn overlapping_injections_add() {
        let build = || {
            let mut net = Network::new(params()).unwrap();
            let a = net.add_neuron(NeuronKind::Excitatory);
            (net, a)
        };
        let (mut both, a) = build();
        both.inject_pattern(&[a], 3.0, 4).unwrap();
        both.inject_pattern_at(&[a], 5.0, 2, 4).unwrap();
        let (mut first, _) = build();
        first.inject_pattern(&[a], 3.0, 4).unwrap();
        let (mut second, _) = build();
        second.inject_pattern_at(&[a], 5.0, 2, 4).unwrap();
        for _ in 0..7 {
            let s = both.step(&[]).unwrap().sigma[0];
            let s1 = first.step(&[]).unwrap().sigma[0];
            let s2 = second.step(&[]).unwrap().sigma[0];
            assert_eq!(s, s1 + s2);
        }
    }

    #[test]
    fn inject_validates() {
        let mut net = Network::new(params()).unwrap();
        let a = net.add_neuron(NeuronKind::Excitatory);
        assert!(net.inject_pattern(&[a], -1.0, 1).is_err());
        assert!(net.inject_pattern(&[a], 1.0, 0).is_err());
        assert!(net.inject_pattern(&[NeuronId(3)], 1.0, 1).is_err());
    }

    #[test]
    fn read_state_is_a_value() {
        let mut net = Network::new(params()).unwrap();
        let a = net.add_neuron(NeuronKind::Excitatory);
        let fresh = net.read_state();
        assert_eq!(fresh.tick, 0);
        assert!(fresh.rates.iter().all(|&r| r == 0.0));
        let before = net.read_state();
        net.step(&[(a, 40.0)]).unwrap();
        let after = net.read_state();
        assert_eq!(after.tick, net.tick());
        assert_eq!(before, fresh);
        assert_ne!(after.rates, before.rates);
    }

    #[test]
    fn silenced_neuron_never_fires() {
        let mut net = Network::new(params()).unwrap();
        let z = net.add_neuron(NeuronKind::Excitatory);
        net.set_silenced(z, true).unwrap();
        let r = net.step(&[(z, 1e4)]).unwrap();
        assert!(!r.has_fired(z));
        assert!(r.sigma[z.index()] > 0.0);
    }

    #[test]
    fn synapse_validation() {
        let mut net = Network::new(params()).unwrap();
        let a = net.add_neuron(NeuronKind::Excitatory);
        assert!(net.add_synapse(a, a, 0.5, 0).is_err());
        assert!(net.add_synapse(a, a, 1.5, 1).is_err());
        assert!(net.add_synapse(a, NeuronId(9), 0.5, 1).is_err());
    }

    #[test]
    fn recorder_collects_rows() {
        let mut net = Network::new(params()).unwrap();
        let a = net.add_neuron(NeuronKind::Excitatory);
        net.enable_recording(alloc::vec![Probe::Rate(a), Probe::Sigma(a)]);
        net.step(&[(a, 30.0)]).unwrap();
        net.step(&[]).unwrap();
        let rows = net.drain_trace();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].values[1], 30.0);
        assert_eq!(rows[0].fired, alloc::vec![a]);
        assert!(net.drain_trace().is_empty());
    }
}
