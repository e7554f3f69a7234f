//! Sequence coding through delayed synapses and interval plasticity.
//!
//! A trained chain fires item by item from a single cue. Object circuits
//! associate several views of one thing so that any view retrieves the rest;
//! the same competition decides association (few clues) and recognition (many
//! clues).

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;

use crate::competition::{resolve_wta, InhibitionGroup, TieBreak};
use crate::error::{Error, Result};
use crate::network::{activation_unchecked, Network, NeuronId, SynapseId};
use crate::plasticity::{consolidate, Learner};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SequenceParams {
    /// Injected rate for cues and presented items.
    pub strength: f64,
    /// Default onset gap between items (ticks).
    pub gap: u32,
    /// Default number of presentations.
    pub repetitions: u32,
    /// Clue count from which a retrieval is labelled recognition.
    pub assoc_cutoff: usize,
}

impl Default for SequenceParams {
    fn default() -> Self {
        Self { strength: 100.0, gap: 2, repetitions: 30, assoc_cutoff: 3 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SequenceSpec {
    pub items: Vec<NeuronId>,
    pub gap: u32,
    pub strength: f64,
    pub repetitions: u32,
}

impl SequenceSpec {
    pub fn new(items: Vec<NeuronId>, params: &SequenceParams) -> Self {
        Self { items, gap: params.gap, strength: params.strength, repetitions: params.repetitions }
    }

    pub fn validate(&self, net: &Network) -> Result<()> {
        if self.items.is_empty() {
            return Err(Error::InvalidArgument("sequence must have at least one item".into()));
        }
        if self.gap == 0 {
            return Err(Error::InvalidArgument("sequence gap must be >= 1".into()));
        }
        if self.repetitions == 0 {
            return Err(Error::InvalidArgument("sequence repetitions must be >= 1".into()));
        }
        if !(self.strength >= 0.0 && self.strength.is_finite()) {
            return Err(Error::InvalidArgument("sequence strength must be >= 0".into()));
        }
        self.items.iter().try_for_each(|&id| net.check(id))
    }
}

/// Forward and backward effective weight of one consecutive pair, sampled
/// after every repetition.
#[derive(Clone, Debug, PartialEq)]
pub struct PairTrajectory {
    pub pre: NeuronId,
    pub post: NeuronId,
    pub forward: Vec<f64>,
    pub backward: Vec<f64>,
}

impl PairTrajectory {
    pub fn margins(&self) -> impl Iterator<Item = f64> + '_ {
        self.forward.iter().zip(&self.backward).map(|(f, b)| f - b)
    }

    pub fn final_margin(&self) -> f64 {
        self.margins().last().unwrap_or(0.0)
    }
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct TrainingReport {
    pub pairs: Vec<PairTrajectory>,
    pub created: Vec<SynapseId>,
}

fn consecutive_pairs(items: &[NeuronId]) -> Vec<(NeuronId, NeuronId)> {
    let mut pairs: Vec<(NeuronId, NeuronId)> = Vec::new();
    for w in items.windows(2) {
        if w[0] != w[1] && !pairs.contains(&(w[0], w[1])) {
            pairs.push((w[0], w[1]));
        }
    }
    pairs
}

/// Presents the items once as timed pulses and lets plasticity run until the
/// window has passed, then consolidates.
fn present(
    net: &mut Network,
    learner: &mut Learner,
    items: &[NeuronId],
    gap: u32,
    strength: f64,
) -> Result<()> {
    net.reset_activity();
    learner.rest();
    let start = net.tick();
    for (i, &item) in items.iter().enumerate() {
        net.inject_pattern_at(&[item], strength, start + i as u64 * u64::from(gap), 1)?;
    }
    let span = (items.len() as u64 - 1) * u64::from(gap) + 1 + learner.params.window;
    learner.run(net, span)?;
    net.reset_activity();
    consolidate(net, learner.params.consolidate_rate)
}

/// Trains a temporal chain. Missing links between consecutive items are grown
/// with zero weight and a delay equal to the gap.
pub fn train_sequence(
    net: &mut Network,
    learner: &mut Learner,
    spec: &SequenceSpec,
) -> Result<TrainingReport> {
    spec.validate(net)?;
    let pairs = consecutive_pairs(&spec.items);
    let mut report = TrainingReport::default();
    if pairs.is_empty() {
        return Ok(report);
    }
    for &(pre, post) in &pairs {
        let (s, created) = net.ensure_synapse(pre, post, 0.0, spec.gap)?;
        if created {
            report.created.push(s);
        }
    }
    report.pairs = pairs
        .iter()
        .map(|&(pre, post)| PairTrajectory { pre, post, forward: Vec::new(), backward: Vec::new() })
        .collect();
    for _ in 0..spec.repetitions {
        present(net, learner, &spec.items, spec.gap, spec.strength)?;
        for traj in &mut report.pairs {
            traj.forward.push(net.effective_weight(traj.pre, traj.post));
            traj.backward.push(net.effective_weight(traj.post, traj.pre));
        }
    }
    Ok(report)
}

fn max_delay(net: &Network) -> u64 {
    net.synapses().iter().map(|s| u64::from(s.delay)).max().unwrap_or(1)
}

/// Cues one neuron with a single pulse and returns neurons in order of their
/// first firing over `max_len` times the longest synaptic delay, truncated to
/// `max_len` entries. An empty list means the cue itself never fired.
pub fn recall_sequence(
    net: &mut Network,
    cue: NeuronId,
    max_len: usize,
    params: &SequenceParams,
) -> Result<Vec<NeuronId>> {
    net.check(cue)?;
    net.reset_activity();
    let horizon = max_len as u64 * max_delay(net) + 1;
    let mut first: BTreeMap<NeuronId, u64> = BTreeMap::new();
    for t in 0..horizon {
        let ext: &[(NeuronId, f64)] = if t == 0 { &[(cue, params.strength)] } else { &[] };
        let report = net.step(ext)?;
        for &id in &report.fired {
            first.entry(id).or_insert(t);
        }
    }
    net.reset_activity();
    if !first.contains_key(&cue) {
        return Ok(Vec::new());
    }
    let mut order: Vec<(u64, NeuronId)> = first.into_iter().map(|(id, t)| (t, id)).collect();
    order.sort_unstable();
    Ok(order.into_iter().take(max_len).map(|(_, id)| id).collect())
}

#[derive(Clone, Debug, PartialEq)]
pub struct ObjectCircuit {
    pub views: Vec<NeuronId>,
    /// View with the strongest outgoing long-term weight within the circuit.
    pub anchor: NeuronId,
    pub ring: Vec<SynapseId>,
}

impl ObjectCircuit {
    pub fn outgoing_ltm(&self, net: &Network, view: NeuronId) -> f64 {
        self.ring
            .iter()
            .map(|&s| &net.synapses()[s])
            .filter(|s| s.pre == view)
            .map(|s| s.weight.ltm)
            .sum()
    }
}

/// Associates views of one object by presenting successive views pairwise,
/// `repetitions` times over the whole presentation order.
///
/// The anchor is the view with the largest summed outgoing long-term weight;
/// ties go to the more frequently presented view, then to the earlier one.
pub fn encode_object(
    net: &mut Network,
    learner: &mut Learner,
    views: &[NeuronId],
    presentation_order: &[NeuronId],
    gap: u32,
    repetitions: u32,
    strength: f64,
) -> Result<ObjectCircuit> {
    let view_set: BTreeSet<NeuronId> = views.iter().copied().collect();
    if view_set.len() < 2 {
        return Err(Error::InvalidArgument("an object needs at least two views".into()));
    }
    view_set.iter().try_for_each(|&v| net.check(v))?;
    if gap == 0 || repetitions == 0 {
        return Err(Error::InvalidArgument("gap and repetitions must be >= 1".into()));
    }
    let order: Vec<NeuronId> =
        if presentation_order.is_empty() { views.to_vec() } else { presentation_order.to_vec() };
    if let Some(&v) = order.iter().find(|v| !view_set.contains(v)) {
        return Err(Error::InvalidArgument(alloc::format!("{v} is not a view of this object")));
    }

    let pairs = consecutive_pairs(&order);
    for &(p, q) in &pairs {
        net.ensure_synapse(p, q, 0.0, gap)?;
    }
    for _ in 0..repetitions {
        for w in order.windows(2).filter(|w| w[0] != w[1]) {
            present(net, learner, w, gap, strength)?;
        }
    }

    let ring: Vec<SynapseId> = (0..net.synapses().len())
        .filter(|&s| {
            let syn = &net.synapses()[s];
            view_set.contains(&syn.pre) && view_set.contains(&syn.post)
        })
        .collect();
    let mut circuit = ObjectCircuit { views: view_set.iter().copied().collect(), anchor: order[0], ring };
    let frequency = |v: NeuronId| order.iter().filter(|&&x| x == v).count();
    let first_seen = |v: NeuronId| order.iter().position(|&x| x == v).unwrap_or(usize::MAX);
    let mut best = order[0];
    for &v in &circuit.views {
        let (wv, wb) = (circuit.outgoing_ltm(net, v), circuit.outgoing_ltm(net, best));
        let better = if (wv - wb).abs() > 1e-12 {
            wv > wb
        } else {
            (frequency(v), core::cmp::Reverse(first_seen(v)))
                > (frequency(best), core::cmp::Reverse(first_seen(best)))
        };
        if better {
            best = v;
        }
    }
    circuit.anchor = best;
    Ok(circuit)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RetrievalMode {
    Association,
    Recognition,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Recognition {
    pub winner: NeuronId,
    pub mode: RetrievalMode,
    /// Peak summed input of the winner during the episode.
    pub sigma: f64,
    pub fired: bool,
}

/// Drives all clues and lets the target pool compete on peak input.
///
/// The mechanism does not depend on the number of clues; only the reported
/// mode does.
pub fn recognize(
    net: &mut Network,
    clues: &[NeuronId],
    target_pool: &[NeuronId],
    params: &SequenceParams,
) -> Result<Recognition> {
    if target_pool.is_empty() {
        return Err(Error::EmptyGroup);
    }
    clues.iter().chain(target_pool).try_for_each(|&id| net.check(id))?;
    net.reset_activity();
    let horizon = max_delay(net) + 1;
    let ext: Vec<(NeuronId, f64)> = clues.iter().map(|&c| (c, params.strength)).collect();
    let mut peak: BTreeMap<NeuronId, f64> = target_pool.iter().map(|&t| (t, 0.0)).collect();
    for _ in 0..horizon {
        let report = net.step(&ext)?;
        for (id, p) in peak.iter_mut() {
            *p = p.max(report.sigma[id.index()]);
        }
    }
    net.reset_activity();
    let group = InhibitionGroup::new(target_pool.to_vec(), 1, 0.0);
    let outcome = resolve_wta(&group, &peak, TieBreak::LowestId, net.params())?;
    let distinct: BTreeSet<NeuronId> = clues.iter().copied().collect();
    Ok(Recognition {
        winner: outcome.winner,
        mode: if distinct.len() < params.assoc_cutoff {
            RetrievalMode::Association
        } else {
            RetrievalMode::Recognition
        },
        sigma: outcome.winner_sigma,
        fired: activation_unchecked(outcome.winner_sigma, net.params()) >= net.params().f_thr,
    })
}
