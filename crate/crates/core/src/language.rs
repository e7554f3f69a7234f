//! Grounded lexicon and sentence patterns.
//!
//! Each word is one neuron. Feature neurons ground words through ordinary
//! excitatory synapses, many features to one word. Words that share features
//! end up in the same inhibition group, and a learned sentence position whose
//! word has such rivals becomes an open slot filled by competition.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use crate::competition::{build_groups, resolve_wta, InhibitionGroup};
use crate::error::{Error, Result};
use crate::network::{activation_unchecked, Network, NeuronId, NeuronKind};
use crate::plasticity::Learner;
use crate::sequence::{train_sequence, SequenceSpec};

/// Emitted for an open slot that no candidate could fill.
pub const UNKNOWN: &str = "UNKNOWN";

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LanguageParams {
    pub ground_weight: f64,
    pub gap: u32,
    pub repetitions: u32,
    pub strength: f64,
    /// Shared feature count that makes two words rivals.
    pub overlap_threshold: usize,
    /// Slot priming as a fraction of the input needed to fire.
    pub priming: f64,
}

impl Default for LanguageParams {
    fn default() -> Self {
        Self {
            ground_weight: 0.3,
            gap: 2,
            repetitions: 30,
            strength: 100.0,
            overlap_threshold: 1,
            priming: 0.5,
        }
    }
}

impl LanguageParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |key: &'static str, reason: &str| Err(Error::InvalidParam { key: key.into(), reason: reason.into() });
        if !(self.ground_weight > 0.0) {
            return bad("lang.ground_weight", "must be > 0");
        }
        if self.gap == 0 || self.repetitions == 0 {
            return bad("lang.gap", "gap and repetitions must be >= 1");
        }
        if !(self.strength > 0.0 && self.strength.is_finite()) {
            return bad("lang.strength", "must be > 0");
        }
        if self.overlap_threshold == 0 {
            return bad("lang.overlap_threshold", "must be >= 1");
        }
        if !(self.priming > 0.0 && self.priming < 1.0) {
            return bad("lang.priming", "must be in (0, 1)");
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Word {
    pub text: String,
    pub neuron: NeuronId,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Lexicon {
    words: Vec<Word>,
    by_text: BTreeMap<String, usize>,
    /// word neuron -> grounding feature neurons
    grounding: BTreeMap<NeuronId, BTreeSet<NeuronId>>,
}

impl Lexicon {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_word(&mut self, net: &mut Network, text: &str) -> Result<Word> {
        if text.is_empty() {
            return Err(Error::EmptyWord);
        }
        if self.by_text.contains_key(text) {
            return Err(Error::DuplicateWord(text.into()));
        }
        let neuron = net.add_neuron(NeuronKind::Excitatory);
        self.insert(Word { text: text.into(), neuron })
    }

    /// Registers a word on an existing neuron.
    pub fn insert(&mut self, word: Word) -> Result<Word> {
        if word.text.is_empty() {
            return Err(Error::EmptyWord);
        }
        if self.by_text.contains_key(&word.text) {
            return Err(Error::DuplicateWord(word.text));
        }
        self.by_text.insert(word.text.clone(), self.words.len());
        self.words.push(word.clone());
        Ok(word)
    }

    pub fn get(&self, text: &str) -> Result<&Word> {
        self.by_text.get(text).map(|&i| &self.words[i]).ok_or_else(|| Error::UnknownWord(text.into()))
    }

    pub fn by_neuron(&self, id: NeuronId) -> Option<&Word> {
        self.words.iter().find(|w| w.neuron == id)
    }

    pub fn words(&self) -> &[Word] {
        &self.words
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn grounding(&self) -> &BTreeMap<NeuronId, BTreeSet<NeuronId>> {
        &self.grounding
    }

    /// Records a grounding edge that already exists in the network.
    pub fn restore_grounding(&mut self, word: NeuronId, feature: NeuronId) {
        self.grounding.entry(word).or_default().insert(feature);
    }

    pub fn features_of(&self, word: &Word) -> impl Iterator<Item = NeuronId> + '_ {
        self.grounding.get(&word.neuron).into_iter().flatten().copied()
    }

    /// Connects each feature to the word with delay 1. Existing edges keep the
    /// larger of their current and the requested long-term weight.
    pub fn ground_word(
        &mut self,
        net: &mut Network,
        word: &Word,
        features: &[NeuronId],
        weight: f64,
    ) -> Result<()> {
        if features.is_empty() {
            return Err(Error::InvalidArgument("grounding needs at least one feature".into()));
        }
        let w_max = net.params().w_max;
        if !(weight > 0.0 && weight <= w_max) {
            return Err(Error::InvalidArgument(alloc::format!("grounding weight {weight} outside (0, {w_max}]")));
        }
        net.check(word.neuron)?;
        features.iter().try_for_each(|&f| net.check(f))?;
        if self.get(&word.text)?.neuron != word.neuron {
            return Err(Error::UnknownWord(word.text.clone()));
        }
        for &f in features {
            let (s, _) = net.ensure_synapse(f, word.neuron, 0.0, 1)?;
            let ltm = net.synapses()[s].weight.ltm.max(weight).min(w_max);
            net.set_ltm(s, ltm)?;
            self.grounding.entry(word.neuron).or_default().insert(f);
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Slot {
    Fixed(NeuronId),
    Open(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct SentencePattern {
    pub slots: Vec<Slot>,
    /// Indexed by open slot id.
    pub pools: Vec<InhibitionGroup>,
    /// Word sequence the pattern was learned from.
    pub source: Vec<NeuronId>,
    pub gap: u32,
}

impl SentencePattern {
    pub fn open_slots(&self) -> usize {
        self.pools.len()
    }
}

/// Trains the word chain and marks rival-bearing positions as open slots.
///
/// An open slot is wired so that the preceding word primes every candidate
/// equally and below threshold, and every candidate drives the following
/// word like the learned word does. Only grounding input can then decide the
/// slot.
pub fn learn_sentence(
    net: &mut Network,
    lexicon: &Lexicon,
    learner: &mut Learner,
    words: &[&str],
    params: &LanguageParams,
) -> Result<SentencePattern> {
    params.validate()?;
    if words.is_empty() {
        return Err(Error::InvalidArgument("sentence must have at least one word".into()));
    }
    let source: Vec<NeuronId> = words.iter().map(|w| lexicon.get(w).map(|w| w.neuron)).collect::<Result<_>>()?;
    let spec = SequenceSpec {
        items: source.clone(),
        gap: params.gap,
        strength: params.strength,
        repetitions: params.repetitions,
    };
    train_sequence(net, learner, &spec)?;

    let c = *net.competition();
    let groups = build_groups(net, params.overlap_threshold, c.inhibition_strength)?;
    let priming = params.priming * net.params().sigma_threshold() / net.params().c1;
    let mut slots = Vec::with_capacity(source.len());
    let mut pools: Vec<InhibitionGroup> = Vec::new();
    for (i, &w) in source.iter().enumerate() {
        let pool = groups.iter().find(|g| g.contains(w) && g.members.len() >= 2);
        let Some(pool) = pool else {
            slots.push(Slot::Fixed(w));
            continue;
        };
        if i > 0 {
            let prev = source[i - 1];
            for &m in &pool.members {
                let (s, _) = net.ensure_synapse(prev, m, 0.0, params.gap)?;
                net.set_ltm(s, priming)?;
                net.set_stm(s, 0.0)?;
            }
        }
        if let Some(&next) = source.get(i + 1) {
            let w_next = net.find_synapse(w, next).map(|s| net.synapses()[s].weight.ltm).unwrap_or(0.0);
            for &m in pool.members.iter().filter(|&&m| m != w) {
                let (s, _) = net.ensure_synapse(m, next, 0.0, params.gap)?;
                let ltm = net.synapses()[s].weight.ltm.max(w_next);
                net.set_ltm(s, ltm)?;
            }
        }
        let id = match pools.iter().position(|p| p == pool) {
            Some(id) => id,
            None => {
                pools.push(pool.clone());
                pools.len() - 1
            }
        };
        slots.push(Slot::Open(id));
    }

    let mut active = net.groups().to_vec();
    for p in &pools {
        if !active.contains(p) {
            active.push(p.clone());
        }
    }
    net.set_groups(active);
    Ok(SentencePattern { slots, pools, source, gap: params.gap })
}

/// Plays the pattern with the given features active for the whole episode.
///
/// Fixed positions emit their word. An open slot is read when its priming
/// arrives: the pool member with the largest input wins if it reaches the
/// firing threshold, otherwise [`UNKNOWN`] is emitted.
pub fn generate_sentence(
    net: &mut Network,
    lexicon: &Lexicon,
    pattern: &SentencePattern,
    context: &[NeuronId],
    params: &LanguageParams,
) -> Result<Vec<String>> {
    if pattern.slots.is_empty() {
        return Err(Error::InvalidArgument("empty sentence pattern".into()));
    }
    context.iter().try_for_each(|&f| net.check(f))?;
    let mut onset = Vec::with_capacity(pattern.slots.len());
    let mut t = 0u64;
    for i in 0..pattern.slots.len() {
        if i > 0 {
            let d = net
                .find_synapse(pattern.source[i - 1], pattern.source[i])
                .map(|s| net.synapses()[s].delay)
                .unwrap_or(pattern.gap);
            t += u64::from(d);
        }
        onset.push(t);
    }
    let horizon = t + 1;

    net.reset_activity();
    let ctx: Vec<(NeuronId, f64)> = context.iter().map(|&f| (f, params.strength)).collect();
    let head = match pattern.slots[0] {
        Slot::Fixed(w) => alloc::vec![w],
        Slot::Open(p) => pattern.pools[p].members.clone(),
    };
    let mut out: Vec<String> = Vec::with_capacity(pattern.slots.len());
    let mut reports = Vec::with_capacity(horizon as usize);
    for tick in 0..horizon {
        let mut ext = ctx.clone();
        if tick == 0 && matches!(pattern.slots[0], Slot::Fixed(_)) {
            ext.extend(head.iter().map(|&w| (w, params.strength)));
        }
        reports.push(net.step(&ext)?);
    }
    net.reset_activity();

    for (i, slot) in pattern.slots.iter().enumerate() {
        match *slot {
            Slot::Fixed(w) => out.push(text_of(lexicon, w)?),
            Slot::Open(p) => {
                let pool = &pattern.pools[p];
                let report = &reports[onset[i] as usize];
                let sigma: BTreeMap<NeuronId, f64> =
                    pool.members.iter().map(|&m| (m, report.sigma[m.index()])).collect();
                let c = net.competition();
                let win = resolve_wta(pool, &sigma, c.tie_break, net.params())?;
                let fires = activation_unchecked(win.winner_sigma, net.params()) >= net.params().f_thr;
                out.push(if fires { text_of(lexicon, win.winner)? } else { UNKNOWN.into() });
            }
        }
    }
    Ok(out)
}

fn text_of(lexicon: &Lexicon, id: NeuronId) -> Result<String> {
    lexicon.by_neuron(id).map(|w| w.text.clone()).ok_or(Error::UnknownNeuron(id))
}
