//! Lateral inhibition between neurons that share common inputs.
//!
//! Groups are built from the static graph and resolved every tick by
//! winner-take-all. Hard mode zeroes every loser; soft mode subtracts a fixed
//! penalty per active rival from each member's input and re-activates.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::network::{activation_unchecked, NetParams, Network, NeuronId};

#[derive(Clone, Debug, PartialEq)]
pub struct InhibitionGroup {
    /// Sorted, at least two members.
    pub members: Vec<NeuronId>,
    pub overlap_threshold: usize,
    pub inhibition_strength: f64,
}

impl InhibitionGroup {
    pub fn new(members: Vec<NeuronId>, overlap_threshold: usize, inhibition_strength: f64) -> Self {
        let mut members = members;
        members.sort_unstable();
        members.dedup();
        Self { members, overlap_threshold, inhibition_strength }
    }

    pub fn contains(&self, id: NeuronId) -> bool {
        self.members.binary_search(&id).is_ok()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WtaMode {
    Hard,
    Soft,
}

/// What "most inputs" is measured by.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Selection {
    /// Summed weighted input.
    Sigma,
    /// Count of incoming synapses currently delivering input; ties fall back
    /// to summed input.
    ActiveInputs,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TieBreak {
    LowestId,
    HighestId,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CompetitionParams {
    pub mode: WtaMode,
    pub selection: Selection,
    pub tie_break: TieBreak,
    pub inhibition_strength: f64,
    pub overlap_threshold: usize,
}

impl Default for CompetitionParams {
    fn default() -> Self {
        Self {
            mode: WtaMode::Hard,
            selection: Selection::Sigma,
            tie_break: TieBreak::LowestId,
            inhibition_strength: 10.0,
            overlap_threshold: 1,
        }
    }
}

fn input_sources(net: &Network, id: NeuronId) -> BTreeSet<NeuronId> {
    net.incoming(id).iter().map(|&s| net.synapses()[s].pre).collect()
}

/// Number of distinct presynaptic sources shared by `a` and `b`.
pub fn shared_inputs(net: &Network, a: NeuronId, b: NeuronId) -> usize {
    let sa = input_sources(net, a);
    let sb = input_sources(net, b);
    sa.intersection(&sb).count()
}

/// Partitions neurons sharing at least `overlap_threshold` input sources into
/// competition groups.
///
/// Pairs are visited from highest overlap down (ties by id). Each unassigned
/// pair seeds a group that greedily absorbs unassigned neurons adjacent to all
/// current members, best total overlap first. Every neuron ends up in at most
/// one group.
pub fn build_groups(
    net: &Network,
    overlap_threshold: usize,
    inhibition_strength: f64,
) -> Result<Vec<InhibitionGroup>> {
    if overlap_threshold == 0 {
        return Err(Error::InvalidArgument("overlap threshold must be >= 1".into()));
    }
    let mut overlap: BTreeMap<(NeuronId, NeuronId), usize> = BTreeMap::new();
    for source in net.neuron_ids() {
        let targets: BTreeSet<NeuronId> =
            net.outgoing(source).iter().map(|&s| net.synapses()[s].post).collect();
        let targets: Vec<NeuronId> = targets.into_iter().collect();
        for (i, &a) in targets.iter().enumerate() {
            for &b in &targets[i + 1..] {
                *overlap.entry((a, b)).or_insert(0) += 1;
            }
        }
    }
    overlap.retain(|_, c| *c >= overlap_threshold);
    let linked = |a: NeuronId, b: NeuronId| -> usize {
        let key = if a < b { (a, b) } else { (b, a) };
        overlap.get(&key).copied().unwrap_or(0)
    };

    let mut pairs: Vec<((NeuronId, NeuronId), usize)> =
        overlap.iter().map(|(&k, &c)| (k, c)).collect();
    pairs.sort_by(|x, y| y.1.cmp(&x.1).then(x.0.cmp(&y.0)));

    let mut assigned: BTreeSet<NeuronId> = BTreeSet::new();
    let mut groups = Vec::new();
    for &((a, b), _) in &pairs {
        if assigned.contains(&a) || assigned.contains(&b) {
            continue;
        }
        let mut members = alloc::vec![a, b];
        assigned.insert(a);
        assigned.insert(b);
        loop {
            let mut best: Option<(usize, NeuronId)> = None;
            let candidates: BTreeSet<NeuronId> = overlap
                .keys()
                .flat_map(|&(x, y)| [x, y])
                .filter(|c| !assigned.contains(c))
                .collect();
            for c in candidates {
                if members.iter().all(|&m| linked(m, c) > 0) {
                    let total: usize = members.iter().map(|&m| linked(m, c)).sum();
                    if best.is_none_or(|(t, _)| total > t) {
                        best = Some((total, c));
                    }
                }
            }
            match best {
                Some((_, c)) => {
                    members.push(c);
                    assigned.insert(c);
                }
                None => break,
            }
        }
        groups.push(InhibitionGroup::new(members, overlap_threshold, inhibition_strength));
    }
    Ok(groups)
}

#[derive(Clone, Debug, PartialEq)]
pub struct WtaOutcome {
    pub winner: NeuronId,
    pub winner_sigma: f64,
    pub winner_rate: f64,
    /// Members whose rate is forced to 0.
    pub suppressed: Vec<NeuronId>,
}

fn pick(members: &[NeuronId], score: impl Fn(NeuronId) -> (f64, f64), tie: TieBreak) -> NeuronId {
    let mut best = members[0];
    let mut best_score = score(best);
    for &m in &members[1..] {
        let s = score(m);
        let better = match s.partial_cmp(&best_score) {
            Some(core::cmp::Ordering::Greater) => true,
            Some(core::cmp::Ordering::Equal) => tie == TieBreak::HighestId,
            _ => false,
        };
        if better {
            best = m;
            best_score = s;
        }
    }
    best
}

/// Selects the member with the largest input. Ties follow `tie_break`
/// (members are visited in ascending id order).
pub fn resolve_wta(
    group: &InhibitionGroup,
    sigmas: &BTreeMap<NeuronId, f64>,
    tie_break: TieBreak,
    params: &NetParams,
) -> Result<WtaOutcome> {
    if group.members.is_empty() {
        return Err(Error::EmptyGroup);
    }
    for m in &group.members {
        if !sigmas.contains_key(m) {
            return Err(Error::UnknownNeuron(*m));
        }
    }
    let winner = pick(&group.members, |m| (sigmas[&m], 0.0), tie_break);
    let winner_sigma = sigmas[&winner];
    Ok(WtaOutcome {
        winner,
        winner_sigma,
        winner_rate: activation_unchecked(winner_sigma.max(0.0), params),
        suppressed: group.members.iter().copied().filter(|&m| m != winner).collect(),
    })
}

/// Applies every group to one tick's rates in place. Groups without any
/// input are left alone.
pub(crate) fn apply_groups(
    groups: &[InhibitionGroup],
    comp: &CompetitionParams,
    params: &NetParams,
    sigma: &[f64],
    active_inputs: &[u32],
    rates: &mut [f64],
) {
    for group in groups {
        if group.members.is_empty() || group.members.iter().all(|m| sigma[m.index()] <= 0.0) {
            continue;
        }
        match comp.mode {
            WtaMode::Hard => {
                let winner = match comp.selection {
                    Selection::Sigma => {
                        pick(&group.members, |m| (sigma[m.index()], 0.0), comp.tie_break)
                    }
                    Selection::ActiveInputs => pick(
                        &group.members,
                        |m| (f64::from(active_inputs[m.index()]), sigma[m.index()]),
                        comp.tie_break,
                    ),
                };
                for &m in &group.members {
                    if m != winner {
                        rates[m.index()] = 0.0;
                    }
                }
            }
            WtaMode::Soft => {
                let active = group.members.iter().filter(|m| sigma[m.index()] > 0.0).count();
                for &m in &group.members {
                    let s = sigma[m.index()];
                    let rivals = active - usize::from(s > 0.0);
                    let reduced = s - group.inhibition_strength * rivals as f64;
                    if rates[m.index()] > 0.0 {
                        rates[m.index()] =
                            activation_unchecked(if reduced > 0.0 { reduced } else { 0.0 }, params);
                    }
                }
            }
        }
    }
}
