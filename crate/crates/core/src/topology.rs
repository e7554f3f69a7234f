//! Sandglass networks and positional measures.
//!
//! A sandglass converges layer by layer onto a narrow waist and diverges
//! again. Logic distance is the hop count of the shortest directed path,
//! influence is measured by perturbation, and the kernel score ranks neurons
//! by how far they sit from both the inputs and the outputs.

use alloc::collections::{BTreeMap, BTreeSet, VecDeque};
use alloc::vec::Vec;

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::network::{NetParams, Network, NeuronId, NeuronKind};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Expressway {
    /// (layer, index within layer)
    pub from: (usize, usize),
    pub to: (usize, usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct SandglassSpec {
    pub layer_sizes: Vec<usize>,
    /// Connections each neuron of the larger of two adjacent layers makes to
    /// the smaller one. Capped at the smaller layer's size.
    pub fan_in: usize,
    pub delay: u32,
    pub weight: f64,
    pub expressways: Vec<Expressway>,
}

impl SandglassSpec {
    pub fn new(layer_sizes: Vec<usize>, fan_in: usize) -> Self {
        Self { layer_sizes, fan_in, delay: 1, weight: 0.5, expressways: Vec::new() }
    }

    pub fn waist(&self) -> usize {
        self.layer_sizes.len() / 2
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidSandglass(m.into()));
        let n = self.layer_sizes.len();
        if n < 3 || n.is_multiple_of(2) {
            return bad("need an odd number of layers, at least 3");
        }
        if self.layer_sizes.contains(&0) {
            return bad("layers must be non-empty");
        }
        let w = self.waist();
        let ws = self.layer_sizes[w];
        if self.layer_sizes.iter().enumerate().any(|(i, &s)| i != w && s <= ws) {
            return bad("middle layer must be strictly smallest");
        }
        if self.fan_in == 0 {
            return bad("fan_in must be >= 1");
        }
        if self.delay == 0 {
            return bad("delay must be >= 1");
        }
        if !(self.weight >= 0.0 && self.weight.is_finite()) {
            return bad("weight must be >= 0");
        }
        for e in &self.expressways {
            let ok = |(l, i): (usize, usize)| l < n && i < self.layer_sizes[l];
            if !ok(e.from) || !ok(e.to) || e.from.0 >= e.to.0 {
                return bad("expressway must run forward between existing neurons");
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Sandglass {
    pub net: Network,
    pub layers: Vec<Vec<NeuronId>>,
}

impl Sandglass {
    pub fn inputs(&self) -> &[NeuronId] {
        &self.layers[0]
    }

    pub fn outputs(&self) -> &[NeuronId] {
        self.layers.last().map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn waist(&self) -> &[NeuronId] {
        &self.layers[self.layers.len() / 2]
    }
}

/// Builds a seeded layered graph with edges between adjacent layers only,
/// plus any expressways.
///
/// Neuron `i` of the larger layer connects to `perm[(i * f + k) % m]` for
/// `k < f` in the smaller layer of size `m`, with `perm` a seeded shuffle.
/// Every neuron of both layers gets at least one connection.
pub fn build_sandglass(spec: &SandglassSpec, params: NetParams) -> Result<Sandglass> {
    spec.validate()?;
    let mut net = Network::new(params)?;
    if spec.weight > net.params().w_max {
        return Err(Error::InvalidSandglass("weight exceeds w_max".into()));
    }
    let layers: Vec<Vec<NeuronId>> =
        spec.layer_sizes.iter().map(|&n| net.add_neurons(n, NeuronKind::Excitatory)).collect();
    for pair in layers.windows(2) {
        let (lo, hi) = (&pair[0], &pair[1]);
        let (big, small, forward) = if lo.len() >= hi.len() { (lo, hi, true) } else { (hi, lo, false) };
        let m = small.len();
        let f = spec.fan_in.min(m);
        let mut perm: Vec<usize> = (0..m).collect();
        perm.shuffle(net.rng_mut());
        for (i, &b) in big.iter().enumerate() {
            for k in 0..f {
                let s = small[perm[(i * f + k) % m]];
                let (pre, post) = if forward { (b, s) } else { (s, b) };
                net.ensure_synapse(pre, post, spec.weight, spec.delay)?;
            }
        }
    }
    for e in &spec.expressways {
        let (pre, post) = (layers[e.from.0][e.from.1], layers[e.to.0][e.to.1]);
        net.ensure_synapse(pre, post, spec.weight, spec.delay)?;
    }
    Ok(Sandglass { net, layers })
}

/// Hop count of the shortest directed path, `None` when unreachable.
pub fn logic_distance(net: &Network, from: NeuronId, to: NeuronId) -> Result<Option<u32>> {
    net.check(from)?;
    net.check(to)?;
    Ok(distances_from(net, &[from]).get(&to).copied())
}

/// Multi-source BFS over synapses.
pub fn distances_from(net: &Network, sources: &[NeuronId]) -> BTreeMap<NeuronId, u32> {
    bfs(net, sources, |n, id| net_targets(n, id, true))
}

/// Hop counts from every neuron to the nearest of `targets`.
pub fn distances_to(net: &Network, targets: &[NeuronId]) -> BTreeMap<NeuronId, u32> {
    bfs(net, targets, |n, id| net_targets(n, id, false))
}

fn net_targets(net: &Network, id: NeuronId, forward: bool) -> Vec<NeuronId> {
    if forward {
        net.outgoing(id).iter().map(|&s| net.synapses()[s].post).collect()
    } else {
        net.incoming(id).iter().map(|&s| net.synapses()[s].pre).collect()
    }
}

fn bfs(net: &Network, sources: &[NeuronId], next: impl Fn(&Network, NeuronId) -> Vec<NeuronId>) -> BTreeMap<NeuronId, u32> {
    let mut dist = BTreeMap::new();
    let mut queue = VecDeque::new();
    for &s in sources.iter().filter(|&&s| net.contains(s)) {
        if dist.insert(s, 0).is_none() {
            queue.push_back(s);
        }
    }
    while let Some(u) = queue.pop_front() {
        let d = dist[&u];
        for v in next(net, u) {
            if let alloc::collections::btree_map::Entry::Vacant(e) = dist.entry(v) {
                e.insert(d + 1);
                queue.push_back(v);
            }
        }
    }
    dist
}

/// Largest absolute rate difference per neuron between runs with and without
/// a constant injection at `source`. Runs on clones; `net` is not stepped.
pub fn influence_score(net: &Network, source: NeuronId, probe_strength: f64, horizon: u64) -> Result<BTreeMap<NeuronId, f64>> {
    net.check(source)?;
    if !(probe_strength >= 0.0 && probe_strength.is_finite()) {
        return Err(Error::InvalidInjection { neuron: source, value: probe_strength });
    }
    let mut base = net.clone();
    let mut probed = net.clone();
    base.disable_recording();
    probed.disable_recording();
    let mut diff: BTreeMap<NeuronId, f64> = net.neuron_ids().map(|id| (id, 0.0)).collect();
    for _ in 0..horizon {
        let a = base.step(&[])?;
        let b = probed.step(&[(source, probe_strength)])?;
        for (id, d) in diff.iter_mut() {
            *d = d.max((b.rates[id.index()] - a.rates[id.index()]).abs());
        }
    }
    Ok(diff)
}

/// Ranks neurons by `(d_in / max d_in) * (d_out / max d_out)`, where `d_in`
/// is the hop count from the nearest input and `d_out` to the nearest output.
/// Neurons cut off from either side score 0. Sorted by score, then id.
pub fn find_kernel(net: &Network, inputs: &[NeuronId], outputs: &[NeuronId]) -> Result<Vec<(NeuronId, f64)>> {
    if inputs.is_empty() || outputs.is_empty() {
        return Err(Error::InvalidArgument("kernel search needs inputs and outputs".into()));
    }
    inputs.iter().chain(outputs).try_for_each(|&id| net.check(id))?;
    let d_in = distances_from(net, inputs);
    let d_out = distances_to(net, outputs);
    let max_in = d_in.values().copied().max().unwrap_or(0).max(1) as f64;
    let max_out = d_out.values().copied().max().unwrap_or(0).max(1) as f64;
    let mut ranked: Vec<(NeuronId, f64)> = net
        .neuron_ids()
        .map(|id| {
            let score = match (d_in.get(&id), d_out.get(&id)) {
                (Some(&a), Some(&b)) => (f64::from(a) / max_in) * (f64::from(b) / max_out),
                _ => 0.0,
            };
            (id, score)
        })
        .collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    Ok(ranked)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Position {
    pub neuron: NeuronId,
    /// Hops from the nearest input, `None` when unreachable.
    pub distance: Option<u32>,
    /// Outputs reachable from this neuron.
    pub reach: usize,
    /// Summed perturbation over single-input probes.
    pub influence: f64,
    pub autonomy: f64,
}

/// Probes each input in turn and reports per-neuron position measures.
/// Autonomy is `1 - influence / max influence` over all neurons.
pub fn position_report(
    net: &Network,
    inputs: &[NeuronId],
    outputs: &[NeuronId],
    probe_strength: f64,
    horizon: u64,
) -> Result<Vec<Position>> {
    let d_in = distances_from(net, inputs);
    let out_set: BTreeSet<NeuronId> = outputs.iter().copied().collect();
    let mut total: BTreeMap<NeuronId, f64> = net.neuron_ids().map(|id| (id, 0.0)).collect();
    for &i in inputs {
        for (id, d) in influence_score(net, i, probe_strength, horizon)? {
            *total.entry(id).or_default() += d;
        }
    }
    let max = total.values().copied().fold(0.0, f64::max);
    Ok(net
        .neuron_ids()
        .map(|id| {
            let reach = distances_from(net, &[id]).keys().filter(|k| out_set.contains(k)).count();
            let influence = total[&id];
            Position {
                neuron: id,
                distance: d_in.get(&id).copied(),
                reach,
                influence,
                autonomy: if max > 0.0 { 1.0 - influence / max } else { 1.0 },
            }
        })
        .collect())
}

/// Builds `n` neurons chained with uniform weight and delay 1.
pub fn uniform_chain(n: usize, weight: f64, params: NetParams) -> Result<(Network, Vec<NeuronId>)> {
    let mut net = Network::new(params)?;
    let ids = net.add_neurons(n, NeuronKind::Excitatory);
    for w in ids.windows(2) {
        net.add_synapse(w[0], w[1], weight, 1)?;
    }
    Ok((net, ids))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sg(sizes: &[usize], fan_in: usize) -> Sandglass {
        build_sandglass(&SandglassSpec::new(sizes.to_vec(), fan_in), NetParams::default()).unwrap()
    }

    #[test]
    fn small_sandglass_counts() {
        let s = sg(&[4, 2, 4], 2);
        assert_eq!(s.net.synapses().len(), 16);
        assert_eq!(s.waist().len(), 2);
        assert_eq!(sg(&[2, 1, 2], 1).waist().len(), 1);
    }

    #[test]
    fn rejects_non_waisted() {
        for sizes in [&[4, 4, 4][..], &[4, 2], &[4, 2, 3, 4], &[2, 3, 2], &[3, 0, 3]] {
            assert!(build_sandglass(&SandglassSpec::new(sizes.to_vec(), 1), NetParams::default()).is_err());
        }
    }

    #[test]
    fn distances_in_small_sandglass() {
        let s = sg(&[4, 2, 4], 2);
        let (i, o) = (s.inputs()[0], s.outputs()[0]);
        assert_eq!(logic_distance(&s.net, i, i).unwrap(), Some(0));
        assert_eq!(logic_distance(&s.net, i, o).unwrap(), Some(2));
        assert_eq!(logic_distance(&s.net, o, i).unwrap(), None);
        assert_eq!(logic_distance(&s.net, i, s.waist()[0]).unwrap(), Some(1));
    }

    #[test]
    fn waist_tops_kernel_ranking() {
        let s = sg(&[4, 2, 4], 2);
        let r = find_kernel(&s.net, s.inputs(), s.outputs()).unwrap();
        let top: BTreeSet<NeuronId> = r[..2].iter().map(|x| x.0).collect();
        assert_eq!(top, s.waist().iter().copied().collect());
        assert!(r[1].1 > r[2].1);
    }

    #[test]
    fn flat_net_scores_equal() {
        let mut net = Network::new(NetParams::default()).unwrap();
        let a = net.add_neurons(3, NeuronKind::Excitatory);
        let b = net.add_neurons(3, NeuronKind::Excitatory);
        for &x in &a {
            for &y in &b {
                net.add_synapse(x, y, 0.5, 1).unwrap();
            }
        }
        let r = find_kernel(&net, &a, &b).unwrap();
        assert!(r.iter().all(|x| x.1 == r[0].1));
    }

    #[test]
    fn bypass_lowers_waist_score_and_autonomy() {
        let mut spec = SandglassSpec::new(alloc::vec![6, 3, 2, 3, 6], 2);
        let plain = build_sandglass(&spec, NetParams::default()).unwrap();
        spec.expressways.push(Expressway { from: (0, 0), to: (2, 0) });
        let bypass = build_sandglass(&spec, NetParams::default()).unwrap();
        let w = plain.waist()[0];
        let score = |s: &Sandglass| find_kernel(&s.net, s.inputs(), s.outputs()).unwrap().into_iter().find(|x| x.0 == w).unwrap().1;
        assert!(score(&bypass) < score(&plain));
        let auto = |s: &Sandglass| {
            position_report(&s.net, s.inputs(), s.outputs(), 100.0, 10).unwrap().into_iter().find(|p| p.neuron == w).unwrap().autonomy
        };
        assert!(auto(&bypass) < auto(&plain));
    }

    #[test]
    fn influence_zero_probe_and_isolated() {
        let mut net = Network::new(NetParams::default()).unwrap();
        let ids = net.add_neurons(3, NeuronKind::Excitatory);
        let z = influence_score(&net, ids[0], 0.0, 5).unwrap();
        assert!(z.values().all(|&v| v == 0.0));
        let m = influence_score(&net, ids[0], 50.0, 5).unwrap();
        assert!(m[&ids[0]] > 0.0 && m[&ids[1]] == 0.0 && m[&ids[2]] == 0.0);
    }

    #[test]
    fn influence_decays_along_chain() {
        let (net, ids) = uniform_chain(8, 0.3, NetParams::default()).unwrap();
        let m = influence_score(&net, ids[0], 100.0, 12).unwrap();
        for w in ids.windows(2) {
            assert!(m[&w[0]] > m[&w[1]]);
        }
    }

    #[test]
    fn same_seed_same_graph() {
        let spec = SandglassSpec::new(alloc::vec![10, 5, 2, 5, 10], 3);
        let p = NetParams { rng_seed: 99, ..Default::default() };
        let a = build_sandglass(&spec, p).unwrap();
        let b = build_sandglass(&spec, p).unwrap();
        assert_eq!(a.net.edge_hash(), b.net.edge_hash());
    }
}
