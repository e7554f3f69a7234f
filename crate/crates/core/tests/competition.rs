use std::collections::BTreeMap;

use cortexsim_core::competition::{build_groups, resolve_wta, CompetitionParams, InhibitionGroup, TieBreak, WtaMode};
use cortexsim_core::{NetParams, Network, NeuronId, NeuronKind};
use proptest::prelude::*;

fn group(n: usize) -> InhibitionGroup {
    InhibitionGroup::new((0..n as u32).map(NeuronId).collect(), 1, 10.0)
}

fn sigmas(values: &[f64]) -> BTreeMap<NeuronId, f64> {
    values.iter().enumerate().map(|(i, &v)| (NeuronId(i as u32), v)).collect()
}

/// Exhaustive scan: first index holding the maximum.
fn oracle(values: &[f64]) -> NeuronId {
    let max = values.iter().copied().fold(f64::MIN, f64::max);
    NeuronId(values.iter().position(|&v| v == max).unwrap() as u32)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn winner_survives_scaling(values in prop::collection::vec(0.0f64..200.0, 2..8), lambdas in prop::collection::vec(1e-3f64..1e3, 10)) {
        let g = group(values.len());
        let p = NetParams::default();
        let base = resolve_wta(&g, &sigmas(&values), TieBreak::LowestId, &p).unwrap().winner;
        for l in lambdas {
            let scaled: Vec<f64> = values.iter().map(|v| v * l).collect();
            // Scaling can only merge values that were within rounding of each
            // other; skip those rare cases.
            prop_assume!(oracle(&scaled) == oracle(&values));
            prop_assert_eq!(resolve_wta(&g, &sigmas(&scaled), TieBreak::LowestId, &p).unwrap().winner, base);
        }
    }

    #[test]
    fn matches_exhaustive_scan(values in prop::collection::vec(prop_oneof![0.0f64..50.0, Just(25.0)], 1..=6)) {
        let g = group(values.len());
        let out = resolve_wta(&g, &sigmas(&values), TieBreak::LowestId, &NetParams::default()).unwrap();
        prop_assert_eq!(out.winner, oracle(&values));
        prop_assert_eq!(out.suppressed.len(), values.len() - 1);
        prop_assert!(!out.suppressed.contains(&out.winner));
    }

    #[test]
    fn losers_are_silent_in_hard_mode(strengths in prop::collection::vec(0.05f64..1.0, 2..6)) {
        let mut net = Network::new(NetParams::default()).unwrap();
        let src = net.add_neuron(NeuronKind::Excitatory);
        let shared = net.add_neuron(NeuronKind::Excitatory);
        let pool = net.add_neurons(strengths.len(), NeuronKind::Excitatory);
        for (&m, &w) in pool.iter().zip(&strengths) {
            net.add_synapse(src, m, w, 1).unwrap();
            net.add_synapse(shared, m, 0.01, 1).unwrap();
        }
        let groups = build_groups(&net, 2, 10.0).unwrap();
        prop_assert_eq!(groups.len(), 1);
        net.set_groups(groups);
        net.set_competition(CompetitionParams { mode: WtaMode::Hard, ..Default::default() });
        net.step(&[(src, 100.0), (shared, 100.0)]).unwrap();
        let r = net.step(&[]).unwrap();
        let nonzero: Vec<usize> = pool.iter().enumerate().filter(|(_, m)| r.rates[m.index()] > 0.0).map(|(i, _)| i).collect();
        prop_assert_eq!(nonzero.len(), 1);
        let best = strengths.iter().copied().fold(f64::MIN, f64::max);
        prop_assert_eq!(strengths[nonzero[0]], best);
    }
}

#[test]
fn same_map_same_winner_any_insertion_order() {
    let values = [3.0, 9.0, 9.0, 1.0];
    let mut forward = BTreeMap::new();
    let mut backward = BTreeMap::new();
    for (i, &v) in values.iter().enumerate() {
        forward.insert(NeuronId(i as u32), v);
    }
    for i in (0..values.len()).rev() {
        backward.insert(NeuronId(i as u32), values[i]);
    }
    let g = group(4);
    let p = NetParams::default();
    for tie in [TieBreak::LowestId, TieBreak::HighestId] {
        let a = resolve_wta(&g, &forward, tie, &p).unwrap();
        let b = resolve_wta(&g, &backward, tie, &p).unwrap();
        assert_eq!(a, b);
    }
    assert_eq!(resolve_wta(&g, &forward, TieBreak::LowestId, &p).unwrap().winner, NeuronId(1));
    assert_eq!(resolve_wta(&g, &forward, TieBreak::HighestId, &p).unwrap().winner, NeuronId(2));
}
