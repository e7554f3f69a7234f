use cortexsim_core::plasticity::{consolidate, stdp_kernel, Learner, PlasticityParams};
use cortexsim_core::sequence::{train_sequence, SequenceSpec};
use cortexsim_core::{NetParams, Network, NeuronId, NeuronKind};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn kernel_sign_and_strict_decay_over_window() {
    let p = PlasticityParams::default();
    let w = p.window as i64;
    for d in 1..=w {
        assert!(stdp_kernel(d, &p) > 0.0);
        assert!(stdp_kernel(-d, &p) < 0.0);
        if d < w {
            assert!(stdp_kernel(d, &p).abs() > stdp_kernel(d + 1, &p).abs());
            assert!(stdp_kernel(-d, &p).abs() > stdp_kernel(-d - 1, &p).abs());
        }
    }
    assert_eq!(stdp_kernel(0, &p), 0.0);
    assert_eq!(stdp_kernel(w + 1, &p), 0.0);
    assert_eq!(stdp_kernel(-w - 1, &p), 0.0);
}

/// 10^5 random firing events with several learning rules active at once.
#[test]
fn weights_stay_in_bounds_under_fuzz() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let np = NetParams::default();
    let mut net = Network::new(np).unwrap();
    let ids = net.add_neurons(10, NeuronKind::Excitatory);
    for _ in 0..40 {
        let (a, b) = (ids[rng.random_range(0..10)], ids[rng.random_range(0..10)]);
        net.add_synapse(a, b, rng.random_range(0.0..1.0), rng.random_range(1..4)).unwrap();
    }
    let params = PlasticityParams { a_plus: 0.3, a_minus: 0.3, eta_cofire: 0.2, ..Default::default() };
    let mut l = Learner::new(params).unwrap();
    let mut events = 0usize;
    let mut tick = 0u64;
    while events < 100_000 {
        let mut ext: Vec<(NeuronId, f64)> = Vec::new();
        for &i in &ids {
            if rng.random_bool(0.4) {
                ext.push((i, rng.random_range(0.0..150.0)));
            }
        }
        let r = l.step(&mut net, &ext).unwrap();
        events += r.fired.len().max(1);
        tick += 1;
        if tick.is_multiple_of(50) {
            consolidate(&mut net, rng.random_range(0.01..1.0)).unwrap();
        }
        for s in net.synapses() {
            assert!((0.0..=np.w_max).contains(&s.weight.ltm));
            assert!((0.0..=np.s_max).contains(&s.weight.stm));
            assert!(s.weight.effective(np.w_max) <= np.w_max);
        }
    }
}

proptest! {
    #[test]
    fn consolidation_conserves_total(ltm in 0.0f64..0.4, stm in 0.0f64..0.5, rate in 0.01f64..1.0) {
        let mut net = Network::new(NetParams::default()).unwrap();
        let ids = net.add_neurons(2, NeuronKind::Excitatory);
        let s = net.add_synapse(ids[0], ids[1], ltm, 1).unwrap();
        net.set_stm(s, stm).unwrap();
        consolidate(&mut net, rate).unwrap();
        let w = net.synapses()[s].weight;
        // ltm + stm <= 0.9 < w_max, so no clamping.
        prop_assert!((w.ltm + w.stm - (ltm + stm)).abs() <= 1e-15);
    }

    #[test]
    fn kernel_interval_ordering(a in 1i64..30, b in 1i64..30) {
        prop_assume!(a < b);
        let p = PlasticityParams::default();
        prop_assert!(stdp_kernel(a, &p) > stdp_kernel(b, &p));
        prop_assert!(stdp_kernel(-a, &p) < stdp_kernel(-b, &p));
    }
}

#[test]
fn ordered_pair_builds_asymmetry_each_repetition() {
    for gap in [1u32, 2, 4] {
        let mut net = Network::new(NetParams::default()).unwrap();
        let ids = net.add_neurons(2, NeuronKind::Excitatory);
        net.add_synapse(ids[0], ids[1], 0.0, gap).unwrap();
        net.add_synapse(ids[1], ids[0], 0.0, gap).unwrap();
        let mut l = Learner::new(PlasticityParams::default()).unwrap();
        let spec = SequenceSpec { items: ids.clone(), gap, strength: 100.0, repetitions: 40 };
        let report = train_sequence(&mut net, &mut l, &spec).unwrap();
        let t = &report.pairs[0];
        let margins: Vec<f64> = t.margins().collect();
        let mut prev = 0.0;
        for (i, &m) in margins.iter().enumerate() {
            if t.forward[i] < 1.0 {
                assert!(m > prev, "gap {gap} rep {i}: {m} <= {prev}");
            } else {
                assert!(m >= prev);
            }
            prev = m;
        }
        assert!(prev > 0.0);
    }
}
