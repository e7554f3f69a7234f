//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits nonzero if any failed.

use std::path::PathBuf;
use std::time::Instant;

use cortexsim::cli::{self, Globals};
use cortexsim::scenario::{parse_scenario, Command};
use cortexsim::snapshot;
use cortexsim::trace::TraceFormat;
use cortexsim::Session;
use cortexsim_core::logic::{
    all_assignments, consolidate_transitive, default_horizon, infer, nand_gate, not_gate, reachability_closure, truth_table,
    LogicParams, Rule, RuleBase,
};
use cortexsim_core::plasticity::{stdp_kernel, Learner, PlasticityParams};
use cortexsim_core::sequence::{recall_sequence, train_sequence, SequenceParams, SequenceSpec};
use cortexsim_core::topology::{build_sandglass, find_kernel, influence_score, uniform_chain, SandglassSpec};
use cortexsim_core::{activation, Config, NetParams, Network, NeuronKind};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn demos() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../demos")
}

/// 1 - e^(-x) without cancellation: compensated alternating series below 1,
/// direct subtraction above (the result is then at least 0.63).
fn one_minus_exp_neg(x: f64) -> f64 {
    if x >= 1.0 {
        return 1.0 - (-x).exp();
    }
    let (mut sum, mut comp, mut term) = (0.0f64, 0.0f64, 1.0f64);
    for k in 1..60 {
        term *= x / k as f64;
        let t = if k % 2 == 1 { term } else { -term };
        let y = t - comp;
        let s = sum + y;
        comp = (s - sum) - y;
        sum = s;
        if term < 1e-40 {
            break;
        }
    }
    sum
}

fn c1_activation_law() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for i in 0..10_000 {
        let c1 = rng.random_range(1.0..1000.0);
        let c2 = 10f64.powf(rng.random_range(-4.0..0.0));
        // Keep c2 * sigma <= 30, where 1 - e^(-x) is still below 1 in f64.
        let sigma = rng.random_range(0.0..30.0) / c2;
        let p = NetParams { c1, c2, f_thr: c1 / 5.0, ..Default::default() };
        let f = activation(sigma, &p).map_err(|e| format!("triple {i}: {e}"))?;
        let want = c1 * one_minus_exp_neg(c2 * sigma);
        if !(0.0..c1).contains(&f) {
            return Err(format!("bounds violated: c1={c1} c2={c2} sigma={sigma} f={f}"));
        }
        let rel = if want == 0.0 { f.abs() } else { ((f - want) / want).abs() };
        if rel > 1e-12 {
            return Err(format!("c1={c1} c2={c2} sigma={sigma}: f={f} oracle={want} rel={rel:e}"));
        }
        worst = worst.max(rel);
    }
    Ok(format!("10000 triples, worst relative error {worst:.2e}"))
}

fn c2_stdp_kernel() -> Outcome {
    let p = PlasticityParams::default();
    let w = p.window as i64;
    for d in 1..=w {
        let (ltp, ltd) = (stdp_kernel(d, &p), stdp_kernel(-d, &p));
        if !(ltp > 0.0 && ltd < 0.0) {
            return Err(format!("sign wrong at |dt|={d}: {ltp} {ltd}"));
        }
        if d < w && !(ltp > stdp_kernel(d + 1, &p) && ltd.abs() > stdp_kernel(-d - 1, &p).abs()) {
            return Err(format!("not strictly decreasing at |dt|={d}"));
        }
    }
    Ok(format!("dt in +-1..={w}"))
}

fn c3_sequence() -> Outcome {
    let sp = SequenceParams::default();
    let mut most = 0;
    for gap in [1u32, 2, 4] {
        for len in 2..=6usize {
            let mut net = Network::new(NetParams::default()).map_err(|e| e.to_string())?;
            let ids = net.add_neurons(len, NeuronKind::Excitatory);
            let mut learner = Learner::new(PlasticityParams::default()).map_err(|e| e.to_string())?;
            let spec = SequenceSpec { items: ids.clone(), gap, strength: sp.strength, repetitions: 1 };
            let mut learned = None;
            for rep in 1..=50 {
                train_sequence(&mut net, &mut learner, &spec).map_err(|e| e.to_string())?;
                if recall_sequence(&mut net, ids[0], len, &sp).map_err(|e| e.to_string())? == ids {
                    learned = Some(rep);
                    break;
                }
            }
            let rep = learned.ok_or_else(|| format!("len {len} gap {gap}: no exact recall within 50 repetitions"))?;
            most = most.max(rep);
            for mid in 1..len {
                let got = recall_sequence(&mut net, ids[mid], len, &sp).map_err(|e| e.to_string())?;
                if got.iter().any(|id| ids[..mid].contains(id)) {
                    return Err(format!("len {len} gap {gap}: cue {mid} re-fired an earlier item: {got:?}"));
                }
                if got != ids[mid..] {
                    return Err(format!("len {len} gap {gap}: cue {mid} recalled {got:?}"));
                }
            }
        }
    }
    Ok(format!("15 chains, at most {most} repetitions needed"))
}

fn c4_language() -> Outcome {
    let text = std::fs::read_to_string(demos().join("cat.scn")).map_err(|e| e.to_string())?;
    let scenario = parse_scenario(&text).map_err(|e| e.to_string())?;
    let mut first: Option<(Vec<String>, u64)> = None;
    for run in 0..10 {
        let mut s = Session::new(Config::default()).map_err(|e| e.to_string())?;
        s.run(&scenario.steps).map_err(|e| e.to_string())?;
        let generated: Vec<String> = s.results.iter().filter(|(l, _)| l.starts_with("generate")).map(|(_, v)| v.clone()).collect();
        if generated != ["this is cat", "this is dog", "this is UNKNOWN"] {
            return Err(format!("run {run}: {generated:?}"));
        }
        if !s.failures.is_empty() {
            return Err(format!("run {run}: {:?}", s.failures));
        }
        let this = (s.output.clone(), s.net.edge_hash());
        match &first {
            None => first = Some(this),
            Some(f) if *f != this => return Err(format!("run {run} differs from run 0")),
            Some(_) => {}
        }
    }
    Ok("cat -> \"this is cat\", dog -> \"this is dog\", empty -> UNKNOWN, 10 identical runs".into())
}

fn c5_logic() -> Outcome {
    let p = LogicParams::default();
    let e = |e: cortexsim_core::Error| e.to_string();
    let mut net = Network::new(NetParams::default()).map_err(e)?;
    let mut rb = RuleBase::new();
    not_gate(&mut net, &mut rb, "x", "nx", &p).map_err(e)?;
    let want_not = [(vec![true], false), (vec![false], true)];
    let got = truth_table(&net, &rb, &["x"], "nx", &all_assignments(1), &p).map_err(e)?;
    if got != want_not {
        return Err(format!("NOT table {got:?}"));
    }
    let mut net = Network::new(NetParams::default()).map_err(e)?;
    let mut rb = RuleBase::new();
    nand_gate(&mut net, &mut rb, "a", "b", "out", &p).map_err(e)?;
    let got = truth_table(&net, &rb, &["a", "b"], "out", &all_assignments(2), &p).map_err(e)?;
    for (row, v) in &got {
        if *v != !(row[0] && row[1]) {
            return Err(format!("NAND table {got:?}"));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut mismatches = 0;
    for _ in 0..100 {
        let atoms: Vec<String> = (0..rng.random_range(2..=12)).map(|i| format!("p{i}")).collect();
        let mut net = Network::new(NetParams::default()).map_err(e)?;
        let mut rb = RuleBase::new();
        for a in &atoms {
            rb.ensure_atom(&mut net, a).map_err(e)?;
        }
        for _ in 0..rng.random_range(0..=20) {
            let (a, b) = (rng.random_range(0..atoms.len()), rng.random_range(0..atoms.len()));
            if a != b {
                rb.compile(&mut net, Rule::Imp(atoms[a].clone(), atoms[b].clone()), &p).map_err(e)?;
            }
        }
        let facts: Vec<&str> = atoms.iter().filter(|_| rng.random_bool(0.3)).map(String::as_str).collect();
        let got = infer(&mut net, &rb, &facts, default_horizon(&rb, &p), &p).map_err(e)?.derived;
        if got != reachability_closure(&rb, &facts) {
            mismatches += 1;
        }
    }
    if mismatches > 0 {
        return Err(format!("{mismatches} of 100 random bases disagree with the closure"));
    }
    Ok("NOT and NAND tables exact, 100 random bases match".into())
}

fn c6_consolidation() -> Outcome {
    let p = LogicParams::default();
    let e = |e: cortexsim_core::Error| e.to_string();
    let mut net = Network::new(NetParams::default()).map_err(e)?;
    let mut rb = RuleBase::new();
    rb.compile(&mut net, Rule::Imp("a".into(), "b".into()), &p).map_err(e)?;
    rb.compile(&mut net, Rule::Imp("b".into(), "c".into()), &p).map_err(e)?;
    let h = default_horizon(&rb, &p);
    let before = infer(&mut net.clone(), &rb, &["a"], h, &p).map_err(e)?.first_fire.get("c").copied();
    let sc = consolidate_transitive(&mut net, &mut rb, &PlasticityParams::default(), 200, &p).map_err(e)?;
    let ac = sc.iter().find(|s| s.from == "a" && s.to == "c").ok_or("no a->c edge reached rule strength in 200 replays")?;
    let w = net.synapses()[ac.synapse].weight.ltm;
    if w < p.w_rule(&net).map_err(e)? {
        return Err(format!("a->c ltm {w} below rule strength"));
    }
    let after = infer(&mut net.clone(), &rb, &["a"], h, &p).map_err(e)?.first_fire.get("c").copied();
    match (before, after) {
        (Some(b), Some(a)) if a < b => Ok(format!("a->c at replay {}, latency {b} -> {a}", ac.replay)),
        other => Err(format!("latency did not drop: {other:?}")),
    }
}

fn c7_topology() -> Outcome {
    let e = |e: cortexsim_core::Error| e.to_string();
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for i in 0..20u64 {
        let spec = loop {
            let half = rng.random_range(1..=3);
            let waist = rng.random_range(1..=4);
            let mut sizes = vec![waist];
            for _ in 0..half {
                sizes.insert(0, rng.random_range(waist + 1..=waist + 30));
                sizes.push(rng.random_range(waist + 1..=waist + 30));
            }
            if sizes.iter().sum::<usize>() <= 200 {
                break SandglassSpec::new(sizes, rng.random_range(1..=4));
            }
        };
        let sg = build_sandglass(&spec, NetParams { rng_seed: i, ..Default::default() }).map_err(e)?;
        let ranked = find_kernel(&sg.net, sg.inputs(), sg.outputs()).map_err(e)?;
        let waist = sg.waist();
        let worst_waist = ranked.iter().filter(|r| waist.contains(&r.0)).map(|r| r.1).fold(f64::MAX, f64::min);
        let best_other = ranked.iter().filter(|r| !waist.contains(&r.0)).map(|r| r.1).fold(f64::MIN, f64::max);
        if worst_waist <= best_other {
            return Err(format!("{:?}: waist {worst_waist} vs other {best_other}", spec.layer_sizes));
        }
    }
    for len in 2..=8usize {
        for weight in [0.1, 0.3, 0.45] {
            let (net, ids) = uniform_chain(len, weight, NetParams::default()).map_err(e)?;
            let m = influence_score(&net, ids[0], 100.0, len as u64 + 2).map_err(e)?;
            if let Some(w) = ids.windows(2).find(|w| m[&w[0]] <= m[&w[1]]) {
                return Err(format!("chain {len} weight {weight}: influence {} -> {}", m[&w[0]], m[&w[1]]));
            }
        }
    }
    Ok("20 sandglasses waist on top, influence falls along chains of 2..=8".into())
}

const ACTIVE: &str = "\
name persist
neuron a b c d
inhibitory i
synapse a b 0.9 1
synapse b c 0.8 2
synapse c a 0.7 3
synapse c d 0.6 1
synapse d i 0.9 1
synapse i b 0.4 2
probe rate a
probe sigma b
probe weight a b
inject 40 5000 : a
inject 25 3000 : c
learn 137
";

fn c8_persistence() -> Outcome {
    let e = |e: cortexsim::HarnessError| e.to_string();
    let mut s = Session::new(Config::default()).map_err(e)?;
    s.run(&parse_scenario(ACTIVE).map_err(e)?.steps).map_err(e)?;
    let bytes = snapshot::encode(&s);
    let mut back = snapshot::decode(&bytes).map_err(e)?;
    if back.net != s.net || back.config != s.config {
        return Err("decoded state differs".into());
    }
    s.trace.clear();
    for sess in [&mut s, &mut back] {
        sess.execute(&Command::Learn(1000)).map_err(e)?;
    }
    let bits = |sess: &Session| -> Vec<(u64, Vec<u32>, Vec<u64>)> {
        sess.trace.iter().map(|r| (r.tick, r.fired.iter().map(|f| f.0).collect(), r.values.iter().map(|v| v.to_bits()).collect())).collect()
    };
    let active = s.trace.iter().filter(|r| !r.fired.is_empty()).count();
    if active < 100 {
        return Err(format!("continuation too quiet to be a test: {active} active ticks"));
    }
    if s.trace.len() != 1000 || bits(&s) != bits(&back) || s.net != back.net {
        return Err("1000-tick continuation diverged".into());
    }

    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let scn = dir.path().join("persist.scn");
    std::fs::write(&scn, ACTIVE).map_err(|e| e.to_string())?;
    let mut traces = Vec::new();
    for (k, format) in [TraceFormat::Csv, TraceFormat::Csv, TraceFormat::Jsonl, TraceFormat::Jsonl].into_iter().enumerate() {
        let out = dir.path().join(format!("run{k}"));
        let g = Globals { seed: Some(99), trace_format: format, out_dir: Some(out.clone()), ..Default::default() };
        let code = cli::simulate(&g, &scn, &mut Vec::new(), &mut Vec::new());
        if code != 0 {
            return Err(format!("simulate exited {code}"));
        }
        traces.push(std::fs::read(out.join(format!("persist.trace.{}", format.extension()))).map_err(|e| e.to_string())?);
    }
    if traces[0] != traces[1] || traces[2] != traces[3] {
        return Err("same seed produced different trace bytes".into());
    }
    Ok(format!("snapshot {} bytes, 1000-tick continuation ({active} active ticks) identical, traces byte-identical", bytes.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("activation law", c1_activation_law),
        ("stdp kernel", c2_stdp_kernel),
        ("sequence recall", c3_sequence),
        ("language", c4_language),
        ("logic", c5_logic),
        ("transitive consolidation", c6_consolidation),
        ("topology", c7_topology),
        ("determinism and persistence", c8_persistence),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let r = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        let ms = t.elapsed().as_millis();
        match r {
            Ok(msg) => println!("PASS {} {name}: {msg} ({ms} ms)", i + 1),
            Err(msg) => {
                failed += 1;
                println!("FAIL {} {name}: {msg} ({ms} ms)", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
