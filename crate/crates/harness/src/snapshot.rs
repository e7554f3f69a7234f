//! Binary session snapshots.
//!
//! Layout, little endian:
//!
//! ```text
//! "CTXS" | u32 version | u64 payload length | payload | u32 crc32(payload)
//! ```
//!
//! The payload holds the config as text, the full network state including
//! delay lines, pending injections and the rng position, and a JSON blob with
//! the session bookkeeping (names, lexicon, sentence patterns, rules, probes).
//! Floats are stored as raw bits everywhere so a restored session continues
//! bit for bit.

use std::collections::BTreeMap;
use std::path::Path;

use cortexsim_core::competition::InhibitionGroup;
use cortexsim_core::language::{Lexicon, SentencePattern, Slot, Word};
use cortexsim_core::logic::{CompiledRule, RuleBase};
use cortexsim_core::network::{DelayLine, ScheduledInjection};
use cortexsim_core::{Config, DualTraceWeight, Network, Neuron, NeuronId, NeuronKind, Synapse};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::error::{HarnessError, Result};
use crate::rules::parse_rule_line;
use crate::scenario::{ProbeSpec, Session};

pub const MAGIC: &[u8; 4] = b"CTXS";
pub const VERSION: u32 = 1;
const HEADER: usize = 4 + 4 + 8;

struct Writer(Vec<u8>);

impl Writer {
    fn u8(&mut self, v: u8) {
        self.0.push(v);
    }
    fn u32(&mut self, v: u32) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn f64(&mut self, v: f64) {
        self.u64(v.to_bits());
    }
    fn len(&mut self, n: usize) {
        self.u64(n as u64);
    }
    fn bytes(&mut self, b: &[u8]) {
        self.len(b.len());
        self.0.extend_from_slice(b);
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

fn corrupt(what: &str) -> HarnessError {
    HarnessError::Snapshot(format!("corrupt payload: {what}"))
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len()).ok_or(HarnessError::Checksum)?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }
    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
    fn u128(&mut self) -> Result<u128> {
        Ok(u128::from_le_bytes(self.take(16)?.try_into().expect("16 bytes")))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_bits(self.u64()?))
    }
    fn bool(&mut self) -> Result<bool> {
        match self.u8()? {
            0 => Ok(false),
            1 => Ok(true),
            _ => Err(corrupt("bool")),
        }
    }
    fn len(&mut self) -> Result<usize> {
        let n = self.u64()?;
        // Every element takes at least one byte, so this bounds allocation.
        if n > (self.buf.len() - self.pos) as u64 {
            return Err(HarnessError::Checksum);
        }
        Ok(n as usize)
    }
    fn string(&mut self) -> Result<String> {
        let n = self.len()?;
        String::from_utf8(self.take(n)?.to_vec()).map_err(|_| corrupt("utf-8"))
    }
}

fn ids(v: &[NeuronId]) -> Value {
    Value::from(v.iter().map(|i| i.0).collect::<Vec<_>>())
}

fn session_json(s: &Session) -> Value {
    let names: serde_json::Map<String, Value> = s.names.iter().map(|(k, v)| (k.clone(), json!(v.0))).collect();
    let words: Vec<Value> = s.lexicon.words().iter().map(|w| json!([w.text, w.neuron.0])).collect();
    let grounding: Vec<Value> = s
        .lexicon
        .grounding()
        .iter()
        .map(|(w, fs)| json!([w.0, fs.iter().map(|f| f.0).collect::<Vec<_>>()]))
        .collect();
    let patterns: serde_json::Map<String, Value> = s
        .patterns
        .iter()
        .map(|(name, p)| {
            let slots: Vec<Value> = p
                .slots
                .iter()
                .map(|slot| match slot {
                    Slot::Fixed(id) => json!(["fixed", id.0]),
                    Slot::Open(k) => json!(["open", k]),
                })
                .collect();
            let pools: Vec<Value> = p.pools.iter().map(group_json).collect();
            (name.clone(), json!({"slots": slots, "pools": pools, "source": ids(&p.source), "gap": p.gap}))
        })
        .collect();
    let atoms: serde_json::Map<String, Value> = s.rules.atoms().iter().map(|(k, v)| (k.clone(), json!(v.0))).collect();
    let rules: Vec<Value> = s
        .rules
        .rules()
        .iter()
        .map(|r| json!({"rule": r.rule.to_string(), "synapses": r.synapses, "neurons": ids(&r.neurons)}))
        .collect();
    let probes: Vec<Value> = s
        .probes
        .iter()
        .map(|p| match p {
            ProbeSpec::Rate(n) => json!(["rate", n]),
            ProbeSpec::Sigma(n) => json!(["sigma", n]),
            ProbeSpec::Weight(a, b) => json!(["weight", a, b]),
        })
        .collect();
    json!({
        "name": s.name,
        "names": names,
        "words": words,
        "grounding": grounding,
        "patterns": patterns,
        "last_pattern": s.last_pattern,
        "atoms": atoms,
        "rules": rules,
        "probes": probes,
    })
}

fn group_json(g: &InhibitionGroup) -> Value {
    json!({"members": ids(&g.members), "overlap": g.overlap_threshold, "strength": g.inhibition_strength.to_bits()})
}

pub fn encode(s: &Session) -> Vec<u8> {
    let net = &s.net;
    let mut w = Writer(Vec::new());
    w.bytes(s.config.to_text().as_bytes());
    w.u64(net.tick());
    let rng = net.rng();
    w.0.extend_from_slice(&rng.get_seed());
    w.u64(rng.get_stream());
    w.0.extend_from_slice(&rng.get_word_pos().to_le_bytes());

    w.len(net.len());
    for n in net.neurons() {
        w.u8(matches!(n.kind, NeuronKind::Inhibitory) as u8);
        w.u8(n.silenced as u8);
        w.u8(n.fired as u8);
        w.f64(n.rate);
    }
    w.len(net.synapses().len());
    for (syn, line) in net.synapses().iter().zip(net.delay_lines()) {
        w.u32(syn.pre.0);
        w.u32(syn.post.0);
        w.f64(syn.weight.ltm);
        w.f64(syn.weight.stm);
        w.u32(syn.delay);
        w.u8(syn.sign as u8);
        w.len(line.head);
        w.len(line.slots.len());
        for &v in &line.slots {
            w.f64(v);
        }
    }
    w.len(net.schedule().len());
    for inj in net.schedule() {
        w.u32(inj.neuron.0);
        w.f64(inj.strength);
        w.u64(inj.start);
        w.u64(inj.end);
    }
    w.len(net.groups().len());
    for g in net.groups() {
        w.len(g.members.len());
        for m in &g.members {
            w.u32(m.0);
        }
        w.len(g.overlap_threshold);
        w.f64(g.inhibition_strength);
    }
    w.bytes(session_json(s).to_string().as_bytes());
    let payload = w.0;

    let mut out = Vec::with_capacity(HEADER + payload.len() + 4);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(payload.len() as u64).to_le_bytes());
    out.extend_from_slice(&payload);
    out.extend_from_slice(&crc32fast::hash(&payload).to_le_bytes());
    out
}

pub fn decode(bytes: &[u8]) -> Result<Session> {
    if bytes.len() < 4 || &bytes[..4] != MAGIC {
        return Err(HarnessError::Snapshot("not a cortexsim snapshot".into()));
    }
    if bytes.len() < HEADER + 4 {
        return Err(HarnessError::Checksum);
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes"));
    if version != VERSION {
        return Err(HarnessError::Version { found: version, supported: VERSION });
    }
    let len = u64::from_le_bytes(bytes[8..16].try_into().expect("8 bytes"));
    if len != (bytes.len() - HEADER - 4) as u64 {
        return Err(HarnessError::Checksum);
    }
    let payload = &bytes[HEADER..bytes.len() - 4];
    let crc = u32::from_le_bytes(bytes[bytes.len() - 4..].try_into().expect("4 bytes"));
    if crc32fast::hash(payload) != crc {
        return Err(HarnessError::Checksum);
    }
    let mut r = Reader { buf: payload, pos: 0 };

    let mut config = Config::default();
    config.apply_text(&r.string()?)?;
    let tick = r.u64()?;
    let seed: [u8; 32] = r.take(32)?.try_into().expect("32 bytes");
    let stream = r.u64()?;
    let word_pos = r.u128()?;
    let mut rng = ChaCha8Rng::from_seed(seed);
    rng.set_stream(stream);
    rng.set_word_pos(word_pos);

    let n = r.len()?;
    let mut neurons = Vec::with_capacity(n);
    for i in 0..n {
        let kind = if r.bool()? { NeuronKind::Inhibitory } else { NeuronKind::Excitatory };
        let silenced = r.bool()?;
        let fired = r.bool()?;
        let rate = r.f64()?;
        neurons.push(Neuron { id: NeuronId(i as u32), rate, fired, kind, silenced });
    }
    let m = r.len()?;
    let mut synapses = Vec::with_capacity(m);
    let mut lines = Vec::with_capacity(m);
    for _ in 0..m {
        let pre = NeuronId(r.u32()?);
        let post = NeuronId(r.u32()?);
        let weight = DualTraceWeight { ltm: r.f64()?, stm: r.f64()? };
        let delay = r.u32()?;
        let sign = r.u8()? as i8;
        synapses.push(Synapse { pre, post, weight, delay, sign });
        let head = r.len()?;
        let k = r.len()?;
        let slots = (0..k).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
        lines.push(DelayLine { slots, head });
    }
    let k = r.len()?;
    let mut schedule = Vec::with_capacity(k);
    for _ in 0..k {
        schedule.push(ScheduledInjection { neuron: NeuronId(r.u32()?), strength: r.f64()?, start: r.u64()?, end: r.u64()? });
    }
    let k = r.len()?;
    let mut groups = Vec::with_capacity(k);
    for _ in 0..k {
        let c = r.len()?;
        let members = (0..c).map(|_| r.u32().map(NeuronId)).collect::<Result<Vec<_>>>()?;
        let overlap = r.len()?;
        groups.push(InhibitionGroup::new(members, overlap, r.f64()?));
    }
    let meta: Value = serde_json::from_str(&r.string()?).map_err(|e| corrupt(&e.to_string()))?;
    if r.pos != payload.len() {
        return Err(corrupt("trailing bytes"));
    }

    let net = Network::from_parts(config.net, neurons, synapses, lines, schedule, groups, config.competition, tick, rng)?;
    let mut s = Session::new(config)?;
    s.net = net;
    restore_meta(&mut s, &meta)?;
    s.stepped = tick > 0;
    s.attach_recorder()?;
    Ok(s)
}

fn field<'a>(v: &'a Value, key: &str) -> Result<&'a Value> {
    v.get(key).ok_or_else(|| corrupt(key))
}

fn as_u64(v: &Value) -> Result<u64> {
    v.as_u64().ok_or_else(|| corrupt("expected an integer"))
}

fn as_str(v: &Value) -> Result<&str> {
    v.as_str().ok_or_else(|| corrupt("expected a string"))
}

fn as_arr(v: &Value) -> Result<&Vec<Value>> {
    v.as_array().ok_or_else(|| corrupt("expected an array"))
}

fn as_id(v: &Value) -> Result<NeuronId> {
    u32::try_from(as_u64(v)?).map(NeuronId).map_err(|_| corrupt("neuron id"))
}

fn id_list(v: &Value) -> Result<Vec<NeuronId>> {
    as_arr(v)?.iter().map(as_id).collect()
}

fn name_map(v: &Value) -> Result<BTreeMap<String, NeuronId>> {
    v.as_object().ok_or_else(|| corrupt("expected an object"))?.iter().map(|(k, v)| Ok((k.clone(), as_id(v)?))).collect()
}

fn restore_meta(s: &mut Session, meta: &Value) -> Result<()> {
    s.name = as_str(field(meta, "name")?)?.to_string();
    s.names = name_map(field(meta, "names")?)?;
    for id in s.names.values() {
        s.net.check(*id)?;
    }
    let mut lex = Lexicon::new();
    for w in as_arr(field(meta, "words")?)? {
        let pair = as_arr(w)?;
        let (text, id) = (as_str(pair.first().ok_or_else(|| corrupt("word"))?)?, as_id(pair.get(1).ok_or_else(|| corrupt("word"))?)?);
        s.net.check(id)?;
        lex.insert(Word { text: text.into(), neuron: id })?;
    }
    for g in as_arr(field(meta, "grounding")?)? {
        let pair = as_arr(g)?;
        let word = as_id(pair.first().ok_or_else(|| corrupt("grounding"))?)?;
        for f in id_list(pair.get(1).ok_or_else(|| corrupt("grounding"))?)? {
            lex.restore_grounding(word, f);
        }
    }
    s.lexicon = lex;

    let patterns = field(meta, "patterns")?.as_object().ok_or_else(|| corrupt("patterns"))?;
    for (name, p) in patterns {
        let slots = as_arr(field(p, "slots")?)?
            .iter()
            .map(|slot| {
                let pair = as_arr(slot)?;
                let val = pair.get(1).ok_or_else(|| corrupt("slot"))?;
                match pair.first().and_then(Value::as_str) {
                    Some("fixed") => Ok(Slot::Fixed(as_id(val)?)),
                    Some("open") => Ok(Slot::Open(as_u64(val)? as usize)),
                    _ => Err(corrupt("slot kind")),
                }
            })
            .collect::<Result<Vec<_>>>()?;
        let pools = as_arr(field(p, "pools")?)?
            .iter()
            .map(|g| {
                Ok(InhibitionGroup::new(
                    id_list(field(g, "members")?)?,
                    as_u64(field(g, "overlap")?)? as usize,
                    f64::from_bits(as_u64(field(g, "strength")?)?),
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        let pattern = SentencePattern {
            slots,
            pools,
            source: id_list(field(p, "source")?)?,
            gap: u32::try_from(as_u64(field(p, "gap")?)?).map_err(|_| corrupt("gap"))?,
        };
        s.patterns.insert(name.clone(), pattern);
    }
    s.last_pattern = field(meta, "last_pattern")?.as_str().map(str::to_string);

    let mut rb = RuleBase::new();
    for (name, id) in name_map(field(meta, "atoms")?)? {
        rb.bind_atom(&s.net, &name, id)?;
    }
    for r in as_arr(field(meta, "rules")?)? {
        let text = as_str(field(r, "rule")?)?;
        let rule = parse_rule_line(text, 0)?.ok_or_else(|| corrupt("empty rule"))?;
        let synapses = as_arr(field(r, "synapses")?)?.iter().map(|v| as_u64(v).map(|x| x as usize)).collect::<Result<Vec<_>>>()?;
        rb.push_compiled(CompiledRule { rule, synapses, neurons: id_list(field(r, "neurons")?)? });
    }
    s.rules = rb;

    s.probes = as_arr(field(meta, "probes")?)?
        .iter()
        .map(|p| {
            let parts = as_arr(p)?.iter().map(as_str).collect::<Result<Vec<_>>>()?;
            Ok(match parts.as_slice() {
                ["rate", n] => ProbeSpec::Rate(n.to_string()),
                ["sigma", n] => ProbeSpec::Sigma(n.to_string()),
                ["weight", a, b] => ProbeSpec::Weight(a.to_string(), b.to_string()),
                _ => return Err(corrupt("probe")),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(())
}

pub fn save(s: &Session, path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    }
    std::fs::write(path, encode(s)).map_err(|e| HarnessError::io(path, e))
}

pub fn load(path: &Path) -> Result<Session> {
    let bytes = std::fs::read(path).map_err(|e| HarnessError::io(path, e))?;
    decode(&bytes)
}
