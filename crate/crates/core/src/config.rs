//! All tunable parameters behind one flat `key = value` namespace.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::str::FromStr;

use crate::competition::{CompetitionParams, Selection, TieBreak, WtaMode};
use crate::error::{Error, Result};
use crate::language::LanguageParams;
use crate::logic::LogicParams;
use crate::network::NetParams;
use crate::plasticity::PlasticityParams;
use crate::sequence::SequenceParams;

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Config {
    pub net: NetParams,
    pub plasticity: PlasticityParams,
    pub competition: CompetitionParams,
    pub sequence: SequenceParams,
    pub language: LanguageParams,
    pub logic: LogicParams,
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value.trim().parse().map_err(|_| Error::InvalidParam { key: key.into(), reason: format!("cannot parse {value:?}") })
}

fn choice<T: Copy>(key: &str, value: &str, options: &[(&str, T)]) -> Result<T> {
    options.iter().find(|(name, _)| *name == value.trim()).map(|&(_, v)| v).ok_or_else(|| {
        let names: Vec<&str> = options.iter().map(|o| o.0).collect();
        Error::InvalidParam { key: key.into(), reason: format!("expected one of {}", names.join("|")) }
    })
}

const MODES: &[(&str, WtaMode)] = &[("hard", WtaMode::Hard), ("soft", WtaMode::Soft)];
const SELECTIONS: &[(&str, Selection)] = &[("sigma", Selection::Sigma), ("active_inputs", Selection::ActiveInputs)];
const TIE_BREAKS: &[(&str, TieBreak)] = &[("lowest_id", TieBreak::LowestId), ("highest_id", TieBreak::HighestId)];

fn name_of<T: PartialEq>(options: &[(&'static str, T)], v: T) -> &'static str {
    options.iter().find(|o| o.1 == v).map(|o| o.0).unwrap_or("?")
}

impl Config {
    /// Sets one parameter. Does not validate cross-field constraints; call
    /// [`Config::validate`] once all keys are in.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let k = key.trim();
        let (n, p, c, s, l, g) =
            (&mut self.net, &mut self.plasticity, &mut self.competition, &mut self.sequence, &mut self.language, &mut self.logic);
        match k {
            "net.c1" => n.c1 = parse(k, value)?,
            "net.c2" => n.c2 = parse(k, value)?,
            "net.f_thr" => n.f_thr = parse(k, value)?,
            "net.w_max" => n.w_max = parse(k, value)?,
            "net.s_max" => n.s_max = parse(k, value)?,
            "net.dt" => n.dt = parse(k, value)?,
            "net.rng_seed" => n.rng_seed = parse(k, value)?,
            "plasticity.a_plus" => p.a_plus = parse(k, value)?,
            "plasticity.a_minus" => p.a_minus = parse(k, value)?,
            "plasticity.tau_plus" => p.tau_plus = parse(k, value)?,
            "plasticity.tau_minus" => p.tau_minus = parse(k, value)?,
            "plasticity.eta_cofire" => p.eta_cofire = parse(k, value)?,
            "plasticity.tau_stm" => p.tau_stm = parse(k, value)?,
            "plasticity.consolidate_rate" => p.consolidate_rate = parse(k, value)?,
            "plasticity.window" => p.window = parse(k, value)?,
            "plasticity.grow_new" => p.grow_new = parse(k, value)?,
            "plasticity.grow_threshold" => p.grow_threshold = parse(k, value)?,
            "plasticity.grow_weight" => p.grow_weight = parse(k, value)?,
            "competition.mode" => c.mode = choice(k, value, MODES)?,
            "competition.selection" => c.selection = choice(k, value, SELECTIONS)?,
            "competition.tie_break" => c.tie_break = choice(k, value, TIE_BREAKS)?,
            "competition.inhibition_strength" => c.inhibition_strength = parse(k, value)?,
            "competition.overlap_threshold" => c.overlap_threshold = parse(k, value)?,
            "sequence.strength" => s.strength = parse(k, value)?,
            "sequence.gap" => s.gap = parse(k, value)?,
            "sequence.repetitions" => s.repetitions = parse(k, value)?,
            "sequence.assoc_cutoff" => s.assoc_cutoff = parse(k, value)?,
            "lang.ground_weight" => l.ground_weight = parse(k, value)?,
            "lang.gap" => l.gap = parse(k, value)?,
            "lang.repetitions" => l.repetitions = parse(k, value)?,
            "lang.strength" => l.strength = parse(k, value)?,
            "lang.overlap_threshold" => l.overlap_threshold = parse(k, value)?,
            "lang.priming" => l.priming = parse(k, value)?,
            "logic.safety" => g.safety = parse(k, value)?,
            "logic.d_rule" => g.d_rule = parse(k, value)?,
            "logic.inhibition_contacts" => g.inhibition_contacts = parse(k, value)?,
            "logic.strength" => g.strength = parse(k, value)?,
            _ => return Err(Error::InvalidParam { key: k.into(), reason: "unknown key".into() }),
        }
        Ok(())
    }

    /// Every key with its current value, in a fixed order. Floats print in
    /// shortest round-trip form, so `set` on the output restores the config
    /// exactly.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let (n, p, c, s, l, g) = (&self.net, &self.plasticity, &self.competition, &self.sequence, &self.language, &self.logic);
        alloc::vec![
            ("net.c1", n.c1.to_string()),
            ("net.c2", n.c2.to_string()),
            ("net.f_thr", n.f_thr.to_string()),
            ("net.w_max", n.w_max.to_string()),
            ("net.s_max", n.s_max.to_string()),
            ("net.dt", n.dt.to_string()),
            ("net.rng_seed", n.rng_seed.to_string()),
            ("plasticity.a_plus", p.a_plus.to_string()),
            ("plasticity.a_minus", p.a_minus.to_string()),
            ("plasticity.tau_plus", p.tau_plus.to_string()),
            ("plasticity.tau_minus", p.tau_minus.to_string()),
            ("plasticity.eta_cofire", p.eta_cofire.to_string()),
            ("plasticity.tau_stm", p.tau_stm.to_string()),
            ("plasticity.consolidate_rate", p.consolidate_rate.to_string()),
            ("plasticity.window", p.window.to_string()),
            ("plasticity.grow_new", p.grow_new.to_string()),
            ("plasticity.grow_threshold", p.grow_threshold.to_string()),
            ("plasticity.grow_weight", p.grow_weight.to_string()),
            ("competition.mode", name_of(MODES, c.mode).into()),
            ("competition.selection", name_of(SELECTIONS, c.selection).into()),
            ("competition.tie_break", name_of(TIE_BREAKS, c.tie_break).into()),
            ("competition.inhibition_strength", c.inhibition_strength.to_string()),
            ("competition.overlap_threshold", c.overlap_threshold.to_string()),
            ("sequence.strength", s.strength.to_string()),
            ("sequence.gap", s.gap.to_string()),
            ("sequence.repetitions", s.repetitions.to_string()),
            ("sequence.assoc_cutoff", s.assoc_cutoff.to_string()),
            ("lang.ground_weight", l.ground_weight.to_string()),
            ("lang.gap", l.gap.to_string()),
            ("lang.repetitions", l.repetitions.to_string()),
            ("lang.strength", l.strength.to_string()),
            ("lang.overlap_threshold", l.overlap_threshold.to_string()),
            ("lang.priming", l.priming.to_string()),
            ("logic.safety", g.safety.to_string()),
            ("logic.d_rule", g.d_rule.to_string()),
            ("logic.inhibition_contacts", g.inhibition_contacts.to_string()),
            ("logic.strength", g.strength.to_string()),
        ]
    }

    pub fn validate(&self) -> Result<()> {
        self.net.validate()?;
        self.plasticity.validate()?;
        self.language.validate()?;
        self.logic.validate()?;
        if self.competition.overlap_threshold == 0 {
            return Err(Error::InvalidParam { key: "competition.overlap_threshold".into(), reason: "must be >= 1".into() });
        }
        if !(self.competition.inhibition_strength >= 0.0) {
            return Err(Error::InvalidParam { key: "competition.inhibition_strength".into(), reason: "must be >= 0".into() });
        }
        let s = &self.sequence;
        if s.gap == 0 || s.repetitions == 0 || !(s.strength >= 0.0) {
            return Err(Error::InvalidParam { key: "sequence".into(), reason: "gap, repetitions >= 1 and strength >= 0".into() });
        }
        Ok(())
    }

    /// Parses `key = value` lines; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::InvalidParam {
                key: format!("line {}", i + 1),
                reason: format!("expected key = value, got {line:?}"),
            })?;
            self.set(k, v)?;
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in self.entries() {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(&v);
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_round_trip() {
        let mut c = Config::default();
        c.set("net.c2", "0.0123456789012345").unwrap();
        c.set("competition.mode", "soft").unwrap();
        c.set("net.rng_seed", "18446744073709551615").unwrap();
        let mut d = Config::default();
        d.apply_text(&c.to_text()).unwrap();
        assert_eq!(c, d);
    }

    #[test]
    fn rejects_unknown_and_bad_values() {
        let mut c = Config::default();
        assert!(c.set("net.nope", "1").is_err());
        assert!(c.set("net.c1", "abc").is_err());
        assert!(c.set("competition.mode", "medium").is_err());
        assert!(c.apply_text("net.c1 100").is_err());
        c.set("net.f_thr", "200").unwrap();
        assert!(c.validate().is_err());
    }

    #[test]
    fn comments_and_blank_lines() {
        let mut c = Config::default();
        c.apply_text("# header\n\nnet.c1 = 50 # trailing\n").unwrap();
        assert_eq!(c.net.c1, 50.0);
        assert!(Config::default().validate().is_ok());
    }
}
