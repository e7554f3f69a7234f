//! Rule files.
//!
//! ```text
//! # comment
//! IMP a b      # a implies b
//! NOT x b      # x inhibits b
//! FALSE z      # z never fires
//! ```
//!
//! Keywords are case-sensitive, atoms are any whitespace-free token without
//! `#`. The atom `TRUE` is held on during every inference.

use cortexsim_core::logic::Rule;

use crate::error::{HarnessError, Result};

/// Parses one line; `Ok(None)` for blank or comment-only lines.
pub fn parse_rule_line(raw: &str, line: usize) -> Result<Option<Rule>> {
    let text = raw.split('#').next().unwrap_or("");
    let tokens: Vec<&str> = text.split_whitespace().collect();
    let rule = match tokens.as_slice() {
        [] => return Ok(None),
        ["IMP", a, b] => Rule::Imp(a.to_string(), b.to_string()),
        ["NOT", x, b] => Rule::Not(x.to_string(), b.to_string()),
        ["FALSE", z] => Rule::False(z.to_string()),
        [kw @ ("IMP" | "NOT"), ..] => return Err(HarnessError::parse(line, format!("{kw} takes two atoms"))),
        ["FALSE", ..] => return Err(HarnessError::parse(line, "FALSE takes one atom")),
        [other, ..] => return Err(HarnessError::parse(line, format!("unknown rule keyword {other:?}"))),
    };
    Ok(Some(rule))
}

pub fn parse_rules(text: &str) -> Result<Vec<Rule>> {
    let mut rules = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        if let Some(r) = parse_rule_line(raw, i + 1)? {
            rules.push(r);
        }
    }
    Ok(rules)
}
