//! Interactive loop over the scenario command language.
//!
//! Every line is one scenario command. Results are printed exactly as a
//! scenario run prints them, so a transcript replayed through `simulate`
//! yields the same output. Errors are reported and the session continues.

use std::io::{BufRead, Write};

use crate::error::Result;
use crate::scenario::{parse_line, Session};

const HELP: &str = "\
commands: any scenario line (neuron, synapse, inject, step, learn, recall,
generate, rule, infer, measure, assert, save, ...), plus
  help    this text
  state   tick, neuron and synapse counts
  quit    leave (also: exit, end of input)";

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ReplOutcome {
    pub commands: usize,
    pub errors: usize,
    pub failures: usize,
}

fn w(out: &mut impl Write, text: &str) -> Result<()> {
    writeln!(out, "{text}").map_err(|e| crate::error::HarnessError::io("<stdout>", e))
}

pub fn run_repl(session: &mut Session, input: impl BufRead, mut out: impl Write, prompt: bool) -> Result<ReplOutcome> {
    let mut outcome = ReplOutcome::default();
    let mut lines = input.lines();
    loop {
        if prompt {
            write!(out, "> ").and_then(|_| out.flush()).map_err(|e| crate::error::HarnessError::io("<stdout>", e))?;
        }
        let Some(line) = lines.next() else { break };
        let line = line.map_err(|e| crate::error::HarnessError::io("<stdin>", e))?;
        outcome.commands += 1;
        match line.trim() {
            "quit" | "exit" => break,
            "help" => {
                w(&mut out, HELP)?;
                continue;
            }
            "state" => {
                let n = &session.net;
                w(&mut out, &format!("tick {} neurons {} synapses {}", n.tick(), n.len(), n.synapses().len()))?;
                continue;
            }
            _ => {}
        }
        let cmd = match parse_line(&line, outcome.commands) {
            Ok(Some(cmd)) => cmd,
            Ok(None) => continue,
            Err(e) => {
                outcome.errors += 1;
                w(&mut out, &format!("error: {e}"))?;
                continue;
            }
        };
        let (shown, failed) = (session.output.len(), session.failures.len());
        let result = session.execute(&cmd);
        for o in &session.output[shown..] {
            w(&mut out, o)?;
        }
        for f in &session.failures[failed..] {
            w(&mut out, &format!("FAIL {f}"))?;
        }
        if let Err(e) = result {
            outcome.errors += 1;
            w(&mut out, &format!("error: {e}"))?;
        }
    }
    outcome.failures = session.failures.len();
    Ok(outcome)
}
