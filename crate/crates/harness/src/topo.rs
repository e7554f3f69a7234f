//! Sandglass spec files and the positional report.
//!
//! ```text
//! layers 16 8 2 8 16
//! fan_in 2
//! delay 1
//! weight 0.3
//! expressway 0:3 -> 2:1     # layer:index -> layer:index
//! probe 100                  # influence probe strength
//! horizon 12                 # influence horizon in ticks
//! ```

use std::fmt::Write;

use cortexsim_core::topology::{build_sandglass, find_kernel, position_report, Expressway, Sandglass, SandglassSpec};
use cortexsim_core::NetParams;

use crate::error::{HarnessError, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct TopoFile {
    pub spec: SandglassSpec,
    pub probe: f64,
    pub horizon: u64,
}

fn num<T: std::str::FromStr>(tok: &str, line: usize) -> Result<T> {
    tok.parse().map_err(|_| HarnessError::parse(line, format!("bad number {tok:?}")))
}

fn node(tok: &str, line: usize) -> Result<(usize, usize)> {
    let (l, i) = tok.split_once(':').ok_or_else(|| HarnessError::parse(line, format!("expected layer:index, got {tok:?}")))?;
    Ok((num(l, line)?, num(i, line)?))
}

pub fn parse_topo(text: &str) -> Result<TopoFile> {
    let mut spec = SandglassSpec::new(Vec::new(), 1);
    let mut probe = 100.0;
    let mut horizon = None;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let tokens: Vec<&str> = raw.split('#').next().unwrap_or("").split_whitespace().collect();
        match tokens.as_slice() {
            [] => {}
            ["layers", sizes @ ..] if !sizes.is_empty() => {
                spec.layer_sizes = sizes.iter().map(|s| num(s, line)).collect::<Result<_>>()?;
            }
            ["fan_in", v] => spec.fan_in = num(v, line)?,
            ["delay", v] => spec.delay = num(v, line)?,
            ["weight", v] => spec.weight = num(v, line)?,
            ["probe", v] => probe = num(v, line)?,
            ["horizon", v] => horizon = Some(num(v, line)?),
            ["expressway", a, "->", b] => spec.expressways.push(Expressway { from: node(a, line)?, to: node(b, line)? }),
            [kw, ..] => return Err(HarnessError::parse(line, format!("unrecognised directive {kw:?}"))),
        }
    }
    if spec.layer_sizes.is_empty() {
        return Err(HarnessError::parse(0, "missing `layers` directive"));
    }
    let horizon = horizon.unwrap_or(spec.layer_sizes.len() as u64 * u64::from(spec.delay) + 2);
    Ok(TopoFile { spec, probe, horizon })
}

pub fn build(file: &TopoFile, params: NetParams) -> Result<Sandglass> {
    Ok(build_sandglass(&file.spec, params)?)
}

/// Tab-separated per-neuron table, highest kernel score first.
pub fn report(file: &TopoFile, sg: &Sandglass) -> Result<String> {
    let ranked = find_kernel(&sg.net, sg.inputs(), sg.outputs())?;
    let positions = position_report(&sg.net, sg.inputs(), sg.outputs(), file.probe, file.horizon)?;
    let layer_of = |id| sg.layers.iter().position(|l| l.contains(&id)).unwrap_or(usize::MAX);
    let waist = sg.waist();
    let mut out = String::new();
    let _ = writeln!(out, "# layers {:?} synapses {} edge_hash {:016x}", file.spec.layer_sizes, sg.net.synapses().len(), sg.net.edge_hash());
    let _ = writeln!(out, "neuron\tlayer\tscore\tdistance\treach\tinfluence\tautonomy");
    for (id, score) in &ranked {
        let p = &positions[id.index()];
        let dist = p.distance.map_or("-".to_string(), |d| d.to_string());
        let _ = writeln!(out, "{id}\t{}\t{score}\t{dist}\t{}\t{}\t{}", layer_of(*id), p.reach, p.influence, p.autonomy);
    }
    let top: Vec<_> = ranked.iter().take(waist.len()).map(|r| r.0).collect();
    let waist_on_top = top.iter().all(|id| waist.contains(id));
    let _ = writeln!(out, "# kernel {}", top.iter().map(|id| id.to_string()).collect::<Vec<_>>().join(" "));
    let _ = writeln!(out, "# waist_on_top {waist_on_top}");
    Ok(out)
}
