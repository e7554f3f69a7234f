//! Per-tick trace files.
//!
//! CSV: header `tick,fired,<probe labels...>`; `fired` holds space-separated
//! neuron indices. JSONL: a header object
//! `{"columns":[...],"format":"cortexsim-trace","version":1}` followed by one
//! `{"fired":[..],"tick":..,"values":[..]}` object per tick (keys sorted). Both formats print
//! floats in shortest round-trip form, so parsing either yields identical
//! values.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use cortexsim_core::network::TraceRow;
use cortexsim_core::NeuronId;
use serde_json::json;

use crate::error::{HarnessError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum TraceFormat {
    #[default]
    Csv,
    Jsonl,
}

impl TraceFormat {
    pub fn extension(self) -> &'static str {
        match self {
            TraceFormat::Csv => "csv",
            TraceFormat::Jsonl => "jsonl",
        }
    }
}

impl FromStr for TraceFormat {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "csv" => Ok(TraceFormat::Csv),
            "jsonl" => Ok(TraceFormat::Jsonl),
            _ => Err(format!("unknown trace format {s:?} (csv|jsonl)")),
        }
    }
}

fn fired_field(fired: &[NeuronId]) -> String {
    fired.iter().map(|id| id.0.to_string()).collect::<Vec<_>>().join(" ")
}

pub fn render_csv(labels: &[String], rows: &[TraceRow]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| HarnessError::Usage(format!("csv: {e}"));
    let mut header = vec!["tick".to_string(), "fired".to_string()];
    header.extend(labels.iter().cloned());
    w.write_record(&header).map_err(csv_err)?;
    for r in rows {
        let mut rec = vec![r.tick.to_string(), fired_field(&r.fired)];
        rec.extend(r.values.iter().map(|v| v.to_string()));
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.into_inner().map_err(|e| HarnessError::Usage(format!("csv: {e}")))
}

pub fn render_jsonl(labels: &[String], rows: &[TraceRow]) -> Vec<u8> {
    let mut out = Vec::new();
    let header = json!({"format": "cortexsim-trace", "version": 1, "columns": labels});
    out.extend(header.to_string().bytes());
    out.push(b'\n');
    for r in rows {
        let fired: Vec<u32> = r.fired.iter().map(|id| id.0).collect();
        let row = json!({"tick": r.tick, "fired": fired, "values": r.values});
        out.extend(row.to_string().bytes());
        out.push(b'\n');
    }
    out
}

pub fn render(format: TraceFormat, labels: &[String], rows: &[TraceRow]) -> Result<Vec<u8>> {
    match format {
        TraceFormat::Csv => render_csv(labels, rows),
        TraceFormat::Jsonl => Ok(render_jsonl(labels, rows)),
    }
}

pub fn write_trace(path: &Path, format: TraceFormat, labels: &[String], rows: &[TraceRow]) -> Result<()> {
    let bytes = render(format, labels, rows)?;
    let file = File::create(path).map_err(|e| HarnessError::io(path, e))?;
    let mut w = BufWriter::new(file);
    w.write_all(&bytes).and_then(|_| w.flush()).map_err(|e| HarnessError::io(path, e))
}

/// Reads either format back into labels and rows.
pub fn parse(format: TraceFormat, text: &str) -> Result<(Vec<String>, Vec<TraceRow>)> {
    let bad = |m: String| HarnessError::Usage(format!("trace: {m}"));
    match format {
        TraceFormat::Csv => {
            let mut r = csv::Reader::from_reader(text.as_bytes());
            let header = r.headers().map_err(|e| bad(e.to_string()))?.clone();
            let labels = header.iter().skip(2).map(str::to_string).collect();
            let mut rows = Vec::new();
            for rec in r.records() {
                let rec = rec.map_err(|e| bad(e.to_string()))?;
                let tick = rec[0].parse().map_err(|_| bad("tick".into()))?;
                let fired = rec[1].split_whitespace().map(|s| s.parse().map(NeuronId)).collect::<Result<_, _>>().map_err(|_| bad("fired".into()))?;
                let values = rec.iter().skip(2).map(str::parse).collect::<Result<_, _>>().map_err(|_| bad("value".into()))?;
                rows.push(TraceRow { tick, fired, values });
            }
            Ok((labels, rows))
        }
        TraceFormat::Jsonl => {
            let mut lines = text.lines();
            let header: serde_json::Value = serde_json::from_str(lines.next().ok_or_else(|| bad("empty".into()))?).map_err(|e| bad(e.to_string()))?;
            let labels = header["columns"].as_array().ok_or_else(|| bad("columns".into()))?.iter().map(|v| v.as_str().unwrap_or("").to_string()).collect();
            let mut rows = Vec::new();
            for l in lines {
                let v: serde_json::Value = serde_json::from_str(l).map_err(|e| bad(e.to_string()))?;
                let tick = v["tick"].as_u64().ok_or_else(|| bad("tick".into()))?;
                let fired = v["fired"].as_array().ok_or_else(|| bad("fired".into()))?.iter().map(|x| NeuronId(x.as_u64().unwrap_or(0) as u32)).collect();
                let values = v["values"].as_array().ok_or_else(|| bad("values".into()))?.iter().map(|x| x.as_f64().unwrap_or(f64::NAN)).collect();
                rows.push(TraceRow { tick, fired, values });
            }
            Ok((labels, rows))
        }
    }
}
