use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;

/// One logged communication round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub round: u64,
    /// Cumulative oracle calls after this round.
    pub calls: u64,
    /// Objective at the reported iterate.
    pub value: f64,
    /// Optimality gap: `f - f*` for minimization, the duality gap for games.
    /// Empty when no reference is available.
    pub gap: Option<f64>,
    /// Zero unless wall-clock recording is switched on, so traces stay
    /// byte-for-byte reproducible.
    pub elapsed_ms: u64,
    pub seed: u64,
    pub config_hash: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub rows: Vec<TraceRow>,
}

impl Trace {
    pub const HEADER: [&'static str; 7] = ["round", "calls", "value", "gap", "elapsed_ms", "seed", "config_hash"];

    pub fn push(&mut self, row: TraceRow) {
        self.rows.push(row);
    }

    pub fn last(&self) -> Option<&TraceRow> {
        self.rows.last()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(Self::HEADER)?;
        for r in &self.rows {
            let gap = r.gap.map(fmt_f64).unwrap_or_default();
            w.write_record([
                r.round.to_string(),
                r.calls.to_string(),
                fmt_f64(r.value),
                gap,
                r.elapsed_ms.to_string(),
                r.seed.to_string(),
                r.config_hash.clone(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(f))
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let mut r = csv::Reader::from_path(path)?;
        let mut rows = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            let parse = |i: usize| rec.get(i).unwrap_or("").to_string();
            let num = |i: usize| parse(i).parse::<f64>().unwrap_or(f64::NAN);
            rows.push(TraceRow {
                round: parse(0).parse().unwrap_or(0),
                calls: parse(1).parse().unwrap_or(0),
                value: num(2),
                gap: if parse(3).is_empty() { None } else { Some(num(3)) },
                elapsed_ms: parse(4).parse().unwrap_or(0),
                seed: parse(5).parse().unwrap_or(0),
                config_hash: parse(6),
            });
        }
        Ok(Self { rows })
    }
}

/// Shortest representation that round-trips.
fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}
