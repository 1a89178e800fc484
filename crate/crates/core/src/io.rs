//! On-disk formats: run-summary CSV, JSON-lines slot log, offload-share CSV
//! and per-slot energy traces.
//!
//! Summary columns, for a fleet of `K` devices:
//!
//! ```text
//! label,policy,v,
//! ue0_energy_j,ue0_delay_s,ue0_accuracy,ue0_offload_frac, ... (K groups),
//! es_energy_j,weighted_energy_j,max_virtual_rate,converged,drift_violations
//! ```

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::engine::{RunSummary, SlotRecord};
use crate::error::{Error, Result};

const UE_FIELDS: [&str; 4] = ["energy_j", "delay_s", "accuracy", "offload_frac"];
const HEAD: [&str; 3] = ["label", "policy", "v"];
const TAIL: [&str; 5] = [
    "es_energy_j",
    "weighted_energy_j",
    "max_virtual_rate",
    "converged",
    "drift_violations",
];

/// Header of a summary CSV for `k` devices.
pub fn summary_header(k: usize) -> Vec<String> {
    let mut h: Vec<String> = HEAD.iter().map(|s| s.to_string()).collect();
    for i in 0..k {
        h.extend(UE_FIELDS.iter().map(|f| format!("ue{i}_{f}")));
    }
    h.extend(TAIL.iter().map(|s| s.to_string()));
    h
}

/// One device's columns of a summary row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UeColumns {
    pub energy_j: f64,
    pub delay_s: f64,
    pub accuracy: f64,
    pub offload_frac: f64,
}

/// One parsed summary row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub label: String,
    pub policy: String,
    pub v: f64,
    pub ues: Vec<UeColumns>,
    pub es_energy_j: f64,
    pub weighted_energy_j: f64,
    pub max_virtual_rate: f64,
    pub converged: bool,
    pub drift_violations: u64,
}

impl From<&RunSummary> for SummaryRow {
    fn from(s: &RunSummary) -> Self {
        SummaryRow {
            label: s.label.clone(),
            policy: s.policy.clone(),
            v: s.v,
            ues: s
                .ues
                .iter()
                .map(|u| UeColumns {
                    energy_j: u.energy,
                    delay_s: u.delay,
                    accuracy: u.accuracy,
                    offload_frac: u.offload_frac,
                })
                .collect(),
            es_energy_j: s.es_energy,
            weighted_energy_j: s.weighted_energy,
            max_virtual_rate: s.max_virtual_rate,
            converged: s.converged,
            drift_violations: s.drift_violations,
        }
    }
}

impl SummaryRow {
    fn to_record(&self) -> Vec<String> {
        let mut r = vec![self.label.clone(), self.policy.clone(), self.v.to_string()];
        for u in &self.ues {
            r.extend([u.energy_j, u.delay_s, u.accuracy, u.offload_frac].map(|x| x.to_string()));
        }
        r.push(self.es_energy_j.to_string());
        r.push(self.weighted_energy_j.to_string());
        r.push(self.max_virtual_rate.to_string());
        r.push(self.converged.to_string());
        r.push(self.drift_violations.to_string());
        r
    }
}

/// Writes summaries to any writer. All rows must share the fleet size.
pub fn write_summaries_to<W: Write>(out: W, rows: &[RunSummary]) -> Result<()> {
    let k = rows.first().map_or(0, |r| r.ues.len());
    if let Some(bad) = rows.iter().find(|r| r.ues.len() != k) {
        return Err(Error::Contract(format!(
            "summary `{}` has {} devices, expected {k}",
            bad.label,
            bad.ues.len()
        )));
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(summary_header(k))?;
    for r in rows {
        w.write_record(SummaryRow::from(r).to_record())?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_summaries(path: &Path, rows: &[RunSummary]) -> Result<()> {
    write_summaries_to(File::create(path)?, rows)
}

fn bad_csv(msg: impl Into<String>) -> Error {
    Error::Contract(format!("summary csv: {}", msg.into()))
}

/// Parses a summary CSV written by [`write_summaries`].
pub fn read_summaries_from<R: std::io::Read>(input: R) -> Result<Vec<SummaryRow>> {
    let mut rdr = csv::Reader::from_reader(input);
    let header = rdr.headers()?.clone();
    let fixed = HEAD.len() + TAIL.len();
    if header.len() < fixed || !(header.len() - fixed).is_multiple_of(UE_FIELDS.len()) {
        return Err(bad_csv(format!("unexpected column count {}", header.len())));
    }
    let k = (header.len() - fixed) / UE_FIELDS.len();
    if header.iter().collect::<Vec<_>>() != summary_header(k) {
        return Err(bad_csv("header mismatch"));
    }
    let num = |s: &str| s.parse::<f64>().map_err(|e| bad_csv(format!("`{s}`: {e}")));
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let mut ues = Vec::with_capacity(k);
        for i in 0..k {
            let at = HEAD.len() + i * UE_FIELDS.len();
            ues.push(UeColumns {
                energy_j: num(&rec[at])?,
                delay_s: num(&rec[at + 1])?,
                accuracy: num(&rec[at + 2])?,
                offload_frac: num(&rec[at + 3])?,
            });
        }
        let t = HEAD.len() + k * UE_FIELDS.len();
        rows.push(SummaryRow {
            label: rec[0].to_string(),
            policy: rec[1].to_string(),
            v: num(&rec[2])?,
            ues,
            es_energy_j: num(&rec[t])?,
            weighted_energy_j: num(&rec[t + 1])?,
            max_virtual_rate: num(&rec[t + 2])?,
            converged: rec[t + 3]
                .parse()
                .map_err(|_| bad_csv(format!("`{}` is not a boolean", &rec[t + 3])))?,
            drift_violations: rec[t + 4]
                .parse()
                .map_err(|_| bad_csv(format!("`{}` is not a count", &rec[t + 4])))?,
        });
    }
    Ok(rows)
}

pub fn read_summaries(path: &Path) -> Result<Vec<SummaryRow>> {
    read_summaries_from(File::open(path)?)
}

/// Appends slot records as one JSON object per line.
pub struct SlotLogWriter<W: Write> {
    out: BufWriter<W>,
}

impl SlotLogWriter<File> {
    pub fn create(path: &Path) -> Result<Self> {
        Ok(SlotLogWriter::new(File::create(path)?))
    }
}

impl<W: Write> SlotLogWriter<W> {
    pub fn new(out: W) -> Self {
        SlotLogWriter {
            out: BufWriter::new(out),
        }
    }

    pub fn write(&mut self, record: &SlotRecord) -> Result<()> {
        serde_json::to_writer(&mut self.out, record)?;
        self.out.write_all(b"\n")?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<()> {
        self.out.flush()?;
        Ok(())
    }
}

pub fn read_slot_log(path: &Path) -> Result<Vec<SlotRecord>> {
    let mut out = Vec::new();
    for line in BufReader::new(File::open(path)?).lines() {
        let line = line?;
        if !line.trim().is_empty() {
            out.push(serde_json::from_str(&line)?);
        }
    }
    Ok(out)
}

/// One bar of an offload-share histogram.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OffloadRow {
    pub label: String,
    pub v: f64,
    pub ue: usize,
    /// Channel scenario tag of the device.
    pub channel: String,
    /// Percentage of the device's DUs that were offloaded.
    pub offload_pct: f64,
}

/// Energy spent by one device in one slot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyTraceRow {
    pub policy: String,
    pub slot: u64,
    pub ue: usize,
    pub energy_j: f64,
}

/// Writes any serializable rows as a headed CSV.
pub fn write_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_rows<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize().map(|x| x.map_err(Error::from)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_shape() {
        let h = summary_header(2);
        assert_eq!(h.len(), 3 + 8 + 5);
        assert_eq!(h[3], "ue0_energy_j");
        assert_eq!(h[10], "ue1_offload_frac");
        assert_eq!(h[11], "es_energy_j");
    }

    #[test]
    fn rejects_foreign_header() {
        let text = "a,b,c\n1,2,3\n";
        assert!(read_summaries_from(text.as_bytes()).is_err());
    }
}
