//! Run records on disk.
//!
//! Records use a long CSV layout, one metric per row:
//!
//! ```text
//! source,target,method,metric,value
//! Boat-Sea,Boat-River,tca,auc,94.87
//! Boat-Sea,Boat-River,tca,eer,5.12
//! ```
//!
//! Values are written in shortest round-trip form so re-reading a file gives
//! the same `f64`s, and timings live in a separate file so record files stay
//! byte-identical across runs.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use super::RunRecord;
use crate::error::{Error, Result};
use crate::generalization::{MetricKind, Method};

const HEADER: [&str; 5] = ["source", "target", "method", "metric", "value"];

/// Reads a records CSV, such as published result tables transcribed by hand.
///
/// Every (source, target, method) needs both an `auc` and an `eer` row.
/// Records come back in order of first appearance.
pub fn import_paper_tables(path: impl AsRef<Path>) -> Result<Vec<RunRecord>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    read_records(&text)
}

/// Parses records CSV text.
pub fn read_records(text: &str) -> Result<Vec<RunRecord>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header = reader
        .headers()
        .map_err(|e| Error::Format(format!("records header: {e}")))?;
    if header.iter().collect::<Vec<_>>() != HEADER {
        return Err(Error::Format(format!(
            "records header must be {}, got {}",
            HEADER.join(","),
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }

    type Key = (String, String, Method);
    let mut order: Vec<Key> = Vec::new();
    let mut values: HashMap<Key, [Option<f64>; 2]> = HashMap::new();

    for (line, row) in reader.records().enumerate() {
        let line = line + 2;
        let row = row.map_err(|e| Error::Format(format!("line {line}: {e}")))?;
        let source = row[0].to_string();
        let target = row[1].to_string();
        if source.is_empty() || target.is_empty() {
            return Err(Error::Format(format!("line {line}: empty domain name")));
        }
        let method: Method = row[2]
            .parse()
            .map_err(|e: Error| Error::Format(format!("line {line}: {e}")))?;
        let metric: MetricKind = row[3]
            .parse()
            .map_err(|e: Error| Error::Format(format!("line {line}: {e}")))?;
        let value: f64 = row[4]
            .parse()
            .map_err(|_| Error::Format(format!("line {line}: bad value {:?}", &row[4])))?;
        if !value.is_finite() || !(0.0..=100.0).contains(&value) {
            return Err(Error::Data(format!("line {line}: value {value} outside [0, 100]")));
        }

        let key = (source, target, method);
        let slot = values.entry(key.clone()).or_insert_with(|| {
            order.push(key.clone());
            [None, None]
        });
        let cell = &mut slot[metric as usize];
        if cell.is_some() {
            return Err(Error::Format(format!(
                "line {line}: duplicate row for {}→{} {method} {metric}",
                key.0, key.1
            )));
        }
        *cell = Some(value);
    }

    order
        .into_iter()
        .map(|key| {
            let [auc, eer] = values[&key];
            let missing = |m: MetricKind| {
                Error::Format(format!("{}→{} {} has no {m} row", key.0, key.1, key.2))
            };
            let auc = auc.ok_or_else(|| missing(MetricKind::Auc))?;
            let eer = eer.ok_or_else(|| missing(MetricKind::Eer))?;
            RunRecord::new(key.0, key.1, key.2, auc, eer)
        })
        .collect()
}

pub fn records_csv(records: &[RunRecord]) -> String {
    let mut out = HEADER.join(",");
    out.push('\n');
    for r in records {
        for (metric, v) in [(MetricKind::Auc, r.auc), (MetricKind::Eer, r.eer)] {
            let _ = writeln!(out, "{},{},{},{},{}", r.source, r.target, r.method, metric, v);
        }
    }
    out
}

#[derive(Serialize)]
struct RecordJson<'a> {
    source: &'a str,
    target: &'a str,
    method: Method,
    auc: f64,
    eer: f64,
}

pub fn records_json(records: &[RunRecord]) -> Result<String> {
    let rows: Vec<_> = records
        .iter()
        .map(|r| RecordJson {
            source: &r.source,
            target: &r.target,
            method: r.method,
            auc: r.auc,
            eer: r.eer,
        })
        .collect();
    serde_json::to_string_pretty(&rows)
        .map(|s| s + "\n")
        .map_err(|e| Error::Format(format!("records json: {e}")))
}

/// Per-stage wall times; records without timings are skipped.
pub fn timings_csv(records: &[RunRecord]) -> String {
    let mut out = String::from(
        "source,target,method,feature_load_ms,fit_projection_ms,fit_detector_ms,score_ms,fps\n",
    );
    for r in records {
        if let Some(t) = r.timings {
            let _ = writeln!(
                out,
                "{},{},{},{:.3},{:.3},{:.3},{:.3},{:.1}",
                r.source,
                r.target,
                r.method,
                t.feature_load_ms,
                t.fit_projection_ms,
                t.fit_detector_ms,
                t.score_ms,
                r.fps.unwrap_or(0.0)
            );
        }
    }
    out
}
