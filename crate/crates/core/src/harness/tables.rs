//! Generalization tables computed from run records.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;

use super::RunRecord;
use crate::error::{Error, Result};
use crate::generalization::{
    compare_methods, detect_negative_transfer_cells, round2, Comparison, GeneralizationReport,
    Method, MetricKind, NegativeTransfer, PartialCell,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
    Text,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            "text" => Ok(OutputFormat::Text),
            other => Err(Error::Config(format!("unknown format {other:?}"))),
        }
    }
}

/// Everything derived from one set of records.
///
/// Values are kept at full precision; the CSV and text renderings round
/// half-up to two decimals, the JSON rendering does not.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeneralizationTables {
    /// Domains in order of first appearance.
    pub domains: Vec<String>,
    pub methods: Vec<Method>,
    /// One per ordered cross pair, method and metric.
    pub partial: Vec<PartialCell>,
    /// One per unordered pair with both directions, method and metric.
    pub complete: Vec<GeneralizationReport>,
    /// Transfer method as alpha where one takes part.
    pub comparisons: Vec<Comparison>,
    pub negative_transfer: Vec<NegativeTransfer>,
}

type RunKey<'a> = (&'a str, &'a str, Method);

pub fn emit_generalization_tables(records: &[RunRecord]) -> Result<GeneralizationTables> {
    let mut domains: Vec<String> = Vec::new();
    let mut index: HashMap<RunKey, &RunRecord> = HashMap::new();
    for r in records {
        for name in [&r.source, &r.target] {
            if !domains.contains(name) {
                domains.push(name.clone());
            }
        }
        if index.insert((&r.source, &r.target, r.method), r).is_some() {
            return Err(Error::Data(format!(
                "more than one record for {}→{} {}",
                r.source, r.target, r.method
            )));
        }
    }
    let methods: Vec<Method> = Method::ALL
        .into_iter()
        .filter(|m| records.iter().any(|r| r.method == *m))
        .collect();

    let value = |r: &RunRecord, metric: MetricKind| match metric {
        MetricKind::Auc => r.auc,
        MetricKind::Eer => r.eer,
    };

    let mut partial = Vec::new();
    let mut cell_at: HashMap<(usize, usize, Method, MetricKind), f64> = HashMap::new();
    for &method in &methods {
        for (si, s) in domains.iter().enumerate() {
            for (ti, t) in domains.iter().enumerate() {
                if si == ti {
                    continue;
                }
                let Some(cross) = index.get(&(s.as_str(), t.as_str(), method)) else {
                    continue;
                };
                let origin = index.get(&(s.as_str(), s.as_str(), method)).ok_or_else(|| {
                    Error::Config(format!(
                        "missing self-pair run {s}→{s} ({method}) needed for {s}→{t}"
                    ))
                })?;
                for metric in MetricKind::ALL {
                    let g = (value(origin, metric) - value(cross, metric)).abs();
                    cell_at.insert((si, ti, method, metric), g);
                    partial.push(PartialCell {
                        source: s.clone(),
                        target: t.clone(),
                        metric,
                        method,
                        g_part: g,
                    });
                }
            }
        }
    }

    let mut complete = Vec::new();
    for &method in &methods {
        for a in 0..domains.len() {
            for b in a + 1..domains.len() {
                for metric in MetricKind::ALL {
                    if let (Some(&ab), Some(&ba)) = (
                        cell_at.get(&(a, b, method, metric)),
                        cell_at.get(&(b, a, method, metric)),
                    ) {
                        complete.push(GeneralizationReport::from_parts(
                            domains[a].clone(),
                            domains[b].clone(),
                            metric,
                            method,
                            ab,
                            ba,
                        )?);
                    }
                }
            }
        }
    }

    let mut comparisons = Vec::new();
    for a in 0..domains.len() {
        for b in a + 1..domains.len() {
            for metric in MetricKind::ALL {
                let of = |m: Method| {
                    complete.iter().find(|r| {
                        r.method == m
                            && r.metric == metric
                            && r.domain_a == domains[a]
                            && r.domain_b == domains[b]
                    })
                };
                for (i, &alpha) in methods.iter().enumerate().rev() {
                    for &beta in methods[..i].iter().rev() {
                        if let (Some(ra), Some(rb)) = (of(alpha), of(beta)) {
                            comparisons.push(compare_methods(ra, rb)?);
                        }
                    }
                }
            }
        }
    }

    let mut negative_transfer = Vec::new();
    for tl in partial.iter().filter(|c| c.method.is_transfer()) {
        let baselines: Vec<PartialCell> = partial
            .iter()
            .filter(|c| {
                !c.method.is_transfer()
                    && c.source == tl.source
                    && c.target == tl.target
                    && c.metric == tl.metric
            })
            .cloned()
            .collect();
        if !baselines.is_empty() {
            negative_transfer.extend(detect_negative_transfer_cells(tl, &baselines)?);
        }
    }

    Ok(GeneralizationTables {
        domains,
        methods,
        partial,
        complete,
        comparisons,
        negative_transfer,
    })
}

fn r2(x: f64) -> String {
    format!("{:.2}", round2(x))
}

impl GeneralizationTables {
    /// `pair_a,pair_b,method,metric,g_part_ab,g_part_ba,g_comp`
    pub fn generalization_csv(&self) -> String {
        let mut out = String::from("pair_a,pair_b,method,metric,g_part_ab,g_part_ba,g_comp\n");
        for r in &self.complete {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                r.domain_a,
                r.domain_b,
                r.method,
                r.metric,
                r2(r.g_part_ab),
                r2(r.g_part_ba),
                r2(r.g_comp)
            );
        }
        out
    }

    /// `source,target,method,metric,g_part`
    pub fn partial_csv(&self) -> String {
        let mut out = String::from("source,target,method,metric,g_part\n");
        for c in &self.partial {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                c.source,
                c.target,
                c.method,
                c.metric,
                r2(c.g_part)
            );
        }
        out
    }

    pub fn verdicts_csv(&self) -> String {
        let mut out = String::from("pair_a,pair_b,metric,alpha,beta,ab,ba,comp,verdict\n");
        for c in &self.comparisons {
            let w = |w| serde_json::to_value(w).ok().and_then(|v| v.as_str().map(String::from));
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                c.domain_a,
                c.domain_b,
                c.metric,
                c.alpha,
                c.beta,
                w(c.ab).unwrap_or_default(),
                w(c.ba).unwrap_or_default(),
                w(c.comp).unwrap_or_default(),
                c.verdict.label(c.alpha, c.beta)
            );
        }
        out
    }

    pub fn negative_transfer_csv(&self) -> String {
        let mut out = String::from(
            "source,target,metric,transfer_method,baseline_method,transfer_g_part,baseline_g_part,flagged\n",
        );
        for n in &self.negative_transfer {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                n.source,
                n.target,
                n.metric,
                n.transfer_method,
                n.baseline_method,
                r2(n.transfer_g_part),
                r2(n.baseline_g_part),
                n.flagged
            );
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self)
            .map(|s| s + "\n")
            .map_err(|e| Error::Format(format!("tables json: {e}")))
    }

    /// Aligned plain-text tables: one column per method and metric.
    pub fn to_text(&self) -> String {
        let mut cols = Vec::new();
        for &m in &self.methods {
            for metric in MetricKind::ALL {
                cols.push((m, metric));
            }
        }
        let header: Vec<String> = cols
            .iter()
            .map(|(m, k)| format!("{} {}", m, k).to_uppercase())
            .collect();

        let mut out = String::new();
        let mut rows: Vec<(String, Vec<String>)> = Vec::new();
        for s in &self.domains {
            for t in &self.domains {
                let cells: Vec<String> = cols
                    .iter()
                    .map(|&(m, k)| {
                        self.partial
                            .iter()
                            .find(|c| &c.source == s && &c.target == t && c.method == m && c.metric == k)
                            .map(|c| r2(c.g_part))
                            .unwrap_or_else(|| "-".into())
                    })
                    .collect();
                if cells.iter().any(|c| c != "-") {
                    rows.push((format!("{s} -> {t}"), cells));
                }
            }
        }
        write_block(&mut out, "Partial generalization G_part (%)", &header, &rows);

        let mut rows = Vec::new();
        for (a, da) in self.domains.iter().enumerate() {
            for db in &self.domains[a + 1..] {
                let cells: Vec<String> = cols
                    .iter()
                    .map(|&(m, k)| {
                        self.complete
                            .iter()
                            .find(|r| &r.domain_a == da && &r.domain_b == db && r.method == m && r.metric == k)
                            .map(|r| r2(r.g_comp))
                            .unwrap_or_else(|| "-".into())
                    })
                    .collect();
                if cells.iter().any(|c| c != "-") {
                    rows.push((format!("({da}, {db})"), cells));
                }
            }
        }
        out.push('\n');
        write_block(&mut out, "Complete generalization G_comp (%)", &header, &rows);

        if !self.comparisons.is_empty() {
            out.push_str("\nMethod comparisons\n");
            for c in &self.comparisons {
                let _ = writeln!(
                    out,
                    "  ({}, {}) {} {} vs {}: {}",
                    c.domain_a,
                    c.domain_b,
                    c.metric.as_str().to_uppercase(),
                    c.alpha,
                    c.beta,
                    c.verdict.label(c.alpha, c.beta)
                );
            }
        }
        let flagged: Vec<_> = self.negative_transfer.iter().filter(|n| n.flagged).collect();
        if !flagged.is_empty() {
            out.push_str("\nNegative transfer\n");
            for n in flagged {
                let _ = writeln!(
                    out,
                    "  {} -> {} {}: {} {} > {} {}",
                    n.source,
                    n.target,
                    n.metric.as_str().to_uppercase(),
                    n.transfer_method,
                    r2(n.transfer_g_part),
                    n.baseline_method,
                    r2(n.baseline_g_part)
                );
            }
        }
        out
    }

    /// Writes the tables in `format` under `dir`, returning the paths.
    pub fn write(&self, dir: &Path, format: OutputFormat) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let files: Vec<(&str, String)> = match format {
            OutputFormat::Csv => vec![
                ("generalization.csv", self.generalization_csv()),
                ("gpart.csv", self.partial_csv()),
                ("verdicts.csv", self.verdicts_csv()),
                ("negative_transfer.csv", self.negative_transfer_csv()),
            ],
            OutputFormat::Json => vec![("generalization.json", self.to_json()?)],
            OutputFormat::Text => vec![("generalization.txt", self.to_text())],
        };
        files
            .into_iter()
            .map(|(name, body)| {
                let path = dir.join(name);
                std::fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
                Ok(path)
            })
            .collect()
    }
}

fn write_block(out: &mut String, title: &str, header: &[String], rows: &[(String, Vec<String>)]) {
    let _ = writeln!(out, "{title}");
    let first = rows.iter().map(|(l, _)| l.len()).max().unwrap_or(0).max(4);
    let widths: Vec<usize> = header
        .iter()
        .enumerate()
        .map(|(i, h)| rows.iter().map(|(_, c)| c[i].len()).max().unwrap_or(0).max(h.len()))
        .collect();
    let _ = write!(out, "{:first$}", "");
    for (h, w) in header.iter().zip(&widths) {
        let _ = write!(out, "  {h:>w$}");
    }
    out.push('\n');
    for (label, cells) in rows {
        let _ = write!(out, "{label:first$}");
        for (c, w) in cells.iter().zip(&widths) {
            let _ = write!(out, "  {c:>w$}");
        }
        out.push('\n');
    }
}
