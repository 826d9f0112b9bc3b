//! Completeness (MQ1) and correctness (MQ2) of a beat sheet against a gold sheet.

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::beat_sheet::{BeatEntry, BeatSheet};
use crate::sentence::ComplementOrigin;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MetricsError {
    #[error("candidate is for model {candidate}, gold is for model {gold}")]
    ModelMismatch { candidate: String, gold: String },
    #[error("no reports to summarize")]
    EmptyInput,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mismatch {
    pub entry_id: u32,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub qtd_exp: usize,
    pub qtd_ext: usize,
    pub qtd_corr: usize,
    pub mq1: f64,
    pub mq2: f64,
    pub mismatches: Vec<Mismatch>,
}

impl MetricsReport {
    pub fn from_counts(qtd_exp: usize, qtd_ext: usize, qtd_corr: usize) -> Self {
        let ratio = |n: usize| if qtd_exp == 0 { 0.0 } else { n as f64 / qtd_exp as f64 };
        MetricsReport { qtd_exp, qtd_ext, qtd_corr, mq1: ratio(qtd_ext), mq2: ratio(qtd_corr), mismatches: Vec::new() }
    }
}

/// Case-folded, trimmed, quote-free, single-spaced text.
pub fn normalize_text(text: &str) -> String {
    let stripped: String =
        text.chars().filter(|c| !matches!(c, '"' | '\'' | '\u{201C}' | '\u{201D}' | '\u{2018}' | '\u{2019}')).collect();
    stripped.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
}

fn complement_bag(entry: &BeatEntry) -> Vec<(ComplementOrigin, String)> {
    let mut bag: Vec<_> = entry.sentence.complements.iter().map(|c| (c.origin, normalize_text(&c.text))).collect();
    bag.sort();
    bag
}

/// Score `candidate` against `gold`.
///
/// An entry is correct when it names a gold node not already matched, and
/// its subject kind, complement multiset and next targets agree with the
/// gold entry for that node. Next ids are resolved through the candidate's
/// own numbering, falling back to the gold numbering for ids the candidate
/// does not define.
pub fn score_sheet(candidate: &BeatSheet, gold: &BeatSheet) -> Result<MetricsReport, MetricsError> {
    if candidate.model_ref != gold.model_ref {
        return Err(MetricsError::ModelMismatch {
            candidate: candidate.model_ref.clone(),
            gold: gold.model_ref.clone(),
        });
    }
    let gold_by_node: HashMap<&str, &BeatEntry> =
        gold.entries.iter().map(|e| (e.sentence.source_node.as_str(), e)).collect();
    let gold_node_of: HashMap<u32, &str> =
        gold.entries.iter().map(|e| (e.id(), e.sentence.source_node.as_str())).collect();
    let cand_node_of: HashMap<u32, &str> =
        candidate.entries.iter().map(|e| (e.id(), e.sentence.source_node.as_str())).collect();

    let gold_next = |e: &BeatEntry| -> HashSet<String> {
        e.next.iter().map(|n| gold_node_of.get(&n.id).map_or_else(|| format!("#{}", n.id), |s| s.to_string())).collect()
    };
    let cand_next = |e: &BeatEntry| -> HashSet<String> {
        e.next
            .iter()
            .map(|n| {
                cand_node_of
                    .get(&n.id)
                    .or_else(|| gold_node_of.get(&n.id))
                    .map_or_else(|| format!("#{}", n.id), |s| s.to_string())
            })
            .collect()
    };

    let mut matched: HashSet<&str> = HashSet::new();
    let mut mismatches = Vec::new();
    let mut correct = 0;
    for entry in &candidate.entries {
        let node = entry.sentence.source_node.as_str();
        let reason = match gold_by_node.get(node) {
            None => Some(format!("node {node} is not in the gold sheet")),
            Some(_) if matched.contains(node) => Some(format!("duplicate entry for node {node}")),
            Some(g) => {
                if entry.sentence.subject_kind != g.sentence.subject_kind {
                    Some("subject kind differs".to_owned())
                } else if complement_bag(entry) != complement_bag(g) {
                    Some("complements differ".to_owned())
                } else if cand_next(entry) != gold_next(g) {
                    Some("next entries differ".to_owned())
                } else {
                    None
                }
            }
        };
        matched.insert(node);
        match reason {
            None => correct += 1,
            Some(reason) => mismatches.push(Mismatch { entry_id: entry.id(), reason }),
        }
    }

    let mut report = MetricsReport::from_counts(gold.entries.len(), candidate.entries.len(), correct);
    report.mismatches = mismatches;
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stats {
    pub mean: f64,
    pub mode: f64,
    /// Sample standard deviation (n - 1); zero for a single value.
    pub std_dev: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub count: usize,
    pub mq1: Stats,
    pub mq2: Stats,
}

fn stats(values: &[f64]) -> Stats {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std_dev = if values.len() < 2 {
        0.0
    } else {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    };
    // Mode over values rounded to hundredths; BTreeMap order breaks ties low.
    let mut counts: BTreeMap<i64, usize> = BTreeMap::new();
    for v in values {
        *counts.entry((v * 100.0).round() as i64).or_default() += 1;
    }
    let best = counts.values().copied().max().unwrap_or(0);
    let mode_cents = counts.iter().find(|(_, &c)| c == best).map(|(&k, _)| k).unwrap_or(0);
    Stats { mean, mode: mode_cents as f64 / 100.0, std_dev }
}

pub fn summarize(reports: &[MetricsReport]) -> Result<Summary, MetricsError> {
    if reports.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    let mq1: Vec<f64> = reports.iter().map(|r| r.mq1).collect();
    let mq2: Vec<f64> = reports.iter().map(|r| r.mq2).collect();
    Ok(Summary { count: reports.len(), mq1: stats(&mq1), mq2: stats(&mq2) })
}

/// Metrics table, one row per participant.
pub fn metrics_csv<'a>(rows: impl IntoIterator<Item = (&'a str, &'a MetricsReport)>) -> String {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(["participant", "qtd_ext", "qtd_corr", "qtd_exp", "mq1", "mq2"]).expect("in-memory write");
    for (name, r) in rows {
        w.write_record([
            name.to_owned(),
            r.qtd_ext.to_string(),
            r.qtd_corr.to_string(),
            r.qtd_exp.to_string(),
            format!("{:.2}", r.mq1),
            format!("{:.2}", r.mq2),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 csv")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    #[test]
    fn single_report_summary() {
        let s = summarize(&[MetricsReport::from_counts(26, 26, 26)]).unwrap();
        assert_eq!(s.mq1.mean, 1.0);
        assert_eq!(s.mq1.mode, 1.0);
        assert_eq!(s.mq1.std_dev, 0.0);
    }

    #[test]
    fn two_report_summary() {
        // Mean 0.75; deviations +-0.25; sample variance 2 * 0.0625 / 1 = 0.125.
        let s = summarize(&[MetricsReport::from_counts(2, 1, 1), MetricsReport::from_counts(2, 2, 2)]).unwrap();
        assert!(close(s.mq1.mean, 0.75));
        assert!(close(s.mq1.std_dev, 0.125f64.sqrt()));
        // One of each: tie broken toward the smaller value.
        assert_eq!(s.mq1.mode, 0.5);
    }

    #[test]
    fn empty_summary() {
        assert_eq!(summarize(&[]).unwrap_err(), MetricsError::EmptyInput);
    }

    #[test]
    fn normalization() {
        assert_eq!(normalize_text("  \u{201C}Check  The Book\u{201D} "), "check the book");
        assert_eq!(normalize_text("'I have money'"), "i have money");
    }

    #[test]
    fn csv_layout() {
        let r = MetricsReport::from_counts(26, 24, 5);
        assert_eq!(metrics_csv([("07", &r)]), "participant,qtd_ext,qtd_corr,qtd_exp,mq1,mq2\n07,24,5,26,0.92,0.19\n");
    }
}
