//! Sentence scripting: order sentences along the flow into a beat sheet.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{NodeKind, ProcessModel};
use crate::sentence::Sentence;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ScriptError {
    #[error("{found} sentences for {expected} flow nodes")]
    CountMismatch { expected: usize, found: usize },
    #[error("model has no start event")]
    NoStartEvent,
    #[error("sentence {0} refers to a node that is not in the model")]
    UnknownNode(String),
    #[error("more than one sentence for node {0}")]
    DuplicateSentence(String),
}

/// How entries are numbered.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Numbering {
    /// Depth-first preorder from the start event, outgoing flows in document order.
    #[default]
    Dfs,
    /// Start event first, then the remaining reachable nodes in document order.
    List,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NextRef {
    pub id: u32,
    pub option_label: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BeatEntry {
    pub sentence: Sentence,
    pub next: Vec<NextRef>,
}

impl BeatEntry {
    pub fn id(&self) -> u32 {
        self.sentence.id
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BeatSheet {
    pub model_ref: String,
    pub entries: Vec<BeatEntry>,
}

impl BeatSheet {
    pub fn entry(&self, id: u32) -> Option<&BeatEntry> {
        self.entries.iter().find(|e| e.id() == id)
    }

    /// "Next" cell text: `6 - 5`, or `-` for none.
    pub fn next_cell(entry: &BeatEntry) -> String {
        if entry.next.is_empty() {
            "-".to_owned()
        } else {
            entry.next.iter().map(|n| n.id.to_string()).collect::<Vec<_>>().join(" - ")
        }
    }

    pub fn to_csv(&self) -> String {
        let rows = self.entries.iter().map(|e| {
            (e.id(), e.sentence.rendered.as_str(), e.sentence.source_kind.column_name(), BeatSheet::next_cell(e))
        });
        table_csv(rows)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&crate::Versioned::new(self)).expect("beat sheet serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        let doc: crate::Versioned<BeatSheet> = serde_json::from_str(text)?;
        Ok(doc.body)
    }
}

/// Sentence list as a table with an empty "Next" column.
pub fn sentences_csv(sentences: &[Sentence]) -> String {
    table_csv(sentences.iter().map(|s| (s.id, s.rendered.as_str(), s.source_kind.column_name(), String::new())))
}

fn table_csv<'a>(rows: impl Iterator<Item = (u32, &'a str, &'static str, String)>) -> String {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(["#", "Sentences", "BPMN Element", "Next"]).expect("in-memory write");
    for (id, text, kind, next) in rows {
        w.write_record([id.to_string().as_str(), text, kind, next.as_str()]).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 csv")
}

/// Visit order of flow-node indices reachable from `start`.
fn visit_order(model: &ProcessModel, start: usize, numbering: Numbering) -> Vec<usize> {
    let adj = model.successor_indices();
    let mut seen = vec![false; adj.len()];
    let mut order = Vec::new();
    let mut stack = vec![start];
    while let Some(n) = stack.pop() {
        if seen[n] {
            continue;
        }
        seen[n] = true;
        order.push(n);
        // Reverse so the first outgoing flow is popped first.
        for &m in adj[n].iter().rev() {
            if !seen[m] {
                stack.push(m);
            }
        }
    }
    if numbering == Numbering::List {
        order[1..].sort_by_key(|&i| model.flow_nodes[i].document_order);
    }
    order
}

/// Order sentences into a beat sheet.
///
/// Only nodes reachable from the first start event get entries; the rest are
/// reported by [`check_completeness`].
pub fn script_sentences(
    model: &ProcessModel,
    sentences: &[Sentence],
    numbering: Numbering,
) -> Result<BeatSheet, ScriptError> {
    if sentences.len() != model.flow_nodes.len() {
        return Err(ScriptError::CountMismatch { expected: model.flow_nodes.len(), found: sentences.len() });
    }
    let mut by_node: HashMap<&str, &Sentence> = HashMap::new();
    for s in sentences {
        if model.node(&s.source_node).is_none() {
            return Err(ScriptError::UnknownNode(s.source_node.clone()));
        }
        if by_node.insert(s.source_node.as_str(), s).is_some() {
            return Err(ScriptError::DuplicateSentence(s.source_node.clone()));
        }
    }
    let start =
        model.flow_nodes.iter().position(|n| n.kind == NodeKind::StartEvent).ok_or(ScriptError::NoStartEvent)?;

    let order = visit_order(model, start, numbering);
    let entry_id: HashMap<&str, u32> =
        order.iter().enumerate().map(|(pos, &i)| (model.flow_nodes[i].id.as_str(), pos as u32 + 1)).collect();

    let entries = order
        .iter()
        .map(|&i| {
            let node = &model.flow_nodes[i];
            let mut sentence = by_node[node.id.as_str()].clone();
            sentence.id = entry_id[node.id.as_str()];
            let labelled = node.kind == NodeKind::ExclusiveGateway && model.is_diverging(node);
            let next = model
                .outgoing(&node.id)
                .map(|f| NextRef {
                    id: entry_id[f.target.as_str()],
                    option_label: if labelled { f.condition_label.clone() } else { None },
                })
                .collect();
            BeatEntry { sentence, next }
        })
        .collect();

    Ok(BeatSheet { model_ref: model.process_id.clone(), entries })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompletenessReport {
    pub expected: usize,
    pub found: usize,
    pub missing_node_ids: Vec<String>,
}

impl CompletenessReport {
    pub fn is_complete(&self) -> bool {
        self.missing_node_ids.is_empty()
    }
}

/// Compare a beat sheet against the flow nodes of its model.
pub fn check_completeness(model: &ProcessModel, sheet: &BeatSheet) -> CompletenessReport {
    let covered: HashSet<&str> = sheet.entries.iter().map(|e| e.sentence.source_node.as_str()).collect();
    CompletenessReport {
        expected: model.flow_nodes.len(),
        found: sheet.entries.len(),
        missing_node_ids: model
            .flow_nodes
            .iter()
            .filter(|n| !covered.contains(n.id.as_str()))
            .map(|n| n.id.clone())
            .collect(),
    }
}
