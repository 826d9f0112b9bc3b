#![allow(dead_code)]

use std::collections::{BTreeSet, HashMap};
use std::path::PathBuf;

use syp_core::beat_sheet::NextRef;
use syp_core::compile::Exit;
use syp_core::sentence::SubjectKind;
use syp_core::{
    refine_sentence, BeatSheet, CompiledNarrative, Mode, Numbering, PipelineOutput, ProcessModel, VerbLexicon,
};

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub fn read_fixture(name: &str) -> String {
    std::fs::read_to_string(fixture(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

pub fn pipeline(name: &str, numbering: Numbering) -> PipelineOutput {
    syp_core::run_pipeline(read_fixture(name).as_bytes(), Mode::Strict, numbering, &VerbLexicon::default())
        .unwrap_or_else(|e| panic!("{name}: {e}"))
}

pub fn study_gold() -> BeatSheet {
    pipeline("study26.bpmn", Numbering::Dfs).sheet
}

/// One participant row of the study summary.
#[derive(Debug, Clone, serde::Deserialize)]
pub struct StudyRow {
    pub participant: String,
    pub qtd_ext: usize,
    pub qtd_corr: usize,
    pub mq1: f64,
    pub mq2: f64,
}

impl StudyRow {
    /// Correct-entry count the fixture sheet is built with. The ratio wins
    /// where it disagrees with the count (participant 10).
    pub fn fixture_corr(&self, qtd_exp: usize) -> usize {
        (self.mq2 * qtd_exp as f64).round() as usize
    }
}

pub fn study_rows() -> Vec<StudyRow> {
    let mut reader = csv::Reader::from_path(fixture("study/summary.csv")).expect("summary.csv");
    reader.deserialize().map(|r| r.expect("summary row")).collect()
}

/// A participant sheet: the gold sheet truncated to `ext` entries, with all
/// but `corr` of them broken structurally. Some of the intact entries get a
/// lexical verb change, which scoring must tolerate.
pub fn corrupt_sheet(gold: &BeatSheet, ext: usize, corr: usize) -> BeatSheet {
    assert!(corr <= ext && ext <= gold.entries.len());
    let mut entries = gold.entries[..ext].to_vec();
    let broken = ext - corr;
    for (k, entry) in entries.iter_mut().rev().take(broken).enumerate() {
        let id = entry.id();
        if k % 2 == 0 {
            let c = entry.sentence.complements.first_mut().expect("every sentence has a complement");
            c.text = format!("{} later", c.text);
        } else if entry.next.is_empty() {
            entry.next.push(NextRef { id: 1, option_label: None });
        } else {
            entry.next[0].id = id;
        }
        entry.sentence.rendered = syp_core::sentence::render(&entry.sentence);
    }
    let sentences: Vec<_> = entries.iter().map(|e| e.sentence.clone()).collect();
    let mut refined = sentences.clone();
    for e in entries.iter().take(corr).step_by(3) {
        if e.sentence.subject_kind == SubjectKind::Simple && e.sentence.verb == "needs" {
            refined = refine_sentence(&refined, e.id(), Some("should"), None).expect("verb refinement");
        }
    }
    for (e, s) in entries.iter_mut().zip(refined) {
        e.sentence = s;
    }
    BeatSheet { model_ref: gold.model_ref.clone(), entries }
}

/// Node-id paths from the start event to any end event in the flow graph.
pub fn model_paths(model: &ProcessModel) -> BTreeSet<Vec<String>> {
    let mut succ: HashMap<&str, Vec<&str>> = HashMap::new();
    for f in &model.sequence_flows {
        succ.entry(f.source.as_str()).or_default().push(f.target.as_str());
    }
    let start = model.start_events().next().expect("start event").id.as_str();
    let mut out = BTreeSet::new();
    let mut stack = vec![vec![start]];
    while let Some(path) = stack.pop() {
        let last = *path.last().expect("non-empty");
        match succ.get(last) {
            None => {
                out.insert(path.iter().map(|s| s.to_string()).collect());
            }
            Some(next) => {
                for n in next {
                    let mut p = path.clone();
                    p.push(n);
                    stack.push(p);
                }
            }
        }
    }
    out
}

/// Source-node paths from the start knot to any `END` in a narrative.
pub fn narrative_paths(n: &CompiledNarrative) -> BTreeSet<Vec<String>> {
    let by_id: HashMap<&str, _> = n.knots.iter().map(|k| (k.id.as_str(), k)).collect();
    let mut out = BTreeSet::new();
    let mut stack = vec![vec![n.start_knot.as_str()]];
    while let Some(path) = stack.pop() {
        let knot = by_id[path.last().expect("non-empty")];
        let targets: Vec<&str> = match &knot.exit {
            Exit::End => {
                out.insert(path.iter().map(|k| by_id[k].source_node.clone()).collect());
                continue;
            }
            Exit::Divert { target } => vec![target.as_str()],
            Exit::Choices { choices } => choices.iter().map(|c| c.target.as_str()).collect(),
        };
        for t in targets {
            let mut p = path.clone();
            p.push(t);
            stack.push(p);
        }
    }
    out
}

/// Flow-node element count by scanning the XML text for opening tags.
pub fn count_flow_node_tags(xml: &str) -> usize {
    const TAGS: &[&str] = &[
        "startEvent",
        "endEvent",
        "task",
        "userTask",
        "manualTask",
        "serviceTask",
        "scriptTask",
        "sendTask",
        "receiveTask",
        "businessRuleTask",
        "exclusiveGateway",
        "parallelGateway",
        "intermediateCatchEvent",
        "intermediateThrowEvent",
    ];
    xml.split('<')
        .skip(1)
        .filter(|chunk| {
            let name: String = chunk.chars().take_while(|c| !c.is_whitespace() && *c != '>' && *c != '/').collect();
            let local = name.rsplit(':').next().unwrap_or("");
            TAGS.contains(&local)
        })
        .count()
}
