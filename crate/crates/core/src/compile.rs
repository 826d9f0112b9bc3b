//! Beat sheet to executable knot graph.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::beat_sheet::{BeatEntry, BeatSheet};
use crate::model::NodeKind;
use crate::sentence::SentenceForm;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CompileError {
    #[error("incomplete beat sheet: {0}")]
    IncompleteSheet(String),
    #[error("entry {entry}: choice {index} has no label")]
    UnlabeledChoice { entry: u32, index: usize },
    #[error("divert cycle without a choice through {0:?}")]
    InfiniteLoop(Vec<String>),
    #[error("entry {0}: parallel branches must be straight chains meeting at one join")]
    UnsupportedParallel(u32),
    #[error("invalid narrative: {0}")]
    InvalidNarrative(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Choice {
    pub label: String,
    pub target: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Exit {
    Divert { target: String },
    Choices { choices: Vec<Choice> },
    End,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Knot {
    pub id: String,
    pub entry_id: u32,
    pub source_node: String,
    pub body: String,
    pub exit: Exit,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub comment: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompiledNarrative {
    pub title: String,
    pub start_knot: String,
    pub knots: Vec<Knot>,
}

impl CompiledNarrative {
    pub fn knot(&self, id: &str) -> Option<&Knot> {
        self.knots.iter().find(|k| k.id == id)
    }

    /// Hex SHA-256 of the compact JSON form.
    pub fn content_hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("narrative serializes");
        Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&crate::Versioned::new(self)).expect("narrative serializes")
    }

    /// Load and validate a narrative JSON document.
    pub fn from_json(text: &str) -> Result<Self, CompileError> {
        let doc: crate::Versioned<CompiledNarrative> =
            serde_json::from_str(text).map_err(|e| CompileError::InvalidNarrative(e.to_string()))?;
        doc.body.validate()?;
        Ok(doc.body)
    }

    /// Check target integrity and that every divert cycle passes a choice.
    pub fn validate(&self) -> Result<(), CompileError> {
        let invalid = |m: String| Err(CompileError::InvalidNarrative(m));
        let mut ids = HashSet::new();
        for k in &self.knots {
            if !ids.insert(k.id.as_str()) {
                return invalid(format!("duplicate knot id {}", k.id));
            }
        }
        if !ids.contains(self.start_knot.as_str()) {
            return invalid(format!("start knot {} does not exist", self.start_knot));
        }
        for k in &self.knots {
            match &k.exit {
                Exit::Divert { target } if !ids.contains(target.as_str()) => {
                    return invalid(format!("knot {} diverts to unknown {}", k.id, target));
                }
                Exit::Choices { choices } => {
                    if choices.is_empty() {
                        return invalid(format!("knot {} has an empty choice list", k.id));
                    }
                    for c in choices {
                        if c.label.trim().is_empty() {
                            return invalid(format!("knot {} has an unlabeled choice", k.id));
                        }
                        if !ids.contains(c.target.as_str()) {
                            return invalid(format!("knot {} chooses unknown {}", k.id, c.target));
                        }
                    }
                }
                _ => {}
            }
        }
        check_divert_cycles(&self.knots)
    }

    /// Knot successors in exit order.
    pub fn successors<'a>(&'a self, knot: &'a Knot) -> Vec<&'a str> {
        match &knot.exit {
            Exit::Divert { target } => vec![target.as_str()],
            Exit::Choices { choices } => choices.iter().map(|c| c.target.as_str()).collect(),
            Exit::End => Vec::new(),
        }
    }
}

fn check_divert_cycles(knots: &[Knot]) -> Result<(), CompileError> {
    let divert: HashMap<&str, &str> = knots
        .iter()
        .filter_map(|k| match &k.exit {
            Exit::Divert { target } => Some((k.id.as_str(), target.as_str())),
            _ => None,
        })
        .collect();
    let mut cleared: HashSet<&str> = HashSet::new();
    for k in knots {
        let mut path: Vec<&str> = Vec::new();
        let mut on_path: HashSet<&str> = HashSet::new();
        let mut cur = k.id.as_str();
        loop {
            if cleared.contains(cur) {
                break;
            }
            if !on_path.insert(cur) {
                let start = path.iter().position(|p| *p == cur).unwrap_or(0);
                return Err(CompileError::InfiniteLoop(path[start..].iter().map(|s| s.to_string()).collect()));
            }
            path.push(cur);
            match divert.get(cur) {
                Some(next) => cur = next,
                None => break,
            }
        }
        cleared.extend(path);
    }
    Ok(())
}

/// Lowercase ASCII alphanumerics, everything else collapsed to `_`.
pub fn sanitize_identifier(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        if c.is_ascii_alphanumeric() {
            out.push(c.to_ascii_lowercase());
        } else if !out.ends_with('_') {
            out.push('_');
        }
    }
    let trimmed = out.trim_matches('_');
    if trimmed.is_empty() {
        "knot".to_owned()
    } else if trimmed.starts_with(|c: char| c.is_ascii_digit()) {
        format!("k_{trimmed}")
    } else {
        trimmed.to_owned()
    }
}

/// Knot id for an entry: sanitized element label plus the entry id.
pub fn knot_id(entry: &BeatEntry) -> String {
    let s = &entry.sentence;
    let base = match s.form {
        SentenceForm::Decision => "decision".to_owned(),
        SentenceForm::Parallel => "parallel".to_owned(),
        SentenceForm::Continuation => "join".to_owned(),
        _ => s.complements.first().map(|c| c.text.as_str()).unwrap_or("").to_owned(),
    };
    format!("{}_{}", sanitize_identifier(&base), entry.id())
}

fn one_line(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Compile a complete beat sheet into a knot graph.
pub fn compile_narrative(sheet: &BeatSheet) -> Result<CompiledNarrative, CompileError> {
    let incomplete = |m: String| CompileError::IncompleteSheet(m);
    let first = sheet.entries.first().ok_or_else(|| incomplete("sheet has no entries".into()))?;
    if first.sentence.source_kind != NodeKind::StartEvent {
        return Err(incomplete("first entry is not a start event".into()));
    }

    let mut ids: HashMap<u32, String> = HashMap::new();
    for e in &sheet.entries {
        if ids.insert(e.id(), knot_id(e)).is_some() {
            return Err(incomplete(format!("duplicate entry id {}", e.id())));
        }
    }
    for e in &sheet.entries {
        for n in &e.next {
            if !ids.contains_key(&n.id) {
                return Err(incomplete(format!("entry {} points to missing entry {}", e.id(), n.id)));
            }
        }
        if e.next.is_empty() && e.sentence.source_kind != NodeKind::EndEvent {
            return Err(incomplete(format!("entry {} has no next entry", e.id())));
        }
    }

    let mut knots: Vec<Knot> = Vec::with_capacity(sheet.entries.len());
    for e in &sheet.entries {
        let exit = match e.next.len() {
            0 => Exit::End,
            1 => Exit::Divert { target: ids[&e.next[0].id].clone() },
            _ if e.sentence.source_kind == NodeKind::ParallelGateway => {
                // Rewired below.
                Exit::Divert { target: ids[&e.next[0].id].clone() }
            }
            _ => {
                let mut choices = Vec::with_capacity(e.next.len());
                for (index, n) in e.next.iter().enumerate() {
                    let label = n
                        .option_label
                        .as_deref()
                        .map(one_line)
                        .filter(|l| !l.is_empty())
                        .ok_or(CompileError::UnlabeledChoice { entry: e.id(), index })?;
                    choices.push(Choice { label, target: ids[&n.id].clone() });
                }
                Exit::Choices { choices }
            }
        };
        knots.push(Knot {
            id: ids[&e.id()].clone(),
            entry_id: e.id(),
            source_node: e.sentence.source_node.clone(),
            body: one_line(&e.sentence.rendered),
            exit,
            comment: None,
        });
    }

    linearize_parallel(sheet, &ids, &mut knots)?;
    check_divert_cycles(&knots)?;

    Ok(CompiledNarrative { title: first.sentence.subject_text.clone(), start_knot: ids[&first.id()].clone(), knots })
}

/// Chain parallel branches one after another in the order of the split's
/// outgoing flows, ending at the join.
fn linearize_parallel(sheet: &BeatSheet, ids: &HashMap<u32, String>, knots: &mut [Knot]) -> Result<(), CompileError> {
    let by_id: HashMap<u32, &BeatEntry> = sheet.entries.iter().map(|e| (e.id(), e)).collect();
    let position: HashMap<u32, usize> = sheet.entries.iter().enumerate().map(|(i, e)| (e.id(), i)).collect();

    for split in sheet.entries.iter() {
        if split.sentence.source_kind != NodeKind::ParallelGateway || split.next.len() < 2 {
            continue;
        }
        let unsupported = || CompileError::UnsupportedParallel(split.id());
        let mut join: Option<u32> = None;
        let mut chains: Vec<Vec<u32>> = Vec::new();
        for head in &split.next {
            let mut chain = Vec::new();
            let mut cur = head.id;
            loop {
                let entry = by_id[&cur];
                if entry.sentence.source_kind == NodeKind::ParallelGateway {
                    break;
                }
                if entry.next.len() != 1 || entry.sentence.source_kind.is_gateway() || chain.len() > by_id.len() {
                    return Err(unsupported());
                }
                chain.push(cur);
                cur = entry.next[0].id;
            }
            match join {
                None => join = Some(cur),
                Some(j) if j != cur => return Err(unsupported()),
                _ => {}
            }
            chains.push(chain);
        }
        let join = join.ok_or_else(unsupported)?;
        if join == split.id() {
            return Err(unsupported());
        }

        let heads: Vec<u32> = chains.iter().filter(|c| !c.is_empty()).map(|c| c[0]).collect();
        let first_target = heads.first().copied().unwrap_or(join);
        knots[position[&split.id()]].exit = Exit::Divert { target: ids[&first_target].clone() };
        let non_empty: Vec<&Vec<u32>> = chains.iter().filter(|c| !c.is_empty()).collect();
        for (i, chain) in non_empty.iter().enumerate() {
            let tail = *chain.last().expect("non-empty chain");
            let target = non_empty.get(i + 1).map(|c| c[0]).unwrap_or(join);
            knots[position[&tail]].exit = Exit::Divert { target: ids[&target].clone() };
        }
        knots[position[&split.id()]].comment = Some(format!(
            "parallel branches linearized in flow order: {}",
            heads.iter().map(|h| ids[h].as_str()).collect::<Vec<_>>().join(", ")
        ));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::beat_sheet::{script_sentences, Numbering};
    use crate::bpmn::parse_bpmn;
    use crate::sentence::{extract_sentences, VerbLexicon};

    fn sheet(body: &str) -> BeatSheet {
        let xml = format!(
            r#"<definitions xmlns="http://www.omg.org/spec/BPMN/20100524/MODEL"><process id="p" name="P">
            <laneSet><lane id="l" name="Clerk"><flowNodeRef>a</flowNodeRef><flowNodeRef>b</flowNodeRef><flowNodeRef>c</flowNodeRef></lane></laneSet>
            {body}</process></definitions>"#
        );
        let m = parse_bpmn(xml.as_bytes()).unwrap();
        let s = extract_sentences(&m, &VerbLexicon::default()).unwrap();
        script_sentences(&m, &s, Numbering::Dfs).unwrap()
    }

    #[test]
    fn sanitizer_rule() {
        assert_eq!(sanitize_identifier("Check Its Money Availability"), "check_its_money_availability");
        assert_eq!(sanitize_identifier("  The Book is Delivered "), "the_book_is_delivered");
        assert_eq!(sanitize_identifier("3 copies"), "k_3_copies");
        assert_eq!(sanitize_identifier("¿?"), "knot");
    }

    #[test]
    fn linear_sheet() {
        let n = compile_narrative(&sheet(
            r#"<startEvent id="s" name="A"/><endEvent id="e" name="B"/><sequenceFlow id="f" sourceRef="s" targetRef="e"/>"#,
        ))
        .unwrap();
        assert_eq!(n.knots.len(), 2);
        assert_eq!(n.start_knot, "a_1");
        assert_eq!(n.knots[0].exit, Exit::Divert { target: "b_2".into() });
        assert_eq!(n.knots[1].exit, Exit::End);
        assert_eq!(n.title, "P");
        n.validate().unwrap();
    }

    #[test]
    fn missing_entry_is_incomplete() {
        let mut sh = sheet(
            r#"<startEvent id="s" name="A"/><endEvent id="e" name="B"/><sequenceFlow id="f" sourceRef="s" targetRef="e"/>"#,
        );
        sh.entries.pop();
        assert!(matches!(compile_narrative(&sh), Err(CompileError::IncompleteSheet(_))));
    }

    #[test]
    fn unlabeled_choice() {
        let mut sh = sheet(
            r#"<startEvent id="s" name="A"/><exclusiveGateway id="g" name="?"/><endEvent id="e" name="B"/><endEvent id="e2" name="C"/>
            <sequenceFlow id="f1" sourceRef="s" targetRef="g"/>
            <sequenceFlow id="f2" sourceRef="g" targetRef="e" name="x"/><sequenceFlow id="f3" sourceRef="g" targetRef="e2" name="y"/>"#,
        );
        sh.entries[1].next[1].option_label = Some("  ".into());
        assert_eq!(compile_narrative(&sh).unwrap_err(), CompileError::UnlabeledChoice { entry: 2, index: 1 });
    }

    #[test]
    fn divert_cycle_is_rejected() {
        let mut sh = sheet(
            r#"<startEvent id="s" name="A"/><task id="a" name="X"/><task id="b" name="Y"/><endEvent id="e" name="B"/>
            <sequenceFlow id="f1" sourceRef="s" targetRef="a"/><sequenceFlow id="f2" sourceRef="a" targetRef="b"/>
            <sequenceFlow id="f3" sourceRef="b" targetRef="e"/>"#,
        );
        sh.entries[2].next[0].id = 2;
        assert!(matches!(compile_narrative(&sh), Err(CompileError::InfiniteLoop(ref ks)) if ks.len() == 2));
    }

    #[test]
    fn loop_through_choice_compiles() {
        let n = compile_narrative(&sheet(
            r#"<startEvent id="s" name="A"/><task id="a" name="Work"/><exclusiveGateway id="g" name="?"/>
            <endEvent id="e" name="B"/>
            <sequenceFlow id="f1" sourceRef="s" targetRef="a"/><sequenceFlow id="f2" sourceRef="a" targetRef="g"/>
            <sequenceFlow id="f3" sourceRef="g" targetRef="a" name="again"/><sequenceFlow id="f4" sourceRef="g" targetRef="e" name="done"/>"#,
        ))
        .unwrap();
        let gw = n.knot("decision_3").unwrap();
        let Exit::Choices { choices } = &gw.exit else { panic!("expected choices") };
        assert_eq!(choices[0], Choice { label: "again".into(), target: "work_2".into() });
    }

    #[test]
    fn parallel_branches_are_chained() {
        let n = compile_narrative(&sheet(
            r#"<startEvent id="s" name="A"/><parallelGateway id="g"/><task id="a" name="X"/><task id="b" name="Y"/>
            <task id="c" name="Z"/><parallelGateway id="j"/><endEvent id="e" name="B"/>
            <sequenceFlow id="f1" sourceRef="s" targetRef="g"/>
            <sequenceFlow id="f2" sourceRef="g" targetRef="a"/><sequenceFlow id="f3" sourceRef="g" targetRef="b"/>
            <sequenceFlow id="f4" sourceRef="a" targetRef="c"/><sequenceFlow id="f5" sourceRef="c" targetRef="j"/>
            <sequenceFlow id="f6" sourceRef="b" targetRef="j"/><sequenceFlow id="f7" sourceRef="j" targetRef="e"/>"#,
        ))
        .unwrap();
        let order: Vec<&str> = {
            let mut cur = n.start_knot.as_str();
            let mut seen = vec![cur];
            while let Exit::Divert { target } = &n.knot(cur).unwrap().exit {
                cur = target;
                seen.push(cur);
            }
            seen
        };
        assert_eq!(order, vec!["a_1", "parallel_2", "x_3", "z_4", "y_7", "join_5", "b_6"]);
        assert!(n.knot("parallel_2").unwrap().comment.is_some());
    }

    #[test]
    fn hash_changes_with_content() {
        let n = compile_narrative(&sheet(
            r#"<startEvent id="s" name="A"/><endEvent id="e" name="B"/><sequenceFlow id="f" sourceRef="s" targetRef="e"/>"#,
        ))
        .unwrap();
        let mut m = n.clone();
        m.knots[1].body.push('!');
        assert_ne!(n.content_hash(), m.content_hash());
        assert_eq!(n.content_hash().len(), 64);
        assert_eq!(CompiledNarrative::from_json(&n.to_json()).unwrap(), n);
    }
}
