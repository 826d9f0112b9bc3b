//! Sentence extraction: one subject + verb + complements sentence per flow node.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{FlowNode, NodeKind, ProcessModel};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ExtractError {
    #[error("gateway {gateway}: outgoing flow {flow} has no condition label")]
    MissingGateLabel { gateway: String, flow: String },
    #[error("activity {0} has no lane to use as subject")]
    MissingLane(String),
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RefineError {
    #[error("no sentence with id {0}")]
    UnknownSentenceId(u32),
    #[error("sentence {id}: {reason}")]
    StructuralEdit { id: u32, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SubjectKind {
    Simple,
    Undefined,
}

impl SubjectKind {
    pub fn for_kind(kind: NodeKind) -> Self {
        match kind {
            NodeKind::StartEvent | NodeKind::EndEvent | NodeKind::Activity => SubjectKind::Simple,
            NodeKind::IntermediateEvent | NodeKind::ExclusiveGateway | NodeKind::ParallelGateway => {
                SubjectKind::Undefined
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ComplementOrigin {
    ElementLabel,
    GateOption,
    Resource,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Complement {
    pub text: String,
    pub connector_verb: Option<String>,
    pub origin: ComplementOrigin,
}

impl Complement {
    fn label(text: &str) -> Self {
        Complement { text: text.to_owned(), connector_verb: None, origin: ComplementOrigin::ElementLabel }
    }
}

/// Sentence template, fixed at extraction so a verb change can re-render.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SentenceForm {
    /// `The <process> starts when "<label>"`
    Event,
    /// `The <lane> needs to "<label>" using the "<resource>"`
    Action,
    /// `It happens that "<label>"`
    Happening,
    /// `It is decided among "<a>" OR "<b>"`
    Decision,
    /// `It happens in parallel: "<a>" AND "<b>"`
    Parallel,
    /// `It continues after "<label>"`
    Continuation,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sentence {
    pub id: u32,
    pub source_node: String,
    pub source_kind: NodeKind,
    pub subject_kind: SubjectKind,
    pub subject_text: String,
    pub verb: String,
    pub complements: Vec<Complement>,
    pub form: SentenceForm,
    pub rendered: String,
}

/// Default verbs, overridable per model from a JSON file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct VerbLexicon {
    pub start_event: String,
    pub end_event: String,
    pub activity: String,
    pub gateway: String,
    pub parallel_gateway: String,
    pub join: String,
    pub intermediate_event: String,
    pub resource_connector: String,
}

impl Default for VerbLexicon {
    fn default() -> Self {
        VerbLexicon {
            start_event: "starts".into(),
            end_event: "ends".into(),
            activity: "needs".into(),
            gateway: "It is decided".into(),
            parallel_gateway: "It happens in parallel".into(),
            join: "It continues".into(),
            intermediate_event: "It happens".into(),
            resource_connector: "using".into(),
        }
    }
}

impl VerbLexicon {
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// Verb for a node kind in its usual position.
    pub fn verb_for(&self, kind: NodeKind) -> &str {
        match kind {
            NodeKind::StartEvent => &self.start_event,
            NodeKind::EndEvent => &self.end_event,
            NodeKind::Activity => &self.activity,
            NodeKind::IntermediateEvent => &self.intermediate_event,
            NodeKind::ExclusiveGateway => &self.gateway,
            NodeKind::ParallelGateway => &self.parallel_gateway,
        }
    }
}

const MODALS: &[&str] = &["must", "should", "can", "could", "may", "might", "will", "would", "shall"];

fn quoted(text: &str) -> String {
    format!("\"{text}\"")
}

fn subject_phrase(subject: &str) -> String {
    let lower = subject.to_lowercase();
    if lower.starts_with("the ") {
        subject.to_owned()
    } else {
        format!("The {subject}")
    }
}

fn join_quoted<'a>(items: impl Iterator<Item = &'a Complement>, sep: &str) -> String {
    items.map(|c| quoted(&c.text)).collect::<Vec<_>>().join(sep)
}

/// Render a sentence from its structured parts.
pub fn render(s: &Sentence) -> String {
    let labels = || s.complements.iter().filter(|c| c.origin != ComplementOrigin::Resource);
    match s.form {
        SentenceForm::Event => {
            format!("{} {} when {}", subject_phrase(&s.subject_text), s.verb, join_quoted(labels(), " "))
        }
        SentenceForm::Action => {
            let modal = MODALS.contains(&s.verb.to_lowercase().as_str());
            let particle = if modal { "" } else { " to" };
            let mut out =
                format!("{} {}{particle} {}", subject_phrase(&s.subject_text), s.verb, join_quoted(labels(), " "));
            let resources: Vec<String> = s
                .complements
                .iter()
                .filter(|c| c.origin == ComplementOrigin::Resource)
                .map(|c| format!("{} the {}", c.connector_verb.as_deref().unwrap_or("using"), quoted(&c.text)))
                .collect();
            if !resources.is_empty() {
                out.push(' ');
                out.push_str(&resources.join(" and "));
            }
            out
        }
        SentenceForm::Happening => format!("{} that {}", s.verb, join_quoted(labels(), " ")),
        SentenceForm::Decision => format!("{} among {}", s.verb, join_quoted(labels(), " OR ")),
        SentenceForm::Parallel => format!("{}: {}", s.verb, join_quoted(labels(), " AND ")),
        SentenceForm::Continuation => {
            let sep = if s.source_kind == NodeKind::ParallelGateway { " AND " } else { " OR " };
            format!("{} after {}", s.verb, join_quoted(labels(), sep))
        }
    }
}

fn extract_one(model: &ProcessModel, node: &FlowNode, lexicon: &VerbLexicon) -> Result<Sentence, ExtractError> {
    let subject_kind = SubjectKind::for_kind(node.kind);
    let outgoing: Vec<_> = model.outgoing(&node.id).collect();
    let diverging = node.kind.is_gateway() && outgoing.len() > 1;

    let (subject_text, verb, complements, form) = match node.kind {
        NodeKind::StartEvent | NodeKind::EndEvent => (
            model.process_name.clone(),
            lexicon.verb_for(node.kind).to_owned(),
            vec![Complement::label(&node.label)],
            SentenceForm::Event,
        ),
        NodeKind::Activity => {
            let lane = node
                .lane_id
                .as_deref()
                .and_then(|id| model.lane(id))
                .ok_or_else(|| ExtractError::MissingLane(node.id.clone()))?;
            let mut complements = vec![Complement::label(&node.label)];
            let mut seen = Vec::new();
            for res in model.resources_of(&node.id) {
                if res.label.is_empty() || seen.contains(&&res.id) {
                    continue;
                }
                seen.push(&res.id);
                complements.push(Complement {
                    text: res.label.clone(),
                    connector_verb: Some(lexicon.resource_connector.clone()),
                    origin: ComplementOrigin::Resource,
                });
            }
            (lane.name.clone(), lexicon.activity.clone(), complements, SentenceForm::Action)
        }
        NodeKind::IntermediateEvent => (
            String::new(),
            lexicon.intermediate_event.clone(),
            vec![Complement::label(&node.label)],
            SentenceForm::Happening,
        ),
        NodeKind::ExclusiveGateway if diverging => {
            let mut complements = Vec::with_capacity(outgoing.len());
            for flow in &outgoing {
                let label = flow.condition_label.as_deref().filter(|l| !l.is_empty()).ok_or_else(|| {
                    ExtractError::MissingGateLabel { gateway: node.id.clone(), flow: flow.id.clone() }
                })?;
                complements.push(Complement {
                    text: label.to_owned(),
                    connector_verb: None,
                    origin: ComplementOrigin::GateOption,
                });
            }
            (String::new(), lexicon.gateway.clone(), complements, SentenceForm::Decision)
        }
        NodeKind::ParallelGateway if diverging => {
            let complements =
                outgoing.iter().filter_map(|f| model.node(&f.target)).map(|t| Complement::label(&t.label)).collect();
            (String::new(), lexicon.parallel_gateway.clone(), complements, SentenceForm::Parallel)
        }
        NodeKind::ExclusiveGateway | NodeKind::ParallelGateway => {
            // Joins and pass-through gateways.
            let complements: Vec<Complement> = if node.unnamed {
                model
                    .incoming(&node.id)
                    .filter_map(|f| model.node(&f.source))
                    .map(|s| Complement::label(&s.label))
                    .collect()
            } else {
                Vec::new()
            };
            let complements = if complements.is_empty() { vec![Complement::label(&node.label)] } else { complements };
            (String::new(), lexicon.join.clone(), complements, SentenceForm::Continuation)
        }
    };

    let mut sentence = Sentence {
        id: node.document_order as u32 + 1,
        source_node: node.id.clone(),
        source_kind: node.kind,
        subject_kind,
        subject_text,
        verb,
        complements,
        form,
        rendered: String::new(),
    };
    sentence.rendered = render(&sentence);
    Ok(sentence)
}

/// Extract exactly one sentence per flow node, in document order.
///
/// Sentence ids are document positions starting at 1; scripting renumbers
/// them along the flow.
pub fn extract_sentences(model: &ProcessModel, lexicon: &VerbLexicon) -> Result<Vec<Sentence>, ExtractError> {
    model.flow_nodes.iter().map(|n| extract_one(model, n, lexicon)).collect()
}

/// Quoted segments of a rendered sentence, accepting straight or curly quotes.
pub fn quoted_segments(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut current: Option<String> = None;
    for c in text.chars() {
        match (&mut current, c) {
            (None, '"' | '\u{201C}') => current = Some(String::new()),
            (Some(buf), '"' | '\u{201D}') => {
                out.push(buf.clone());
                current = None;
            }
            (Some(buf), c) => buf.push(c),
            (None, _) => {}
        }
    }
    out
}

/// Apply a lexical refinement to one sentence.
///
/// A new verb re-renders the sentence from its template. New rendered text
/// replaces the rendering; its quoted segments become the complement texts,
/// so it must keep one quoted segment per complement, the subject and the verb.
pub fn refine_sentence(
    sentences: &[Sentence],
    id: u32,
    new_verb: Option<&str>,
    new_rendered: Option<&str>,
) -> Result<Vec<Sentence>, RefineError> {
    let pos = sentences.iter().position(|s| s.id == id).ok_or(RefineError::UnknownSentenceId(id))?;
    let mut out = sentences.to_vec();
    let s = &mut out[pos];
    let structural = |reason: &str| RefineError::StructuralEdit { id, reason: reason.to_owned() };

    if let Some(verb) = new_verb {
        let verb = verb.trim();
        if verb.is_empty() {
            return Err(structural("verb cannot be empty"));
        }
        s.verb = verb.to_owned();
        s.rendered = render(s);
    }
    if let Some(rendered) = new_rendered {
        let segments = quoted_segments(rendered);
        if segments.len() != s.complements.len() {
            return Err(structural(&format!(
                "expected {} quoted complements, found {}",
                s.complements.len(),
                segments.len()
            )));
        }
        if segments.iter().any(|t| t.trim().is_empty()) {
            return Err(structural("complement text cannot be empty"));
        }
        if s.subject_kind == SubjectKind::Simple && !rendered.contains(&s.subject_text) {
            return Err(structural("subject text missing from rendered sentence"));
        }
        if !rendered.contains(&s.verb) {
            return Err(structural("verb missing from rendered sentence; pass the new verb as well"));
        }
        for (c, text) in s.complements.iter_mut().zip(segments) {
            c.text = text.trim().to_owned();
        }
        s.rendered = rendered.to_owned();
    }
    Ok(out)
}
