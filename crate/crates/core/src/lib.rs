//! Turn BPMN 2.0 process models into playable interactive narratives.
//!
//! The pipeline reads a model ([`bpmn`]), extracts one sentence per flow
//! node ([`sentence`]), orders them into a beat sheet ([`beat_sheet`]),
//! compiles the sheet to a knot graph and an Ink script ([`compile`],
//! [`ink`]) and plays it ([`runtime`]). [`metrics`] scores a hand-made beat
//! sheet against a reference one.

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub mod beat_sheet;
pub mod bpmn;
pub mod compile;
pub mod conformance;
pub mod ink;
pub mod metrics;
pub mod model;
pub mod runtime;
pub mod sentence;
pub mod synth;
pub mod validate;

pub use beat_sheet::{check_completeness, script_sentences, BeatEntry, BeatSheet, CompletenessReport, Numbering};
pub use bpmn::{parse_bpmn, write_bpmn};
pub use compile::{compile_narrative, CompiledNarrative, Exit, Knot};
pub use ink::{emit_ink, read_ink};
pub use metrics::{score_sheet, summarize, MetricsReport};
pub use model::{NodeKind, ProcessModel};
pub use runtime::{apply_choice, load_session, restart, save_session, start_session, Session, Story};
pub use sentence::{extract_sentences, refine_sentence, Sentence, VerbLexicon};
pub use validate::{validate_model, Mode, ValidationReport};

pub const SCHEMA_VERSION: u32 = 1;

/// JSON envelope adding `schema_version` to a document.
#[derive(Debug, Serialize, Deserialize)]
pub struct Versioned<T> {
    pub schema_version: u32,
    #[serde(flatten)]
    pub body: T,
}

impl<T> Versioned<T> {
    pub fn new(body: T) -> Self {
        Versioned { schema_version: SCHEMA_VERSION, body }
    }
}

/// Sentence list document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentenceList {
    pub process_id: String,
    pub sentences: Vec<Sentence>,
}

impl SentenceList {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&Versioned::new(self)).expect("sentences serialize")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        let doc: Versioned<SentenceList> = serde_json::from_str(text)?;
        Ok(doc.body)
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Bpmn(#[from] bpmn::BpmnError),
    #[error("model failed validation with {} error(s)", .0.errors().count())]
    Invalid(ValidationReport),
    #[error(transparent)]
    Extract(#[from] sentence::ExtractError),
    #[error(transparent)]
    Script(#[from] beat_sheet::ScriptError),
    #[error(transparent)]
    Compile(#[from] compile::CompileError),
}

/// Parse and validate; validation errors abort, warnings are returned.
pub fn load_model(xml: &[u8], mode: Mode) -> Result<(ProcessModel, ValidationReport), PipelineError> {
    let model = parse_bpmn(xml)?;
    let report = validate_model(&model, mode);
    if report.has_errors() {
        return Err(PipelineError::Invalid(report));
    }
    Ok((model, report))
}

/// Every artifact of one end-to-end run.
#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub model: ProcessModel,
    pub report: ValidationReport,
    pub sentences: Vec<Sentence>,
    pub sheet: BeatSheet,
    pub narrative: CompiledNarrative,
    pub ink: String,
}

pub fn run_pipeline(
    xml: &[u8],
    mode: Mode,
    numbering: Numbering,
    lexicon: &VerbLexicon,
) -> Result<PipelineOutput, PipelineError> {
    let (model, report) = load_model(xml, mode)?;
    let sentences = extract_sentences(&model, lexicon)?;
    let sheet = script_sentences(&model, &sentences, numbering)?;
    let narrative = compile_narrative(&sheet)?;
    let ink = emit_ink(&narrative);
    Ok(PipelineOutput { model, report, sentences, sheet, narrative, ink })
}
