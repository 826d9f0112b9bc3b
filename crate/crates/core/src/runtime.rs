//! Interactive sessions over a compiled narrative.
//!
//! Session state is the path taken so far. Saves store that path and are
//! restored by replaying it against the same narrative.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::compile::{Choice, CompileError, CompiledNarrative, Exit, Knot};

pub const SAVE_VERSION: u32 = 1;

/// History marker for steps taken without a decision.
pub const AUTO: &str = "auto";

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SessionError {
    #[error("no choice labeled {0:?} here")]
    NoSuchChoice(String),
    #[error("the session has already finished")]
    SessionFinished,
    #[error("save is for a different story")]
    HashMismatch,
    #[error("corrupt save: {0}")]
    CorruptSave(String),
}

/// A validated narrative with its content hash and a knot index.
#[derive(Debug, Clone)]
pub struct Story {
    narrative: CompiledNarrative,
    hash: String,
    index: HashMap<String, usize>,
}

impl Story {
    pub fn new(narrative: CompiledNarrative) -> Result<Self, CompileError> {
        narrative.validate()?;
        let hash = narrative.content_hash();
        let index = narrative.knots.iter().enumerate().map(|(i, k)| (k.id.clone(), i)).collect();
        Ok(Story { narrative, hash, index })
    }

    pub fn narrative(&self) -> &CompiledNarrative {
        &self.narrative
    }

    pub fn hash(&self) -> &str {
        &self.hash
    }

    pub fn knot(&self, id: &str) -> &Knot {
        &self.narrative.knots[self.index[id]]
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Step {
    pub knot: String,
    /// Chosen label, or [`AUTO`] for a divert.
    pub choice: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Session {
    pub narrative_ref: String,
    pub current_knot: String,
    pub history: Vec<Step>,
    pub finished: bool,
}

impl Session {
    /// Choices offered at the current knot; empty when finished.
    pub fn choices<'s>(&self, story: &'s Story) -> &'s [Choice] {
        match &story.knot(&self.current_knot).exit {
            Exit::Choices { choices } if !self.finished => choices,
            _ => &[],
        }
    }

    /// Knots visited so far, ending with the current one.
    pub fn visited(&self) -> Vec<&str> {
        self.history.iter().map(|s| s.knot.as_str()).chain(std::iter::once(self.current_knot.as_str())).collect()
    }

    /// Story text shown so far, one line per visited knot.
    pub fn transcript(&self, story: &Story) -> Vec<String> {
        self.visited().into_iter().map(|k| story.knot(k).body.clone()).collect()
    }
}

/// Follow diverts until a knot that needs a decision or ends the story.
fn auto_advance(story: &Story, session: &mut Session) {
    // Every divert cycle contains a choice (checked by Story::new), so this
    // walks each knot at most once.
    for _ in 0..=story.narrative.knots.len() {
        match &story.knot(&session.current_knot).exit {
            Exit::Divert { target } => {
                session.history.push(Step { knot: session.current_knot.clone(), choice: AUTO.into() });
                session.current_knot = target.clone();
            }
            Exit::End => {
                session.finished = true;
                return;
            }
            Exit::Choices { .. } => return,
        }
    }
    unreachable!("divert chain longer than the narrative");
}

pub fn start_session(story: &Story) -> Session {
    let mut session = Session {
        narrative_ref: story.hash.clone(),
        current_knot: story.narrative.start_knot.clone(),
        history: Vec::new(),
        finished: false,
    };
    auto_advance(story, &mut session);
    session
}

pub fn apply_choice(story: &Story, session: &Session, label: &str) -> Result<Session, SessionError> {
    if session.narrative_ref != story.hash {
        return Err(SessionError::HashMismatch);
    }
    if session.finished {
        return Err(SessionError::SessionFinished);
    }
    let target = session
        .choices(story)
        .iter()
        .find(|c| c.label == label)
        .map(|c| c.target.clone())
        .ok_or_else(|| SessionError::NoSuchChoice(label.to_owned()))?;
    let mut next = session.clone();
    next.history.push(Step { knot: session.current_knot.clone(), choice: label.to_owned() });
    next.current_knot = target;
    auto_advance(story, &mut next);
    Ok(next)
}

pub fn restart(story: &Story) -> Session {
    start_session(story)
}

#[derive(Serialize, Deserialize)]
struct SaveFile {
    version: u32,
    narrative_hash: String,
    history: Vec<Step>,
}

pub fn save_session(session: &Session) -> Vec<u8> {
    let save = SaveFile {
        version: SAVE_VERSION,
        narrative_hash: session.narrative_ref.clone(),
        history: session.history.clone(),
    };
    serde_json::to_vec_pretty(&save).expect("save serializes")
}

/// Rebuild a session by replaying the saved decisions.
pub fn load_session(bytes: &[u8], story: &Story) -> Result<Session, SessionError> {
    let save: SaveFile = serde_json::from_slice(bytes).map_err(|e| SessionError::CorruptSave(e.to_string()))?;
    if save.version != SAVE_VERSION {
        return Err(SessionError::CorruptSave(format!("unsupported save version {}", save.version)));
    }
    if save.narrative_hash != story.hash {
        return Err(SessionError::HashMismatch);
    }
    let mut session = start_session(story);
    for step in &save.history {
        if !story.index.contains_key(&step.knot) {
            return Err(SessionError::CorruptSave(format!("unknown knot {}", step.knot)));
        }
        if matches!(story.knot(&step.knot).exit, Exit::Choices { .. }) {
            if step.knot != session.current_knot {
                return Err(SessionError::CorruptSave(format!("decision at {} is off the path", step.knot)));
            }
            session =
                apply_choice(story, &session, &step.choice).map_err(|e| SessionError::CorruptSave(e.to_string()))?;
        }
    }
    if session.history != save.history {
        return Err(SessionError::CorruptSave("history does not replay".into()));
    }
    Ok(session)
}

/// Replay a sequence of choice labels from the start.
pub fn replay<'a>(story: &Story, labels: impl IntoIterator<Item = &'a str>) -> Result<Session, SessionError> {
    labels.into_iter().try_fold(start_session(story), |s, label| apply_choice(story, &s, label))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn knot(id: &str, exit: Exit) -> Knot {
        Knot { id: id.into(), entry_id: 0, source_node: id.into(), body: format!("at {id}"), exit, comment: None }
    }

    fn divert(t: &str) -> Exit {
        Exit::Divert { target: t.into() }
    }

    fn looped() -> Story {
        Story::new(CompiledNarrative {
            title: "T".into(),
            start_knot: "a".into(),
            knots: vec![
                knot("a", divert("b")),
                knot("b", divert("g")),
                knot(
                    "g",
                    Exit::Choices {
                        choices: vec![
                            Choice { label: "again".into(), target: "b".into() },
                            Choice { label: "stop".into(), target: "e".into() },
                        ],
                    },
                ),
                knot("e", Exit::End),
            ],
        })
        .unwrap()
    }

    #[test]
    fn start_rests_at_first_choice() {
        let story = looped();
        let s = start_session(&story);
        assert_eq!(s.current_knot, "g");
        assert_eq!(s.history.len(), 2);
        assert!(s.history.iter().all(|h| h.choice == AUTO));
        assert_eq!(s.choices(&story).len(), 2);
        assert_eq!(s.transcript(&story), vec!["at a", "at b", "at g"]);
    }

    #[test]
    fn loop_then_finish() {
        let story = looped();
        let s = replay(&story, ["again", "again", "stop"]).unwrap();
        assert!(s.finished);
        assert_eq!(s.visited(), vec!["a", "b", "g", "b", "g", "b", "g", "e"]);
        assert_eq!(apply_choice(&story, &s, "stop").unwrap_err(), SessionError::SessionFinished);
    }

    #[test]
    fn unknown_label() {
        let story = looped();
        let s = start_session(&story);
        assert_eq!(apply_choice(&story, &s, "maybe").unwrap_err(), SessionError::NoSuchChoice("maybe".into()));
    }

    #[test]
    fn end_only_story_is_finished_at_once() {
        let story = Story::new(CompiledNarrative {
            title: "T".into(),
            start_knot: "e".into(),
            knots: vec![knot("e", Exit::End)],
        })
        .unwrap();
        let s = start_session(&story);
        assert!(s.finished);
        assert!(s.history.is_empty());
        assert!(s.choices(&story).is_empty());
    }

    #[test]
    fn save_load_round_trip_and_errors() {
        let story = looped();
        let s = replay(&story, ["again"]).unwrap();
        let bytes = save_session(&s);
        assert_eq!(load_session(&bytes, &story).unwrap(), s);

        let mut other = story.narrative().clone();
        other.title.push('!');
        let other = Story::new(other).unwrap();
        assert_eq!(load_session(&bytes, &other).unwrap_err(), SessionError::HashMismatch);
        assert!(matches!(load_session(b"{not json", &story), Err(SessionError::CorruptSave(_))));

        let mut tampered: serde_json::Value = serde_json::from_slice(&bytes).unwrap();
        tampered["history"][2]["choice"] = "sideways".into();
        let tampered = serde_json::to_vec(&tampered).unwrap();
        assert!(matches!(load_session(&tampered, &story), Err(SessionError::CorruptSave(_))));
    }

    #[test]
    fn restart_is_a_fresh_start() {
        let story = looped();
        let done = replay(&story, ["stop"]).unwrap();
        assert!(done.finished);
        assert_eq!(restart(&story), start_session(&story));
    }

    #[test]
    fn stale_session_is_rejected() {
        let story = looped();
        let mut s = start_session(&story);
        s.narrative_ref = "0".repeat(64);
        assert_eq!(apply_choice(&story, &s, "stop").unwrap_err(), SessionError::HashMismatch);
    }
}
