//! Shared test vectors for other session implementations (the web player).
//!
//! Each vector is a choice sequence plus the knots, transcript and save file
//! the reference runtime produces for it.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::runtime::{apply_choice, save_session, start_session, Session, Story};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vector {
    pub choices: Vec<String>,
    pub visited: Vec<String>,
    pub transcript: Vec<String>,
    pub finished: bool,
    pub save: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VectorFile {
    pub narrative_hash: String,
    pub title: String,
    pub vectors: Vec<Vector>,
}

/// Every choice sequence that ends the story, depth-first in choice order.
///
/// Sequences are cut at `max_choices` decisions, so loops yield truncated,
/// unfinished sequences instead of running forever. At most `limit`
/// sequences are returned.
pub fn all_paths(story: &Story, max_choices: usize, limit: usize) -> Vec<Vec<String>> {
    fn walk(story: &Story, s: &Session, taken: &mut Vec<String>, max: usize, limit: usize, out: &mut Vec<Vec<String>>) {
        if out.len() >= limit {
            return;
        }
        let choices = s.choices(story);
        if choices.is_empty() || taken.len() >= max {
            out.push(taken.clone());
            return;
        }
        for c in choices {
            let next = apply_choice(story, s, &c.label).expect("offered choice applies");
            taken.push(c.label.clone());
            walk(story, &next, taken, max, limit, out);
            taken.pop();
        }
    }
    let mut out = Vec::new();
    walk(story, &start_session(story), &mut Vec::new(), max_choices, limit, &mut out);
    out
}

/// A random walk of at most `max_choices` decisions.
pub fn random_choices<R: Rng + ?Sized>(story: &Story, rng: &mut R, max_choices: usize) -> Vec<String> {
    let mut s = start_session(story);
    let mut taken = Vec::new();
    while taken.len() < max_choices {
        let Some(c) = s.choices(story).choose(rng) else { break };
        let label = c.label.clone();
        s = apply_choice(story, &s, &label).expect("offered choice applies");
        taken.push(label);
    }
    taken
}

pub fn vector_for(story: &Story, choices: &[String]) -> Vector {
    let s = choices
        .iter()
        .try_fold(start_session(story), |s, c| apply_choice(story, &s, c))
        .expect("vector choices are valid");
    Vector {
        choices: choices.to_vec(),
        visited: s.visited().into_iter().map(str::to_owned).collect(),
        transcript: s.transcript(story),
        finished: s.finished,
        save: serde_json::from_slice(&save_session(&s)).expect("save is JSON"),
    }
}

pub fn vector_file(story: &Story, sequences: &[Vec<String>]) -> VectorFile {
    VectorFile {
        narrative_hash: story.hash().to_owned(),
        title: story.narrative().title.clone(),
        vectors: sequences.iter().map(|c| vector_for(story, c)).collect(),
    }
}

impl VectorFile {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&crate::Versioned::new(self)).expect("vectors serialize")
    }
}
