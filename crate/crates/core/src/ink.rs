//! Ink script writer and a reader for the subset it writes.
//!
//! The subset is knots, choices, diverts and `END`. Two tags carry metadata:
//! a global `# title:` tag and a per-knot `# node:` tag naming the BPMN
//! element the knot came from.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;

use thiserror::Error;

use crate::compile::{Choice, CompiledNarrative, Exit, Knot};
use crate::validate::cyclic_components;

#[derive(Debug, Error, PartialEq, Eq)]
#[error("line {line}: {message}")]
pub struct InkError {
    pub line: usize,
    pub message: String,
}

/// Escape text so Ink prints it literally.
fn escape(text: &str, leading: bool) -> String {
    let mut out = String::with_capacity(text.len() + 4);
    let mut prev: Option<char> = None;
    for (i, c) in text.chars().enumerate() {
        let special = match c {
            '\\' | '{' | '}' | '[' | ']' | '#' | '|' => true,
            '>' => matches!(prev, Some('-') | Some('<')),
            '-' if prev == Some('<') => true,
            '/' | '*' if prev == Some('/') => true,
            '*' | '+' | '-' | '=' | '~' | '<' => i == 0 && leading,
            _ => false,
        };
        if special {
            out.push('\\');
        }
        out.push(c);
        prev = Some(c);
    }
    out
}

fn unescape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut chars = text.chars();
    while let Some(c) = chars.next() {
        if c == '\\' {
            if let Some(n) = chars.next() {
                out.push(n);
            }
        } else {
            out.push(c);
        }
    }
    out
}

/// Knots that sit on a cycle; their choices must stay available on revisits.
fn knots_on_cycles(narrative: &CompiledNarrative) -> HashSet<&str> {
    let index: HashMap<&str, usize> = narrative.knots.iter().enumerate().map(|(i, k)| (k.id.as_str(), i)).collect();
    let adj: Vec<Vec<usize>> = narrative
        .knots
        .iter()
        .map(|k| narrative.successors(k).iter().filter_map(|t| index.get(t).copied()).collect())
        .collect();
    cyclic_components(&adj).into_iter().flatten().map(|i| narrative.knots[i].id.as_str()).collect()
}

/// Write a narrative as an Ink script (UTF-8, LF line endings).
///
/// Choices are once-only (`*`) except on knots inside a loop, which get
/// sticky choices (`+`) so the loop can be taken more than once.
pub fn emit_ink(narrative: &CompiledNarrative) -> String {
    let cyclic = knots_on_cycles(narrative);
    let mut out = String::new();
    let _ = writeln!(out, "# title: {}", narrative.title.replace('\n', " "));
    let _ = writeln!(out, "-> {}", narrative.start_knot);
    for knot in &narrative.knots {
        out.push('\n');
        let _ = writeln!(out, "=== {} ===", knot.id);
        let _ = writeln!(out, "# node: {}", knot.source_node);
        if let Some(comment) = &knot.comment {
            let _ = writeln!(out, "// {comment}");
        }
        let _ = writeln!(out, "{}", escape(&knot.body, true));
        match &knot.exit {
            Exit::Divert { target } => {
                let _ = writeln!(out, "-> {target}");
            }
            Exit::Choices { choices } => {
                let bullet = if cyclic.contains(knot.id.as_str()) { '+' } else { '*' };
                for c in choices {
                    let _ = writeln!(out, "{bullet} [{}] -> {}", escape(&c.label, false), c.target);
                }
            }
            Exit::End => out.push_str("-> END\n"),
        }
    }
    out
}

fn entry_suffix(id: &str) -> Option<u32> {
    id.rsplit_once('_').and_then(|(_, n)| n.parse().ok())
}

/// Index of the first unescaped `]`.
fn closing_bracket(text: &str) -> Option<usize> {
    let mut escaped = false;
    for (i, c) in text.char_indices() {
        match c {
            _ if escaped => escaped = false,
            '\\' => escaped = true,
            ']' => return Some(i),
            _ => {}
        }
    }
    None
}

fn identifier(text: &str) -> bool {
    !text.is_empty() && text.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Read an Ink script in the subset written by [`emit_ink`].
pub fn read_ink(script: &str) -> Result<CompiledNarrative, InkError> {
    struct Draft {
        id: String,
        source_node: String,
        comment: Option<String>,
        body: Vec<String>,
        choices: Vec<Choice>,
        exit: Option<Exit>,
    }
    fn finish(d: Draft, line: usize) -> Result<Knot, InkError> {
        let exit = match (d.exit, d.choices.is_empty()) {
            (Some(exit), true) => exit,
            (None, false) => Exit::Choices { choices: d.choices },
            (None, true) => return Err(InkError { line, message: format!("knot {} has no exit", d.id) }),
            (Some(_), false) => {
                return Err(InkError { line, message: format!("knot {} mixes choices and a divert", d.id) })
            }
        };
        Ok(Knot {
            entry_id: entry_suffix(&d.id).unwrap_or(0),
            id: d.id,
            source_node: d.source_node,
            body: d.body.join(" "),
            exit,
            comment: d.comment,
        })
    }

    let mut title = String::new();
    let mut start: Option<String> = None;
    let mut knots = Vec::new();
    let mut draft: Option<Draft> = None;
    let mut last_line = 0;

    for (n, raw) in script.lines().enumerate() {
        let line_no = n + 1;
        last_line = line_no;
        let err = |message: String| InkError { line: line_no, message };
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix("==") {
            let name = rest.trim_start_matches('=').trim().trim_end_matches('=').trim();
            if !identifier(name) {
                return Err(err(format!("bad knot name {name:?}")));
            }
            if let Some(d) = draft.take() {
                knots.push(finish(d, line_no)?);
            }
            draft = Some(Draft {
                id: name.to_owned(),
                source_node: String::new(),
                comment: None,
                body: Vec::new(),
                choices: Vec::new(),
                exit: None,
            });
            continue;
        }
        let Some(d) = draft.as_mut() else {
            if let Some(t) = line.strip_prefix("# title:") {
                title = t.trim().to_owned();
            } else if let Some(t) = line.strip_prefix("->") {
                start = Some(t.trim().to_owned());
            } else if !line.starts_with("//") && !line.starts_with('#') {
                return Err(err(format!("content outside a knot: {line:?}")));
            }
            continue;
        };
        if d.exit.is_some() {
            return Err(err(format!("content after the exit of knot {}", d.id)));
        }
        if let Some(t) = line.strip_prefix("# node:") {
            d.source_node = t.trim().to_owned();
        } else if let Some(t) = line.strip_prefix("//") {
            d.comment = Some(t.trim().to_owned());
        } else if let Some(rest) = line.strip_prefix('*').or_else(|| line.strip_prefix('+')) {
            let rest = rest.trim_start();
            let inner = rest.strip_prefix('[').ok_or_else(|| err("choice without [label]".into()))?;
            let close = closing_bracket(inner).ok_or_else(|| err("unterminated choice label".into()))?;
            let target = inner[close + 1..]
                .trim()
                .strip_prefix("->")
                .map(str::trim)
                .filter(|t| identifier(t))
                .ok_or_else(|| err("choice without a divert target".into()))?;
            d.choices.push(Choice { label: unescape(&inner[..close]), target: target.to_owned() });
        } else if let Some(t) = line.strip_prefix("->") {
            if !d.choices.is_empty() {
                return Err(err(format!("divert after choices in knot {}", d.id)));
            }
            let t = t.trim();
            d.exit = Some(if t == "END" {
                Exit::End
            } else if identifier(t) {
                Exit::Divert { target: t.to_owned() }
            } else {
                return Err(err(format!("bad divert target {t:?}")));
            });
        } else if line.starts_with('#') {
            // Other tags carry nothing we need.
        } else {
            if !d.choices.is_empty() {
                return Err(err("text after choices".into()));
            }
            d.body.push(unescape(line));
        }
    }
    if let Some(d) = draft.take() {
        knots.push(finish(d, last_line)?);
    }
    let start_knot = start.ok_or(InkError { line: 1, message: "missing opening divert".into() })?;
    Ok(CompiledNarrative { title, start_knot, knots })
}
