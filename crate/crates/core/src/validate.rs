//! Structural checks over a parsed model.

use std::collections::VecDeque;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::model::{NodeKind, ProcessModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    Strict,
    Lenient,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub node_id: Option<String>,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        match &self.node_id {
            Some(id) => write!(f, "{sev}: [{id}] {}", self.message),
            None => write!(f, "{sev}: {}", self.message),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub diagnostics: Vec<Diagnostic>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.diagnostics.is_empty()
    }

    pub fn has_errors(&self) -> bool {
        self.errors().next().is_some()
    }

    pub fn errors(&self) -> impl Iterator<Item = &Diagnostic> {
        self.diagnostics.iter().filter(|d| d.severity == Severity::Error)
    }

    pub fn warnings(&self) -> impl Iterator<Item = &Diagnostic> {
        self.diagnostics.iter().filter(|d| d.severity == Severity::Warning)
    }

    fn push(&mut self, severity: Severity, node_id: Option<&str>, message: impl Into<String>) {
        self.diagnostics.push(Diagnostic { severity, node_id: node_id.map(str::to_owned), message: message.into() });
    }
}

/// Nodes reachable from `roots` over `adj`.
pub(crate) fn reachable(adj: &[Vec<usize>], roots: impl IntoIterator<Item = usize>) -> Vec<bool> {
    let mut seen = vec![false; adj.len()];
    let mut queue: VecDeque<usize> = VecDeque::new();
    for r in roots {
        if !seen[r] {
            seen[r] = true;
            queue.push_back(r);
        }
    }
    while let Some(n) = queue.pop_front() {
        for &m in &adj[n] {
            if !seen[m] {
                seen[m] = true;
                queue.push_back(m);
            }
        }
    }
    seen
}

/// Strongly connected components that contain a cycle (size > 1 or a self loop).
pub(crate) fn cyclic_components(adj: &[Vec<usize>]) -> Vec<Vec<usize>> {
    // Iterative Tarjan.
    let n = adj.len();
    let mut index = vec![usize::MAX; n];
    let mut low = vec![0; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut next_index = 0;
    let mut out = Vec::new();

    for root in 0..n {
        if index[root] != usize::MAX {
            continue;
        }
        let mut work: Vec<(usize, usize)> = vec![(root, 0)];
        index[root] = next_index;
        low[root] = next_index;
        next_index += 1;
        stack.push(root);
        on_stack[root] = true;
        while let Some(&mut (v, ref mut child)) = work.last_mut() {
            if *child < adj[v].len() {
                let w = adj[v][*child];
                *child += 1;
                if index[w] == usize::MAX {
                    index[w] = next_index;
                    low[w] = next_index;
                    next_index += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    work.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
            } else {
                work.pop();
                if let Some(&(parent, _)) = work.last() {
                    low[parent] = low[parent].min(low[v]);
                }
                if low[v] == index[v] {
                    let mut comp = Vec::new();
                    loop {
                        let w = stack.pop().expect("tarjan stack");
                        on_stack[w] = false;
                        comp.push(w);
                        if w == v {
                            break;
                        }
                    }
                    if comp.len() > 1 || adj[v].contains(&v) {
                        comp.sort_unstable();
                        out.push(comp);
                    }
                }
            }
        }
    }
    out.sort();
    out
}

/// Check a model against what the narrative pipeline can handle.
///
/// Lenient mode downgrades parallel gateways, multiple start events, cycles
/// and unreachable nodes to warnings. Everything else is an error in both
/// modes.
pub fn validate_model(model: &ProcessModel, mode: Mode) -> ValidationReport {
    let mut report = ValidationReport::default();
    let soft = match mode {
        Mode::Strict => Severity::Error,
        Mode::Lenient => Severity::Warning,
    };

    let starts: Vec<usize> =
        model.flow_nodes.iter().enumerate().filter(|(_, n)| n.kind == NodeKind::StartEvent).map(|(i, _)| i).collect();
    match starts.len() {
        0 => report.push(Severity::Error, None, "no start event"),
        1 => {}
        k => report.push(soft, None, format!("{k} start events; only the first is narrated")),
    }
    if model.end_events().next().is_none() {
        report.push(Severity::Error, None, "no end event");
    }

    let adj = model.successor_indices();
    let mut reverse = vec![Vec::new(); adj.len()];
    for (s, targets) in adj.iter().enumerate() {
        for &t in targets {
            reverse[t].push(s);
        }
    }

    for (i, node) in model.flow_nodes.iter().enumerate() {
        let id = Some(node.id.as_str());
        if node.unnamed {
            report.push(Severity::Warning, id, format!("{} has no name", node.kind));
        }
        match node.kind {
            NodeKind::ParallelGateway => {
                report.push(soft, id, "parallel gateway is linearized in the narrative");
            }
            NodeKind::EndEvent if !adj[i].is_empty() => {
                report.push(Severity::Error, id, "end event has outgoing flows");
            }
            _ => {}
        }
        if node.kind != NodeKind::EndEvent && adj[i].is_empty() {
            report.push(Severity::Error, id, "dead end: node has no outgoing flow");
        }
        if !node.kind.is_gateway() && adj[i].len() > 1 {
            report.push(Severity::Error, id, "implicit split: only gateways may have several outgoing flows");
        }
        if node.kind == NodeKind::ExclusiveGateway && adj[i].len() > 1 {
            for flow in model.outgoing(&node.id) {
                if flow.condition_label.as_deref().is_none_or(str::is_empty) {
                    report.push(
                        Severity::Error,
                        id,
                        format!("outgoing flow {} of a diverging gateway has no label", flow.id),
                    );
                }
            }
        }
        if node.kind.is_gateway() && adj[i].len() <= 1 && reverse[i].len() > 1 {
            report.push(Severity::Warning, id, "join gateway is narrated as a pass-through sentence");
        }
    }

    let from_start = reachable(&adj, starts.first().copied());
    if !starts.is_empty() {
        for (i, node) in model.flow_nodes.iter().enumerate() {
            // Extra start events are already covered by the start-count check.
            if !from_start[i] && node.kind != NodeKind::StartEvent {
                report.push(soft, Some(&node.id), "unreachable from the start event");
            }
        }
    }

    let ends: Vec<usize> =
        model.flow_nodes.iter().enumerate().filter(|(_, n)| n.kind == NodeKind::EndEvent).map(|(i, _)| i).collect();
    let reaches_end = reachable(&reverse, ends.iter().copied());
    for comp in cyclic_components(&adj) {
        let ids: Vec<&str> = comp.iter().map(|&i| model.flow_nodes[i].id.as_str()).collect();
        let escapes = comp.iter().all(|&i| reaches_end[i]);
        if escapes {
            if mode == Mode::Lenient {
                report.push(Severity::Warning, Some(ids[0]), format!("cycle through {}", ids.join(", ")));
            }
        } else {
            report.push(soft, Some(ids[0]), format!("cycle through {} never reaches an end event", ids.join(", ")));
        }
    }

    report
}
