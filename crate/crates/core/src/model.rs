//! In-memory process graph built from a BPMN document.
//!
//! A [`ProcessModel`] is an immutable value: the parser builds it once and
//! every later stage only reads it. Field order in the structs below is the
//! key order of the canonical JSON form.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

/// Kinds of flow node the pipeline understands.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum NodeKind {
    StartEvent,
    EndEvent,
    IntermediateEvent,
    Activity,
    ExclusiveGateway,
    ParallelGateway,
}

impl NodeKind {
    pub const ALL: [NodeKind; 6] = [
        NodeKind::StartEvent,
        NodeKind::EndEvent,
        NodeKind::IntermediateEvent,
        NodeKind::Activity,
        NodeKind::ExclusiveGateway,
        NodeKind::ParallelGateway,
    ];

    /// Lower-case description used in synthetic labels and diagnostics.
    pub fn describe(self) -> &'static str {
        match self {
            NodeKind::StartEvent => "start event",
            NodeKind::EndEvent => "end event",
            NodeKind::IntermediateEvent => "intermediate event",
            NodeKind::Activity => "activity",
            NodeKind::ExclusiveGateway => "exclusive gateway",
            NodeKind::ParallelGateway => "parallel gateway",
        }
    }

    /// Column text for the "BPMN Element" column of a beat sheet.
    pub fn column_name(self) -> &'static str {
        match self {
            NodeKind::StartEvent => "Start Event",
            NodeKind::EndEvent => "End Event",
            NodeKind::IntermediateEvent => "Intermediate Event",
            NodeKind::Activity => "Activity",
            NodeKind::ExclusiveGateway | NodeKind::ParallelGateway => "Gateway",
        }
    }

    pub fn is_gateway(self) -> bool {
        matches!(self, NodeKind::ExclusiveGateway | NodeKind::ParallelGateway)
    }
}

impl fmt::Display for NodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.describe())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lane {
    pub id: String,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlowNode {
    pub id: String,
    pub kind: NodeKind,
    pub label: String,
    pub lane_id: Option<String>,
    pub document_order: usize,
    /// Set when the source element had no name and `label` was synthesized.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub unnamed: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SequenceFlow {
    pub id: String,
    pub source: String,
    pub target: String,
    pub condition_label: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ResourceKind {
    DataObject,
    DataStore,
    TextAnnotation,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Resource {
    pub id: String,
    pub kind: ResourceKind,
    pub label: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LinkDirection {
    Input,
    Output,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResourceLink {
    pub flow_node_id: String,
    pub resource_id: String,
    pub direction: LinkDirection,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProcessModel {
    pub process_id: String,
    pub process_name: String,
    pub lanes: Vec<Lane>,
    pub flow_nodes: Vec<FlowNode>,
    pub sequence_flows: Vec<SequenceFlow>,
    pub resources: Vec<Resource>,
    pub resource_links: Vec<ResourceLink>,
}

impl ProcessModel {
    pub fn node(&self, id: &str) -> Option<&FlowNode> {
        self.flow_nodes.iter().find(|n| n.id == id)
    }

    pub fn lane(&self, id: &str) -> Option<&Lane> {
        self.lanes.iter().find(|l| l.id == id)
    }

    pub fn resource(&self, id: &str) -> Option<&Resource> {
        self.resources.iter().find(|r| r.id == id)
    }

    pub fn start_events(&self) -> impl Iterator<Item = &FlowNode> {
        self.nodes_of(NodeKind::StartEvent)
    }

    pub fn end_events(&self) -> impl Iterator<Item = &FlowNode> {
        self.nodes_of(NodeKind::EndEvent)
    }

    pub fn nodes_of(&self, kind: NodeKind) -> impl Iterator<Item = &FlowNode> {
        self.flow_nodes.iter().filter(move |n| n.kind == kind)
    }

    /// Outgoing flows of `node_id` in document order.
    pub fn outgoing(&self, node_id: &str) -> impl Iterator<Item = &SequenceFlow> {
        let id = node_id.to_owned();
        self.sequence_flows.iter().filter(move |f| f.source == id)
    }

    /// Incoming flows of `node_id` in document order.
    pub fn incoming(&self, node_id: &str) -> impl Iterator<Item = &SequenceFlow> {
        let id = node_id.to_owned();
        self.sequence_flows.iter().filter(move |f| f.target == id)
    }

    /// A gateway with more than one outgoing flow.
    pub fn is_diverging(&self, node: &FlowNode) -> bool {
        node.kind.is_gateway() && self.outgoing(&node.id).count() > 1
    }

    /// Resources attached to a flow node, in link order.
    pub fn resources_of(&self, node_id: &str) -> Vec<&Resource> {
        self.resource_links
            .iter()
            .filter(|l| l.flow_node_id == node_id)
            .filter_map(|l| self.resource(&l.resource_id))
            .collect()
    }

    /// Successor adjacency indexed by position in `flow_nodes`.
    pub fn successor_indices(&self) -> Vec<Vec<usize>> {
        let index: HashMap<&str, usize> = self.flow_nodes.iter().enumerate().map(|(i, n)| (n.id.as_str(), i)).collect();
        let mut adj = vec![Vec::new(); self.flow_nodes.len()];
        for f in &self.sequence_flows {
            if let (Some(&s), Some(&t)) = (index.get(f.source.as_str()), index.get(f.target.as_str())) {
                adj[s].push(t);
            }
        }
        adj
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&crate::Versioned::new(self)).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        let doc: crate::Versioned<ProcessModel> = serde_json::from_str(text)?;
        Ok(doc.body)
    }
}

/// Collapse internal whitespace runs and trim.
pub(crate) fn normalize_label(raw: &str) -> String {
    raw.split_whitespace().collect::<Vec<_>>().join(" ")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn whitespace_is_collapsed() {
        assert_eq!(normalize_label("  The Book\n  is\tDelivered "), "The Book is Delivered");
        assert_eq!(normalize_label(""), "");
    }

    #[test]
    fn gateway_column_name_is_shared() {
        assert_eq!(NodeKind::ExclusiveGateway.column_name(), "Gateway");
        assert_eq!(NodeKind::ParallelGateway.column_name(), "Gateway");
    }
}
