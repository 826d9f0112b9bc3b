//! BPMN 2.0 XML reader and a small writer for the supported subset.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;

use roxmltree::{Document, Node};
use thiserror::Error;

use crate::model::{
    normalize_label, FlowNode, Lane, LinkDirection, NodeKind, ProcessModel, Resource, ResourceKind, ResourceLink,
    SequenceFlow,
};

pub const BPMN_MODEL_NS: &str = "http://www.omg.org/spec/BPMN/20100524/MODEL";

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BpmnError {
    #[error("malformed XML: {0}")]
    MalformedXml(String),
    #[error("not a BPMN 2.0 document: root element is <{0}>")]
    NotBpmn(String),
    #[error("unsupported element <{element}> (id {id})")]
    UnsupportedElement { element: String, id: String },
    #[error("no <process> element found")]
    NoProcess,
    #[error("process {0} has no name and no named participant")]
    MissingProcessName(String),
    #[error("activity {0} is not inside any lane")]
    MissingLane(String),
    #[error("lane {0} has an empty name")]
    EmptyLaneName(String),
    #[error("duplicate element id {0}")]
    DuplicateId(String),
    #[error("sequence flow {flow} references unknown node {node}")]
    DanglingFlow { flow: String, node: String },
}

fn flow_node_kind(local: &str) -> Option<NodeKind> {
    Some(match local {
        "startEvent" => NodeKind::StartEvent,
        "endEvent" => NodeKind::EndEvent,
        "intermediateCatchEvent" | "intermediateThrowEvent" => NodeKind::IntermediateEvent,
        "task" | "userTask" | "serviceTask" | "sendTask" | "receiveTask" | "manualTask" | "businessRuleTask"
        | "scriptTask" => NodeKind::Activity,
        "exclusiveGateway" => NodeKind::ExclusiveGateway,
        "parallelGateway" => NodeKind::ParallelGateway,
        _ => return None,
    })
}

const UNSUPPORTED: &[&str] = &[
    "subProcess",
    "adHocSubProcess",
    "transaction",
    "callActivity",
    "boundaryEvent",
    "inclusiveGateway",
    "complexGateway",
    "eventBasedGateway",
    "messageFlow",
    "choreographyTask",
    "subChoreography",
    "callChoreography",
];

fn is_bpmn(node: &Node) -> bool {
    node.is_element() && node.tag_name().namespace() == Some(BPMN_MODEL_NS)
}

fn local<'a>(node: &Node<'a, '_>) -> &'a str {
    node.tag_name().name()
}

fn bpmn_children<'a, 'i>(node: Node<'a, 'i>) -> impl Iterator<Item = Node<'a, 'i>> {
    node.children().filter(is_bpmn)
}

fn attr_id(node: &Node) -> String {
    node.attribute("id").unwrap_or("").to_owned()
}

fn child_text(node: &Node, name: &str) -> Option<String> {
    bpmn_children(*node)
        .find(|c| local(c) == name)
        .and_then(|c| c.text())
        .map(|t| t.trim().to_owned())
        .filter(|t| !t.is_empty())
}

/// Parse a BPMN 2.0 document into a [`ProcessModel`].
///
/// Both `bpmn:`-prefixed and default-namespace documents are accepted.
/// Diagram-interchange content is ignored.
pub fn parse_bpmn(xml: &[u8]) -> Result<ProcessModel, BpmnError> {
    let text = std::str::from_utf8(xml).map_err(|e| BpmnError::MalformedXml(e.to_string()))?;
    let doc = Document::parse(text).map_err(|e| BpmnError::MalformedXml(e.to_string()))?;
    let root = doc.root_element();
    if !is_bpmn(&root) || local(&root) != "definitions" {
        return Err(BpmnError::NotBpmn(local(&root).to_owned()));
    }

    // Reject anything outside the subset before looking at content.
    for node in root.descendants().filter(is_bpmn) {
        if UNSUPPORTED.contains(&local(&node)) {
            return Err(BpmnError::UnsupportedElement { element: local(&node).to_owned(), id: attr_id(&node) });
        }
    }

    let processes: Vec<Node> = bpmn_children(root).filter(|n| local(n) == "process").collect();
    let participants: Vec<Node> = bpmn_children(root)
        .filter(|n| local(n) == "collaboration")
        .flat_map(bpmn_children)
        .filter(|n| local(n) == "participant")
        .collect();
    if participants.len() > 1 {
        return Err(BpmnError::UnsupportedElement { element: "participant".into(), id: attr_id(&participants[1]) });
    }
    if processes.len() > 1 {
        return Err(BpmnError::UnsupportedElement { element: "process".into(), id: attr_id(&processes[1]) });
    }
    let process = *processes.first().ok_or(BpmnError::NoProcess)?;
    let process_id = attr_id(&process);

    let process_name = process
        .attribute("name")
        .map(normalize_label)
        .filter(|s| !s.is_empty())
        .or_else(|| {
            participants.first().and_then(|p| p.attribute("name")).map(normalize_label).filter(|s| !s.is_empty())
        })
        .ok_or_else(|| BpmnError::MissingProcessName(process_id.clone()))?;

    // Definitions-level data stores and data objects give names to references.
    let mut definition_names: HashMap<String, String> = HashMap::new();
    for node in root.descendants().filter(is_bpmn) {
        if matches!(local(&node), "dataStore" | "dataObject") {
            if let Some(name) = node.attribute("name") {
                definition_names.insert(attr_id(&node), normalize_label(name));
            }
        }
    }

    let mut seen_ids = HashSet::new();
    let mut flow_nodes = Vec::new();
    let mut sequence_flows = Vec::new();
    let mut resources = Vec::new();
    let mut resource_links = Vec::new();
    let mut annotation_links = Vec::new();
    let mut unnamed_counters: HashMap<NodeKind, usize> = HashMap::new();

    for el in bpmn_children(process) {
        let name = local(&el);
        if let Some(kind) = flow_node_kind(name) {
            let id = attr_id(&el);
            if !seen_ids.insert(id.clone()) {
                return Err(BpmnError::DuplicateId(id));
            }
            let raw = el.attribute("name").map(normalize_label).unwrap_or_default();
            let unnamed = raw.is_empty();
            let label = if unnamed {
                let n = unnamed_counters.entry(kind).or_insert(0);
                *n += 1;
                format!("unnamed {} {}", kind.describe(), n)
            } else {
                raw
            };
            for assoc in bpmn_children(el) {
                match local(&assoc) {
                    "dataInputAssociation" => {
                        for src in bpmn_children(assoc).filter(|c| local(c) == "sourceRef") {
                            if let Some(r) = src.text() {
                                resource_links.push(ResourceLink {
                                    flow_node_id: id.clone(),
                                    resource_id: r.trim().to_owned(),
                                    direction: LinkDirection::Input,
                                });
                            }
                        }
                    }
                    "dataOutputAssociation" => {
                        if let Some(r) = child_text(&assoc, "targetRef") {
                            resource_links.push(ResourceLink {
                                flow_node_id: id.clone(),
                                resource_id: r,
                                direction: LinkDirection::Output,
                            });
                        }
                    }
                    _ => {}
                }
            }
            flow_nodes.push(FlowNode { id, kind, label, lane_id: None, document_order: flow_nodes.len(), unnamed });
            continue;
        }
        match name {
            "sequenceFlow" => {
                let condition_label = el
                    .attribute("name")
                    .map(normalize_label)
                    .filter(|s| !s.is_empty())
                    .or_else(|| child_text(&el, "conditionExpression").map(|t| normalize_label(&t)));
                sequence_flows.push(SequenceFlow {
                    id: attr_id(&el),
                    source: el.attribute("sourceRef").unwrap_or("").to_owned(),
                    target: el.attribute("targetRef").unwrap_or("").to_owned(),
                    condition_label,
                });
            }
            "dataObjectReference" | "dataStoreReference" => {
                let kind =
                    if name == "dataStoreReference" { ResourceKind::DataStore } else { ResourceKind::DataObject };
                let target = el.attribute("dataObjectRef").or_else(|| el.attribute("dataStoreRef"));
                let label = el
                    .attribute("name")
                    .map(normalize_label)
                    .filter(|s| !s.is_empty())
                    .or_else(|| target.and_then(|t| definition_names.get(t).cloned()))
                    .unwrap_or_default();
                resources.push(Resource { id: attr_id(&el), kind, label });
            }
            "textAnnotation" => {
                resources.push(Resource {
                    id: attr_id(&el),
                    kind: ResourceKind::TextAnnotation,
                    label: child_text(&el, "text").map(|t| normalize_label(&t)).unwrap_or_default(),
                });
            }
            "association" => {
                if let (Some(s), Some(t)) = (el.attribute("sourceRef"), el.attribute("targetRef")) {
                    annotation_links.push((s.to_owned(), t.to_owned()));
                }
            }
            _ => {}
        }
    }

    // Associations may point either way between a node and an annotation.
    let annotation_ids: HashSet<&str> =
        resources.iter().filter(|r| r.kind == ResourceKind::TextAnnotation).map(|r| r.id.as_str()).collect();
    let node_ids: HashSet<&str> = flow_nodes.iter().map(|n| n.id.as_str()).collect();
    for (s, t) in &annotation_links {
        let pair = if node_ids.contains(s.as_str()) && annotation_ids.contains(t.as_str()) {
            Some((s, t))
        } else if node_ids.contains(t.as_str()) && annotation_ids.contains(s.as_str()) {
            Some((t, s))
        } else {
            None
        };
        if let Some((node, ann)) = pair {
            resource_links.push(ResourceLink {
                flow_node_id: node.clone(),
                resource_id: ann.clone(),
                direction: LinkDirection::Input,
            });
        }
    }
    // Links to ioSpecification inputs and the like are not resources.
    let resource_ids: HashSet<String> = resources.iter().map(|r| r.id.clone()).collect();
    resource_links.retain(|l| resource_ids.contains(&l.resource_id));

    for f in &sequence_flows {
        for end in [&f.source, &f.target] {
            if !node_ids.contains(end.as_str()) {
                return Err(BpmnError::DanglingFlow { flow: f.id.clone(), node: end.clone() });
            }
        }
    }

    let lanes = assign_lanes(process, &mut flow_nodes)?;

    Ok(ProcessModel { process_id, process_name, lanes, flow_nodes, sequence_flows, resources, resource_links })
}

/// Walk (possibly nested) lane sets; the innermost lane naming a node wins.
fn assign_lanes(process: Node, flow_nodes: &mut [FlowNode]) -> Result<Vec<Lane>, BpmnError> {
    fn walk(set: Node, depth: usize, lanes: &mut Vec<Lane>, refs: &mut HashMap<String, (usize, String)>) {
        for lane in bpmn_children(set).filter(|n| local(n) == "lane") {
            let id = attr_id(&lane);
            lanes.push(Lane { id: id.clone(), name: lane.attribute("name").map(normalize_label).unwrap_or_default() });
            for child in bpmn_children(lane) {
                match local(&child) {
                    "flowNodeRef" => {
                        if let Some(t) = child.text() {
                            let key = t.trim().to_owned();
                            let deeper = refs.get(&key).is_none_or(|(d, _)| depth > *d);
                            if deeper {
                                refs.insert(key, (depth, id.clone()));
                            }
                        }
                    }
                    "childLaneSet" => walk(child, depth + 1, lanes, refs),
                    _ => {}
                }
            }
        }
    }

    let mut lanes = Vec::new();
    let mut refs = HashMap::new();
    for set in bpmn_children(process).filter(|n| local(n) == "laneSet") {
        walk(set, 0, &mut lanes, &mut refs);
    }
    for node in flow_nodes.iter_mut() {
        node.lane_id = refs.get(&node.id).map(|(_, lane)| lane.clone());
        if node.kind == NodeKind::Activity && node.lane_id.is_none() {
            return Err(BpmnError::MissingLane(node.id.clone()));
        }
    }
    for lane in &lanes {
        let holds_activity =
            flow_nodes.iter().any(|n| n.kind == NodeKind::Activity && n.lane_id.as_deref() == Some(lane.id.as_str()));
        if holds_activity && lane.name.is_empty() {
            return Err(BpmnError::EmptyLaneName(lane.id.clone()));
        }
    }
    Ok(lanes)
}

fn xml_escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            _ => out.push(c),
        }
    }
    out
}

/// Serialize a model as a `bpmn:`-prefixed BPMN 2.0 document.
///
/// Element order follows `flow_nodes`, so parsing the output yields the same
/// document order. Synthetic labels are written back as unnamed elements.
pub fn write_bpmn(model: &ProcessModel) -> String {
    let mut out = String::new();
    let esc = xml_escape;
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    let _ = writeln!(
        out,
        "<bpmn:definitions xmlns:bpmn=\"{BPMN_MODEL_NS}\" id=\"Definitions_{}\" targetNamespace=\"http://bpmn.io/schema/bpmn\">",
        esc(&model.process_id)
    );
    let _ = writeln!(
        out,
        "  <bpmn:process id=\"{}\" name=\"{}\" isExecutable=\"false\">",
        esc(&model.process_id),
        esc(&model.process_name)
    );
    if !model.lanes.is_empty() {
        out.push_str("    <bpmn:laneSet id=\"LaneSet_1\">\n");
        for lane in &model.lanes {
            let _ = writeln!(out, "      <bpmn:lane id=\"{}\" name=\"{}\">", esc(&lane.id), esc(&lane.name));
            for n in model.flow_nodes.iter().filter(|n| n.lane_id.as_deref() == Some(lane.id.as_str())) {
                let _ = writeln!(out, "        <bpmn:flowNodeRef>{}</bpmn:flowNodeRef>", esc(&n.id));
            }
            out.push_str("      </bpmn:lane>\n");
        }
        out.push_str("    </bpmn:laneSet>\n");
    }
    for node in &model.flow_nodes {
        let tag = match node.kind {
            NodeKind::StartEvent => "startEvent",
            NodeKind::EndEvent => "endEvent",
            NodeKind::IntermediateEvent => "intermediateThrowEvent",
            NodeKind::Activity => "task",
            NodeKind::ExclusiveGateway => "exclusiveGateway",
            NodeKind::ParallelGateway => "parallelGateway",
        };
        let name_attr = if node.unnamed { String::new() } else { format!(" name=\"{}\"", esc(&node.label)) };
        let links: Vec<&ResourceLink> = model
            .resource_links
            .iter()
            .filter(|l| l.flow_node_id == node.id)
            .filter(|l| model.resource(&l.resource_id).is_some_and(|r| r.kind != ResourceKind::TextAnnotation))
            .collect();
        if links.is_empty() {
            let _ = writeln!(out, "    <bpmn:{tag} id=\"{}\"{name_attr} />", esc(&node.id));
            continue;
        }
        let _ = writeln!(out, "    <bpmn:{tag} id=\"{}\"{name_attr}>", esc(&node.id));
        for (i, link) in links.iter().enumerate() {
            let assoc_id = format!("{}_assoc_{}", node.id, i + 1);
            match link.direction {
                LinkDirection::Input => {
                    let _ = writeln!(
                        out,
                        "      <bpmn:dataInputAssociation id=\"{}\"><bpmn:sourceRef>{}</bpmn:sourceRef></bpmn:dataInputAssociation>",
                        esc(&assoc_id),
                        esc(&link.resource_id)
                    );
                }
                LinkDirection::Output => {
                    let _ = writeln!(
                        out,
                        "      <bpmn:dataOutputAssociation id=\"{}\"><bpmn:targetRef>{}</bpmn:targetRef></bpmn:dataOutputAssociation>",
                        esc(&assoc_id),
                        esc(&link.resource_id)
                    );
                }
            }
        }
        let _ = writeln!(out, "    </bpmn:{tag}>");
    }
    for flow in &model.sequence_flows {
        let name_attr = flow.condition_label.as_ref().map(|c| format!(" name=\"{}\"", esc(c))).unwrap_or_default();
        let _ = writeln!(
            out,
            "    <bpmn:sequenceFlow id=\"{}\" sourceRef=\"{}\" targetRef=\"{}\"{name_attr} />",
            esc(&flow.id),
            esc(&flow.source),
            esc(&flow.target)
        );
    }
    for res in &model.resources {
        match res.kind {
            ResourceKind::DataObject => {
                let _ = writeln!(
                    out,
                    "    <bpmn:dataObjectReference id=\"{}\" name=\"{}\" />",
                    esc(&res.id),
                    esc(&res.label)
                );
            }
            ResourceKind::DataStore => {
                let _ = writeln!(
                    out,
                    "    <bpmn:dataStoreReference id=\"{}\" name=\"{}\" />",
                    esc(&res.id),
                    esc(&res.label)
                );
            }
            ResourceKind::TextAnnotation => {
                let _ = writeln!(
                    out,
                    "    <bpmn:textAnnotation id=\"{}\"><bpmn:text>{}</bpmn:text></bpmn:textAnnotation>",
                    esc(&res.id),
                    esc(&res.label)
                );
            }
        }
    }
    for (i, link) in model.resource_links.iter().enumerate() {
        if model.resource(&link.resource_id).is_some_and(|r| r.kind == ResourceKind::TextAnnotation) {
            let _ = writeln!(
                out,
                "    <bpmn:association id=\"Association_{}\" sourceRef=\"{}\" targetRef=\"{}\" />",
                i + 1,
                esc(&link.flow_node_id),
                esc(&link.resource_id)
            );
        }
    }
    out.push_str("  </bpmn:process>\n</bpmn:definitions>\n");
    out
}
