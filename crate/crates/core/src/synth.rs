//! Random process models in the supported subset, for property tests and
//! conformance fixtures.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::model::{
    FlowNode, Lane, LinkDirection, NodeKind, ProcessModel, Resource, ResourceKind, ResourceLink, SequenceFlow,
};

#[derive(Debug, Clone, Copy)]
pub struct SynthOptions {
    /// Number of flow nodes, at least 2.
    pub nodes: usize,
    /// Add back edges from decision gateways. Every cycle then passes a decision.
    pub loops: bool,
}

const VERBS: &[&str] =
    &["Check", "Send", "Receive", "Approve", "Review", "Register", "Pack", "Pay", "Archive", "Notify"];
const NOUNS: &[&str] = &["Order", "Invoice", "Book", "Request", "Payment", "Parcel", "Contract", "Report"];
const LANES: &[&str] = &["Client", "Clerk", "Warehouse", "Billing System", "Manager"];
const STORES: &[&str] = &["Book Catalog", "Customer Database", "Price List", "Order Form"];
const OPTIONS: &[&str] = &["yes", "no", "later", "approved", "rejected", "in stock", "out of stock"];

/// Build a random model. Node `i` has document order `i`; node 0 is the
/// single start event and sinks become end events.
#[allow(clippy::needless_range_loop)] // out/inc/edges are indexed together
pub fn random_model<R: Rng + ?Sized>(rng: &mut R, opts: SynthOptions) -> ProcessModel {
    let n = opts.nodes.max(2);
    let mut edges: Vec<(usize, usize)> = Vec::new();
    let mut out = vec![0usize; n];
    let mut inc = vec![0usize; n];
    let cap = |i: usize| if i == 0 { 1 } else { 3 };

    for i in 1..n {
        let eligible: Vec<usize> = (0..i).filter(|&j| out[j] < cap(j)).collect();
        let parent = if eligible.contains(&(i - 1)) && rng.gen_bool(0.6) {
            i - 1
        } else {
            *eligible.choose(rng).expect("node 0 or an earlier node has room")
        };
        edges.push((parent, i));
        out[parent] += 1;
        inc[i] += 1;
    }
    // Forward merge edges keep the graph acyclic.
    for i in 1..n.saturating_sub(1) {
        if out[i] >= 1 && out[i] < 3 && rng.gen_bool(0.15) {
            let k = rng.gen_range(i + 1..n);
            if !edges.contains(&(i, k)) {
                edges.push((i, k));
                out[i] += 1;
                inc[k] += 1;
            }
        }
    }
    if opts.loops {
        for i in 2..n {
            if out[i] >= 2 && out[i] < 3 && rng.gen_bool(0.5) {
                let k = rng.gen_range(1..i);
                if !edges.contains(&(i, k)) {
                    edges.push((i, k));
                    out[i] += 1;
                    inc[k] += 1;
                }
            }
        }
    }

    let lane_count = rng.gen_range(1..=3);
    let mut lane_names: Vec<&str> = LANES.to_vec();
    lane_names.shuffle(rng);
    let lanes: Vec<Lane> =
        (0..lane_count).map(|i| Lane { id: format!("Lane_{}", i + 1), name: lane_names[i].to_owned() }).collect();

    let mut flow_nodes = Vec::with_capacity(n);
    let mut unnamed_gateways = 0;
    for i in 0..n {
        let kind = if i == 0 {
            NodeKind::StartEvent
        } else if out[i] == 0 {
            NodeKind::EndEvent
        } else if out[i] >= 2 || (inc[i] >= 2 && rng.gen_bool(0.5)) {
            NodeKind::ExclusiveGateway
        } else if rng.gen_bool(0.8) {
            NodeKind::Activity
        } else {
            NodeKind::IntermediateEvent
        };
        let noun = NOUNS.choose(rng).expect("non-empty");
        let (label, unnamed) = match kind {
            NodeKind::StartEvent => (format!("{noun} Arrives"), false),
            NodeKind::EndEvent => (format!("{noun} Closed {i}"), false),
            NodeKind::Activity => (format!("{} the {noun} {i}", VERBS.choose(rng).expect("non-empty")), false),
            NodeKind::IntermediateEvent => (format!("{noun} Timer {i}"), false),
            _ if out[i] >= 2 => (format!("{noun} ok {i}?"), false),
            _ if rng.gen_bool(0.5) => {
                // Same synthetic label the parser would give.
                unnamed_gateways += 1;
                (format!("unnamed exclusive gateway {unnamed_gateways}"), true)
            }
            _ => (format!("Merge {noun} {i}"), false),
        };
        let lane_id = (kind == NodeKind::Activity).then(|| lanes.choose(rng).expect("lane").id.clone());
        flow_nodes.push(FlowNode { id: format!("Node_{i}"), kind, label, lane_id, document_order: i, unnamed });
    }

    let mut sequence_flows = Vec::with_capacity(edges.len());
    let mut option_index = vec![0usize; n];
    for (k, &(s, t)) in edges.iter().enumerate() {
        let condition_label = (out[s] >= 2).then(|| {
            option_index[s] += 1;
            format!("{} {}", OPTIONS.choose(rng).expect("non-empty"), option_index[s])
        });
        sequence_flows.push(SequenceFlow {
            id: format!("Flow_{}", k + 1),
            source: format!("Node_{s}"),
            target: format!("Node_{t}"),
            condition_label,
        });
    }

    let activities: Vec<&FlowNode> = flow_nodes.iter().filter(|n| n.kind == NodeKind::Activity).collect();
    let mut resources = Vec::new();
    let mut resource_links = Vec::new();
    if !activities.is_empty() {
        for r in 0..rng.gen_range(0..=2) {
            let (kind, prefix) = if rng.gen_bool(0.5) {
                (ResourceKind::DataStore, "DataStore")
            } else {
                (ResourceKind::DataObject, "DataObject")
            };
            let id = format!("{prefix}_{}", r + 1);
            for _ in 0..rng.gen_range(1..=2) {
                let a = activities.choose(rng).expect("non-empty");
                if resource_links.iter().any(|l: &ResourceLink| l.flow_node_id == a.id && l.resource_id == id) {
                    continue;
                }
                resource_links.push(ResourceLink {
                    flow_node_id: a.id.clone(),
                    resource_id: id.clone(),
                    direction: if rng.gen_bool(0.7) { LinkDirection::Input } else { LinkDirection::Output },
                });
            }
            resources.push(Resource { id, kind, label: STORES[r % STORES.len()].to_owned() });
        }
    }
    // Node order, as a parser would report them.
    resource_links.sort_by_key(|l| l.flow_node_id[5..].parse::<usize>().expect("Node_<i> id"));

    ProcessModel {
        process_id: "Process_1".into(),
        process_name: format!("{} Handling", NOUNS.choose(rng).expect("non-empty")),
        lanes,
        flow_nodes,
        sequence_flows,
        resources,
        resource_links,
    }
}
