mod common;

use std::collections::{HashMap, HashSet, VecDeque};

use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::SeedableRng;

use syp_core::compile::{knot_id, sanitize_identifier};
use syp_core::sentence::{RefineError, SubjectKind};
use syp_core::synth::{random_model, SynthOptions};
use syp_core::{
    compile_narrative, emit_ink, extract_sentences, parse_bpmn, read_ink, refine_sentence, score_sheet,
    script_sentences, write_bpmn, BeatSheet, CompiledNarrative, NodeKind, Numbering, ProcessModel, SentenceList,
    VerbLexicon,
};

fn model(seed: u64, nodes: usize, loops: bool) -> ProcessModel {
    random_model(&mut StdRng::seed_from_u64(seed), SynthOptions { nodes, loops })
}

fn sheet_of(m: &ProcessModel) -> BeatSheet {
    let sentences = extract_sentences(m, &VerbLexicon::default()).unwrap();
    script_sentences(m, &sentences, Numbering::Dfs).unwrap()
}

/// Knots that can reach themselves, by breadth-first search from each knot.
fn knots_on_cycles(n: &CompiledNarrative) -> HashSet<String> {
    let succ: HashMap<&str, Vec<&str>> = n.knots.iter().map(|k| (k.id.as_str(), n.successors(k))).collect();
    let mut out = HashSet::new();
    for k in &n.knots {
        let mut seen = HashSet::new();
        let mut queue: VecDeque<&str> = succ[k.id.as_str()].iter().copied().collect();
        while let Some(x) = queue.pop_front() {
            if x == k.id {
                out.insert(k.id.clone());
                break;
            }
            if seen.insert(x) {
                queue.extend(succ[x].iter().copied());
            }
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn one_sentence_per_flow_node(seed in any::<u64>(), nodes in 2usize..60, loops in any::<bool>()) {
        let m = model(seed, nodes, loops);
        let sentences = extract_sentences(&m, &VerbLexicon::default()).unwrap();
        prop_assert_eq!(sentences.len(), m.flow_nodes.len());
        let sources: HashSet<&str> = sentences.iter().map(|s| s.source_node.as_str()).collect();
        prop_assert_eq!(sources.len(), m.flow_nodes.len());
    }

    #[test]
    fn subjects_follow_the_node_kind(seed in any::<u64>(), nodes in 2usize..40) {
        let m = model(seed, nodes, true);
        for s in extract_sentences(&m, &VerbLexicon::default()).unwrap() {
            let node = m.node(&s.source_node).unwrap();
            match node.kind {
                NodeKind::StartEvent | NodeKind::EndEvent => {
                    prop_assert_eq!(s.subject_kind, SubjectKind::Simple);
                    prop_assert_eq!(&s.subject_text, &m.process_name);
                }
                NodeKind::Activity => {
                    let lane = m.lane(node.lane_id.as_deref().unwrap()).unwrap();
                    prop_assert_eq!(s.subject_kind, SubjectKind::Simple);
                    prop_assert_eq!(&s.subject_text, &lane.name);
                }
                _ => {
                    prop_assert_eq!(s.subject_kind, SubjectKind::Undefined);
                    prop_assert_eq!(s.subject_text.as_str(), "");
                }
            }
            let quoted = format!("\"{}\"", s.complements[0].text);
            prop_assert!(s.rendered.contains(&quoted), "{:?}", s.rendered);
        }
    }

    #[test]
    fn pipeline_is_deterministic(seed in any::<u64>(), nodes in 2usize..40, loops in any::<bool>()) {
        let m = model(seed, nodes, loops);
        let a = compile_narrative(&sheet_of(&m)).unwrap();
        let b = compile_narrative(&sheet_of(&m.clone())).unwrap();
        prop_assert_eq!(emit_ink(&a), emit_ink(&b));
        prop_assert_eq!(a.to_json(), b.to_json());
        prop_assert_eq!(a.content_hash(), b.content_hash());
    }

    #[test]
    fn refinement_keeps_traceability(seed in any::<u64>(), nodes in 2usize..30, pick in any::<prop::sample::Index>()) {
        let m = model(seed, nodes, false);
        let sentences = extract_sentences(&m, &VerbLexicon::default()).unwrap();
        let target = &sentences[pick.index(sentences.len())];
        let refined = refine_sentence(&sentences, target.id, Some("may"), None).unwrap();
        for (before, after) in sentences.iter().zip(&refined) {
            prop_assert_eq!(&before.source_node, &after.source_node);
            prop_assert_eq!(&before.complements, &after.complements);
            prop_assert_eq!(before.subject_kind, after.subject_kind);
        }
        // Dropping a complement is structural.
        let stripped = target.rendered.replacen('"', "", 2);
        let err = refine_sentence(&sentences, target.id, None, Some(&stripped)).unwrap_err();
        prop_assert!(matches!(err, RefineError::StructuralEdit { .. }), "unexpected {:?}", err);
    }

    #[test]
    fn documents_round_trip_through_json(seed in any::<u64>(), nodes in 2usize..40, loops in any::<bool>()) {
        let m = model(seed, nodes, loops);
        prop_assert_eq!(&ProcessModel::from_json(&m.to_json()).unwrap(), &m);
        let sentences = extract_sentences(&m, &VerbLexicon::default()).unwrap();
        let list = SentenceList { process_id: m.process_id.clone(), sentences };
        prop_assert_eq!(&SentenceList::from_json(&list.to_json()).unwrap(), &list);
        let sheet = sheet_of(&m);
        prop_assert_eq!(&BeatSheet::from_json(&sheet.to_json()).unwrap(), &sheet);
        let n = compile_narrative(&sheet).unwrap();
        prop_assert_eq!(&CompiledNarrative::from_json(&n.to_json()).unwrap(), &n);
    }

    #[test]
    fn bpmn_write_then_parse_is_identity(seed in any::<u64>(), nodes in 2usize..50, loops in any::<bool>()) {
        let m = model(seed, nodes, loops);
        let back = parse_bpmn(write_bpmn(&m).as_bytes()).unwrap();
        prop_assert_eq!(back, m);
    }

    #[test]
    fn ink_emit_then_read_is_identity(seed in any::<u64>(), nodes in 2usize..50, loops in any::<bool>()) {
        let n = compile_narrative(&sheet_of(&model(seed, nodes, loops))).unwrap();
        let ink = emit_ink(&n);
        let back = read_ink(&ink).unwrap();
        prop_assert_eq!(&back, &n);
        prop_assert_eq!(emit_ink(&back), ink);
    }

    #[test]
    fn sticky_choices_exactly_on_cycles(seed in any::<u64>(), nodes in 3usize..40) {
        let n = compile_narrative(&sheet_of(&model(seed, nodes, true))).unwrap();
        let cyclic = knots_on_cycles(&n);
        let ink = emit_ink(&n);
        let mut current = "";
        for line in ink.lines() {
            if let Some(h) = line.strip_prefix("=== ") {
                current = h.trim_end_matches(" ===");
            } else if line.starts_with("+ [") {
                prop_assert!(cyclic.contains(current), "{} is sticky but acyclic", current);
            } else if line.starts_with("* [") {
                prop_assert!(!cyclic.contains(current), "{} is on a cycle but not sticky", current);
            }
        }
    }

    #[test]
    fn self_score_is_perfect_and_bounded(seed in any::<u64>(), nodes in 2usize..40, drop in 0usize..10) {
        let m = model(seed, nodes, true);
        let gold = sheet_of(&m);
        let r = score_sheet(&gold, &gold).unwrap();
        prop_assert_eq!((r.mq1, r.mq2), (1.0, 1.0));

        let keep = gold.entries.len().saturating_sub(drop).max(1);
        let partial = BeatSheet { model_ref: gold.model_ref.clone(), entries: gold.entries[..keep].to_vec() };
        let r = score_sheet(&partial, &gold).unwrap();
        prop_assert!(r.qtd_corr <= r.qtd_ext && r.mq2 <= r.mq1);
        prop_assert_eq!(r.qtd_exp, gold.entries.len());
        let swapped = score_sheet(&gold, &partial).unwrap();
        prop_assert_eq!(swapped.qtd_exp, keep);
    }

    #[test]
    fn identifiers_are_ink_safe(text in ".{0,40}") {
        let id = sanitize_identifier(&text);
        prop_assert!(!id.is_empty());
        prop_assert!(id.chars().all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_'));
        prop_assert!(!id.starts_with(|c: char| c.is_ascii_digit()));
        prop_assert!(!id.contains("__") && !id.ends_with('_'));
    }
}

#[test]
fn knot_ids_append_the_entry_number() {
    let out = common::pipeline("bookstore.bpmn", Numbering::List);
    assert_eq!(knot_id(&out.sheet.entries[2]), "check_its_money_availability_3");
    assert_eq!(knot_id(&out.sheet.entries[3]), "decision_4");
    assert_eq!(sanitize_identifier("  "), "knot");
    assert_eq!(sanitize_identifier("3 Days Later"), "k_3_days_later");
}
