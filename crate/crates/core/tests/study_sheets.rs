//! The per-participant sheets under `fixtures/study/` are generated from the
//! gold sheet of `study26.bpmn`. Set `UPDATE_FIXTURES=1` to rewrite them.

mod common;

use common::{corrupt_sheet, fixture, study_gold, study_rows};
use syp_core::{score_sheet, BeatSheet};

#[test]
fn study_fixtures_are_current() {
    let gold = study_gold();
    let update = std::env::var_os("UPDATE_FIXTURES").is_some();
    let mut files = vec![("gold.json".to_owned(), gold.to_json())];
    for row in study_rows() {
        let sheet = corrupt_sheet(&gold, row.qtd_ext, row.fixture_corr(gold.entries.len()));
        files.push((format!("p{}.json", row.participant), sheet.to_json()));
    }
    for (name, text) in files {
        let path = fixture("study").join(&name);
        if update {
            std::fs::write(&path, text + "\n").unwrap();
        } else {
            let on_disk = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{name}: {e}"));
            assert_eq!(on_disk.trim_end(), text, "{name} is stale; rerun with UPDATE_FIXTURES=1");
        }
    }
}

#[test]
fn generated_sheets_score_as_built() {
    let gold = study_gold();
    for row in study_rows() {
        let corr = row.fixture_corr(gold.entries.len());
        let sheet = corrupt_sheet(&gold, row.qtd_ext, corr);
        let report = score_sheet(&sheet, &gold).unwrap();
        assert_eq!((report.qtd_ext, report.qtd_corr), (row.qtd_ext, corr), "participant {}", row.participant);
        assert_eq!(report.mismatches.len(), row.qtd_ext - corr);
    }
}

#[test]
fn lexical_refinements_do_not_count_as_errors() {
    let gold = study_gold();
    let sheet = corrupt_sheet(&gold, 26, 26);
    assert_ne!(sheet, gold, "some verbs were refined");
    assert!(sheet.entries.iter().any(|e| e.sentence.rendered.contains(" should \"")));
    let report = score_sheet(&sheet, &gold).unwrap();
    assert_eq!(report.qtd_corr, 26);
}

#[test]
fn gold_fixture_parses() {
    let text = std::fs::read_to_string(fixture("study/gold.json")).unwrap();
    let gold = BeatSheet::from_json(&text).unwrap();
    assert_eq!(gold.entries.len(), 26);
    assert!(text.contains("\"schema_version\": 1"));
}
