use std::collections::BTreeMap;
use std::fs;

use proptest::prelude::*;
use spiceu::formats::*;
use spiceu_core::CorpusIndex;
use tempfile::TempDir;

proptest! {
    #[test]
    fn index_save_load_round_trip(
        counts in prop::collection::btree_map("[a-z]{1,6}( [a-z]{1,4})?(\\|[a-z]{1,5})?", 1usize..50, 0..40),
        extra in 0usize..10,
    ) {
        let num_images = counts.values().copied().max().unwrap_or(0) + extra + 1;
        let index = CorpusIndex::from_counts(num_images, counts.clone()).unwrap();
        let dir = TempDir::new().unwrap();
        let path = dir.path().join("index.tsv");
        save_index(&index, &path).unwrap();
        let loaded = load_index(&path).unwrap();
        prop_assert_eq!(&loaded, &index);
        let text = fs::read_to_string(&path).unwrap();
        let keys: Vec<&str> = text.lines().skip(1).map(|l| l.split('\t').next().unwrap()).collect();
        let mut sorted = keys.clone();
        sorted.sort();
        prop_assert_eq!(keys, sorted);
    }

    #[test]
    fn token_logp_records_round_trip(logps in prop::collection::vec(-50.0f64..=0.0, 1..12)) {
        let tokens: Vec<String> = (1..logps.len()).map(|i| format!("w{i}")).collect();
        let rec = TokenLogpRecord { image_id: "img".into(), candidate_index: 3, tokens, token_logps: logps };
        let dir = TempDir::new().unwrap();
        let path = dir.path().join("t.jsonl");
        fs::write(&path, format!("{}\n", serde_json::to_string(&rec).unwrap())).unwrap();
        let table = load_token_logps(&path).unwrap();
        let (line, back) = &table[&("img".to_string(), 3)];
        prop_assert_eq!(*line, 1);
        prop_assert_eq!(back, &rec);
    }
}

#[test]
fn index_rejects_df_above_image_count() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("i.tsv");
    fs::write(&path, "2\ncat\t3\n").unwrap();
    assert!(load_index(&path).is_err());
    fs::write(&path, "2\ncat\t1\ncat\t2\n").unwrap();
    let err = load_index(&path).unwrap_err().to_string();
    assert!(err.contains(":3:") && err.contains("duplicate"), "{err}");
}

#[test]
fn tree_counts_round_trip() {
    let mut df = BTreeMap::new();
    df.insert("tree".to_string(), 28_186);
    let index = CorpusIndex::from_counts(113_287, df).unwrap();
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("i.tsv");
    save_index(&index, &path).unwrap();
    assert_eq!(fs::read_to_string(&path).unwrap(), "113287\ntree\t28186\n");
    let loaded = load_index(&path).unwrap();
    let un = spiceu_core::un(&loaded, &spiceu_core::ConceptTuple::object("tree").unwrap());
    assert!((un - 0.7512).abs() < 1e-4);
}

#[test]
fn references_merge_captions_but_not_graphs() {
    let cfg = spiceu_core::ExtractorConfig::shipped();
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("r.jsonl");
    fs::write(
        &path,
        "{\"image_id\":\"1\",\"caption\":\"a dog\"}\n{\"image_id\":\"1\",\"caption\":\"a cat\"}\n{\"image_id\":\"2\",\"tuples\":[[\"sky\"]]}\n",
    )
    .unwrap();
    let refs = load_references(&path, &cfg).unwrap();
    assert_eq!(refs["1"].len(), 2);
    assert_eq!(refs["2"].len(), 1);
    fs::write(
        &path,
        "{\"image_id\":\"2\",\"tuples\":[[\"sky\"]]}\n{\"image_id\":\"2\",\"caption\":\"a cat\"}\n",
    )
    .unwrap();
    let err = load_references(&path, &cfg).unwrap_err().to_string();
    assert!(err.contains(":2:") && err.contains("duplicate"), "{err}");
}

#[test]
fn lexicon_and_class_freq_errors_have_lines() {
    let dir = TempDir::new().unwrap();
    let lex = dir.path().join("syn.tsv");
    fs::write(&lex, "# comment\nracket\tn01\nracquet\n").unwrap();
    let err = load_lexicon(&lex).unwrap_err().to_string();
    assert!(err.contains("syn.tsv:3"), "{err}");
    let freq = dir.path().join("freq.tsv");
    fs::write(&freq, "person\t10\ndog\tmany\n").unwrap();
    let err = load_class_freq(&freq).unwrap_err().to_string();
    assert!(err.contains("freq.tsv:2"), "{err}");
}
