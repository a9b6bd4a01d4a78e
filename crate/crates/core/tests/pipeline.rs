use acs_core::connet::ConNet;
use acs_core::eval::{format_queries, parse_queries};
use acs_core::persist::ModelFile;
use acs_core::pipeline::{
    build_examples, coverage, evaluate, evaluate_predictions, make_query_sets, Dataset, ModelSettings, QueryCounts,
};
use acs_core::synth::{planted_partition, PlantedConfig};
use acs_core::{AttrMode, ExtractionConfig};

fn toy() -> Dataset {
    let cfg = PlantedConfig {
        nodes: 60,
        communities: 3,
        p_in: 0.35,
        p_out: 0.02,
        noise_vocab: 8,
        seed: 4,
        ..Default::default()
    };
    let (g, communities) = planted_partition(&cfg).unwrap().load().unwrap();
    Dataset::new(g, communities)
}

#[test]
fn perfect_predictions_score_one() {
    let ds = toy();
    let sets = make_query_sets(&ds, QueryCounts { train: 0, val: 0, test: 12 }, AttrMode::FromNodes, 1).unwrap();
    let model = ModelSettings { latent_dim: 4, ..Default::default() }.model_config(&ds, 0);
    let examples = build_examples(&ds, &sets.test, &ExtractionConfig::default(), &model).unwrap();
    let truths = examples.iter().map(|e| e.truth.clone()).collect();
    let report = evaluate_predictions(&ds.graph, &examples, truths).unwrap();
    assert_eq!(report.f1, 1.0);
    assert_eq!(report.precision, 1.0);
    assert_eq!(report.recall, 1.0);
    assert!(report.per_query.iter().all(|q| q.scores.f1 == 1.0));
}

#[test]
fn evaluation_repeats_exactly() {
    let ds = toy();
    let sets = make_query_sets(&ds, QueryCounts { train: 0, val: 0, test: 6 }, AttrMode::FromCommunity, 2).unwrap();
    let cfg = ModelSettings { latent_dim: 4, ..Default::default() }.model_config(&ds, 3);
    let examples = build_examples(&ds, &sets.test, &ExtractionConfig::default(), &cfg).unwrap();
    let model = ConNet::new(cfg).unwrap();
    let a = evaluate(&model, &ds.graph, &examples).unwrap();
    let b = evaluate(&model, &ds.graph, &examples).unwrap();
    assert_eq!(a, b);
    assert!(a.metrics().contains_key("cpj"));
}

#[test]
fn candidates_cover_planted_communities() {
    let ds = toy();
    let sets = make_query_sets(&ds, QueryCounts { train: 0, val: 0, test: 20 }, AttrMode::FromNodes, 5).unwrap();
    let cfg = ModelSettings { latent_dim: 4, ..Default::default() }.model_config(&ds, 0);
    let examples = build_examples(&ds, &sets.test, &ExtractionConfig::default(), &cfg).unwrap();
    let mean = examples.iter().map(coverage).sum::<f64>() / examples.len() as f64;
    assert!(mean > 0.8, "mean coverage {mean}");
    assert!(examples.iter().all(|e| e.sub.node_count() < ds.graph.node_count()));
}

#[test]
fn query_files_round_trip() {
    let ds = toy();
    let sets = make_query_sets(&ds, QueryCounts { train: 5, val: 0, test: 0 }, AttrMode::FromNodes, 6).unwrap();
    let text = format_queries(&ds.graph, &sets.train);
    let back = parse_queries(&ds.graph, text.lines()).unwrap();
    assert_eq!(back.len(), sets.train.len());
    for (a, b) in back.iter().zip(&sets.train) {
        assert_eq!(a.query.nodes, b.query.nodes);
        assert_eq!(a.query.attrs, b.query.attrs);
        assert_eq!(a.truth, b.truth);
    }
}

#[test]
fn saved_models_load_bit_identically() {
    let ds = toy();
    let cfg = ModelSettings { latent_dim: 6, ..Default::default() }.model_config(&ds, 8);
    let mut file = ModelFile::new(ConNet::new(cfg).unwrap());
    file.extras.insert("tau".into(), "0.8".into());
    let dir = tempfile_dir();
    let path = dir.join("m.bin");
    file.save(&path).unwrap();
    let loaded = ModelFile::load(&path).unwrap();
    assert_eq!(loaded.to_bytes(), file.to_bytes());
    assert_eq!(loaded.extras.get("tau").map(String::as_str), Some("0.8"));
    std::fs::remove_dir_all(dir).unwrap();
}

fn tempfile_dir() -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!("acs-core-test-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}
