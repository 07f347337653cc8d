mod common;
#[path = "../../core/tests/common/oracles.rs"]
mod oracles;

use std::collections::{BTreeMap, BTreeSet};

use common::*;
use isle::error::ErrorClass;
use isle::indexes::IndexStore;
use isle::pipeline::{ExploreRequest, SearchRequest};
use isle::{ingest, store};
use isle_core::corpus::ValidationPolicy;
use isle_core::graph::{KnowledgeGraph, Provenance};
use isle_core::retrieval::{preprocess_query, FilterSpec, RankedList, RankingSource};
use isle_core::text::{analyze, AnalyzerConfig};
use isle_core::topics::{run_topic_stage, TopicConfig, TopicDocument};
use isle_core::vector::{Embedder, EmbedderBinding, ProjectionEmbedder};
use serde_json::Value;

fn fixture_papers() -> Vec<Value> {
    std::fs::read_to_string(fixture_dir().join("papers.jsonl"))
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

#[test]
fn year_filter_selects_exactly_those_years() {
    let dir = prepare_fixture();
    let engine = engine(dir.path());
    let req = SearchRequest {
        query: "learning".into(),
        filters: FilterSpec { year_range: Some((2020, 2021)), ..FilterSpec::default() },
        limit: Some(200),
    };
    let got: BTreeSet<String> = engine.search(&req).unwrap().results.into_iter().map(|r| r.paper_id).collect();
    let want: BTreeSet<String> = fixture_papers()
        .iter()
        .filter(|p| matches!(&p["publication_date"].as_str().unwrap()[..4], "2020" | "2021"))
        .map(|p| p["paper_id"].as_str().unwrap().to_string())
        .collect();
    assert_eq!(want.len(), 40);
    assert_eq!(got, want);
}

#[test]
fn document_frequencies_match_a_scan() {
    let dir = prepare_fixture();
    let engine = engine(dir.path());
    let g = engine.generation();
    let cfg = AnalyzerConfig::default();
    let mut title_df: BTreeMap<String, usize> = BTreeMap::new();
    let mut abstract_df: BTreeMap<String, usize> = BTreeMap::new();
    for p in fixture_papers() {
        for t in analyze(p["title"].as_str().unwrap(), &cfg).into_iter().collect::<BTreeSet<_>>() {
            *title_df.entry(t).or_default() += 1;
        }
        for t in analyze(p["abstract"].as_str().unwrap(), &cfg).into_iter().collect::<BTreeSet<_>>() {
            *abstract_df.entry(t).or_default() += 1;
        }
    }
    use isle_core::lexical::Field;
    let index_df = |field| -> BTreeMap<String, usize> {
        g.lexical.field(field).terms().map(|(t, p)| (t.to_string(), p.len())).collect()
    };
    assert_eq!(index_df(Field::Title), title_df);
    assert_eq!(index_df(Field::Abstract), abstract_df);
}

#[test]
fn vector_index_holds_every_nonzero_embedding() {
    let dir = prepare_fixture();
    let manifest = IndexStore::new(dir.path()).read_manifest(1).unwrap();
    let (snapshot, _) = store::load(&store::corpus_dir(dir.path())).unwrap();
    assert_eq!(manifest.vector_count, snapshot.embeddings().len() - manifest.zero_norm_excluded);
    assert_eq!(manifest.vector_count, 200);
    assert_eq!(manifest.dimension, DIMENSION);
}

#[test]
fn machine_translation_matches_the_composed_oracle() {
    let dir = prepare_fixture();
    let engine = engine(dir.path());
    let (result, _) =
        engine.explore(&ExploreRequest { limit: Some(100), ..ExploreRequest::new("machine translation") }).unwrap();
    let g = engine.generation();
    let snapshot = &g.snapshot;

    let normalized = preprocess_query("machine translation");
    let depth = 200;
    let mut lexical = oracles::bm25_brute_force(snapshot, &analyze(&normalized, &AnalyzerConfig::default()), true);
    lexical.truncate(depth);
    let vectors: Vec<(String, Vec<f64>)> =
        snapshot.embeddings().map(|e| (e.paper_id.clone(), e.vector.clone())).collect();
    let q = ProjectionEmbedder::new(SEED, DIMENSION).embed(&normalized).unwrap();
    let mut semantic = oracles::knn_full_sort(&vectors, q.as_slice());
    semantic.truncate(depth);
    let lists = [
        RankedList::from_scored(lexical, RankingSource::Lexical),
        RankedList::from_scored(semantic, RankingSource::Semantic),
    ];
    let mut fused = oracles::rrf_exhaustive(&lists, 60);
    fused.truncate(100);

    assert_eq!(result.results.len(), fused.len());
    for (got, (id, score)) in result.results.iter().zip(&fused) {
        assert_eq!(&got.paper_id, id);
        assert!((got.score - score).abs() < 1e-9);
    }

    let docs: Vec<TopicDocument> = fused
        .iter()
        .map(|(id, _)| {
            let p = snapshot.get_paper(id).unwrap();
            TopicDocument {
                paper_id: id.clone(),
                text: format!("{} {}", p.title, p.abstract_text),
                embedding: snapshot.embedding(id).map(<[f64]>::to_vec),
            }
        })
        .collect();
    let stage = run_topic_stage(&docs, &AnalyzerConfig::default(), &TopicConfig { seed: 42, ..TopicConfig::default() })
        .unwrap();
    let retrieved = RankedList::from_scored(fused.clone(), RankingSource::Fused);
    let graph =
        KnowledgeGraph::build(&retrieved, &stage.assignments, &stage.summaries, snapshot, Provenance::default())
            .unwrap();
    assert_eq!(result.topics.len(), stage.summaries.len());
    assert_eq!(result.graph.node_count, graph.node_count());
    assert_eq!(result.graph.edge_count, graph.edge_count());
}

#[test]
fn artifacts_are_byte_identical_across_runs() {
    let req = ExploreRequest { limit: Some(60), ..ExploreRequest::new("protein structure folding") };
    let mut digests = Vec::new();
    for _ in 0..2 {
        let dir = prepare_fixture();
        let engine = engine(dir.path());
        let (r, _) = engine.explore(&req).unwrap();
        let files: Vec<Vec<u8>> = ["result.json", "graph.json", "analytics.json"]
            .iter()
            .map(|f| std::fs::read(engine.exploration_dir(&r.query_id).join(f)).unwrap())
            .collect();
        digests.push((r.query_id.clone(), files));
    }
    assert_eq!(digests[0], digests[1]);
}

#[test]
fn cache_survives_restart() {
    let dir = prepare_fixture();
    let req = ExploreRequest::new("image recognition");
    let first = {
        let e = engine(dir.path());
        let (r, status) = e.explore(&req).unwrap();
        assert_eq!(status.as_str(), "miss");
        r
    };
    let e = engine(dir.path());
    let (r, status) = e.explore(&req).unwrap();
    assert_eq!(status.as_str(), "hit");
    assert_eq!(r, first);
    assert_eq!(e.query_id(&req).unwrap(), first.query_id);
}

#[test]
fn unreachable_embedder_degrades_to_lexical() {
    let dir = prepare_fixture();
    let listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/embed", listener.local_addr().unwrap());
    drop(listener);
    let mut config = config(dir.path());
    config.embedder = EmbedderBinding::external(url, DIMENSION, 300);
    let engine = isle::Engine::open(config).unwrap();
    let (r, _) =
        engine.explore(&ExploreRequest { limit: Some(30), ..ExploreRequest::new("machine translation") }).unwrap();
    assert!(r.semantic_degraded);
    assert_eq!(r.results.len(), 30);
    assert!(r.results.iter().all(|i| i.semantic_rank.is_none() && i.lexical_rank.is_some()));
    let lexical = oracles::bm25_brute_force(
        &engine.generation().snapshot,
        &analyze("machine translation", &AnalyzerConfig::default()),
        true,
    );
    let ids: Vec<&str> = r.results.iter().map(|i| i.paper_id.as_str()).collect();
    let want: Vec<&str> = lexical.iter().take(30).map(|(id, _)| id.as_str()).collect();
    assert_eq!(ids, want);
}

#[test]
fn stale_index_is_a_conflict() {
    let dir = prepare_fixture();
    let engine = engine(dir.path());
    let mut dump = ingest::read_dump(&fixture_dir()).unwrap();
    dump.input.papers.truncate(150);
    let embedded = ingest::embed_missing(&mut dump.input, &ProjectionEmbedder::new(SEED, DIMENSION)).unwrap();
    let (snapshot, summary) = ingest::assemble(dump, ValidationPolicy::Drop, embedded).unwrap();
    store::persist(&snapshot, summary, &store::corpus_dir(dir.path())).unwrap();

    assert_eq!(engine.health().papers, 200);
    let err = isle::Engine::open(config(dir.path())).and_then(|e| {
        e.search(&SearchRequest { query: "translation".into(), filters: FilterSpec::default(), limit: None })
    });
    assert_eq!(err.err().map(|e| e.class()), Some(ErrorClass::Conflict));

    let (snapshot, corpus) = store::load(&store::corpus_dir(dir.path())).unwrap();
    IndexStore::new(dir.path()).build(&snapshot, &corpus, &AnalyzerConfig::default(), false).unwrap();
    assert!(engine.reload().unwrap());
    assert_eq!(engine.health().papers, 150);
    assert_eq!(engine.health().generation, 2);
}

#[test]
fn topic_modes_are_selectable() {
    let dir = prepare_fixture();
    let engine = engine(dir.path());
    for (mode, path) in [(isle_core::topics::TopicMode::Nmf, "nmf"), (isle_core::topics::TopicMode::Cluster, "cluster")]
    {
        let req = ExploreRequest { topic_mode: Some(mode), limit: Some(80), ..ExploreRequest::new("graph database") };
        let (r, _) = engine.explore(&req).unwrap();
        assert_eq!(serde_json::to_value(r.topic_path).unwrap(), path);
        let total: usize = r.topics.iter().map(|t| t.document_count).sum();
        assert_eq!(total, r.results.len());
        assert!(r.results.iter().all(|i| i.topic_id.is_some()));
    }
}
