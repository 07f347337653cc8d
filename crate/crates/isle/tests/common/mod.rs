//! Shared setup: the toy fixture ingested and indexed into a temporary
//! data directory.
#![allow(dead_code)]

use std::path::{Path, PathBuf};

use isle::config::ServiceConfig;
use isle::indexes::IndexStore;
use isle::{ingest, store, Engine};
use isle_core::corpus::ValidationPolicy;
use isle_core::text::AnalyzerConfig;
use isle_core::vector::ProjectionEmbedder;
use serde_json::Value;
use tempfile::TempDir;

pub const SEED: u64 = 42;
pub const DIMENSION: usize = 384;

pub fn fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/toy")
}

pub fn fixture_manifest() -> Value {
    let text = std::fs::read_to_string(fixture_dir().join("manifest.json")).unwrap();
    serde_json::from_str(&text).unwrap()
}

/// Ingests `source` with projection embeddings and builds generation 1.
pub fn prepare(source: &Path) -> TempDir {
    let dir = tempfile::tempdir().unwrap();
    let mut dump = ingest::read_dump(source).unwrap();
    let embedded = ingest::embed_missing(&mut dump.input, &ProjectionEmbedder::new(SEED, DIMENSION)).unwrap();
    let (snapshot, summary) = ingest::assemble(dump, ValidationPolicy::Drop, embedded).unwrap();
    store::persist(&snapshot, summary, &store::corpus_dir(dir.path())).unwrap();
    let (snapshot, corpus) = store::load(&store::corpus_dir(dir.path())).unwrap();
    IndexStore::new(dir.path()).build(&snapshot, &corpus, &AnalyzerConfig::default(), false).unwrap();
    dir
}

pub fn prepare_fixture() -> TempDir {
    prepare(&fixture_dir())
}

pub fn config(data_dir: &Path) -> ServiceConfig {
    ServiceConfig { data_dir: data_dir.to_path_buf(), ..ServiceConfig::default() }
}

pub fn engine(data_dir: &Path) -> Engine {
    Engine::open(config(data_dir)).unwrap().with_built_at(0)
}

/// Runs the CLI in-process and returns `(exit code, stdout, stderr)`.
pub fn cli(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let mut argv = vec!["isle"];
    argv.extend_from_slice(args);
    let code = isle::cli::run(argv, Vec::<(String, String)>::new(), &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}
