//! The persisted snapshot directory `corpus/`: one canonical JSONL file per
//! record type plus `manifest.json` with counts and content hashes.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use isle_core::corpus::{
    AuthorRecord, AuthorshipRecord, CitationRecord, CorpusInput, CorpusSnapshot, CorpusStats, EmbeddingRecord,
    PaperInput, PaperRecord, ValidationPolicy,
};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{IsleError, Result};
use crate::ingest::{
    parse_lines, IngestSummary, AUTHORSHIP_FILE, AUTHORS_FILE, CITATIONS_FILE, EMBEDDINGS_FILE, PAPERS_FILE,
};

pub const CORPUS_DIR: &str = "corpus";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const FORMAT_VERSION: u32 = 1;

const FILES: [&str; 5] = [PAPERS_FILE, AUTHORS_FILE, AUTHORSHIP_FILE, CITATIONS_FILE, EMBEDDINGS_FILE];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusManifest {
    pub format_version: u32,
    pub stats: CorpusStats,
    pub embedding_count: usize,
    pub embedding_dim: Option<usize>,
    pub embedding_model: Option<String>,
    pub snapshot_fingerprint: String,
    /// SHA-256 over the per-file hashes in file order.
    pub content_hash: String,
    pub files: BTreeMap<String, String>,
    pub ingest: IngestSummary,
}

pub fn corpus_dir(data_dir: &Path) -> PathBuf {
    data_dir.join(CORPUS_DIR)
}

fn jsonl<T: Serialize>(items: impl Iterator<Item = T>) -> Vec<u8> {
    let mut out = Vec::new();
    for item in items {
        serde_json::to_writer(&mut out, &item).expect("records serialize");
        out.push(b'\n');
    }
    out
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn combined_hash(files: &BTreeMap<String, String>) -> String {
    let mut h = Sha256::new();
    for name in FILES {
        h.update(name.as_bytes());
        h.update(b"=");
        h.update(files.get(name).map_or("", String::as_str).as_bytes());
        h.update(b"\n");
    }
    hex::encode(h.finalize())
}

/// Writes `bytes` to `path` through a sibling temporary file and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    let mut f = fs::File::create(&tmp).map_err(IsleError::io(&tmp))?;
    f.write_all(bytes).map_err(IsleError::io(&tmp))?;
    f.sync_all().map_err(IsleError::io(&tmp))?;
    fs::rename(&tmp, path).map_err(IsleError::io(path))
}

pub fn to_json_bytes<T: Serialize>(value: &T) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(value).expect("value serializes");
    out.push(b'\n');
    out
}

/// Serializes the snapshot into `dir` and returns its manifest.
pub fn persist(snapshot: &CorpusSnapshot, ingest: IngestSummary, dir: &Path) -> Result<CorpusManifest> {
    fs::create_dir_all(dir).map_err(IsleError::io(dir))?;
    let contents: [(&str, Vec<u8>); 5] = [
        (PAPERS_FILE, jsonl(snapshot.papers())),
        (AUTHORS_FILE, jsonl(snapshot.authors())),
        (AUTHORSHIP_FILE, jsonl(snapshot.authorship().iter())),
        (CITATIONS_FILE, jsonl(snapshot.citations().iter())),
        (EMBEDDINGS_FILE, jsonl(snapshot.embeddings())),
    ];
    let mut files = BTreeMap::new();
    for (name, bytes) in &contents {
        write_atomic(&dir.join(name), bytes)?;
        files.insert(name.to_string(), sha256_hex(bytes));
    }
    let manifest = CorpusManifest {
        format_version: FORMAT_VERSION,
        stats: *snapshot.stats(),
        embedding_count: snapshot.embeddings().len(),
        embedding_dim: snapshot.embedding_dim(),
        embedding_model: snapshot.embedding_model().map(str::to_string),
        snapshot_fingerprint: snapshot.fingerprint().to_string(),
        content_hash: combined_hash(&files),
        files,
        ingest,
    };
    write_atomic(&dir.join(MANIFEST_FILE), &to_json_bytes(&manifest))?;
    Ok(manifest)
}

pub fn read_manifest(dir: &Path) -> Result<CorpusManifest> {
    let path = dir.join(MANIFEST_FILE);
    let text = fs::read(&path).map_err(|e| {
        if e.kind() == std::io::ErrorKind::NotFound {
            IsleError::Data(format!("no corpus at {}; run `isle ingest --source <dir>` first", dir.display()))
        } else {
            IsleError::io(&path)(e)
        }
    })?;
    let manifest: CorpusManifest = serde_json::from_slice(&text).map_err(IsleError::json(&path))?;
    if manifest.format_version != FORMAT_VERSION {
        return Err(IsleError::Data(format!("unsupported corpus format version {}", manifest.format_version)));
    }
    Ok(manifest)
}

fn read_records<T: serde::de::DeserializeOwned>(dir: &Path, name: &str, expected_hash: &str) -> Result<Vec<T>> {
    let path = dir.join(name);
    let bytes = fs::read(&path).map_err(IsleError::io(&path))?;
    if sha256_hex(&bytes) != expected_hash {
        return Err(IsleError::Data(format!("{} does not match its manifest hash", path.display())));
    }
    let text = String::from_utf8(bytes).map_err(|_| IsleError::Data(format!("{} is not UTF-8", path.display())))?;
    let (records, bad) = parse_lines(&text);
    if bad > 0 {
        return Err(IsleError::Data(format!("{} has {bad} unreadable lines", path.display())));
    }
    Ok(records)
}

fn paper_input(p: PaperRecord) -> PaperInput {
    PaperInput {
        paper_id: p.paper_id,
        arxiv_id: p.arxiv_id,
        title: p.title,
        abstract_text: p.abstract_text,
        publication_year: Some(i64::from(p.publication_year)),
        publication_date: None,
        submitted_date: p.submitted_date,
        doi: p.doi,
        subject: p.subject,
    }
}

/// Loads a persisted snapshot, verifying file hashes and the fingerprint.
pub fn load(dir: &Path) -> Result<(CorpusSnapshot, CorpusManifest)> {
    let manifest = read_manifest(dir)?;
    let hash = |name: &str| manifest.files.get(name).cloned().unwrap_or_default();
    let papers: Vec<PaperRecord> = read_records(dir, PAPERS_FILE, &hash(PAPERS_FILE))?;
    let authors: Vec<AuthorRecord> = read_records(dir, AUTHORS_FILE, &hash(AUTHORS_FILE))?;
    let authorship: Vec<AuthorshipRecord> = read_records(dir, AUTHORSHIP_FILE, &hash(AUTHORSHIP_FILE))?;
    let citations: Vec<CitationRecord> = read_records(dir, CITATIONS_FILE, &hash(CITATIONS_FILE))?;
    let embeddings: Vec<EmbeddingRecord> = read_records(dir, EMBEDDINGS_FILE, &hash(EMBEDDINGS_FILE))?;
    let input = CorpusInput {
        papers: papers.into_iter().map(paper_input).collect(),
        authors,
        authorship,
        citations,
        embeddings,
        embedding_model: manifest.embedding_model.clone(),
    };
    let (snapshot, _) = CorpusSnapshot::assemble(input, ValidationPolicy::Drop)?;
    if snapshot.fingerprint() != manifest.snapshot_fingerprint {
        return Err(IsleError::Data(format!("{} does not reproduce the recorded snapshot", dir.display())));
    }
    Ok((snapshot, manifest))
}
