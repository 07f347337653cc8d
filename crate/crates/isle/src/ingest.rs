//! Line-delimited JSON dumps: `papers.jsonl`, `authors.jsonl`,
//! `authorship.jsonl`, `citations.jsonl` and `embeddings.jsonl`.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use isle_core::corpus::{
    AuthorRecord, AuthorshipRecord, CitationRecord, CorpusInput, CorpusSnapshot, EmbeddingRecord, IngestReport,
    PaperInput, ValidationPolicy,
};
use isle_core::vector::Embedder;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{IsleError, Result};

pub const PAPERS_FILE: &str = "papers.jsonl";
pub const AUTHORS_FILE: &str = "authors.jsonl";
pub const AUTHORSHIP_FILE: &str = "authorship.jsonl";
pub const CITATIONS_FILE: &str = "citations.jsonl";
pub const EMBEDDINGS_FILE: &str = "embeddings.jsonl";

/// An embeddings line; `model` optionally names the encoder.
#[derive(Debug, Clone, Deserialize)]
struct EmbeddingLine {
    paper_id: String,
    vector: Vec<f64>,
    #[serde(default)]
    model: Option<String>,
}

/// Records parsed from one dump plus the lines that failed to parse.
#[derive(Debug, Clone, Default)]
pub struct ParsedDump {
    pub input: CorpusInput,
    /// Malformed line count per file name.
    pub malformed: BTreeMap<String, usize>,
}

impl ParsedDump {
    pub fn malformed_total(&self) -> usize {
        self.malformed.values().sum()
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq, Eq)]
pub struct IngestSummary {
    pub report: IngestReport,
    pub malformed_by_file: BTreeMap<String, usize>,
    pub embedded_at_ingest: usize,
}

/// Parses every line of `text`; blank lines are ignored, unparsable ones counted.
pub fn parse_lines<T: DeserializeOwned>(text: &str) -> (Vec<T>, usize) {
    let mut out = Vec::new();
    let mut bad = 0;
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        match serde_json::from_str(line) {
            Ok(v) => out.push(v),
            Err(_) => bad += 1,
        }
    }
    (out, bad)
}

fn read_optional(dir: &Path, name: &str) -> Result<Option<String>> {
    let path = dir.join(name);
    match fs::read_to_string(&path) {
        Ok(s) => Ok(Some(s)),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
        Err(e) => Err(IsleError::io(&path)(e)),
    }
}

fn parse_file<T: DeserializeOwned>(dir: &Path, name: &str, malformed: &mut BTreeMap<String, usize>) -> Result<Vec<T>> {
    let Some(text) = read_optional(dir, name)? else { return Ok(Vec::new()) };
    let (records, bad) = parse_lines(&text);
    if bad > 0 {
        malformed.insert(name.to_string(), bad);
    }
    Ok(records)
}

/// Reads a dump directory. Only `papers.jsonl` is required.
pub fn read_dump(dir: &Path) -> Result<ParsedDump> {
    if !dir.join(PAPERS_FILE).is_file() {
        return Err(IsleError::Data(format!("{} not found in {}", PAPERS_FILE, dir.display())));
    }
    let mut malformed = BTreeMap::new();
    let papers: Vec<PaperInput> = parse_file(dir, PAPERS_FILE, &mut malformed)?;
    let authors: Vec<AuthorRecord> = parse_file(dir, AUTHORS_FILE, &mut malformed)?;
    let authorship: Vec<AuthorshipRecord> = parse_file(dir, AUTHORSHIP_FILE, &mut malformed)?;
    let citations: Vec<CitationRecord> = parse_file(dir, CITATIONS_FILE, &mut malformed)?;
    let lines: Vec<EmbeddingLine> = parse_file(dir, EMBEDDINGS_FILE, &mut malformed)?;

    let mut models: Vec<String> = lines.iter().filter_map(|l| l.model.clone()).collect();
    models.sort();
    models.dedup();
    if models.len() > 1 {
        return Err(IsleError::Data(format!("embeddings declare several models: {}", models.join(", "))));
    }
    let embeddings = lines.into_iter().map(|l| EmbeddingRecord { paper_id: l.paper_id, vector: l.vector }).collect();
    let input = CorpusInput { papers, authors, authorship, citations, embeddings, embedding_model: models.pop() };
    Ok(ParsedDump { input, malformed })
}

/// Embeds title and abstract of every paper that has no vector yet and
/// returns how many were added. Texts with nothing to embed are skipped.
pub fn embed_missing(input: &mut CorpusInput, embedder: &dyn Embedder) -> Result<usize> {
    let model = embedder.model_id();
    if !input.embeddings.is_empty() {
        if let Some(declared) = &input.embedding_model {
            if *declared != model {
                return Err(IsleError::Conflict(format!(
                    "dump embeddings come from `{declared}` but the configured embedder is `{model}`"
                )));
            }
        } else {
            return Err(IsleError::Conflict(
                "dump embeddings declare no model; refusing to mix them with generated vectors".into(),
            ));
        }
    }
    let have: std::collections::BTreeSet<String> = input.embeddings.iter().map(|e| e.paper_id.clone()).collect();
    let mut added = 0;
    for p in &input.papers {
        if have.contains(&p.paper_id) {
            continue;
        }
        match embedder.embed(&format!("{} {}", p.title, p.abstract_text)) {
            Ok(v) => {
                input.embeddings.push(EmbeddingRecord { paper_id: p.paper_id.clone(), vector: v.into_inner() });
                added += 1;
            }
            Err(isle_core::vector::EmbedError::EmptyText) => {}
            Err(e) => return Err(e.into()),
        }
    }
    if added > 0 {
        input.embedding_model = Some(model);
    }
    Ok(added)
}

/// Validates a parsed dump into a snapshot.
pub fn assemble(
    dump: ParsedDump,
    policy: ValidationPolicy,
    embedded: usize,
) -> Result<(CorpusSnapshot, IngestSummary)> {
    let malformed = dump.malformed_total();
    if policy == ValidationPolicy::Strict && malformed > 0 {
        return Err(IsleError::Data(format!("{malformed} malformed lines under strict policy")));
    }
    let (snapshot, mut report) = CorpusSnapshot::assemble(dump.input, policy)?;
    report.malformed += malformed;
    Ok((snapshot, IngestSummary { report, malformed_by_file: dump.malformed, embedded_at_ingest: embedded }))
}
