//! Index generations on disk: `index/gen-<n>/` holds one immutable build and
//! `index/CURRENT` names the live one. Rebuilds write a fresh generation and
//! then swap `CURRENT`.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use isle_core::lexical::{Field, FieldIndex, InvertedIndex, Posting};
use isle_core::text::AnalyzerConfig;
use isle_core::vector::VectorIndex;
use isle_core::CorpusSnapshot;
use serde::{Deserialize, Serialize};

use crate::error::{IsleError, Result};
use crate::store::{to_json_bytes, write_atomic, CorpusManifest};

pub const INDEX_DIR: &str = "index";
pub const CURRENT_FILE: &str = "CURRENT";
const LOCK_FILE: &str = ".build.lock";
const LEXICAL_FILE: &str = "lexical.json";
const VECTORS_FILE: &str = "vectors.json";
const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexManifest {
    pub generation: u64,
    pub corpus_hash: String,
    pub snapshot_fingerprint: String,
    pub analyzer_fingerprint: String,
    pub paper_count: usize,
    pub vector_count: usize,
    pub zero_norm_excluded: usize,
    pub dimension: usize,
    pub model_id: Option<String>,
}

#[derive(Serialize, Deserialize)]
struct FieldFile {
    doc_lengths: Vec<u32>,
    postings: BTreeMap<String, Vec<(u32, u32)>>,
}

#[derive(Serialize, Deserialize)]
struct LexicalFile {
    snapshot_fingerprint: String,
    analyzer_fingerprint: String,
    paper_ids: Vec<String>,
    title_tokens: Vec<Vec<String>>,
    title: FieldFile,
    #[serde(rename = "abstract")]
    abstract_: FieldFile,
}

#[derive(Serialize, Deserialize)]
struct VectorFile {
    snapshot_fingerprint: String,
    model_id: Option<String>,
    dimension: usize,
    paper_ids: Vec<String>,
    excluded: Vec<u32>,
    entries: Vec<(u32, Vec<f64>)>,
}

fn field_file(f: &FieldIndex) -> FieldFile {
    FieldFile {
        doc_lengths: f.doc_lengths().to_vec(),
        postings: f.terms().map(|(t, ps)| (t.to_string(), ps.iter().map(|p| (p.doc, p.tf)).collect())).collect(),
    }
}

fn field_index(f: FieldFile) -> Result<FieldIndex> {
    let postings = f
        .postings
        .into_iter()
        .map(|(t, ps)| (t, ps.into_iter().map(|(doc, tf)| Posting { doc, tf }).collect()))
        .collect();
    Ok(FieldIndex::from_parts(postings, f.doc_lengths)?)
}

/// Outcome of an `index` run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BuildOutcome {
    pub generation: u64,
    pub rebuilt: bool,
    pub manifest: IndexManifest,
}

/// A loaded generation.
#[derive(Debug, Clone)]
pub struct LoadedIndexes {
    pub manifest: IndexManifest,
    pub lexical: InvertedIndex,
    pub vectors: VectorIndex,
}

pub struct IndexStore {
    root: PathBuf,
}

struct BuildLock(PathBuf);

impl Drop for BuildLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.0);
    }
}

impl IndexStore {
    pub fn new(data_dir: &Path) -> Self {
        IndexStore { root: data_dir.join(INDEX_DIR) }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn generation_dir(&self, generation: u64) -> PathBuf {
        self.root.join(format!("gen-{generation}"))
    }

    pub fn current(&self) -> Result<Option<u64>> {
        let path = self.root.join(CURRENT_FILE);
        match fs::read_to_string(&path) {
            Ok(s) => s
                .trim()
                .parse()
                .map(Some)
                .map_err(|_| IsleError::Data(format!("{} does not name a generation", path.display()))),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(IsleError::io(&path)(e)),
        }
    }

    fn generations(&self) -> Result<Vec<u64>> {
        let Ok(entries) = fs::read_dir(&self.root) else { return Ok(Vec::new()) };
        let mut out = Vec::new();
        for entry in entries {
            let entry = entry.map_err(IsleError::io(&self.root))?;
            if let Some(n) =
                entry.file_name().to_str().and_then(|n| n.strip_prefix("gen-")).and_then(|n| n.parse().ok())
            {
                out.push(n);
            }
        }
        out.sort_unstable();
        Ok(out)
    }

    pub fn read_manifest(&self, generation: u64) -> Result<IndexManifest> {
        let path = self.generation_dir(generation).join(MANIFEST_FILE);
        let bytes = fs::read(&path).map_err(IsleError::io(&path))?;
        serde_json::from_slice(&bytes).map_err(IsleError::json(&path))
    }

    fn lock(&self) -> Result<BuildLock> {
        fs::create_dir_all(&self.root).map_err(IsleError::io(&self.root))?;
        let path = self.root.join(LOCK_FILE);
        match fs::OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(_) => Ok(BuildLock(path)),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => Err(IsleError::Conflict(format!(
                "another index build holds {}; remove it if no build is running",
                path.display()
            ))),
            Err(e) => Err(IsleError::io(&path)(e)),
        }
    }

    /// Builds a new generation unless the live one already matches the
    /// corpus and analyzer, or `force` is set.
    pub fn build(
        &self,
        snapshot: &CorpusSnapshot,
        corpus: &CorpusManifest,
        analyzer: &AnalyzerConfig,
        force: bool,
    ) -> Result<BuildOutcome> {
        let _lock = self.lock()?;
        if let Some(current) = self.current()? {
            let manifest = self.read_manifest(current)?;
            if !force
                && manifest.corpus_hash == corpus.content_hash
                && manifest.analyzer_fingerprint == analyzer.fingerprint()
            {
                return Ok(BuildOutcome { generation: current, rebuilt: false, manifest });
            }
        }
        let generation = self.generations()?.last().map_or(1, |g| g + 1);

        let lexical = InvertedIndex::build(snapshot, analyzer);
        let (vectors, report) = VectorIndex::build(snapshot);
        let manifest = IndexManifest {
            generation,
            corpus_hash: corpus.content_hash.clone(),
            snapshot_fingerprint: snapshot.fingerprint().to_string(),
            analyzer_fingerprint: analyzer.fingerprint(),
            paper_count: snapshot.paper_count(),
            vector_count: report.indexed,
            zero_norm_excluded: report.zero_norm_excluded,
            dimension: vectors.dimension(),
            model_id: vectors.model_id().map(str::to_string),
        };
        let lexical_file = LexicalFile {
            snapshot_fingerprint: lexical.snapshot_fingerprint().to_string(),
            analyzer_fingerprint: lexical.analyzer_fingerprint().to_string(),
            paper_ids: lexical.paper_ids().to_vec(),
            title_tokens: lexical.title_tokens().to_vec(),
            title: field_file(lexical.field(Field::Title)),
            abstract_: field_file(lexical.field(Field::Abstract)),
        };
        let vector_file = VectorFile {
            snapshot_fingerprint: vectors.snapshot_fingerprint().to_string(),
            model_id: vectors.model_id().map(str::to_string),
            dimension: vectors.dimension(),
            paper_ids: vectors.paper_ids().to_vec(),
            excluded: vectors.excluded().to_vec(),
            entries: vectors.entries().to_vec(),
        };

        let staging = self.root.join(format!("gen-{generation}.staging"));
        if staging.exists() {
            fs::remove_dir_all(&staging).map_err(IsleError::io(&staging))?;
        }
        fs::create_dir_all(&staging).map_err(IsleError::io(&staging))?;
        write_atomic(&staging.join(LEXICAL_FILE), &serde_json::to_vec(&lexical_file).expect("serializes"))?;
        write_atomic(&staging.join(VECTORS_FILE), &serde_json::to_vec(&vector_file).expect("serializes"))?;
        write_atomic(&staging.join(MANIFEST_FILE), &to_json_bytes(&manifest))?;
        let target = self.generation_dir(generation);
        fs::rename(&staging, &target).map_err(IsleError::io(&target))?;
        write_atomic(&self.root.join(CURRENT_FILE), format!("{generation}\n").as_bytes())?;
        Ok(BuildOutcome { generation, rebuilt: true, manifest })
    }

    pub fn load(&self, generation: u64) -> Result<LoadedIndexes> {
        let dir = self.generation_dir(generation);
        let manifest = self.read_manifest(generation)?;
        let read = |name: &str| -> Result<Vec<u8>> {
            let path = dir.join(name);
            fs::read(&path).map_err(IsleError::io(&path))
        };
        let lex: LexicalFile =
            serde_json::from_slice(&read(LEXICAL_FILE)?).map_err(IsleError::json(dir.join(LEXICAL_FILE)))?;
        let lexical = InvertedIndex::from_parts(
            field_index(lex.title)?,
            field_index(lex.abstract_)?,
            lex.title_tokens,
            lex.paper_ids,
            lex.snapshot_fingerprint,
            lex.analyzer_fingerprint,
        )?;
        let vf: VectorFile =
            serde_json::from_slice(&read(VECTORS_FILE)?).map_err(IsleError::json(dir.join(VECTORS_FILE)))?;
        let vectors = VectorIndex::from_parts(
            vf.dimension,
            vf.entries,
            vf.excluded,
            vf.paper_ids,
            vf.model_id,
            vf.snapshot_fingerprint,
        )?;
        Ok(LoadedIndexes { manifest, lexical, vectors })
    }

    /// Loads whatever `CURRENT` points at.
    pub fn load_current(&self) -> Result<LoadedIndexes> {
        let generation = self
            .current()?
            .ok_or_else(|| IsleError::Data(format!("no index in {}; run `isle index` first", self.root.display())))?;
        self.load(generation)
    }
}
