//! The exploration pipeline: hybrid retrieval, topic modeling, graph
//! construction and analytics over one index generation, with results
//! persisted under `explorations/<query_id>/` and cached in memory.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, RwLock};

use isle_core::corpus::{AuthorRecord, PaperRecord};
use isle_core::graph::{AnalyticsBundle, EdgeLabel, KnowledgeGraph, NodeLinkDocument, NodeRef, Provenance};
use isle_core::lexical::{InvertedIndex, SearchOptions};
use isle_core::retrieval::{
    preprocess_query, resolve_filter_set, FilterSpec, QueryRequest, RankedList, RetrievalOutcome, Retriever,
};
use isle_core::text::AnalyzerConfig;
use isle_core::topics::{
    run_topic_stage, CoherenceReport, TopicAssignment, TopicConfig, TopicDocument, TopicMode, TopicPath, TopicSummary,
};
use isle_core::vector::{Embedder, VectorIndex};
use isle_core::CorpusSnapshot;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::ServiceConfig;
use crate::embedder;
use crate::error::{IsleError, Result};
use crate::indexes::IndexStore;
use crate::store::{self, to_json_bytes, CorpusManifest};

pub const EXPLORATIONS_DIR: &str = "explorations";
pub const RESULT_FILE: &str = "result.json";
pub const GRAPH_FILE: &str = "graph.json";
pub const ANALYTICS_FILE: &str = "analytics.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExploreRequest {
    pub query: String,
    #[serde(default)]
    pub filters: FilterSpec,
    #[serde(default)]
    pub limit: Option<usize>,
    #[serde(default)]
    pub topic_mode: Option<TopicMode>,
}

impl ExploreRequest {
    pub fn new(query: impl Into<String>) -> Self {
        ExploreRequest { query: query.into(), filters: FilterSpec::default(), limit: None, topic_mode: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchRequest {
    pub query: String,
    #[serde(default)]
    pub filters: FilterSpec,
    #[serde(default)]
    pub limit: Option<usize>,
}

/// One fused result with the metadata a client needs to render it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultItem {
    pub rank: usize,
    pub paper_id: String,
    pub score: f64,
    pub title: String,
    pub publication_year: i32,
    pub authors: Vec<String>,
    pub lexical_rank: Option<usize>,
    pub semantic_rank: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub topic_id: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub topic_probability: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub citation_count: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphRef {
    pub url: String,
    pub node_count: usize,
    pub edge_count: usize,
    pub nodes_by_kind: BTreeMap<String, usize>,
    pub edges_by_label: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyticsRef {
    pub url: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplorationResult {
    pub query_id: String,
    pub query: String,
    pub normalized_query: String,
    pub filters: FilterSpec,
    pub limit: usize,
    pub generation: u64,
    pub results: Vec<ResultItem>,
    pub topic_path: Option<TopicPath>,
    pub topics: Vec<TopicSummary>,
    pub assignments: Vec<TopicAssignment>,
    pub coherence: Option<CoherenceReport>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub k_sweep: Vec<CoherenceReport>,
    pub graph: GraphRef,
    pub analytics: AnalyticsRef,
    pub semantic_degraded: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResponse {
    pub query: String,
    pub normalized_query: String,
    pub generation: u64,
    pub limit: usize,
    pub results: Vec<ResultItem>,
    pub semantic_degraded: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphLocal {
    pub query_id: String,
    pub citation_count: usize,
    pub topic_id: Option<i64>,
    pub topic_probability: Option<f64>,
    pub cites: Vec<String>,
    pub cited_by: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PaperDetail {
    pub paper: PaperRecord,
    pub authors: Vec<AuthorRecord>,
    pub institutions: Vec<String>,
    pub countries: Vec<String>,
    pub has_embedding: bool,
    /// Present when a `query_id` was given and the paper is in that graph.
    pub graph: Option<GraphLocal>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Health {
    pub status: String,
    pub papers: usize,
    pub generation: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CacheStatus {
    Hit,
    Miss,
}

impl CacheStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            CacheStatus::Hit => "hit",
            CacheStatus::Miss => "miss",
        }
    }
}

/// A corpus snapshot and the index generation built from it.
pub struct Generation {
    pub number: u64,
    pub snapshot: CorpusSnapshot,
    pub corpus: CorpusManifest,
    pub lexical: InvertedIndex,
    pub vectors: VectorIndex,
}

#[derive(Serialize)]
struct QueryKey<'a> {
    normalized_query: &'a str,
    filters: &'a FilterSpec,
    limit: usize,
    rrf_k: usize,
    depth: usize,
    topic_mode: TopicMode,
    topic_seed: u64,
    embedder: String,
    generation: u64,
}

struct Lru {
    capacity: usize,
    order: VecDeque<String>,
    items: HashMap<String, Arc<ExplorationResult>>,
}

impl Lru {
    fn new(capacity: usize) -> Self {
        Lru { capacity: capacity.max(1), order: VecDeque::new(), items: HashMap::new() }
    }

    fn get(&mut self, key: &str) -> Option<Arc<ExplorationResult>> {
        let value = self.items.get(key)?.clone();
        self.order.retain(|k| k != key);
        self.order.push_back(key.to_string());
        Some(value)
    }

    fn put(&mut self, key: String, value: Arc<ExplorationResult>) {
        if self.items.insert(key.clone(), value).is_none() {
            self.order.push_back(key);
        }
        while self.order.len() > self.capacity {
            if let Some(old) = self.order.pop_front() {
                self.items.remove(&old);
            }
        }
    }

    fn clear(&mut self) {
        self.order.clear();
        self.items.clear();
    }
}

/// Seconds recorded as graph build time: `SOURCE_DATE_EPOCH` when set,
/// otherwise 0 so that artifacts stay reproducible.
pub fn built_at_from_env() -> u64 {
    std::env::var("SOURCE_DATE_EPOCH").ok().and_then(|v| v.trim().parse().ok()).unwrap_or(0)
}

pub struct Engine {
    data_dir: PathBuf,
    config: ServiceConfig,
    analyzer: AnalyzerConfig,
    embedder: Box<dyn Embedder>,
    state: RwLock<Arc<Generation>>,
    cache: Mutex<Lru>,
    inflight: Mutex<HashMap<String, Arc<Mutex<()>>>>,
    built_at: u64,
    staging_counter: AtomicU64,
}

fn load_generation(data_dir: &Path) -> Result<Generation> {
    let (snapshot, corpus) = store::load(&store::corpus_dir(data_dir))?;
    let loaded = IndexStore::new(data_dir).load_current()?;
    Ok(Generation {
        number: loaded.manifest.generation,
        snapshot,
        corpus,
        lexical: loaded.lexical,
        vectors: loaded.vectors,
    })
}

impl Engine {
    /// Opens the corpus and live index generation under `config.data_dir`.
    pub fn open(config: ServiceConfig) -> Result<Self> {
        config.validate()?;
        let data_dir = config.data_dir.clone();
        let generation = load_generation(&data_dir)?;
        let embedder = embedder::from_binding(&config.embedder, generation.snapshot.embedding_model())?;
        Ok(Engine {
            data_dir,
            analyzer: AnalyzerConfig::default(),
            embedder,
            cache: Mutex::new(Lru::new(config.cache_size)),
            state: RwLock::new(Arc::new(generation)),
            inflight: Mutex::new(HashMap::new()),
            built_at: built_at_from_env(),
            staging_counter: AtomicU64::new(0),
            config,
        })
    }

    /// Replaces the built-in encoder; used for tests and embedding services.
    pub fn with_embedder(mut self, embedder: Box<dyn Embedder>) -> Self {
        self.embedder = embedder;
        self
    }

    pub fn with_built_at(mut self, built_at: u64) -> Self {
        self.built_at = built_at;
        self
    }

    pub fn config(&self) -> &ServiceConfig {
        &self.config
    }

    pub fn generation(&self) -> Arc<Generation> {
        self.state.read().expect("state lock").clone()
    }

    /// Switches to the generation `CURRENT` names if it changed. Returns
    /// whether a swap happened; the memory cache is dropped on swap.
    pub fn reload(&self) -> Result<bool> {
        let current = IndexStore::new(&self.data_dir).current()?;
        if current == Some(self.generation().number) {
            return Ok(false);
        }
        let next = Arc::new(load_generation(&self.data_dir)?);
        *self.state.write().expect("state lock") = next;
        self.cache.lock().expect("cache lock").clear();
        Ok(true)
    }

    pub fn health(&self) -> Health {
        let g = self.generation();
        Health { status: "ok".into(), papers: g.snapshot.paper_count(), generation: g.number }
    }

    fn query_request(&self, query: &str, filters: &FilterSpec, limit: Option<usize>) -> Result<QueryRequest> {
        if query.trim().is_empty() {
            return Err(IsleError::BadRequest("query must not be empty".into()));
        }
        let limit = limit.unwrap_or(self.config.default_limit);
        if limit > self.config.max_limit {
            return Err(IsleError::BadRequest(format!("limit {limit} exceeds the maximum {}", self.config.max_limit)));
        }
        let mut request = QueryRequest::new(query).with_limit(limit).with_filters(filters.clone());
        request.rrf_k = self.config.rrf_k;
        request.per_path_depth = self.config.per_path_depth.map(|d| d.max(limit));
        request.validate()?;
        Ok(request)
    }

    fn retrieve(&self, g: &Generation, request: &QueryRequest) -> Result<RetrievalOutcome> {
        let retriever = Retriever {
            snapshot: &g.snapshot,
            lexical: &g.lexical,
            vectors: &g.vectors,
            analyzer: &self.analyzer,
            options: SearchOptions::default(),
        };
        retriever.check_consistency()?;
        let normalized = preprocess_query(&request.text);
        let filter = resolve_filter_set(&g.snapshot, &request.filters);
        let depth = request.depth();
        let embedder: &dyn Embedder = self.embedder.as_ref();
        let (lexical, semantic) = std::thread::scope(|s| {
            let semantic = s.spawn(|| retriever.semantic_path(Some(embedder), &normalized, depth, &filter));
            let lexical = retriever.lexical_path(&normalized, depth, &filter);
            (lexical, semantic.join().expect("semantic path panicked"))
        });
        Ok(retriever.fuse(request, normalized, lexical?, semantic?))
    }

    fn result_items(g: &Generation, outcome: &RetrievalOutcome) -> Vec<ResultItem> {
        let ranks = |list: &RankedList| -> HashMap<String, usize> {
            list.entries.iter().map(|e| (e.paper_id.clone(), e.rank)).collect()
        };
        let lexical = ranks(&outcome.lexical);
        let semantic = ranks(&outcome.semantic);
        outcome
            .fused
            .entries
            .iter()
            .map(|e| {
                let paper = g.snapshot.get_paper(&e.paper_id).expect("fused ids come from the snapshot");
                let authors = g
                    .snapshot
                    .paper_authors(&e.paper_id)
                    .iter()
                    .filter_map(|a| g.snapshot.get_author(a).map(|r| r.name.clone()))
                    .collect();
                ResultItem {
                    rank: e.rank,
                    paper_id: e.paper_id.clone(),
                    score: e.score,
                    title: paper.title.clone(),
                    publication_year: paper.publication_year,
                    authors,
                    lexical_rank: lexical.get(&e.paper_id).copied(),
                    semantic_rank: semantic.get(&e.paper_id).copied(),
                    topic_id: None,
                    topic_probability: None,
                    citation_count: None,
                }
            })
            .collect()
    }

    /// Fused retrieval only.
    pub fn search(&self, req: &SearchRequest) -> Result<SearchResponse> {
        let g = self.generation();
        let request = self.query_request(&req.query, &req.filters, req.limit)?;
        let outcome = self.retrieve(&g, &request)?;
        Ok(SearchResponse {
            query: req.query.clone(),
            normalized_query: outcome.normalized_query.clone(),
            generation: g.number,
            limit: request.limit,
            results: Self::result_items(&g, &outcome),
            semantic_degraded: outcome.semantic_degraded,
        })
    }

    fn topic_mode(&self, req: &ExploreRequest) -> TopicMode {
        req.topic_mode.unwrap_or(self.config.topic_mode)
    }

    /// Stable identifier of a request against the live generation.
    pub fn query_id(&self, req: &ExploreRequest) -> Result<String> {
        let g = self.generation();
        let request = self.query_request(&req.query, &req.filters, req.limit)?;
        Ok(self.query_id_for(&g, req, &request))
    }

    fn query_id_for(&self, g: &Generation, req: &ExploreRequest, request: &QueryRequest) -> String {
        let key = QueryKey {
            normalized_query: &preprocess_query(&request.text),
            filters: &request.filters,
            limit: request.limit,
            rrf_k: request.rrf_k,
            depth: request.depth(),
            topic_mode: self.topic_mode(req),
            topic_seed: self.config.topic_seed,
            embedder: self.embedder.model_id(),
            generation: g.number,
        };
        let bytes = serde_json::to_vec(&key).expect("key serializes");
        hex::encode(&Sha256::digest(&bytes)[..16])
    }

    pub fn exploration_dir(&self, query_id: &str) -> PathBuf {
        self.data_dir.join(EXPLORATIONS_DIR).join(query_id)
    }

    fn valid_query_id(query_id: &str) -> bool {
        query_id.len() == 32 && query_id.bytes().all(|b| b.is_ascii_hexdigit())
    }

    fn artifact_path(&self, query_id: &str, file: &str) -> Result<PathBuf> {
        if !Self::valid_query_id(query_id) {
            return Err(IsleError::NotFound(format!("no exploration `{query_id}`")));
        }
        let path = self.exploration_dir(query_id).join(file);
        if !path.is_file() {
            return Err(IsleError::NotFound(format!("no exploration `{query_id}`")));
        }
        Ok(path)
    }

    /// Raw bytes of a persisted artifact.
    pub fn artifact(&self, query_id: &str, file: &str) -> Result<Vec<u8>> {
        let path = self.artifact_path(query_id, file)?;
        fs::read(&path).map_err(IsleError::io(&path))
    }

    fn cached(&self, query_id: &str) -> Result<Option<Arc<ExplorationResult>>> {
        if let Some(hit) = self.cache.lock().expect("cache lock").get(query_id) {
            return Ok(Some(hit));
        }
        let path = self.exploration_dir(query_id).join(RESULT_FILE);
        if !path.is_file() {
            return Ok(None);
        }
        let bytes = fs::read(&path).map_err(IsleError::io(&path))?;
        let result: Arc<ExplorationResult> = Arc::new(serde_json::from_slice(&bytes).map_err(IsleError::json(&path))?);
        self.cache.lock().expect("cache lock").put(query_id.to_string(), result.clone());
        Ok(Some(result))
    }

    /// Runs or recalls an exploration. Concurrent identical requests share
    /// one execution.
    pub fn explore(&self, req: &ExploreRequest) -> Result<(Arc<ExplorationResult>, CacheStatus)> {
        let g = self.generation();
        let request = self.query_request(&req.query, &req.filters, req.limit)?;
        let query_id = self.query_id_for(&g, req, &request);
        if let Some(hit) = self.cached(&query_id)? {
            return Ok((hit, CacheStatus::Hit));
        }
        let slot = self.inflight.lock().expect("inflight lock").entry(query_id.clone()).or_default().clone();
        let _guard = slot.lock().expect("query lock");
        let outcome = match self.cached(&query_id)? {
            Some(hit) => Ok((hit, CacheStatus::Hit)),
            None => self.run(&g, req, &request, &query_id).map(|r| (r, CacheStatus::Miss)),
        };
        let mut inflight = self.inflight.lock().expect("inflight lock");
        if Arc::strong_count(&slot) <= 2 {
            inflight.remove(&query_id);
        }
        outcome
    }

    fn run(
        &self,
        g: &Generation,
        req: &ExploreRequest,
        request: &QueryRequest,
        query_id: &str,
    ) -> Result<Arc<ExplorationResult>> {
        let outcome = self.retrieve(g, request)?;
        let mut results = Self::result_items(g, &outcome);

        let docs: Vec<TopicDocument> = outcome
            .fused
            .entries
            .iter()
            .map(|e| {
                let p = g.snapshot.get_paper(&e.paper_id).expect("fused ids come from the snapshot");
                TopicDocument {
                    paper_id: e.paper_id.clone(),
                    text: format!("{} {}", p.title, p.abstract_text),
                    embedding: g.snapshot.embedding(&e.paper_id).map(<[f64]>::to_vec),
                }
            })
            .collect();
        let topic_config =
            TopicConfig { mode: self.topic_mode(req), seed: self.config.topic_seed, ..TopicConfig::default() };
        let stage = if docs.is_empty() { None } else { Some(run_topic_stage(&docs, &self.analyzer, &topic_config)?) };
        let (assignments, summaries) =
            stage.as_ref().map_or((Vec::new(), Vec::new()), |s| (s.assignments.clone(), s.summaries.clone()));

        let provenance = Provenance {
            query_hash: query_id.to_string(),
            snapshot_hash: g.snapshot.fingerprint().to_string(),
            built_at: self.built_at,
        };
        let graph = KnowledgeGraph::build(&outcome.fused, &assignments, &summaries, &g.snapshot, provenance)?;
        let analytics = graph.analytics();

        let by_paper: HashMap<&str, &TopicAssignment> = assignments.iter().map(|a| (a.paper_id.as_str(), a)).collect();
        for item in &mut results {
            if let Some(a) = by_paper.get(item.paper_id.as_str()) {
                item.topic_id = Some(a.topic_id);
                item.topic_probability = Some(a.probability);
            }
            item.citation_count = graph.node(&NodeRef::paper(&item.paper_id)).and_then(|n| n.citation_count);
        }

        let manifest = graph.manifest();
        let key = |v: &serde_json::Value| v.as_str().unwrap_or_default().to_string();
        let result = ExplorationResult {
            query_id: query_id.to_string(),
            query: req.query.clone(),
            normalized_query: outcome.normalized_query.clone(),
            filters: request.filters.clone(),
            limit: request.limit,
            generation: g.number,
            results,
            topic_path: stage.as_ref().map(|s| s.path),
            topics: summaries,
            assignments,
            coherence: stage.as_ref().map(|s| s.coherence.clone()),
            k_sweep: stage.map(|s| s.k_sweep).unwrap_or_default(),
            graph: GraphRef {
                url: format!("/api/graph/{query_id}"),
                node_count: manifest.node_count,
                edge_count: manifest.edge_count,
                nodes_by_kind: manifest
                    .nodes_by_kind
                    .iter()
                    .map(|(k, v)| (key(&serde_json::to_value(k).expect("kind")), *v))
                    .collect(),
                edges_by_label: manifest
                    .edges_by_label
                    .iter()
                    .map(|(k, v)| (key(&serde_json::to_value(k).expect("label")), *v))
                    .collect(),
            },
            analytics: AnalyticsRef { url: format!("/api/analytics/{query_id}") },
            semantic_degraded: outcome.semantic_degraded,
        };
        self.persist(query_id, &result, &graph.to_node_link(), &analytics)?;
        let result = Arc::new(result);
        self.cache.lock().expect("cache lock").put(query_id.to_string(), result.clone());
        Ok(result)
    }

    fn persist(
        &self,
        query_id: &str,
        result: &ExplorationResult,
        graph: &NodeLinkDocument,
        analytics: &AnalyticsBundle,
    ) -> Result<()> {
        let root = self.data_dir.join(EXPLORATIONS_DIR);
        fs::create_dir_all(&root).map_err(IsleError::io(&root))?;
        let target = root.join(query_id);
        if target.join(RESULT_FILE).is_file() {
            return Ok(());
        }
        let n = self.staging_counter.fetch_add(1, Ordering::Relaxed);
        let staging = root.join(format!(".{query_id}.{}.{n}", std::process::id()));
        fs::create_dir_all(&staging).map_err(IsleError::io(&staging))?;
        for (name, bytes) in [
            (GRAPH_FILE, to_json_bytes(graph)),
            (ANALYTICS_FILE, to_json_bytes(analytics)),
            (RESULT_FILE, to_json_bytes(result)),
        ] {
            let path = staging.join(name);
            fs::write(&path, bytes).map_err(IsleError::io(&path))?;
        }
        if target.exists() {
            fs::remove_dir_all(&target).map_err(IsleError::io(&target))?;
        }
        match fs::rename(&staging, &target) {
            Ok(()) => Ok(()),
            Err(_) if target.join(RESULT_FILE).is_file() => {
                let _ = fs::remove_dir_all(&staging);
                Ok(())
            }
            Err(e) => Err(IsleError::io(&target)(e)),
        }
    }

    /// Loads the persisted graph of an exploration.
    pub fn graph(&self, query_id: &str) -> Result<KnowledgeGraph> {
        let path = self.artifact_path(query_id, GRAPH_FILE)?;
        let bytes = fs::read(&path).map_err(IsleError::io(&path))?;
        let doc: NodeLinkDocument = serde_json::from_slice(&bytes).map_err(IsleError::json(&path))?;
        Ok(KnowledgeGraph::from_node_link(doc)?)
    }

    pub fn paper(&self, paper_id: &str, query_id: Option<&str>) -> Result<PaperDetail> {
        let g = self.generation();
        let paper = g
            .snapshot
            .get_paper(paper_id)
            .ok_or_else(|| IsleError::NotFound(format!("no paper `{paper_id}`")))?
            .clone();
        let authors =
            g.snapshot.paper_authors(paper_id).iter().filter_map(|a| g.snapshot.get_author(a).cloned()).collect();
        let graph = match query_id {
            None => None,
            Some(qid) => {
                let graph = self.graph(qid)?;
                let node = NodeRef::paper(paper_id);
                graph.node(&node).map(|attrs| {
                    let mut cites = Vec::new();
                    let mut cited_by = Vec::new();
                    for e in graph.edges().iter().filter(|e| e.label == EdgeLabel::Cites) {
                        if e.from == node {
                            cites.push(e.to.key.clone());
                        }
                        if e.to == node {
                            cited_by.push(e.from.key.clone());
                        }
                    }
                    GraphLocal {
                        query_id: qid.to_string(),
                        citation_count: attrs.citation_count.unwrap_or(0),
                        topic_id: attrs.topic_id,
                        topic_probability: attrs.topic_probability,
                        cites,
                        cited_by,
                    }
                })
            }
        };
        Ok(PaperDetail {
            institutions: g.snapshot.paper_institutions(paper_id).map(str::to_string).collect(),
            countries: g.snapshot.paper_countries(paper_id).map(str::to_string).collect(),
            has_embedding: g.snapshot.embedding(paper_id).is_some(),
            paper,
            authors,
            graph,
        })
    }
}
