//! Command-line entry point. Exit codes: 0 success, 1 usage error, 2 data
//! or runtime error.

use std::collections::BTreeSet;
use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use isle_core::corpus::ValidationPolicy;
use isle_core::retrieval::FilterSpec;
use isle_core::text::AnalyzerConfig;
use isle_core::topics::TopicMode;
use isle_core::vector::EmbedderBinding;
use serde::Serialize;

use crate::config::{ServiceConfig, CONFIG_FILE, ENV_PREFIX};
use crate::embedder::{self, DEFAULT_TIMEOUT_MS};
use crate::error::{IsleError, Result};
use crate::indexes::IndexStore;
use crate::ingest;
use crate::pipeline::{Engine, ExplorationResult, ExploreRequest, ResultItem, SearchRequest};
use crate::server;
use crate::store;

#[derive(Debug, Parser)]
#[command(name = "isle", version, about = "Query-conditioned literature exploration")]
pub struct Cli {
    /// Working directory holding corpus/, index/ and explorations/.
    #[arg(long, global = true)]
    pub data_dir: Option<PathBuf>,
    /// TOML configuration file; defaults to <data-dir>/isle.toml when present.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub embedder: Option<EmbedderKind>,
    /// Endpoint of the external embedding service.
    #[arg(long, global = true)]
    pub embedder_url: Option<String>,
    /// Seed of the projection embedder and the topic models.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Embedding dimension.
    #[arg(long, global = true)]
    pub dimension: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EmbedderKind {
    Projection,
    External,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PolicyArg {
    Strict,
    Drop,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TopicModeArg {
    Auto,
    Nmf,
    Cluster,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate a dump directory and persist it as the corpus snapshot.
    Ingest {
        #[arg(long)]
        source: Option<PathBuf>,
        #[arg(long, value_enum)]
        policy: Option<PolicyArg>,
        /// Embed papers that have no vector with the configured embedder.
        #[arg(long)]
        embed_missing: bool,
        #[arg(long)]
        json: bool,
    },
    /// Build a new index generation unless the corpus is unchanged.
    Index {
        #[arg(long)]
        force: bool,
        #[arg(long)]
        json: bool,
    },
    /// Hybrid retrieval only.
    Search {
        #[command(flatten)]
        query: QueryArgs,
    },
    /// Retrieval, topics, knowledge graph and analytics.
    Explore {
        #[command(flatten)]
        query: QueryArgs,
        #[arg(long, value_enum)]
        topic_mode: Option<TopicModeArg>,
    },
    /// Run the HTTP service.
    Serve {
        #[arg(long)]
        listen: Option<String>,
    },
    /// Print corpus statistics.
    Stats {
        #[arg(long)]
        json: bool,
    },
}

#[derive(Debug, Args)]
pub struct QueryArgs {
    #[arg(long, short)]
    pub query: String,
    #[arg(long)]
    pub limit: Option<usize>,
    #[arg(long)]
    pub year_from: Option<i32>,
    #[arg(long)]
    pub year_to: Option<i32>,
    #[arg(long)]
    pub country: Vec<String>,
    #[arg(long)]
    pub author: Vec<String>,
    #[arg(long)]
    pub institution: Vec<String>,
    #[arg(long)]
    pub json: bool,
}

impl QueryArgs {
    pub fn filters(&self) -> FilterSpec {
        let set = |v: &[String]| (!v.is_empty()).then(|| v.iter().cloned().collect::<BTreeSet<_>>());
        let year_range = match (self.year_from, self.year_to) {
            (None, None) => None,
            (lo, hi) => Some((lo.unwrap_or(i32::MIN), hi.unwrap_or(i32::MAX))),
        };
        FilterSpec {
            year_range,
            authors: set(&self.author),
            institutions: set(&self.institution),
            countries: set(&self.country),
        }
    }
}

fn resolve_config<I, K, V>(cli: &Cli, env: I) -> Result<ServiceConfig>
where
    I: IntoIterator<Item = (K, V)>,
    K: AsRef<str>,
    V: AsRef<str>,
{
    let env: Vec<(String, String)> =
        env.into_iter().map(|(k, v)| (k.as_ref().to_string(), v.as_ref().to_string())).collect();
    let env_data_dir = env.iter().find(|(k, _)| k == &format!("{ENV_PREFIX}DATA_DIR")).map(|(_, v)| PathBuf::from(v));
    let data_dir = cli.data_dir.clone().or(env_data_dir).unwrap_or_else(|| ServiceConfig::default().data_dir);
    let path = cli.config.clone().or_else(|| {
        let p = data_dir.join(CONFIG_FILE);
        p.exists().then_some(p)
    });
    let mut config = ServiceConfig::load(path.as_deref())?.with_env(env)?;
    if let Some(d) = &cli.data_dir {
        config.data_dir = d.clone();
    }
    let mut binding = config.embedder.clone();
    match cli.embedder {
        Some(EmbedderKind::Projection) => {
            binding =
                EmbedderBinding::projection(binding.seed.unwrap_or(crate::config::DEFAULT_SEED), binding.dimension);
        }
        Some(EmbedderKind::External) => {
            let url = cli.embedder_url.clone().or(binding.endpoint.clone()).unwrap_or_default();
            binding =
                EmbedderBinding::external(url, binding.dimension, binding.timeout_ms.unwrap_or(DEFAULT_TIMEOUT_MS));
        }
        None => {
            if let Some(url) = &cli.embedder_url {
                binding.endpoint = Some(url.clone());
            }
        }
    }
    if let Some(url) = &cli.embedder_url {
        binding.endpoint = Some(url.clone());
    }
    if let Some(seed) = cli.seed {
        config.topic_seed = seed;
        if binding.seed.is_some() {
            binding.seed = Some(seed);
        }
    }
    if let Some(d) = cli.dimension {
        binding.dimension = d;
    }
    if binding.mode == isle_core::vector::EmbedderMode::ExternalService && binding.endpoint.as_deref() == Some("") {
        binding.endpoint = None;
    }
    config.embedder = binding;
    config.validate()?;
    Ok(config)
}

fn print_json<T: Serialize>(out: &mut dyn Write, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("serializes");
    writeln!(out, "{text}").map_err(IsleError::io("<stdout>"))
}

fn line(out: &mut dyn Write, text: impl AsRef<str>) -> Result<()> {
    writeln!(out, "{}", text.as_ref()).map_err(IsleError::io("<stdout>"))
}

fn truncate(s: &str, n: usize) -> String {
    if s.chars().count() <= n {
        s.to_string()
    } else {
        let mut t: String = s.chars().take(n.saturating_sub(1)).collect();
        t.push('…');
        t
    }
}

fn print_results(out: &mut dyn Write, results: &[ResultItem]) -> Result<()> {
    line(out, format!("{:>4}  {:>8}  {:>4}  {:>5}  {:<14}  title", "rank", "score", "year", "topic", "paper_id"))?;
    for r in results {
        let topic = r.topic_id.map_or_else(|| "-".to_string(), |t| t.to_string());
        line(
            out,
            format!(
                "{:>4}  {:>8.5}  {:>4}  {:>5}  {:<14}  {}",
                r.rank,
                r.score,
                r.publication_year,
                topic,
                truncate(&r.paper_id, 14),
                truncate(&r.title, 70)
            ),
        )?;
    }
    Ok(())
}

fn print_exploration(out: &mut dyn Write, r: &ExplorationResult) -> Result<()> {
    line(out, format!("query_id     {}", r.query_id))?;
    line(out, format!("query        {}", r.normalized_query))?;
    line(out, format!("generation   {}", r.generation))?;
    line(out, format!("results      {}", r.results.len()))?;
    if r.semantic_degraded {
        line(out, "semantic     degraded (lexical-only)")?;
    }
    if let Some(path) = r.topic_path {
        let name = serde_json::to_value(path).expect("path").as_str().unwrap_or_default().to_string();
        line(out, format!("topic path   {name}"))?;
    }
    if let Some(c) = &r.coherence {
        line(out, format!("coherence    {:.4} (k={})", c.mean_npmi, c.k))?;
    }
    line(out, format!("graph        {} nodes, {} edges", r.graph.node_count, r.graph.edge_count))?;
    line(out, "")?;
    line(out, format!("{:>5}  {:>5}  keywords", "topic", "docs"))?;
    for t in &r.topics {
        let words: Vec<&str> = t.keywords.iter().map(|k| k.term.as_str()).collect();
        line(out, format!("{:>5}  {:>5}  {}", t.topic_id, t.document_count, words.join(", ")))?;
    }
    line(out, "")?;
    print_results(out, &r.results)
}

fn runtime() -> Result<tokio::runtime::Runtime> {
    tokio::runtime::Builder::new_multi_thread().enable_all().build().map_err(IsleError::io("<runtime>"))
}

fn execute(cli: Cli, config: ServiceConfig, out: &mut dyn Write) -> Result<()> {
    let data_dir = config.data_dir.clone();
    match cli.command {
        Command::Ingest { source, policy, embed_missing, json } => {
            let source = source
                .or_else(|| config.corpus_source.clone())
                .ok_or_else(|| IsleError::Usage("ingest needs --source <dir> or corpus_source in the config".into()))?;
            let policy = match policy {
                Some(PolicyArg::Strict) => ValidationPolicy::Strict,
                Some(PolicyArg::Drop) => ValidationPolicy::Drop,
                None => config.policy,
            };
            let mut dump = ingest::read_dump(&source)?;
            let embedded = if embed_missing {
                let e = embedder::from_binding(&config.embedder, None)?;
                ingest::embed_missing(&mut dump.input, e.as_ref())?
            } else {
                0
            };
            let (snapshot, summary) = ingest::assemble(dump, policy, embedded)?;
            let manifest = store::persist(&snapshot, summary, &store::corpus_dir(&data_dir))?;
            if json {
                print_json(out, &manifest)
            } else {
                let s = &manifest.stats;
                line(
                    out,
                    format!(
                        "ingested {} papers, {} authors, {} citations",
                        s.paper_count, s.author_count, s.citation_count
                    ),
                )?;
                let r = &manifest.ingest.report;
                line(
                    out,
                    format!(
                        "malformed={} dangling={} duplicates={} unknown_years={} missing_embeddings={} embedded={}",
                        r.malformed,
                        r.dangling,
                        r.duplicate_papers + r.duplicate_authors + r.duplicate_citations + r.duplicate_embeddings,
                        r.unknown_years,
                        r.missing_embeddings,
                        manifest.ingest.embedded_at_ingest
                    ),
                )?;
                line(out, format!("content hash {}", manifest.content_hash))
            }
        }
        Command::Index { force, json } => {
            let (snapshot, corpus) = store::load(&store::corpus_dir(&data_dir))?;
            let outcome = IndexStore::new(&data_dir).build(&snapshot, &corpus, &AnalyzerConfig::default(), force)?;
            if json {
                print_json(out, &outcome)
            } else if outcome.rebuilt {
                line(
                    out,
                    format!(
                        "built generation {} ({} papers, {} vectors)",
                        outcome.generation, outcome.manifest.paper_count, outcome.manifest.vector_count
                    ),
                )
            } else {
                line(out, format!("generation {} is up to date; nothing to rebuild", outcome.generation))
            }
        }
        Command::Search { query } => {
            let engine = Engine::open(config)?;
            let req = SearchRequest { query: query.query.clone(), filters: query.filters(), limit: query.limit };
            let response = engine.search(&req)?;
            if query.json {
                print_json(out, &response)
            } else {
                if response.semantic_degraded {
                    line(out, "semantic path unavailable; results are lexical-only")?;
                }
                print_results(out, &response.results)
            }
        }
        Command::Explore { query, topic_mode } => {
            let engine = Engine::open(config)?;
            let req = ExploreRequest {
                query: query.query.clone(),
                filters: query.filters(),
                limit: query.limit,
                topic_mode: topic_mode.map(|m| match m {
                    TopicModeArg::Auto => TopicMode::Auto,
                    TopicModeArg::Nmf => TopicMode::Nmf,
                    TopicModeArg::Cluster => TopicMode::Cluster,
                }),
            };
            let (result, _) = engine.explore(&req)?;
            if query.json {
                print_json(out, result.as_ref())
            } else {
                print_exploration(out, &result)
            }
        }
        Command::Serve { listen } => {
            let listen = listen.unwrap_or_else(|| config.listen.clone());
            let engine = Arc::new(Engine::open(config)?);
            let rt = runtime()?;
            rt.block_on(async move {
                let listener = tokio::net::TcpListener::bind(&listen)
                    .await
                    .map_err(|e| IsleError::Data(format!("cannot bind {listen}: {e}")))?;
                let addr = listener.local_addr().map_err(IsleError::io("<listener>"))?;
                line(out, format!("listening on http://{addr}"))?;
                out.flush().map_err(IsleError::io("<stdout>"))?;
                server::serve(engine, listener, server::shutdown_signal()).await.map_err(IsleError::io("<server>"))
            })
        }
        Command::Stats { json } => {
            let manifest = store::read_manifest(&store::corpus_dir(&data_dir))?;
            if json {
                print_json(out, &manifest.stats)
            } else {
                let s = &manifest.stats;
                line(out, format!("paper_count              {}", s.paper_count))?;
                line(out, format!("author_count             {}", s.author_count))?;
                line(out, format!("institution_count        {}", s.institution_count))?;
                line(out, format!("country_count            {}", s.country_count))?;
                line(out, format!("citation_count           {}", s.citation_count))?;
                line(out, format!("avg_citations_per_paper  {:.2}", s.avg_citations_per_paper))?;
                line(out, format!("embedding_count          {}", manifest.embedding_count))?;
                line(
                    out,
                    format!(
                        "embedding_dim            {}",
                        manifest.embedding_dim.map_or("-".into(), |d| d.to_string())
                    ),
                )
            }
        }
    }
}

/// Parses `args`, runs the command and returns the exit code.
pub fn run<A, T, E, K, V>(args: A, env: E, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    A: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
    E: IntoIterator<Item = (K, V)>,
    K: AsRef<str>,
    V: AsRef<str>,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let rendered = e.render().to_string();
            let _ = if code == 0 { write!(out, "{rendered}") } else { write!(err, "{rendered}") };
            return code;
        }
    };
    let result = resolve_config(&cli, env).and_then(|config| execute(cli, config, out));
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Cli {
        Cli::try_parse_from(args).unwrap()
    }

    #[test]
    fn filters_from_flags() {
        let cli = parse(&["isle", "search", "-q", "x", "--year-from", "2018", "--country", "US", "--country", "DE"]);
        let Command::Search { query } = cli.command else { panic!() };
        let f = query.filters();
        assert_eq!(f.year_range, Some((2018, i32::MAX)));
        assert_eq!(f.countries.unwrap().len(), 2);
        assert!(f.authors.is_none());
    }

    #[test]
    fn flags_override_environment_and_file() {
        let cli = parse(&["isle", "--seed", "9", "--embedder", "external", "--embedder-url", "http://h/e", "stats"]);
        let c = resolve_config(&cli, [("ISLE_RRF_K", "20")]).unwrap();
        assert_eq!(c.rrf_k, 20);
        assert_eq!(c.topic_seed, 9);
        assert_eq!(c.embedder.endpoint.as_deref(), Some("http://h/e"));
        let cli = parse(&["isle", "--embedder", "external", "stats"]);
        assert!(resolve_config(&cli, Vec::<(String, String)>::new()).is_err());
    }

    #[test]
    fn usage_errors_exit_one() {
        let mut out = Vec::new();
        let mut err = Vec::new();
        assert_eq!(run(["isle", "frobnicate"], Vec::<(String, String)>::new(), &mut out, &mut err), 1);
        assert!(!err.is_empty());
        assert_eq!(run(["isle", "--help"], Vec::<(String, String)>::new(), &mut out, &mut err), 0);
    }

    #[test]
    fn missing_corpus_exits_two() {
        let dir = tempfile::tempdir().unwrap();
        let mut out = Vec::new();
        let mut err = Vec::new();
        let d = dir.path().to_str().unwrap();
        assert_eq!(run(["isle", "--data-dir", d, "stats"], Vec::<(String, String)>::new(), &mut out, &mut err), 2);
        assert!(String::from_utf8(err).unwrap().contains("isle ingest"));
    }
}
