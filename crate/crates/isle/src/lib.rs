//! Storage, index persistence, the exploration pipeline, the HTTP service and
//! the CLI around `isle-core`.
//!
//! A data directory holds:
//!
//! - `corpus/`: the validated snapshot as JSONL files plus `manifest.json`;
//! - `index/gen-<n>/` and `index/CURRENT`: immutable index generations;
//! - `explorations/<query_id>/`: `result.json`, `graph.json` and
//!   `analytics.json` of every exploration.

#![forbid(unsafe_code)]

pub mod cli;
pub mod config;
pub mod embedder;
pub mod error;
pub mod indexes;
pub mod ingest;
pub mod pipeline;
pub mod server;
pub mod store;

pub use config::ServiceConfig;
pub use error::{IsleError, Result};
pub use pipeline::{Engine, ExplorationResult, ExploreRequest, SearchRequest};
