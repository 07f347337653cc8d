//! Core algorithms for query-conditioned literature exploration.
//!
//! Everything in this crate is pure computation over in-memory data: text
//! analysis, a field-aware BM25 inverted index, exact cosine KNN, reciprocal
//! rank fusion, the NMF and embedding-cluster topic paths, and the
//! query-conditioned knowledge graph with its citation impact measures.
//!
//! The crate is `no_std` and only needs `alloc`. Transcendental functions go
//! through [`libm`] so that results are bit-identical across platforms. File
//! formats, persistence, networking and the CLI live in the `isle` crate.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

#[cfg(any(test, feature = "std"))]
extern crate std;

pub mod corpus;
pub mod graph;
pub mod lexical;
pub mod math;
pub mod retrieval;
pub mod text;
pub mod topics;
pub mod vector;

pub use corpus::{CorpusSnapshot, CorpusStats, PaperRecord, ValidationPolicy};
pub use graph::KnowledgeGraph;
pub use lexical::InvertedIndex;
pub use retrieval::{FilterSet, FilterSpec, QueryRequest, RankedList};
pub use text::AnalyzerConfig;
pub use vector::{DenseVector, VectorIndex};
