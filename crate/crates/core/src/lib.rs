//! Entropy-gated dual-path retrieval over personal memory corpora.
//!
//! A short probe search summarizes how familiar a query looks (mean score and
//! softmax entropy of the top hits). Familiar queries get a single exact top-K
//! search; unfamiliar ones run a bounded retrieve → cluster → mix loop that
//! follows clusters of related memories away from the literal query.
//!
//! ```
//! use dualmem_core::{CorpusIndex, GateParams, MemoryRecord, RecollectParams, Retriever};
//!
//! let index = CorpusIndex::from_records((0..50).map(|i| {
//!     let t = i as f64 * 0.1;
//!     MemoryRecord::new(format!("m{i:02}"), vec![t.cos(), t.sin(), 0.3])
//! }))
//! .unwrap();
//! let retriever = Retriever::new(&index, GateParams::default(), RecollectParams::default());
//! let result = retriever.retrieve("q", index.embedding(7)).unwrap();
//! assert_eq!(result.ranked.entries()[0].id, "m07");
//! ```

pub mod config;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod gate;
pub mod kmeans;
pub mod recollect;
pub mod retriever;
pub mod vector;

pub use config::RunConfig;
pub use corpus::{CorpusIndex, MemoryRecord, NormStats, ScoredId, ScoredList};
pub use error::{Error, Result};
pub use gate::{GateParams, GateSignal, Strategy};
pub use recollect::{recollect, Counters, RecollectParams, RecollectionTrace};
pub use retriever::{OutputOptions, PathChoice, Query, RetrievalResult, Retriever};
