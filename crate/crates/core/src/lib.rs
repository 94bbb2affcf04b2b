//! Continuous subgraph pattern matching over a stream of timestamped edge
//! insertions and deletions.
//!
//! The [`Engine`] keeps partial matches of every registered [`QueryGraph`]
//! up to date as updates arrive and reports each complete embedding at the
//! update that completes it. [`oracle`] is a from-scratch matcher over a
//! [`GraphSnapshot`] used as ground truth.

pub mod dsl;
pub mod gen;
pub mod graph_store;
pub mod matcher;
pub mod multiquery;
pub mod oracle;
pub mod query;
pub mod stream;
pub mod synopsis;
pub mod value;

#[cfg(test)]
mod testutil;

pub use dsl::{parse, parse_queries, unparse, ParseError, ParseErrorKind, SourceSpan};
pub use graph_store::{
    EdgeKey, Endpoint, GraphSnapshot, GraphStore, SnapshotEdge, StoreError, StreamUpdate, Timestamp, UpdateOp,
    Vertex, VertexKey,
};
pub use matcher::{
    replay, AdaptMode, Engine, EngineConfig, EngineError, EngineStats, MatchResult, MatchedEdge, PartialMatch,
    QueryStats,
};
pub use multiquery::{find_shared_gates, DispatchIndex, EdgeSignature, GateCandidate, GateKey};
pub use oracle::{find_all_matches, find_all_matches_temporal, Embedding, OracleError};
pub use query::{ClusterGap, GapUnit, QueryEdge, QueryGraph, QueryId, QueryVertex, TemporalConstraints, Violation};
pub use synopsis::{StreamSynopsis, SynopsisConfig, SynopsisError};
pub use value::{AttributePredicate, Attributes, CmpOp, Scalar};
