//! The evolving data graph, built edge by edge from the update stream.
//!
//! Vertices come into existence the first time an edge references them and
//! are never removed. Every edge insertion is kept in an append-only history
//! so that `snapshot` can reconstruct the graph as of any past timestamp.

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

use crate::value::Attributes;

pub type Timestamp = u64;

/// Interned vertex id, stable for the lifetime of a store.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VertexKey(pub u32);

/// Interned edge id. Reinserting a deleted edge id reuses its key.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EdgeKey(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UpdateOp {
    Insert,
    Delete,
}

/// One end of a streamed edge. Attributes are only recorded when the
/// reference creates the vertex; later references must agree with them.
#[derive(Debug, Clone, PartialEq)]
pub struct Endpoint {
    pub id: String,
    pub label: String,
    pub attributes: Attributes,
}

impl Endpoint {
    pub fn new(id: impl Into<String>, label: impl Into<String>) -> Self {
        Endpoint {
            id: id.into(),
            label: label.into(),
            attributes: Attributes::new(),
        }
    }

    pub fn with_attr(mut self, name: &str, value: impl Into<crate::Scalar>) -> Self {
        self.attributes.insert(name.to_string(), value.into());
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StreamUpdate {
    pub op: UpdateOp,
    pub edge_id: String,
    pub src: Endpoint,
    pub dst: Endpoint,
    pub edge_type: String,
    pub timestamp: Timestamp,
    pub attributes: Attributes,
}

impl StreamUpdate {
    pub fn insert(
        edge_id: impl Into<String>,
        src: Endpoint,
        edge_type: impl Into<String>,
        dst: Endpoint,
        timestamp: Timestamp,
    ) -> Self {
        StreamUpdate {
            op: UpdateOp::Insert,
            edge_id: edge_id.into(),
            src,
            dst,
            edge_type: edge_type.into(),
            timestamp,
            attributes: Attributes::new(),
        }
    }

    /// A delete carries the endpoints for the wire format's sake; the store
    /// only looks at the edge id.
    pub fn delete(edge_id: impl Into<String>, src: Endpoint, dst: Endpoint, timestamp: Timestamp) -> Self {
        StreamUpdate {
            op: UpdateOp::Delete,
            edge_id: edge_id.into(),
            src,
            dst,
            edge_type: String::new(),
            timestamp,
            attributes: Attributes::new(),
        }
    }

    pub fn with_attr(mut self, name: &str, value: impl Into<crate::Scalar>) -> Self {
        self.attributes.insert(name.to_string(), value.into());
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Vertex {
    pub id: String,
    pub label: String,
    pub attributes: Attributes,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotEdge {
    pub edge_id: String,
    pub src: String,
    pub dst: String,
    pub edge_type: String,
    pub timestamp: Timestamp,
    pub attributes: Attributes,
}

/// Immutable view of the graph at `as_of`. Vertices and edges are sorted by
/// id so that two snapshots of the same graph compare equal.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct GraphSnapshot {
    pub vertices: Vec<Vertex>,
    pub edges: Vec<SnapshotEdge>,
    pub as_of: Timestamp,
}

impl GraphSnapshot {
    pub fn vertex(&self, id: &str) -> Option<&Vertex> {
        self.vertices
            .binary_search_by(|v| v.id.as_str().cmp(id))
            .ok()
            .map(|i| &self.vertices[i])
    }

    pub fn edge(&self, edge_id: &str) -> Option<&SnapshotEdge> {
        self.edges
            .binary_search_by(|e| e.edge_id.as_str().cmp(edge_id))
            .ok()
            .map(|i| &self.edges[i])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UpdateReceipt {
    pub created_vertices: usize,
    pub edge: EdgeKey,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StoreError {
    #[error("edge id `{0}` is already live")]
    DuplicateEdgeId(String),
    #[error("edge id `{0}` is not live")]
    UnknownEdgeId(String),
    #[error("vertex `{id}` has label `{existing}`, referenced as `{requested}`")]
    LabelConflict {
        id: String,
        existing: String,
        requested: String,
    },
    #[error("vertex `{id}` attribute `{attr}` conflicts with its value at creation")]
    AttributeConflict { id: String, attr: String },
}

#[derive(Debug, Clone)]
struct VertexRecord {
    vertex: Vertex,
    first_seen: Timestamp,
}

#[derive(Debug, Clone)]
pub(crate) struct EdgeRecord {
    pub key: EdgeKey,
    pub src: VertexKey,
    pub dst: VertexKey,
    pub edge_type: String,
    pub inserted: Timestamp,
    pub deleted: Option<Timestamp>,
    pub attributes: Attributes,
}

/// A live edge as seen by the matcher.
#[derive(Debug, Clone, Copy)]
pub struct EdgeView<'a> {
    pub key: EdgeKey,
    pub src: VertexKey,
    pub dst: VertexKey,
    pub edge_type: &'a str,
    pub timestamp: Timestamp,
    pub attributes: &'a Attributes,
}

#[derive(Debug, Default, Clone)]
pub struct GraphStore {
    vertex_keys: HashMap<String, VertexKey>,
    vertices: Vec<VertexRecord>,
    edge_keys: HashMap<String, EdgeKey>,
    edge_names: Vec<String>,
    history: Vec<EdgeRecord>,
    /// Index into `history` for each live edge.
    live: HashMap<EdgeKey, usize>,
}

impl GraphStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn live_edge_count(&self) -> usize {
        self.live.len()
    }

    pub fn vertex_key(&self, id: &str) -> Option<VertexKey> {
        self.vertex_keys.get(id).copied()
    }

    pub fn vertex(&self, key: VertexKey) -> &Vertex {
        &self.vertices[key.0 as usize].vertex
    }

    pub fn edge_key(&self, edge_id: &str) -> Option<EdgeKey> {
        self.edge_keys.get(edge_id).copied()
    }

    pub fn edge_name(&self, key: EdgeKey) -> &str {
        &self.edge_names[key.0 as usize]
    }

    pub fn live_edge(&self, key: EdgeKey) -> Option<EdgeView<'_>> {
        self.live.get(&key).map(|&i| {
            let r = &self.history[i];
            EdgeView {
                key: r.key,
                src: r.src,
                dst: r.dst,
                edge_type: &r.edge_type,
                timestamp: r.inserted,
                attributes: &r.attributes,
            }
        })
    }

    fn check_endpoint(&self, ep: &Endpoint) -> Result<(), StoreError> {
        let Some(&key) = self.vertex_keys.get(&ep.id) else {
            return Ok(());
        };
        let existing = &self.vertices[key.0 as usize].vertex;
        if existing.label != ep.label {
            return Err(StoreError::LabelConflict {
                id: ep.id.clone(),
                existing: existing.label.clone(),
                requested: ep.label.clone(),
            });
        }
        for (name, value) in &ep.attributes {
            if existing.attributes.get(name) != Some(value) {
                return Err(StoreError::AttributeConflict {
                    id: ep.id.clone(),
                    attr: name.clone(),
                });
            }
        }
        Ok(())
    }

    fn touch_vertex(&mut self, ep: &Endpoint, ts: Timestamp) -> (VertexKey, bool) {
        if let Some(&key) = self.vertex_keys.get(&ep.id) {
            let rec = &mut self.vertices[key.0 as usize];
            rec.first_seen = rec.first_seen.min(ts);
            return (key, false);
        }
        let key = VertexKey(self.vertices.len() as u32);
        self.vertices.push(VertexRecord {
            vertex: Vertex {
                id: ep.id.clone(),
                label: ep.label.clone(),
                attributes: ep.attributes.clone(),
            },
            first_seen: ts,
        });
        self.vertex_keys.insert(ep.id.clone(), key);
        (key, true)
    }

    fn intern_edge(&mut self, edge_id: &str) -> EdgeKey {
        if let Some(&k) = self.edge_keys.get(edge_id) {
            return k;
        }
        let k = EdgeKey(self.edge_names.len() as u32);
        self.edge_names.push(edge_id.to_string());
        self.edge_keys.insert(edge_id.to_string(), k);
        k
    }

    /// Apply one update. Fails without mutating anything.
    pub fn apply_update(&mut self, u: &StreamUpdate) -> Result<UpdateReceipt, StoreError> {
        match u.op {
            UpdateOp::Insert => {
                if self.edge_key(&u.edge_id).is_some_and(|k| self.live.contains_key(&k)) {
                    return Err(StoreError::DuplicateEdgeId(u.edge_id.clone()));
                }
                self.check_endpoint(&u.src)?;
                self.check_endpoint(&u.dst)?;
                if u.src.id == u.dst.id && (u.src.label != u.dst.label || u.src.attributes != u.dst.attributes) {
                    return Err(StoreError::LabelConflict {
                        id: u.src.id.clone(),
                        existing: u.src.label.clone(),
                        requested: u.dst.label.clone(),
                    });
                }
                let (src, c1) = self.touch_vertex(&u.src, u.timestamp);
                let (dst, c2) = self.touch_vertex(&u.dst, u.timestamp);
                let key = self.intern_edge(&u.edge_id);
                self.live.insert(key, self.history.len());
                self.history.push(EdgeRecord {
                    key,
                    src,
                    dst,
                    edge_type: u.edge_type.clone(),
                    inserted: u.timestamp,
                    deleted: None,
                    attributes: u.attributes.clone(),
                });
                Ok(UpdateReceipt {
                    created_vertices: usize::from(c1) + usize::from(c2),
                    edge: key,
                })
            }
            UpdateOp::Delete => {
                let key = self
                    .edge_key(&u.edge_id)
                    .filter(|k| self.live.contains_key(k))
                    .ok_or_else(|| StoreError::UnknownEdgeId(u.edge_id.clone()))?;
                let idx = self.live.remove(&key).expect("checked live");
                self.history[idx].deleted = Some(u.timestamp);
                Ok(UpdateReceipt {
                    created_vertices: 0,
                    edge: key,
                })
            }
        }
    }

    /// Edges inserted at or before `as_of` and not deleted at or before it.
    pub fn snapshot(&self, as_of: Timestamp) -> GraphSnapshot {
        let mut edges: Vec<SnapshotEdge> = self
            .history
            .iter()
            .filter(|r| r.inserted <= as_of && r.deleted.is_none_or(|d| d > as_of))
            .map(|r| SnapshotEdge {
                edge_id: self.edge_names[r.key.0 as usize].clone(),
                src: self.vertices[r.src.0 as usize].vertex.id.clone(),
                dst: self.vertices[r.dst.0 as usize].vertex.id.clone(),
                edge_type: r.edge_type.clone(),
                timestamp: r.inserted,
                attributes: r.attributes.clone(),
            })
            .collect();
        edges.sort_by(|a, b| a.edge_id.cmp(&b.edge_id));
        let mut vertices: Vec<Vertex> = self
            .vertices
            .iter()
            .filter(|r| r.first_seen <= as_of)
            .map(|r| r.vertex.clone())
            .collect();
        vertices.sort_by(|a, b| a.id.cmp(&b.id));
        GraphSnapshot {
            vertices,
            edges,
            as_of,
        }
    }

    /// Snapshot of every live edge regardless of timestamp.
    pub fn snapshot_latest(&self) -> GraphSnapshot {
        self.snapshot(Timestamp::MAX)
    }
}

impl fmt::Display for VertexKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "v#{}", self.0)
    }
}
