//! Pattern queries: typed vertices and edges with attribute predicates, plus
//! the temporal constraints that bound how matches may arrive.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;

use crate::value::AttributePredicate;

/// Maximum number of edges in one pattern; partial matches track their
/// matched edges in a 64-bit mask.
pub const MAX_QUERY_EDGES: usize = 64;

/// Handle for a query registered with an engine.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct QueryId(pub u32);

impl fmt::Display for QueryId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "q#{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueryVertex {
    pub var: String,
    pub label: String,
    pub predicates: Vec<AttributePredicate>,
}

impl QueryVertex {
    pub fn new(var: impl Into<String>, label: impl Into<String>) -> Self {
        QueryVertex {
            var: var.into(),
            label: label.into(),
            predicates: Vec::new(),
        }
    }

    pub fn with_predicate(mut self, p: AttributePredicate) -> Self {
        self.predicates.push(p);
        self
    }
}

/// A pattern edge. Its `eid` is its position in `QueryGraph::edges`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueryEdge {
    pub name: String,
    pub src_var: String,
    pub dst_var: String,
    pub edge_type: String,
    pub predicates: Vec<AttributePredicate>,
}

impl QueryEdge {
    pub fn new(
        name: impl Into<String>,
        src_var: impl Into<String>,
        edge_type: impl Into<String>,
        dst_var: impl Into<String>,
    ) -> Self {
        QueryEdge {
            name: name.into(),
            src_var: src_var.into(),
            dst_var: dst_var.into(),
            edge_type: edge_type.into(),
            predicates: Vec::new(),
        }
    }

    pub fn with_predicate(mut self, p: AttributePredicate) -> Self {
        self.predicates.push(p);
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GapUnit {
    Time,
    Updates,
}

impl fmt::Display for GapUnit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GapUnit::Time => "time",
            GapUnit::Updates => "updates",
        })
    }
}

/// Maximum spacing between consecutive edges added to one partial match.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ClusterGap {
    pub amount: u64,
    pub unit: GapUnit,
}

impl ClusterGap {
    pub fn time(amount: u64) -> Self {
        ClusterGap {
            amount,
            unit: GapUnit::Time,
        }
    }

    pub fn updates(amount: u64) -> Self {
        ClusterGap {
            amount,
            unit: GapUnit::Updates,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TemporalConstraints {
    /// `(a, b)`: the edge matched to `a` carries a strictly smaller timestamp
    /// than the edge matched to `b`.
    pub arrival_order: BTreeSet<(usize, usize)>,
    pub cluster_gap: Option<ClusterGap>,
    pub window: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueryGraph {
    pub name: String,
    pub vertices: Vec<QueryVertex>,
    pub edges: Vec<QueryEdge>,
    pub constraints: TemporalConstraints,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    EmptyName,
    NoEdges,
    TooManyEdges(usize),
    DuplicateVariable(String),
    EmptyLabel(String),
    DuplicateEdgeName(String),
    EmptyEdgeType(String),
    UndeclaredVariable { edge: String, var: String },
    SelfLoop(String),
    NotWeaklyConnected,
    OrderedPredicateOnNonNumeric { owner: String, attr: String },
    OrderEdgeOutOfRange(usize),
    CyclicOrder,
    ZeroClusterGap,
    ZeroWindow,
    GapExceedsWindow { gap: u64, window: u64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::EmptyName => write!(f, "query name is empty"),
            Violation::NoEdges => write!(f, "query has no edges"),
            Violation::TooManyEdges(n) => {
                write!(f, "query has {n} edges, at most {MAX_QUERY_EDGES} supported")
            }
            Violation::DuplicateVariable(v) => write!(f, "variable `{v}` declared twice"),
            Violation::EmptyLabel(v) => write!(f, "variable `{v}` has an empty label"),
            Violation::DuplicateEdgeName(e) => write!(f, "edge `{e}` declared twice"),
            Violation::EmptyEdgeType(e) => write!(f, "edge `{e}` has an empty type"),
            Violation::UndeclaredVariable { edge, var } => {
                write!(f, "edge `{edge}` references undeclared variable `{var}`")
            }
            Violation::SelfLoop(e) => write!(f, "edge `{e}` is a self-loop"),
            Violation::NotWeaklyConnected => write!(f, "pattern is not weakly connected"),
            Violation::OrderedPredicateOnNonNumeric { owner, attr } => write!(
                f,
                "predicate on `{owner}.{attr}` uses an ordering comparison with a non-numeric value"
            ),
            Violation::OrderEdgeOutOfRange(e) => write!(f, "arrival order references edge #{e}"),
            Violation::CyclicOrder => write!(f, "arrival order is cyclic"),
            Violation::ZeroClusterGap => write!(f, "cluster gap must be positive"),
            Violation::ZeroWindow => write!(f, "window must be positive"),
            Violation::GapExceedsWindow { gap, window } => {
                write!(f, "cluster gap {gap} exceeds window {window}")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

impl QueryGraph {
    pub fn new(name: impl Into<String>) -> Self {
        QueryGraph {
            name: name.into(),
            vertices: Vec::new(),
            edges: Vec::new(),
            constraints: TemporalConstraints::default(),
        }
    }

    pub fn vertex(mut self, v: QueryVertex) -> Self {
        self.vertices.push(v);
        self
    }

    pub fn edge(mut self, e: QueryEdge) -> Self {
        self.edges.push(e);
        self
    }

    pub fn before(mut self, a: usize, b: usize) -> Self {
        self.constraints.arrival_order.insert((a, b));
        self
    }

    pub fn window(mut self, w: u64) -> Self {
        self.constraints.window = Some(w);
        self
    }

    pub fn cluster_gap(mut self, gap: ClusterGap) -> Self {
        self.constraints.cluster_gap = Some(gap);
        self
    }

    pub fn var_index(&self, var: &str) -> Option<usize> {
        self.vertices.iter().position(|v| v.var == var)
    }

    pub fn edge_index(&self, name: &str) -> Option<usize> {
        self.edges.iter().position(|e| e.name == name)
    }

    /// Report every violated structural or temporal invariant.
    pub fn validate(&self) -> ValidationReport {
        let mut out = Vec::new();
        if self.name.is_empty() {
            out.push(Violation::EmptyName);
        }
        if self.edges.is_empty() {
            out.push(Violation::NoEdges);
        }
        if self.edges.len() > MAX_QUERY_EDGES {
            out.push(Violation::TooManyEdges(self.edges.len()));
        }

        let mut vars = HashSet::new();
        for v in &self.vertices {
            if !vars.insert(v.var.as_str()) {
                out.push(Violation::DuplicateVariable(v.var.clone()));
            }
            if v.label.is_empty() {
                out.push(Violation::EmptyLabel(v.var.clone()));
            }
            check_predicates(&v.var, &v.predicates, &mut out);
        }

        let mut names = HashSet::new();
        for e in &self.edges {
            if !names.insert(e.name.as_str()) {
                out.push(Violation::DuplicateEdgeName(e.name.clone()));
            }
            if e.edge_type.is_empty() {
                out.push(Violation::EmptyEdgeType(e.name.clone()));
            }
            for var in [&e.src_var, &e.dst_var] {
                if !vars.contains(var.as_str()) {
                    out.push(Violation::UndeclaredVariable {
                        edge: e.name.clone(),
                        var: var.clone(),
                    });
                }
            }
            if e.src_var == e.dst_var {
                out.push(Violation::SelfLoop(e.name.clone()));
            }
            check_predicates(&e.name, &e.predicates, &mut out);
        }

        if !self.edges.is_empty() && !self.is_weakly_connected() {
            out.push(Violation::NotWeaklyConnected);
        }

        let c = &self.constraints;
        let mut order_in_range = true;
        for &(a, b) in &c.arrival_order {
            for e in [a, b] {
                if e >= self.edges.len() {
                    out.push(Violation::OrderEdgeOutOfRange(e));
                    order_in_range = false;
                }
            }
        }
        if order_in_range && !order_is_acyclic(self.edges.len(), &c.arrival_order) {
            out.push(Violation::CyclicOrder);
        }
        if let Some(g) = c.cluster_gap {
            if g.amount == 0 {
                out.push(Violation::ZeroClusterGap);
            }
            if let (GapUnit::Time, Some(w)) = (g.unit, c.window) {
                if g.amount > w {
                    out.push(Violation::GapExceedsWindow {
                        gap: g.amount,
                        window: w,
                    });
                }
            }
        }
        if c.window == Some(0) {
            out.push(Violation::ZeroWindow);
        }
        ValidationReport { violations: out }
    }

    /// Connectivity of the underlying undirected pattern, counting only
    /// vertices that some edge touches plus every declared vertex.
    fn is_weakly_connected(&self) -> bool {
        let n = self.vertices.len();
        if n == 0 {
            return false;
        }
        let index: HashMap<&str, usize> = self
            .vertices
            .iter()
            .enumerate()
            .map(|(i, v)| (v.var.as_str(), i))
            .collect();
        let mut adj = vec![Vec::new(); n];
        for e in &self.edges {
            if let (Some(&a), Some(&b)) = (index.get(e.src_var.as_str()), index.get(e.dst_var.as_str())) {
                adj[a].push(b);
                adj[b].push(a);
            }
        }
        let mut seen = vec![false; n];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(v) = stack.pop() {
            for &w in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    /// Edges with no predecessor in the transitive closure of the arrival
    /// order. These are the only edges a match can start from.
    pub fn spawn_eligible_edges(&self) -> BTreeSet<usize> {
        let preds = self.order_predecessors();
        (0..self.edges.len()).filter(|&e| preds[e] == 0).collect()
    }

    /// For each edge, the bitmask of its transitive predecessors.
    pub fn order_predecessors(&self) -> Vec<u64> {
        closure(self.edges.len(), &self.constraints.arrival_order, false)
    }

    /// For each edge, the bitmask of its transitive successors.
    pub fn order_successors(&self) -> Vec<u64> {
        closure(self.edges.len(), &self.constraints.arrival_order, true)
    }

    pub fn var_degree(&self, var: &str) -> usize {
        self.edges
            .iter()
            .map(|e| usize::from(e.src_var == var) + usize::from(e.dst_var == var))
            .sum()
    }
}

fn check_predicates(owner: &str, preds: &[AttributePredicate], out: &mut Vec<Violation>) {
    for p in preds {
        if p.cmp.is_ordering() && !p.value.is_numeric() {
            out.push(Violation::OrderedPredicateOnNonNumeric {
                owner: owner.to_string(),
                attr: p.attr.clone(),
            });
        }
    }
}

fn order_is_acyclic(n: usize, order: &BTreeSet<(usize, usize)>) -> bool {
    // Kahn's algorithm.
    let mut indeg = vec![0usize; n];
    let mut out: Vec<Vec<usize>> = vec![Vec::new(); n];
    for &(a, b) in order {
        out[a].push(b);
        indeg[b] += 1;
    }
    let mut ready: Vec<usize> = (0..n).filter(|&i| indeg[i] == 0).collect();
    let mut visited = 0;
    while let Some(v) = ready.pop() {
        visited += 1;
        for &w in &out[v] {
            indeg[w] -= 1;
            if indeg[w] == 0 {
                ready.push(w);
            }
        }
    }
    visited == n
}

fn closure(n: usize, order: &BTreeSet<(usize, usize)>, forward: bool) -> Vec<u64> {
    let mut direct = vec![0u64; n];
    for &(a, b) in order {
        if a < n && b < n && a < 64 && b < 64 {
            if forward {
                direct[a] |= 1 << b;
            } else {
                direct[b] |= 1 << a;
            }
        }
    }
    // Fixed-point iteration; n is at most 64 and the order acyclic.
    let mut reach = direct.clone();
    loop {
        let mut changed = false;
        for i in 0..n {
            let mut acc = reach[i];
            let mut bits = reach[i];
            while bits != 0 {
                let j = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                acc |= reach[j];
            }
            if acc != reach[i] {
                reach[i] = acc;
                changed = true;
            }
        }
        if !changed {
            return reach;
        }
    }
}
