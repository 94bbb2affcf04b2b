//! Text syntax for pattern queries.
//!
//! ```text
//! query icdm {
//!   vertex a: Author;
//!   vertex p1: Paper(venue = "ICDM", year = 2006);
//!   edge e1: a -authored-> p1 order 1;
//!   constraint window 10;
//! }
//! ```
//!
//! A file may hold several `query` blocks; `#` starts a line comment.
//! `order k` on edges induces an arrival-order pair between every two edges
//! with distinct ranks, and `constraint before x y` adds one pair explicitly.
//! `unparse` always writes explicit `before` clauses.

mod lexer;

use std::collections::{BTreeSet, HashMap};
use std::fmt::{self, Write as _};

use thiserror::Error;

use crate::query::{ClusterGap, GapUnit, QueryEdge, QueryGraph, QueryVertex, Violation};
use crate::value::{write_quoted, AttributePredicate, CmpOp, Scalar};
use lexer::{Token, TokenKind};

/// Zero-based position in the source text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SourceSpan {
    pub line: usize,
    pub column: usize,
    pub offset: usize,
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // Rendered one-based for humans.
        write!(f, "{}:{}", self.line + 1, self.column + 1)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ParseErrorKind {
    Syntax { expected: String, found: String },
    UndefinedVariable(String),
    DuplicateName(String),
    Invalid(Violation),
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{span}: {kind}")]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub span: SourceSpan,
}

impl fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParseErrorKind::Syntax { expected, found } => {
                write!(f, "syntax error: expected {expected}, found {found}")
            }
            ParseErrorKind::UndefinedVariable(name) => write!(f, "undefined name `{name}`"),
            ParseErrorKind::DuplicateName(name) => write!(f, "duplicate name `{name}`"),
            ParseErrorKind::Invalid(v) => write!(f, "invalid query: {v}"),
        }
    }
}

/// Parse text holding exactly one query block.
pub fn parse(text: &str) -> Result<QueryGraph, ParseError> {
    let mut p = Parser::new(text)?;
    let q = p.query()?;
    p.expect_eof()?;
    Ok(q)
}

/// Parse a query file holding one or more query blocks.
pub fn parse_queries(text: &str) -> Result<Vec<QueryGraph>, ParseError> {
    let mut p = Parser::new(text)?;
    let mut out: Vec<QueryGraph> = Vec::new();
    loop {
        let span = p.peek().span;
        let q = p.query()?;
        if out.iter().any(|o| o.name == q.name) {
            return Err(ParseError {
                kind: ParseErrorKind::DuplicateName(q.name),
                span,
            });
        }
        out.push(q);
        if p.peek().kind == TokenKind::Eof {
            return Ok(out);
        }
    }
}

/// Like `parse`, for input that may not be UTF-8.
pub fn parse_bytes(bytes: &[u8]) -> Result<QueryGraph, ParseError> {
    match std::str::from_utf8(bytes) {
        Ok(text) => parse(text),
        Err(e) => {
            let valid = std::str::from_utf8(&bytes[..e.valid_up_to()]).expect("valid prefix");
            let line = valid.matches('\n').count();
            let column = valid.rsplit('\n').next().map_or(0, |l| l.chars().count());
            Err(ParseError {
                kind: ParseErrorKind::Syntax {
                    expected: "UTF-8 text".into(),
                    found: "invalid byte sequence".into(),
                },
                span: SourceSpan {
                    line,
                    column,
                    offset: e.valid_up_to(),
                },
            })
        }
    }
}

/// Canonical text for a query: vertices, edges, then constraints, with the
/// arrival order as explicit `before` clauses.
pub fn unparse(q: &QueryGraph) -> String {
    let mut s = String::new();
    let _ = write_query(&mut s, q);
    s
}

fn write_preds(s: &mut String, preds: &[AttributePredicate]) -> fmt::Result {
    if preds.is_empty() {
        return Ok(());
    }
    s.push('(');
    for (i, p) in preds.iter().enumerate() {
        if i > 0 {
            s.push_str(", ");
        }
        write!(s, "{} {} ", p.attr, p.cmp)?;
        match &p.value {
            Scalar::Str(v) => write_quoted(s, v)?,
            other => write!(s, "{other}")?,
        }
    }
    s.push(')');
    Ok(())
}

fn write_query(s: &mut String, q: &QueryGraph) -> fmt::Result {
    writeln!(s, "query {} {{", q.name)?;
    for v in &q.vertices {
        write!(s, "  vertex {}: {}", v.var, v.label)?;
        write_preds(s, &v.predicates)?;
        s.push_str(";\n");
    }
    for e in &q.edges {
        write!(s, "  edge {}: {} -{}-> {}", e.name, e.src_var, e.edge_type, e.dst_var)?;
        write_preds(s, &e.predicates)?;
        s.push_str(";\n");
    }
    let c = &q.constraints;
    if let Some(w) = c.window {
        writeln!(s, "  constraint window {w};")?;
    }
    if let Some(g) = c.cluster_gap {
        writeln!(s, "  constraint cluster_gap {} {};", g.amount, g.unit)?;
    }
    for &(a, b) in &c.arrival_order {
        writeln!(s, "  constraint before {} {};", q.edges[a].name, q.edges[b].name)?;
    }
    s.push_str("}\n");
    Ok(())
}

/// Where each named item was declared, for attaching spans to semantic errors.
#[derive(Default)]
struct DeclSpans {
    name: SourceSpan,
    vertices: Vec<SourceSpan>,
    edges: Vec<SourceSpan>,
    window: Option<SourceSpan>,
    gap: Option<SourceSpan>,
    before: Option<SourceSpan>,
}

struct PendingEdge {
    edge: QueryEdge,
    src_span: SourceSpan,
    dst_span: SourceSpan,
    order: Option<u64>,
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

const KEYWORDS: &[&str] = &[
    "query",
    "vertex",
    "edge",
    "constraint",
    "order",
    "window",
    "cluster_gap",
    "before",
    "time",
    "updates",
];

impl Parser {
    fn new(text: &str) -> Result<Self, ParseError> {
        Ok(Parser {
            tokens: lexer::tokenize(text)?,
            pos: 0,
        })
    }

    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn advance(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if t.kind != TokenKind::Eof {
            self.pos += 1;
        }
        t
    }

    fn syntax<T>(&self, expected: &str) -> Result<T, ParseError> {
        let t = self.peek();
        Err(ParseError {
            kind: ParseErrorKind::Syntax {
                expected: expected.to_string(),
                found: t.kind.describe(),
            },
            span: t.span,
        })
    }

    fn expect(&mut self, kind: TokenKind, what: &str) -> Result<SourceSpan, ParseError> {
        if self.peek().kind == kind {
            Ok(self.advance().span)
        } else {
            self.syntax(what)
        }
    }

    fn expect_eof(&mut self) -> Result<(), ParseError> {
        self.expect(TokenKind::Eof, "end of input").map(|_| ())
    }

    fn keyword(&mut self, kw: &str) -> Result<SourceSpan, ParseError> {
        match &self.peek().kind {
            TokenKind::Ident(s) if s == kw => Ok(self.advance().span),
            _ => self.syntax(&format!("`{kw}`")),
        }
    }

    fn at_keyword(&self, kw: &str) -> bool {
        matches!(&self.peek().kind, TokenKind::Ident(s) if s == kw)
    }

    /// Identifiers used as names; keywords are reserved.
    fn ident(&mut self, what: &str) -> Result<(String, SourceSpan), ParseError> {
        match &self.peek().kind {
            TokenKind::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                let s = s.clone();
                Ok((s, self.advance().span))
            }
            _ => self.syntax(what),
        }
    }

    fn unsigned(&mut self, what: &str) -> Result<(u64, SourceSpan), ParseError> {
        match self.peek().kind {
            TokenKind::Int(v) if v <= u64::MAX as i128 => Ok((v as u64, self.advance().span)),
            _ => self.syntax(what),
        }
    }

    fn query(&mut self) -> Result<QueryGraph, ParseError> {
        self.keyword("query")?;
        let mut spans = DeclSpans::default();
        let (name, name_span) = self.ident("query name")?;
        spans.name = name_span;
        self.expect(TokenKind::LBrace, "`{`")?;

        let mut q = QueryGraph::new(name);
        let mut edges: Vec<PendingEdge> = Vec::new();
        let mut befores: Vec<(String, SourceSpan, String, SourceSpan)> = Vec::new();

        loop {
            if self.peek().kind == TokenKind::RBrace {
                self.advance();
                break;
            }
            let start = self.peek().span;
            if self.at_keyword("vertex") {
                self.advance();
                let (var, var_span) = self.ident("variable name")?;
                self.expect(TokenKind::Colon, "`:`")?;
                let (label, _) = self.ident("vertex label")?;
                let predicates = self.opt_predicates()?;
                self.expect(TokenKind::Semi, "`;`")?;
                if q.vertices.iter().any(|v| v.var == var) {
                    return Err(ParseError {
                        kind: ParseErrorKind::DuplicateName(var),
                        span: var_span,
                    });
                }
                q.vertices.push(QueryVertex {
                    var,
                    label,
                    predicates,
                });
                spans.vertices.push(start);
            } else if self.at_keyword("edge") {
                self.advance();
                let (name, name_span) = self.ident("edge name")?;
                self.expect(TokenKind::Colon, "`:`")?;
                let (src, src_span) = self.ident("source variable")?;
                self.expect(TokenKind::Minus, "`-`")?;
                let (edge_type, _) = self.ident("edge type")?;
                self.expect(TokenKind::Arrow, "`->`")?;
                let (dst, dst_span) = self.ident("target variable")?;
                let predicates = self.opt_predicates()?;
                let order = if self.at_keyword("order") {
                    self.advance();
                    Some(self.unsigned("order rank")?.0)
                } else {
                    None
                };
                self.expect(TokenKind::Semi, "`;`")?;
                if edges.iter().any(|e| e.edge.name == name) {
                    return Err(ParseError {
                        kind: ParseErrorKind::DuplicateName(name),
                        span: name_span,
                    });
                }
                edges.push(PendingEdge {
                    edge: QueryEdge {
                        name,
                        src_var: src,
                        dst_var: dst,
                        edge_type,
                        predicates,
                    },
                    src_span,
                    dst_span,
                    order,
                });
                spans.edges.push(start);
            } else if self.at_keyword("constraint") {
                self.advance();
                if self.at_keyword("window") {
                    self.advance();
                    let (w, _) = self.unsigned("window length")?;
                    q.constraints.window = Some(w);
                    spans.window = Some(start);
                } else if self.at_keyword("cluster_gap") {
                    self.advance();
                    let (amount, _) = self.unsigned("gap length")?;
                    let unit = if self.at_keyword("time") {
                        GapUnit::Time
                    } else if self.at_keyword("updates") {
                        GapUnit::Updates
                    } else {
                        return self.syntax("`time` or `updates`");
                    };
                    self.advance();
                    q.constraints.cluster_gap = Some(ClusterGap { amount, unit });
                    spans.gap = Some(start);
                } else if self.at_keyword("before") {
                    self.advance();
                    let (a, a_span) = self.ident("edge name")?;
                    let (b, b_span) = self.ident("edge name")?;
                    befores.push((a, a_span, b, b_span));
                    spans.before.get_or_insert(start);
                } else {
                    return self.syntax("`window`, `cluster_gap` or `before`");
                }
                self.expect(TokenKind::Semi, "`;`")?;
            } else {
                return self.syntax("`vertex`, `edge`, `constraint` or `}`");
            }
        }

        for pe in &edges {
            for (var, span) in [(&pe.edge.src_var, pe.src_span), (&pe.edge.dst_var, pe.dst_span)] {
                if q.var_index(var).is_none() {
                    return Err(ParseError {
                        kind: ParseErrorKind::UndefinedVariable(var.clone()),
                        span,
                    });
                }
            }
        }
        let mut order: BTreeSet<(usize, usize)> = BTreeSet::new();
        for (i, a) in edges.iter().enumerate() {
            for (j, b) in edges.iter().enumerate() {
                if let (Some(ra), Some(rb)) = (a.order, b.order) {
                    if ra < rb {
                        order.insert((i, j));
                    }
                }
            }
        }
        let index: HashMap<&str, usize> = edges
            .iter()
            .enumerate()
            .map(|(i, e)| (e.edge.name.as_str(), i))
            .collect();
        for (a, a_span, b, b_span) in &befores {
            let ia = *index.get(a.as_str()).ok_or_else(|| ParseError {
                kind: ParseErrorKind::UndefinedVariable(a.clone()),
                span: *a_span,
            })?;
            let ib = *index.get(b.as_str()).ok_or_else(|| ParseError {
                kind: ParseErrorKind::UndefinedVariable(b.clone()),
                span: *b_span,
            })?;
            order.insert((ia, ib));
        }
        q.constraints.arrival_order = order;
        q.edges = edges.into_iter().map(|e| e.edge).collect();

        if let Some(v) = q.validate().violations.into_iter().next() {
            let span = violation_span(&q, &v, &spans);
            return Err(ParseError {
                kind: ParseErrorKind::Invalid(v),
                span,
            });
        }
        Ok(q)
    }

    fn opt_predicates(&mut self) -> Result<Vec<AttributePredicate>, ParseError> {
        let mut out = Vec::new();
        if self.peek().kind != TokenKind::LParen {
            return Ok(out);
        }
        self.advance();
        loop {
            let (attr, _) = self.ident("attribute name")?;
            let cmp = match self.peek().kind {
                TokenKind::Eq => CmpOp::Eq,
                TokenKind::Ne => CmpOp::Ne,
                TokenKind::Lt => CmpOp::Lt,
                TokenKind::Le => CmpOp::Le,
                TokenKind::Gt => CmpOp::Gt,
                TokenKind::Ge => CmpOp::Ge,
                _ => return self.syntax("comparison operator"),
            };
            self.advance();
            let value = self.literal()?;
            out.push(AttributePredicate { attr, cmp, value });
            match self.peek().kind {
                TokenKind::Comma => {
                    self.advance();
                }
                TokenKind::RParen => {
                    self.advance();
                    return Ok(out);
                }
                _ => return self.syntax("`,` or `)`"),
            }
        }
    }

    fn literal(&mut self) -> Result<Scalar, ParseError> {
        let negative = self.peek().kind == TokenKind::Minus;
        if negative {
            self.advance();
        }
        let t = self.peek().clone();
        let value = match t.kind {
            TokenKind::Int(v) => {
                let v = if negative { -v } else { v };
                match i64::try_from(v) {
                    Ok(v) => Scalar::Int(v),
                    Err(_) => return self.syntax("an integer within 64-bit range"),
                }
            }
            TokenKind::Decimal(d) => Scalar::Decimal(if negative { -d } else { d }),
            TokenKind::Str(s) if !negative => Scalar::Str(s),
            _ => return self.syntax("a literal"),
        };
        self.advance();
        Ok(value)
    }
}

fn violation_span(q: &QueryGraph, v: &Violation, spans: &DeclSpans) -> SourceSpan {
    let vertex = |var: &str| q.var_index(var).map(|i| spans.vertices[i]);
    let edge = |name: &str| q.edge_index(name).map(|i| spans.edges[i]);
    let found = match v {
        Violation::EmptyLabel(var) | Violation::DuplicateVariable(var) => vertex(var),
        Violation::DuplicateEdgeName(e)
        | Violation::EmptyEdgeType(e)
        | Violation::SelfLoop(e)
        | Violation::UndeclaredVariable { edge: e, .. } => edge(e),
        Violation::OrderedPredicateOnNonNumeric { owner, .. } => vertex(owner).or_else(|| edge(owner)),
        Violation::CyclicOrder => spans.before.or_else(|| spans.edges.first().copied()),
        Violation::ZeroClusterGap | Violation::GapExceedsWindow { .. } => spans.gap,
        Violation::ZeroWindow => spans.window,
        _ => None,
    };
    found.unwrap_or(spans.name)
}

#[cfg(test)]
mod tests {
    use super::*;

    use crate::testutil::FIG1;

    #[test]
    fn parses_publications_query() {
        let q = parse(FIG1).unwrap();
        assert_eq!(q.vertices.len(), 4);
        assert_eq!(q.edges.len(), 3);
        assert_eq!(
            q.constraints.arrival_order,
            BTreeSet::from([(0, 1), (0, 2), (1, 2)])
        );
        assert_eq!(q.vertices[3].predicates[0], AttributePredicate::new("year", CmpOp::Ge, 2008));
        assert!(q.validate().is_ok());
    }

    #[test]
    fn empty_input_is_syntax_error_at_zero() {
        let e = parse("").unwrap_err();
        assert!(matches!(e.kind, ParseErrorKind::Syntax { .. }));
        assert_eq!(e.span, SourceSpan::default());
    }

    #[test]
    fn undefined_variable_span() {
        let text = "query q {\n  vertex a: A;\n  edge e: a -t-> x;\n}";
        let e = parse(text).unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::UndefinedVariable("x".into()));
        assert_eq!(e.span.line, 2);
        assert_eq!(e.span.column, 17);
        assert_eq!(e.span.to_string(), "3:18");
        assert_eq!(&text[e.span.offset..e.span.offset + 1], "x");
    }

    #[test]
    fn duplicate_names() {
        let e = parse("query q { vertex a: A; vertex a: B; }").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::DuplicateName("a".into()));
        assert_eq!(e.span.offset, 30);
        let e = parse("query q { vertex a: A; vertex b: A; edge e: a -t-> b; edge e: b -t-> a; }")
            .unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::DuplicateName("e".into()));
    }

    #[test]
    fn validation_errors_carry_spans() {
        let text = "query q { vertex a: A; vertex b: A; edge e: a -t-> b; edge f: b -t-> a;\n constraint before e f; constraint before f e; }";
        let e = parse(text).unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::Invalid(Violation::CyclicOrder));
        assert_eq!(e.span.line, 1);
        let e = parse("query q { vertex a: A; vertex b: A; vertex c: A; vertex d: A; edge e: a -t-> b; edge f: c -t-> d; }")
            .unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::Invalid(Violation::NotWeaklyConnected));
        assert_eq!(e.span.offset, 6);
    }

    #[test]
    fn duplicate_order_ranks_leave_edges_unordered() {
        let q = parse(
            "query q { vertex a: A; vertex b: B; vertex c: B; vertex d: B;
               edge x: a -t-> b order 1; edge y: a -t-> c order 1; edge z: a -t-> d order 2; }",
        )
        .unwrap();
        assert_eq!(q.constraints.arrival_order, BTreeSet::from([(0, 2), (1, 2)]));
        assert_eq!(q.spawn_eligible_edges(), BTreeSet::from([0, 1]));
    }

    #[test]
    fn literals_and_constraints() {
        let q = parse(
            r#"query q { vertex a: A(n = -5, s != "x\"y\\z", d < 2.5); vertex b: B;
               edge e: a -t-> b(w >= 0);
               constraint window 10; constraint cluster_gap 3 updates; }"#,
        )
        .unwrap();
        assert_eq!(q.vertices[0].predicates[0].value, Scalar::Int(-5));
        assert_eq!(q.vertices[0].predicates[1].value, Scalar::Str("x\"y\\z".into()));
        assert_eq!(q.vertices[0].predicates[2].value, Scalar::Decimal(2.5));
        assert_eq!(q.constraints.window, Some(10));
        assert_eq!(q.constraints.cluster_gap, Some(ClusterGap::updates(3)));
        assert_eq!(parse(&unparse(&q)).unwrap(), q);
    }

    #[test]
    fn integer_extremes_round_trip() {
        for v in [i64::MIN, i64::MAX, 0] {
            let q = QueryGraph::new("q")
                .vertex(QueryVertex::new("a", "A").with_predicate(AttributePredicate::new("n", CmpOp::Lt, v)))
                .vertex(QueryVertex::new("b", "A"))
                .edge(QueryEdge::new("e", "a", "t", "b"));
            assert_eq!(parse(&unparse(&q)).unwrap(), q);
        }
        assert!(parse("query q { vertex a: A(n = 9223372036854775808); vertex b: A; edge e: a -t-> b; }").is_err());
    }

    #[test]
    fn round_trips() {
        let q = parse(FIG1).unwrap();
        assert_eq!(parse(&unparse(&q)).unwrap(), q);

        let single = QueryGraph::new("one")
            .vertex(QueryVertex::new("a", "A"))
            .vertex(QueryVertex::new("b", "B"))
            .edge(QueryEdge::new("e", "a", "t", "b"));
        let text = unparse(&single);
        assert_eq!(
            text,
            "query one {\n  vertex a: A;\n  vertex b: B;\n  edge e: a -t-> b;\n}\n"
        );
        assert_eq!(parse(&text).unwrap(), single);

        let partial = parse(
            "query p { vertex h: H; vertex x: X; vertex y: X; vertex z: X;
               edge a: h -t-> x; edge b: h -t-> y; edge c: h -t-> z;
               constraint before a c; constraint before b c; }",
        )
        .unwrap();
        let text = unparse(&partial);
        assert!(text.contains("constraint before a c;\n  constraint before b c;"));
        assert_eq!(parse(&text).unwrap(), partial);
    }

    #[test]
    fn multiple_queries_per_file() {
        let text = format!("{FIG1}\nquery other {{ vertex a: A; vertex b: B; edge e: a -t-> b; }}\n");
        let qs = parse_queries(&text).unwrap();
        assert_eq!(qs.len(), 2);
        assert!(parse(&text).is_err());
        let dup = format!("{FIG1}{FIG1}");
        assert!(matches!(
            parse_queries(&dup).unwrap_err().kind,
            ParseErrorKind::DuplicateName(_)
        ));
    }

    #[test]
    fn keywords_are_reserved() {
        assert!(parse("query q { vertex edge: A; vertex b: A; edge e: edge -t-> b; }").is_err());
    }

    #[test]
    fn invalid_utf8_is_spanned() {
        let e = parse_bytes(b"query q {\n  \xff }").unwrap_err();
        assert_eq!(e.span.offset, 12);
        assert_eq!(e.span.line, 1);
        assert_eq!(e.span.column, 2);
    }
}
