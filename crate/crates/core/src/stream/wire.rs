//! Line formats for streamed updates and emitted results.
//!
//! An update line has 8 or 9 tab-separated fields:
//!
//! ```text
//! ts  op  edge_id  src_id  src_label  edge_type  dst_id  dst_label  [attrs]
//! ```
//!
//! `op` is `+` or `-`; `attrs` is `k=v;k=v`, where a bare integer is an
//! integer and anything else a string (double quotes optional). Keys
//! prefixed `src.` or `dst.` set attributes of the endpoint vertices.

use std::fmt::{self, Write as _};

use thiserror::Error;

use crate::graph_store::{Endpoint, StreamUpdate, UpdateOp};
use crate::oracle::Embedding;
use crate::value::{write_quoted, Attributes, Scalar};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{line}:{column}: {kind}")]
pub struct WireError {
    /// 1-based.
    pub line: usize,
    /// 1-based character column of the offending field.
    pub column: usize,
    pub kind: WireErrorKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WireErrorKind {
    #[error("expected 8 or 9 tab-separated fields, found {0}")]
    FieldCount(usize),
    #[error("timestamp `{0}` is not a non-negative integer")]
    Timestamp(String),
    #[error("op must be `+` or `-`, found `{0}`")]
    Op(String),
    #[error("field `{0}` is empty")]
    Empty(&'static str),
    #[error("malformed attribute `{0}`")]
    Attribute(String),
}

const FIELDS: [&str; 8] = ["timestamp", "op", "edge_id", "src_id", "src_label", "edge_type", "dst_id", "dst_label"];

/// Parse one update line. `line_no` is only used for error positions.
pub fn parse_record(line: &str, line_no: usize) -> Result<StreamUpdate, WireError> {
    let fields: Vec<&str> = line.split('\t').collect();
    let mut starts = Vec::with_capacity(fields.len());
    let mut col = 1;
    for f in &fields {
        starts.push(col);
        col += f.chars().count() + 1;
    }
    let err = |i: usize, kind| WireError {
        line: line_no,
        column: starts.get(i).copied().unwrap_or(1),
        kind,
    };
    if !(8..=9).contains(&fields.len()) {
        return Err(err(0, WireErrorKind::FieldCount(fields.len())));
    }
    for (i, name) in FIELDS.iter().enumerate() {
        if fields[i].is_empty() {
            return Err(err(i, WireErrorKind::Empty(name)));
        }
    }
    let ts = fields[0]
        .parse::<u64>()
        .map_err(|_| err(0, WireErrorKind::Timestamp(fields[0].to_string())))?;
    let op = match fields[1] {
        "+" => UpdateOp::Insert,
        "-" => UpdateOp::Delete,
        other => return Err(err(1, WireErrorKind::Op(other.to_string()))),
    };
    let mut src = Endpoint::new(fields[3], fields[4]);
    let mut dst = Endpoint::new(fields[6], fields[7]);
    let mut attrs = Attributes::new();
    if let Some(raw) = fields.get(8).filter(|s| !s.is_empty()) {
        for (k, v) in parse_attrs(raw).map_err(|bad| err(8, WireErrorKind::Attribute(bad)))? {
            if let Some(k) = k.strip_prefix("src.") {
                src.attributes.insert(k.to_string(), v);
            } else if let Some(k) = k.strip_prefix("dst.") {
                dst.attributes.insert(k.to_string(), v);
            } else {
                attrs.insert(k, v);
            }
        }
    }
    Ok(StreamUpdate {
        op,
        edge_id: fields[2].to_string(),
        src,
        dst,
        edge_type: fields[5].to_string(),
        timestamp: ts,
        attributes: attrs,
    })
}

fn parse_attrs(raw: &str) -> Result<Vec<(String, Scalar)>, String> {
    let mut out = Vec::new();
    let mut chars = raw.chars().peekable();
    loop {
        let mut key = String::new();
        while let Some(&c) = chars.peek() {
            if c == '=' || c == ';' {
                break;
            }
            key.push(c);
            chars.next();
        }
        let key = key.trim().to_string();
        if chars.next() != Some('=') || key.is_empty() {
            return Err(key);
        }
        while chars.peek().is_some_and(|c| *c == ' ') {
            chars.next();
        }
        let value = if chars.peek() == Some(&'"') {
            chars.next();
            let mut s = String::new();
            loop {
                match chars.next() {
                    None => return Err(key),
                    Some('"') => break,
                    Some('\\') => match chars.next() {
                        Some('n') => s.push('\n'),
                        Some('t') => s.push('\t'),
                        Some('r') => s.push('\r'),
                        Some(c @ ('"' | '\\')) => s.push(c),
                        _ => return Err(key),
                    },
                    Some(c) => s.push(c),
                }
            }
            while chars.peek().is_some_and(|c| *c == ' ') {
                chars.next();
            }
            if chars.peek().is_some_and(|c| *c != ';') {
                return Err(key);
            }
            Scalar::Str(s)
        } else {
            let mut s = String::new();
            while let Some(&c) = chars.peek() {
                if c == ';' {
                    break;
                }
                s.push(c);
                chars.next();
            }
            let s = s.trim();
            match s.parse::<i64>() {
                Ok(i) => Scalar::Int(i),
                Err(_) => Scalar::Str(s.to_string()),
            }
        };
        out.push((key, value));
        match chars.next() {
            None => return Ok(out),
            Some(';') if chars.peek().is_none() => return Ok(out),
            Some(';') => {}
            Some(_) => unreachable!("values stop at `;`"),
        }
    }
}

/// Parse a whole stream file. Blank lines and lines starting with `#` are
/// skipped; each update is returned with its 1-based line number.
pub fn parse_stream(text: &str) -> Result<Vec<(usize, StreamUpdate)>, WireError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'))
        .map(|(i, l)| parse_record(l.strip_suffix('\r').unwrap_or(l), i + 1).map(|u| (i + 1, u)))
        .collect()
}

fn write_value(out: &mut String, v: &Scalar) -> fmt::Result {
    match v {
        Scalar::Int(i) => write!(out, "{i}"),
        Scalar::Str(s) if !s.is_empty() && s.parse::<i64>().is_err() && s.chars().all(|c| c.is_ascii_graphic() && !matches!(c, ';' | '"' | '=' | '\\')) => {
            out.push_str(s);
            Ok(())
        }
        Scalar::Str(s) => write_quoted(out, s),
        // Decimals have no wire type; they travel as strings.
        Scalar::Decimal(_) => write_quoted(out, &v.to_string()),
    }
}

/// The wire line for an update, without a trailing newline.
pub fn format_record(u: &StreamUpdate) -> String {
    let op = match u.op {
        UpdateOp::Insert => '+',
        UpdateOp::Delete => '-',
    };
    let mut s = format!(
        "{}\t{op}\t{}\t{}\t{}\t{}\t{}\t{}",
        u.timestamp, u.edge_id, u.src.id, u.src.label, u.edge_type, u.dst.id, u.dst.label
    );
    let entries = u
        .attributes
        .iter()
        .map(|(k, v)| (k.clone(), v))
        .chain(u.src.attributes.iter().map(|(k, v)| (format!("src.{k}"), v)))
        .chain(u.dst.attributes.iter().map(|(k, v)| (format!("dst.{k}"), v)));
    let mut attrs = String::new();
    for (k, v) in entries {
        if !attrs.is_empty() {
            attrs.push(';');
        }
        attrs.push_str(&k);
        attrs.push('=');
        write_value(&mut attrs, v).expect("writing to a String");
    }
    if !attrs.is_empty() {
        s.push('\t');
        s.push_str(&attrs);
    }
    s
}

/// One result line: query, completion timestamp, emit sequence, then
/// `var=vertex` sorted by variable and `edge=edge_id@ts` in query edge order.
pub fn format_result(e: &Embedding, emit_seq: u64) -> String {
    let mut s = format!("{}\t{}\t{}", e.query, e.completion_ts(), emit_seq);
    for (var, v) in &e.vertices {
        let _ = write!(s, "\t{var}={v}");
    }
    for (name, id, ts) in &e.edges {
        let _ = write!(s, "\t{name}={id}@{ts}");
    }
    s
}
