//! Plain-text edge lists.
//!
//! ```text
//! nodes 4
//! d 2 1      # directed 2 -> 1
//! b 0 1      # bidirected 0 <-> 1
//! ```

use super::{Admg, GraphError};
use std::fmt::Write;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: self loop at vertex {vertex}")]
    SelfLoop { line: usize, vertex: usize },
    #[error("line {line}: vertex {vertex} out of range (nodes {d})")]
    VertexOutOfRange { line: usize, vertex: usize, d: usize },
    #[error("bidirected edge {0} <-> {1} is not symmetric")]
    AsymmetricBidirected(usize, usize),
}

fn syntax(line: usize, message: impl Into<String>) -> ParseError {
    ParseError::Syntax {
        line,
        message: message.into(),
    }
}

/// Meaningful lines with comments stripped, numbered from 1.
pub(crate) fn content_lines(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines().enumerate().filter_map(|(n, raw)| {
        let body = raw.split('#').next().unwrap_or("");
        let fields: Vec<&str> = body.split_whitespace().collect();
        (!fields.is_empty()).then_some((n + 1, fields))
    })
}

/// Reads the mandatory `nodes <d>` header; returns `d` and the header line.
pub(crate) fn parse_header<'a>(
    lines: &mut impl Iterator<Item = (usize, Vec<&'a str>)>,
) -> Result<usize, ParseError> {
    let (line, fields) = lines.next().ok_or_else(|| syntax(1, "missing `nodes <d>` header"))?;
    match fields.as_slice() {
        ["nodes", d] => d
            .parse()
            .map_err(|_| syntax(line, format!("invalid vertex count `{d}`"))),
        _ => Err(syntax(line, "expected `nodes <d>` header")),
    }
}

pub(crate) fn parse_vertex(line: usize, field: &str, d: usize) -> Result<usize, ParseError> {
    let v: usize = field
        .parse()
        .map_err(|_| syntax(line, format!("invalid vertex `{field}`")))?;
    if v >= d {
        return Err(ParseError::VertexOutOfRange { line, vertex: v, d });
    }
    Ok(v)
}

pub fn parse_edge_list(text: &str) -> Result<Admg, ParseError> {
    let mut lines = content_lines(text);
    let d = parse_header(&mut lines)?;
    let mut g = Admg::empty(d);
    for (line, fields) in lines {
        let (kind, i, j) = match fields.as_slice() {
            [kind, i, j] => (*kind, parse_vertex(line, i, d)?, parse_vertex(line, j, d)?),
            _ => return Err(syntax(line, "expected `d <i> <j>` or `b <i> <j>`")),
        };
        if i == j {
            return Err(ParseError::SelfLoop { line, vertex: i });
        }
        let res = match kind {
            "d" => g.add_directed(i, j),
            "b" => g.add_bidirected(i, j),
            other => return Err(syntax(line, format!("unknown edge kind `{other}`"))),
        };
        res.map_err(|e| match e {
            GraphError::AsymmetricBidirected(a, b) => ParseError::AsymmetricBidirected(a, b),
            other => syntax(line, other.to_string()),
        })?;
    }
    Ok(g)
}

/// Directed edges first (row-major), then bidirected edges with `i < j`.
pub fn serialize_edge_list(g: &Admg) -> String {
    let mut out = format!("nodes {}\n", g.d());
    for (i, j) in g.directed_edges() {
        writeln!(out, "d {i} {j}").unwrap();
    }
    for (i, j) in g.bidirected_edges() {
        writeln!(out, "b {i} {j}").unwrap();
    }
    out
}
