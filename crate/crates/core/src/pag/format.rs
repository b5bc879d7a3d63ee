//! PAG text format: `nodes <d>` then `e <i> <mi> <mj> <j>` per edge, `i < j`.

use super::{Mark, Pag};
use crate::admg::ParseError;
use crate::admg::format::{content_lines, parse_header, parse_vertex};
use std::fmt::Write;

fn mark_from(line: usize, s: &str) -> Result<Mark, ParseError> {
    match s {
        "c" => Ok(Mark::Circle),
        "a" => Ok(Mark::Arrow),
        "t" => Ok(Mark::Tail),
        other => Err(ParseError::Syntax {
            line,
            message: format!("unknown mark `{other}`"),
        }),
    }
}

pub fn serialize_pag(pag: &Pag) -> String {
    let mut out = format!("nodes {}\n", pag.d());
    for (i, j) in pag.edges() {
        let at_i = pag.mark(j, i).symbol();
        let at_j = pag.mark(i, j).symbol();
        writeln!(out, "e {i} {at_i} {at_j} {j}").unwrap();
    }
    out
}

pub fn parse_pag(text: &str) -> Result<Pag, ParseError> {
    let mut lines = content_lines(text);
    let d = parse_header(&mut lines)?;
    let mut pag = Pag::empty(d);
    for (line, fields) in lines {
        let ["e", i, mi, mj, j] = fields.as_slice() else {
            return Err(ParseError::Syntax {
                line,
                message: "expected `e <i> <mi> <mj> <j>`".into(),
            });
        };
        let (i, j) = (parse_vertex(line, i, d)?, parse_vertex(line, j, d)?);
        if i == j {
            return Err(ParseError::SelfLoop { line, vertex: i });
        }
        pag.set_edge(i, j, mark_from(line, mi)?, mark_from(line, mj)?);
    }
    Ok(pag)
}
