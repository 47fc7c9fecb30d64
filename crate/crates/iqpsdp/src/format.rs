//! The `iqp/1` instance file format.
//!
//! ```text
//! iqp/1
//! # free-form comment lines, e.g. generator metadata
//! n 2
//! domain -1 1
//! domain -1 1
//! q 1.0000000000000000e0
//! q -5.0000000000000000e-1 2.0000000000000000e0
//! l 0.0000000000000000e0 1.0000000000000000e0
//! c 0.0000000000000000e0
//! lin 1.0000000000000000e0 1.0000000000000000e0 <= 0.0000000000000000e0
//! ```
//!
//! `q` lines hold the lower triangle of `Q_hat` row by row. `lin` lines are
//! optional; an instance without linear constraints has none. Numbers are
//! written with 17 significant digits, which round-trips every `f64`.

use std::fmt::Write as _;
use std::path::Path;

use iqpsdp_core::{IntDomain, IqpInstance, LinearConstraint, SymMatrix};

pub const HEADER: &str = "iqp/1";

#[derive(Debug, thiserror::Error, PartialEq)]
#[error("line {line}, column {column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

#[derive(Debug, thiserror::Error)]
pub enum ReadError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Parse(#[from] ParseError),
}

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

/// Serializes an instance. `comments` become `#` lines after the header.
pub fn to_string(inst: &IqpInstance, comments: &[String]) -> String {
    let n = inst.n();
    let mut out = String::new();
    out.push_str(HEADER);
    out.push('\n');
    for c in comments {
        for line in c.lines() {
            let _ = writeln!(out, "# {line}");
        }
    }
    let _ = writeln!(out, "n {n}");
    for d in &inst.domains {
        let _ = writeln!(out, "domain {} {}", d.lo, d.hi);
    }
    for i in 0..n {
        out.push('q');
        for j in 0..=i {
            out.push(' ');
            out.push_str(&num(inst.q_hat.get(i, j)));
        }
        out.push('\n');
    }
    out.push('l');
    for v in &inst.l_hat {
        out.push(' ');
        out.push_str(&num(*v));
    }
    out.push('\n');
    let _ = writeln!(out, "c {}", num(inst.c_hat));
    for lc in &inst.linear {
        out.push_str("lin");
        for v in &lc.a {
            out.push(' ');
            out.push_str(&num(*v));
        }
        let _ = writeln!(out, " <= {}", num(lc.rhs));
    }
    out
}

pub fn write_instance(inst: &IqpInstance, comments: &[String], path: &Path) -> std::io::Result<()> {
    std::fs::write(path, to_string(inst, comments))
}

pub fn read_instance(path: &Path) -> Result<IqpInstance, ReadError> {
    let text = std::fs::read_to_string(path)?;
    Ok(parse(&text)?)
}

struct Token<'a> {
    text: &'a str,
    column: usize,
}

struct Line<'a> {
    number: usize,
    tokens: Vec<Token<'a>>,
    len: usize,
}

impl<'a> Line<'a> {
    fn new(number: usize, raw: &'a str) -> Self {
        let mut tokens = Vec::new();
        let mut start = None;
        for (i, ch) in raw.char_indices().chain(std::iter::once((raw.len(), ' '))) {
            match (ch.is_whitespace(), start) {
                (false, None) => start = Some(i),
                (true, Some(s)) => {
                    tokens.push(Token { text: &raw[s..i], column: s + 1 });
                    start = None;
                }
                _ => {}
            }
        }
        Line { number, tokens, len: raw.len() }
    }

    fn err(&self, column: usize, message: impl Into<String>) -> ParseError {
        ParseError { line: self.number, column, message: message.into() }
    }

    fn end_err(&self, message: impl Into<String>) -> ParseError {
        self.err(self.len + 1, message)
    }

    fn keyword(&self) -> &str {
        self.tokens[0].text
    }

    fn expect_keyword(&self, kw: &str) -> Result<(), ParseError> {
        if self.keyword() == kw {
            Ok(())
        } else {
            Err(self.err(self.tokens[0].column, format!("expected `{kw}`, found `{}`", self.keyword())))
        }
    }

    fn expect_count(&self, count: usize) -> Result<(), ParseError> {
        let got = self.tokens.len() - 1;
        match got.cmp(&count) {
            std::cmp::Ordering::Equal => Ok(()),
            std::cmp::Ordering::Less => Err(self.end_err(format!("expected {count} values, found {got}"))),
            std::cmp::Ordering::Greater => {
                Err(self.err(self.tokens[count + 1].column, format!("expected {count} values, found {got}")))
            }
        }
    }

    fn float(&self, k: usize) -> Result<f64, ParseError> {
        let t = &self.tokens[k];
        let v: f64 = t.text.parse().map_err(|_| self.err(t.column, format!("invalid number `{}`", t.text)))?;
        if !v.is_finite() {
            return Err(self.err(t.column, "number must be finite"));
        }
        Ok(v)
    }

    fn int(&self, k: usize) -> Result<i64, ParseError> {
        let t = &self.tokens[k];
        t.text.parse().map_err(|_| self.err(t.column, format!("invalid integer `{}`", t.text)))
    }
}

pub fn parse(text: &str) -> Result<IqpInstance, ParseError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, raw)| Line::new(i + 1, raw))
        .filter(|l| !l.tokens.is_empty() && !l.tokens[0].text.starts_with('#'));
    let last_line = text.lines().count().max(1);
    let eof = |what: &str| ParseError { line: last_line, column: 1, message: format!("unexpected end of file, expected {what}") };

    let header = lines.next().ok_or_else(|| eof("header"))?;
    if header.tokens.len() != 1 || header.keyword() != HEADER {
        return Err(header.err(1, format!("expected header `{HEADER}`")));
    }

    let l = lines.next().ok_or_else(|| eof("`n`"))?;
    l.expect_keyword("n")?;
    l.expect_count(1)?;
    let n = l.int(1)?;
    if n <= 0 {
        return Err(l.err(l.tokens[1].column, "n must be positive"));
    }
    let n = n as usize;

    let mut domains = Vec::with_capacity(n);
    for _ in 0..n {
        let l = lines.next().ok_or_else(|| eof("`domain`"))?;
        l.expect_keyword("domain")?;
        l.expect_count(2)?;
        let (lo, hi) = (l.int(1)?, l.int(2)?);
        if lo > hi {
            return Err(l.err(l.tokens[1].column, "empty domain"));
        }
        domains.push(IntDomain::new(lo, hi));
    }

    let mut q = SymMatrix::zeros(n);
    for i in 0..n {
        let l = lines.next().ok_or_else(|| eof("`q`"))?;
        l.expect_keyword("q")?;
        l.expect_count(i + 1)?;
        for j in 0..=i {
            q.set(i, j, l.float(j + 1)?);
        }
    }

    let l = lines.next().ok_or_else(|| eof("`l`"))?;
    l.expect_keyword("l")?;
    l.expect_count(n)?;
    let l_hat = (1..=n).map(|k| l.float(k)).collect::<Result<Vec<_>, _>>()?;

    let l = lines.next().ok_or_else(|| eof("`c`"))?;
    l.expect_keyword("c")?;
    l.expect_count(1)?;
    let c_hat = l.float(1)?;

    let mut linear = Vec::new();
    for l in lines {
        l.expect_keyword("lin")?;
        l.expect_count(n + 2)?;
        let a = (1..=n).map(|k| l.float(k)).collect::<Result<Vec<_>, _>>()?;
        let op = &l.tokens[n + 1];
        if op.text != "<=" {
            return Err(l.err(op.column, format!("expected `<=`, found `{}`", op.text)));
        }
        linear.push(LinearConstraint::new(a, l.float(n + 2)?));
    }

    IqpInstance::new(q, l_hat, c_hat, domains, linear)
        .map_err(|e| ParseError { line: last_line, column: 1, message: e.to_string() })
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL: &str = "iqp/1\n# made by hand\nn 2\ndomain -1 1\ndomain 0 3\nq 1\nq -0.5 2\nl 0 1\nc 0.25\n";

    #[test]
    fn parses_small_file() {
        let inst = parse(SMALL).unwrap();
        assert_eq!(inst.n(), 2);
        assert_eq!(inst.domains[1], IntDomain::new(0, 3));
        assert_eq!(inst.q_hat.get(0, 1), -0.5);
        assert_eq!(inst.c_hat, 0.25);
        assert!(inst.linear.is_empty());
    }

    #[test]
    fn no_constraint_lines_when_unconstrained() {
        let inst = parse(SMALL).unwrap();
        let text = to_string(&inst, &[]);
        assert!(!text.contains("lin"));
        assert_eq!(parse(&text).unwrap(), inst);
    }

    #[test]
    fn constraint_lines_round_trip() {
        let text = format!("{SMALL}lin 1 2 <= 3\nlin -1 0.1 <= 0\n");
        let inst = parse(&text).unwrap();
        assert_eq!(inst.linear.len(), 2);
        assert_eq!(parse(&to_string(&inst, &["x".into()])).unwrap(), inst);
    }

    #[test]
    fn malformed_header() {
        let e = parse("iqp/2\nn 1\n").unwrap_err();
        assert_eq!((e.line, e.column), (1, 1));
    }

    #[test]
    fn error_positions() {
        let e = parse("iqp/1\nn 1\ndomain -1 x\n").unwrap_err();
        assert_eq!((e.line, e.column), (3, 11));
        let e = parse("iqp/1\nn 1\ndomain -1 1\nq 1 2\n").unwrap_err();
        assert_eq!((e.line, e.column), (4, 5));
        let e = parse("iqp/1\nn 1\ndomain -1 1\nq 1\nl 0\nc 0\nlin 1 < 0\n").unwrap_err();
        assert_eq!((e.line, e.column), (7, 7));
        let e = parse("iqp/1\nn 1\ndomain 2 1\n").unwrap_err();
        assert_eq!(e.line, 3);
        let e = parse("iqp/1\nn 2\ndomain -1 1\n").unwrap_err();
        assert!(e.message.contains("end of file"));
    }

    #[test]
    fn asymmetry_is_impossible() {
        // Only the lower triangle is stored, so reading gives a symmetric Q.
        let inst = parse(SMALL).unwrap();
        assert_eq!(inst.q_hat.get(1, 0), inst.q_hat.get(0, 1));
    }
}
