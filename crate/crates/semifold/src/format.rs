//! Text formats: the `FG 1` factor-graph document and DIMACS CNF.
//!
//! The factor-graph document is line oriented:
//!
//! ```text
//! FG 1
//! SEMIRING sum-product
//! VARS 3
//! DOM 2 2 3
//! FACTORS 1
//! SCOPE 2 0 2
//! TABLE 1/2 0 1/2 0 1 3.5
//! ```
//!
//! Tables are row-major with the last scope index fastest, matching the
//! in-memory convention. Parsing is whitespace tolerant within a line;
//! rendering is canonical: single spaces, `\n` endings, rationals in
//! lowest terms. `render` of a parsed document is byte-stable.

use crate::cnf::{Cnf, Literal};
use crate::graph::{assignment_count, Factor, FactorGraph, GraphError};
use crate::value::Value;
use std::fmt::Write as _;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("line {line}, column {col}: {reason}")]
    Parse {
        line: usize,
        col: usize,
        reason: String,
    },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("{0}")]
    Io(String),
}

/// A parsed factor-graph file: the graph plus its advisory default
/// semiring name. The name is not validated against the registry here;
/// consumers may override it.
#[derive(Debug, Clone)]
pub struct FgDocument {
    pub semiring: String,
    pub graph: FactorGraph,
}

struct Cursor<'a> {
    lines: std::iter::Enumerate<std::str::Lines<'a>>,
}

struct Row<'a> {
    line_no: usize,
    text: &'a str,
    tokens: Vec<(usize, &'a str)>,
    next: usize,
}

impl<'a> Cursor<'a> {
    fn new(text: &'a str) -> Self {
        Cursor {
            lines: text.lines().enumerate(),
        }
    }

    /// Next non-blank line, tokenized with byte columns.
    fn row(&mut self, expect: &str) -> Result<Row<'a>, FormatError> {
        for (i, text) in self.lines.by_ref() {
            if text.trim().is_empty() {
                continue;
            }
            let tokens = text
                .split_whitespace()
                .map(|tok| {
                    let col = tok.as_ptr() as usize - text.as_ptr() as usize;
                    (col + 1, tok)
                })
                .collect();
            return Ok(Row {
                line_no: i + 1,
                text,
                tokens,
                next: 0,
            });
        }
        Err(FormatError::Parse {
            line: 0,
            col: 0,
            reason: format!("unexpected end of file, expected {expect}"),
        })
    }
}

impl<'a> Row<'a> {
    fn fail(&self, col: usize, reason: String) -> FormatError {
        FormatError::Parse {
            line: self.line_no,
            col,
            reason,
        }
    }

    fn take(&mut self, what: &str) -> Result<(usize, &'a str), FormatError> {
        match self.tokens.get(self.next) {
            Some(&(col, tok)) => {
                self.next += 1;
                Ok((col, tok))
            }
            None => Err(self.fail(self.text.len() + 1, format!("missing {what}"))),
        }
    }

    fn keyword(&mut self, kw: &str) -> Result<(), FormatError> {
        let (col, tok) = self.take(&format!("`{kw}`"))?;
        if tok != kw {
            return Err(self.fail(col, format!("expected `{kw}`, found `{tok}`")));
        }
        Ok(())
    }

    fn usize(&mut self, what: &str) -> Result<usize, FormatError> {
        let (col, tok) = self.take(what)?;
        tok.parse::<usize>()
            .map_err(|_| self.fail(col, format!("{what} must be a non-negative integer, found `{tok}`")))
    }

    fn value(&mut self) -> Result<Value, FormatError> {
        let (col, tok) = self.take("a value")?;
        Value::parse(tok).map_err(|e| self.fail(col, e.to_string()))
    }

    fn done(&self) -> Result<(), FormatError> {
        match self.tokens.get(self.next) {
            Some(&(col, tok)) => Err(self.fail(col, format!("unexpected trailing `{tok}`"))),
            None => Ok(()),
        }
    }
}

/// Parse an `FG 1` document. The graph is validated on construction.
pub fn parse_fg(text: &str) -> Result<FgDocument, FormatError> {
    let mut cur = Cursor::new(text);

    let mut row = cur.row("`FG 1`")?;
    row.keyword("FG")?;
    let (col, ver) = row.take("a format version")?;
    if ver != "1" {
        return Err(row.fail(col, format!("unsupported format version `{ver}`")));
    }
    row.done()?;

    let mut row = cur.row("`SEMIRING <name>`")?;
    row.keyword("SEMIRING")?;
    let (_, semiring) = row.take("a semiring name")?;
    let semiring = semiring.to_string();
    row.done()?;

    let mut row = cur.row("`VARS <n>`")?;
    row.keyword("VARS")?;
    let num_vars = row.usize("the variable count")?;
    row.done()?;

    let mut row = cur.row("`DOM ...`")?;
    row.keyword("DOM")?;
    let mut domains = Vec::with_capacity(num_vars);
    for _ in 0..num_vars {
        domains.push(row.usize("a domain size")?);
    }
    row.done()?;

    let mut row = cur.row("`FACTORS <k>`")?;
    row.keyword("FACTORS")?;
    let num_factors = row.usize("the factor count")?;
    row.done()?;

    let mut factors = Vec::with_capacity(num_factors);
    for _ in 0..num_factors {
        let mut row = cur.row("`SCOPE k i1 ... ik`")?;
        row.keyword("SCOPE")?;
        let arity = row.usize("the scope size")?;
        let mut scope = Vec::with_capacity(arity);
        for _ in 0..arity {
            let (col, tok) = row.take("a variable index")?;
            let v: usize = tok
                .parse()
                .map_err(|_| row.fail(col, format!("bad variable index `{tok}`")))?;
            if v >= num_vars {
                return Err(row.fail(col, format!("variable {v} out of range, have {num_vars}")));
            }
            scope.push(v);
        }
        row.done()?;

        let dims: Vec<usize> = scope.iter().map(|&v| domains[v]).collect();
        let want = usize::try_from(assignment_count(&dims))
            .map_err(|_| row.fail(1, "table size overflows".to_string()))?;
        let mut row = cur.row("`TABLE ...`")?;
        row.keyword("TABLE")?;
        let mut table = Vec::with_capacity(want);
        for _ in 0..want {
            let have = table.len();
            let v = row.value().map_err(|e| match e {
                FormatError::Parse { line, col, reason } if reason.starts_with("missing") => {
                    FormatError::Parse {
                        line,
                        col,
                        reason: format!("table needs {want} entries, found {have}"),
                    }
                }
                other => other,
            })?;
            table.push(v);
        }
        if row.done().is_err() {
            let extra = row.tokens.len() - row.next;
            let (col, _) = row.tokens[row.next];
            return Err(row.fail(col, format!("table needs {want} entries, found {}", want + extra)));
        }
        factors.push(Factor { scope, table });
    }

    // A trailing non-blank line is a structural error, not noise.
    if let Ok(row) = cur.row("end of file") {
        return Err(row.fail(1, "content after the last factor".to_string()));
    }

    let graph = FactorGraph::build(domains, factors)?;
    Ok(FgDocument { semiring, graph })
}

/// Canonical rendering: the unique byte representation of a document.
pub fn render_fg(doc: &FgDocument) -> String {
    let g = &doc.graph;
    let mut out = String::new();
    out.push_str("FG 1\n");
    let _ = writeln!(out, "SEMIRING {}", doc.semiring);
    let _ = writeln!(out, "VARS {}", g.num_vars());
    out.push_str("DOM");
    for d in g.domains() {
        let _ = write!(out, " {d}");
    }
    out.push('\n');
    let _ = writeln!(out, "FACTORS {}", g.num_factors());
    for f in g.factors() {
        let _ = write!(out, "SCOPE {}", f.scope.len());
        for v in &f.scope {
            let _ = write!(out, " {v}");
        }
        out.push_str("\nTABLE");
        for v in &f.table {
            let _ = write!(out, " {v}");
        }
        out.push('\n');
    }
    out
}

pub fn load_fg(path: &Path) -> Result<FgDocument, FormatError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| FormatError::Io(format!("{}: {e}", path.display())))?;
    parse_fg(&text)
}

pub fn save_fg(path: &Path, doc: &FgDocument) -> Result<(), FormatError> {
    std::fs::write(path, render_fg(doc))
        .map_err(|e| FormatError::Io(format!("{}: {e}", path.display())))
}

/// Parse DIMACS CNF. Comment lines start with `c`; a `%` line ends the
/// file. Returns the formula and non-fatal warnings (count mismatches,
/// an unterminated final clause).
pub fn parse_dimacs(text: &str) -> Result<(Cnf, Vec<String>), FormatError> {
    let mut warnings = Vec::new();
    let mut header: Option<(usize, usize)> = None;
    let mut clauses: Vec<Vec<Literal>> = Vec::new();
    let mut current: Vec<Literal> = Vec::new();

    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('c') {
            continue;
        }
        if trimmed.starts_with('%') {
            break;
        }
        if trimmed.starts_with('p') {
            if header.is_some() {
                return Err(FormatError::Parse {
                    line: line_no,
                    col: 1,
                    reason: "duplicate `p` header".to_string(),
                });
            }
            let toks: Vec<&str> = trimmed.split_whitespace().collect();
            if toks.len() != 4 || toks[1] != "cnf" {
                return Err(FormatError::Parse {
                    line: line_no,
                    col: 1,
                    reason: "header must read `p cnf <vars> <clauses>`".to_string(),
                });
            }
            let nv = toks[2].parse::<usize>();
            let nc = toks[3].parse::<usize>();
            match (nv, nc) {
                (Ok(nv), Ok(nc)) => header = Some((nv, nc)),
                _ => {
                    return Err(FormatError::Parse {
                        line: line_no,
                        col: 1,
                        reason: "header counts must be non-negative integers".to_string(),
                    })
                }
            }
            continue;
        }
        let (num_vars, _) = header.ok_or(FormatError::Parse {
            line: line_no,
            col: 1,
            reason: "clause before the `p cnf` header".to_string(),
        })?;
        for tok in trimmed.split_whitespace() {
            let col = tok.as_ptr() as usize - line.as_ptr() as usize + 1;
            let lit: i64 = tok.parse().map_err(|_| FormatError::Parse {
                line: line_no,
                col,
                reason: format!("bad literal `{tok}`"),
            })?;
            if lit == 0 {
                clauses.push(std::mem::take(&mut current));
                continue;
            }
            let var = lit.unsigned_abs() as usize - 1;
            if var >= num_vars {
                return Err(FormatError::Parse {
                    line: line_no,
                    col,
                    reason: format!("literal {lit} exceeds the declared {num_vars} variables"),
                });
            }
            current.push(if lit > 0 {
                Literal::pos(var)
            } else {
                Literal::neg(var)
            });
        }
    }
    if !current.is_empty() {
        warnings.push(format!(
            "final clause of {} literals is not terminated by 0",
            current.len()
        ));
        clauses.push(current);
    }
    let (num_vars, declared) = header.ok_or(FormatError::Parse {
        line: 0,
        col: 0,
        reason: "missing `p cnf` header".to_string(),
    })?;
    if clauses.len() != declared {
        warnings.push(format!(
            "header declares {declared} clauses, file has {}",
            clauses.len()
        ));
    }
    Ok((Cnf::new(num_vars, clauses), warnings))
}

pub fn load_dimacs(path: &Path) -> Result<(Cnf, Vec<String>), FormatError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| FormatError::Io(format!("{}: {e}", path.display())))?;
    parse_dimacs(&text)
}

/// FNV-1a, 64 bit, as sixteen lowercase hex digits. Stable across
/// platforms; used to tie a run report to its input bytes.
pub fn digest_hex(bytes: &[u8]) -> String {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    format!("{h:016x}")
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "FG 1\nSEMIRING sum-product\nVARS 1\nDOM 2\nFACTORS 1\nSCOPE 1 0\nTABLE 1/3 2/3\n";

    #[test]
    fn minimal_document_round_trips() {
        let doc = parse_fg(MINIMAL).unwrap();
        assert_eq!(doc.semiring, "sum-product");
        assert_eq!(doc.graph.num_vars(), 1);
        assert_eq!(doc.graph.factors()[0].table[1], Value::ratio(2, 3));
        assert_eq!(render_fg(&doc), MINIMAL);
    }

    #[test]
    fn rendering_canonicalizes_whitespace_and_fractions() {
        let messy = "FG   1\n\nSEMIRING  min-sum\nVARS 2\nDOM  2   3\nFACTORS 1\nSCOPE 2  0 1\nTABLE 2/4 1 0 -inf 3.5 6/2\n";
        let doc = parse_fg(messy).unwrap();
        let canon = render_fg(&doc);
        assert_eq!(
            canon,
            "FG 1\nSEMIRING min-sum\nVARS 2\nDOM 2 3\nFACTORS 1\nSCOPE 2 0 1\nTABLE 1/2 1 0 -inf 3.5 3\n"
        );
        // Idempotent: canonical text parses back to the same bytes.
        assert_eq!(render_fg(&parse_fg(&canon).unwrap()), canon);
    }

    #[test]
    fn short_tables_name_the_expected_count() {
        let text = "FG 1\nSEMIRING sum-product\nVARS 2\nDOM 2 2\nFACTORS 1\nSCOPE 2 0 1\nTABLE 1 2 3\n";
        match parse_fg(text) {
            Err(FormatError::Parse { line, reason, .. }) => {
                assert_eq!(line, 7);
                assert!(reason.contains("needs 4"), "{reason}");
            }
            other => panic!("expected a parse error, got {other:?}"),
        }
    }

    #[test]
    fn long_tables_are_rejected_too() {
        let text = "FG 1\nSEMIRING sum-product\nVARS 1\nDOM 2\nFACTORS 1\nSCOPE 1 0\nTABLE 1 2 3\n";
        match parse_fg(text) {
            Err(FormatError::Parse { line, col, reason }) => {
                assert_eq!((line, col), (7, 11));
                assert!(reason.contains("needs 2"), "{reason}");
            }
            other => panic!("expected a parse error, got {other:?}"),
        }
    }

    #[test]
    fn scope_indices_are_range_checked() {
        let text = "FG 1\nSEMIRING sum-product\nVARS 1\nDOM 2\nFACTORS 1\nSCOPE 1 3\nTABLE 1 2\n";
        match parse_fg(text) {
            Err(FormatError::Parse { line, col, reason }) => {
                assert_eq!((line, col), (6, 9));
                assert!(reason.contains("out of range"), "{reason}");
            }
            other => panic!("expected a parse error, got {other:?}"),
        }
    }

    #[test]
    fn bad_values_report_their_column() {
        let text = "FG 1\nSEMIRING sum-product\nVARS 1\nDOM 2\nFACTORS 1\nSCOPE 1 0\nTABLE 1 banana\n";
        match parse_fg(text) {
            Err(FormatError::Parse { line, col, .. }) => assert_eq!((line, col), (7, 9)),
            other => panic!("expected a parse error, got {other:?}"),
        }
    }

    #[test]
    fn dimacs_clauses_map_to_zero_based_literals() {
        let (cnf, warnings) = parse_dimacs("c comment\np cnf 2 1\n1 -2 0\n").unwrap();
        assert!(warnings.is_empty());
        assert_eq!(cnf.num_vars, 2);
        assert_eq!(cnf.clauses, vec![vec![Literal::pos(0), Literal::neg(1)]]);
    }

    #[test]
    fn dimacs_zero_terminates_mid_line() {
        let (cnf, _) = parse_dimacs("p cnf 3 2\n1 2 0 -3 0\n").unwrap();
        assert_eq!(
            cnf.clauses,
            vec![
                vec![Literal::pos(0), Literal::pos(1)],
                vec![Literal::neg(2)]
            ]
        );
    }

    #[test]
    fn dimacs_count_mismatch_is_a_warning() {
        let (cnf, warnings) = parse_dimacs("p cnf 2 3\n1 0\n2 0\n").unwrap();
        assert_eq!(cnf.clauses.len(), 2);
        assert_eq!(warnings.len(), 1);
        assert!(warnings[0].contains("declares 3"));
    }

    #[test]
    fn dimacs_out_of_range_literal_fails() {
        match parse_dimacs("p cnf 1 1\n2 0\n") {
            Err(FormatError::Parse { line, col, .. }) => assert_eq!((line, col), (2, 1)),
            other => panic!("expected a parse error, got {other:?}"),
        }
    }

    #[test]
    fn digest_matches_known_vectors() {
        assert_eq!(digest_hex(b""), "cbf29ce484222325");
        assert_eq!(digest_hex(b"a"), "af63dc4c8601ec8c");
        assert_eq!(digest_hex(b"hello"), "a430d84680aabd0b");
    }

    #[test]
    fn files_round_trip_through_disk() {
        let dir = std::env::temp_dir().join(format!("semifold-fmt-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("round.fg");
        let doc = parse_fg(MINIMAL).unwrap();
        save_fg(&path, &doc).unwrap();
        let back = load_fg(&path).unwrap();
        assert_eq!(render_fg(&back), MINIMAL);
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
