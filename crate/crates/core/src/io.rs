//! Metis-style graph files and permutation files.
//!
//! Graph files carry a header `n m [f]` followed by one line per vertex.
//! Vertex ids are 1-based in the file and 0-based everywhere else. `f`
//! selects the line layout: `1` edge weights, `10` node weights, `11`
//! both. Lines starting with `%` are comments.
//!
//! Permutation files have one line per process; line `i` holds the PE
//! assigned to process `i` (0-based on both sides).

use std::collections::hash_map::Entry;
use std::collections::HashMap;
use std::fmt;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::mapping::Mapping;

/// Default name of the permutation file written by the mapper.
pub const DEFAULT_PERMUTATION_FILE: &str = "permutation";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ViolationKind {
    SelfLoop,
    ParallelEdge,
    MissingBackwardEdge,
    AsymmetricWeight,
    CountMismatch,
    BadHeader,
    BadToken,
    WeightOutOfRange,
}

impl ViolationKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ViolationKind::SelfLoop => "SELF_LOOP",
            ViolationKind::ParallelEdge => "PARALLEL_EDGE",
            ViolationKind::MissingBackwardEdge => "MISSING_BACKWARD_EDGE",
            ViolationKind::AsymmetricWeight => "ASYMMETRIC_WEIGHT",
            ViolationKind::CountMismatch => "COUNT_MISMATCH",
            ViolationKind::BadHeader => "BAD_HEADER",
            ViolationKind::BadToken => "BAD_TOKEN",
            ViolationKind::WeightOutOfRange => "WEIGHT_OUT_OF_RANGE",
        }
    }
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub kind: ViolationKind,
    /// 1-based physical line number in the input.
    pub line: usize,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}: {}", self.line, self.kind, self.message)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn has(&self, kind: ViolationKind) -> bool {
        self.violations.iter().any(|v| v.kind == kind)
    }
}

#[derive(Clone, Copy, Debug)]
struct Format {
    edge_weights: bool,
    node_weights: bool,
}

struct Header {
    n: usize,
    m: usize,
    format: Format,
    line: usize,
}

/// Result of one pass over a graph file. `lists[u]` holds the raw
/// `(neighbor, weight)` entries as written, including invalid ones that
/// were already reported.
struct Scan {
    violations: Vec<Violation>,
    header: Option<Header>,
    lists: Vec<Vec<(usize, i64)>>,
    node_weights: Vec<i64>,
    vertex_lines: Vec<usize>,
}

impl Scan {
    fn report(&mut self, kind: ViolationKind, line: usize, message: impl Into<String>) {
        self.violations.push(Violation {
            kind,
            line,
            message: message.into(),
        });
    }
}

/// Physical lines with 1-based numbers; a trailing newline does not start
/// an extra line.
fn numbered_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    let text = text.strip_suffix('\n').unwrap_or(text);
    let empty = text.is_empty();
    text.split('\n')
        .map(|l| l.strip_suffix('\r').unwrap_or(l))
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(move |_| !empty)
}

fn tokens(line: &str) -> impl Iterator<Item = &str> {
    line.split([' ', '\t']).filter(|t| !t.is_empty())
}

fn parse_header(line_no: usize, line: &str) -> std::result::Result<Header, Violation> {
    let bad = |message: String| Violation {
        kind: ViolationKind::BadHeader,
        line: line_no,
        message,
    };
    let toks: Vec<&str> = tokens(line).collect();
    if toks.len() < 2 || toks.len() > 3 {
        return Err(bad(format!("expected `n m` or `n m f`, found {} tokens", toks.len())));
    }
    let n: usize = toks[0]
        .parse()
        .map_err(|_| bad(format!("vertex count `{}` is not a non-negative integer", toks[0])))?;
    let m: usize = toks[1]
        .parse()
        .map_err(|_| bad(format!("edge count `{}` is not a non-negative integer", toks[1])))?;
    let f: u32 = match toks.get(2) {
        None => 0,
        Some(t) => t
            .parse()
            .map_err(|_| bad(format!("format flag `{t}` is not an integer")))?,
    };
    let format = match f {
        0 => Format {
            edge_weights: false,
            node_weights: false,
        },
        1 => Format {
            edge_weights: true,
            node_weights: false,
        },
        10 => Format {
            edge_weights: false,
            node_weights: true,
        },
        11 => Format {
            edge_weights: true,
            node_weights: true,
        },
        other => return Err(bad(format!("format flag {other} is not one of 0, 1, 10, 11"))),
    };
    Ok(Header {
        n,
        m,
        format,
        line: line_no,
    })
}

fn scan(text: &str) -> Scan {
    let mut scan = Scan {
        violations: Vec::new(),
        header: None,
        lists: Vec::new(),
        node_weights: Vec::new(),
        vertex_lines: Vec::new(),
    };
    let mut lines = numbered_lines(text).filter(|(_, l)| !l.starts_with('%'));

    let Some((header_line, header_text)) = lines.next() else {
        scan.report(ViolationKind::BadHeader, 1, "file contains no header line");
        return scan;
    };
    let header = match parse_header(header_line, header_text) {
        Ok(h) => h,
        Err(v) => {
            scan.violations.push(v);
            return scan;
        }
    };
    let (n, format) = (header.n, header.format);
    let mut last_line = header_line;

    for (line_no, line) in lines {
        last_line = line_no;
        let u = scan.lists.len();
        if u == n {
            if tokens(line).next().is_some() {
                scan.report(
                    ViolationKind::CountMismatch,
                    line_no,
                    format!("header declares {n} vertices but the file has more vertex lines"),
                );
                break;
            }
            continue;
        }
        let mut toks = tokens(line);
        let mut node_weight = 1;
        if format.node_weights {
            match toks.next().map(|t| (t, t.parse::<i64>())) {
                None => scan.report(
                    ViolationKind::BadToken,
                    line_no,
                    format!("vertex {} is missing its node weight", u + 1),
                ),
                Some((t, Err(_))) => scan.report(
                    ViolationKind::BadToken,
                    line_no,
                    format!("node weight `{t}` is not an integer"),
                ),
                Some((_, Ok(c))) if c < 0 => scan.report(
                    ViolationKind::WeightOutOfRange,
                    line_no,
                    format!("node weight {c} of vertex {} is negative", u + 1),
                ),
                Some((_, Ok(c))) => node_weight = c,
            }
        }
        let mut list = Vec::new();
        while let Some(t) = toks.next() {
            let target = match t.parse::<usize>() {
                Ok(v) if (1..=n).contains(&v) => Some(v - 1),
                Ok(v) => {
                    scan.report(
                        ViolationKind::BadToken,
                        line_no,
                        format!("neighbor id {v} is outside 1..{n}"),
                    );
                    None
                }
                Err(_) => {
                    scan.report(
                        ViolationKind::BadToken,
                        line_no,
                        format!("neighbor id `{t}` is not a positive integer"),
                    );
                    None
                }
            };
            let weight = if format.edge_weights {
                match toks.next().map(|t| (t, t.parse::<i64>())) {
                    None => {
                        scan.report(
                            ViolationKind::BadToken,
                            line_no,
                            format!("neighbor `{t}` has no edge weight"),
                        );
                        None
                    }
                    Some((w, Err(_))) => {
                        scan.report(
                            ViolationKind::BadToken,
                            line_no,
                            format!("edge weight `{w}` is not an integer"),
                        );
                        None
                    }
                    Some((_, Ok(w))) if w < 1 => {
                        scan.report(
                            ViolationKind::WeightOutOfRange,
                            line_no,
                            format!("edge weight {w} is not positive"),
                        );
                        None
                    }
                    Some((_, Ok(w))) => Some(w),
                }
            } else {
                Some(1)
            };
            if let (Some(v), Some(w)) = (target, weight) {
                list.push((v, w));
            }
        }
        scan.lists.push(list);
        scan.node_weights.push(node_weight);
        scan.vertex_lines.push(line_no);
    }

    if scan.lists.len() < n {
        scan.report(
            ViolationKind::CountMismatch,
            last_line,
            format!(
                "header declares {n} vertices but the file has only {} vertex lines",
                scan.lists.len()
            ),
        );
    }
    scan.header = Some(header);
    check_structure(&mut scan);
    scan
}

/// Self-loops, parallel edges, backward edges, weight symmetry and the edge
/// count.
fn check_structure(scan: &mut Scan) {
    let Some(header) = scan.header.as_ref() else { return };
    let (declared_m, header_line) = (header.m, header.line);
    let mut found = Vec::new();

    // (u, v) -> weight of the first occurrence
    let mut index: HashMap<(usize, usize), i64> = HashMap::new();
    for (u, list) in scan.lists.iter().enumerate() {
        for &(v, w) in list {
            let line = scan.vertex_lines[u];
            if v == u {
                found.push((ViolationKind::SelfLoop, line, format!("vertex {} lists itself", u + 1)));
            } else if let Entry::Vacant(e) = index.entry((u, v)) {
                e.insert(w);
            } else {
                found.push((
                    ViolationKind::ParallelEdge,
                    line,
                    format!("vertex {} lists neighbor {} more than once", u + 1, v + 1),
                ));
            }
        }
    }

    let mut pairs = 0usize;
    let line_of = |u: usize| scan.vertex_lines[u];
    let mut keys: Vec<_> = index.keys().copied().collect();
    keys.sort_unstable();
    for (u, v) in keys {
        let w = index[&(u, v)];
        match index.get(&(v, u)) {
            None => found.push((
                ViolationKind::MissingBackwardEdge,
                line_of(u),
                format!(
                    "edge ({}, {}) has no backward edge on line {}",
                    u + 1,
                    v + 1,
                    line_of(v)
                ),
            )),
            Some(&back) if u < v && back != w => found.push((
                ViolationKind::AsymmetricWeight,
                line_of(u),
                format!(
                    "edge ({}, {}) has weight {} on line {} but {} on line {}",
                    u + 1,
                    v + 1,
                    w,
                    line_of(u),
                    back,
                    line_of(v)
                ),
            )),
            Some(_) => {}
        }
        if u < v || !index.contains_key(&(v, u)) {
            pairs += 1;
        }
    }
    // entries dropped for bad tokens would make any edge count misleading
    let dropped = scan
        .violations
        .iter()
        .any(|v| matches!(v.kind, ViolationKind::BadToken | ViolationKind::WeightOutOfRange));
    if pairs != declared_m && !dropped {
        found.push((
            ViolationKind::CountMismatch,
            header_line,
            format!("header declares {declared_m} edges but the file describes {pairs}"),
        ));
    }
    for (kind, line, message) in found {
        scan.report(kind, line, message);
    }
    scan.violations.sort_by_key(|v| v.line);
}

/// Parses a graph file. Fails on the first violation in line order.
pub fn parse_graph(text: &str) -> Result<Graph> {
    let scan = scan(text);
    if let Some(v) = scan.violations.into_iter().next() {
        return Err(Error::Format {
            kind: v.kind,
            line: v.line,
            message: v.message,
        });
    }
    Graph::from_adjacency_lists(scan.lists, scan.node_weights)
}

pub fn read_graph(path: impl AsRef<Path>) -> Result<Graph> {
    parse_graph(&fs::read_to_string(path)?)
}

/// Reports every format violation in `text`. Only an unreadable header
/// stops the scan early.
pub fn validate_graph(text: &str) -> ValidationReport {
    ValidationReport {
        violations: scan(text).violations,
    }
}

/// Serializes `g` in the graph file format. With `include_weights` the
/// header carries `f = 1`; node weights are written (`f = 10`/`11`) only
/// when some vertex has a weight other than 1.
pub fn write_graph(g: &Graph, include_weights: bool) -> String {
    let node_weights = g.node_weights().iter().any(|&c| c != 1);
    let mut out = String::new();
    match (node_weights, include_weights) {
        (false, false) => writeln!(out, "{} {}", g.n(), g.m()),
        (false, true) => writeln!(out, "{} {} 1", g.n(), g.m()),
        (true, false) => writeln!(out, "{} {} 10", g.n(), g.m()),
        (true, true) => writeln!(out, "{} {} 11", g.n(), g.m()),
    }
    .unwrap();
    for u in 0..g.n() {
        let mut first = true;
        let mut sep = |out: &mut String| {
            if !first {
                out.push(' ');
            }
            first = false;
        };
        if node_weights {
            sep(&mut out);
            write!(out, "{}", g.node_weight(u)).unwrap();
        }
        for (v, w) in g.neighbors(u) {
            sep(&mut out);
            write!(out, "{}", v + 1).unwrap();
            if include_weights {
                write!(out, " {w}").unwrap();
            }
        }
        out.push('\n');
    }
    out
}

/// One line per process holding its PE id.
pub fn format_permutation(mapping: &Mapping) -> String {
    let mut out = String::with_capacity(mapping.len() * 8);
    for &pe in mapping.sigma() {
        writeln!(out, "{pe}").unwrap();
    }
    out
}

pub fn write_permutation(mapping: &Mapping, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, format_permutation(mapping))?;
    Ok(())
}

/// Parses a permutation file of exactly `n` lines into a mapping.
pub fn parse_mapping(text: &str, n: usize) -> Result<Mapping> {
    let mut sigma = Vec::with_capacity(n);
    for (line_no, line) in numbered_lines(text) {
        let line = line.trim();
        if line.is_empty() {
            return Err(Error::Mapping(format!("line {line_no} is empty")));
        }
        let pe: usize = line
            .parse()
            .map_err(|_| Error::Mapping(format!("line {line_no}: `{line}` is not a PE id")))?;
        sigma.push(pe);
    }
    if sigma.len() != n {
        return Err(Error::Mapping(format!("expected {n} lines, found {}", sigma.len())));
    }
    Mapping::from_sigma(sigma)
}

pub fn read_mapping(path: impl AsRef<Path>, n: usize) -> Result<Mapping> {
    parse_mapping(&fs::read_to_string(path)?, n)
}
