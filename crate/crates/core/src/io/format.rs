//! Line-oriented text formats for graphs, domains, boundary data and fields.
//!
//! ```text
//! mmgraph 1            # optional header
//! v <index> <measure>
//! e <i> <j> <weight>
//! interior <i1> <i2> ...
//! f <interior_vertex> <exterior_vertex> <value>
//! u <vertex> <value>
//! x <i> <j> <value>
//! ```
//!
//! Reals are written in Rust's shortest round-trip form, so parse ∘ write is
//! the identity bit for bit.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use crate::calculus::{EdgeField, FieldScope};
use crate::error::{Error, Result};
use crate::space::{build_graph, make_domain, BoundaryData, Domain, MetricMeasureGraph, VertexField};

fn parse_err(line: usize, reason: impl Into<String>) -> Error {
    Error::Parse {
        line,
        reason: reason.into(),
    }
}

/// Non-empty, comment-stripped lines with their 1-based numbers.
fn records(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines().enumerate().filter_map(|(i, raw)| {
        let body = raw.split('#').next().unwrap_or("");
        let toks: Vec<&str> = body.split_whitespace().collect();
        (!toks.is_empty()).then_some((i + 1, toks))
    })
}

fn index(line: usize, tok: &str) -> Result<usize> {
    tok.parse()
        .map_err(|_| parse_err(line, format!("expected a vertex index, got `{tok}`")))
}

fn real(line: usize, tok: &str) -> Result<f64> {
    let x: f64 = tok
        .parse()
        .map_err(|_| parse_err(line, format!("expected a number, got `{tok}`")))?;
    if !x.is_finite() {
        return Err(parse_err(line, format!("non-finite value `{tok}`")));
    }
    Ok(x)
}

fn arity(line: usize, toks: &[&str], n: usize) -> Result<()> {
    if toks.len() != n {
        return Err(parse_err(
            line,
            format!("`{}` takes {} fields, got {}", toks[0], n - 1, toks.len() - 1),
        ));
    }
    Ok(())
}

/// Contents of a graph file.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphFile {
    pub graph: Arc<MetricMeasureGraph>,
    pub interior: Option<Vec<usize>>,
    /// `(interior vertex, exterior vertex, value)` triples from `f` lines.
    pub boundary_values: Vec<(usize, usize, f64)>,
}

impl GraphFile {
    /// The declared domain, or the whole space when no `interior` line is present.
    pub fn domain(&self) -> Result<Domain> {
        match &self.interior {
            Some(i) => make_domain(self.graph.clone(), i),
            None => make_domain(self.graph.clone(), &(0..self.graph.num_vertices()).collect::<Vec<_>>()),
        }
    }

    /// Boundary data ordered like `domain.boundary()`; `None` when the file
    /// has no `f` lines.
    pub fn boundary_data(&self, domain: &Domain) -> Result<Option<BoundaryData>> {
        if self.boundary_values.is_empty() {
            return Ok(None);
        }
        let mut values = vec![None; domain.boundary().len()];
        for &(v, b, val) in &self.boundary_values {
            let i = domain
                .boundary()
                .iter()
                .position(|e| e.vertex == v && e.exterior == b)
                .ok_or_else(|| {
                    Error::InvalidParameter(format!("no boundary element {v} -> {b} in domain"))
                })?;
            values[i] = Some(val);
        }
        let values: Option<Vec<f64>> = values.into_iter().collect();
        values.map(|v| Some(v.into())).ok_or(Error::MissingBoundaryData)
    }
}

pub fn parse_graph(text: &str) -> Result<GraphFile> {
    let mut measures: BTreeMap<usize, (usize, f64)> = BTreeMap::new();
    let mut edges: Vec<(usize, usize, usize, f64)> = Vec::new();
    let mut interior: Option<(usize, Vec<usize>)> = None;
    let mut fvals: Vec<(usize, usize, usize, f64)> = Vec::new();
    let mut seen_pairs = HashSet::new();
    let mut first = true;

    for (line, toks) in records(text) {
        let header = first;
        first = false;
        match toks[0] {
            "mmgraph" if header => {
                if toks.len() != 2 || toks[1] != "1" {
                    return Err(parse_err(line, "unsupported header, expected `mmgraph 1`"));
                }
            }
            "mmgraph" => return Err(parse_err(line, "header must be the first line")),
            "v" => {
                arity(line, &toks, 3)?;
                let i = index(line, toks[1])?;
                let m = real(line, toks[2])?;
                if m <= 0.0 {
                    return Err(parse_err(line, format!("measure of vertex {i} must be positive")));
                }
                if measures.insert(i, (line, m)).is_some() {
                    return Err(parse_err(line, format!("vertex {i} declared twice")));
                }
            }
            "e" => {
                arity(line, &toks, 4)?;
                let (i, j) = (index(line, toks[1])?, index(line, toks[2])?);
                let w = real(line, toks[3])?;
                if i == j {
                    return Err(parse_err(line, format!("self-loop at vertex {i}")));
                }
                if w <= 0.0 {
                    return Err(parse_err(line, format!("weight of edge {i}-{j} must be positive")));
                }
                if !seen_pairs.insert((i.min(j), i.max(j))) {
                    return Err(parse_err(line, format!("edge {i}-{j} declared twice")));
                }
                edges.push((line, i, j, w));
            }
            "interior" => {
                if interior.is_some() {
                    return Err(parse_err(line, "more than one `interior` line"));
                }
                if toks.len() < 2 {
                    return Err(parse_err(line, "`interior` needs at least one vertex"));
                }
                let idx = toks[1..]
                    .iter()
                    .map(|t| index(line, t))
                    .collect::<Result<Vec<_>>>()?;
                interior = Some((line, idx));
            }
            "f" => {
                arity(line, &toks, 4)?;
                fvals.push((line, index(line, toks[1])?, index(line, toks[2])?, real(line, toks[3])?));
            }
            other => return Err(parse_err(line, format!("unknown record `{other}`"))),
        }
    }

    let n = measures.len();
    if let Some((&i, &(line, _))) = measures.iter().next_back() {
        if i >= n {
            let missing = (0..n).find(|k| !measures.contains_key(k)).unwrap_or(n);
            return Err(parse_err(line, format!("vertex {missing} has no measure line")));
        }
    }
    let check_vertex = |line: usize, v: usize| -> Result<()> {
        if v >= n {
            return Err(parse_err(line, format!("vertex {v} has no measure line")));
        }
        Ok(())
    };
    for &(line, i, j, _) in &edges {
        check_vertex(line, i)?;
        check_vertex(line, j)?;
    }
    if let Some((line, idx)) = &interior {
        for &v in idx {
            check_vertex(*line, v)?;
        }
    }
    let mut fseen = HashSet::new();
    for &(line, v, b, _) in &fvals {
        check_vertex(line, v)?;
        check_vertex(line, b)?;
        if !fseen.insert((v, b)) {
            return Err(parse_err(line, format!("boundary value {v} -> {b} given twice")));
        }
    }

    let m: Vec<f64> = measures.values().map(|&(_, m)| m).collect();
    let e: Vec<(usize, usize, f64)> = edges.iter().map(|&(_, i, j, w)| (i, j, w)).collect();
    let graph = build_graph(&m, &e).map_err(|err| parse_err(0, err.to_string()))?;
    Ok(GraphFile {
        graph: Arc::new(graph),
        interior: interior.map(|(_, i)| i),
        boundary_values: fvals.into_iter().map(|(_, v, b, x)| (v, b, x)).collect(),
    })
}

pub fn parse_graph_file(path: impl AsRef<Path>) -> Result<GraphFile> {
    parse_graph(&std::fs::read_to_string(path)?)
}

pub fn write_graph(file: &GraphFile) -> String {
    let mut out = String::from("mmgraph 1\n");
    for (i, m) in file.graph.measures().iter().enumerate() {
        let _ = writeln!(out, "v {i} {m}");
    }
    for e in file.graph.edges() {
        let _ = writeln!(out, "e {} {} {}", e.a, e.b, e.weight);
    }
    if let Some(interior) = &file.interior {
        out.push_str("interior");
        for v in interior {
            let _ = write!(out, " {v}");
        }
        out.push('\n');
    }
    for (v, b, x) in &file.boundary_values {
        let _ = writeln!(out, "f {v} {b} {x}");
    }
    out
}

/// Graph file for a domain, including its boundary data when given.
pub fn graph_file_for(domain: &Domain, f: Option<&BoundaryData>) -> GraphFile {
    let whole = domain.len() == domain.graph().num_vertices();
    GraphFile {
        graph: domain.graph().clone(),
        interior: (!whole).then(|| domain.interior().to_vec()),
        boundary_values: f
            .map(|f| {
                domain
                    .boundary()
                    .iter()
                    .zip(f.iter())
                    .map(|(b, &x)| (b.vertex, b.exterior, x))
                    .collect()
            })
            .unwrap_or_default(),
    }
}

/// Vertex field from `u <vertex> <value>` lines; every interior vertex must
/// appear exactly once.
pub fn parse_vertex_field(text: &str, domain: &Domain) -> Result<VertexField> {
    let mut vals: Vec<Option<f64>> = vec![None; domain.len()];
    for (line, toks) in records(text) {
        if toks[0] != "u" {
            return Err(parse_err(line, format!("expected `u` record, got `{}`", toks[0])));
        }
        arity(line, &toks, 3)?;
        let v = index(line, toks[1])?;
        let l = domain
            .local_index(v)
            .ok_or_else(|| parse_err(line, format!("vertex {v} is not interior")))?;
        if vals[l].replace(real(line, toks[2])?).is_some() {
            return Err(parse_err(line, format!("vertex {v} given twice")));
        }
    }
    vals.iter()
        .enumerate()
        .map(|(l, x)| {
            x.ok_or_else(|| parse_err(0, format!("no value for vertex {}", domain.interior()[l])))
        })
        .collect()
}

pub fn write_vertex_field(domain: &Domain, u: &VertexField) -> String {
    let mut out = String::new();
    for (&v, x) in domain.interior().iter().zip(u.iter()) {
        let _ = writeln!(out, "u {v} {x}");
    }
    out
}

/// Edge field from `x <i> <j> <value>` lines meaning `X_{i→j} = value`.
/// Unlisted edges are zero.
pub fn parse_edge_field(text: &str, domain: &Domain) -> Result<EdgeField> {
    let mut x = EdgeField::zeros(domain, FieldScope::Interior);
    let mut seen = HashSet::new();
    for (line, toks) in records(text) {
        if toks[0] != "x" {
            return Err(parse_err(line, format!("expected `x` record, got `{}`", toks[0])));
        }
        arity(line, &toks, 4)?;
        let (i, j) = (index(line, toks[1])?, index(line, toks[2])?);
        if !seen.insert((i.min(j), i.max(j))) {
            return Err(parse_err(line, format!("edge {i}-{j} given twice")));
        }
        x.set(domain, i, j, real(line, toks[3])?)
            .map_err(|e| parse_err(line, e.to_string()))?;
    }
    Ok(x)
}

pub fn write_edge_field(domain: &Domain, x: &EdgeField) -> String {
    let mut out = String::new();
    let g = domain.interior();
    for (e, val) in domain.edges().iter().zip(&x.interior) {
        let _ = writeln!(out, "x {} {} {}", g[e.tail], g[e.head], val);
    }
    if x.scope == FieldScope::InteriorAndBoundary {
        for (b, val) in domain.boundary().iter().zip(&x.boundary) {
            let _ = writeln!(out, "x {} {} {}", b.vertex, b.exterior, val);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn g2_without_header() {
        let gf = parse_graph("v 0 1\nv 1 1\ne 0 1 1\ninterior 0 1\n").unwrap();
        let d = gf.domain().unwrap();
        assert_eq!(d.len(), 2);
        assert!(!d.has_boundary());
    }

    #[test]
    fn missing_measure_line() {
        match parse_graph("mmgraph 1\nv 0 1\ne 0 1 1\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        match parse_graph("v 0 1\nv 2 1\n") {
            Err(Error::Parse { line, reason }) => {
                assert_eq!(line, 2);
                assert!(reason.contains("vertex 1"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn d1_with_boundary_data() {
        let gf = parse_graph("v 0 1\nv 1 1\ne 0 1 1\ninterior 0\nf 0 1 0.0\n").unwrap();
        let d = gf.domain().unwrap();
        let f = gf.boundary_data(&d).unwrap().unwrap();
        assert!(f.is_zero());
    }

    #[test]
    fn malformed_lines() {
        for (text, line) in [
            ("v 0\n", 1),
            ("v 0 1\nv 1 1\ne 0 1 -1\n", 3),
            ("v 0 1\n\n# c\nq 1\n", 4),
            ("v 0 1\nmmgraph 1\n", 2),
            ("v 0 abc\n", 1),
        ] {
            match parse_graph(text) {
                Err(Error::Parse { line: l, .. }) => assert_eq!(l, line, "{text}"),
                other => panic!("{text}: {other:?}"),
            }
        }
    }

    #[test]
    fn round_trip_is_exact() {
        let gf = parse_graph(
            "v 0 0.1\nv 1 3.3333333333333335\nv 2 1e-7\ne 2 0 0.30000000000000004\ne 0 1 7\ninterior 0\nf 0 2 -1.5\nf 0 1 0.1\n",
        )
        .unwrap();
        let again = parse_graph(&write_graph(&gf)).unwrap();
        assert_eq!(gf, again);
    }

    #[test]
    fn fields_round_trip() {
        let gf = parse_graph("v 0 1\nv 1 1\nv 2 1\ne 0 1 1\ne 1 2 1\ninterior 0 1\n").unwrap();
        let d = gf.domain().unwrap();
        let u = parse_vertex_field("u 1 0.25\nu 0 -3\n", &d).unwrap();
        assert_eq!(&u[..], &[-3.0, 0.25]);
        assert_eq!(parse_vertex_field(&write_vertex_field(&d, &u), &d).unwrap(), u);
        let x = parse_edge_field("x 1 0 0.5\nx 1 2 -0.25\n", &d).unwrap();
        assert_eq!(x.get(&d, 0, 1), Some(-0.5));
        assert_eq!(x.get(&d, 1, 2), Some(-0.25));
        assert_eq!(parse_edge_field(&write_edge_field(&d, &x), &d).unwrap(), x);
        assert!(parse_vertex_field("u 0 1\n", &d).is_err());
    }
}
