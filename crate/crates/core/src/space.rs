//! Finite metric measure spaces: weighted graphs with a vertex measure, and
//! domains cut out of them.
//!
//! A [`Domain`] keeps its boundary as a list of oriented half-edges
//! `(interior vertex -> exterior vertex)`. A vertex outside the interior that
//! is reachable from `k` interior vertices therefore carries `k` boundary
//! elements, and the trace of a function on each element is the value at its
//! interior end. Exterior vertices carry no measure in any domain computation.

use std::ops::{Deref, DerefMut};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An undirected weighted edge with `a < b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub a: usize,
    pub b: usize,
    pub weight: f64,
}

/// Vertices with strictly positive measure joined by strictly positive weights.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricMeasureGraph {
    measures: Vec<f64>,
    edges: Vec<Edge>,
}

impl MetricMeasureGraph {
    pub fn num_vertices(&self) -> usize {
        self.measures.len()
    }

    pub fn measure(&self, v: usize) -> f64 {
        self.measures[v]
    }

    pub fn measures(&self) -> &[f64] {
        &self.measures
    }

    /// Edges in lexicographic `(a, b)` order.
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn total_measure(&self) -> f64 {
        self.measures.iter().sum()
    }
}

/// Validates and assembles a graph. Edge order is normalized to lexicographic
/// `(min, max)` pairs so that equal inputs produce identical graphs.
pub fn build_graph(
    vertex_measures: &[f64],
    weighted_edges: &[(usize, usize, f64)],
) -> Result<MetricMeasureGraph> {
    for (i, &m) in vertex_measures.iter().enumerate() {
        if !(m > 0.0) || !m.is_finite() {
            return Err(Error::NonPositiveMeasure(i));
        }
    }
    let n = vertex_measures.len();
    let mut edges = Vec::with_capacity(weighted_edges.len());
    for &(i, j, w) in weighted_edges {
        for idx in [i, j] {
            if idx >= n {
                return Err(Error::VertexOutOfRange { index: idx, len: n });
            }
        }
        if i == j {
            return Err(Error::SelfLoop(i));
        }
        if !(w > 0.0) || !w.is_finite() {
            return Err(Error::NonPositiveWeight(i, j));
        }
        edges.push(Edge {
            a: i.min(j),
            b: i.max(j),
            weight: w,
        });
    }
    edges.sort_by_key(|e| (e.a, e.b));
    if let Some(pair) = edges.windows(2).find(|p| p[0].a == p[1].a && p[0].b == p[1].b) {
        return Err(Error::DuplicateEdge(pair[0].a, pair[0].b));
    }
    Ok(MetricMeasureGraph {
        measures: vertex_measures.to_vec(),
        edges,
    })
}

/// Interior edge in local (interior) indices, `tail < head`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InteriorEdge {
    pub tail: usize,
    pub head: usize,
    pub weight: f64,
}

/// Oriented half-edge leaving the interior.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryElement {
    /// Global index of the interior endpoint.
    pub vertex: usize,
    /// Local index of the interior endpoint.
    pub local: usize,
    /// Global index of the exterior endpoint.
    pub exterior: usize,
    /// Perimeter measure carried by this element.
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Domain {
    graph: Arc<MetricMeasureGraph>,
    interior: Vec<usize>,
    local: Vec<Option<usize>>,
    measures: Vec<f64>,
    edges: Vec<InteriorEdge>,
    boundary: Vec<BoundaryElement>,
}

pub fn make_domain(graph: Arc<MetricMeasureGraph>, interior: &[usize]) -> Result<Domain> {
    if interior.is_empty() {
        return Err(Error::EmptyInterior);
    }
    let n = graph.num_vertices();
    let mut sorted = interior.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if let Some(&bad) = sorted.iter().find(|&&v| v >= n) {
        return Err(Error::VertexOutOfRange { index: bad, len: n });
    }
    let mut local = vec![None; n];
    for (i, &v) in sorted.iter().enumerate() {
        local[v] = Some(i);
    }
    let measures = sorted.iter().map(|&v| graph.measure(v)).collect();
    let mut edges = Vec::new();
    let mut boundary = Vec::new();
    for e in graph.edges() {
        match (local[e.a], local[e.b]) {
            (Some(tail), Some(head)) => edges.push(InteriorEdge {
                tail,
                head,
                weight: e.weight,
            }),
            (Some(la), None) => boundary.push(BoundaryElement {
                vertex: e.a,
                local: la,
                exterior: e.b,
                weight: e.weight,
            }),
            (None, Some(lb)) => boundary.push(BoundaryElement {
                vertex: e.b,
                local: lb,
                exterior: e.a,
                weight: e.weight,
            }),
            (None, None) => {}
        }
    }
    Ok(Domain {
        graph,
        interior: sorted,
        local,
        measures,
        edges,
        boundary,
    })
}

/// The whole graph as a domain with empty boundary.
pub fn whole_space(graph: Arc<MetricMeasureGraph>) -> Result<Domain> {
    let all: Vec<usize> = (0..graph.num_vertices()).collect();
    make_domain(graph, &all)
}

impl Domain {
    pub fn graph(&self) -> &Arc<MetricMeasureGraph> {
        &self.graph
    }

    /// Global indices of interior vertices, ascending.
    pub fn interior(&self) -> &[usize] {
        &self.interior
    }

    pub fn len(&self) -> usize {
        self.interior.len()
    }

    pub fn is_empty(&self) -> bool {
        self.interior.is_empty()
    }

    pub fn local_index(&self, global: usize) -> Option<usize> {
        self.local.get(global).copied().flatten()
    }

    /// Measures of interior vertices in local order.
    pub fn measures(&self) -> &[f64] {
        &self.measures
    }

    pub fn edges(&self) -> &[InteriorEdge] {
        &self.edges
    }

    pub fn boundary(&self) -> &[BoundaryElement] {
        &self.boundary
    }

    pub fn has_boundary(&self) -> bool {
        !self.boundary.is_empty()
    }

    /// Σ over boundary elements of the perimeter measure.
    pub fn perimeter(&self) -> f64 {
        self.boundary.iter().map(|b| b.weight).sum()
    }

    pub fn total_measure(&self) -> f64 {
        self.measures.iter().sum()
    }

    /// Connected-component label of each interior vertex (through interior
    /// edges), labels numbered in order of first appearance.
    pub fn components(&self) -> Vec<usize> {
        let mut uf = UnionFind::new(self.len());
        for e in &self.edges {
            uf.union(e.tail, e.head);
        }
        let mut label = vec![usize::MAX; self.len()];
        let mut roots = Vec::new();
        for v in 0..self.len() {
            let r = uf.find(v);
            let pos = match roots.iter().position(|&x| x == r) {
                Some(p) => p,
                None => {
                    roots.push(r);
                    roots.len() - 1
                }
            };
            label[v] = pos;
        }
        label
    }

    pub fn num_components(&self) -> usize {
        self.components().iter().copied().max().map_or(0, |m| m + 1)
    }

    pub fn check_field(&self, u: &VertexField) -> Result<()> {
        if u.len() != self.len() {
            return Err(Error::FieldMismatch {
                expected: self.len(),
                got: u.len(),
            });
        }
        Ok(())
    }

    pub fn check_boundary_data(&self, f: &BoundaryData) -> Result<()> {
        if f.len() != self.boundary.len() {
            return Err(Error::FieldMismatch {
                expected: self.boundary.len(),
                got: f.len(),
            });
        }
        Ok(())
    }

    pub fn inner(&self, u: &VertexField, w: &VertexField) -> f64 {
        self.measures
            .iter()
            .zip(u.iter().zip(w.iter()))
            .map(|(m, (a, b))| m * a * b)
            .sum()
    }

    pub fn l1(&self, u: &VertexField) -> f64 {
        self.measures.iter().zip(u.iter()).map(|(m, a)| m * a.abs()).sum()
    }

    pub fn l2(&self, u: &VertexField) -> f64 {
        self.inner(u, u).sqrt()
    }

    pub fn linf(&self, u: &VertexField) -> f64 {
        u.iter().fold(0.0, |acc, a| acc.max(a.abs()))
    }

    /// L^q(ν) norm for q ∈ {1, 2, ∞}; other exponents use the general formula.
    pub fn lq(&self, u: &VertexField, q: f64) -> f64 {
        if q.is_infinite() {
            self.linf(u)
        } else if q == 1.0 {
            self.l1(u)
        } else if q == 2.0 {
            self.l2(u)
        } else {
            self.measures
                .iter()
                .zip(u.iter())
                .map(|(m, a)| m * a.abs().powf(q))
                .sum::<f64>()
                .powf(1.0 / q)
        }
    }

    pub fn mass(&self, u: &VertexField) -> f64 {
        self.measures.iter().zip(u.iter()).map(|(m, a)| m * a).sum()
    }

    /// ν-mean over the whole interior.
    pub fn mean(&self, u: &VertexField) -> f64 {
        self.mass(u) / self.total_measure()
    }

    /// Field equal on each component to the ν-mean of `u` over that component.
    pub fn component_means(&self, u: &VertexField) -> VertexField {
        let labels = self.components();
        let k = labels.iter().copied().max().map_or(0, |m| m + 1);
        let mut mass = vec![0.0; k];
        let mut meas = vec![0.0; k];
        for (v, &c) in labels.iter().enumerate() {
            mass[c] += self.measures[v] * u[v];
            meas[c] += self.measures[v];
        }
        labels.iter().map(|&c| mass[c] / meas[c]).collect()
    }

    pub fn constant(&self, c: f64) -> VertexField {
        VertexField::from(vec![c; self.len()])
    }

    pub fn zeros(&self) -> VertexField {
        self.constant(0.0)
    }
}

/// Interior trace: value at the interior end of every boundary element.
pub fn trace(domain: &Domain, u: &VertexField) -> Result<BoundaryData> {
    domain.check_field(u)?;
    Ok(domain.boundary().iter().map(|b| u[b.local]).collect())
}

/// Function on interior vertices, indexed by local position.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct VertexField(Vec<f64>);

impl VertexField {
    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn scaled(&self, c: f64) -> VertexField {
        self.iter().map(|a| c * a).collect()
    }

    pub fn sub(&self, other: &VertexField) -> VertexField {
        self.iter().zip(other.iter()).map(|(a, b)| a - b).collect()
    }

    pub fn add(&self, other: &VertexField) -> VertexField {
        self.iter().zip(other.iter()).map(|(a, b)| a + b).collect()
    }

    pub fn positive_part(&self) -> VertexField {
        self.iter().map(|a| a.max(0.0)).collect()
    }
}

impl From<Vec<f64>> for VertexField {
    fn from(v: Vec<f64>) -> Self {
        VertexField(v)
    }
}

impl FromIterator<f64> for VertexField {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        VertexField(iter.into_iter().collect())
    }
}

impl Deref for VertexField {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for VertexField {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

/// Values on boundary elements, in the domain's boundary order.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct BoundaryData(Vec<f64>);

impl BoundaryData {
    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn constant(domain: &Domain, c: f64) -> BoundaryData {
        BoundaryData(vec![c; domain.boundary().len()])
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&x| x == 0.0)
    }
}

impl From<Vec<f64>> for BoundaryData {
    fn from(v: Vec<f64>) -> Self {
        BoundaryData(v)
    }
}

impl FromIterator<f64> for BoundaryData {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        BoundaryData(iter.into_iter().collect())
    }
}

impl Deref for BoundaryData {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for BoundaryData {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

pub(crate) struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    pub(crate) fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    pub(crate) fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    pub(crate) fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g2() -> Arc<MetricMeasureGraph> {
        Arc::new(build_graph(&[1.0, 1.0], &[(0, 1, 1.0)]).unwrap())
    }

    #[test]
    fn two_point_space() {
        let g = g2();
        assert_eq!(g.num_vertices(), 2);
        assert_eq!(g.edges().len(), 1);
        let d = whole_space(g).unwrap();
        assert!(d.boundary().is_empty());
    }

    #[test]
    fn isolated_vertex_is_valid() {
        let g = build_graph(&[1.0], &[]).unwrap();
        assert_eq!(g.num_vertices(), 1);
    }

    #[test]
    fn validation_errors_name_the_entry() {
        assert!(matches!(
            build_graph(&[1.0, -1.0], &[(0, 1, 1.0)]),
            Err(Error::NonPositiveMeasure(1))
        ));
        assert!(matches!(
            build_graph(&[1.0, 1.0], &[(0, 1, 0.0)]),
            Err(Error::NonPositiveWeight(0, 1))
        ));
        assert!(matches!(
            build_graph(&[1.0, 1.0], &[(0, 1, 1.0), (1, 0, 2.0)]),
            Err(Error::DuplicateEdge(0, 1))
        ));
        assert!(matches!(
            build_graph(&[1.0, 1.0], &[(1, 1, 1.0)]),
            Err(Error::SelfLoop(1))
        ));
        assert!(matches!(
            build_graph(&[1.0], &[(0, 3, 1.0)]),
            Err(Error::VertexOutOfRange { index: 3, .. })
        ));
    }

    #[test]
    fn half_edge_boundary() {
        let d1 = make_domain(g2(), &[0]).unwrap();
        assert_eq!(d1.boundary().len(), 1);
        assert_eq!((d1.boundary()[0].vertex, d1.boundary()[0].exterior), (0, 1));
        assert_eq!(d1.perimeter(), 1.0);

        let p3 = Arc::new(build_graph(&[1.0; 3], &[(0, 1, 1.0), (1, 2, 1.0)]).unwrap());
        let d = make_domain(p3, &[1]).unwrap();
        let pairs: Vec<_> = d.boundary().iter().map(|b| (b.vertex, b.exterior)).collect();
        assert_eq!(pairs, vec![(1, 0), (1, 2)]);
        assert!(matches!(make_domain(g2(), &[]), Err(Error::EmptyInterior)));
    }

    #[test]
    fn edges_outside_interior_ignored() {
        let g = Arc::new(
            build_graph(&[1.0; 4], &[(0, 1, 1.0), (1, 2, 2.0), (2, 3, 3.0)]).unwrap(),
        );
        let d = make_domain(g, &[0]).unwrap();
        assert_eq!(d.edges().len(), 0);
        assert_eq!(d.boundary().len(), 1);
        assert_eq!(d.perimeter(), 1.0);
    }

    #[test]
    fn trace_copies_interior_value() {
        let d1 = make_domain(g2(), &[0]).unwrap();
        let t = trace(&d1, &VertexField::from(vec![5.0])).unwrap();
        assert_eq!(&*t, &[5.0]);

        let p3 = Arc::new(build_graph(&[1.0; 3], &[(0, 1, 1.0), (1, 2, 1.0)]).unwrap());
        let d = make_domain(p3, &[1]).unwrap();
        assert_eq!(&*trace(&d, &VertexField::from(vec![2.0])).unwrap(), &[2.0, 2.0]);

        let w = whole_space(g2()).unwrap();
        assert!(trace(&w, &VertexField::from(vec![1.0, 2.0])).unwrap().is_empty());
    }

    #[test]
    fn components_and_means() {
        let g = Arc::new(build_graph(&[1.0, 3.0, 1.0, 1.0], &[(0, 1, 1.0), (2, 3, 1.0)]).unwrap());
        let d = whole_space(g).unwrap();
        assert_eq!(d.components(), vec![0, 0, 1, 1]);
        let m = d.component_means(&VertexField::from(vec![4.0, 0.0, 1.0, 3.0]));
        assert_eq!(&*m, &[1.0, 1.0, 2.0, 2.0]);
    }
}
