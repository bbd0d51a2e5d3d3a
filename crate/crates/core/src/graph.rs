//! Immutable metric-graph model: validated edges with length, weight and an
//! edgewise-constant potential, plus boundary bookkeeping and geodesics.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap, VecDeque};

use crate::address::SigmaAddress;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// One edge of a metric graph, identified with the interval `[0, length]`
/// running from endpoint `a` to endpoint `b`.
#[derive(Debug, Clone, PartialEq)]
pub struct Edge<T> {
    pub a: usize,
    pub b: usize,
    pub length: T,
    pub weight: T,
    /// Constant potential `q = κ²` on the edge.
    pub kappa2: T,
}

impl<T: Scalar> Edge<T> {
    pub fn new(a: usize, b: usize, length: T) -> Self {
        Self { a, b, length, weight: T::one(), kappa2: T::zero() }
    }

    pub fn with_weight(mut self, weight: T) -> Self {
        self.weight = weight;
        self
    }

    pub fn with_kappa2(mut self, kappa2: T) -> Self {
        self.kappa2 = kappa2;
        self
    }

    /// The endpoint opposite `v`.
    pub fn other(&self, v: usize) -> usize {
        if v == self.a {
            self.b
        } else {
            self.a
        }
    }
}

/// Optional per-vertex annotations. Never part of a vertex's identity.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct VertexMeta {
    pub level: Option<usize>,
    pub address: Option<SigmaAddress>,
}

impl VertexMeta {
    pub fn is_empty(&self) -> bool {
        self.level.is_none() && self.address.is_none()
    }
}

/// A point on the graph: an edge plus an offset measured from the edge's `a` endpoint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GraphPoint<T> {
    pub edge: usize,
    pub offset: T,
}

impl<T> GraphPoint<T> {
    pub fn new(edge: usize, offset: T) -> Self {
        Self { edge, offset }
    }
}

/// Validated, immutable metric graph.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricGraph<T> {
    edges: Vec<Edge<T>>,
    /// `(edge id, neighbour)` per vertex, in edge-id order.
    adjacency: Vec<Vec<(usize, usize)>>,
    is_boundary: Vec<bool>,
    boundary: Vec<usize>,
    /// Vertices explicitly marked as relative boundary (sorted).
    relative: Vec<usize>,
    meta: Vec<VertexMeta>,
}

/// Incremental construction of a [`MetricGraph`].
#[derive(Debug, Clone)]
pub struct GraphBuilder<T> {
    vertex_count: usize,
    edges: Vec<Edge<T>>,
    relative: Vec<usize>,
    meta: HashMap<usize, VertexMeta>,
}

impl<T: Scalar> Default for GraphBuilder<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Scalar> GraphBuilder<T> {
    pub fn new() -> Self {
        Self { vertex_count: 0, edges: Vec::new(), relative: Vec::new(), meta: HashMap::new() }
    }

    /// Declares at least `n` vertices. Vertex count otherwise follows the largest id used.
    pub fn vertices(&mut self, n: usize) -> &mut Self {
        self.vertex_count = self.vertex_count.max(n);
        self
    }

    pub fn edge(&mut self, edge: Edge<T>) -> &mut Self {
        self.vertex_count = self.vertex_count.max(edge.a.max(edge.b) + 1);
        self.edges.push(edge);
        self
    }

    /// Marks `v` as boundary even if its degree exceeds one (truncation boundary).
    pub fn relative_boundary(&mut self, v: usize) -> &mut Self {
        self.relative.push(v);
        self
    }

    pub fn meta(&mut self, v: usize, meta: VertexMeta) -> &mut Self {
        self.meta.insert(v, meta);
        self
    }

    pub fn build(&self) -> Result<MetricGraph<T>> {
        if self.edges.is_empty() {
            return Err(Error::EmptyGraph);
        }
        for (i, e) in self.edges.iter().enumerate() {
            let f = |x: T| x.to_f64().unwrap_or(f64::NAN);
            if !(e.length > T::zero() && e.length.is_finite()) {
                return Err(Error::NonPositiveLength { edge: i, value: f(e.length) });
            }
            if !(e.weight > T::zero() && e.weight.is_finite()) {
                return Err(Error::NonPositiveWeight { edge: i, value: f(e.weight) });
            }
            if !(e.kappa2 >= T::zero() && e.kappa2.is_finite()) {
                return Err(Error::NegativePotential { edge: i, value: f(e.kappa2) });
            }
        }
        let mut n = self.vertex_count;
        for &v in &self.relative {
            if v >= n {
                return Err(Error::VertexOutOfRange { vertex: v, count: n });
            }
        }
        let edges = subdivide_multi_edges(self.edges.clone(), &mut n);

        let mut adjacency = vec![Vec::new(); n];
        for (i, e) in edges.iter().enumerate() {
            adjacency[e.a].push((i, e.b));
            adjacency[e.b].push((i, e.a));
        }
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        while let Some(v) = queue.pop_front() {
            for &(_, w) in &adjacency[v] {
                if !seen[w] {
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
        if let Some(v) = seen.iter().position(|s| !s) {
            return Err(Error::Disconnected { vertex: v });
        }

        let mut relative = self.relative.clone();
        relative.sort_unstable();
        relative.dedup();
        let mut is_boundary: Vec<bool> = adjacency.iter().map(|a| a.len() == 1).collect();
        for &v in &relative {
            is_boundary[v] = true;
        }
        let boundary = (0..n).filter(|&v| is_boundary[v]).collect();
        let mut meta = vec![VertexMeta::default(); n];
        for (&v, m) in &self.meta {
            if v >= n {
                return Err(Error::VertexOutOfRange { vertex: v, count: n });
            }
            meta[v] = m.clone();
        }
        Ok(MetricGraph { edges, adjacency, is_boundary, boundary, relative, meta })
    }
}

/// Replaces every loop and every member of a parallel class by two halves
/// joined at a new midpoint vertex, repeating until the graph is simple.
fn subdivide_multi_edges<T: Scalar>(mut edges: Vec<Edge<T>>, n: &mut usize) -> Vec<Edge<T>> {
    loop {
        let mut class: HashMap<(usize, usize), usize> = HashMap::new();
        for e in &edges {
            *class.entry((e.a.min(e.b), e.a.max(e.b))).or_default() += 1;
        }
        let bad = |e: &Edge<T>| e.a == e.b || class[&(e.a.min(e.b), e.a.max(e.b))] > 1;
        if !edges.iter().any(bad) {
            return edges;
        }
        let mut out = Vec::with_capacity(edges.len() + 4);
        for e in &edges {
            if bad(e) {
                let m = *n;
                *n += 1;
                let half = e.length * T::half();
                out.push(Edge { a: e.a, b: m, length: half, ..e.clone() });
                out.push(Edge { a: m, b: e.b, length: half, ..e.clone() });
            } else {
                out.push(e.clone());
            }
        }
        edges = out;
    }
}

/// Builds and validates a graph from edge descriptors and relative-boundary markers.
///
/// Degree-one vertices are always boundary; `boundary` may list them too.
pub fn build_graph<T: Scalar>(edges: &[Edge<T>], boundary: &[usize]) -> Result<MetricGraph<T>> {
    let mut b = GraphBuilder::new();
    for e in edges {
        b.edge(e.clone());
    }
    for &v in boundary {
        b.relative_boundary(v);
    }
    b.build()
}

impl<T: Scalar> MetricGraph<T> {
    pub fn vertex_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge<T>] {
        &self.edges
    }

    pub fn edge(&self, id: usize) -> &Edge<T> {
        &self.edges[id]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adjacency[v].len()
    }

    /// `(edge id, neighbour)` pairs incident to `v`.
    pub fn incident(&self, v: usize) -> &[(usize, usize)] {
        &self.adjacency[v]
    }

    pub fn is_boundary(&self, v: usize) -> bool {
        self.is_boundary[v]
    }

    /// Boundary vertices in increasing id order.
    pub fn boundary(&self) -> &[usize] {
        &self.boundary
    }

    /// Vertices that were explicitly marked boundary.
    pub fn relative_markers(&self) -> &[usize] {
        &self.relative
    }

    pub fn interior(&self) -> Vec<usize> {
        (0..self.vertex_count()).filter(|&v| !self.is_boundary[v]).collect()
    }

    pub fn meta(&self, v: usize) -> &VertexMeta {
        &self.meta[v]
    }

    pub fn has_zero_potential(&self) -> bool {
        self.edges.iter().all(|e| e.kappa2 == T::zero())
    }

    /// Returns the same graph with every edge potential replaced.
    pub fn with_potential(&self, f: impl Fn(usize, &Edge<T>) -> T) -> Result<Self> {
        let mut g = self.clone();
        for (i, e) in g.edges.iter_mut().enumerate() {
            let k = f(i, &self.edges[i]);
            if !(k >= T::zero() && k.is_finite()) {
                return Err(Error::NegativePotential { edge: i, value: k.to_f64().unwrap_or(f64::NAN) });
            }
            e.kappa2 = k;
        }
        Ok(g)
    }

    pub fn check_point(&self, p: GraphPoint<T>) -> Result<()> {
        let e = self
            .edges
            .get(p.edge)
            .ok_or(Error::EdgeOutOfRange { edge: p.edge, count: self.edges.len() })?;
        if !(p.offset >= T::zero() && p.offset <= e.length) {
            return Err(Error::InvalidOffset {
                edge: p.edge,
                offset: p.offset.to_f64().unwrap_or(f64::NAN),
                length: e.length.to_f64().unwrap_or(f64::NAN),
            });
        }
        Ok(())
    }

    /// A point located at vertex `v` (on its first incident edge).
    pub fn vertex_point(&self, v: usize) -> GraphPoint<T> {
        let (eid, _) = self.adjacency[v][0];
        let e = &self.edges[eid];
        GraphPoint::new(eid, if e.a == v { T::zero() } else { e.length })
    }

    /// Single-source shortest path lengths to every vertex, with several
    /// seeded sources `(vertex, initial distance)`.
    pub fn vertex_distances(&self, sources: &[(usize, T)]) -> Vec<T> {
        let n = self.vertex_count();
        let mut dist = vec![T::infinity(); n];
        let mut heap = BinaryHeap::new();
        for &(v, d) in sources {
            if d < dist[v] {
                dist[v] = d;
                heap.push(HeapItem(d, v));
            }
        }
        while let Some(HeapItem(d, v)) = heap.pop() {
            if d > dist[v] {
                continue;
            }
            for &(eid, w) in &self.adjacency[v] {
                let nd = d + self.edges[eid].length;
                if nd < dist[w] {
                    dist[w] = nd;
                    heap.push(HeapItem(nd, w));
                }
            }
        }
        dist
    }

    fn point_sources(&self, p: GraphPoint<T>) -> [(usize, T); 2] {
        let e = &self.edges[p.edge];
        [(e.a, p.offset), (e.b, e.length - p.offset)]
    }
}

/// Min-heap entry for Dijkstra.
struct HeapItem<T>(T, usize);

impl<T: PartialOrd> PartialEq for HeapItem<T> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl<T: PartialOrd> Eq for HeapItem<T> {}
impl<T: PartialOrd> PartialOrd for HeapItem<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<T: PartialOrd> Ord for HeapItem<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.partial_cmp(&self.0).unwrap_or(Ordering::Equal).then(other.1.cmp(&self.1))
    }
}

/// Length of the shortest path between two points of the graph.
pub fn geodesic_distance<T: Scalar>(g: &MetricGraph<T>, x: GraphPoint<T>, y: GraphPoint<T>) -> Result<T> {
    g.check_point(x)?;
    g.check_point(y)?;
    let dist = g.vertex_distances(&g.point_sources(x));
    let ey = g.edge(y.edge);
    let mut d = (dist[ey.a] + y.offset).min(dist[ey.b] + (ey.length - y.offset));
    if x.edge == y.edge {
        d = d.min((x.offset - y.offset).abs());
    }
    Ok(d)
}

/// Summary quantities of a metric graph.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphReport<T> {
    pub connected: bool,
    /// `Σ_e ω_e`.
    pub total_weight: T,
    /// `Σ_e l_e`.
    pub total_volume: T,
    /// Upper bound on the diameter: twice the eccentricity of vertex 0 plus the longest edge.
    pub diameter_bound: T,
    /// `Σ_e (κ²_e / ω_e)² ω_e l_e`.
    pub qbnd: T,
    pub boundary_count: usize,
    pub vertex_count: usize,
    pub edge_count: usize,
}

pub fn graph_report<T: Scalar>(g: &MetricGraph<T>) -> GraphReport<T> {
    let dist = g.vertex_distances(&[(0, T::zero())]);
    let connected = dist.iter().all(|d| d.is_finite());
    let ecc = dist.iter().fold(T::zero(), |m, &d| m.max(d));
    let max_len = g.edges().iter().fold(T::zero(), |m, e| m.max(e.length));
    GraphReport {
        connected,
        total_weight: g.edges().iter().map(|e| e.weight).sum(),
        total_volume: g.edges().iter().map(|e| e.length).sum(),
        diameter_bound: T::two() * ecc + max_len,
        qbnd: g
            .edges()
            .iter()
            .map(|e| {
                let r = e.kappa2 / e.weight;
                r * r * e.weight * e.length
            })
            .sum(),
        boundary_count: g.boundary().len(),
        vertex_count: g.vertex_count(),
        edge_count: g.edge_count(),
    }
}
