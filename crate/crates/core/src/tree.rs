//! Truncated α–β trees, their piecewise-linear harmonic functions, shortcut
//! decorations, and cylinder bookkeeping on the truncation boundary.
//!
//! Vertex numbering is heap order: `v₀ = 0`, `v₁ = 1`, and the children of
//! vertex `i ≥ 1` are `2i` (α-child) and `2i + 1` (β-child). A vertex at
//! level `k ≥ 1` therefore has id `2^{k−1} + (address read as binary, a = 0)`.
//! The edge ending at vertex `i ≥ 1` has id `i − 1` and runs parent → child.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::address::{Branch, SigmaAddress};
use crate::error::{Error, Result};
use crate::graph::{Edge, GraphBuilder, MetricGraph, VertexMeta};
use crate::scalar::Scalar;

/// Largest depth the generator accepts (2^depth vertices).
pub const MAX_DEPTH: usize = 24;
/// Smallest edge length the generator will produce.
pub const MIN_EDGE_LENGTH: f64 = 1e-300;

/// Parameters of an α–β tree family; `depth` selects the truncation.
#[derive(Debug, Clone, PartialEq)]
pub struct AlphaBetaSpec<T> {
    pub alpha: T,
    pub root_length: T,
    pub depth: usize,
    /// Edge weights follow `ω_e = r^{level}`.
    pub weight_ratio: T,
    /// `κ²` for edges at level 1, 2, …; missing levels carry no potential.
    pub kappa2_per_level: Vec<T>,
}

impl<T: Scalar> AlphaBetaSpec<T> {
    pub fn new(alpha: T, depth: usize) -> Self {
        Self {
            alpha,
            root_length: T::one(),
            depth,
            weight_ratio: T::one() / T::lit(3.0),
            kappa2_per_level: Vec::new(),
        }
    }

    pub fn with_depth(&self, depth: usize) -> Self {
        Self { depth, ..self.clone() }
    }

    pub fn beta(&self) -> T {
        T::one() - self.alpha
    }

    pub fn scale(&self, b: Branch) -> T {
        match b {
            Branch::Alpha => self.alpha,
            Branch::Beta => self.beta(),
        }
    }

    /// `κ²` of edges whose lower endpoint sits at `level`.
    pub fn kappa2_at(&self, level: usize) -> T {
        level.checked_sub(1).and_then(|k| self.kappa2_per_level.get(k).copied()).unwrap_or(T::zero())
    }

    pub fn has_zero_potential(&self) -> bool {
        self.kappa2_per_level.iter().all(|&k| k == T::zero())
    }

    pub fn validate(&self) -> Result<()> {
        let f = |x: T| x.to_f64().unwrap_or(f64::NAN);
        if !(self.alpha > T::zero() && self.alpha < T::one()) {
            return Err(Error::AlphaOutOfRange(f(self.alpha)));
        }
        if !(self.root_length > T::zero() && self.root_length.is_finite()) {
            return Err(Error::InvalidSpec(format!("root length must be positive, got {}", self.root_length)));
        }
        if self.depth == 0 {
            return Err(Error::InvalidSpec("depth must be at least 1".into()));
        }
        if !(self.weight_ratio > T::zero() && self.weight_ratio <= T::half()) {
            return Err(Error::InvalidSpec(format!("weight ratio must lie in (0, 1/2], got {}", self.weight_ratio)));
        }
        if let Some(k) = self.kappa2_per_level.iter().find(|k| !(**k >= T::zero() && k.is_finite())) {
            return Err(Error::InvalidSpec(format!("kappa^2 per level must be nonnegative, got {k}")));
        }
        let shortest = f(self.root_length) * f(self.alpha.min(self.beta())).powi(self.depth as i32 - 1);
        if shortest < MIN_EDGE_LENGTH || T::lit(shortest) < T::min_positive_value() {
            return Err(Error::DepthUnderflow { depth: self.depth, min_length: shortest });
        }
        if self.depth > MAX_DEPTH {
            return Err(Error::InvalidSpec(format!("depth {} exceeds the supported maximum {MAX_DEPTH}", self.depth)));
        }
        Ok(())
    }
}

/// A truncated α–β tree together with its addressing.
#[derive(Debug, Clone)]
pub struct AbTree<T> {
    spec: AlphaBetaSpec<T>,
    graph: MetricGraph<T>,
}

pub const ROOT: usize = 0;
pub const FIRST: usize = 1;

impl<T: Scalar> AbTree<T> {
    pub fn spec(&self) -> &AlphaBetaSpec<T> {
        &self.spec
    }

    pub fn graph(&self) -> &MetricGraph<T> {
        &self.graph
    }

    pub fn into_graph(self) -> MetricGraph<T> {
        self.graph
    }

    pub fn depth(&self) -> usize {
        self.spec.depth
    }

    /// Length of leaf addresses: `depth − 1`.
    pub fn leaf_address_len(&self) -> usize {
        self.spec.depth - 1
    }

    /// Vertex reached from `v₁` by `address`.
    pub fn vertex(&self, address: &SigmaAddress) -> Option<usize> {
        if address.len() >= self.spec.depth {
            return None;
        }
        Some(address_to_id(address))
    }

    pub fn address(&self, v: usize) -> Option<SigmaAddress> {
        self.graph.meta(v).address.clone()
    }

    pub fn level(&self, v: usize) -> usize {
        if v == ROOT {
            0
        } else {
            (usize::BITS - v.leading_zeros()) as usize
        }
    }

    /// Depth-`depth` leaves in lexicographic address order.
    pub fn leaves(&self) -> std::ops::Range<usize> {
        let first = 1usize << (self.spec.depth - 1);
        first..2 * first
    }
}

fn address_to_id(a: &SigmaAddress) -> usize {
    a.branches().iter().fold(1usize, |id, b| 2 * id + usize::from(*b == Branch::Beta))
}

fn id_to_address(mut id: usize) -> SigmaAddress {
    let mut bs = Vec::new();
    while id > 1 {
        bs.push(if id % 2 == 0 { Branch::Alpha } else { Branch::Beta });
        id /= 2;
    }
    bs.reverse();
    SigmaAddress::from_branches(bs)
}

/// Generates the depth-`spec.depth` truncation: `v₀`, `v₁`, and every vertex
/// with an address of length `< depth`. `v₀` and the deepest level form the boundary.
pub fn generate_ab_tree<T: Scalar>(spec: &AlphaBetaSpec<T>) -> Result<AbTree<T>> {
    spec.validate()?;
    let n = 1usize << spec.depth;
    let mut lengths = vec![T::zero(); n];
    let mut b = GraphBuilder::new();
    b.vertices(n);
    b.meta(ROOT, VertexMeta { level: Some(0), address: None });
    for v in 1..n {
        let level = (usize::BITS - v.leading_zeros()) as usize;
        let (parent, length) = if v == FIRST {
            (ROOT, spec.root_length)
        } else {
            let branch = if v % 2 == 0 { Branch::Alpha } else { Branch::Beta };
            (v / 2, lengths[v / 2] * spec.scale(branch))
        };
        lengths[v] = length;
        b.edge(
            Edge::new(parent, v, length)
                .with_weight(spec.weight_ratio.powi(level as i32))
                .with_kappa2(spec.kappa2_at(level)),
        );
        b.meta(v, VertexMeta { level: Some(level), address: Some(id_to_address(v)) });
    }
    b.relative_boundary(ROOT);
    for leaf in n / 2..n {
        b.relative_boundary(leaf);
    }
    let graph = b.build()?;
    Ok(AbTree { spec: spec.clone(), graph })
}

/// Leaves of the truncation whose address extends `prefix` (the set `B_n`
/// for the cylinder of `prefix`).
pub fn cylinder_leaves<T: Scalar>(tree: &AbTree<T>, prefix: &SigmaAddress) -> Result<Vec<usize>> {
    let max = tree.leaf_address_len();
    if prefix.len() > max {
        return Err(Error::PrefixTooLong { len: prefix.len(), max });
    }
    let shift = max - prefix.len();
    let base = address_to_id(prefix) << shift;
    Ok((base..base + (1usize << shift)).collect())
}

/// The piecewise-linear harmonic function of the α–β tree that equals
/// `c x + d` on the root edge (`x` measured from `v₀`).
///
/// Slopes are stored parent → child: the α-child edge carries `β·s` and the
/// β-child edge `α·s` when the parent edge carries `s`.
#[derive(Debug, Clone, PartialEq)]
pub struct HarmonicClosedForm<T> {
    pub c: T,
    pub d: T,
    pub values: Vec<T>,
    /// Descending slope per edge id.
    pub slopes: Vec<T>,
}

impl<T: Scalar> HarmonicClosedForm<T> {
    pub fn value(&self, v: usize) -> T {
        self.values[v]
    }

    /// Derivative on the edge ending at `v`, taken in the coordinate pointing
    /// away from the parent vertex (into the edge).
    pub fn outward_from_parent(&self, v: usize) -> T {
        self.slopes[v - 1]
    }

    /// Derivative on the edge ending at `v`, taken in the coordinate pointing
    /// away from `v` toward its parent.
    pub fn outward_from_child(&self, v: usize) -> T {
        -self.slopes[v - 1]
    }
}

/// Closed-form harmonic function on the truncation described by `spec`.
pub fn closed_form_harmonic<T: Scalar>(spec: &AlphaBetaSpec<T>, c: T, d: T) -> Result<HarmonicClosedForm<T>> {
    spec.validate()?;
    if !spec.has_zero_potential() {
        return Err(Error::InvalidSpec("the linear closed form needs a zero potential".into()));
    }
    let n = 1usize << spec.depth;
    let mut values = vec![T::zero(); n];
    let mut slopes = vec![T::zero(); n - 1];
    let mut lengths = vec![T::zero(); n];
    values[ROOT] = d;
    for v in 1..n {
        let (parent, length, slope) = if v == FIRST {
            (ROOT, spec.root_length, c)
        } else {
            let p = v / 2;
            let branch = if v % 2 == 0 { Branch::Alpha } else { Branch::Beta };
            (p, lengths[p] * spec.scale(branch), slopes[p - 1] * spec.scale(branch.sibling()))
        };
        lengths[v] = length;
        slopes[v - 1] = slope;
        values[v] = values[parent] + slope * length;
    }
    Ok(HarmonicClosedForm { c, d, values, slopes })
}

/// `c · ∏ αβ/σ_n` along `address`: the descending slope on the edge that
/// ends at the vertex with that address, from the product formula.
pub fn product_formula_slope<T: Scalar>(alpha: T, c: T, address: &SigmaAddress) -> T {
    let beta = T::one() - alpha;
    address
        .branches()
        .iter()
        .map(|b| alpha * beta / if *b == Branch::Alpha { alpha } else { beta })
        .fold(c, |acc, f| acc * f)
}

/// Outcome of the sampled distance-comparability check for a decorated tree.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparabilityReport<T> {
    /// Shortcut lengths are nonincreasing in the given order.
    pub lengths_nonincreasing: bool,
    /// Last length over first length (1 for fewer than two shortcuts).
    pub length_decay: T,
    /// `max d_T / d_G` over sampled vertex pairs.
    pub ratio: T,
    /// `d_G ≤ d_T` held on every sampled pair.
    pub shortcut_metric_dominated: bool,
    pub sampled_pairs: usize,
}

/// Number of Dijkstra sources used when the graph is too large to use them all.
pub const COMPARABILITY_SOURCES: usize = 32;

/// Adds shortcut edges `(u, v, length)` and compares the decorated geodesic
/// metric `d_G` with the tree metric `d_T` on sampled vertex pairs.
pub fn add_shortcut_edges<T: Scalar>(
    tree: &MetricGraph<T>,
    shortcuts: &[(usize, usize, T)],
    seed: u64,
) -> Result<(MetricGraph<T>, ComparabilityReport<T>)> {
    let mut b = GraphBuilder::new();
    b.vertices(tree.vertex_count());
    for e in tree.edges() {
        b.edge(e.clone());
    }
    for &(u, v, l) in shortcuts {
        for w in [u, v] {
            if w >= tree.vertex_count() {
                return Err(Error::VertexOutOfRange { vertex: w, count: tree.vertex_count() });
            }
        }
        b.edge(Edge::new(u, v, l));
    }
    for &v in tree.relative_markers() {
        b.relative_boundary(v);
    }
    for v in 0..tree.vertex_count() {
        if !tree.meta(v).is_empty() {
            b.meta(v, tree.meta(v).clone());
        }
    }
    let decorated = b.build()?;

    let lengths: Vec<T> = shortcuts.iter().map(|s| s.2).collect();
    let lengths_nonincreasing = lengths.windows(2).all(|w| w[1] <= w[0]);
    let length_decay = match (lengths.first(), lengths.last()) {
        (Some(&a), Some(&z)) if lengths.len() > 1 => z / a,
        _ => T::one(),
    };

    let n = tree.vertex_count();
    let mut sources: Vec<usize> = (0..n).collect();
    if n > COMPARABILITY_SOURCES {
        sources.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        sources.truncate(COMPARABILITY_SOURCES);
        sources.sort_unstable();
    }
    let mut ratio = T::one();
    let mut dominated = true;
    let mut pairs = 0;
    let tol = T::lit(1e-12);
    for &s in &sources {
        let dt = tree.vertex_distances(&[(s, T::zero())]);
        let dg = decorated.vertex_distances(&[(s, T::zero())]);
        for w in 0..n {
            if w == s {
                continue;
            }
            pairs += 1;
            ratio = ratio.max(dt[w] / dg[w]);
            if dg[w] > dt[w] * (T::one() + tol) {
                dominated = false;
            }
        }
    }
    Ok((
        decorated,
        ComparabilityReport {
            lengths_nonincreasing,
            length_decay,
            ratio,
            shortcut_metric_dominated: dominated,
            sampled_pairs: pairs,
        },
    ))
}

/// Shortcuts joining the two children of every vertex down to `depth − 1`,
/// with length `scale^k` for the pair at level `k`, listed level by level.
pub fn sibling_shortcuts<T: Scalar>(depth: usize, scale: T) -> Vec<(usize, usize, T)> {
    let mut out = Vec::new();
    for level in 2..=depth {
        let first = 1usize << (level - 1);
        for left in (first..2 * first).step_by(2) {
            out.push((left, left + 1, scale.powi(level as i32)));
        }
    }
    out
}
