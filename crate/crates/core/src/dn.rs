//! Finite-graph Dirichlet problems and Dirichlet-to-Neumann matrices.
//!
//! The vertex system is the sum of the edge blocks scattered to endpoint
//! indices. A row of `A u` at a vertex is the sum of outward edge-end
//! derivatives there, so interior rows set to zero are exactly the Kirchhoff
//! conditions and boundary rows are the Neumann data. Dirichlet problems are
//! solved on the interior block (the Schur complement route); boundary
//! derivatives are read back from the closed-form edge solutions.

use rayon::prelude::*;

use crate::dense;
use crate::edge::{edge_dn_block, edge_energy, solve_edge, EdgeSolution};
use crate::error::{Error, Result};
use crate::graph::{GraphPoint, MetricGraph};
use crate::scalar::{max_abs, Scalar};
use crate::sparse::{EigenEstimate, LdlFactor, SparseSymmetric};

/// Vertex stiffness matrix `Σ_e P_eᵀ H_e P_e` over all vertices.
pub fn assemble<T: Scalar>(g: &MetricGraph<T>) -> SparseSymmetric<T> {
    let mut a = SparseSymmetric::zeros(g.vertex_count());
    for e in g.edges() {
        let h = edge_dn_block(e.length, e.kappa2).expect("validated edge");
        a.add(e.a, e.a, h.aa);
        a.add(e.b, e.b, h.bb);
        a.add(e.a, e.b, h.ab);
    }
    a
}

/// Factored interior block of a graph, reusable across many boundary data.
///
/// Immutable after construction; `solve` may be called from several threads.
#[derive(Debug, Clone)]
pub struct DirichletSolver<'g, T> {
    graph: &'g MetricGraph<T>,
    system: SparseSymmetric<T>,
    interior: Vec<usize>,
    /// Position of each vertex in `interior`, or `usize::MAX` on the boundary.
    local: Vec<usize>,
    factor: Option<LdlFactor<T>>,
}

impl<'g, T: Scalar> DirichletSolver<'g, T> {
    pub fn new(graph: &'g MetricGraph<T>) -> Result<Self> {
        check_interior_components(graph)?;
        let system = assemble(graph);
        let interior = graph.interior();
        let mut local = vec![usize::MAX; graph.vertex_count()];
        for (k, &v) in interior.iter().enumerate() {
            local[v] = k;
        }
        let factor = if interior.is_empty() {
            None
        } else {
            Some(
                LdlFactor::new(system.principal(&interior)).map_err(|e| match e {
                    Error::SingularInterior { vertex } => Error::SingularInterior { vertex: interior[vertex] },
                    other => other,
                })?,
            )
        };
        Ok(Self { graph, system, interior, local, factor })
    }

    pub fn graph(&self) -> &'g MetricGraph<T> {
        self.graph
    }

    pub fn system(&self) -> &SparseSymmetric<T> {
        &self.system
    }

    pub fn interior(&self) -> &[usize] {
        &self.interior
    }

    pub fn factor(&self) -> Option<&LdlFactor<T>> {
        self.factor.as_ref()
    }

    /// Condition estimate of the equilibrated interior block (1 when there is none).
    pub fn condition_estimate(&self) -> T {
        self.factor.as_ref().map_or(T::one(), |f| f.condition_estimate())
    }

    /// Vertex values of the q-harmonic extension of `boundary_values`
    /// (ordered as `graph.boundary()`).
    pub fn solve_values(&self, boundary_values: &[T]) -> Result<Vec<T>> {
        let g = self.graph;
        if boundary_values.len() != g.boundary().len() {
            return Err(Error::BoundaryLength { expected: g.boundary().len(), got: boundary_values.len() });
        }
        let mut values = vec![T::zero(); g.vertex_count()];
        for (&v, &u) in g.boundary().iter().zip(boundary_values) {
            values[v] = u;
        }
        if let Some(f) = &self.factor {
            // A_II u_I = −A_IB U
            let rhs: Vec<T> = self
                .interior
                .iter()
                .map(|&i| {
                    -self
                        .system
                        .row(i)
                        .filter(|&(j, _)| self.local[j] == usize::MAX)
                        .map(|(j, a)| a * values[j])
                        .sum::<T>()
                })
                .collect();
            for (&i, x) in self.interior.iter().zip(f.solve(&rhs)) {
                values[i] = x;
            }
        }
        Ok(values)
    }

    pub fn solve(&self, boundary_values: &[T]) -> Result<QHarmonicFunction<'g, T>> {
        let values = self.solve_values(boundary_values)?;
        Ok(QHarmonicFunction::from_vertex_values(self.graph, values))
    }
}

/// Every connected piece of the interior needs boundary contact or some potential.
fn check_interior_components<T: Scalar>(g: &MetricGraph<T>) -> Result<()> {
    let n = g.vertex_count();
    let mut seen = vec![false; n];
    for start in 0..n {
        if seen[start] || g.is_boundary(start) {
            continue;
        }
        let mut stack = vec![start];
        seen[start] = true;
        let mut anchored = false;
        while let Some(v) = stack.pop() {
            for &(eid, w) in g.incident(v) {
                if g.edge(eid).kappa2 > T::zero() {
                    anchored = true;
                }
                if g.is_boundary(w) {
                    anchored = true;
                } else if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        if !anchored {
            return Err(Error::SingularInterior { vertex: start });
        }
    }
    Ok(())
}

/// Solves the Dirichlet problem with data `boundary_values` on `g.boundary()`.
pub fn solve_dirichlet<'g, T: Scalar>(
    g: &'g MetricGraph<T>,
    boundary_values: &[T],
) -> Result<QHarmonicFunction<'g, T>> {
    DirichletSolver::new(g)?.solve(boundary_values)
}

/// A q-harmonic function on a finite graph: vertex values plus the closed-form
/// solution on every edge.
#[derive(Debug, Clone)]
pub struct QHarmonicFunction<'g, T> {
    graph: &'g MetricGraph<T>,
    values: Vec<T>,
    edges: Vec<EdgeSolution<T>>,
    energy: T,
    /// `∂_ν u(v)` for `v` in `graph.boundary()` order.
    boundary_derivatives: Vec<T>,
}

impl<'g, T: Scalar> QHarmonicFunction<'g, T> {
    /// Builds the edgewise solutions through given vertex values.
    pub fn from_vertex_values(graph: &'g MetricGraph<T>, values: Vec<T>) -> Self {
        let edges: Vec<EdgeSolution<T>> = graph
            .edges()
            .iter()
            .map(|e| solve_edge(e.length, e.kappa2, values[e.a], values[e.b]).expect("validated edge"))
            .collect();
        let energy = edges.iter().map(edge_energy).sum();
        let mut flux = vec![T::zero(); graph.vertex_count()];
        for (e, s) in graph.edges().iter().zip(&edges) {
            let (da, db) = s.outward_derivatives();
            flux[e.a] = flux[e.a] + da;
            flux[e.b] = flux[e.b] + db;
        }
        let boundary_derivatives = graph.boundary().iter().map(|&v| flux[v]).collect();
        Self { graph, values, edges, energy, boundary_derivatives }
    }

    pub fn graph(&self) -> &'g MetricGraph<T> {
        self.graph
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn edge_solutions(&self) -> &[EdgeSolution<T>] {
        &self.edges
    }

    /// `Q(u, u) = Σ_e ∫_e (u′)² + q u²`.
    pub fn energy(&self) -> T {
        self.energy
    }

    pub fn boundary_derivatives(&self) -> &[T] {
        &self.boundary_derivatives
    }

    pub fn boundary_values(&self) -> Vec<T> {
        self.graph.boundary().iter().map(|&v| self.values[v]).collect()
    }

    pub fn value_at(&self, p: GraphPoint<T>) -> Result<T> {
        self.graph.check_point(p)?;
        Ok(self.edges[p.edge].value(p.offset))
    }

    /// Sum of outward edge-end derivatives at every vertex, with a local
    /// scale `(vertex, sum, scale)`. The scale adds up the magnitudes of the
    /// block terms `|H_aa u_A| + |H_ab u_B|` making up each derivative, so it
    /// stays meaningful where the derivatives themselves nearly vanish.
    pub fn vertex_fluxes(&self) -> Vec<(usize, T, T)> {
        let n = self.graph.vertex_count();
        let mut sum = vec![T::zero(); n];
        let mut scale = vec![T::zero(); n];
        for (e, s) in self.graph.edges().iter().zip(&self.edges) {
            let (da, db) = s.outward_derivatives();
            sum[e.a] = sum[e.a] + da;
            sum[e.b] = sum[e.b] + db;
            let (ta, tb) = match edge_dn_block(e.length, e.kappa2) {
                Ok(h) => (
                    (h.aa * s.ua).abs() + (h.ab * s.ub).abs(),
                    (h.ba * s.ua).abs() + (h.bb * s.ub).abs(),
                ),
                Err(_) => (da.abs(), db.abs()),
            };
            scale[e.a] = scale[e.a] + ta;
            scale[e.b] = scale[e.b] + tb;
        }
        (0..n).map(|v| (v, sum[v], scale[v])).collect()
    }

    /// Largest relative Kirchhoff defect over interior vertices.
    pub fn kirchhoff_residual(&self) -> T {
        let global = max_abs(&self.values).max(T::min_positive_value());
        self.vertex_fluxes()
            .into_iter()
            .filter(|&(v, _, _)| !self.graph.is_boundary(v))
            .map(|(_, s, sc)| s.abs() / sc.max(global * T::epsilon()))
            .fold(T::zero(), T::max)
    }

    /// Largest mismatch between edge-end evaluations and vertex values,
    /// relative to `max |u|`.
    pub fn continuity_residual(&self) -> T {
        let scale = max_abs(&self.values).max(T::min_positive_value());
        self.graph
            .edges()
            .iter()
            .zip(&self.edges)
            .map(|(e, s)| {
                (s.value(T::zero()) - self.values[e.a]).abs().max((s.value(e.length) - self.values[e.b]).abs())
            })
            .fold(T::zero(), T::max)
            / scale
    }
}

/// Dense, symmetric Dirichlet-to-Neumann matrix on the boundary vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct DnMatrix<T> {
    pub boundary: Vec<usize>,
    /// Row-major `n × n`.
    pub data: Vec<T>,
}

impl<T: Scalar> DnMatrix<T> {
    pub fn dim(&self) -> usize {
        self.boundary.len()
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.dim() + j]
    }

    pub fn rows(&self) -> Vec<Vec<T>> {
        self.data.chunks(self.dim().max(1)).map(|r| r.to_vec()).collect()
    }

    pub fn max_abs(&self) -> T {
        max_abs(&self.data)
    }

    pub fn apply(&self, x: &[T]) -> Vec<T> {
        self.data.chunks(self.dim()).map(|r| r.iter().zip(x).map(|(&a, &b)| a * b).sum()).collect()
    }

    pub fn quadratic_form(&self, x: &[T]) -> T {
        self.apply(x).iter().zip(x).map(|(&a, &b)| a * b).sum()
    }

    pub fn symmetry_residual(&self) -> T {
        let n = self.dim();
        let mut m = T::zero();
        for i in 0..n {
            for j in i + 1..n {
                m = m.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        m
    }

    /// `‖Λ·1‖_∞`.
    pub fn constant_residual(&self) -> T {
        max_abs(&self.apply(&vec![T::one(); self.dim()]))
    }

    pub fn eigenvalues(&self) -> Vec<T> {
        dense::symmetric_eigenvalues(self.rows())
    }
}

/// The Dirichlet-to-Neumann matrix; column `j` holds the boundary derivatives
/// of the solution with indicator data at boundary vertex `j`.
pub fn dn_matrix<T: Scalar>(g: &MetricGraph<T>) -> Result<DnMatrix<T>> {
    let n = g.boundary().len();
    if n == 0 {
        return Err(Error::NoBoundary);
    }
    let solver = DirichletSolver::new(g)?;
    let columns: Vec<Vec<T>> = (0..n)
        .into_par_iter()
        .map(|j| {
            let mut data = vec![T::zero(); n];
            data[j] = T::one();
            solver.solve(&data).map(|u| u.boundary_derivatives().to_vec())
        })
        .collect::<Result<_>>()?;
    let mut data = vec![T::zero(); n * n];
    for (j, col) in columns.iter().enumerate() {
        for (i, &v) in col.iter().enumerate() {
            data[i * n + j] = v;
        }
    }
    Ok(DnMatrix { boundary: g.boundary().to_vec(), data })
}

/// Both sides of an identity plus their absolute and relative disagreement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentityCheck<T> {
    pub lhs: T,
    pub rhs: T,
    pub residual: T,
    /// `residual / scale`, zero when the scale vanishes.
    pub relative: T,
}

impl<T: Scalar> IdentityCheck<T> {
    fn new(lhs: T, rhs: T, scale: T) -> Self {
        let residual = (lhs - rhs).abs();
        let relative = if scale > T::zero() { residual / scale } else { residual };
        Self { lhs, rhs, residual, relative }
    }
}

/// Largest diagonal entry of any edge block: the stiffness scale against
/// which rounding in DN entries and flux sums is measured.
pub fn stiffness_scale<T: Scalar>(g: &MetricGraph<T>) -> T {
    g.edges()
        .iter()
        .filter_map(|e| edge_dn_block(e.length, e.kappa2).ok())
        .fold(T::zero(), |m, b| m.max(b.aa.abs()).max(b.bb.abs()))
}

/// Per-edge magnitudes `(Σ_e ‖H_e‖(|u_A| + |u_B|), Σ_e ‖H_e‖(u_A² + u_B²))`,
/// bounding the terms that cancel in flux sums and energies.
fn edge_term_scales<T: Scalar>(u: &QHarmonicFunction<'_, T>) -> (T, T) {
    u.graph().edges().iter().fold((T::zero(), T::zero()), |(f, q), e| {
        let h = edge_dn_block(e.length, e.kappa2).map(|b| b.aa.abs() + b.ab.abs()).unwrap_or(T::zero());
        let (a, b) = (u.values()[e.a], u.values()[e.b]);
        (f + h * (a.abs() + b.abs()), q + h * (a * a + b * b))
    })
}

/// Conservation of current: `Σ_{∂G} ∂_ν u = ∫ u q`.
///
/// `lhs` is the boundary flux sum, `rhs` the closed-form potential integral.
/// The relative residual is taken against the per-edge flux magnitudes
/// `Σ_e ‖H_e‖(|u_A| + |u_B|)`, which never vanish for nonzero data.
pub fn current_balance<T: Scalar>(u: &QHarmonicFunction<'_, T>) -> IdentityCheck<T> {
    let flux: T = u.boundary_derivatives().iter().copied().sum();
    let integral: T = u.edge_solutions().iter().map(|s| s.potential_integral()).sum();
    IdentityCheck::new(flux, integral, edge_term_scales(u).0)
}

/// `⟨ΛU, U⟩` (boundary data against boundary derivatives) versus the
/// edgewise energy `Q(u, u)`, relative to `Σ_e ‖H_e‖(u_A² + u_B²)`.
pub fn energy_identity<T: Scalar>(u: &QHarmonicFunction<'_, T>) -> IdentityCheck<T> {
    let form: T = u.boundary_values().iter().zip(u.boundary_derivatives()).map(|(&a, &b)| a * b).sum();
    let energy = u.energy();
    IdentityCheck::new(form, energy, edge_term_scales(u).1)
}

/// Where a maximum-principle check was evaluated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Location<T> {
    Vertex(usize),
    EdgeInterior { edge: usize, offset: T },
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaxPrincipleReport<T> {
    /// Set when the solution is constant and there is nothing to check.
    pub skipped: bool,
    /// Open interval the interior values must lie in.
    pub lower: T,
    pub upper: T,
    pub checked: usize,
    /// Points outside `[lower − slack, upper + slack]`.
    pub violations: Vec<(Location<T>, T)>,
    /// Points not strictly inside `(lower, upper)` but within the slack.
    pub touching: usize,
    /// Smallest distance from an interior value to the interval ends.
    pub min_margin: T,
}

impl<T: Scalar> MaxPrincipleReport<T> {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Absolute slack, scaled by `max(1, |bounds|)`.
pub const MAX_PRINCIPLE_SLACK: f64 = 1e-12;

/// Checks that interior vertex values and interior edge extrema lie strictly
/// between the extreme boundary values.
///
/// With a nonzero potential the admissible interval is widened to contain 0:
/// q-harmonic functions then have no positive interior maximum and no
/// negative interior minimum, but may dip below the smallest positive datum.
pub fn max_principle_check<T: Scalar>(u: &QHarmonicFunction<'_, T>) -> MaxPrincipleReport<T> {
    let g = u.graph();
    let data = u.boundary_values();
    let mut lower = data.iter().copied().fold(T::infinity(), T::min);
    let mut upper = data.iter().copied().fold(T::neg_infinity(), T::max);
    let zero_q = g.has_zero_potential();
    if !zero_q {
        lower = lower.min(T::zero());
        upper = upper.max(T::zero());
    }
    let mut report = MaxPrincipleReport {
        skipped: false,
        lower,
        upper,
        checked: 0,
        violations: Vec::new(),
        touching: 0,
        min_margin: T::infinity(),
    };
    if data.is_empty() || lower == upper {
        report.skipped = true;
        return report;
    }
    let slack = T::lit(MAX_PRINCIPLE_SLACK) * T::one().max(lower.abs()).max(upper.abs());
    let visit = |loc: Location<T>, v: T, r: &mut MaxPrincipleReport<T>| {
        r.checked += 1;
        let margin = (v - lower).min(upper - v);
        r.min_margin = r.min_margin.min(margin);
        if v > upper + slack || v < lower - slack {
            r.violations.push((loc, v));
        } else if margin <= T::zero() {
            r.touching += 1;
        }
    };
    for v in g.interior() {
        visit(Location::Vertex(v), u.values()[v], &mut report);
    }
    for (eid, s) in u.edge_solutions().iter().enumerate() {
        if let Some((x, v)) = s.interior_extremum() {
            visit(Location::EdgeInterior { edge: eid, offset: x }, v, &mut report);
        }
    }
    report
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LowerBound<T> {
    pub estimate: EigenEstimate<T>,
    /// All LDLᵀ pivots of the interior block are positive.
    pub certified_positive: bool,
    pub interior_dim: usize,
}

/// Smallest eigenvalue of the interior (Dirichlet) block of the vertex system.
pub fn dirichlet_lower_bound<T: Scalar>(g: &MetricGraph<T>) -> Result<LowerBound<T>> {
    if g.boundary().is_empty() {
        return Err(Error::NoBoundary);
    }
    let solver = DirichletSolver::new(g)?;
    let f = solver
        .factor()
        .ok_or_else(|| Error::Domain("graph has no interior vertices".into()))?;
    Ok(LowerBound {
        estimate: f.smallest_eigenvalue(5000, T::lit(1e-12)),
        certified_positive: f.pivots().iter().all(|&d| d > T::zero()),
        interior_dim: f.dim(),
    })
}
