//! Dirichlet-to-Neumann function `Λ(F, E)` on clopen subsets of the
//! boundary of an α–β tree, approximated by exhausting the tree with its
//! depth-`n` truncations.
//!
//! At depth `n` the relative-boundary leaf with address `s` receives the
//! value of `F` on the cylinder `[s]`, `v₀` receives `F`'s value on `{v₀}`,
//! and `Λ_n(F, E)` is the sum of outward boundary derivatives over the
//! truncation boundary vertices lying in `E`.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::address::{Branch, SigmaAddress};
use crate::dn::DirichletSolver;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tree::{cylinder_leaves, generate_ab_tree, AbTree, AlphaBetaSpec, ROOT};

/// Finite union of cylinders, optionally together with the isolated boundary point `v₀`.
///
/// Always held in normal form: the prefixes are an antichain, sibling pairs
/// are merged into their parent, and the list is sorted.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct ClopenSet {
    prefixes: Vec<SigmaAddress>,
    root: bool,
}

impl ClopenSet {
    pub fn new(prefixes: impl IntoIterator<Item = SigmaAddress>, root: bool) -> Self {
        let mut s = Self { prefixes: prefixes.into_iter().collect(), root };
        s.normalize();
        s
    }

    pub fn empty() -> Self {
        Self::default()
    }

    /// The whole boundary: `v₀` plus the Cantor part.
    pub fn whole() -> Self {
        Self::new([SigmaAddress::root()], true)
    }

    pub fn cylinder(prefix: SigmaAddress) -> Self {
        Self::new([prefix], false)
    }

    pub fn root_point() -> Self {
        Self::new([], true)
    }

    pub fn prefixes(&self) -> &[SigmaAddress] {
        &self.prefixes
    }

    pub fn contains_root(&self) -> bool {
        self.root
    }

    pub fn is_empty(&self) -> bool {
        self.prefixes.is_empty() && !self.root
    }

    /// Longest prefix length; addresses at least this long fall entirely inside or outside.
    pub fn resolution(&self) -> usize {
        self.prefixes.iter().map(SigmaAddress::len).max().unwrap_or(0)
    }

    /// Whether the cylinder of `address` lies inside the set. Only meaningful
    /// when `address.len() >= self.resolution()`.
    pub fn contains_address(&self, address: &SigmaAddress) -> bool {
        self.prefixes.iter().any(|p| address.starts_with(p))
    }

    pub fn is_disjoint(&self, other: &ClopenSet) -> bool {
        !(self.root && other.root)
            && !self
                .prefixes
                .iter()
                .any(|p| other.prefixes.iter().any(|q| p.starts_with(q) || q.starts_with(p)))
    }

    pub fn union(&self, other: &ClopenSet) -> ClopenSet {
        ClopenSet::new(self.prefixes.iter().chain(&other.prefixes).cloned(), self.root || other.root)
    }

    /// Complement within the whole boundary.
    pub fn complement(&self) -> ClopenSet {
        fn rec(node: SigmaAddress, set: &[SigmaAddress], out: &mut Vec<SigmaAddress>) {
            if set.iter().any(|p| node.starts_with(p)) {
                return;
            }
            if !set.iter().any(|p| p.starts_with(&node)) {
                out.push(node);
                return;
            }
            rec(node.child(Branch::Alpha), set, out);
            rec(node.child(Branch::Beta), set, out);
        }
        let mut out = Vec::new();
        rec(SigmaAddress::root(), &self.prefixes, &mut out);
        ClopenSet::new(out, !self.root)
    }

    /// Truncation boundary vertices belonging to the set (`B_n`).
    pub fn boundary_vertices<T: Scalar>(&self, tree: &AbTree<T>) -> Result<Vec<usize>> {
        let mut out = Vec::new();
        if self.root {
            out.push(ROOT);
        }
        for p in &self.prefixes {
            out.extend(cylinder_leaves(tree, p)?);
        }
        Ok(out)
    }

    fn normalize(&mut self) {
        let mut ps = std::mem::take(&mut self.prefixes);
        loop {
            ps.sort();
            ps.dedup();
            // drop prefixes extending another one
            let keep: Vec<SigmaAddress> = ps
                .iter()
                .filter(|p| !ps.iter().any(|q| q != *p && p.starts_with(q)))
                .cloned()
                .collect();
            let mut merged = false;
            let mut next = Vec::with_capacity(keep.len());
            let mut i = 0;
            while i < keep.len() {
                let p = &keep[i];
                if p.last() == Some(Branch::Alpha)
                    && i + 1 < keep.len()
                    && keep[i + 1].parent() == p.parent()
                    && keep[i + 1].last() == Some(Branch::Beta)
                {
                    next.push(p.parent().expect("nonempty"));
                    merged = true;
                    i += 2;
                } else {
                    next.push(p.clone());
                    i += 1;
                }
            }
            ps = next;
            if !merged {
                break;
            }
        }
        ps.sort();
        self.prefixes = ps;
    }
}

/// Text form: terms joined by `+`, each `root`, `all`, or `cyl:<addr>[,<addr>…]`;
/// a leading `~` complements the whole expression. The empty set prints as `empty`.
impl fmt::Display for ClopenSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if *self == ClopenSet::whole() {
            return f.write_str("all");
        }
        let mut parts = Vec::new();
        if self.root {
            parts.push("root".to_string());
        }
        if !self.prefixes.is_empty() {
            let list: Vec<String> = self.prefixes.iter().map(|p| p.to_string()).collect();
            parts.push(format!("cyl:{}", list.join(",")));
        }
        if parts.is_empty() {
            return f.write_str("empty");
        }
        f.write_str(&parts.join("+"))
    }
}

impl FromStr for ClopenSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some(rest) = s.strip_prefix('~') {
            return Ok(rest.parse::<ClopenSet>()?.complement());
        }
        let bad = |msg: String| Error::Parse { line: 0, msg };
        let mut set = ClopenSet::empty();
        for term in s.split('+').map(str::trim) {
            let t = match term {
                "root" | "v0" => ClopenSet::root_point(),
                "all" => ClopenSet::whole(),
                "empty" => ClopenSet::empty(),
                _ => {
                    let list = term
                        .strip_prefix("cyl:")
                        .ok_or_else(|| bad(format!("unknown clopen term {term:?}")))?;
                    let ps = list.split(',').map(|a| a.trim().parse()).collect::<Result<Vec<SigmaAddress>>>()?;
                    ClopenSet::new(ps, false)
                }
            };
            set = set.union(&t);
        }
        Ok(set)
    }
}

/// `F = Σ_k a_k 1_{Ω(k)}` with pairwise disjoint clopen sets.
#[derive(Debug, Clone, PartialEq)]
pub struct SimpleBoundaryFunction<T> {
    terms: Vec<(T, ClopenSet)>,
}

impl<T: Scalar> SimpleBoundaryFunction<T> {
    pub fn new(terms: Vec<(T, ClopenSet)>) -> Result<Self> {
        for (i, (_, a)) in terms.iter().enumerate() {
            for (_, b) in &terms[i + 1..] {
                if !a.is_disjoint(b) {
                    return Err(Error::Overlap);
                }
            }
        }
        Ok(Self { terms })
    }

    pub fn indicator(set: ClopenSet) -> Self {
        Self { terms: vec![(T::one(), set)] }
    }

    pub fn constant(c: T) -> Self {
        Self { terms: vec![(c, ClopenSet::whole())] }
    }

    pub fn terms(&self) -> &[(T, ClopenSet)] {
        &self.terms
    }

    pub fn resolution(&self) -> usize {
        self.terms.iter().map(|(_, s)| s.resolution()).max().unwrap_or(0)
    }

    /// Value on the cylinder of `address` (`address.len() ≥ resolution`).
    pub fn value_at(&self, address: &SigmaAddress) -> T {
        self.terms
            .iter()
            .filter(|(_, s)| s.contains_address(address))
            .map(|(c, _)| *c)
            .sum()
    }

    pub fn value_at_root(&self) -> T {
        self.terms.iter().filter(|(_, s)| s.contains_root()).map(|(c, _)| *c).sum()
    }

    pub fn scaled(&self, a: T) -> Self {
        Self { terms: self.terms.iter().map(|(c, s)| (a * *c, s.clone())).collect() }
    }

    /// `a F + b G`, re-expressed on disjoint sets (one set per distinct value).
    pub fn linear_combination(a: T, f: &Self, b: T, g: &Self) -> Self {
        let depth = f.resolution().max(g.resolution());
        let mut groups: Vec<(T, ClopenSet)> = Vec::new();
        let mut put = |v: T, set: ClopenSet| {
            if v == T::zero() {
                return;
            }
            match groups.iter_mut().find(|(c, _)| *c == v) {
                Some((_, s)) => *s = s.union(&set),
                None => groups.push((v, set)),
            }
        };
        put(a * f.value_at_root() + b * g.value_at_root(), ClopenSet::root_point());
        for addr in SigmaAddress::all_of_length(depth) {
            let v = a * f.value_at(&addr) + b * g.value_at(&addr);
            put(v, ClopenSet::cylinder(addr));
        }
        Self { terms: groups }
    }

    /// Boundary data on a truncation, ordered as the truncation's boundary.
    pub fn boundary_data(&self, tree: &AbTree<T>) -> Result<Vec<T>> {
        let max = tree.leaf_address_len();
        if self.resolution() > max {
            return Err(Error::PrefixTooLong { len: self.resolution(), max });
        }
        Ok(tree
            .graph()
            .boundary()
            .iter()
            .map(|&v| {
                if v == ROOT {
                    self.value_at_root()
                } else {
                    self.value_at(&tree.address(v).expect("tree vertices carry addresses"))
                }
            })
            .collect())
    }
}

/// Text form: `;`-separated terms, each `<coef>*<set>` or just `<set>` (coefficient 1).
impl<T: Scalar> FromStr for SimpleBoundaryFunction<T> {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut terms = Vec::new();
        for term in s.split(';').map(str::trim).filter(|t| !t.is_empty()) {
            let (coef, set) = match term.split_once('*') {
                Some((c, set)) => (
                    c.trim()
                        .parse::<T>()
                        .map_err(|_| Error::Parse { line: 0, msg: format!("bad coefficient {c:?}") })?,
                    set,
                ),
                None => (T::one(), term),
            };
            terms.push((coef, set.parse()?));
        }
        Self::new(terms)
    }
}

impl<T: Scalar> fmt::Display for SimpleBoundaryFunction<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.terms.iter().map(|(c, s)| format!("{c}*{s}")).collect();
        f.write_str(&parts.join(";"))
    }
}

/// Solution data of one truncation level.
#[derive(Debug, Clone)]
pub struct LevelSolve<T> {
    pub tree: AbTree<T>,
    pub values: Vec<T>,
    /// Boundary derivative per vertex id (zero off the boundary).
    pub flux: Vec<T>,
    pub energy: T,
}

impl<T: Scalar> LevelSolve<T> {
    pub fn depth(&self) -> usize {
        self.tree.depth()
    }

    /// `Σ_{v ∈ B_n(E)} ∂_ν u(v)`.
    pub fn flux_over(&self, e: &ClopenSet) -> Result<T> {
        Ok(e.boundary_vertices(&self.tree)?.iter().map(|&v| self.flux[v]).sum())
    }

    /// Largest boundary derivative magnitude, used as the level's scale.
    pub fn flux_scale(&self) -> T {
        self.flux.iter().fold(T::zero(), |m, d| m.max(d.abs()))
    }
}

/// Solves the depth-`depth` truncation with data `F`.
pub fn solve_level<T: Scalar>(
    family: &AlphaBetaSpec<T>,
    f: &SimpleBoundaryFunction<T>,
    depth: usize,
) -> Result<LevelSolve<T>> {
    let tree = generate_ab_tree(&family.with_depth(depth))?;
    let data = f.boundary_data(&tree)?;
    let (values, energy, boundary_flux) = {
        let solver = DirichletSolver::new(tree.graph())?;
        let u = solver.solve(&data)?;
        (u.values().to_vec(), u.energy(), u.boundary_derivatives().to_vec())
    };
    let mut flux = vec![T::zero(); tree.graph().vertex_count()];
    for (&v, d) in tree.graph().boundary().iter().zip(boundary_flux) {
        flux[v] = d;
    }
    Ok(LevelSolve { tree, values, flux, energy })
}

/// Stopping rules for an exhaustion run.
#[derive(Debug, Clone, PartialEq)]
pub struct ExhaustionOptions<T> {
    pub n_min: usize,
    pub n_max: usize,
    pub tol: T,
    /// Consecutive sub-tolerance first differences required to declare convergence.
    pub min_consecutive: usize,
    /// Stop at the first level where convergence is declared.
    pub stop_early: bool,
}

impl<T: Scalar> ExhaustionOptions<T> {
    pub fn new(tol: T, n_max: usize) -> Self {
        Self { n_min: 2, n_max, tol, min_consecutive: 3, stop_early: true }
    }

    /// Run every level in `n_min..=n_max`.
    pub fn full(mut self) -> Self {
        self.stop_early = false;
        self
    }

    fn validate(&self, needed: usize) -> Result<(usize, usize)> {
        let lo = self.n_min.max(needed).max(1);
        if !(self.tol > T::zero()) {
            return Err(Error::Domain(format!("tolerance must be positive, got {}", self.tol)));
        }
        if self.n_max < 2 || lo > self.n_max {
            return Err(Error::DepthRange { lo, hi: self.n_max });
        }
        Ok((lo, self.n_max))
    }
}

/// Values `Λ_n` over the exhaustion and the convergence verdict.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport<T> {
    pub levels: Vec<usize>,
    pub values: Vec<T>,
    /// `|Λ_n − Λ_{n−1}|`, one shorter than `values`.
    pub residuals: Vec<T>,
    pub converged: bool,
    /// Final value.
    pub limit: T,
    /// Geometric (Richardson-type) extrapolation from the last two residuals,
    /// when their ratio lies in `(0, 1)`. Informational only.
    pub extrapolated: Option<T>,
    pub tolerance: T,
}

impl<T: Scalar> ConvergenceReport<T> {
    pub fn from_values(levels: Vec<usize>, values: Vec<T>, tol: T, min_consecutive: usize) -> Self {
        let residuals: Vec<T> = values.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
        let converged = is_converged(&residuals, tol, min_consecutive);
        let limit = *values.last().expect("at least one level");
        let extrapolated = match residuals.as_slice() {
            [.., r1, r2] if *r1 > T::zero() => {
                let rho = *r2 / *r1;
                if rho > T::zero() && rho < T::one() {
                    let n = values.len();
                    let step = values[n - 1] - values[n - 2];
                    Some(limit + step * rho / (T::one() - rho))
                } else {
                    None
                }
            }
            _ => None,
        };
        Self { levels, values, residuals, converged, limit, extrapolated, tolerance: tol }
    }

    /// Value at truncation depth `n`, if computed.
    pub fn at(&self, n: usize) -> Option<T> {
        self.levels.iter().position(|&l| l == n).map(|i| self.values[i])
    }
}

fn is_converged<T: Scalar>(residuals: &[T], tol: T, k: usize) -> bool {
    let k = k.max(1);
    residuals.len() >= k && residuals[residuals.len() - k..].iter().all(|&r| r <= tol)
}

/// Runs the exhaustion, returning the per-level solves (computed in parallel
/// when not stopping early) and evaluating `probe` on each.
fn exhaust<T: Scalar, R: Send>(
    family: &AlphaBetaSpec<T>,
    f: &SimpleBoundaryFunction<T>,
    lo: usize,
    hi: usize,
    stop_early: bool,
    probe: impl Fn(&LevelSolve<T>) -> Result<R> + Sync,
    done: impl Fn(&[R]) -> bool,
) -> Result<Vec<(usize, R)>> {
    if stop_early {
        let mut rs: Vec<R> = Vec::new();
        for n in lo..=hi {
            rs.push(probe(&solve_level(family, f, n)?)?);
            if done(&rs) {
                break;
            }
        }
        Ok((lo..).zip(rs).collect())
    } else {
        (lo..=hi)
            .into_par_iter()
            .map(|n| solve_level(family, f, n).and_then(|s| probe(&s)).map(|r| (n, r)))
            .collect()
    }
}

/// `Λ(F, E)` estimated over the exhaustion `n = n_min ..= n_max`.
///
/// Non-convergence is reported through `converged = false`, not as an error.
pub fn dn_function<T: Scalar>(
    family: &AlphaBetaSpec<T>,
    f: &SimpleBoundaryFunction<T>,
    e: &ClopenSet,
    opts: &ExhaustionOptions<T>,
) -> Result<ConvergenceReport<T>> {
    let needed = f.resolution().max(e.resolution()) + 1;
    let (lo, hi) = opts.validate(needed)?;
    let rows = exhaust(
        family,
        f,
        lo,
        hi,
        opts.stop_early,
        |s| s.flux_over(e),
        |vals: &[T]| {
            let res: Vec<T> = vals.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
            is_converged(&res, opts.tol, opts.min_consecutive)
        },
    )?;
    let (levels, values) = rows.into_iter().unzip();
    Ok(ConvergenceReport::from_values(levels, values, opts.tol, opts.min_consecutive))
}

/// One partition cell of a measure table.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasureCell<T> {
    pub set: ClopenSet,
    pub report: ConvergenceReport<T>,
}

/// `Λ(F, ·)` tabulated on the partition `{v₀} ∪ {depth-k cylinders}`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasureTable<T> {
    pub function: SimpleBoundaryFunction<T>,
    pub partition_depth: usize,
    pub cells: Vec<MeasureCell<T>>,
    /// `Λ(F, ∂Ḡ)` on the same levels.
    pub total: ConvergenceReport<T>,
    /// `max_n |Σ_cells Λ_n(F, cell) − Λ_n(F, ∂Ḡ)|`.
    pub additivity_residual: T,
    /// Largest boundary-derivative magnitude seen, the scale for residuals.
    pub scale: T,
    /// Sum of the positive cell limits.
    pub positive_part: T,
    /// Sum of the negative cell limits (a nonpositive number).
    pub negative_part: T,
    pub signed_total: T,
}

impl<T: Scalar> MeasureTable<T> {
    pub fn converged(&self) -> bool {
        self.total.converged && self.cells.iter().all(|c| c.report.converged)
    }

    pub fn levels(&self) -> &[usize] {
        &self.total.levels
    }

    /// Cells and levels where the sign contradicts `F = 1_Ω`: cells inside
    /// `Ω` must be strictly positive and cells outside nonpositive (up to
    /// `slack`). Returns `(cell index, level, value)`.
    pub fn sign_violations(&self, omega: &ClopenSet, slack: T) -> Vec<(usize, usize, T)> {
        let mut out = Vec::new();
        for (i, cell) in self.cells.iter().enumerate() {
            let inside = cell_inside(&cell.set, omega);
            for (&n, &v) in cell.report.levels.iter().zip(&cell.report.values) {
                let bad = if inside { !(v > T::zero()) } else { v > slack };
                if bad {
                    out.push((i, n, v));
                }
            }
        }
        out
    }
}

/// Whether a partition cell (a single cylinder or `{v₀}`) lies in `omega`.
fn cell_inside(cell: &ClopenSet, omega: &ClopenSet) -> bool {
    if cell.contains_root() {
        omega.contains_root()
    } else {
        cell.prefixes().iter().all(|p| omega.contains_address(p))
    }
}

/// The partition of the boundary into `{v₀}` and all cylinders of length `k`.
pub fn partition(k: usize) -> Vec<ClopenSet> {
    std::iter::once(ClopenSet::root_point())
        .chain(SigmaAddress::all_of_length(k).into_iter().map(ClopenSet::cylinder))
        .collect()
}

pub fn measure_table<T: Scalar>(
    family: &AlphaBetaSpec<T>,
    f: &SimpleBoundaryFunction<T>,
    k: usize,
    opts: &ExhaustionOptions<T>,
) -> Result<MeasureTable<T>> {
    let cells = partition(k);
    let whole = ClopenSet::whole();
    let needed = f.resolution().max(k) + 1;
    let (lo, hi) = opts.validate(needed)?;
    let rows = exhaust(
        family,
        f,
        lo,
        hi,
        opts.stop_early,
        |s| {
            let per_cell = cells.iter().map(|c| s.flux_over(c)).collect::<Result<Vec<T>>>()?;
            Ok((per_cell, s.flux_over(&whole)?, s.flux_scale()))
        },
        |rows: &[(Vec<T>, T, T)]| {
            (0..=cells.len()).all(|i| {
                let seq: Vec<T> = rows.iter().map(|r| if i < cells.len() { r.0[i] } else { r.1 }).collect();
                let res: Vec<T> = seq.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
                is_converged(&res, opts.tol, opts.min_consecutive)
            })
        },
    )?;
    let levels: Vec<usize> = rows.iter().map(|(n, _)| *n).collect();
    let report = |seq: Vec<T>| ConvergenceReport::from_values(levels.clone(), seq, opts.tol, opts.min_consecutive);
    let table_cells: Vec<MeasureCell<T>> = cells
        .iter()
        .enumerate()
        .map(|(i, c)| MeasureCell { set: c.clone(), report: report(rows.iter().map(|(_, r)| r.0[i]).collect()) })
        .collect();
    let total = report(rows.iter().map(|(_, r)| r.1).collect());
    let additivity_residual = rows
        .iter()
        .map(|(_, r)| (r.0.iter().copied().sum::<T>() - r.1).abs())
        .fold(T::zero(), T::max);
    let scale = rows.iter().map(|(_, r)| r.2).fold(T::zero(), T::max);
    let limits: Vec<T> = table_cells.iter().map(|c| c.report.limit).collect();
    let positive_part = limits.iter().copied().filter(|&v| v > T::zero()).sum();
    let negative_part = limits.iter().copied().filter(|&v| v < T::zero()).sum();
    Ok(MeasureTable {
        function: f.clone(),
        partition_depth: k,
        cells: table_cells,
        total,
        additivity_residual,
        scale,
        positive_part,
        negative_part,
        signed_total: limits.iter().copied().sum(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymmetryCheck<T> {
    /// `Λ_n(1_{Ω1}, Ω2)`.
    pub forward: T,
    /// `Λ_n(1_{Ω2}, Ω1)`.
    pub backward: T,
    pub residual: T,
    /// Largest boundary-derivative magnitude over both solves.
    pub scale: T,
}

/// `|Λ_n(1_{Ω1}, Ω2) − Λ_n(1_{Ω2}, Ω1)|` at truncation depth `n`.
pub fn symmetry_residual<T: Scalar>(
    family: &AlphaBetaSpec<T>,
    omega1: &ClopenSet,
    omega2: &ClopenSet,
    n: usize,
) -> Result<SymmetryCheck<T>> {
    let s1 = solve_level(family, &SimpleBoundaryFunction::indicator(omega1.clone()), n)?;
    let s2 = solve_level(family, &SimpleBoundaryFunction::indicator(omega2.clone()), n)?;
    let forward = s1.flux_over(omega2)?;
    let backward = s2.flux_over(omega1)?;
    Ok(SymmetryCheck {
        forward,
        backward,
        residual: (forward - backward).abs(),
        scale: s1.flux_scale().max(s2.flux_scale()),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraticFormCheck<T> {
    /// `Σ_{j,k} a_j a_k Λ_n(1_{Ω(j)}, Ω(k))`.
    pub form: T,
    /// `Q(u_F, u_F)` on the truncation.
    pub energy: T,
    /// `Σ_{j,k} |a_j a_k Λ_n(1_{Ω(j)}, Ω(k))|`.
    pub scale: T,
}

/// `⟨Λ_n F, F⟩` assembled from indicator solves, next to the truncation energy of `u_F`.
pub fn quadratic_form<T: Scalar>(
    family: &AlphaBetaSpec<T>,
    f: &SimpleBoundaryFunction<T>,
    n: usize,
) -> Result<QuadraticFormCheck<T>> {
    let solves = f
        .terms()
        .par_iter()
        .map(|(_, set)| solve_level(family, &SimpleBoundaryFunction::indicator(set.clone()), n))
        .collect::<Result<Vec<_>>>()?;
    let mut form = T::zero();
    let mut scale = T::zero();
    for ((aj, _), sj) in f.terms().iter().zip(&solves) {
        for (ak, set_k) in f.terms() {
            let t = *aj * *ak * sj.flux_over(set_k)?;
            form = form + t;
            scale = scale + t.abs();
        }
    }
    let energy = solve_level(family, f, n)?.energy;
    Ok(QuadraticFormCheck { form, energy, scale })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(s: &str) -> ClopenSet {
        s.parse().unwrap()
    }

    #[test]
    fn normal_form_merges_siblings() {
        assert_eq!(set("cyl:a,b"), set("cyl:-"));
        assert_eq!(set("cyl:aa,ab,b"), set("cyl:-"));
        assert_eq!(set("cyl:a,ab"), set("cyl:a"));
        assert_eq!(set("root+cyl:a,b"), ClopenSet::whole());
        assert_eq!(ClopenSet::whole().to_string(), "all");
        assert_eq!(set("cyl:ba,a").to_string(), "cyl:a,ba");
        assert_eq!(ClopenSet::empty().to_string(), "empty");
    }

    #[test]
    fn complements() {
        assert_eq!(set("cyl:a").complement(), set("root+cyl:b"));
        assert_eq!(set("~cyl:ab"), set("root+cyl:aa,b"));
        assert_eq!(ClopenSet::whole().complement(), ClopenSet::empty());
        assert_eq!(set("cyl:aba").complement().complement(), set("cyl:aba"));
        assert!(set("cyl:aba").is_disjoint(&set("cyl:aba").complement()));
    }

    #[test]
    fn disjointness() {
        assert!(set("cyl:a").is_disjoint(&set("cyl:b")));
        assert!(!set("cyl:a").is_disjoint(&set("cyl:ab")));
        assert!(!set("root").is_disjoint(&set("all")));
        assert_eq!(
            SimpleBoundaryFunction::new(vec![(1.0, set("cyl:a")), (2.0, set("cyl:aa"))]),
            Err(Error::Overlap)
        );
    }

    #[test]
    fn simple_function_parsing_and_values() {
        let f: SimpleBoundaryFunction<f64> = "2*cyl:a;-1*cyl:b".parse().unwrap();
        assert_eq!(f.value_at(&"ab".parse().unwrap()), 2.0);
        assert_eq!(f.value_at(&"ba".parse().unwrap()), -1.0);
        assert_eq!(f.value_at_root(), 0.0);
        let g: SimpleBoundaryFunction<f64> = "root".parse().unwrap();
        let h = SimpleBoundaryFunction::linear_combination(1.0, &f, 3.0, &g);
        assert_eq!(h.value_at_root(), 3.0);
        assert_eq!(h.value_at(&"aa".parse().unwrap()), 2.0);
    }

    #[test]
    fn constant_data_gives_zero_flux() {
        let fam = AlphaBetaSpec::<f64>::new(0.5, 2);
        let r = dn_function(&fam, &SimpleBoundaryFunction::constant(1.0), &set("cyl:a"), &ExhaustionOptions::new(1e-12, 6))
            .unwrap();
        assert!(r.values.iter().all(|v| v.abs() < 1e-13));
        assert!(r.converged);
        assert_eq!(r.levels, vec![2, 3, 4, 5]);
    }

    #[test]
    fn symmetric_pair_is_exactly_zero() {
        let fam = AlphaBetaSpec::new(0.5, 2);
        let s = symmetry_residual(&fam, &set("cyl:a"), &set("cyl:a"), 6).unwrap();
        assert_eq!(s.residual, 0.0);
        assert!(s.forward > 0.0);
    }

    #[test]
    fn table_partition_shape() {
        let fam = AlphaBetaSpec::new(0.5, 2);
        let f = SimpleBoundaryFunction::indicator(set("cyl:a"));
        let t = measure_table(&fam, &f, 2, &ExhaustionOptions::new(1e-8, 8)).unwrap();
        assert_eq!(t.cells.len(), 5);
        assert_eq!(t.cells[0].set, ClopenSet::root_point());
        assert!(t.additivity_residual <= 1e-12);
        assert!(t.sign_violations(&set("cyl:a"), 1e-12).is_empty());
    }

    #[test]
    fn depth_range_errors() {
        let fam = AlphaBetaSpec::new(0.5, 2);
        let f = SimpleBoundaryFunction::indicator(set("cyl:aaaa"));
        let opts = ExhaustionOptions::new(1e-8, 4);
        assert_eq!(dn_function(&fam, &f, &set("all"), &opts), Err(Error::DepthRange { lo: 5, hi: 4 }));
        let opts = ExhaustionOptions::new(0.0, 8);
        assert!(matches!(dn_function(&fam, &f, &set("all"), &opts), Err(Error::Domain(_))));
    }
}
