//! Oracles and corpora shared by the integration tests. Nothing here calls
//! into the library's numerical kernels except where noted.

#![allow(dead_code)]

use qgraph_core::graph::{Edge, GraphBuilder, GraphPoint, MetricGraph};
use rand::Rng;

/// Edge DN block from a second-order finite-difference solve of
/// `−u″ + κ²u = 0` on `[0, l]` with `n` cells, columns from unit data at each end.
pub fn fd_edge_block(l: f64, kappa2: f64, n: usize) -> [[f64; 2]; 2] {
    let h = l / n as f64;
    let col = |ua: f64, ub: f64| {
        // tridiagonal: -u[i-1] + (2 + h²κ²) u[i] - u[i+1] = 0 for interior i
        let m = n - 1;
        let diag = 2.0 + h * h * kappa2;
        let mut c = vec![0.0; m];
        let mut d = vec![0.0; m];
        for i in 0..m {
            let mut rhs = 0.0;
            if i == 0 {
                rhs += ua;
            }
            if i == m - 1 {
                rhs += ub;
            }
            let denom = if i == 0 { diag } else { diag + c[i - 1] };
            c[i] = -1.0 / denom;
            d[i] = (rhs + if i == 0 { 0.0 } else { d[i - 1] }) / denom;
        }
        let mut u = vec![0.0; n + 1];
        u[0] = ua;
        u[n] = ub;
        // the far-end datum already sits in the last right-hand side
        u[m] = d[m - 1];
        for i in (0..m - 1).rev() {
            u[i + 1] = d[i] - c[i] * u[i + 2];
        }
        // second-order one-sided fluxes using u″ = κ²u at the ends
        let out_a = -((u[1] - u[0]) / h - 0.5 * h * kappa2 * u[0]);
        let out_b = (u[n] - u[n - 1]) / h + 0.5 * h * kappa2 * u[n];
        (out_a, out_b)
    };
    let (aa, ba) = col(1.0, 0.0);
    let (ab, bb) = col(0.0, 1.0);
    [[aa, ab], [ba, bb]]
}

/// Edge block straight from `cosh`/`sinh`, valid for `0 < κl < 700`.
pub fn naive_edge_block(l: f64, kappa2: f64) -> [[f64; 2]; 2] {
    if kappa2 == 0.0 {
        return [[1.0 / l, -1.0 / l], [-1.0 / l, 1.0 / l]];
    }
    let k = kappa2.sqrt();
    let z = k * l;
    let d = k * z.cosh() / z.sinh();
    let o = -k / z.sinh();
    [[d, o], [o, d]]
}

/// Dense Schur-complement DN matrix assembled from `naive_edge_block`.
pub fn dense_dn(g: &MetricGraph<f64>) -> Vec<Vec<f64>> {
    let n = g.vertex_count();
    let mut a = vec![vec![0.0; n]; n];
    for e in g.edges() {
        let h = naive_edge_block(e.length, e.kappa2);
        a[e.a][e.a] += h[0][0];
        a[e.a][e.b] += h[0][1];
        a[e.b][e.a] += h[1][0];
        a[e.b][e.b] += h[1][1];
    }
    let bnd = g.boundary().to_vec();
    let int: Vec<usize> = (0..n).filter(|v| !g.is_boundary(*v)).collect();
    // solve A_II X = A_IB by Gauss–Jordan with partial pivoting
    let m = int.len();
    let mut aug: Vec<Vec<f64>> = int
        .iter()
        .map(|&i| int.iter().map(|&j| a[i][j]).chain(bnd.iter().map(|&b| a[i][b])).collect())
        .collect();
    for col in 0..m {
        let p = (col..m).max_by(|&x, &y| aug[x][col].abs().total_cmp(&aug[y][col].abs())).unwrap();
        aug.swap(col, p);
        let piv = aug[col][col];
        for x in aug[col].iter_mut() {
            *x /= piv;
        }
        for r in 0..m {
            if r != col {
                let f = aug[r][col];
                if f != 0.0 {
                    let pivot_row = aug[col].clone();
                    for (x, y) in aug[r].iter_mut().zip(pivot_row) {
                        *x -= f * y;
                    }
                }
            }
        }
    }
    bnd.iter()
        .map(|&i| {
            bnd.iter()
                .enumerate()
                .map(|(jb, &j)| {
                    let coupling: f64 = int.iter().enumerate().map(|(k, &v)| a[i][v] * aug[k][m + jb]).sum();
                    a[i][j] - coupling
                })
                .collect()
        })
        .collect()
}

/// Random connected graph with at most `max_vertices` vertices: a random
/// tree plus a few extra edges, occasionally with relative-boundary markers
/// and edgewise potentials.
pub fn random_graph(rng: &mut impl Rng, max_vertices: usize, with_potential: bool) -> MetricGraph<f64> {
    loop {
        let n = rng.gen_range(2..=max_vertices);
        let mut b = GraphBuilder::new();
        b.vertices(n);
        let mut edges = Vec::new();
        for v in 1..n {
            edges.push((rng.gen_range(0..v), v));
        }
        let extra = if n > 3 { rng.gen_range(0..=n / 3) } else { 0 };
        for _ in 0..extra {
            let x = rng.gen_range(0..n);
            let y = rng.gen_range(0..n);
            if x != y {
                edges.push((x, y));
            }
        }
        for (x, y) in edges {
            let l = rng.gen_range(0.05..3.0);
            let w = rng.gen_range(0.5..2.0);
            let k2 = if with_potential && rng.gen_bool(0.6) { rng.gen_range(0.0..20.0) } else { 0.0 };
            b.edge(Edge::new(x, y, l).with_weight(w).with_kappa2(k2));
        }
        if rng.gen_bool(0.3) {
            b.relative_boundary(rng.gen_range(0..n));
        }
        if let Ok(g) = b.build() {
            // parallel edges may add vertices; keep within the size cap
            if !g.boundary().is_empty() && g.vertex_count() <= max_vertices {
                return g;
            }
        }
    }
}

/// The fixed `q = 0` corpus for the random-walk oracle: graph, start point, step.
pub fn walk_corpus() -> Vec<(&'static str, MetricGraph<f64>, GraphPoint<f64>, f64)> {
    use qgraph_core::graph::build_graph;
    use qgraph_core::tree::{generate_ab_tree, AlphaBetaSpec};
    let e = |a, b, l| Edge::new(a, b, l);
    let mut out = Vec::new();

    let interval = build_graph(&[e(0, 1, 1.0)], &[]).unwrap();
    out.push(("interval", interval, GraphPoint::new(0, 0.5), 0.1));

    let star = build_graph(&[e(0, 1, 1.0), e(0, 2, 1.0), e(0, 3, 1.0)], &[]).unwrap();
    let p = star.vertex_point(0);
    out.push(("star", star, p, 0.25));

    let y = build_graph(&[e(0, 1, 1.0), e(0, 2, 2.0), e(0, 3, 2.0)], &[]).unwrap();
    let p = y.vertex_point(0);
    out.push(("y-graph", y, p, 0.5));

    let path = build_graph(&[e(0, 1, 1.0), e(1, 2, 0.5), e(2, 3, 1.5)], &[]).unwrap();
    out.push(("path", path, GraphPoint::new(1, 0.25), 0.25));

    let cycle_tail =
        build_graph(&[e(0, 1, 1.0), e(1, 2, 1.0), e(2, 3, 0.5), e(3, 1, 1.5), e(2, 4, 1.0), e(3, 5, 2.0)], &[]).unwrap();
    let p = cycle_tail.vertex_point(2);
    out.push(("cycle-with-tails", cycle_tail, p, 0.5));

    let k4 = build_graph(
        &[
            e(0, 1, 1.0),
            e(0, 2, 1.0),
            e(0, 3, 1.0),
            e(1, 2, 0.5),
            e(1, 3, 0.5),
            e(2, 3, 0.5),
            e(0, 4, 1.0),
            e(1, 5, 1.5),
            e(2, 6, 0.5),
        ],
        &[],
    )
    .unwrap();
    let p = k4.vertex_point(3);
    out.push(("k4-pendants", k4, p, 0.5));

    let ladder = build_graph(
        &[e(0, 1, 1.0), e(1, 2, 1.0), e(3, 4, 1.0), e(4, 5, 1.0), e(0, 3, 1.0), e(1, 4, 1.0), e(2, 5, 1.0), e(0, 6, 1.0), e(5, 7, 1.0)],
        &[2],
    )
    .unwrap();
    let p = ladder.vertex_point(4);
    out.push(("ladder-relative", ladder, p, 0.5));

    let tree = generate_ab_tree(&AlphaBetaSpec::new(0.5, 4)).unwrap().into_graph();
    let p = tree.vertex_point(1);
    out.push(("ab-tree-0.5", tree, p, 0.125));

    let tree = generate_ab_tree(&AlphaBetaSpec::new(0.25, 3)).unwrap().into_graph();
    let p = tree.vertex_point(2);
    out.push(("ab-tree-0.25", tree, p, 0.0625));

    let spider = build_graph(&[e(0, 1, 0.5), e(0, 2, 1.0), e(0, 3, 1.5), e(0, 4, 2.0), e(4, 5, 0.5)], &[]).unwrap();
    out.push(("spider", spider, GraphPoint::new(3, 1.0), 0.5));
    out
}

/// Adaptive Simpson quadrature.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        (m, fm, (b - a) / 6.0 * (fa + 4.0 * fm + fb))
    }
    #[allow(clippy::too_many_arguments)]
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64, m: f64, fm: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let (lm, flm, left) = simpson(f, a, fa, m, fm);
        let (rm, frm, right) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        rec(f, a, fa, m, fm, lm, flm, left, tol / 2.0, depth - 1) + rec(f, m, fm, b, fb, rm, frm, right, tol / 2.0, depth - 1)
    }
    let (fa, fb) = (f(a), f(b));
    let (m, fm, whole) = simpson(f, a, fa, b, fb);
    rec(f, a, fa, b, fb, m, fm, whole, tol, 40)
}

/// `u` on an edge from its end values via `sinh`, independent of the library.
pub fn naive_edge_value(l: f64, kappa2: f64, ua: f64, ub: f64, x: f64) -> f64 {
    if kappa2 == 0.0 {
        return ua + (ub - ua) * x / l;
    }
    let k = kappa2.sqrt();
    (ua * (k * (l - x)).sinh() + ub * (k * x).sinh()) / (k * l).sinh()
}
