//! Monte-Carlo harmonic measure: simple random walk on the lattice obtained
//! by cutting every edge into steps of length `h`.
//!
//! For `q ≡ 0` the hitting distribution of the lattice walk equals the
//! harmonic measure of the metric graph exactly (edge solutions are linear
//! and the Kirchhoff condition is the lattice mean-value property), so the
//! only error is sampling error.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::{GraphPoint, MetricGraph};
use crate::scalar::Scalar;

/// Relative tolerance for `l_e / h` being an integer.
const LATTICE_TOL: f64 = 1e-9;
/// Walkers per independently seeded chunk.
const CHUNK: usize = 4096;

#[derive(Debug, Clone, PartialEq)]
pub struct WalkEstimate<T> {
    /// Boundary vertices, in graph boundary order.
    pub boundary: Vec<usize>,
    /// Fraction of walkers absorbed at each boundary vertex.
    pub probabilities: Vec<T>,
    /// `sqrt(p (1 − p) / N)` per boundary vertex.
    pub std_errors: Vec<T>,
    pub walkers: usize,
    pub mean_steps: f64,
}

struct Lattice {
    neighbours: Vec<Vec<u32>>,
    /// Index into the boundary list for absorbing nodes.
    absorbing: Vec<Option<u32>>,
}

fn lattice_steps<T: Scalar>(length: T, h: f64) -> Result<usize> {
    let l = length.to_f64().unwrap_or(f64::NAN);
    let k = (l / h).round();
    if k < 1.0 || ((k * h - l).abs() > LATTICE_TOL * l) {
        return Err(Error::Walk(format!("step {h} does not divide edge length {l}")));
    }
    Ok(k as usize)
}

impl Lattice {
    /// Builds the lattice; also returns the first interior node of each edge
    /// (nodes of edge `e` run from its `a` end to its `b` end).
    fn new<T: Scalar>(g: &MetricGraph<T>, h: f64) -> Result<(Self, Vec<(usize, usize)>)> {
        let mut neighbours: Vec<Vec<u32>> = vec![Vec::new(); g.vertex_count()];
        let mut spans = Vec::with_capacity(g.edge_count());
        for e in g.edges() {
            let k = lattice_steps(e.length, h)?;
            let first = neighbours.len();
            let inner: Vec<usize> = (first..first + k - 1).collect();
            neighbours.resize(first + k - 1, Vec::new());
            let chain: Vec<usize> = std::iter::once(e.a).chain(inner).chain(std::iter::once(e.b)).collect();
            for w in chain.windows(2) {
                neighbours[w[0]].push(w[1] as u32);
                neighbours[w[1]].push(w[0] as u32);
            }
            spans.push((first, k));
        }
        let mut absorbing = vec![None; neighbours.len()];
        for (i, &v) in g.boundary().iter().enumerate() {
            absorbing[v] = Some(i as u32);
        }
        Ok((Self { neighbours, absorbing }, spans))
    }

    fn run(&self, start: usize, rng: &mut impl Rng) -> (u32, u64) {
        let mut at = start;
        let mut steps = 0u64;
        loop {
            if let Some(b) = self.absorbing[at] {
                return (b, steps);
            }
            let nb = &self.neighbours[at];
            at = nb[rng.gen_range(0..nb.len())] as usize;
            steps += 1;
        }
    }
}

/// Estimates the harmonic measure seen from `start` with `walkers`
/// independent walks of step `h`. Deterministic for a given `seed`.
pub fn random_walk_oracle<T: Scalar>(
    g: &MetricGraph<T>,
    start: GraphPoint<T>,
    h: T,
    walkers: usize,
    seed: u64,
) -> Result<WalkEstimate<T>> {
    if walkers == 0 {
        return Err(Error::Walk("walker count must be positive".into()));
    }
    let hf = h.to_f64().unwrap_or(f64::NAN);
    if !(hf > 0.0 && hf.is_finite()) {
        return Err(Error::Walk(format!("invalid step {h}")));
    }
    if !g.has_zero_potential() {
        return Err(Error::Walk("random walk oracle requires zero potential".into()));
    }
    if g.boundary().is_empty() {
        return Err(Error::NoBoundary);
    }
    g.check_point(start)?;
    let (lattice, spans) = Lattice::new(g, hf)?;
    let e = g.edge(start.edge);
    let (first, k) = spans[start.edge];
    let pos = start.offset.to_f64().unwrap_or(f64::NAN) / hf;
    let i = pos.round();
    if (i - pos).abs() > LATTICE_TOL * (k as f64) {
        return Err(Error::Walk(format!("start offset {} is not a lattice point", start.offset)));
    }
    let node = match i as usize {
        0 => e.a,
        j if j == k => e.b,
        j => first + j - 1,
    };

    let chunks = walkers.div_ceil(CHUNK);
    let tallies: Vec<(Vec<u64>, u64)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let n = CHUNK.min(walkers - c * CHUNK);
            let mut hits = vec![0u64; g.boundary().len()];
            let mut steps = 0;
            for _ in 0..n {
                let (b, s) = lattice.run(node, &mut rng);
                hits[b as usize] += 1;
                steps += s;
            }
            (hits, steps)
        })
        .collect();
    let mut hits = vec![0u64; g.boundary().len()];
    let mut steps = 0u64;
    for (h, s) in tallies {
        hits.iter_mut().zip(h).for_each(|(a, b)| *a += b);
        steps += s;
    }
    let n = T::from_count(walkers);
    let probabilities: Vec<T> = hits.iter().map(|&c| T::from_count(c as usize) / n).collect();
    let std_errors = probabilities.iter().map(|&p| (p * (T::one() - p) / n).sqrt()).collect();
    Ok(WalkEstimate {
        boundary: g.boundary().to_vec(),
        probabilities,
        std_errors,
        walkers,
        mean_steps: steps as f64 / walkers as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_graph, Edge};

    fn y_graph() -> MetricGraph<f64> {
        build_graph(&[Edge::new(0, 1, 1.0), Edge::new(0, 2, 2.0), Edge::new(0, 3, 2.0)], &[]).unwrap()
    }

    #[test]
    fn interval_midpoint_is_fair() {
        let g = build_graph(&[Edge::new(0, 1, 1.0)], &[]).unwrap();
        let w = random_walk_oracle(&g, GraphPoint::new(0, 0.5), 0.1, 100_000, 7).unwrap();
        for (p, s) in w.probabilities.iter().zip(&w.std_errors) {
            let p: f64 = *p;
            assert!((p - 0.5).abs() <= 3.0 * s, "{p} ± {s}");
        }
        assert!((w.probabilities.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn asymmetric_y_graph() {
        let g = y_graph();
        let w = random_walk_oracle(&g, g.vertex_point(0), 0.5, 100_000, 11).unwrap();
        for ((p, s), want) in w.probabilities.iter().zip(&w.std_errors).zip([0.5, 0.25, 0.25]) {
            assert!((p - want).abs() <= 3.0 * s, "{p} vs {want} ± {s}");
        }
    }

    #[test]
    fn deterministic_for_seed() {
        let g = y_graph();
        let a = random_walk_oracle(&g, g.vertex_point(0), 0.5, 10_000, 3).unwrap();
        let b = random_walk_oracle(&g, g.vertex_point(0), 0.5, 10_000, 3).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_bad_input() {
        let g = y_graph();
        let p = g.vertex_point(0);
        assert!(matches!(random_walk_oracle(&g, p, 0.5, 0, 1), Err(Error::Walk(_))));
        assert!(matches!(random_walk_oracle(&g, p, 0.3, 10, 1), Err(Error::Walk(_))));
        assert!(matches!(random_walk_oracle(&g, p, -1.0, 10, 1), Err(Error::Walk(_))));
        assert!(matches!(random_walk_oracle(&g, GraphPoint::new(0, 0.25), 0.5, 10, 1), Err(Error::Walk(_))));
        let q = g.with_potential(|_, _| 1.0).unwrap();
        assert!(matches!(random_walk_oracle(&q, p, 0.5, 10, 1), Err(Error::Walk(_))));
    }
}
