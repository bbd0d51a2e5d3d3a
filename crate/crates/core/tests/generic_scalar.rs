//! The same pipeline instantiated at `f32` and `f64`.

use qgraph_core::dn::{dn_matrix, energy_identity, solve_dirichlet};
use qgraph_core::measure::{dn_function, ClopenSet, ExhaustionOptions, SimpleBoundaryFunction};
use qgraph_core::tree::{generate_ab_tree, AlphaBetaSpec};
use qgraph_core::Scalar;

fn pipeline<T: Scalar>() -> (Vec<T>, T, T) {
    let spec = AlphaBetaSpec::<T>::new(T::lit(0.4), 6);
    let tree = generate_ab_tree(&spec).unwrap();
    let g = tree.graph();
    let data: Vec<T> = (0..g.boundary().len()).map(|i| T::from_count(i % 2)).collect();
    let u = solve_dirichlet(g, &data).unwrap();
    let m = dn_matrix(g).unwrap();
    let f = SimpleBoundaryFunction::indicator("cyl:a".parse::<ClopenSet>().unwrap());
    let r = dn_function(&spec, &f, &"cyl:b".parse().unwrap(), &ExhaustionOptions::new(T::lit(1e-4), 8).full()).unwrap();
    assert!(energy_identity(&u).relative < T::lit(1e-4));
    (u.values().to_vec(), m.get(0, 0), r.limit)
}

#[test]
fn single_and_double_precision_agree() {
    let (v32, d32, l32) = pipeline::<f32>();
    let (v64, d64, l64) = pipeline::<f64>();
    for (a, b) in v32.iter().zip(&v64) {
        assert!((f64::from(*a) - b).abs() < 1e-5);
    }
    assert!((f64::from(d32) - d64).abs() < 1e-5 * d64.abs());
    assert!((f64::from(l32) - l64).abs() < 1e-4 * l64.abs());
}
