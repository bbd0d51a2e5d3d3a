//! Acceptance gate: one check per criterion, each printing a single
//! PASS/FAIL line. Exits nonzero if any criterion fails.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use qgraph_core::dn::{current_balance, dirichlet_lower_bound, dn_matrix, energy_identity, max_principle_check, solve_dirichlet,
    stiffness_scale,
};
use qgraph_core::edge::edge_dn_block;
use qgraph_core::graph::MetricGraph;
use qgraph_core::measure::{
    dn_function, measure_table, quadratic_form, symmetry_residual, ClopenSet, ExhaustionOptions, SimpleBoundaryFunction,
};
use qgraph_core::tree::{closed_form_harmonic, generate_ab_tree, product_formula_slope, AlphaBetaSpec};
use qgraph_core::walk::random_walk_oracle;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome { passed, detail: detail.into() }
}

fn set(s: &str) -> ClopenSet {
    s.parse().expect("valid clopen set")
}

fn random_corpus() -> Vec<MetricGraph<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0002);
    (0..200).map(|i| common::random_graph(&mut rng, 50, i % 2 == 1)).collect()
}

fn edge_closed_forms() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for i in 0..10_000 {
        let l = 10f64.powf(rng.gen_range(-2.0..1.0));
        let k2 = if i % 5 == 0 { 0.0 } else { 10f64.powf(rng.gen_range(-4.0..2.0)) };
        let h = edge_dn_block(l, k2).unwrap().as_array();
        let want = common::naive_edge_block(l, k2);
        for r in 0..2 {
            for c in 0..2 {
                worst = worst.max(((h[r][c] - want[r][c]) / want[r][c]).abs());
            }
        }
    }
    let mut worst_fd = 0.0f64;
    for _ in 0..20 {
        let l = rng.gen_range(0.5..2.0);
        let k2 = if rng.gen_bool(0.25) { 0.0 } else { rng.gen_range(0.0..25.0) };
        let h = edge_dn_block(l, k2).unwrap().as_array();
        let fd = common::fd_edge_block(l, k2, 100_000);
        let scale = h[0][0].abs();
        for r in 0..2 {
            for c in 0..2 {
                worst_fd = worst_fd.max((h[r][c] - fd[r][c]).abs() / scale);
            }
        }
    }
    outcome(worst <= 1e-12 && worst_fd <= 1e-6, format!("closed-form rel {worst:.2e}, FD rel {worst_fd:.2e}"))
}

fn finite_dn_structure(corpus: &[MetricGraph<f64>]) -> Outcome {
    let (mut sym, mut eig, mut cons) = (0.0f64, 0.0f64, 0.0f64);
    for g in corpus {
        let m = dn_matrix(g).unwrap();
        let scale = m.max_abs().max(stiffness_scale(g));
        sym = sym.max(m.symmetry_residual() / scale);
        let min = m.eigenvalues().first().copied().unwrap_or(0.0);
        eig = eig.max(-min / scale);
        if g.has_zero_potential() {
            cons = cons.max(m.constant_residual() / scale);
        }
    }
    outcome(
        sym <= 1e-10 && eig <= 1e-10 && cons <= 1e-10,
        format!("{} graphs: symmetry {sym:.2e}, negative eig {eig:.2e}, constant {cons:.2e} (relative)", corpus.len()),
    )
}

fn identities(corpus: &[MetricGraph<f64>]) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut en, mut cur) = (0.0f64, 0.0f64);
    for g in corpus {
        let data: Vec<f64> = (0..g.boundary().len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let u = solve_dirichlet(g, &data).unwrap();
        en = en.max(energy_identity(&u).relative);
        cur = cur.max(current_balance(&u).relative);
    }
    outcome(en <= 1e-8 && cur <= 1e-8, format!("energy identity {en:.2e}, current balance {cur:.2e} (relative)"))
}

fn max_principle() -> Outcome {
    let mut violations = 0;
    let mut touching = 0;
    let mut checked = 0;
    for seed in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let alpha = [0.3, 0.4, 0.5, 0.6, 0.7][rng.gen_range(0..5)];
        let depth = rng.gen_range(2..=8);
        let tree = generate_ab_tree(&AlphaBetaSpec::new(alpha, depth)).unwrap();
        let g = tree.graph();
        let mut data: Vec<f64> = (0..g.boundary().len()).map(|_| f64::from(rng.gen_range(0..=1u8))).collect();
        // nonconstant data
        data[0] = 1.0;
        let zero = rng.gen_range(1..data.len());
        data[zero] = 0.0;
        let u = solve_dirichlet(g, &data).unwrap();
        let r = max_principle_check(&u);
        violations += r.violations.len();
        touching += r.touching;
        checked += r.checked;
    }
    outcome(violations == 0, format!("100 truncations, {checked} points checked, {violations} violations, {touching} touching"))
}

fn closed_form_oracle() -> Outcome {
    let (mut vals, mut slopes) = (0.0f64, 0.0f64);
    for alpha in [0.3, 0.5, 0.7] {
        for depth in 2..=10 {
            let spec = AlphaBetaSpec::new(alpha, depth);
            let tree = generate_ab_tree(&spec).unwrap();
            let cf = closed_form_harmonic(&spec, 1.0, 0.25).unwrap();
            let g = tree.graph();
            let data: Vec<f64> = g.boundary().iter().map(|&v| cf.value(v)).collect();
            let u = solve_dirichlet(g, &data).unwrap();
            let scale = cf.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            for v in g.interior() {
                vals = vals.max((u.values()[v] - cf.value(v)).abs() / scale);
            }
            for v in 1..g.vertex_count() {
                let addr = tree.address(v).unwrap();
                let want = product_formula_slope(alpha, 1.0, &addr);
                slopes = slopes.max((cf.outward_from_parent(v) - want).abs() / want.abs());
            }
        }
    }
    outcome(vals <= 1e-9 && slopes <= 1e-10, format!("interior values {vals:.2e}, slope products {slopes:.2e} (relative)"))
}

fn exhaustion() -> Outcome {
    let mut ok = true;
    let mut notes = Vec::new();
    for alpha in [0.3, 0.5] {
        let family = AlphaBetaSpec::<f64>::new(alpha, 2);
        let f = SimpleBoundaryFunction::indicator(set("cyl:a"));
        for e in ["cyl:a", "cyl:b", "root"] {
            let r = dn_function(&family, &f, &set(e), &ExhaustionOptions::new(1e-6, 12).full()).unwrap();
            // residuals[i] = |Λ_{n} − Λ_{n−1}| with n = levels[i + 1]
            let from4: Vec<f64> =
                r.residuals.iter().zip(&r.levels[1..]).filter(|(_, &n)| n >= 4).map(|(x, _)| *x).collect();
            let decreasing = from4.windows(2).all(|w| w[1] < w[0]);
            let last = *r.residuals.last().unwrap();
            ok &= decreasing && last < 1e-6 && r.levels.last() == Some(&12);
            notes.push(format!("α={alpha} E={e}: r12={last:.1e}{}", if decreasing { "" } else { " NOT DECREASING" }));
        }
    }
    outcome(ok, notes.join("; "))
}

fn measure_structure() -> Outcome {
    let mut ok = true;
    let (mut add, mut sym) = (0.0f64, 0.0f64);
    let mut sign_bad = 0;
    let mut tables = 0;
    let omegas = ["cyl:a", "root", "cyl:ab", "root+cyl:b", "cyl:aab,ba"];
    for alpha in [0.3, 0.5] {
        let family = AlphaBetaSpec::<f64>::new(alpha, 2);
        for k in 0..=3 {
            for om in omegas {
                let omega = set(om);
                if omega.resolution() > k {
                    continue;
                }
                let f = SimpleBoundaryFunction::indicator(omega.clone());
                let t = measure_table(&family, &f, k, &ExhaustionOptions::new(1e-8, 10).full()).unwrap();
                tables += 1;
                let scale = t.scale.max(f64::MIN_POSITIVE);
                add = add.max(t.additivity_residual / scale);
                sign_bad += t.sign_violations(&omega, 1e-12 * scale).len();
            }
        }
        let pairs = [("cyl:a", "cyl:b"), ("cyl:a", "~cyl:a"), ("root", "cyl:ab"), ("cyl:aa,b", "cyl:ab")];
        for (a, b) in pairs {
            let lo = set(a).resolution().max(set(b).resolution()) + 1;
            for n in lo.max(2)..=12 {
                let s = symmetry_residual(&family, &set(a), &set(b), n).unwrap();
                sym = sym.max(s.residual / s.scale);
            }
        }
    }
    ok &= add <= 1e-9 && sym <= 1e-9 && sign_bad == 0;
    outcome(ok, format!("{tables} tables: additivity {add:.2e}, symmetry {sym:.2e} (×scale), {sign_bad} sign violations"))
}

fn random_simple_function(rng: &mut ChaCha8Rng) -> SimpleBoundaryFunction<f64> {
    let k = rng.gen_range(0..=3);
    let terms = qgraph_core::measure::partition(k).into_iter().map(|c| (rng.gen_range(-1.0..1.0), c)).collect();
    SimpleBoundaryFunction::new(terms).unwrap()
}

fn operator_nonnegativity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (mut neg, mut rel) = (0.0f64, 0.0f64);
    let mut count = 0;
    for alpha in [0.3, 0.5, 0.7] {
        let family = AlphaBetaSpec::<f64>::new(alpha, 2);
        for _ in 0..100 {
            let f = random_simple_function(&mut rng);
            let n = rng.gen_range(f.resolution().max(1) + 1..=8);
            let q = quadratic_form(&family, &f, n).unwrap();
            neg = neg.max(-q.form / q.scale);
            rel = rel.max((q.form - q.energy).abs() / q.energy.abs());
            count += 1;
        }
    }
    outcome(neg <= 1e-10 && rel <= 1e-8, format!("{count} functions: worst negativity {neg:.2e}, form vs energy {rel:.2e}"))
}

fn random_walk() -> Outcome {
    let mut worst = 0.0f64;
    let mut names = Vec::new();
    for (i, (name, g, start, h)) in common::walk_corpus().into_iter().enumerate() {
        let w = random_walk_oracle(&g, start, h, 100_000, 90 + i as u64).unwrap();
        for (j, &b) in g.boundary().iter().enumerate() {
            let mut data = vec![0.0; g.boundary().len()];
            data[j] = 1.0;
            let exact = solve_dirichlet(&g, &data).unwrap().value_at(start).unwrap();
            assert_eq!(w.boundary[j], b);
            let se = w.std_errors[j].max(1.0 / w.walkers as f64);
            worst = worst.max((w.probabilities[j] - exact).abs() / se);
        }
        names.push(name);
    }
    outcome(worst <= 4.0, format!("{} graphs, worst deviation {worst:.2} standard errors", names.len()))
}

fn spectral_lower_bound() -> Outcome {
    let mut ok = true;
    let mut min = f64::INFINITY;
    let mut count = 0;
    for alpha in [0.1, 0.3, 0.5, 0.7, 0.9] {
        for depth in 2..=10 {
            for kappa in [0.0, 2.0] {
                let mut spec = AlphaBetaSpec::new(alpha, depth);
                spec.kappa2_per_level = vec![kappa; depth];
                let tree = generate_ab_tree(&spec).unwrap();
                let lb = dirichlet_lower_bound(tree.graph()).unwrap();
                ok &= lb.certified_positive && lb.estimate.value > 0.0;
                min = min.min(lb.estimate.value);
                count += 1;
            }
        }
    }
    outcome(ok, format!("{count} truncations, smallest interior eigenvalue {min:.3e}"))
}

fn main() -> ExitCode {
    let corpus = random_corpus();
    let criteria: Vec<(&str, Option<Duration>, Box<dyn Fn() -> Outcome + '_>)> = vec![
        ("1 edge closed forms", Some(Duration::from_secs(10)), Box::new(edge_closed_forms)),
        ("2 finite DN structure", Some(Duration::from_secs(30)), Box::new(|| finite_dn_structure(&corpus))),
        ("3 energy and current identities", None, Box::new(|| identities(&corpus))),
        ("4 maximum principle", None, Box::new(max_principle)),
        ("5 alpha-beta closed form", Some(Duration::from_secs(20)), Box::new(closed_form_oracle)),
        ("6 exhaustion convergence", Some(Duration::from_secs(60)), Box::new(exhaustion)),
        ("7 measure structure", None, Box::new(measure_structure)),
        ("8 operator nonnegativity", None, Box::new(operator_nonnegativity)),
        ("9 random-walk oracle", Some(Duration::from_secs(60)), Box::new(random_walk)),
        ("10 spectral lower bound", None, Box::new(spectral_lower_bound)),
    ];
    let mut failed = 0;
    for (name, budget, run) in criteria {
        let start = Instant::now();
        let mut o = run();
        let took = start.elapsed();
        if let Some(b) = budget {
            if took > b {
                o.passed = false;
                o.detail.push_str(&format!("; over time budget {b:?}"));
            }
        }
        println!("{} criterion {name}: {} [{:.2}s]", if o.passed { "PASS" } else { "FAIL" }, o.detail, took.as_secs_f64());
        failed += usize::from(!o.passed);
    }
    if failed == 0 {
        println!("acceptance: all criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failed} criteria failed");
        ExitCode::FAILURE
    }
}
