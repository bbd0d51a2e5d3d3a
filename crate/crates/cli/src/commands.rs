use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use qgraph_core::dn::{self, DirichletSolver, MAX_PRINCIPLE_SLACK};
use qgraph_core::graph::{graph_report, MetricGraph};
use qgraph_core::io;
use qgraph_core::measure::{self, ExhaustionOptions, SimpleBoundaryFunction};
use qgraph_core::tree::{self, AbTree, AlphaBetaSpec};
use qgraph_core::ClopenSet;

use crate::config::{ExhaustionArgs, FileConfig, RunConfig, Source, TreeArgs, DEFAULT_DEPTH};
use crate::error::{CliError, Result};
use crate::{Cli, Command};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok,
    NotConverged,
}

impl Status {
    pub fn exit_code(self) -> ExitCode {
        match self {
            Status::Ok => ExitCode::SUCCESS,
            Status::NotConverged => ExitCode::from(3),
        }
    }
}

pub fn parse_shortcut(s: &str) -> std::result::Result<(usize, usize, f64), String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [u, v, l] = parts[..] else {
        return Err(format!("expected U:V:LENGTH, got {s:?}"));
    };
    let bad = |what: &str| format!("bad {what} in shortcut {s:?}");
    Ok((u.parse().map_err(|_| bad("vertex"))?, v.parse().map_err(|_| bad("vertex"))?, l.parse().map_err(|_| bad("length"))?))
}

pub fn run(cli: Cli) -> Result<Status> {
    let file = FileConfig::load(cli.config.as_deref())?;
    match cli.command {
        Command::Generate { tree, shortcuts, sibling_shortcuts, seed, output } => {
            generate(&tree, shortcuts, sibling_shortcuts, seed, output, &file)
        }
        Command::Solve { graph, tree, values, f, range, no_range_check, output } => {
            let rc = RunConfig::resolve(graph, &tree, &ExhaustionArgs::default(), None, output, &file)?;
            solve(&rc, values, f.as_deref(), range.as_deref(), no_range_check)
        }
        Command::Dn { graph, tree, output } => {
            let rc = RunConfig::resolve(graph, &tree, &ExhaustionArgs::default(), None, output, &file)?;
            dn_cmd(&rc)
        }
        Command::Measure { tree, f, partition_depth, exhaustion, output } => {
            let rc = RunConfig::resolve(None, &tree, &exhaustion, None, output, &file)?;
            measure_cmd(&rc, &f, partition_depth, exhaustion.full)
        }
        Command::Converge { tree, f, e, exhaustion, plot_data, output } => {
            let rc = RunConfig::resolve(None, &tree, &exhaustion, None, output, &file)?;
            converge(&rc, &f, &e, exhaustion.full, plot_data)
        }
    }
}

fn emit(output: Option<&Path>, text: &str) -> Result<()> {
    match output {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::io(p, e)),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes()).map_err(|e| CliError::io(Path::new("<stdout>"), e))
        }
    }
}

fn read_graph_file(path: &Path) -> Result<MetricGraph<f64>> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    Ok(io::read_graph(&text)?)
}

/// The graph to work on, plus the tree when it came from a family.
fn load(rc: &RunConfig) -> Result<(MetricGraph<f64>, Option<AbTree<f64>>)> {
    match &rc.source {
        Source::GraphFile(p) => Ok((read_graph_file(p)?, None)),
        Source::Family(spec) => {
            let t = tree::generate_ab_tree(spec)?;
            Ok((t.graph().clone(), Some(t)))
        }
    }
}

fn family(rc: &RunConfig) -> Result<&AlphaBetaSpec<f64>> {
    match &rc.source {
        Source::Family(spec) => Ok(spec),
        Source::GraphFile(_) => Err(CliError::Usage("this command needs a tree family (--alpha)".into())),
    }
}

fn exhaustion_options(rc: &RunConfig, full: bool) -> ExhaustionOptions<f64> {
    let mut opts = ExhaustionOptions::new(rc.tol, rc.max_depth);
    opts.n_min = rc.min_depth;
    if full {
        opts = opts.full();
    }
    opts
}

fn parse_function(s: &str) -> Result<SimpleBoundaryFunction<f64>> {
    Ok(s.parse()?)
}

/// `Ω` when `f = 1_Ω`.
fn indicator_set(f: &SimpleBoundaryFunction<f64>) -> Option<&ClopenSet> {
    match f.terms() {
        [(c, set)] if *c == 1.0 => Some(set),
        _ => None,
    }
}

fn generate(
    args: &TreeArgs,
    mut shortcuts: Vec<(usize, usize, f64)>,
    sibling_scale: Option<f64>,
    seed: Option<u64>,
    output: Option<PathBuf>,
    file: &FileConfig,
) -> Result<Status> {
    let spec = args
        .resolve(&file.tree, DEFAULT_DEPTH)?
        .ok_or_else(|| CliError::Usage("generate needs --alpha".into()))?;
    let t = tree::generate_ab_tree(&spec)?;
    if shortcuts.is_empty() {
        shortcuts = file.tree.shortcuts.clone().unwrap_or_default();
    }
    if let Some(scale) = sibling_scale {
        shortcuts.extend(tree::sibling_shortcuts(spec.depth, scale));
    }
    let seed = seed.or(file.run.seed).unwrap_or(0);
    let (graph, comparability) = if shortcuts.is_empty() {
        (t.into_graph(), None)
    } else {
        let (g, r) = tree::add_shortcut_edges(t.graph(), &shortcuts, seed)?;
        (g, Some(r))
    };

    let r = graph_report(&graph);
    let mut report = String::new();
    let _ = writeln!(report, "vertices {}", r.vertex_count);
    let _ = writeln!(report, "edges {}", r.edge_count);
    let _ = writeln!(report, "boundary {}", r.boundary_count);
    let _ = writeln!(report, "connected {}", r.connected);
    let _ = writeln!(report, "total_weight {}", r.total_weight);
    let _ = writeln!(report, "total_volume {}", r.total_volume);
    let _ = writeln!(report, "diameter_bound {}", r.diameter_bound);
    let _ = writeln!(report, "qbnd {}", r.qbnd);
    if let Some(c) = comparability {
        let _ = writeln!(report, "shortcuts {}", shortcuts.len());
        let _ = writeln!(report, "lengths_nonincreasing {}", c.lengths_nonincreasing);
        let _ = writeln!(report, "length_decay {}", c.length_decay);
        let _ = writeln!(report, "comparability_ratio {}", c.ratio);
        let _ = writeln!(report, "shortcut_metric_dominated {}", c.shortcut_metric_dominated);
        let _ = writeln!(report, "sampled_pairs {}", c.sampled_pairs);
    }

    let text = io::write_graph(&graph);
    match output {
        Some(p) => {
            emit(Some(&p), &text)?;
            emit(None, &report)?;
        }
        None => {
            emit(None, &text)?;
            eprint!("{report}");
        }
    }
    Ok(Status::Ok)
}

fn parse_range(s: &str) -> Result<(f64, f64)> {
    let bad = || CliError::Usage(format!("expected --range LO:HI, got {s:?}"));
    let (lo, hi) = s.split_once(':').ok_or_else(bad)?;
    let (lo, hi): (f64, f64) = (lo.trim().parse().map_err(|_| bad())?, hi.trim().parse().map_err(|_| bad())?);
    if !(lo <= hi) {
        return Err(bad());
    }
    Ok((lo, hi))
}

fn solve(rc: &RunConfig, values: Option<Vec<f64>>, f: Option<&str>, range: Option<&str>, no_range_check: bool) -> Result<Status> {
    let (graph, tree) = load(rc)?;
    let data = match (values, f, &tree) {
        (Some(_), Some(_), _) => return Err(CliError::Usage("give either --values or --F, not both".into())),
        (Some(v), None, _) => v,
        (None, Some(f), Some(t)) => parse_function(f)?.boundary_data(t)?,
        (None, Some(_), None) => return Err(CliError::Usage("--F needs a tree family (--alpha)".into())),
        (None, None, _) => return Err(CliError::Usage("no boundary data: give --values or --F".into())),
    };
    let range = range.map(parse_range).transpose()?;
    if let (Some((lo, hi)), false) = (range, no_range_check) {
        if let Some((i, x)) = data.iter().enumerate().find(|(_, &x)| !(lo..=hi).contains(&x)) {
            let v = graph.boundary().get(i).copied().unwrap_or(i);
            return Err(CliError::Usage(format!("boundary value {x} at vertex {v} outside declared range [{lo}, {hi}]")));
        }
    }

    let solver = DirichletSolver::new(&graph)?;
    let u = solver.solve(&data)?;
    let energy = dn::energy_identity(&u);
    let current = dn::current_balance(&u);
    let mp = dn::max_principle_check(&u);

    let mut s = String::new();
    let _ = writeln!(s, "vertices {}", graph.vertex_count());
    let _ = writeln!(s, "boundary {}", graph.boundary().len());
    let _ = writeln!(s, "energy {}", u.energy());
    let _ = writeln!(s, "energy_identity_residual {:e}", energy.relative);
    let _ = writeln!(s, "current_balance_residual {:e}", current.relative);
    let _ = writeln!(s, "kirchhoff_residual {:e}", u.kirchhoff_residual());
    let _ = writeln!(s, "continuity_residual {:e}", u.continuity_residual());
    if no_range_check {
        let _ = writeln!(s, "range_check disabled");
    } else if let Some((lo, hi)) = range {
        let _ = writeln!(s, "range_check [{lo}, {hi}] ok");
    }
    let verdict = if mp.skipped {
        "skipped (constant data)"
    } else if mp.passed() {
        "pass"
    } else {
        "FAIL"
    };
    let _ = writeln!(s, "max_principle {verdict}");
    let _ = writeln!(s, "max_principle_bounds [{}, {}]", mp.lower + 0.0, mp.upper + 0.0);
    let _ = writeln!(s, "max_principle_checked {}", mp.checked);
    let _ = writeln!(s, "max_principle_violations {}", mp.violations.len());
    let _ = writeln!(s, "max_principle_touching {}", mp.touching);
    let _ = writeln!(s, "max_principle_slack {MAX_PRINCIPLE_SLACK:e}");

    let records = io::write_harmonic(&u);
    match &rc.output {
        Some(p) => {
            emit(Some(p), &records)?;
            emit(None, &s)?;
        }
        None => {
            s.push('\n');
            s.push_str(&records);
            emit(None, &s)?;
        }
    }
    Ok(Status::Ok)
}

fn dn_cmd(rc: &RunConfig) -> Result<Status> {
    let (graph, _) = load(rc)?;
    let m = dn::dn_matrix(&graph)?;
    let rows: Vec<String> = m
        .rows()
        .iter()
        .map(|r| format!("[{}]", r.iter().map(f64::to_string).collect::<Vec<_>>().join(",")))
        .collect();
    let min_eig = m.eigenvalues().into_iter().fold(f64::INFINITY, f64::min);

    let mut s = format!("[{}]\n", rows.join(","));
    let labeled = io::write_dn_matrix(&m);
    if rc.output.is_none() {
        s.push_str(&labeled);
    }
    let _ = writeln!(s, "symmetry_residual {:e}", m.symmetry_residual());
    if graph.has_zero_potential() {
        let _ = writeln!(s, "constant_residual {:e}", m.constant_residual());
    }
    let _ = writeln!(s, "min_eigenvalue {min_eig}");
    if let Some(p) = &rc.output {
        emit(Some(p), &labeled)?;
    }
    emit(None, &s)?;
    Ok(Status::Ok)
}

fn measure_cmd(rc: &RunConfig, f: &str, k: usize, full: bool) -> Result<Status> {
    let spec = family(rc)?;
    let f = parse_function(f)?;
    let opts = exhaustion_options(rc, full);
    let table = measure::measure_table(spec, &f, k, &opts)?;

    let mut s = String::new();
    let _ = writeln!(s, "# converged {}", table.converged());
    let _ = writeln!(s, "# additivity_residual {:e}", table.additivity_residual);
    let _ = writeln!(s, "# scale {}", table.scale);
    let _ = writeln!(s, "# positive_part {}", table.positive_part);
    let _ = writeln!(s, "# negative_part {}", table.negative_part);
    let _ = writeln!(s, "# signed_total {}", table.signed_total);
    if let Some(omega) = indicator_set(&f) {
        let slack = rc.tol;
        let _ = writeln!(s, "# sign_violations {}", table.sign_violations(omega, slack).len());
    }
    let tsv = io::write_measure_tsv(&table);
    match &rc.output {
        Some(p) => emit(Some(p), &tsv)?,
        None => emit(None, &tsv)?,
    }
    emit(None, &s)?;
    Ok(if table.converged() { Status::Ok } else { Status::NotConverged })
}

fn converge(rc: &RunConfig, f: &str, e: &str, full: bool, plot_data: bool) -> Result<Status> {
    let spec = family(rc)?;
    let f = parse_function(f)?;
    let e: ClopenSet = e.parse()?;
    let opts = exhaustion_options(rc, full);
    let report = measure::dn_function(spec, &f, &e, &opts)?;

    let body = if plot_data { io::write_plot_data(&report) } else { io::write_convergence_tsv(&report) };
    let mut s = String::new();
    let _ = writeln!(s, "# converged {}", report.converged);
    let _ = writeln!(s, "# limit {}", report.limit);
    match report.extrapolated {
        Some(x) => {
            let _ = writeln!(s, "# extrapolated {x}");
        }
        None => {
            let _ = writeln!(s, "# extrapolated -");
        }
    }
    let _ = writeln!(s, "# tolerance {:e}", report.tolerance);
    if let (Some(omega), Some(&n)) = (indicator_set(&f), report.levels.last()) {
        let sym = measure::symmetry_residual(spec, omega, &e, n)?;
        let _ = writeln!(s, "# symmetry_residual {:e} (n = {n})", sym.residual);
    }
    emit(rc.output.as_deref(), &body)?;
    emit(None, &s)?;
    Ok(if report.converged { Status::Ok } else { Status::NotConverged })
}
