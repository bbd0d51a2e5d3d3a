//! Plain-text formats.
//!
//! # Graph files
//!
//! Line oriented, `#` starts a comment, blank lines are ignored:
//!
//! ```text
//! format 1
//! vertices <count>
//! edge <a> <b> <length> <weight> <kappa2>     # one per edge, in id order
//! relative <v> <v> ...                         # optional: relative-boundary markers
//! boundary <v> <v> ...                         # must match the derived boundary
//! meta <v> [level=<k>] [address=<σ>]           # optional, any number
//! end
//! ```
//!
//! Writers emit exactly this field order with shortest round-trip float
//! formatting, so equal graphs produce byte-identical files.

use std::fmt::Write as _;

use crate::address::SigmaAddress;
use crate::dn::{DnMatrix, QHarmonicFunction};
use crate::error::{Error, Result};
use crate::graph::{Edge, GraphBuilder, MetricGraph, VertexMeta};
use crate::measure::{ConvergenceReport, MeasureTable};
use crate::scalar::Scalar;

pub const FORMAT_VERSION: u32 = 1;

fn join<D: std::fmt::Display>(items: impl IntoIterator<Item = D>) -> String {
    items.into_iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

pub fn write_graph<T: Scalar>(g: &MetricGraph<T>) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "format {FORMAT_VERSION}");
    let _ = writeln!(s, "vertices {}", g.vertex_count());
    for e in g.edges() {
        let _ = writeln!(s, "edge {} {} {} {} {}", e.a, e.b, e.length, e.weight, e.kappa2);
    }
    if !g.relative_markers().is_empty() {
        let _ = writeln!(s, "relative {}", join(g.relative_markers()));
    }
    let _ = writeln!(s, "boundary {}", join(g.boundary()));
    for v in 0..g.vertex_count() {
        let m = g.meta(v);
        if m.is_empty() {
            continue;
        }
        let _ = write!(s, "meta {v}");
        if let Some(level) = m.level {
            let _ = write!(s, " level={level}");
        }
        if let Some(a) = &m.address {
            let _ = write!(s, " address={a}");
        }
        s.push('\n');
    }
    s.push_str("end\n");
    s
}

fn parse_field<F: std::str::FromStr>(tok: Option<&str>, line: usize, what: &str) -> Result<F> {
    let tok = tok.ok_or_else(|| Error::Parse { line, msg: format!("missing {what}") })?;
    tok.parse().map_err(|_| Error::Parse { line, msg: format!("invalid {what} {tok:?}") })
}

pub fn read_graph<T: Scalar>(text: &str) -> Result<MetricGraph<T>> {
    let mut builder = GraphBuilder::<T>::new();
    let mut declared_boundary: Option<Vec<usize>> = None;
    let mut seen_format = false;
    let mut vertex_count = None;
    let mut ended = false;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if ended {
            return Err(Error::Parse { line, msg: "content after end".into() });
        }
        let mut toks = content.split_whitespace();
        let key = toks.next().expect("nonempty line");
        if !seen_format && key != "format" {
            return Err(Error::Parse { line, msg: "expected format header".into() });
        }
        match key {
            "format" => {
                let v: u32 = parse_field(toks.next(), line, "format version")?;
                if v != FORMAT_VERSION || seen_format {
                    return Err(Error::Parse { line, msg: format!("unsupported format {v}") });
                }
                seen_format = true;
            }
            "vertices" => {
                let n: usize = parse_field(toks.next(), line, "vertex count")?;
                builder.vertices(n);
                vertex_count = Some(n);
            }
            "edge" => {
                let a = parse_field(toks.next(), line, "endpoint")?;
                let b = parse_field(toks.next(), line, "endpoint")?;
                let l: T = parse_field(toks.next(), line, "length")?;
                let w: T = parse_field(toks.next(), line, "weight")?;
                let k: T = parse_field(toks.next(), line, "kappa2")?;
                builder.edge(Edge::new(a, b, l).with_weight(w).with_kappa2(k));
            }
            "relative" => {
                for t in toks.by_ref() {
                    builder.relative_boundary(parse_field(Some(t), line, "vertex")?);
                }
            }
            "boundary" => {
                let vs = toks.by_ref().map(|t| parse_field(Some(t), line, "vertex")).collect::<Result<Vec<usize>>>()?;
                declared_boundary = Some(vs);
            }
            "meta" => {
                let v: usize = parse_field(toks.next(), line, "vertex")?;
                let mut meta = VertexMeta::default();
                for t in toks.by_ref() {
                    match t.split_once('=') {
                        Some(("level", x)) => meta.level = Some(parse_field(Some(x), line, "level")?),
                        Some(("address", x)) => meta.address = Some(x.parse::<SigmaAddress>()?),
                        _ => return Err(Error::Parse { line, msg: format!("unknown meta field {t:?}") }),
                    }
                }
                builder.meta(v, meta);
            }
            "end" => ended = true,
            _ => return Err(Error::Parse { line, msg: format!("unknown record {key:?}") }),
        }
        if toks.next().is_some() {
            return Err(Error::Parse { line, msg: "trailing fields".into() });
        }
    }
    if !ended {
        return Err(Error::Parse { line: text.lines().count(), msg: "missing end".into() });
    }
    if vertex_count.is_none() {
        return Err(Error::Parse { line: 0, msg: "missing vertices record".into() });
    }
    let g = builder.build()?;
    if g.vertex_count() != vertex_count.unwrap_or(0) {
        return Err(Error::Parse { line: 0, msg: "file contains parallel edges or loops".into() });
    }
    if let Some(mut b) = declared_boundary {
        b.sort_unstable();
        let mut derived = g.boundary().to_vec();
        derived.sort_unstable();
        if b != derived {
            return Err(Error::Parse {
                line: 0,
                msg: format!("boundary list [{}] disagrees with derived boundary [{}]", join(&b), join(&derived)),
            });
        }
    }
    Ok(g)
}

/// Boundary labels followed by one row per boundary vertex.
pub fn write_dn_matrix<T: Scalar>(m: &DnMatrix<T>) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "boundary {}", join(&m.boundary));
    for (v, row) in m.boundary.iter().zip(m.rows()) {
        let _ = writeln!(s, "row {v} {}", join(row));
    }
    s
}

/// `vertex <id> <value>` records, then `edge <id> <c0> <c1>` coefficient
/// records (basis `{cosh κx, sinh(κx)/κ}` from endpoint `a`).
pub fn write_harmonic<T: Scalar>(u: &QHarmonicFunction<'_, T>) -> String {
    let mut s = String::new();
    for (v, x) in u.values().iter().enumerate() {
        let _ = writeln!(s, "vertex {v} {x}");
    }
    for (e, sol) in u.edge_solutions().iter().enumerate() {
        let _ = writeln!(s, "edge {e} {} {}", sol.c0, sol.c1);
    }
    s
}

/// Tab-separated `n, value, residual` with a header row; the first level has no residual.
pub fn write_convergence_tsv<T: Scalar>(r: &ConvergenceReport<T>) -> String {
    let mut s = String::from("n\tvalue\tresidual\n");
    for (i, (n, v)) in r.levels.iter().zip(&r.values).enumerate() {
        let res = if i == 0 { "-".to_string() } else { format!("{:e}", r.residuals[i - 1]) };
        let _ = writeln!(s, "{n}\t{v}\t{res}");
    }
    s
}

/// Whitespace-separated `(n, Λ_n)` columns.
pub fn write_plot_data<T: Scalar>(r: &ConvergenceReport<T>) -> String {
    let mut s = String::new();
    for (n, v) in r.levels.iter().zip(&r.values) {
        let _ = writeln!(s, "{n} {v}");
    }
    s
}

/// Tab-separated `cell, value, residual, converged`, one row per cell, then the total.
pub fn write_measure_tsv<T: Scalar>(t: &MeasureTable<T>) -> String {
    let mut s = String::from("cell\tvalue\tresidual\tconverged\n");
    let row = |s: &mut String, name: &str, r: &ConvergenceReport<T>| {
        let res = r.residuals.last().map_or("-".to_string(), |x| format!("{x:e}"));
        let _ = writeln!(s, "{name}\t{}\t{res}\t{}", r.limit, r.converged);
    };
    for c in &t.cells {
        row(&mut s, &c.set.to_string(), &c.report);
    }
    row(&mut s, "total", &t.total);
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::build_graph;
    use crate::tree::{generate_ab_tree, AlphaBetaSpec};

    #[test]
    fn tree_round_trip_is_byte_identical() {
        let spec = AlphaBetaSpec::<f64>::new(0.3, 4);
        let g = generate_ab_tree(&spec).unwrap().into_graph();
        let text = write_graph(&g);
        let back: MetricGraph<f64> = read_graph(&text).unwrap();
        assert_eq!(back, g);
        assert_eq!(write_graph(&back), text);
    }

    #[test]
    fn interval_file() {
        let g = build_graph(&[Edge::new(0, 1, 1.0)], &[]).unwrap();
        assert_eq!(write_graph(&g), "format 1\nvertices 2\nedge 0 1 1 1 0\nboundary 0 1\nend\n");
    }

    #[test]
    fn rejects_inconsistent_boundary() {
        let text = "format 1\nvertices 3\nedge 0 1 1 1 0\nedge 1 2 1 1 0\nboundary 0 1\nend\n";
        assert!(matches!(read_graph::<f64>(text), Err(Error::Parse { .. })));
    }

    #[test]
    fn rejects_malformed_records() {
        for text in [
            "vertices 2\nend\n",
            "format 2\nend\n",
            "format 1\nvertices 2\nedge 0 1 x 1 0\nend\n",
            "format 1\nvertices 2\nedge 0 1 1 1 0\n",
            "format 1\nvertices 2\nedge 0 1 1 1 0 9\nend\n",
            "format 1\nvertices 2\nedge 0 1 1 1 0\nmeta 0 color=red\nend\n",
        ] {
            assert!(matches!(read_graph::<f64>(text), Err(Error::Parse { .. })), "{text}");
        }
        let text = "format 1\nvertices 2\nedge 0 1 -1 1 0\nend\n";
        assert!(matches!(read_graph::<f64>(text), Err(Error::NonPositiveLength { .. })));
    }

    #[test]
    fn comments_and_blank_lines() {
        let text = "# interval\nformat 1\n\nvertices 2\nedge 0 1 2.5 1 0.25 # long\nend\n";
        let g: MetricGraph<f64> = read_graph(text).unwrap();
        assert_eq!(g.edge(0).length, 2.5);
        assert_eq!(g.edge(0).kappa2, 0.25);
    }
}
