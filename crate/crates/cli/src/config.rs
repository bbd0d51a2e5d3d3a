//! Optional TOML run configuration. Command-line flags override every field.
//!
//! ```toml
//! [tree]
//! alpha = 0.5
//! depth = 6
//! root_length = 1.0
//! weight_ratio = 0.3333333333333333
//! kappa2_per_level = [0.0, 1.0]
//! shortcuts = [[2, 3, 0.25]]
//!
//! [run]
//! tol = 1e-6
//! min_depth = 2
//! max_depth = 12
//! seed = 0
//! ```

use std::path::{Path, PathBuf};

use qgraph_core::tree::AlphaBetaSpec;
use serde::Deserialize;

use crate::error::{CliError, Result};

#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    #[serde(default)]
    pub tree: TreeSection,
    #[serde(default)]
    pub run: RunSection,
}

#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TreeSection {
    pub alpha: Option<f64>,
    pub depth: Option<usize>,
    pub root_length: Option<f64>,
    pub weight_ratio: Option<f64>,
    pub kappa2_per_level: Option<Vec<f64>>,
    pub shortcuts: Option<Vec<(usize, usize, f64)>>,
}

#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub tol: Option<f64>,
    pub min_depth: Option<usize>,
    pub max_depth: Option<usize>,
    pub seed: Option<u64>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }
}

/// Tree family flags shared by every subcommand that can build an α–β truncation.
#[derive(Debug, Default, Clone, clap::Args)]
pub struct TreeArgs {
    /// α-branch length ratio, in (0, 1).
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Truncation depth (number of edge levels).
    #[arg(long)]
    pub depth: Option<usize>,
    #[arg(long)]
    pub root_length: Option<f64>,
    /// Edge weight at level k is weight_ratio^k.
    #[arg(long)]
    pub weight_ratio: Option<f64>,
    /// Comma-separated κ² per level, starting at level 1; missing levels are 0.
    #[arg(long, value_delimiter = ',')]
    pub kappa2: Option<Vec<f64>>,
}

impl TreeArgs {
    pub fn has_any(&self) -> bool {
        self.alpha.is_some()
            || self.depth.is_some()
            || self.root_length.is_some()
            || self.weight_ratio.is_some()
            || self.kappa2.is_some()
    }

    /// Flags over config over defaults; `None` when no α is given anywhere.
    pub fn resolve(&self, file: &TreeSection, default_depth: usize) -> Result<Option<AlphaBetaSpec<f64>>> {
        let Some(alpha) = self.alpha.or(file.alpha) else {
            if self.has_any() {
                return Err(CliError::Usage("tree options need --alpha".into()));
            }
            return Ok(None);
        };
        let depth = self.depth.or(file.depth).unwrap_or(default_depth);
        let mut spec = AlphaBetaSpec::new(alpha, depth);
        if let Some(l) = self.root_length.or(file.root_length) {
            spec.root_length = l;
        }
        if let Some(r) = self.weight_ratio.or(file.weight_ratio) {
            spec.weight_ratio = r;
        }
        if let Some(k) = self.kappa2.clone().or_else(|| file.kappa2_per_level.clone()) {
            spec.kappa2_per_level = k;
        }
        spec.validate()?;
        Ok(Some(spec))
    }
}

/// Exhaustion flags for `measure` and `converge`.
#[derive(Debug, Default, Clone, clap::Args)]
pub struct ExhaustionArgs {
    /// Convergence threshold on |Λ_n − Λ_{n−1}|.
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub min_depth: Option<usize>,
    #[arg(long)]
    pub max_depth: Option<usize>,
    /// Keep going to --max-depth after convergence is declared.
    #[arg(long)]
    pub full: bool,
}

/// Fully resolved settings for one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub source: Source,
    pub tol: f64,
    pub min_depth: usize,
    pub max_depth: usize,
    pub seed: u64,
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Source {
    GraphFile(PathBuf),
    Family(AlphaBetaSpec<f64>),
}

pub const DEFAULT_TOL: f64 = 1e-6;
pub const DEFAULT_MAX_DEPTH: usize = 12;
pub const DEFAULT_DEPTH: usize = 4;

impl RunConfig {
    pub fn resolve(
        graph: Option<PathBuf>,
        tree: &TreeArgs,
        ex: &ExhaustionArgs,
        seed: Option<u64>,
        output: Option<PathBuf>,
        file: &FileConfig,
    ) -> Result<Self> {
        let spec = tree.resolve(&file.tree, DEFAULT_DEPTH)?;
        let source = match (graph, spec) {
            (Some(_), Some(_)) => return Err(CliError::Usage("give either --graph or a tree family, not both".into())),
            (Some(p), None) => Source::GraphFile(p),
            (None, Some(s)) => Source::Family(s),
            (None, None) => return Err(CliError::Usage("no input: give --graph FILE or --alpha".into())),
        };
        let tol = ex.tol.or(file.run.tol).unwrap_or(DEFAULT_TOL);
        if !(tol > 0.0) {
            return Err(CliError::Usage(format!("tolerance must be positive, got {tol}")));
        }
        let min_depth = ex.min_depth.or(file.run.min_depth).unwrap_or(2);
        let max_depth = ex.max_depth.or(file.run.max_depth).unwrap_or(DEFAULT_MAX_DEPTH);
        if min_depth > max_depth {
            return Err(CliError::Usage(format!("empty depth range {min_depth}..={max_depth}")));
        }
        Ok(Self { source, tol, min_depth, max_depth, seed: seed.or(file.run.seed).unwrap_or(0), output })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file() {
        let file: FileConfig = toml::from_str("[tree]\nalpha = 0.3\ndepth = 7\n[run]\ntol = 1e-3\n").unwrap();
        let tree = TreeArgs { depth: Some(5), ..Default::default() };
        let rc = RunConfig::resolve(None, &tree, &ExhaustionArgs::default(), None, None, &file).unwrap();
        let Source::Family(spec) = rc.source else { panic!("expected a family") };
        assert_eq!((spec.alpha, spec.depth), (0.3, 5));
        assert_eq!(rc.tol, 1e-3);
    }

    #[test]
    fn exactly_one_source() {
        let file = FileConfig::default();
        let tree = TreeArgs { alpha: Some(0.5), ..Default::default() };
        let ex = ExhaustionArgs::default();
        assert!(RunConfig::resolve(Some("g.txt".into()), &tree, &ex, None, None, &file).is_err());
        assert!(RunConfig::resolve(None, &TreeArgs::default(), &ex, None, None, &file).is_err());
    }

    #[test]
    fn rejects_bad_ranges() {
        let file = FileConfig::default();
        let tree = TreeArgs { alpha: Some(0.5), ..Default::default() };
        let ex = ExhaustionArgs { tol: Some(0.0), ..Default::default() };
        assert!(RunConfig::resolve(None, &tree, &ex, None, None, &file).is_err());
        let ex = ExhaustionArgs { min_depth: Some(9), max_depth: Some(4), ..Default::default() };
        assert!(RunConfig::resolve(None, &tree, &ex, None, None, &file).is_err());
        assert!(toml::from_str::<FileConfig>("[tree]\ncolour = 1\n").is_err());
    }
}
