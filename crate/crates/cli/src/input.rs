//! Reading instance files and turning them into problems.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use clap::ValueEnum;
use lrsdp::problems::{
    build_cutnorm, build_lovasz_theta, build_matrix_completion, build_maxcut, build_minbisection, parse_gset,
    parse_matrixmarket, MatrixMarket, MmSymmetry,
};
use lrsdp::{Graph, Problem, RectMatrix};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum Format {
    /// MatrixMarket if the file starts with a `%%MatrixMarket` banner, Gset otherwise.
    #[default]
    Auto,
    Gset,
    Mtx,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Maxcut,
    Minbisect,
    Theta,
    Cutnorm,
    Matcomp,
}

impl Kind {
    pub const ALL: [Kind; 5] = [
        Kind::Maxcut,
        Kind::Minbisect,
        Kind::Theta,
        Kind::Cutnorm,
        Kind::Matcomp,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Kind::Maxcut => "maxcut",
            Kind::Minbisect => "minbisect",
            Kind::Theta => "theta",
            Kind::Cutnorm => "cutnorm",
            Kind::Matcomp => "matcomp",
        }
    }

    /// Whether hyperplane rounding applies, and in which direction a
    /// rounded value improves (`Some(true)` = larger is better).
    pub fn rounding_maximizes(self) -> Option<bool> {
        match self {
            Kind::Maxcut | Kind::Cutnorm => Some(true),
            Kind::Minbisect => Some(false),
            Kind::Theta | Kind::Matcomp => None,
        }
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Kind {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        Kind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| CliError::Invalid(format!("unknown problem kind {s:?}")))
    }
}

/// What the problem was built from; rounding needs it.
#[derive(Debug, Clone)]
pub enum Source {
    Graph(Graph),
    Matrix(RectMatrix),
    Completion { rows: usize, cols: usize },
}

#[derive(Debug, Clone)]
pub struct Instance {
    pub kind: Kind,
    pub problem: Problem,
    pub source: Source,
}

enum Parsed {
    Gset(Graph),
    Mtx(MatrixMarket),
}

fn read(path: &Path, format: Format) -> Result<Parsed> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let format = match format {
        Format::Auto if text.trim_start().starts_with("%%MatrixMarket") => Format::Mtx,
        Format::Auto => Format::Gset,
        f => f,
    };
    Ok(match format {
        Format::Mtx => Parsed::Mtx(parse_matrixmarket(&text)?),
        _ => Parsed::Gset(parse_gset(&text)?),
    })
}

fn graph_of(parsed: Parsed) -> Result<Graph> {
    match parsed {
        Parsed::Gset(g) => Ok(g),
        Parsed::Mtx(mm) => Ok(mm.to_graph()?),
    }
}

/// Weighted adjacency matrix, both triangles filled.
fn adjacency(g: &Graph) -> RectMatrix {
    let n = g.num_vertices();
    let mut a = RectMatrix::zeros(n, n);
    for &(u, v, w) in g.edges() {
        a.set(u, v, a.get(u, v) + w);
        if u != v {
            a.set(v, u, a.get(v, u) + w);
        }
    }
    a
}

/// Observed entries, with symmetric storage expanded to both triangles.
fn observations(mm: &MatrixMarket) -> Vec<(usize, usize, f64)> {
    let mut obs = mm.entries.clone();
    if mm.symmetry == MmSymmetry::Symmetric {
        obs.extend(
            mm.entries
                .iter()
                .filter(|e| e.0 != e.1)
                .map(|&(i, j, v)| (j, i, v)),
        );
    }
    obs
}

/// Loads `path` and builds the `kind` relaxation. `abs_weights` applies to
/// graph inputs only.
pub fn load(
    kind: Kind,
    path: &Path,
    format: Format,
    abs_weights: bool,
    trace_bound: Option<f64>,
) -> Result<Instance> {
    let parsed = read(path, format)?;
    let (problem, source) = match kind {
        Kind::Maxcut | Kind::Minbisect | Kind::Theta => {
            let mut g = graph_of(parsed)?;
            if abs_weights {
                g = g.with_abs_weights();
            }
            let p = match kind {
                Kind::Maxcut => build_maxcut(&g)?,
                Kind::Minbisect => build_minbisection(&g)?,
                _ => build_lovasz_theta(&g)?,
            };
            (p, Source::Graph(g))
        }
        Kind::Cutnorm => {
            let a = match parsed {
                Parsed::Mtx(mm) => mm.to_dense(),
                Parsed::Gset(g) => adjacency(&if abs_weights { g.with_abs_weights() } else { g }),
            };
            (build_cutnorm(&a)?, Source::Matrix(a))
        }
        Kind::Matcomp => {
            let Parsed::Mtx(mm) = parsed else {
                return Err(CliError::Invalid(
                    "matrix completion needs a MatrixMarket file of observed entries".into(),
                ));
            };
            let p = build_matrix_completion(mm.rows, mm.cols, &observations(&mm))?;
            (
                p,
                Source::Completion {
                    rows: mm.rows,
                    cols: mm.cols,
                },
            )
        }
    };
    let problem = match trace_bound {
        Some(alpha) => problem.with_trace_bound(alpha)?,
        None => problem,
    };
    Ok(Instance {
        kind,
        problem,
        source,
    })
}
