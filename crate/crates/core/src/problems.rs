//! Problem builders (Max Cut, Minimum Bisection, Lovasz theta, cut norm,
//! matrix completion) and graph/matrix file ingestion.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::{RectMatrix, SparseSym};
use crate::model::{Constraint, Cost, Problem};

/// Undirected weighted graph with edges stored once as `(u, v, w)`, `u < v`.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize, f64)>,
}

impl Graph {
    /// Normalizes an edge list: orients each edge as `u < v`, drops
    /// self-loops and sums parallel edges.
    pub fn new<I>(n: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        let mut merged: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for (u, v, w) in edges {
            if u >= n || v >= n {
                return Err(Error::IndexOutOfRange { row: u, col: v, n });
            }
            if !w.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "non-finite weight on edge ({u}, {v})"
                )));
            }
            if u == v {
                continue;
            }
            *merged.entry((u.min(v), u.max(v))).or_insert(0.0) += w;
        }
        Ok(Self {
            n,
            edges: merged.into_iter().map(|((u, v), w)| (u, v, w)).collect(),
        })
    }

    pub fn empty(n: usize) -> Self {
        Self { n, edges: Vec::new() }
    }

    pub fn complete(n: usize) -> Self {
        let edges = (0..n)
            .flat_map(|u| (u + 1..n).map(move |v| (u, v, 1.0)))
            .collect();
        Self { n, edges }
    }

    pub fn cycle(n: usize) -> Self {
        Self::new(n, (0..n).map(|u| (u, (u + 1) % n, 1.0))).expect("valid cycle")
    }

    pub fn num_vertices(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize, f64)] {
        &self.edges
    }

    /// Replaces every weight by its absolute value.
    pub fn with_abs_weights(mut self) -> Self {
        self.edges.iter_mut().for_each(|e| e.2 = e.2.abs());
        self
    }

    /// Adds isolated vertices up to `n`.
    pub fn padded_to(mut self, n: usize) -> Self {
        self.n = self.n.max(n);
        self
    }

    pub fn laplacian(&self) -> SparseSym {
        let mut t = Vec::with_capacity(self.edges.len() * 3);
        for &(u, v, w) in &self.edges {
            t.push((u, u, w));
            t.push((v, v, w));
            t.push((u, v, -w));
        }
        SparseSym::from_triplets(self.n, t).expect("edges validated on construction")
    }

    /// Weight of edges crossing the partition given by `side`.
    pub fn cut_value(&self, side: &[bool]) -> f64 {
        self.edges
            .iter()
            .filter(|&&(u, v, _)| side[u] != side[v])
            .map(|e| e.2)
            .sum()
    }
}

fn scaled(s: &SparseSym, k: f64) -> SparseSym {
    SparseSym::from_triplets(s.dim(), s.entries().iter().map(|&(i, j, v)| (i, j, k * v)))
        .expect("same pattern")
}

fn diag_constraints(n: usize) -> Vec<Constraint> {
    (0..n).map(|i| Constraint::diag(i, 1.0)).collect()
}

/// `max (1/4)<L, X>  s.t. diag(X) = 1`, trace bound `n`.
pub fn build_maxcut(g: &Graph) -> Result<Problem> {
    let n = g.num_vertices();
    if n == 0 {
        return Err(Error::InvalidInput("max cut needs at least one vertex".into()));
    }
    let cost = Cost::Sparse(scaled(&g.laplacian(), 0.25));
    Problem::maximize(cost, diag_constraints(n), n as f64)
}

/// `min (1/4)<L, X>  s.t. diag(X) = 1, 1^T X 1 = 0`, trace bound `n`.
/// Odd graphs get one isolated dummy vertex.
pub fn build_minbisection(g: &Graph) -> Result<Problem> {
    if g.num_vertices() < 2 {
        return Err(Error::InvalidInput(
            "bisection needs at least two vertices".into(),
        ));
    }
    let n = g.num_vertices() + g.num_vertices() % 2;
    let padded = g.clone().padded_to(n);
    let mut cons = diag_constraints(n);
    cons.push(Constraint::rank_one(vec![1.0; n], 0.0));
    Problem::minimize(Cost::Sparse(scaled(&padded.laplacian(), 0.25)), cons, n as f64)
}

/// `max 1^T X 1  s.t. Tr(X) = 1, X_uv = 0 for uv in E`, trace bound 1.
pub fn build_lovasz_theta(g: &Graph) -> Result<Problem> {
    let n = g.num_vertices();
    if n == 0 {
        return Err(Error::InvalidInput("theta needs at least one vertex".into()));
    }
    let mut cons = Vec::with_capacity(g.edges().len() + 1);
    cons.push(Constraint::trace(1.0));
    cons.extend(
        g.edges()
            .iter()
            .map(|&(u, v, _)| Constraint::unit_off_diag(u, v, 0.0)),
    );
    let cost = Cost::RankOne {
        weight: 1.0,
        vector: vec![1.0; n],
    };
    Problem::maximize(cost, cons, 1.0)
}

/// `max (1/2)<[0 A; A^T 0], X>  s.t. diag(X) = 1` over `(m + n)`-square
/// `X`, trace bound `m + n`.
pub fn build_cutnorm(a: &RectMatrix) -> Result<Problem> {
    let (m, n) = (a.rows(), a.cols());
    if m == 0 || n == 0 {
        return Err(Error::InvalidInput("cut norm needs a non-empty matrix".into()));
    }
    // (1/2)<[0 A; A^T 0], X> = sum_ij A_ij X_{i, m+j}
    let mut t = Vec::new();
    for i in 0..m {
        for j in 0..n {
            let v = a.get(i, j);
            if v != 0.0 {
                t.push((i, m + j, 0.5 * v));
            }
        }
    }
    let cost = Cost::Sparse(SparseSym::from_triplets(m + n, t)?);
    Problem::maximize(cost, diag_constraints(m + n), (m + n) as f64)
}

/// Nuclear-norm completion of an `n x p` matrix from observed entries:
/// `min (1/2) Tr(X)  s.t. X_{i, n+j} = M_ij` over the `(n+p)`-square
/// block variable, trace bound `2 sqrt(min(n, p)) ||M_Omega||_F`.
pub fn build_matrix_completion(n: usize, p: usize, observed: &[(usize, usize, f64)]) -> Result<Problem> {
    if observed.is_empty() {
        return Err(Error::InvalidInput("matrix completion needs observations".into()));
    }
    let mut seen = HashSet::with_capacity(observed.len());
    let mut cons = Vec::with_capacity(observed.len());
    let mut fro_sq = 0.0;
    for &(i, j, v) in observed {
        if i >= n || j >= p {
            return Err(Error::IndexOutOfRange {
                row: i,
                col: j,
                n: n.max(p),
            });
        }
        if !seen.insert((i, j)) {
            return Err(Error::InvalidInput(format!("duplicate observation ({i}, {j})")));
        }
        fro_sq += v * v;
        cons.push(Constraint::unit_off_diag(i, n + j, v));
    }
    let alpha = 2.0 * (n.min(p) as f64).sqrt() * fro_sq.sqrt();
    if !(alpha > 0.0) {
        return Err(Error::InvalidInput("all observed entries are zero".into()));
    }
    let cost = Cost::Sparse(SparseSym::scaled_identity(n + p, 0.5));
    Problem::minimize(cost, cons, alpha)
}

fn read_file(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn parse_field<T: std::str::FromStr>(tok: Option<&str>, line: usize, what: &str) -> Result<T> {
    let tok = tok.ok_or_else(|| Error::Parse {
        line,
        message: format!("missing {what}"),
    })?;
    tok.parse().map_err(|_| Error::Parse {
        line,
        message: format!("invalid {what} {tok:?}"),
    })
}

fn one_based(idx: usize, n: usize, line: usize) -> Result<usize> {
    if idx == 0 || idx > n {
        return Err(Error::Parse {
            line,
            message: format!("vertex index {idx} outside 1..={n}"),
        });
    }
    Ok(idx - 1)
}

/// Gset text: a header `n m` followed by `m` lines `u v w` (1-indexed).
/// A missing weight is read as 1.
pub fn parse_gset(text: &str) -> Result<Graph> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());
    let (hline, header) = lines.next().ok_or(Error::Parse {
        line: 1,
        message: "empty file".into(),
    })?;
    let mut tok = header.split_whitespace();
    let n: usize = parse_field(tok.next(), hline, "vertex count")?;
    let m: usize = parse_field(tok.next(), hline, "edge count")?;
    if tok.next().is_some() {
        return Err(Error::Parse {
            line: hline,
            message: "header has extra fields".into(),
        });
    }
    let mut edges = Vec::with_capacity(m);
    for (lno, line) in lines {
        let mut tok = line.split_whitespace();
        let u = one_based(parse_field(tok.next(), lno, "source vertex")?, n, lno)?;
        let v = one_based(parse_field(tok.next(), lno, "target vertex")?, n, lno)?;
        let w: f64 = match tok.next() {
            Some(t) => parse_field(Some(t), lno, "weight")?,
            None => 1.0,
        };
        if tok.next().is_some() {
            return Err(Error::Parse {
                line: lno,
                message: "edge line has extra fields".into(),
            });
        }
        edges.push((u, v, w));
    }
    if edges.len() != m {
        return Err(Error::Parse {
            line: hline,
            message: format!("header announces {m} edges, found {}", edges.len()),
        });
    }
    Graph::new(n, edges)
}

pub fn load_gset(path: impl AsRef<Path>) -> Result<Graph> {
    parse_gset(&read_file(path.as_ref())?)
}

/// Writes `g` in Gset format.
pub fn write_gset(g: &Graph) -> String {
    let mut out = format!("{} {}\n", g.num_vertices(), g.edges().len());
    for &(u, v, w) in g.edges() {
        let _ = writeln!(out, "{} {} {}", u + 1, v + 1, w);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MmSymmetry {
    General,
    Symmetric,
}

/// Coordinate-format MatrixMarket contents (0-indexed entries).
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixMarket {
    pub rows: usize,
    pub cols: usize,
    pub symmetry: MmSymmetry,
    pub entries: Vec<(usize, usize, f64)>,
}

/// Parses `%%MatrixMarket matrix coordinate {real|integer|pattern} {general|symmetric}`.
pub fn parse_matrixmarket(text: &str) -> Result<MatrixMarket> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    let (_, banner) = lines.next().ok_or(Error::Parse {
        line: 1,
        message: "empty file".into(),
    })?;
    let fields: Vec<String> = banner.split_whitespace().map(str::to_lowercase).collect();
    if fields.len() != 5 || fields[0] != "%%matrixmarket" || fields[1] != "matrix" {
        return Err(Error::Parse {
            line: 1,
            message: format!("unrecognized banner {banner:?}"),
        });
    }
    if fields[2] != "coordinate" {
        return Err(Error::Parse {
            line: 1,
            message: format!("only coordinate format is supported, got {:?}", fields[2]),
        });
    }
    let pattern = match fields[3].as_str() {
        "real" | "integer" => false,
        "pattern" => true,
        other => {
            return Err(Error::Parse {
                line: 1,
                message: format!("unsupported field type {other:?}"),
            })
        }
    };
    let symmetry = match fields[4].as_str() {
        "general" => MmSymmetry::General,
        "symmetric" => MmSymmetry::Symmetric,
        other => {
            return Err(Error::Parse {
                line: 1,
                message: format!("unsupported symmetry {other:?}"),
            })
        }
    };

    let mut data = lines.filter(|(_, l)| !l.is_empty() && !l.starts_with('%'));
    let (sline, size) = data.next().ok_or(Error::Parse {
        line: 1,
        message: "missing size line".into(),
    })?;
    let mut tok = size.split_whitespace();
    let rows: usize = parse_field(tok.next(), sline, "row count")?;
    let cols: usize = parse_field(tok.next(), sline, "column count")?;
    let nnz: usize = parse_field(tok.next(), sline, "entry count")?;
    if symmetry == MmSymmetry::Symmetric && rows != cols {
        return Err(Error::Parse {
            line: sline,
            message: "symmetric matrix must be square".into(),
        });
    }

    let mut entries = Vec::with_capacity(nnz);
    for (lno, line) in data {
        let mut tok = line.split_whitespace();
        let i = one_based(parse_field(tok.next(), lno, "row index")?, rows, lno)?;
        let j = one_based(parse_field(tok.next(), lno, "column index")?, cols, lno)?;
        let v = if pattern {
            1.0
        } else {
            parse_field(tok.next(), lno, "value")?
        };
        if tok.next().is_some() {
            return Err(Error::Parse {
                line: lno,
                message: "entry line has extra fields".into(),
            });
        }
        entries.push((i, j, v));
    }
    if entries.len() != nnz {
        return Err(Error::Parse {
            line: sline,
            message: format!("size line announces {nnz} entries, found {}", entries.len()),
        });
    }
    Ok(MatrixMarket {
        rows,
        cols,
        symmetry,
        entries,
    })
}

pub fn load_matrixmarket(path: impl AsRef<Path>) -> Result<MatrixMarket> {
    parse_matrixmarket(&read_file(path.as_ref())?)
}

impl MatrixMarket {
    /// Reads the matrix as an undirected graph. Repeated lines for the same
    /// stored position are summed. For `general` files the two directions
    /// of a pair collapse to one edge: a single direction keeps its weight,
    /// both directions keep the larger one.
    pub fn to_graph(&self) -> Result<Graph> {
        if self.rows != self.cols {
            return Err(Error::InvalidInput(format!(
                "graph needs a square matrix, got {}x{}",
                self.rows, self.cols
            )));
        }
        let mut stored: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for &(i, j, v) in &self.entries {
            let key = match self.symmetry {
                MmSymmetry::Symmetric => (i.min(j), i.max(j)),
                MmSymmetry::General => (i, j),
            };
            *stored.entry(key).or_insert(0.0) += v;
        }
        let edges: Vec<(usize, usize, f64)> = match self.symmetry {
            MmSymmetry::Symmetric => stored.into_iter().map(|((i, j), v)| (i, j, v)).collect(),
            MmSymmetry::General => {
                let mut pairs: BTreeMap<(usize, usize), f64> = BTreeMap::new();
                for ((i, j), v) in stored {
                    pairs
                        .entry((i.min(j), i.max(j)))
                        .and_modify(|w| *w = w.max(v))
                        .or_insert(v);
                }
                pairs.into_iter().map(|((i, j), v)| (i, j, v)).collect()
            }
        };
        Graph::new(self.rows, edges)
    }

    /// Dense copy (duplicates summed, symmetric storage mirrored).
    pub fn to_dense(&self) -> RectMatrix {
        let mut a = RectMatrix::zeros(self.rows, self.cols);
        for &(i, j, v) in &self.entries {
            a.set(i, j, a.get(i, j) + v);
            if self.symmetry == MmSymmetry::Symmetric && i != j {
                a.set(j, i, a.get(j, i) + v);
            }
        }
        a
    }
}
