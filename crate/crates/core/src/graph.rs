//! Weighted directed graphs, random generators, and the dense graph
//! matrices built from them.
//!
//! Matrix convention: `[A]_{ij}` is the summed weight of every edge `i -> j`.
//! Undirected edges contribute to both `[A]_{ij}` and `[A]_{ji}` (a self-loop
//! contributes once). The degree matrix holds row sums of `A`.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Portable seeded generator used by every randomized routine in the crate.
pub type SeededRng = ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub source: usize,
    pub target: usize,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    n: usize,
    edges: Vec<Edge>,
    directed: bool,
    label: String,
}

impl Graph {
    pub fn new(n: usize, directed: bool) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("graph needs at least one node".into()));
        }
        Ok(Self {
            n,
            edges: Vec::new(),
            directed,
            label: String::from("graph"),
        })
    }

    /// Adds an edge. Self-loops and repeated edges are allowed.
    pub fn add_edge(&mut self, source: usize, target: usize, weight: f64) -> Result<()> {
        if source >= self.n || target >= self.n {
            return Err(Error::InvalidParameter(format!(
                "edge ({source}, {target}) out of range for {} nodes",
                self.n
            )));
        }
        self.edges.push(Edge {
            source,
            target,
            weight,
        });
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn is_directed(&self) -> bool {
        self.directed
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// Serializes to the TSV edge-list format.
    pub fn to_tsv(&self) -> String {
        let mut out = format!("# n={} directed={}\n", self.n, u8::from(self.directed));
        for e in &self.edges {
            let _ = writeln!(out, "{}\t{}\t{}", e.source, e.target, e.weight);
        }
        out
    }

    pub fn from_tsv(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty graph file".into()))?;
        let header = header
            .strip_prefix('#')
            .ok_or_else(|| Error::Parse(format!("bad graph header: {header}")))?;
        let mut n = None;
        let mut directed = None;
        for field in header.split_whitespace() {
            match field.split_once('=') {
                Some(("n", v)) => {
                    n = Some(v.parse::<usize>().map_err(|e| Error::Parse(e.to_string()))?)
                }
                Some(("directed", "0")) => directed = Some(false),
                Some(("directed", "1")) => directed = Some(true),
                _ => return Err(Error::Parse(format!("unknown header field: {field}"))),
            }
        }
        let (Some(n), Some(directed)) = (n, directed) else {
            return Err(Error::Parse("graph header needs n= and directed=".into()));
        };
        let mut g = Graph::new(n, directed)?;
        for line in lines {
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != 3 {
                return Err(Error::Parse(format!("bad edge row: {line}")));
            }
            let parse_idx = |s: &str| s.trim().parse::<usize>().map_err(|e| Error::Parse(e.to_string()));
            let w = cols[2]
                .trim()
                .parse::<f64>()
                .map_err(|e| Error::Parse(e.to_string()))?;
            g.add_edge(parse_idx(cols[0])?, parse_idx(cols[1])?, w)?;
        }
        Ok(g)
    }

    pub fn save_tsv(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_tsv())?;
        Ok(())
    }

    pub fn load_tsv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        let label = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "graph".into());
        Ok(Self::from_tsv(&text)?.with_label(label))
    }
}

/// Barabási–Albert preferential attachment.
///
/// Starts from a complete graph on `m_attach` nodes; every later node links to
/// `m_attach` distinct existing nodes drawn with probability proportional to
/// their current degree (uniformly when all degrees are zero). Unit weights.
pub fn preferential_attachment(n: usize, m_attach: usize, seed: u64) -> Result<Graph> {
    if m_attach < 1 || m_attach > n {
        return Err(Error::InvalidParameter(format!(
            "preferential attachment needs 1 <= m <= n (m={m_attach}, n={n})"
        )));
    }
    let mut rng = seeded_rng(seed);
    let mut g = Graph::new(n, false)?.with_label(format!("pa-n{n}-m{m_attach}-s{seed}"));
    let mut degree = vec![0usize; n];
    for i in 0..m_attach {
        for j in (i + 1)..m_attach {
            g.add_edge(i, j, 1.0)?;
            degree[i] += 1;
            degree[j] += 1;
        }
    }
    for new in m_attach..n {
        let mut chosen: Vec<usize> = Vec::with_capacity(m_attach);
        while chosen.len() < m_attach {
            let total: usize = (0..new)
                .filter(|v| !chosen.contains(v))
                .map(|v| degree[v])
                .sum();
            let pick = if total == 0 {
                let free: Vec<usize> = (0..new).filter(|v| !chosen.contains(v)).collect();
                *free.choose(&mut rng).expect("at least one free node")
            } else {
                let mut ticket = rng.gen_range(0..total);
                let mut pick = None;
                for v in (0..new).filter(|v| !chosen.contains(v)) {
                    if ticket < degree[v] {
                        pick = Some(v);
                        break;
                    }
                    ticket -= degree[v];
                }
                pick.expect("ticket within total degree")
            };
            chosen.push(pick);
        }
        for &t in &chosen {
            g.add_edge(t, new, 1.0)?;
            degree[t] += 1;
            degree[new] += 1;
        }
    }
    Ok(g)
}

/// Cycle on `n` nodes with unit weights. Directed rings only carry `i -> i+1`.
pub fn ring(n: usize, directed: bool) -> Result<Graph> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("ring needs n >= 2, got {n}")));
    }
    let mut g = Graph::new(n, directed)?.with_label(format!(
        "ring-n{n}-{}",
        if directed { "directed" } else { "undirected" }
    ));
    if n == 2 && !directed {
        g.add_edge(0, 1, 1.0)?;
        return Ok(g);
    }
    for i in 0..n {
        g.add_edge(i, (i + 1) % n, 1.0)?;
    }
    Ok(g)
}

/// Replaces every edge weight with an i.i.d. draw from `Uniform[lo, hi]`.
pub fn assign_uniform_weights(g: &Graph, lo: f64, hi: f64, seed: u64) -> Result<Graph> {
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "weight range needs lo < hi (lo={lo}, hi={hi})"
        )));
    }
    let mut rng = seeded_rng(seed);
    let mut out = g.clone();
    for e in &mut out.edges {
        e.weight = rng.gen_range(lo..=hi);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GraphMatrixKind {
    Adjacency,
    Degree,
    Laplacian,
    /// The random-walk matrix `D^-1 A`.
    ///
    /// Some literature calls this the normalized Laplacian; the symmetric
    /// `I - D^-1/2 A D^-1/2` is a different matrix and is not built here.
    NormalizedLaplacian,
}

impl std::str::FromStr for GraphMatrixKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "adjacency" => Ok(Self::Adjacency),
            "degree" => Ok(Self::Degree),
            "laplacian" => Ok(Self::Laplacian),
            "normalized-laplacian" | "random-walk" => Ok(Self::NormalizedLaplacian),
            other => Err(Error::InvalidParameter(format!("unknown matrix kind: {other}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GraphMatrix {
    pub matrix: DMatrix<f64>,
    pub kind: GraphMatrixKind,
    pub source: String,
}

impl GraphMatrix {
    /// Wraps an arbitrary square matrix (treated as a weighted adjacency).
    pub fn from_matrix(matrix: DMatrix<f64>) -> Result<Self> {
        if !matrix.is_square() || matrix.nrows() == 0 {
            return Err(Error::DimensionMismatch {
                what: "graph matrix must be square and non-empty",
                expected: matrix.nrows(),
                got: matrix.ncols(),
            });
        }
        Ok(Self {
            matrix,
            kind: GraphMatrixKind::Adjacency,
            source: "matrix".into(),
        })
    }

    pub fn n(&self) -> usize {
        self.matrix.nrows()
    }

    /// Dense CSV, one row per line, 17 significant digits.
    pub fn to_csv(&self) -> String {
        matrix_to_csv(&self.matrix)
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }

    pub fn load_csv(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())?;
        let mut m = Self::from_matrix(matrix_from_csv(&text)?)?;
        m.source = path.as_ref().display().to_string();
        Ok(m)
    }
}

pub fn matrix_to_csv(m: &DMatrix<f64>) -> String {
    let mut out = String::new();
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| format!("{:.16e}", m[(i, j)])).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn matrix_from_csv(text: &str) -> Result<DMatrix<f64>> {
    let rows: Vec<Vec<f64>> = text
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            l.split(',')
                .map(|v| v.trim().parse::<f64>().map_err(|e| Error::Parse(format!("{v:?}: {e}"))))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    if let Some(bad) = rows.iter().find(|r| r.len() != ncols) {
        return Err(Error::DimensionMismatch {
            what: "ragged matrix row",
            expected: ncols,
            got: bad.len(),
        });
    }
    Ok(DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

fn adjacency(g: &Graph) -> DMatrix<f64> {
    let mut a = DMatrix::zeros(g.n, g.n);
    for e in &g.edges {
        a[(e.source, e.target)] += e.weight;
        if !g.directed && e.source != e.target {
            a[(e.target, e.source)] += e.weight;
        }
    }
    a
}

pub fn build_matrix(g: &Graph, kind: GraphMatrixKind) -> Result<GraphMatrix> {
    let a = adjacency(g);
    let degrees: Vec<f64> = a.row_iter().map(|r| r.sum()).collect();
    let matrix = match kind {
        GraphMatrixKind::Adjacency => a,
        GraphMatrixKind::Degree => DMatrix::from_diagonal(&degrees.clone().into()),
        GraphMatrixKind::Laplacian => DMatrix::from_diagonal(&degrees.clone().into()) - a,
        GraphMatrixKind::NormalizedLaplacian => {
            let mut m = a;
            for (i, &d) in degrees.iter().enumerate() {
                let scale: f64 = m.row(i).iter().map(|v| v.abs()).sum();
                if d == 0.0 || d.abs() <= f64::EPSILON * scale {
                    return Err(Error::SingularDegree { node: i });
                }
                m.row_mut(i).scale_mut(1.0 / d);
            }
            m
        }
    };
    Ok(GraphMatrix {
        matrix,
        kind,
        source: g.label.clone(),
    })
}

/// Draws a vector with i.i.d. `Uniform[lo, hi]` entries.
pub fn uniform_vector(rng: &mut SeededRng, len: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..len).map(|_| rng.gen_range(lo..=hi)).collect()
}
