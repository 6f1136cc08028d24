//! Line-oriented text serialization for every artifact, dataset directory
//! loading, and synthetic task generation.
//!
//! Formats:
//! - edge list: one `u v` pair per line, 0-based ids, `#` starts a comment;
//! - coefficients: first line the order K, second line K+1 values with 17
//!   significant digits (lossless f64 round trip);
//! - signals and features: CSV of floats, one node per row, no header;
//! - labels: one integer per line;
//! - filter curves: CSV with a `lambda,value` header;
//! - split masks: one of `train`, `val`, `test` per line, one line per node.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::bernstein::{eval_filter, BernCoeffs};
use crate::classify::{NodeDataset, SplitMasks};
use crate::dense::Matrix;
use crate::error::{Error, Result};
use crate::graph::{build_graph, Graph};

fn parse_err(path: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: path.display().to_string(),
        line,
        msg: msg.into(),
    }
}

/// Reads an edge-list file. Returns the edges and the implied node count
/// (max id + 1).
pub fn read_edge_list(path: &Path) -> Result<(Vec<(usize, usize)>, usize)> {
    let text = fs::read_to_string(path)?;
    let mut edges = Vec::new();
    let mut max_id = None::<usize>;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split_whitespace();
        let u: usize = parts
            .next()
            .ok_or_else(|| parse_err(path, lineno + 1, "missing source id"))?
            .parse()
            .map_err(|_| parse_err(path, lineno + 1, "source id is not an integer"))?;
        let v: usize = parts
            .next()
            .ok_or_else(|| parse_err(path, lineno + 1, "missing target id"))?
            .parse()
            .map_err(|_| parse_err(path, lineno + 1, "target id is not an integer"))?;
        if parts.next().is_some() {
            return Err(parse_err(path, lineno + 1, "expected exactly two ids"));
        }
        max_id = Some(max_id.map_or(u.max(v), |m| m.max(u).max(v)));
        edges.push((u, v));
    }
    let n = max_id.map_or(0, |m| m + 1);
    Ok((edges, n))
}

/// Loads a graph from an edge-list file; `nodes` overrides the implied
/// node count when given.
pub fn load_graph(path: &Path, nodes: Option<usize>) -> Result<Graph> {
    let (edges, implied) = read_edge_list(path)?;
    build_graph(&edges, nodes.unwrap_or(implied))
}

pub fn write_edge_list(path: &Path, graph: &Graph) -> Result<()> {
    let mut out = String::new();
    for (u, v) in graph.edges() {
        out.push_str(&format!("{u} {v}\n"));
    }
    fs::write(path, out)?;
    Ok(())
}

/// Writes coefficients losslessly: order on the first line, 17 significant
/// digits per value on the second.
pub fn write_coeffs(path: &Path, c: &BernCoeffs) -> Result<()> {
    let mut f = fs::File::create(path)?;
    writeln!(f, "{}", c.order())?;
    let values: Vec<String> = c.theta().iter().map(|t| format!("{t:.16e}")).collect();
    writeln!(f, "{}", values.join(" "))?;
    Ok(())
}

pub fn read_coeffs(path: &Path) -> Result<BernCoeffs> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    let order: usize = lines
        .next()
        .ok_or_else(|| parse_err(path, 1, "missing order line"))?
        .trim()
        .parse()
        .map_err(|_| parse_err(path, 1, "order is not an integer"))?;
    let coeff_line = lines
        .next()
        .ok_or_else(|| parse_err(path, 2, "missing coefficient line"))?;
    let theta: Vec<f64> = coeff_line
        .split_whitespace()
        .map(|tok| {
            tok.parse::<f64>()
                .map_err(|_| parse_err(path, 2, format!("bad coefficient '{tok}'")))
        })
        .collect::<Result<_>>()?;
    if theta.len() != order + 1 {
        return Err(parse_err(
            path,
            2,
            format!("expected {} coefficients, found {}", order + 1, theta.len()),
        ));
    }
    if theta.iter().any(|t| !t.is_finite()) {
        return Err(Error::NonFinite {
            context: format!("coefficients in {}", path.display()),
        });
    }
    BernCoeffs::new(theta)
}

/// Reads a headerless CSV of floats into an n-by-d matrix.
pub fn read_signal_matrix(path: &Path) -> Result<Matrix> {
    let text = fs::read_to_string(path)?;
    let mut data = Vec::new();
    let mut cols = None::<usize>;
    let mut rows = 0usize;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let values: Vec<f64> = line
            .split(',')
            .map(|tok| {
                let v: f64 = tok
                    .trim()
                    .parse()
                    .map_err(|_| parse_err(path, lineno + 1, format!("bad number '{tok}'")))?;
                if !v.is_finite() {
                    return Err(parse_err(path, lineno + 1, "non-finite value"));
                }
                Ok(v)
            })
            .collect::<Result<_>>()?;
        match cols {
            None => cols = Some(values.len()),
            Some(c) if c != values.len() => {
                return Err(parse_err(
                    path,
                    lineno + 1,
                    format!("expected {c} columns, found {}", values.len()),
                ));
            }
            _ => {}
        }
        data.extend(values);
        rows += 1;
    }
    let cols = cols.ok_or_else(|| parse_err(path, 1, "file is empty"))?;
    Matrix::from_vec(rows, cols, data)
}

pub fn write_signal_matrix(path: &Path, m: &Matrix) -> Result<()> {
    let mut out = String::new();
    for r in 0..m.rows() {
        let row: Vec<String> = m.row(r).iter().map(|v| format!("{v:.16e}")).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn read_signal_vector(path: &Path) -> Result<Vec<f64>> {
    let m = read_signal_matrix(path)?;
    if m.cols() != 1 {
        return Err(Error::InvalidData(format!(
            "{}: expected a single column, found {}",
            path.display(),
            m.cols()
        )));
    }
    Ok(m.column(0))
}

pub fn write_signal_vector(path: &Path, x: &[f64]) -> Result<()> {
    write_signal_matrix(path, &Matrix::from_column(x))
}

fn read_labels(path: &Path) -> Result<Vec<usize>> {
    let text = fs::read_to_string(path)?;
    let mut labels = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let label: usize = line
            .parse()
            .map_err(|_| parse_err(path, lineno + 1, format!("bad label '{line}'")))?;
        labels.push(label);
    }
    if labels.is_empty() {
        return Err(parse_err(path, 1, "no labels found"));
    }
    Ok(labels)
}

/// Loads `edges.txt`, `features.csv`, `labels.txt` from a directory into a
/// validated dataset. The node count comes from the label file.
pub fn load_dataset(dir: &Path) -> Result<NodeDataset> {
    let labels = read_labels(&dir.join("labels.txt"))?;
    let n = labels.len();
    let features = read_signal_matrix(&dir.join("features.csv"))?;
    if features.rows() != n {
        return Err(Error::RowCountMismatch {
            file: dir.join("features.csv").display().to_string(),
            expected: n,
            found: features.rows(),
        });
    }
    let (edges, implied) = read_edge_list(&dir.join("edges.txt"))?;
    if implied > n {
        return Err(Error::NodeIndexOutOfRange {
            index: implied - 1,
            nodes: n,
        });
    }
    let graph = build_graph(&edges, n)?;
    NodeDataset::new(graph, features, labels)
}

pub fn write_dataset(dir: &Path, dataset: &NodeDataset) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_edge_list(&dir.join("edges.txt"), &dataset.graph)?;
    write_signal_matrix(&dir.join("features.csv"), &dataset.features)?;
    let labels: String = dataset.labels.iter().map(|l| format!("{l}\n")).collect();
    fs::write(dir.join("labels.txt"), labels)?;
    Ok(())
}

pub fn write_split_masks(path: &Path, splits: &SplitMasks) -> Result<()> {
    let mut out = String::new();
    for i in 0..splits.train.len() {
        let tag = if splits.train[i] {
            "train"
        } else if splits.val[i] {
            "val"
        } else {
            "test"
        };
        out.push_str(tag);
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn read_split_masks(path: &Path, n: usize) -> Result<SplitMasks> {
    let text = fs::read_to_string(path)?;
    let mut train = vec![false; n];
    let mut val = vec![false; n];
    let mut test = vec![false; n];
    let mut count = 0usize;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if count >= n {
            return Err(parse_err(path, lineno + 1, "more lines than nodes"));
        }
        match line {
            "train" => train[count] = true,
            "val" => val[count] = true,
            "test" => test[count] = true,
            other => {
                return Err(parse_err(
                    path,
                    lineno + 1,
                    format!("bad split tag '{other}'"),
                ));
            }
        }
        count += 1;
    }
    if count != n {
        return Err(Error::RowCountMismatch {
            file: path.display().to_string(),
            expected: n,
            found: count,
        });
    }
    Ok(SplitMasks { train, val, test })
}

/// Kinds of synthetic grid signals.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridSignalKind {
    Random,
    Gradient,
    Checker,
}

impl std::str::FromStr for GridSignalKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random" => Ok(Self::Random),
            "gradient" => Ok(Self::Gradient),
            "checker" => Ok(Self::Checker),
            other => Err(Error::InvalidData(format!(
                "unknown signal kind '{other}' (expected random, gradient, or checker)"
            ))),
        }
    }
}

/// Deterministic synthetic grid signal in [0,1], node (r, c) at index
/// `r * width + c`.
pub fn synth_grid_signal(
    height: usize,
    width: usize,
    seed: u64,
    kind: GridSignalKind,
) -> Result<Vec<f64>> {
    let n = height * width;
    if n < 2 {
        return Err(Error::InvalidData(
            "grid must have at least two nodes".into(),
        ));
    }
    let signal = match kind {
        GridSignalKind::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..n).map(|_| rng.random::<f64>()).collect()
        }
        GridSignalKind::Gradient => (0..n).map(|i| i as f64 / (n - 1) as f64).collect(),
        GridSignalKind::Checker => (0..height)
            .flat_map(|r| (0..width).map(move |c| ((r + c) % 2 == 0) as usize as f64))
            .collect(),
    };
    Ok(signal)
}

/// Mask covering the interior of a grid (border nodes excluded).
pub fn grid_interior_mask(height: usize, width: usize) -> Vec<bool> {
    (0..height)
        .flat_map(|r| (0..width).map(move |c| r > 0 && c > 0 && r + 1 < height && c + 1 < width))
        .collect()
}

/// Two dense cliques joined by a single bridge edge, with noisy cluster-id
/// features. A classic separable toy for the classification path.
pub fn synth_two_cluster(cluster_size: usize, noise: f64, seed: u64) -> Result<NodeDataset> {
    if cluster_size < 3 {
        return Err(Error::InvalidData("cluster size must be at least 3".into()));
    }
    let n = 2 * cluster_size;
    let mut edges = Vec::new();
    for u in 0..cluster_size {
        for v in (u + 1)..cluster_size {
            edges.push((u, v));
            edges.push((u + cluster_size, v + cluster_size));
        }
    }
    edges.push((0, cluster_size));
    let graph = build_graph(&edges, n)?;

    let dim = 4;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data = Vec::with_capacity(n * dim);
    for i in 0..n {
        let cluster = (i >= cluster_size) as usize;
        for c in 0..dim {
            let base = if c == cluster { 1.0 } else { 0.0 };
            data.push(base + noise * (rng.random::<f64>() - 0.5));
        }
    }
    let features = Matrix::from_vec(n, dim, data)?;
    let labels = (0..n).map(|i| (i >= cluster_size) as usize).collect();
    NodeDataset::new(graph, features, labels)
}

/// Sampled filter response over [0,2]; what the curve CSV serializes.
#[derive(Debug, Clone)]
pub struct CurveTable {
    rows: Vec<(f64, f64)>,
}

impl CurveTable {
    /// Uniformly samples the filter response at `points` lambdas from 0
    /// to 2 inclusive.
    pub fn from_coeffs(c: &BernCoeffs, points: usize) -> Result<Self> {
        if points < 2 {
            return Err(Error::ParamOutOfRange {
                name: "points",
                value: points as f64,
                range: "[2, inf)",
            });
        }
        let rows = (0..points)
            .map(|i| {
                let lambda = 2.0 * i as f64 / (points - 1) as f64;
                let lambda = lambda.min(2.0);
                Ok((lambda, eval_filter(c, lambda)?))
            })
            .collect::<Result<_>>()?;
        Ok(Self { rows })
    }

    pub fn rows(&self) -> &[(f64, f64)] {
        &self.rows
    }
}

pub fn write_curve(path: &Path, curve: &CurveTable) -> Result<()> {
    let mut out = String::from("lambda,value\n");
    for &(lambda, value) in curve.rows() {
        out.push_str(&format!("{lambda:.16e},{value:.16e}\n"));
    }
    fs::write(path, out)?;
    Ok(())
}

/// Eigenvalues as a one-column CSV with header.
pub fn write_spectrum(path: &Path, eigenvalues: &[f64]) -> Result<()> {
    let mut out = String::from("eigenvalue\n");
    for v in eigenvalues {
        out.push_str(&format!("{v:.16e}\n"));
    }
    fs::write(path, out)?;
    Ok(())
}
