//! Dense spectral reference for small graphs.
//!
//! Everything here exists to check the sparse propagation paths: a cyclic
//! Jacobi eigendecomposition of the densely materialized Laplacian, exact
//! filtering through the eigenbasis, the closed-form optimum of the
//! quadratic graph smoothing objective, and the truncated propagation
//! series it generates (personalized-PageRank and heat-kernel weights).

use crate::bernstein::FilterFn;
use crate::dense::{dot, Matrix};
use crate::error::{Error, Result};
use crate::graph::{NormalizedOperator, OperatorMode};

/// Cap on dense decompositions; the oracle exists to test, not to scale.
pub const MAX_DENSE_NODES: usize = 2000;

const JACOBI_TOL: f64 = 1e-12;
const JACOBI_MAX_SWEEPS: usize = 100;

/// Eigenpairs of the normalized Laplacian, eigenvalues ascending; column i
/// of the eigenvector matrix pairs with eigenvalue i.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    eigenvalues: Vec<f64>,
    eigenvectors: Matrix,
}

impl SpectralDecomposition {
    pub fn node_count(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &Matrix {
        &self.eigenvectors
    }

    /// Filters are defined on [0,2]; eigenvalues are clamped there before
    /// evaluation to absorb numerical spill.
    pub fn clamped_eigenvalue(&self, i: usize) -> f64 {
        self.eigenvalues[i].clamp(0.0, 2.0)
    }

    /// U diag(d) U^T x for precomputed diagonal values d.
    fn filter_matvec(&self, diag: &[f64], x: &[f64]) -> Vec<f64> {
        let n = self.node_count();
        let u = &self.eigenvectors;
        // coefficients in the eigenbasis: c = U^T x
        let mut c = vec![0.0; n];
        for (i, ci) in c.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (r, &xr) in x.iter().enumerate() {
                acc += u.get(r, i) * xr;
            }
            *ci = acc * diag[i];
        }
        (0..n).map(|r| dot(u.row(r), &c)).collect()
    }
}

/// Cyclic Jacobi rotations on a dense symmetric matrix. Sweeps until the
/// off-diagonal Frobenius norm drops below tolerance.
fn jacobi_eigen(mut a: Matrix) -> Result<(Vec<f64>, Matrix)> {
    let n = a.rows();
    let mut v = Matrix::identity(n);
    if n == 1 {
        return Ok((vec![a.get(0, 0)], v));
    }
    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut off_sq = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off_sq += 2.0 * a.get(p, q) * a.get(p, q);
            }
        }
        if off_sq.sqrt() <= JACOBI_TOL {
            let eigenvalues = (0..n).map(|i| a.get(i, i)).collect();
            return Ok((eigenvalues, v));
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a.get(p, q);
                if apq == 0.0 {
                    continue;
                }
                let theta = (a.get(q, q) - a.get(p, p)) / (2.0 * apq);
                let t = {
                    let s = if theta >= 0.0 { 1.0 } else { -1.0 };
                    s / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;

                let app = a.get(p, p);
                let aqq = a.get(q, q);
                a.set(p, p, app - t * apq);
                a.set(q, q, aqq + t * apq);
                a.set(p, q, 0.0);
                a.set(q, p, 0.0);
                for j in 0..n {
                    if j == p || j == q {
                        continue;
                    }
                    let ajp = a.get(j, p);
                    let ajq = a.get(j, q);
                    a.set(j, p, c * ajp - s * ajq);
                    a.set(p, j, c * ajp - s * ajq);
                    a.set(j, q, s * ajp + c * ajq);
                    a.set(q, j, s * ajp + c * ajq);
                }
                for j in 0..n {
                    let vjp = v.get(j, p);
                    let vjq = v.get(j, q);
                    v.set(j, p, c * vjp - s * vjq);
                    v.set(j, q, s * vjp + c * vjq);
                }
            }
        }
    }
    Err(Error::EigenNoConvergence {
        sweeps: JACOBI_MAX_SWEEPS,
    })
}

/// Dense eigendecomposition of the normalized Laplacian.
pub fn eigendecompose(op: &NormalizedOperator) -> Result<SpectralDecomposition> {
    if op.mode() != OperatorMode::Laplacian {
        return Err(Error::WrongOperatorMode {
            expected: "laplacian",
        });
    }
    let n = op.node_count();
    if n > MAX_DENSE_NODES {
        return Err(Error::DenseCapExceeded {
            nodes: n,
            cap: MAX_DENSE_NODES,
        });
    }
    let (raw_values, vectors) = jacobi_eigen(op.to_dense())?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| raw_values[i].total_cmp(&raw_values[j]));

    let eigenvalues: Vec<f64> = order.iter().map(|&i| raw_values[i]).collect();
    let mut eigenvectors = Matrix::zeros(n, n);
    for (new_col, &old_col) in order.iter().enumerate() {
        for r in 0..n {
            eigenvectors.set(r, new_col, vectors.get(r, old_col));
        }
    }
    Ok(SpectralDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

/// Exact spectral filtering: U diag(h(lambda_i)) U^T x.
pub fn exact_filter_apply(
    dec: &SpectralDecomposition,
    h: &FilterFn,
    x: &[f64],
) -> Result<Vec<f64>> {
    let n = dec.node_count();
    if x.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: x.len(),
        });
    }
    let mut diag = Vec::with_capacity(n);
    for i in 0..n {
        let lambda = dec.clamped_eigenvalue(i);
        let v = h.eval(lambda);
        if !v.is_finite() {
            return Err(Error::NonFiniteFilterValue { lambda });
        }
        diag.push(v);
    }
    Ok(dec.filter_matvec(&diag, x))
}

/// Minimizer of the quadratic smoothing objective
/// `(1-alpha) z^T gamma(L) z + alpha ||z - x||^2` for a positive
/// semidefinite energy gamma, i.e. the filter
/// `h(lambda) = alpha / (alpha + (1-alpha) gamma(lambda))`.
pub fn energy_solution(
    dec: &SpectralDecomposition,
    gamma: &FilterFn,
    alpha: f64,
    x: &[f64],
) -> Result<Vec<f64>> {
    if alpha <= 0.0 || alpha > 1.0 || alpha.is_nan() {
        return Err(Error::ParamOutOfRange {
            name: "alpha",
            value: alpha,
            range: "(0, 1]",
        });
    }
    let n = dec.node_count();
    if x.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: x.len(),
        });
    }
    let mut diag = Vec::with_capacity(n);
    for i in 0..n {
        let lambda = dec.clamped_eigenvalue(i);
        let g = gamma.eval(lambda);
        if !g.is_finite() {
            return Err(Error::NonFiniteFilterValue { lambda });
        }
        if g < -1e-12 {
            return Err(Error::EnergyNotPsd { lambda, value: g });
        }
        diag.push(alpha / (alpha + (1.0 - alpha) * g.max(0.0)));
    }
    Ok(dec.filter_matvec(&diag, x))
}

/// Truncated personalized-PageRank series
/// `sum_{k=0..K} alpha (1-alpha)^k P^k x` by iterated sparse products.
pub fn ppr_suffix_sum(
    op: &NormalizedOperator,
    alpha: f64,
    k_max: usize,
    x: &[f64],
) -> Result<Vec<f64>> {
    if alpha <= 0.0 || alpha >= 1.0 || alpha.is_nan() {
        return Err(Error::ParamOutOfRange {
            name: "alpha",
            value: alpha,
            range: "(0, 1)",
        });
    }
    truncated_series(op, x, k_max, alpha, |w, _k| w * (1.0 - alpha))
}

/// Truncated heat-kernel series `sum_{k=0..K} e^{-t} t^k / k! P^k x`.
pub fn heat_suffix_sum(
    op: &NormalizedOperator,
    t: f64,
    k_max: usize,
    x: &[f64],
) -> Result<Vec<f64>> {
    if t <= 0.0 || t.is_nan() {
        return Err(Error::ParamOutOfRange {
            name: "t",
            value: t,
            range: "(0, inf)",
        });
    }
    truncated_series(op, x, k_max, (-t).exp(), |w, k| w * t / k as f64)
}

/// Accumulates sum_k w_k P^k x with w_0 given and w_k = step(w_{k-1}, k),
/// using the normalized adjacency of the operator's graph.
fn truncated_series(
    op: &NormalizedOperator,
    x: &[f64],
    k_max: usize,
    w0: f64,
    step: impl Fn(f64, usize) -> f64,
) -> Result<Vec<f64>> {
    let n = op.node_count();
    if x.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: x.len(),
        });
    }
    let p = NormalizedOperator::adjacency(op.graph());
    let mut acc: Vec<f64> = x.iter().map(|&v| w0 * v).collect();
    let mut cur = x.to_vec();
    let mut next = vec![0.0; n];
    let mut w = w0;
    for k in 1..=k_max {
        p.matvec_into(&cur, &mut next);
        std::mem::swap(&mut cur, &mut next);
        w = step(w, k);
        crate::dense::axpy(&mut acc, w, &cur);
    }
    Ok(acc)
}
