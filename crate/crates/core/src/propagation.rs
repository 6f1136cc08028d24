//! Sparse polynomial filtering: the Bernstein convolution applied through
//! repeated Laplacian products, for single signals and feature matrices.
//!
//! The filter with coefficients theta acts as
//! `sum_k theta[k] (1/2^K) C(K,k) (2I - L)^(K-k) L^k x`.
//! Terms are built by first walking powers of L, then applying (2I - L) the
//! remaining number of times, so a full application costs O(K^2) sparse
//! products. Each term divided by theta[k] is one basis operator; caching
//! those per input is what the learning paths consume for gradients.

use crate::bernstein::{binomial, BernCoeffs, MAX_ORDER};
use crate::dense::{axpy, dot, Matrix};
use crate::error::{Error, Result};
use crate::graph::{NormalizedOperator, OperatorMode};

fn check_vector_input(op: &NormalizedOperator, c: &BernCoeffs, x: &[f64]) -> Result<()> {
    if op.mode() != OperatorMode::Laplacian {
        return Err(Error::WrongOperatorMode {
            expected: "laplacian",
        });
    }
    if c.order() > MAX_ORDER {
        return Err(Error::OrderTooLarge {
            order: c.order(),
            max: MAX_ORDER,
        });
    }
    if x.len() != op.node_count() {
        return Err(Error::DimensionMismatch {
            expected: op.node_count(),
            got: x.len(),
        });
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            context: "input signal".into(),
        });
    }
    Ok(())
}

/// Scale of the k-th basis operator, C(K,k) / 2^K. The power of two is
/// exact, so the relative error is that of the binomial alone.
fn basis_scale(order: usize, k: usize) -> f64 {
    binomial(order, k) * 0.5f64.powi(order as i32)
}

/// Visits the scaled basis terms B_k x for k = 0..=K in order.
fn for_each_basis_term(
    op: &NormalizedOperator,
    order: usize,
    x: &[f64],
    mut visit: impl FnMut(usize, &[f64]),
) {
    let n = x.len();
    // powers[k] = L^k x
    let mut powers = Vec::with_capacity(order + 1);
    powers.push(x.to_vec());
    let mut buf = vec![0.0; n];
    for _ in 0..order {
        op.matvec_into(powers.last().unwrap(), &mut buf);
        powers.push(buf.clone());
    }

    let mut term = vec![0.0; n];
    for (k, base) in powers.iter().enumerate() {
        term.copy_from_slice(base);
        // apply (2I - L) the remaining (K - k) times
        for _ in 0..(order - k) {
            op.matvec_into(&term, &mut buf);
            for (t, l) in term.iter_mut().zip(&buf) {
                *t = 2.0 * *t - *l;
            }
        }
        let scale = basis_scale(order, k);
        for t in term.iter_mut() {
            *t *= scale;
        }
        visit(k, &term);
    }
}

/// Applies the polynomial filter to a signal by sparse propagation.
pub fn apply_filter(op: &NormalizedOperator, c: &BernCoeffs, x: &[f64]) -> Result<Vec<f64>> {
    check_vector_input(op, c, x)?;
    let mut out = vec![0.0; x.len()];
    let theta = c.theta();
    for_each_basis_term(op, c.order(), x, |k, term| {
        axpy(&mut out, theta[k], term);
    });
    Ok(out)
}

/// The scaled basis terms B_k x for one fixed input signal, kept around so
/// filter application becomes a dot with theta and gradients read single
/// terms.
#[derive(Debug, Clone)]
pub struct BasisCache {
    terms: Vec<Vec<f64>>,
}

impl BasisCache {
    pub fn build(op: &NormalizedOperator, order: usize, x: &[f64]) -> Result<Self> {
        let probe = BernCoeffs::new(vec![0.0; order + 1])?;
        check_vector_input(op, &probe, x)?;
        let mut terms = Vec::with_capacity(order + 1);
        for_each_basis_term(op, order, x, |_, term| terms.push(term.to_vec()));
        Ok(Self { terms })
    }

    pub fn order(&self) -> usize {
        self.terms.len() - 1
    }

    pub fn term(&self, k: usize) -> &[f64] {
        &self.terms[k]
    }

    /// sum_k theta[k] B_k x.
    pub fn combine(&self, theta: &[f64]) -> Vec<f64> {
        assert_eq!(theta.len(), self.terms.len());
        let mut out = vec![0.0; self.terms[0].len()];
        for (t, term) in theta.iter().zip(&self.terms) {
            axpy(&mut out, *t, term);
        }
        out
    }

    /// Per-term inner products <r, B_k x>, the building block of the
    /// coefficient gradient.
    pub fn inner_products(&self, r: &[f64]) -> Vec<f64> {
        self.terms.iter().map(|term| dot(term, r)).collect()
    }
}

/// Matrix analogue of [`apply_filter`]: filters every column of an n-by-d
/// feature matrix. Parallel over rows of the sparse products when the
/// `parallel` feature is on; output is identical either way.
pub fn apply_filter_matrix(op: &NormalizedOperator, c: &BernCoeffs, x: &Matrix) -> Result<Matrix> {
    apply_filter_matrix_impl(op, c, x, cfg!(feature = "parallel"))
}

/// Sequential twin of [`apply_filter_matrix`], kept public for the bench
/// suite.
pub fn apply_filter_matrix_serial(
    op: &NormalizedOperator,
    c: &BernCoeffs,
    x: &Matrix,
) -> Result<Matrix> {
    apply_filter_matrix_impl(op, c, x, false)
}

fn apply_filter_matrix_impl(
    op: &NormalizedOperator,
    c: &BernCoeffs,
    x: &Matrix,
    parallel: bool,
) -> Result<Matrix> {
    let mut out = Matrix::zeros(x.rows(), x.cols());
    let theta = c.theta();
    for_each_basis_term_matrix(op, c.order(), x, parallel, |k, term| {
        out.axpy(theta[k], term);
    })?;
    Ok(out)
}

fn for_each_basis_term_matrix(
    op: &NormalizedOperator,
    order: usize,
    x: &Matrix,
    parallel: bool,
    mut visit: impl FnMut(usize, &Matrix),
) -> Result<()> {
    if op.mode() != OperatorMode::Laplacian {
        return Err(Error::WrongOperatorMode {
            expected: "laplacian",
        });
    }
    if order > MAX_ORDER {
        return Err(Error::OrderTooLarge {
            order,
            max: MAX_ORDER,
        });
    }
    if x.rows() != op.node_count() {
        return Err(Error::DimensionMismatch {
            expected: op.node_count(),
            got: x.rows(),
        });
    }
    if !x.is_finite() {
        return Err(Error::NonFinite {
            context: "input features".into(),
        });
    }
    let spmm = |m: &Matrix| -> Matrix {
        if parallel {
            op.matmat(m).expect("shape checked")
        } else {
            op.matmat_serial(m).expect("shape checked")
        }
    };

    let mut powers = Vec::with_capacity(order + 1);
    powers.push(x.clone());
    for _ in 0..order {
        powers.push(spmm(powers.last().unwrap()));
    }

    for (k, base) in powers.iter().enumerate() {
        let mut term = base.clone();
        for _ in 0..(order - k) {
            let lt = spmm(&term);
            let data = term.data_mut();
            for (t, l) in data.iter_mut().zip(lt.data()) {
                *t = 2.0 * *t - *l;
            }
        }
        term.scale(basis_scale(order, k));
        visit(k, &term);
    }
    Ok(())
}

/// Scaled basis terms B_k X for a fixed feature matrix.
#[derive(Debug, Clone)]
pub struct MatrixBasisCache {
    terms: Vec<Matrix>,
}

impl MatrixBasisCache {
    pub fn build(op: &NormalizedOperator, order: usize, x: &Matrix) -> Result<Self> {
        let mut terms = Vec::with_capacity(order + 1);
        for_each_basis_term_matrix(op, order, x, cfg!(feature = "parallel"), |_, term| {
            terms.push(term.clone())
        })?;
        Ok(Self { terms })
    }

    pub fn order(&self) -> usize {
        self.terms.len() - 1
    }

    pub fn term(&self, k: usize) -> &Matrix {
        &self.terms[k]
    }

    pub fn combine(&self, theta: &[f64]) -> Matrix {
        assert_eq!(theta.len(), self.terms.len());
        let mut out = Matrix::zeros(self.terms[0].rows(), self.terms[0].cols());
        for (t, term) in theta.iter().zip(&self.terms) {
            out.axpy(*t, term);
        }
        out
    }

    /// Frobenius inner products <G, B_k X> for each k.
    pub fn inner_products(&self, g: &Matrix) -> Vec<f64> {
        self.terms
            .iter()
            .map(|term| dot(term.data(), g.data()))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bernstein::{design_coeffs, eval_filter, named_filter};
    use crate::dense::{max_abs_diff, norm};
    use crate::graph::{build_graph, grid_graph, Graph};
    use crate::oracle::{eigendecompose, exact_filter_apply};
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn random_graph(rng: &mut ChaCha8Rng, n: usize, edge_prob: f64) -> Graph {
        let mut edges = Vec::new();
        for u in 0..n {
            for v in (u + 1)..n {
                if rng.random::<f64>() < edge_prob {
                    edges.push((u, v));
                }
            }
        }
        build_graph(&edges, n).unwrap()
    }

    fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
        (0..n).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect()
    }

    #[test]
    fn all_pass_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let g = random_graph(&mut rng, 30, 0.2);
        let op = NormalizedOperator::laplacian(&g);
        let c = design_coeffs(&named_filter("all_pass").unwrap(), 10).unwrap();
        let x = random_vec(&mut rng, 30);
        let z = apply_filter(&op, &c, &x).unwrap();
        assert!(max_abs_diff(&z, &x) < 1e-10);
    }

    #[test]
    fn linear_filters_match_single_matvec() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let g = random_graph(&mut rng, 25, 0.25);
        let op = NormalizedOperator::laplacian(&g);
        let x = random_vec(&mut rng, 25);
        let lx = op.matvec(&x).unwrap();

        let low = design_coeffs(&named_filter("linear_low").unwrap(), 10).unwrap();
        let z = apply_filter(&op, &low, &x).unwrap();
        let expected: Vec<f64> = x.iter().zip(&lx).map(|(a, b)| a - 0.5 * b).collect();
        assert!(max_abs_diff(&z, &expected) < 1e-10);

        let high = design_coeffs(&named_filter("linear_high").unwrap(), 10).unwrap();
        let z = apply_filter(&op, &high, &x).unwrap();
        let expected: Vec<f64> = lx.iter().map(|b| 0.5 * b).collect();
        assert!(max_abs_diff(&z, &expected) < 1e-10);
    }

    #[test]
    fn impulse_high_on_k2_top_eigenvector() {
        // L x = 2x for x = (1,-1) on a single edge, so (1/4) L^2 x = x.
        let g = build_graph(&[(0, 1)], 2).unwrap();
        let op = NormalizedOperator::laplacian(&g);
        let c = BernCoeffs::new(vec![0.0, 0.0, 1.0]).unwrap();
        let z = apply_filter(&op, &c, &[1.0, -1.0]).unwrap();
        assert!(max_abs_diff(&z, &[1.0, -1.0]) < 1e-12);
    }

    #[test]
    fn rejects_bad_inputs() {
        let g = build_graph(&[(0, 1)], 2).unwrap();
        let lap = NormalizedOperator::laplacian(&g);
        let adj = NormalizedOperator::adjacency(&g);
        let c = BernCoeffs::new(vec![1.0, 1.0]).unwrap();
        assert!(apply_filter(&adj, &c, &[1.0, 0.0]).is_err());
        assert!(apply_filter(&lap, &c, &[1.0]).is_err());
        assert!(apply_filter(&lap, &c, &[f64::NAN, 0.0]).is_err());
    }

    #[test]
    fn matches_dense_oracle_on_random_inputs() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..5 {
            let n = rng.random_range(5..40);
            let g = random_graph(&mut rng, n, 0.3);
            let op = NormalizedOperator::laplacian(&g);
            let dec = eigendecompose(&op).unwrap();
            let order = rng.random_range(1..=8usize);
            let theta: Vec<f64> = (0..=order).map(|_| rng.random::<f64>()).collect();
            let c = BernCoeffs::new(theta).unwrap();
            let x = random_vec(&mut rng, n);

            let via_sparse = apply_filter(&op, &c, &x).unwrap();
            let cc = c.clone();
            let h = crate::bernstein::FilterFn::from_fn(move |l| eval_filter(&cc, l).unwrap());
            let via_oracle = exact_filter_apply(&dec, &h, &x).unwrap();
            let scale = norm(&via_oracle).max(1.0);
            assert!(max_abs_diff(&via_sparse, &via_oracle) / scale < 1e-8);
        }
    }

    #[test]
    fn propagated_error_shrinks_with_order() {
        let g = grid_graph(3, 3).unwrap();
        let op = NormalizedOperator::laplacian(&g);
        let dec = eigendecompose(&op).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let x = random_vec(&mut rng, 9);
        let h = named_filter("exp_low").unwrap();
        let target = exact_filter_apply(&dec, &h, &x).unwrap();
        let err = |order: usize| -> f64 {
            let c = design_coeffs(&h, order).unwrap();
            let z = apply_filter(&op, &c, &x).unwrap();
            let d: Vec<f64> = z.iter().zip(&target).map(|(a, b)| a - b).collect();
            norm(&d) / norm(&x)
        };
        let (e4, e10, e40) = (err(4), err(10), err(40));
        assert!(e40 < e10 && e10 < e4, "{e4} {e10} {e40}");
    }

    #[test]
    fn linear_in_theta() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let g = random_graph(&mut rng, 20, 0.3);
        let op = NormalizedOperator::laplacian(&g);
        let x = random_vec(&mut rng, 20);
        let ta: Vec<f64> = (0..6).map(|_| rng.random::<f64>()).collect();
        let tb: Vec<f64> = (0..6).map(|_| rng.random::<f64>()).collect();
        let sum: Vec<f64> = ta.iter().zip(&tb).map(|(a, b)| a + b).collect();

        let za = apply_filter(&op, &BernCoeffs::new(ta).unwrap(), &x).unwrap();
        let zb = apply_filter(&op, &BernCoeffs::new(tb).unwrap(), &x).unwrap();
        let zs = apply_filter(&op, &BernCoeffs::new(sum).unwrap(), &x).unwrap();
        let combined: Vec<f64> = za.iter().zip(&zb).map(|(a, b)| a + b).collect();
        assert!(max_abs_diff(&zs, &combined) < 1e-10);
    }

    #[test]
    fn norm_never_grows_for_unit_range_coeffs() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..5 {
            let n = rng.random_range(5..30);
            let g = random_graph(&mut rng, n, 0.3);
            let op = NormalizedOperator::laplacian(&g);
            let theta: Vec<f64> = (0..11).map(|_| rng.random::<f64>()).collect();
            let c = BernCoeffs::new(theta).unwrap();
            let x = random_vec(&mut rng, n);
            let z = apply_filter(&op, &c, &x).unwrap();
            assert!(norm(&z) <= norm(&x) * (1.0 + 1e-9));
        }
    }

    #[test]
    fn basis_cache_matches_direct_application() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        let g = random_graph(&mut rng, 18, 0.3);
        let op = NormalizedOperator::laplacian(&g);
        let x = random_vec(&mut rng, 18);
        let order = 6;
        let cache = BasisCache::build(&op, order, &x).unwrap();
        assert_eq!(cache.order(), order);

        let theta: Vec<f64> = (0..=order).map(|_| rng.random::<f64>()).collect();
        let via_cache = cache.combine(&theta);
        let direct = apply_filter(&op, &BernCoeffs::new(theta).unwrap(), &x).unwrap();
        assert!(max_abs_diff(&via_cache, &direct) < 1e-12);

        // partition of unity at the operator level
        let ones = vec![1.0; order + 1];
        assert!(max_abs_diff(&cache.combine(&ones), &x) < 1e-8);

        // each basis operator is positive semidefinite
        for k in 0..=order {
            assert!(dot(cache.term(k), &x) >= -1e-9);
        }

        // degenerate order: the cache holds the input itself
        let trivial = BasisCache::build(&op, 0, &x).unwrap();
        assert!(max_abs_diff(trivial.term(0), &x) < 1e-15);
    }

    #[test]
    fn basis_operators_are_symmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let g = random_graph(&mut rng, 15, 0.3);
        let op = NormalizedOperator::laplacian(&g);
        let x = random_vec(&mut rng, 15);
        let y = random_vec(&mut rng, 15);
        let cx = BasisCache::build(&op, 5, &x).unwrap();
        let cy = BasisCache::build(&op, 5, &y).unwrap();
        for k in 0..=5 {
            let bxy = dot(cx.term(k), &y);
            let byx = dot(cy.term(k), &x);
            assert!((bxy - byx).abs() < 1e-9);
        }
    }

    #[test]
    fn matrix_application_matches_columns_and_serial() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let g = random_graph(&mut rng, 20, 0.25);
        let op = NormalizedOperator::laplacian(&g);
        let d = 3;
        let data: Vec<f64> = (0..20 * d).map(|_| rng.random::<f64>()).collect();
        let x = Matrix::from_vec(20, d, data).unwrap();
        let theta: Vec<f64> = (0..8).map(|_| rng.random::<f64>()).collect();
        let c = BernCoeffs::new(theta).unwrap();

        let z = apply_filter_matrix(&op, &c, &x).unwrap();
        let z_serial = apply_filter_matrix_serial(&op, &c, &x).unwrap();
        assert_eq!(z, z_serial);

        for j in 0..d {
            let col = apply_filter(&op, &c, &x.column(j)).unwrap();
            assert!(max_abs_diff(&col, &z.column(j)) < 1e-12);
        }
    }

    #[test]
    fn dense_filter_matrix_is_symmetric() {
        let g = grid_graph(3, 4).unwrap();
        let n = g.node_count();
        let op = NormalizedOperator::laplacian(&g);
        let theta: Vec<f64> = (0..=6).map(|k| 1.0 / (k + 1) as f64).collect();
        let c = BernCoeffs::new(theta).unwrap();
        let z = apply_filter_matrix(&op, &c, &Matrix::identity(n)).unwrap();
        for u in 0..n {
            for v in 0..n {
                assert!((z.get(u, v) - z.get(v, u)).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn matrix_cache_matches_vector_cache() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let g = random_graph(&mut rng, 12, 0.4);
        let op = NormalizedOperator::laplacian(&g);
        let d = 2;
        let data: Vec<f64> = (0..12 * d).map(|_| rng.random::<f64>()).collect();
        let x = Matrix::from_vec(12, d, data).unwrap();
        let mc = MatrixBasisCache::build(&op, 4, &x).unwrap();
        for j in 0..d {
            let vc = BasisCache::build(&op, 4, &x.column(j)).unwrap();
            for k in 0..=4 {
                assert!(max_abs_diff(vc.term(k), &mc.term(k).column(j)) < 1e-13);
            }
        }
    }
}
