//! Learning a non-negative spectral filter from an (input, filtered-target)
//! signal pair by projected gradient descent.
//!
//! The prediction is linear in the coefficients through the cached basis
//! terms, so the masked squared-error gradient is analytic. Coefficients are
//! clamped at zero after every optimizer step, which keeps every learned
//! filter response non-negative on the whole spectrum.

use crate::bernstein::{BernCoeffs, FilterFn, MAX_ORDER};
use crate::error::{Error, Result};
use crate::graph::{Graph, NormalizedOperator};
use crate::optim::Adam;
use crate::oracle::{eigendecompose, exact_filter_apply};
use crate::propagation::BasisCache;

/// One filter regression problem on a graph.
#[derive(Debug, Clone)]
pub struct RegressionTask<'g> {
    pub graph: &'g Graph,
    /// Input signal, length n.
    pub input: Vec<f64>,
    /// Target filtered signal, length n.
    pub target: Vec<f64>,
    /// Nodes that count toward the loss.
    pub mask: Vec<bool>,
}

impl<'g> RegressionTask<'g> {
    pub fn new(
        graph: &'g Graph,
        input: Vec<f64>,
        target: Vec<f64>,
        mask: Vec<bool>,
    ) -> Result<Self> {
        let n = graph.node_count();
        for (name, v) in [("input", &input), ("target", &target)] {
            if v.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: v.len(),
                });
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFinite {
                    context: format!("{name} signal"),
                });
            }
        }
        if mask.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: mask.len(),
            });
        }
        if !mask.iter().any(|&m| m) {
            return Err(Error::EmptyMask);
        }
        Ok(Self {
            graph,
            input,
            target,
            mask,
        })
    }

    /// Mask that keeps every node.
    pub fn full_mask(n: usize) -> Vec<bool> {
        vec![true; n]
    }
}

#[derive(Debug, Clone)]
pub struct LearnConfig {
    pub order: usize,
    pub learning_rate: f64,
    pub max_epochs: usize,
    /// Stop when the loss has not improved for this many consecutive epochs.
    pub patience: usize,
    pub seed: u64,
    /// Number of stacked convolutions sharing the same coefficients (1 or 2).
    pub layers: usize,
}

impl Default for LearnConfig {
    fn default() -> Self {
        Self {
            order: 10,
            learning_rate: 0.01,
            max_epochs: 2000,
            patience: 100,
            seed: 42,
            layers: 1,
        }
    }
}

/// Fit result: the learned coefficients plus quality metrics.
#[derive(Debug, Clone)]
pub struct FitReport {
    pub coeffs: BernCoeffs,
    pub sse: f64,
    /// None when the masked target has zero variance.
    pub r_squared: Option<f64>,
    pub loss_trajectory: Vec<f64>,
}

/// Masked sum of squared errors and the coefficient of determination.
pub fn sse_and_r2(pred: &[f64], target: &[f64], mask: &[bool]) -> Result<(f64, Option<f64>)> {
    if pred.len() != target.len() || pred.len() != mask.len() {
        return Err(Error::DimensionMismatch {
            expected: pred.len(),
            got: target.len().max(mask.len()),
        });
    }
    let count = mask.iter().filter(|&&m| m).count();
    if count == 0 {
        return Err(Error::EmptyMask);
    }
    let mut sse = 0.0;
    let mut mean = 0.0;
    for i in 0..pred.len() {
        if mask[i] {
            let d = pred[i] - target[i];
            sse += d * d;
            mean += target[i];
        }
    }
    mean /= count as f64;
    let mut tss = 0.0;
    for i in 0..pred.len() {
        if mask[i] {
            let d = target[i] - mean;
            tss += d * d;
        }
    }
    let r2 = if tss > 0.0 {
        Some(1.0 - sse / tss)
    } else {
        None
    };
    Ok((sse, r2))
}

/// Builds a regression task whose target is the exact (dense) filtering of
/// the input.
pub fn make_regression_task<'g>(
    graph: &'g Graph,
    h: &FilterFn,
    input: Vec<f64>,
    mask: Vec<bool>,
) -> Result<RegressionTask<'g>> {
    let op = NormalizedOperator::laplacian(graph);
    let dec = eigendecompose(&op)?;
    let target = exact_filter_apply(&dec, h, &input)?;
    RegressionTask::new(graph, input, target, mask)
}

struct ForwardState {
    /// Prediction at the current coefficients.
    pred: Vec<f64>,
    /// Basis terms of the final layer's input; grads read these.
    last_cache: BasisCache,
}

fn forward(
    op: &NormalizedOperator,
    input_cache: &BasisCache,
    theta: &[f64],
    layers: usize,
) -> Result<ForwardState> {
    if layers == 1 {
        return Ok(ForwardState {
            pred: input_cache.combine(theta),
            last_cache: input_cache.clone(),
        });
    }
    // two stacked convolutions sharing theta: rebuild the basis on the
    // intermediate signal each step
    let mid = input_cache.combine(theta);
    let cache2 = BasisCache::build(op, input_cache.order(), &mid)?;
    Ok(ForwardState {
        pred: cache2.combine(theta),
        last_cache: cache2,
    })
}

/// Learns non-negative coefficients minimizing the masked squared error.
pub fn learn_filter(task: &RegressionTask, cfg: &LearnConfig) -> Result<FitReport> {
    if cfg.order > MAX_ORDER {
        return Err(Error::OrderTooLarge {
            order: cfg.order,
            max: MAX_ORDER,
        });
    }
    if !(cfg.layers == 1 || cfg.layers == 2) {
        return Err(Error::ParamOutOfRange {
            name: "layers",
            value: cfg.layers as f64,
            range: "{1, 2}",
        });
    }
    if !task.mask.iter().any(|&m| m) {
        return Err(Error::EmptyMask);
    }

    let op = NormalizedOperator::laplacian(task.graph);
    let input_cache = BasisCache::build(&op, cfg.order, &task.input)?;

    // all-pass start: a valid filter with no dead-at-zero coefficients
    let mut theta = vec![1.0; cfg.order + 1];
    let mut adam = Adam::new(theta.len(), cfg.learning_rate);

    let mut best_theta = theta.clone();
    let mut best_loss = f64::INFINITY;
    let mut stall = 0usize;
    let mut trajectory = Vec::new();

    // layer-count factor from the shared-coefficient product rule
    let grad_factor = 2.0 * cfg.layers as f64;

    for epoch in 0..cfg.max_epochs {
        let state = forward(&op, &input_cache, &theta, cfg.layers)?;

        let mut residual = vec![0.0; state.pred.len()];
        let mut loss = 0.0;
        for (i, r) in residual.iter_mut().enumerate() {
            if task.mask[i] {
                let d = state.pred[i] - task.target[i];
                *r = d;
                loss += d * d;
            }
        }
        if !loss.is_finite() {
            return Err(Error::Diverged { epoch });
        }
        trajectory.push(loss);

        if loss < best_loss {
            best_loss = loss;
            best_theta = theta.clone();
            stall = 0;
        } else {
            stall += 1;
            if stall >= cfg.patience {
                break;
            }
        }

        let mut grads = state.last_cache.inner_products(&residual);
        for g in grads.iter_mut() {
            *g *= grad_factor;
        }
        adam.update(&mut theta, &grads);
        for t in theta.iter_mut() {
            if *t < 0.0 {
                *t = 0.0;
            }
        }
    }

    let state = forward(&op, &input_cache, &best_theta, cfg.layers)?;
    let (sse, r_squared) = sse_and_r2(&state.pred, &task.target, &task.mask)?;
    Ok(FitReport {
        coeffs: BernCoeffs::new(best_theta)?,
        sse,
        r_squared,
        loss_trajectory: trajectory,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bernstein::{design_coeffs, eval_filter, named_filter};
    use crate::graph::{build_graph, grid_graph};
    use crate::propagation::apply_filter;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
        (0..n).map(|_| rng.random::<f64>()).collect()
    }

    #[test]
    fn sse_and_r2_hand_values() {
        let mask = vec![true, true];
        assert_eq!(
            sse_and_r2(&[1.0, 2.0], &[1.0, 2.0], &mask).unwrap(),
            (0.0, Some(1.0))
        );
        // constant prediction at the target mean scores zero
        let (_, r2) = sse_and_r2(&[1.0, 1.0], &[0.0, 2.0], &mask).unwrap();
        assert!((r2.unwrap() - 0.0).abs() < 1e-15);
        let (sse, r2) = sse_and_r2(&[0.0, 1.0], &[0.0, 2.0], &mask).unwrap();
        assert_eq!(sse, 1.0);
        assert!((r2.unwrap() - 0.5).abs() < 1e-15);
        // zero-variance target has no defined score
        let (_, r2) = sse_and_r2(&[1.0, 1.0], &[2.0, 2.0], &mask).unwrap();
        assert!(r2.is_none());
        assert!(sse_and_r2(&[1.0], &[1.0], &[false]).is_err());
    }

    #[test]
    fn mask_restricts_the_loss() {
        let g = grid_graph(2, 2).unwrap();
        let pred = [0.0, 5.0, 0.0, 1.0];
        let target = [0.0, 0.0, 0.0, 0.0];
        let mask = vec![true, false, true, true];
        let (sse, _) = sse_and_r2(&pred, &target, &mask).unwrap();
        assert_eq!(sse, 1.0);
        drop(g);
    }

    #[test]
    fn oracle_task_for_all_pass_is_the_input() {
        let g = grid_graph(3, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = random_vec(&mut rng, 9);
        let task = make_regression_task(
            &g,
            &named_filter("all_pass").unwrap(),
            x.clone(),
            RegressionTask::full_mask(9),
        )
        .unwrap();
        assert!(crate::dense::max_abs_diff(&task.input, &task.target) < 1e-8);
    }

    #[test]
    fn high_pass_of_constant_signal_is_near_zero() {
        // a constant-ish signal lives at the bottom of the spectrum on a
        // regular graph, where 1 - exp(-10 l^2) vanishes
        let g = build_graph(&[(0, 1), (1, 2), (2, 3), (3, 0)], 4).unwrap();
        let task = make_regression_task(
            &g,
            &named_filter("exp_high").unwrap(),
            vec![1.0; 4],
            RegressionTask::full_mask(4),
        )
        .unwrap();
        assert!(task.target.iter().all(|&v| v.abs() < 1e-8));
    }

    #[test]
    fn learns_the_all_pass_target() {
        let g = grid_graph(4, 4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x = random_vec(&mut rng, 16);
        let task =
            RegressionTask::new(&g, x.clone(), x.clone(), RegressionTask::full_mask(16)).unwrap();
        let cfg = LearnConfig {
            order: 5,
            ..Default::default()
        };
        let report = learn_filter(&task, &cfg).unwrap();
        assert!(report.sse <= 1e-6, "sse = {}", report.sse);
        for i in 0..=20 {
            let l = 0.1 * i as f64;
            assert!((eval_filter(&report.coeffs, l).unwrap() - 1.0).abs() < 0.05);
        }
    }

    #[test]
    fn recovers_a_realizable_filter_response() {
        let g = grid_graph(4, 5).unwrap();
        let op = NormalizedOperator::laplacian(&g);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = random_vec(&mut rng, 20);
        let truth = design_coeffs(&named_filter("exp_low").unwrap(), 6).unwrap();
        let z = apply_filter(&op, &truth, &x).unwrap();
        let task = RegressionTask::new(&g, x, z, RegressionTask::full_mask(20)).unwrap();
        let cfg = LearnConfig {
            order: 6,
            max_epochs: 4000,
            patience: 400,
            ..Default::default()
        };
        let report = learn_filter(&task, &cfg).unwrap();
        assert!(report.sse <= 1e-6, "sse = {}", report.sse);
        let sup: f64 = (0..=100)
            .map(|i| {
                let l = 2.0 * i as f64 / 100.0;
                (eval_filter(&report.coeffs, l).unwrap() - eval_filter(&truth, l).unwrap()).abs()
            })
            .fold(0.0, f64::max);
        assert!(sup < 0.02, "sup-norm gap {sup}");
    }

    #[test]
    fn loss_decreases_and_coeffs_stay_non_negative() {
        let g = grid_graph(4, 4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let x = random_vec(&mut rng, 16);
        let task = make_regression_task(
            &g,
            &named_filter("exp_low").unwrap(),
            x,
            RegressionTask::full_mask(16),
        )
        .unwrap();
        let cfg = LearnConfig {
            max_epochs: 200,
            ..Default::default()
        };
        let report = learn_filter(&task, &cfg).unwrap();
        let first = report.loss_trajectory[0];
        let last = *report.loss_trajectory.last().unwrap();
        assert!(last < first);
        assert!(report.coeffs.theta().iter().all(|&t| t >= 0.0));
    }

    #[test]
    fn analytic_gradient_matches_finite_differences() {
        for layers in [1, 2] {
            let g = grid_graph(3, 3).unwrap();
            let op = NormalizedOperator::laplacian(&g);
            let mut rng = ChaCha8Rng::seed_from_u64(5);
            let x = random_vec(&mut rng, 9);
            let target = random_vec(&mut rng, 9);
            let mask: Vec<bool> = (0..9).map(|i| i % 3 != 0).collect();
            let order = 4;
            let cache = BasisCache::build(&op, order, &x).unwrap();
            let theta: Vec<f64> = (0..=order).map(|_| rng.random::<f64>()).collect();

            let loss_at = |th: &[f64]| -> f64 {
                let state = forward(&op, &cache, th, layers).unwrap();
                state
                    .pred
                    .iter()
                    .zip(&target)
                    .zip(&mask)
                    .filter(|(_, &m)| m)
                    .map(|((p, t), _)| (p - t) * (p - t))
                    .sum()
            };

            let state = forward(&op, &cache, &theta, layers).unwrap();
            let residual: Vec<f64> = state
                .pred
                .iter()
                .zip(&target)
                .zip(&mask)
                .map(|((p, t), &m)| if m { p - t } else { 0.0 })
                .collect();
            let factor = 2.0 * layers as f64;
            let analytic: Vec<f64> = state
                .last_cache
                .inner_products(&residual)
                .iter()
                .map(|g| g * factor)
                .collect();

            let eps = 1e-5;
            for k in 0..=order {
                let mut plus = theta.clone();
                plus[k] += eps;
                let mut minus = theta.clone();
                minus[k] -= eps;
                let fd = (loss_at(&plus) - loss_at(&minus)) / (2.0 * eps);
                let denom = analytic[k].abs().max(fd.abs()).max(1e-6);
                assert!(
                    (analytic[k] - fd).abs() / denom < 1e-4,
                    "layers {layers} k {k}: analytic {} vs fd {fd}",
                    analytic[k]
                );
            }
        }
    }

    #[test]
    fn empty_mask_is_rejected() {
        let g = grid_graph(2, 2).unwrap();
        assert!(RegressionTask::new(&g, vec![0.0; 4], vec![0.0; 4], vec![false; 4]).is_err());
    }
}
