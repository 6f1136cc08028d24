//! Full-supervised node classification: a two-layer perceptron feature
//! transform followed by spectral propagation, trained end to end with
//! manual gradients.
//!
//! The propagation coefficients are a trainable parameter group of their
//! own, clamped non-negative after every optimizer step, so the learned
//! spectral response is non-negative over the whole spectrum by
//! construction. Linear layers and propagation use separate learning rates
//! and dropout rates.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::bernstein::BernCoeffs;
use crate::dense::Matrix;
use crate::error::{Error, Result};
use crate::graph::{Graph, NormalizedOperator};
use crate::optim::Adam;
use crate::propagation::{apply_filter_matrix, MatrixBasisCache};

/// A node classification dataset: graph, features, integer labels.
#[derive(Debug, Clone)]
pub struct NodeDataset {
    pub graph: Graph,
    /// n-by-d feature matrix.
    pub features: Matrix,
    /// Class id per node, each in [0, num_classes).
    pub labels: Vec<usize>,
    pub num_classes: usize,
}

impl NodeDataset {
    pub fn new(graph: Graph, features: Matrix, labels: Vec<usize>) -> Result<Self> {
        let n = graph.node_count();
        if features.rows() != n {
            return Err(Error::RowCountMismatch {
                file: "features".into(),
                expected: n,
                found: features.rows(),
            });
        }
        if labels.len() != n {
            return Err(Error::RowCountMismatch {
                file: "labels".into(),
                expected: n,
                found: labels.len(),
            });
        }
        if !features.is_finite() {
            return Err(Error::NonFinite {
                context: "features".into(),
            });
        }
        let num_classes = labels.iter().max().map_or(0, |&m| m + 1);
        if num_classes < 2 {
            return Err(Error::InvalidData(
                "labels must contain at least two classes".into(),
            ));
        }
        Ok(Self {
            graph,
            features,
            labels,
            num_classes,
        })
    }

    pub fn node_count(&self) -> usize {
        self.graph.node_count()
    }

    pub fn feature_dim(&self) -> usize {
        self.features.cols()
    }
}

/// Disjoint train/validation/test node masks.
#[derive(Debug, Clone)]
pub struct SplitMasks {
    pub train: Vec<bool>,
    pub val: Vec<bool>,
    pub test: Vec<bool>,
}

impl SplitMasks {
    pub fn validate(&self, n: usize) -> Result<()> {
        if self.train.len() != n || self.val.len() != n || self.test.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: self.train.len(),
            });
        }
        for i in 0..n {
            let count = self.train[i] as usize + self.val[i] as usize + self.test[i] as usize;
            if count > 1 {
                return Err(Error::InvalidData(format!(
                    "node {i} assigned to multiple splits"
                )));
            }
        }
        if !self.train.iter().any(|&m| m) {
            return Err(Error::EmptyMask);
        }
        Ok(())
    }
}

/// Random 60/20/20 split, deterministic per seed. Split sizes are within
/// one node of the exact ratios.
pub fn make_splits(n: usize, seed: u64) -> Result<SplitMasks> {
    if n < 5 {
        return Err(Error::InvalidData(format!(
            "need at least 5 nodes to split 60/20/20, got {n}"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);

    let n_train = (0.6 * n as f64).round() as usize;
    let n_val = (0.2 * n as f64).round() as usize;
    let mut train = vec![false; n];
    let mut val = vec![false; n];
    let mut test = vec![false; n];
    for (i, &node) in order.iter().enumerate() {
        if i < n_train {
            train[node] = true;
        } else if i < n_train + n_val {
            val[node] = true;
        } else {
            test[node] = true;
        }
    }
    Ok(SplitMasks { train, val, test })
}

/// All trainable parameters.
#[derive(Debug, Clone)]
pub struct ModelParams {
    pub w1: Matrix,
    pub b1: Vec<f64>,
    pub w2: Matrix,
    pub b2: Vec<f64>,
    pub theta: Vec<f64>,
}

impl ModelParams {
    /// Glorot-uniform linear weights; all-pass propagation start.
    pub fn init(
        feature_dim: usize,
        hidden_dim: usize,
        num_classes: usize,
        order: usize,
        rng: &mut ChaCha8Rng,
    ) -> Self {
        let glorot = |rows: usize, cols: usize, rng: &mut ChaCha8Rng| {
            let bound = (6.0 / (rows + cols) as f64).sqrt();
            let data = (0..rows * cols)
                .map(|_| rng.random_range(-bound..bound))
                .collect();
            Matrix::from_vec(rows, cols, data).expect("sized by construction")
        };
        Self {
            w1: glorot(feature_dim, hidden_dim, rng),
            b1: vec![0.0; hidden_dim],
            w2: glorot(hidden_dim, num_classes, rng),
            b2: vec![0.0; num_classes],
            theta: vec![1.0; order + 1],
        }
    }

    pub fn coeffs(&self) -> Result<BernCoeffs> {
        BernCoeffs::new(self.theta.clone())
    }
}

/// Training hyperparameters. Linear layers and the propagation layer get
/// separate learning rates and dropout rates.
#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub lr_linear: f64,
    pub lr_prop: f64,
    pub dropout_linear: f64,
    pub dropout_prop: f64,
    pub weight_decay: f64,
    pub hidden_dim: usize,
    pub order: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lr_linear: 0.01,
            lr_prop: 0.01,
            dropout_linear: 0.5,
            dropout_prop: 0.5,
            weight_decay: 0.0005,
            hidden_dim: 64,
            order: 10,
            max_epochs: 1000,
            patience: 200,
            seed: 42,
        }
    }
}

/// Inverted dropout factors: 0 with probability `rate`, otherwise
/// 1/(1-rate). A rate of zero draws nothing from the rng.
fn dropout_mask(rows: usize, cols: usize, rate: f64, rng: &mut ChaCha8Rng) -> Option<Matrix> {
    if rate <= 0.0 {
        return None;
    }
    let keep = 1.0 / (1.0 - rate);
    let data = (0..rows * cols)
        .map(|_| {
            if rng.random::<f64>() < rate {
                0.0
            } else {
                keep
            }
        })
        .collect();
    Some(Matrix::from_vec(rows, cols, data).expect("sized by construction"))
}

fn apply_mask(m: &Matrix, mask: &Option<Matrix>) -> Matrix {
    match mask {
        Some(f) => {
            let mut out = m.clone();
            for (o, &s) in out.data_mut().iter_mut().zip(f.data()) {
                *o *= s;
            }
            out
        }
        None => m.clone(),
    }
}

fn add_row_bias(m: &mut Matrix, bias: &[f64]) {
    let cols = m.cols();
    for r in 0..m.rows() {
        let row = m.row_mut(r);
        for c in 0..cols {
            row[c] += bias[c];
        }
    }
}

/// Intermediate activations kept for the backward pass.
pub struct ForwardCache {
    x_drop: Matrix,
    pre1: Matrix,
    h_drop: Matrix,
    drop_mask_h: Option<Matrix>,
    drop_mask_f: Option<Matrix>,
    /// Basis terms of the propagated matrix; the coefficient gradient and
    /// the backward propagation both read it.
    prop_cache: MatrixBasisCache,
}

/// Forward pass: perceptron, dropout, then spectral propagation of the
/// class scores. Returns logits and the activations needed for gradients.
pub fn forward(
    params: &ModelParams,
    dataset: &NodeDataset,
    cfg: &TrainConfig,
    train_mode: bool,
    rng: &mut ChaCha8Rng,
) -> Result<(Matrix, ForwardCache)> {
    let n = dataset.node_count();
    let op = NormalizedOperator::laplacian(&dataset.graph);

    let (p_lin, p_prop) = if train_mode {
        (cfg.dropout_linear, cfg.dropout_prop)
    } else {
        (0.0, 0.0)
    };

    let drop_mask_x = dropout_mask(n, dataset.feature_dim(), p_lin, rng);
    let x_drop = apply_mask(&dataset.features, &drop_mask_x);

    let mut pre1 = x_drop.matmul(&params.w1);
    add_row_bias(&mut pre1, &params.b1);
    let h = pre1.map(|v| v.max(0.0));

    let drop_mask_h = dropout_mask(n, h.cols(), p_lin, rng);
    let h_drop = apply_mask(&h, &drop_mask_h);

    let mut f = h_drop.matmul(&params.w2);
    add_row_bias(&mut f, &params.b2);

    let drop_mask_f = dropout_mask(n, f.cols(), p_prop, rng);
    let f_drop = apply_mask(&f, &drop_mask_f);

    let prop_cache = MatrixBasisCache::build(&op, params.theta.len() - 1, &f_drop)?;
    let logits = prop_cache.combine(&params.theta);
    if !logits.is_finite() {
        return Err(Error::NonFinite {
            context: "logits".into(),
        });
    }
    Ok((
        logits,
        ForwardCache {
            x_drop,
            pre1,
            h_drop,
            drop_mask_h,
            drop_mask_f,
            prop_cache,
        },
    ))
}

/// Dropout-free forward pass producing logits only.
pub fn predict_logits(params: &ModelParams, dataset: &NodeDataset) -> Result<Matrix> {
    let op = NormalizedOperator::laplacian(&dataset.graph);
    let mut pre1 = dataset.features.matmul(&params.w1);
    add_row_bias(&mut pre1, &params.b1);
    let h = pre1.map(|v| v.max(0.0));
    let mut f = h.matmul(&params.w2);
    add_row_bias(&mut f, &params.b2);
    apply_filter_matrix(&op, &BernCoeffs::new(params.theta.clone())?, &f)
}

/// Gradients for every parameter block.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub w1: Matrix,
    pub b1: Vec<f64>,
    pub w2: Matrix,
    pub b2: Vec<f64>,
    pub theta: Vec<f64>,
}

fn row_softmax(logits: &Matrix) -> Matrix {
    let mut out = logits.clone();
    for r in 0..out.rows() {
        let row = out.row_mut(r);
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        for v in row.iter_mut() {
            *v /= sum;
        }
    }
    out
}

/// Mean masked cross-entropy plus L2 penalty on the linear weights, with
/// analytic gradients for every parameter block. The coefficient gradient
/// reads the per-term basis cache; the rest is standard backpropagation.
pub fn loss_and_grads(
    params: &ModelParams,
    dataset: &NodeDataset,
    mask: &[bool],
    cfg: &TrainConfig,
    train_mode: bool,
    rng: &mut ChaCha8Rng,
) -> Result<(f64, Gradients)> {
    let n = dataset.node_count();
    if mask.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: mask.len(),
        });
    }
    let m_count = mask.iter().filter(|&&m| m).count();
    if m_count == 0 {
        return Err(Error::EmptyMask);
    }

    let (logits, cache) = forward(params, dataset, cfg, train_mode, rng)?;
    let probs = row_softmax(&logits);

    let mut loss = 0.0;
    let mut dz = Matrix::zeros(n, dataset.num_classes);
    let inv_m = 1.0 / m_count as f64;
    for (i, &masked) in mask.iter().enumerate() {
        if !masked {
            continue;
        }
        let y = dataset.labels[i];
        let p = probs.get(i, y).max(1e-300);
        loss -= p.ln() * inv_m;
        for c in 0..dataset.num_classes {
            let grad = (probs.get(i, c) - if c == y { 1.0 } else { 0.0 }) * inv_m;
            dz.set(i, c, grad);
        }
    }
    loss += 0.5 * cfg.weight_decay * (params.w1.frobenius_sq() + params.w2.frobenius_sq());

    // d theta_k = <dZ, B_k F>
    let d_theta = cache.prop_cache.inner_products(&dz);

    // back through the (symmetric) propagation: dF = sum_k theta_k B_k dZ,
    // then through dropout on F
    let op = NormalizedOperator::laplacian(&dataset.graph);
    let df_drop = apply_filter_matrix(&op, &BernCoeffs::new(params.theta.clone())?, &dz)?;
    let df = apply_mask(&df_drop, &cache.drop_mask_f);

    let mut dw2 = cache.h_drop.matmul_transpose_left(&df);
    dw2.axpy(cfg.weight_decay, &params.w2);
    let mut db2 = vec![0.0; params.b2.len()];
    for r in 0..n {
        for (c, b) in db2.iter_mut().enumerate() {
            *b += df.get(r, c);
        }
    }

    let dh_drop = df.matmul_transpose_right(&params.w2);
    let dh = apply_mask(&dh_drop, &cache.drop_mask_h);
    let mut dpre1 = dh;
    for (g, &p) in dpre1.data_mut().iter_mut().zip(cache.pre1.data()) {
        if p <= 0.0 {
            *g = 0.0;
        }
    }

    let mut dw1 = cache.x_drop.matmul_transpose_left(&dpre1);
    dw1.axpy(cfg.weight_decay, &params.w1);
    let mut db1 = vec![0.0; params.b1.len()];
    for r in 0..n {
        for (c, b) in db1.iter_mut().enumerate() {
            *b += dpre1.get(r, c);
        }
    }

    Ok((
        loss,
        Gradients {
            w1: dw1,
            b1: db1,
            w2: dw2,
            b2: db2,
            theta: d_theta,
        },
    ))
}

/// Evaluation loss (dropout off) over a mask.
fn eval_loss(params: &ModelParams, dataset: &NodeDataset, mask: &[bool]) -> Result<f64> {
    let logits = predict_logits(params, dataset)?;
    let probs = row_softmax(&logits);
    let m_count = mask.iter().filter(|&&m| m).count().max(1);
    let mut loss = 0.0;
    for (i, &masked) in mask.iter().enumerate() {
        if masked {
            let p = probs.get(i, dataset.labels[i]).max(1e-300);
            loss -= p.ln();
        }
    }
    Ok(loss / m_count as f64)
}

/// Fraction of masked nodes whose argmax class matches the label. Equals
/// the micro-F1 score in this single-label setting.
pub fn accuracy(logits: &Matrix, labels: &[usize], mask: &[bool]) -> f64 {
    let mut hit = 0usize;
    let mut total = 0usize;
    for i in 0..labels.len() {
        if !mask[i] {
            continue;
        }
        total += 1;
        let row = logits.row(i);
        let mut best = 0;
        for c in 1..row.len() {
            if row[c] > row[best] {
                best = c;
            }
        }
        if best == labels[i] {
            hit += 1;
        }
    }
    if total == 0 {
        return 0.0;
    }
    hit as f64 / total as f64
}

/// Per-epoch metrics kept for reporting.
#[derive(Debug, Clone, Copy)]
pub struct EpochMetrics {
    pub train_loss: f64,
    pub val_loss: f64,
}

/// Result of a single training run.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: ModelParams,
    pub history: Vec<EpochMetrics>,
    pub best_epoch: usize,
    pub test_accuracy: f64,
}

/// Trains with Adam in two parameter groups (linear vs propagation),
/// clamping the propagation coefficients at zero after every step. Early
/// stopping monitors validation loss; the returned parameters are the best
/// validation snapshot.
pub fn train(
    dataset: &NodeDataset,
    splits: &SplitMasks,
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    splits.validate(dataset.node_count())?;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut params = ModelParams::init(
        dataset.feature_dim(),
        cfg.hidden_dim,
        dataset.num_classes,
        cfg.order,
        &mut rng,
    );

    let mut adam_w1 = Adam::new(params.w1.data().len(), cfg.lr_linear);
    let mut adam_b1 = Adam::new(params.b1.len(), cfg.lr_linear);
    let mut adam_w2 = Adam::new(params.w2.data().len(), cfg.lr_linear);
    let mut adam_b2 = Adam::new(params.b2.len(), cfg.lr_linear);
    let mut adam_theta = Adam::new(params.theta.len(), cfg.lr_prop);

    let mut best = params.clone();
    let mut best_val = f64::INFINITY;
    let mut best_epoch = 0usize;
    let mut stall = 0usize;
    let mut history = Vec::new();

    for epoch in 0..cfg.max_epochs {
        let (train_loss, grads) =
            loss_and_grads(&params, dataset, &splits.train, cfg, true, &mut rng)?;
        if !train_loss.is_finite() {
            return Err(Error::Diverged { epoch });
        }

        adam_w1.update(params.w1.data_mut(), grads.w1.data());
        adam_b1.update(&mut params.b1, &grads.b1);
        adam_w2.update(params.w2.data_mut(), grads.w2.data());
        adam_b2.update(&mut params.b2, &grads.b2);
        adam_theta.update(&mut params.theta, &grads.theta);
        for t in params.theta.iter_mut() {
            if *t < 0.0 {
                *t = 0.0;
            }
        }

        let val_loss = eval_loss(&params, dataset, &splits.val)?;
        history.push(EpochMetrics {
            train_loss,
            val_loss,
        });

        if val_loss < best_val {
            best_val = val_loss;
            best = params.clone();
            best_epoch = epoch;
            stall = 0;
        } else {
            stall += 1;
            if stall >= cfg.patience {
                break;
            }
        }
    }

    let logits = predict_logits(&best, dataset)?;
    let test_accuracy = accuracy(&logits, &dataset.labels, &splits.test);
    Ok(TrainOutcome {
        params: best,
        history,
        best_epoch,
        test_accuracy,
    })
}

/// Aggregate of repeated runs over freshly drawn splits.
#[derive(Debug, Clone)]
pub struct SplitRunReport {
    pub accuracies: Vec<f64>,
    pub mean_accuracy: f64,
    /// Sample standard deviation (zero for a single split).
    pub std_accuracy: f64,
    /// Outcome of the run with the highest test accuracy.
    pub best_outcome: TrainOutcome,
}

/// Runs `n_splits` independent trainings on splits seeded
/// `base_seed..base_seed + n_splits`. Runs are independent and collected in
/// seed order, so the report is deterministic; they execute in parallel
/// when the feature is on.
pub fn run_splits(
    dataset: &NodeDataset,
    cfg: &TrainConfig,
    n_splits: usize,
    base_seed: u64,
) -> Result<SplitRunReport> {
    if n_splits == 0 {
        return Err(Error::ParamOutOfRange {
            name: "n_splits",
            value: 0.0,
            range: "[1, inf)",
        });
    }
    let run_one = |s: usize| -> Result<TrainOutcome> {
        let seed = base_seed + s as u64;
        let splits = make_splits(dataset.node_count(), seed)?;
        let run_cfg = TrainConfig {
            seed,
            ..cfg.clone()
        };
        train(dataset, &splits, &run_cfg)
    };

    #[cfg(feature = "parallel")]
    let outcomes: Vec<TrainOutcome> = (0..n_splits)
        .into_par_iter()
        .map(run_one)
        .collect::<Result<_>>()?;
    #[cfg(not(feature = "parallel"))]
    let outcomes: Vec<TrainOutcome> = (0..n_splits).map(run_one).collect::<Result<_>>()?;

    let accuracies: Vec<f64> = outcomes.iter().map(|o| o.test_accuracy).collect();
    let mean = accuracies.iter().sum::<f64>() / n_splits as f64;
    let var = if n_splits > 1 {
        accuracies
            .iter()
            .map(|a| (a - mean) * (a - mean))
            .sum::<f64>()
            / (n_splits - 1) as f64
    } else {
        0.0
    };
    let best_idx = accuracies
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap_or(0);
    let mut outcomes = outcomes;
    Ok(SplitRunReport {
        accuracies,
        mean_accuracy: mean,
        std_accuracy: var.sqrt(),
        best_outcome: outcomes.swap_remove(best_idx),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::build_graph;

    fn tiny_dataset(seed: u64) -> NodeDataset {
        // two 5-cliques joined by one bridge, features carry the cluster id
        // with mild noise
        let mut edges = Vec::new();
        for u in 0..5 {
            for v in (u + 1)..5 {
                edges.push((u, v));
                edges.push((u + 5, v + 5));
            }
        }
        edges.push((0, 5));
        let graph = build_graph(&edges, 10).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut data = Vec::new();
        for i in 0..10 {
            let cluster = (i >= 5) as usize;
            for c in 0..4 {
                let base = if c == cluster { 1.0 } else { 0.0 };
                data.push(base + 0.2 * (rng.random::<f64>() - 0.5));
            }
        }
        let features = Matrix::from_vec(10, 4, data).unwrap();
        let labels = (0..10).map(|i| (i >= 5) as usize).collect();
        NodeDataset::new(graph, features, labels).unwrap()
    }

    #[test]
    fn dataset_validation() {
        let g = build_graph(&[(0, 1)], 3).unwrap();
        let feats = Matrix::zeros(2, 2);
        assert!(matches!(
            NodeDataset::new(g.clone(), feats, vec![0, 1, 0]),
            Err(Error::RowCountMismatch { .. })
        ));
        let feats = Matrix::from_vec(3, 1, vec![0.0, f64::NAN, 1.0]).unwrap();
        assert!(NodeDataset::new(g, feats, vec![0, 1, 0]).is_err());
    }

    #[test]
    fn splits_sizes_and_determinism() {
        let a = make_splits(10, 7).unwrap();
        assert_eq!(a.train.iter().filter(|&&m| m).count(), 6);
        assert_eq!(a.val.iter().filter(|&&m| m).count(), 2);
        assert_eq!(a.test.iter().filter(|&&m| m).count(), 2);
        let b = make_splits(10, 7).unwrap();
        assert_eq!(a.train, b.train);
        assert_eq!(a.val, b.val);
        assert_eq!(a.test, b.test);
        assert!(make_splits(3, 0).is_err());

        for seed in 0..10 {
            let s = make_splits(183, seed).unwrap();
            let train = s.train.iter().filter(|&&m| m).count();
            assert!((109..=110).contains(&train), "train size {train}");
            s.validate(183).unwrap();
        }
    }

    #[test]
    fn uniform_logits_give_log_c_loss() {
        let ds = tiny_dataset(0);
        let cfg = TrainConfig {
            dropout_linear: 0.0,
            dropout_prop: 0.0,
            weight_decay: 0.0,
            hidden_dim: 4,
            order: 3,
            ..Default::default()
        };
        let mut params = ModelParams::init(4, 4, 2, 3, &mut ChaCha8Rng::seed_from_u64(1));
        // zero weights and biases: logits are all equal, loss is ln C
        params.w1.scale(0.0);
        params.w2.scale(0.0);
        let mask = vec![true; 10];
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let (loss, _) = loss_and_grads(&params, &ds, &mask, &cfg, true, &mut rng).unwrap();
        assert!((loss - (2.0f64).ln()).abs() < 1e-12);
    }

    #[test]
    fn all_pass_coefficients_reduce_to_plain_mlp() {
        let ds = tiny_dataset(3);
        let params = ModelParams::init(4, 8, 2, 5, &mut ChaCha8Rng::seed_from_u64(9));
        let logits = predict_logits(&params, &ds).unwrap();

        // reference: the same perceptron without propagation
        let mut pre1 = ds.features.matmul(&params.w1);
        add_row_bias(&mut pre1, &params.b1);
        let h = pre1.map(|v| v.max(0.0));
        let mut mlp = h.matmul(&params.w2);
        add_row_bias(&mut mlp, &params.b2);

        let mask = vec![true; 10];
        let a = accuracy(&logits, &ds.labels, &mask);
        let b = accuracy(&mlp, &ds.labels, &mask);
        assert_eq!(a, b);
        for i in 0..10 {
            let pa = logits.row(i);
            let pb = mlp.row(i);
            let arg = |r: &[f64]| {
                r.iter()
                    .enumerate()
                    .max_by(|x, y| x.1.total_cmp(y.1))
                    .unwrap()
                    .0
            };
            assert_eq!(arg(pa), arg(pb));
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        let ds = tiny_dataset(5);
        let cfg = TrainConfig {
            dropout_linear: 0.0,
            dropout_prop: 0.0,
            weight_decay: 0.001,
            hidden_dim: 3,
            order: 3,
            ..Default::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let params = ModelParams::init(4, 3, 2, 3, &mut rng);
        let mask: Vec<bool> = (0..10).map(|i| i % 2 == 0).collect();

        let mut probe_rng = ChaCha8Rng::seed_from_u64(0);
        let (_, grads) = loss_and_grads(&params, &ds, &mask, &cfg, true, &mut probe_rng).unwrap();

        let loss_of = |p: &ModelParams| -> f64 {
            let mut r = ChaCha8Rng::seed_from_u64(0);
            loss_and_grads(p, &ds, &mask, &cfg, true, &mut r).unwrap().0
        };

        let eps = 1e-5;
        let check = |analytic: f64, fd: f64, what: &str| {
            let denom = analytic.abs().max(fd.abs()).max(1e-6);
            assert!(
                (analytic - fd).abs() / denom < 1e-4,
                "{what}: analytic {analytic} vs fd {fd}"
            );
        };

        for idx in [0usize, 3, 7] {
            let mut plus = params.clone();
            plus.w1.data_mut()[idx] += eps;
            let mut minus = params.clone();
            minus.w1.data_mut()[idx] -= eps;
            check(
                grads.w1.data()[idx],
                (loss_of(&plus) - loss_of(&minus)) / (2.0 * eps),
                "w1",
            );
        }
        for idx in 0..params.theta.len() {
            let mut plus = params.clone();
            plus.theta[idx] += eps;
            let mut minus = params.clone();
            minus.theta[idx] -= eps;
            check(
                grads.theta[idx],
                (loss_of(&plus) - loss_of(&minus)) / (2.0 * eps),
                "theta",
            );
        }
        for idx in 0..params.b2.len() {
            let mut plus = params.clone();
            plus.b2[idx] += eps;
            let mut minus = params.clone();
            minus.b2[idx] -= eps;
            check(
                grads.b2[idx],
                (loss_of(&plus) - loss_of(&minus)) / (2.0 * eps),
                "b2",
            );
        }
    }

    #[test]
    fn learns_the_two_cluster_toy() {
        let ds = tiny_dataset(7);
        let cfg = TrainConfig {
            hidden_dim: 8,
            order: 5,
            max_epochs: 200,
            patience: 50,
            dropout_linear: 0.2,
            dropout_prop: 0.2,
            ..Default::default()
        };
        let splits = make_splits(10, 3).unwrap();
        let outcome = train(&ds, &splits, &cfg).unwrap();
        assert!(outcome.params.theta.iter().all(|&t| t >= 0.0));
        assert!(
            outcome.test_accuracy >= 0.5,
            "accuracy {}",
            outcome.test_accuracy
        );
    }
}
