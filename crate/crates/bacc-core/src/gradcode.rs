//! Coded distributed gradient computation on a one-hidden-layer network.
//!
//! The dataset is split into `K` equal minibatches. Workers hold rational
//! linear combinations of the minibatches (features, and labels in one of two
//! coding modes) and return the gradient of the loss on their coded batch.
//! The master rationally interpolates the worker gradients per layer, reads
//! off the per-batch values at the encoding anchors, and sums them into an
//! approximate full-batch gradient.
//!
//! Schemes compared by iteration count: the coded scheme, `s+1`-fold batch
//! replication, no redundancy (straggled batches dropped), and the uncoded
//! full-batch reference.

use ndarray::Array2;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::bacc::{decode, DecodeInput};
use crate::interpolants::{basis_all, Scheme};
use crate::pointsets::{worker_abscissa, NodeSet};
use crate::simulator::substream;
use crate::{Error, Result};

// ---------------------------------------------------------------------------
// Model
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Activation {
    Sigmoid,
    Tanh,
    Relu,
    /// Identity activation; turns the network into a product of the two
    /// weight matrices (used by closed-form oracles).
    Linear,
}

impl Activation {
    fn apply(&self, z: f64) -> f64 {
        match self {
            Activation::Sigmoid => 1.0 / (1.0 + (-z).exp()),
            Activation::Tanh => z.tanh(),
            Activation::Relu => z.max(0.0),
            Activation::Linear => z,
        }
    }

    fn derivative(&self, z: f64) -> f64 {
        match self {
            Activation::Sigmoid => {
                let s = 1.0 / (1.0 + (-z).exp());
                s * (1.0 - s)
            }
            Activation::Tanh => 1.0 - z.tanh().powi(2),
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Linear => 1.0,
        }
    }
}

/// Bias-free one-hidden-layer network: `w1` is hidden x features, `w2` is
/// outputs x hidden.
#[derive(Clone, Debug)]
pub struct ModelParams {
    pub w1: Array2<f64>,
    pub w2: Array2<f64>,
    pub activation: Activation,
}

impl ModelParams {
    pub fn random(
        features: usize,
        hidden: usize,
        outputs: usize,
        activation: Activation,
        rng: &mut ChaCha8Rng,
    ) -> Self {
        let s1 = 1.0 / (features as f64).sqrt();
        let s2 = 1.0 / (hidden as f64).sqrt();
        ModelParams {
            w1: Array2::from_shape_fn((hidden, features), |_| rng.random_range(-s1..s1)),
            w2: Array2::from_shape_fn((outputs, hidden), |_| rng.random_range(-s2..s2)),
            activation,
        }
    }

    /// Network output for a batch (rows are samples).
    pub fn forward(&self, x: &Array2<f64>) -> Array2<f64> {
        let z1 = x.dot(&self.w1.t());
        let s1 = z1.mapv(|v| self.activation.apply(v));
        s1.dot(&self.w2.t())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Loss {
    Mse,
    SigmoidCrossEntropy,
}

/// Per-layer gradients, same shapes as the parameters.
#[derive(Clone, Debug)]
pub struct GradientSet {
    pub d_w1: Array2<f64>,
    pub d_w2: Array2<f64>,
}

impl GradientSet {
    pub fn zeros_like(params: &ModelParams) -> Self {
        GradientSet {
            d_w1: Array2::zeros(params.w1.dim()),
            d_w2: Array2::zeros(params.w2.dim()),
        }
    }

    pub fn add(&mut self, other: &GradientSet) {
        self.d_w1 += &other.d_w1;
        self.d_w2 += &other.d_w2;
    }

    pub fn is_finite(&self) -> bool {
        self.d_w1.iter().all(|v| v.is_finite()) && self.d_w2.iter().all(|v| v.is_finite())
    }
}

// ---------------------------------------------------------------------------
// Batches and coding
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct Minibatch {
    pub x: Array2<f64>,
    pub y: Array2<f64>,
    pub index: usize,
}

/// Contiguous equal split of the dataset into `k` minibatches.
pub fn partition_dataset(x: &Array2<f64>, y: &Array2<f64>, k: usize) -> Result<Vec<Minibatch>> {
    let n = x.nrows();
    if k == 0 {
        return Err(Error::InvalidParameter("k must be positive".into()));
    }
    if y.nrows() != n {
        return Err(Error::ShapeMismatch(format!(
            "{} feature rows vs {} label rows",
            n,
            y.nrows()
        )));
    }
    if n == 0 || !n.is_multiple_of(k) {
        return Err(Error::InvalidPartition(format!(
            "k={k} does not divide {n} samples"
        )));
    }
    let b = n / k;
    Ok((0..k)
        .map(|j| Minibatch {
            x: x.slice(ndarray::s![j * b..(j + 1) * b, ..]).to_owned(),
            y: y.slice(ndarray::s![j * b..(j + 1) * b, ..]).to_owned(),
            index: j,
        })
        .collect())
}

/// How labels are combined into coded labels.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LabelCoding {
    /// Plain linear combination; decoding recovers linear aggregates exactly.
    Regression,
    /// Absolute value of the combination, L1-normalized per row: the coded
    /// label records which classes are mixed into the coded sample and with
    /// what proportions.
    Classification,
}

/// One worker's coded minibatch.
#[derive(Clone, Debug)]
pub struct CodedBatch {
    pub worker: usize,
    pub z: f64,
    pub x: Array2<f64>,
    pub y: Array2<f64>,
    /// Combination coefficients by batch index (they sum to 1).
    pub coefficients: Vec<f64>,
}

/// Combine labels with the given coefficients under a coding mode.
pub(crate) fn code_labels(batches: &[Minibatch], coeffs: &[f64], mode: LabelCoding) -> Array2<f64> {
    let mut y = Array2::<f64>::zeros(batches[0].y.dim());
    for (c, b) in coeffs.iter().zip(batches) {
        y.scaled_add(*c, &b.y);
    }
    if mode == LabelCoding::Classification {
        y.mapv_inplace(f64::abs);
        for mut row in y.rows_mut() {
            let norm: f64 = row.iter().sum();
            if norm > 0.0 {
                row.mapv_inplace(|v| v / norm);
            }
        }
    }
    y
}

/// Encode `k` minibatches into `n + 1` coded batches, one per worker, using
/// the rational basis at the worker's abscissa.
pub fn encode_batches(
    batches: &[Minibatch],
    n: usize,
    label_coding: LabelCoding,
) -> Result<Vec<CodedBatch>> {
    if batches.is_empty() {
        return Err(Error::EmptyInput("minibatches"));
    }
    if n == 0 {
        return Err(Error::InvalidParameter("need n >= 1 (n+1 workers)".into()));
    }
    let k = batches.len();
    let x_shape = batches[0].x.dim();
    let y_shape = batches[0].y.dim();
    for b in batches {
        if b.x.dim() != x_shape || b.y.dim() != y_shape {
            return Err(Error::ShapeMismatch("minibatch shapes differ".into()));
        }
    }
    let alphas = NodeSet::chebyshev_first(k)?;
    (0..=n)
        .map(|r| {
            let z = worker_abscissa(n, r);
            // basis over ascending anchors; data index j sits at position k-1-j
            let by_position = basis_all(&Scheme::Berrut, &alphas, z)?;
            let coeffs: Vec<f64> = (0..k).map(|j| by_position[k - 1 - j]).collect();
            let mut x = Array2::<f64>::zeros(x_shape);
            for (c, b) in coeffs.iter().zip(batches) {
                x.scaled_add(*c, &b.x);
            }
            let y = code_labels(batches, &coeffs, label_coding);
            Ok(CodedBatch {
                worker: r,
                z,
                x,
                y,
                coefficients: coeffs,
            })
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Gradients
// ---------------------------------------------------------------------------

/// Loss summed over the batch (matching the unscaled batch gradients).
pub fn loss_sum(x: &Array2<f64>, y: &Array2<f64>, params: &ModelParams, loss: Loss) -> f64 {
    let z2 = params.forward(x);
    match loss {
        Loss::Mse => {
            0.5 * z2
                .iter()
                .zip(y.iter())
                .map(|(a, b)| (a - b).powi(2))
                .sum::<f64>()
        }
        Loss::SigmoidCrossEntropy => z2
            .iter()
            .zip(y.iter())
            .map(|(&z, &t)| z.max(0.0) - z * t + (1.0 + (-z.abs()).exp()).ln())
            .sum(),
    }
}

/// Mean per-sample loss.
pub fn loss_value(x: &Array2<f64>, y: &Array2<f64>, params: &ModelParams, loss: Loss) -> f64 {
    loss_sum(x, y, params, loss) / x.nrows() as f64
}

/// Backpropagation on one batch; gradients are batch sums, unscaled by the
/// dataset size (scaling happens at the update).
pub fn batch_gradient(
    x: &Array2<f64>,
    y: &Array2<f64>,
    params: &ModelParams,
    loss: Loss,
) -> GradientSet {
    let z1 = x.dot(&params.w1.t());
    let s1 = z1.mapv(|v| params.activation.apply(v));
    let z2 = s1.dot(&params.w2.t());
    let d2 = match loss {
        Loss::Mse => &z2 - y,
        Loss::SigmoidCrossEntropy => z2.mapv(|z| 1.0 / (1.0 + (-z).exp())) - y,
    };
    let d_w2 = d2.t().dot(&s1);
    let d1 = d2.dot(&params.w2) * z1.mapv(|v| params.activation.derivative(v));
    let d_w1 = d1.t().dot(x);
    GradientSet { d_w1, d_w2 }
}

/// Gradient on a coded batch; a non-finite result is a worker failure.
pub fn worker_gradient(
    coded: &CodedBatch,
    params: &ModelParams,
    loss: Loss,
) -> Result<GradientSet> {
    let g = batch_gradient(&coded.x, &coded.y, params, loss);
    if !g.is_finite() {
        return Err(Error::WorkerFailure {
            worker: coded.worker,
        });
    }
    Ok(g)
}

/// Rationally interpolate per-layer worker gradients over the survivor
/// abscissae, evaluate at every anchor, and sum into the approximate
/// full-batch gradient.
pub fn decode_gradient(
    results: &[(usize, GradientSet)],
    n: usize,
    k: usize,
) -> Result<GradientSet> {
    if results.is_empty() {
        return Err(Error::EmptyInput("worker gradient results"));
    }
    let alphas = NodeSet::chebyshev_first(k)?;
    let survivors: Vec<usize> = results.iter().map(|(w, _)| *w).collect();
    let layer = |pick: &dyn Fn(&GradientSet) -> Array2<f64>| -> Result<Array2<f64>> {
        let input = DecodeInput::new(
            n,
            survivors.clone(),
            results.iter().map(|(_, g)| pick(g)).collect(),
        )?;
        let per_anchor = decode(&input, &alphas)?;
        let mut total = Array2::zeros(per_anchor[0].dim());
        for g in &per_anchor {
            total += g;
        }
        Ok(total)
    };
    Ok(GradientSet {
        d_w1: layer(&|g: &GradientSet| g.d_w1.clone())?,
        d_w2: layer(&|g: &GradientSet| g.d_w2.clone())?,
    })
}

/// One gradient-descent update: `W <- W - (eta / dataset_size) * grad`.
pub fn sgd_step(
    params: &ModelParams,
    grad: &GradientSet,
    eta: f64,
    dataset_size: usize,
) -> ModelParams {
    let scale = eta / dataset_size as f64;
    let mut out = params.clone();
    out.w1.scaled_add(-scale, &grad.d_w1);
    out.w2.scaled_add(-scale, &grad.d_w2);
    out
}

// ---------------------------------------------------------------------------
// Training loop
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TrainScheme {
    /// Coded batches, rational gradient decoding.
    Bacc,
    /// Each batch replicated on `s + 1` workers round-robin.
    Replication,
    /// One batch per worker, straggled batches dropped from the sum.
    NoRedundancy,
    /// Straggler-free full-batch reference.
    UncodedFull,
}

impl TrainScheme {
    pub fn as_str(&self) -> &'static str {
        match self {
            TrainScheme::Bacc => "bacc",
            TrainScheme::Replication => "replication",
            TrainScheme::NoRedundancy => "none",
            TrainScheme::UncodedFull => "full",
        }
    }
}

/// Synthetic regression dataset: targets from a fixed random teacher network
/// plus bounded noise.
#[derive(Clone, Copy, Debug)]
pub struct SyntheticSpec {
    pub n_samples: usize,
    pub features: usize,
    pub hidden: usize,
    pub outputs: usize,
    pub noise: f64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            n_samples: 256,
            features: 8,
            hidden: 16,
            outputs: 2,
            noise: 0.05,
        }
    }
}

const LANE_DATA: u64 = 20;
const LANE_TEACHER: u64 = 21;
const LANE_INIT: u64 = 22;
const LANE_EPOCH: u64 = 23;

pub fn synthetic_dataset(spec: &SyntheticSpec, seed: u64) -> (Array2<f64>, Array2<f64>) {
    let mut rng = substream(seed, LANE_DATA, 0, 0);
    let x = Array2::from_shape_fn((spec.n_samples, spec.features), |_| {
        rng.random_range(-1.0..1.0)
    });
    let mut trng = substream(seed, LANE_TEACHER, 0, 0);
    let teacher = ModelParams::random(
        spec.features,
        spec.hidden,
        spec.outputs,
        Activation::Sigmoid,
        &mut trng,
    );
    let mut y = teacher.forward(&x);
    for v in y.iter_mut() {
        *v += spec.noise * rng.random_range(-1.0..1.0);
    }
    (x, y)
}

#[derive(Clone, Debug)]
pub struct TrainConfig {
    pub scheme: TrainScheme,
    /// Workers are `0..=n`.
    pub n: usize,
    pub k: usize,
    pub s: usize,
    pub epochs: usize,
    pub eta: f64,
    pub seed: u64,
    pub loss: Loss,
    pub label_coding: LabelCoding,
    pub data: SyntheticSpec,
}

#[derive(Clone, Copy, Debug)]
pub struct EpochRecord {
    pub epoch: usize,
    pub loss: f64,
}

/// Train on the synthetic dataset.
pub fn train(cfg: &TrainConfig) -> Result<Vec<EpochRecord>> {
    let (x, y) = synthetic_dataset(&cfg.data, cfg.seed);
    train_with_data(cfg, &x, &y)
}

/// Straggler set for one epoch, shared across schemes for paired runs.
fn epoch_stragglers(cfg: &TrainConfig, epoch: usize) -> Vec<usize> {
    let mut rng = substream(cfg.seed, LANE_EPOCH, epoch as u64, 0);
    let mut pool: Vec<usize> = (0..=cfg.n).collect();
    for i in 0..cfg.s {
        let j = rng.random_range(i..pool.len());
        pool.swap(i, j);
    }
    pool.truncate(cfg.s);
    pool.sort_unstable();
    pool
}

/// Train on the given dataset; stragglers redrawn each epoch, loss recorded
/// on the raw data after each update.
pub fn train_with_data(
    cfg: &TrainConfig,
    x: &Array2<f64>,
    y: &Array2<f64>,
) -> Result<Vec<EpochRecord>> {
    if cfg.eta <= 0.0 || !cfg.eta.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "eta must be > 0, got {}",
            cfg.eta
        )));
    }
    if cfg.epochs == 0 {
        return Err(Error::InvalidParameter("epochs must be positive".into()));
    }
    if cfg.s > cfg.n {
        return Err(Error::InvalidParameter(format!(
            "s={} exceeds N={}",
            cfg.s, cfg.n
        )));
    }
    let batches = partition_dataset(x, y, cfg.k)?;
    let n_samples = x.nrows();

    match cfg.scheme {
        TrainScheme::Replication if cfg.s + 1 > cfg.n + 1 => {
            return Err(Error::InfeasibleReplication(format!(
                "{} replicas per batch but only {} workers",
                cfg.s + 1,
                cfg.n + 1
            )));
        }
        TrainScheme::NoRedundancy if cfg.k > cfg.n + 1 => {
            return Err(Error::InvalidParameter(format!(
                "{} batches need at least as many workers, have {}",
                cfg.k,
                cfg.n + 1
            )));
        }
        _ => {}
    }

    let coded = if cfg.scheme == TrainScheme::Bacc {
        encode_batches(&batches, cfg.n, cfg.label_coding)?
    } else {
        Vec::new()
    };

    // Replica placement: batch j lives on workers (j(s+1) + r) mod (n+1).
    let replica_workers = |j: usize| -> Vec<usize> {
        (0..=cfg.s)
            .map(|r| (j * (cfg.s + 1) + r) % (cfg.n + 1))
            .collect()
    };

    let mut init_rng = substream(cfg.seed, LANE_INIT, 0, 0);
    let mut params = ModelParams::random(
        x.ncols(),
        cfg.data.hidden,
        y.ncols(),
        Activation::Sigmoid,
        &mut init_rng,
    );

    let mut records = Vec::with_capacity(cfg.epochs);
    for epoch in 1..=cfg.epochs {
        let straggling = epoch_stragglers(cfg, epoch);
        let is_down = |w: usize| straggling.binary_search(&w).is_ok();

        let grad = match cfg.scheme {
            TrainScheme::UncodedFull => {
                let mut total = GradientSet::zeros_like(&params);
                for b in &batches {
                    total.add(&batch_gradient(&b.x, &b.y, &params, cfg.loss));
                }
                total
            }
            TrainScheme::Bacc => {
                let results: Vec<(usize, GradientSet)> = coded
                    .par_iter()
                    .filter(|cb| !is_down(cb.worker))
                    .map(|cb| worker_gradient(cb, &params, cfg.loss).map(|g| (cb.worker, g)))
                    .filter_map(|r| r.ok())
                    .collect();
                decode_gradient(&results, cfg.n, cfg.k)?
            }
            TrainScheme::Replication => {
                let mut total = GradientSet::zeros_like(&params);
                for b in &batches {
                    // at most s of the s+1 replicas can straggle
                    if replica_workers(b.index).iter().any(|&w| !is_down(w)) {
                        total.add(&batch_gradient(&b.x, &b.y, &params, cfg.loss));
                    }
                }
                total
            }
            TrainScheme::NoRedundancy => {
                let mut total = GradientSet::zeros_like(&params);
                for b in &batches {
                    if !is_down(b.index) {
                        total.add(&batch_gradient(&b.x, &b.y, &params, cfg.loss));
                    }
                }
                total
            }
        };

        params = sgd_step(&params, &grad, cfg.eta, n_samples);
        records.push(EpochRecord {
            epoch,
            loss: loss_value(x, y, &params, cfg.loss),
        });
    }
    Ok(records)
}

// ---------------------------------------------------------------------------
// IDX ingestion (optional path for real image data; never required by tests)
// ---------------------------------------------------------------------------

pub mod idx {
    //! Reader for the big-endian IDX image/label container.

    use std::io::Read;

    use crate::{Error, Result};

    pub const IMAGES_MAGIC: u32 = 0x0000_0803;
    pub const LABELS_MAGIC: u32 = 0x0000_0801;

    pub struct IdxImages {
        pub count: usize,
        pub rows: usize,
        pub cols: usize,
        /// `count * rows * cols` bytes, image-major.
        pub pixels: Vec<u8>,
    }

    fn read_u32_be(r: &mut impl Read) -> Result<u32> {
        let mut b = [0u8; 4];
        r.read_exact(&mut b)?;
        Ok(u32::from_be_bytes(b))
    }

    pub fn read_images(r: &mut impl Read) -> Result<IdxImages> {
        let magic = read_u32_be(r)?;
        if magic != IMAGES_MAGIC {
            return Err(Error::MalformedFile(format!(
                "bad image magic {magic:#010x}"
            )));
        }
        let count = read_u32_be(r)? as usize;
        let rows = read_u32_be(r)? as usize;
        let cols = read_u32_be(r)? as usize;
        let total = count
            .checked_mul(rows)
            .and_then(|v| v.checked_mul(cols))
            .ok_or_else(|| Error::MalformedFile("image dimensions overflow".into()))?;
        let mut pixels = vec![0u8; total];
        r.read_exact(&mut pixels)?;
        Ok(IdxImages {
            count,
            rows,
            cols,
            pixels,
        })
    }

    pub fn read_labels(r: &mut impl Read) -> Result<Vec<u8>> {
        let magic = read_u32_be(r)?;
        if magic != LABELS_MAGIC {
            return Err(Error::MalformedFile(format!(
                "bad label magic {magic:#010x}"
            )));
        }
        let count = read_u32_be(r)? as usize;
        let mut labels = vec![0u8; count];
        r.read_exact(&mut labels)?;
        Ok(labels)
    }

    pub fn read_images_file(path: &std::path::Path) -> Result<IdxImages> {
        read_images(&mut std::io::BufReader::new(std::fs::File::open(path)?))
    }

    pub fn read_labels_file(path: &std::path::Path) -> Result<Vec<u8>> {
        read_labels(&mut std::io::BufReader::new(std::fs::File::open(path)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn toy_params(seed: u64, activation: Activation) -> ModelParams {
        let mut rng = substream(seed, 77, 0, 0);
        ModelParams::random(3, 4, 2, activation, &mut rng)
    }

    #[test]
    fn partition_contract() {
        let x = Array2::from_shape_fn((6, 2), |(i, j)| (i * 2 + j) as f64);
        let y = Array2::from_shape_fn((6, 1), |(i, _)| i as f64);
        let parts = partition_dataset(&x, &y, 3).unwrap();
        assert_eq!(parts.len(), 3);
        assert_eq!(parts[1].x, x.slice(ndarray::s![2..4, ..]).to_owned());
        assert_eq!(parts[2].y[(0, 0)], 4.0);

        let one = partition_dataset(&x, &y, 1).unwrap();
        assert_eq!(one[0].x, x);

        let rows = partition_dataset(&x, &y, 6).unwrap();
        assert_eq!(rows[5].x.nrows(), 1);

        assert!(matches!(
            partition_dataset(&x, &y, 4),
            Err(Error::InvalidPartition(_))
        ));
    }

    #[test]
    fn encode_batches_single_batch_is_identity() {
        let x = Array2::from_shape_fn((4, 2), |(i, j)| (i + j) as f64);
        let y = Array2::from_shape_fn((4, 1), |(i, _)| i as f64);
        let batches = partition_dataset(&x, &y, 1).unwrap();
        let coded = encode_batches(&batches, 3, LabelCoding::Regression).unwrap();
        assert_eq!(coded.len(), 4);
        for cb in &coded {
            assert_eq!(cb.x, x);
            assert_eq!(cb.y, y);
            assert_eq!(cb.coefficients, vec![1.0]);
        }
    }

    #[test]
    fn encode_batches_coefficients_partition_unity() {
        let x = Array2::from_shape_fn((12, 3), |(i, j)| ((i * 3 + j) as f64).sin());
        let y = Array2::from_shape_fn((12, 2), |(i, j)| ((i + j) as f64).cos());
        let batches = partition_dataset(&x, &y, 4).unwrap();
        for coding in [LabelCoding::Regression, LabelCoding::Classification] {
            let coded = encode_batches(&batches, 9, coding).unwrap();
            assert_eq!(coded.len(), 10);
            for cb in &coded {
                let sum: f64 = cb.coefficients.iter().sum();
                assert!((sum - 1.0).abs() <= 1e-12, "worker {}: {sum}", cb.worker);
            }
        }
    }

    #[test]
    fn classification_label_coding_hand_case() {
        // one-hot labels [1,0] and [0,1] mixed with mu = (0.75, 0.25)
        let batches = vec![
            Minibatch {
                x: array![[0.0]],
                y: array![[1.0, 0.0]],
                index: 0,
            },
            Minibatch {
                x: array![[0.0]],
                y: array![[0.0, 1.0]],
                index: 1,
            },
        ];
        let y = code_labels(&batches, &[0.75, 0.25], LabelCoding::Classification);
        assert!((y[(0, 0)] - 0.75).abs() <= 1e-15);
        assert!((y[(0, 1)] - 0.25).abs() <= 1e-15);

        // negative coefficients fold into magnitudes before normalization
        let y = code_labels(&batches, &[1.5, -0.5], LabelCoding::Classification);
        assert!((y[(0, 0)] - 0.75).abs() <= 1e-15);
        assert!((y[(0, 1)] - 0.25).abs() <= 1e-15);
    }

    #[test]
    fn zero_net_zero_batch_gives_zero_gradient() {
        let params = ModelParams {
            w1: Array2::zeros((4, 3)),
            w2: Array2::zeros((2, 4)),
            activation: Activation::Linear,
        };
        let g = batch_gradient(
            &Array2::zeros((5, 3)),
            &Array2::zeros((5, 2)),
            &params,
            Loss::Mse,
        );
        assert_eq!(g.d_w1, Array2::zeros((4, 3)));
        assert_eq!(g.d_w2, Array2::zeros((2, 4)));
    }

    fn fd_check(params: &ModelParams, loss: Loss, seed: u64) -> f64 {
        let mut rng = substream(seed, 78, 0, 0);
        let x = Array2::from_shape_fn((5, 3), |_| rng.random_range(-1.0..1.0));
        let y = match loss {
            Loss::Mse => Array2::from_shape_fn((5, 2), |_| rng.random_range(-1.0..1.0)),
            Loss::SigmoidCrossEntropy => {
                Array2::from_shape_fn((5, 2), |(_, c)| if c == 0 { 1.0 } else { 0.0 })
            }
        };
        let g = batch_gradient(&x, &y, params, loss);
        let h = 1e-5;
        let mut worst: f64 = 0.0;
        for layer in 0..2 {
            let dim = if layer == 0 {
                params.w1.dim()
            } else {
                params.w2.dim()
            };
            for r in 0..dim.0 {
                for c in 0..dim.1 {
                    let mut plus = params.clone();
                    let mut minus = params.clone();
                    if layer == 0 {
                        plus.w1[(r, c)] += h;
                        minus.w1[(r, c)] -= h;
                    } else {
                        plus.w2[(r, c)] += h;
                        minus.w2[(r, c)] -= h;
                    }
                    let fd = (loss_sum(&x, &y, &plus, loss) - loss_sum(&x, &y, &minus, loss))
                        / (2.0 * h);
                    let an = if layer == 0 {
                        g.d_w1[(r, c)]
                    } else {
                        g.d_w2[(r, c)]
                    };
                    worst = worst.max((fd - an).abs() / fd.abs().max(1e-3));
                }
            }
        }
        worst
    }

    #[test]
    fn gradient_matches_finite_differences() {
        for (i, activation) in [Activation::Sigmoid, Activation::Tanh, Activation::Relu]
            .into_iter()
            .enumerate()
        {
            for (j, loss) in [Loss::Mse, Loss::SigmoidCrossEntropy]
                .into_iter()
                .enumerate()
            {
                let params = toy_params(100 + i as u64, activation);
                let worst = fd_check(&params, loss, 200 + j as u64);
                assert!(worst <= 1e-4, "{activation:?}/{loss:?}: {worst}");
            }
        }
    }

    #[test]
    fn linear_mse_matches_least_squares_gradient() {
        let params = toy_params(7, Activation::Linear);
        let mut rng = substream(8, 79, 0, 0);
        let x = Array2::from_shape_fn((6, 3), |_| rng.random_range(-1.0..1.0));
        let y = Array2::from_shape_fn((6, 2), |_| rng.random_range(-1.0..1.0));
        let g = batch_gradient(&x, &y, &params, Loss::Mse);
        // hidden = X W1^T, residual R = hidden W2^T - Y
        let hidden = x.dot(&params.w1.t());
        let r = hidden.dot(&params.w2.t()) - &y;
        let d_w2 = r.t().dot(&hidden);
        let d_w1 = params.w2.t().dot(&r.t()).dot(&x);
        for (a, b) in g.d_w2.iter().zip(d_w2.iter()) {
            assert!((a - b).abs() <= 1e-10);
        }
        for (a, b) in g.d_w1.iter().zip(d_w1.iter()) {
            assert!((a - b).abs() <= 1e-10);
        }
    }

    #[test]
    fn worker_gradient_flags_non_finite() {
        let mut params = toy_params(3, Activation::Linear);
        params.w1[(0, 0)] = 1e308;
        params.w2[(0, 0)] = 1e308;
        let coded = CodedBatch {
            worker: 4,
            z: 0.5,
            x: Array2::from_elem((2, 3), 1e10),
            y: Array2::zeros((2, 2)),
            coefficients: vec![1.0],
        };
        match worker_gradient(&coded, &params, Loss::Mse) {
            Err(Error::WorkerFailure { worker: 4 }) => {}
            other => panic!("expected worker failure, got {other:?}"),
        }
    }

    #[test]
    fn decode_gradient_constant_results_sum_to_k_times() {
        let g = GradientSet {
            d_w1: Array2::from_elem((2, 2), 1.25),
            d_w2: Array2::from_elem((1, 2), -0.5),
        };
        let results: Vec<(usize, GradientSet)> =
            [0usize, 3, 5, 9].iter().map(|&w| (w, g.clone())).collect();
        let k = 6;
        let total = decode_gradient(&results, 9, k).unwrap();
        for v in total.d_w1.iter() {
            assert!((v - 1.25 * k as f64).abs() <= 1e-12);
        }
        for v in total.d_w2.iter() {
            assert!((v + 0.5 * k as f64).abs() <= 1e-12);
        }
    }

    #[test]
    fn decode_gradient_is_linear() {
        let mut rng = substream(5, 80, 0, 0);
        let mk = |rng: &mut rand_chacha::ChaCha8Rng| GradientSet {
            d_w1: Array2::from_shape_fn((2, 3), |_| rng.random_range(-1.0..1.0)),
            d_w2: Array2::from_shape_fn((1, 2), |_| rng.random_range(-1.0..1.0)),
        };
        let workers = [1usize, 2, 6, 7, 11];
        let r1: Vec<(usize, GradientSet)> = workers.iter().map(|&w| (w, mk(&mut rng))).collect();
        let r2: Vec<(usize, GradientSet)> = workers.iter().map(|&w| (w, mk(&mut rng))).collect();
        let (a, b) = (0.3, -1.7);
        let combo: Vec<(usize, GradientSet)> = r1
            .iter()
            .zip(&r2)
            .map(|((w, g1), (_, g2))| {
                (
                    *w,
                    GradientSet {
                        d_w1: a * &g1.d_w1 + b * &g2.d_w1,
                        d_w2: a * &g1.d_w2 + b * &g2.d_w2,
                    },
                )
            })
            .collect();
        let d1 = decode_gradient(&r1, 11, 4).unwrap();
        let d2 = decode_gradient(&r2, 11, 4).unwrap();
        let dc = decode_gradient(&combo, 11, 4).unwrap();
        for (got, (g1, g2)) in dc.d_w1.iter().zip(d1.d_w1.iter().zip(d2.d_w1.iter())) {
            assert!((got - (a * g1 + b * g2)).abs() <= 1e-12);
        }
        for (got, (g1, g2)) in dc.d_w2.iter().zip(d1.d_w2.iter().zip(d2.d_w2.iter())) {
            assert!((got - (a * g1 + b * g2)).abs() <= 1e-12);
        }
    }

    #[test]
    fn decode_gradient_no_stragglers_tracks_full_gradient() {
        // misaligned (2K does not divide N): the decode is a genuine rational
        // approximation; it must stay within 1% of the true full gradient.
        let spec = SyntheticSpec {
            n_samples: 64,
            features: 4,
            hidden: 6,
            outputs: 1,
            noise: 0.02,
        };
        let (x, y) = synthetic_dataset(&spec, 9);
        let batches = partition_dataset(&x, &y, 8).unwrap();
        let n = 30;
        let coded = encode_batches(&batches, n, LabelCoding::Regression).unwrap();
        let mut rng = substream(10, LANE_INIT, 0, 0);
        let params = ModelParams::random(4, 6, 1, Activation::Sigmoid, &mut rng);

        let mut full = GradientSet::zeros_like(&params);
        for b in &batches {
            full.add(&batch_gradient(&b.x, &b.y, &params, Loss::Mse));
        }
        let results: Vec<(usize, GradientSet)> = coded
            .iter()
            .map(|cb| (cb.worker, worker_gradient(cb, &params, Loss::Mse).unwrap()))
            .collect();
        let approx = decode_gradient(&results, n, 8).unwrap();

        let norm: f64 = full
            .d_w1
            .iter()
            .chain(full.d_w2.iter())
            .map(|v| v * v)
            .sum::<f64>();
        let diff: f64 = approx
            .d_w1
            .iter()
            .zip(full.d_w1.iter())
            .chain(approx.d_w2.iter().zip(full.d_w2.iter()))
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>();
        let rel = (diff / norm).sqrt();
        assert!(rel <= 1e-2, "relative gradient error {rel}");
    }

    #[test]
    fn sgd_step_cases() {
        let params = ModelParams {
            w1: array![[1.0]],
            w2: array![[1.0]],
            activation: Activation::Linear,
        };
        let zero = GradientSet {
            d_w1: array![[0.0]],
            d_w2: array![[0.0]],
        };
        let stepped = sgd_step(&params, &zero, 0.5, 1);
        assert_eq!(stepped.w1, params.w1);

        let grad = GradientSet {
            d_w1: array![[2.0]],
            d_w2: array![[0.0]],
        };
        let stepped = sgd_step(&params, &grad, 0.0, 1);
        assert_eq!(stepped.w1, params.w1);

        let stepped = sgd_step(&params, &grad, 0.5, 1);
        assert_eq!(stepped.w1[(0, 0)], 0.0);
    }

    #[test]
    fn replication_s0_equals_full_and_bacc_aligned_s0_equals_full() {
        let spec = SyntheticSpec {
            n_samples: 64,
            features: 4,
            hidden: 8,
            outputs: 2,
            noise: 0.05,
        };
        let base = TrainConfig {
            scheme: TrainScheme::UncodedFull,
            n: 32,
            k: 8,
            s: 0,
            epochs: 10,
            eta: 0.1,
            seed: 21,
            loss: Loss::Mse,
            label_coding: LabelCoding::Regression,
            data: spec,
        };
        let full = train(&base).unwrap();

        let mut rep = base.clone();
        rep.scheme = TrainScheme::Replication;
        let rep_losses = train(&rep).unwrap();
        for (a, b) in full.iter().zip(&rep_losses) {
            assert_eq!(a.loss.to_bits(), b.loss.to_bits());
        }

        // 2K = 16 divides N = 32: every anchor sits on the worker grid, so
        // coded training with no stragglers reproduces the full gradient.
        let mut coded = base.clone();
        coded.scheme = TrainScheme::Bacc;
        let coded_losses = train(&coded).unwrap();
        for (a, b) in full.iter().zip(&coded_losses) {
            assert_eq!(a.loss.to_bits(), b.loss.to_bits());
        }
    }

    #[test]
    fn train_is_deterministic_per_seed() {
        let cfg = TrainConfig {
            scheme: TrainScheme::Bacc,
            n: 16,
            k: 4,
            s: 3,
            epochs: 6,
            eta: 0.05,
            seed: 33,
            loss: Loss::Mse,
            label_coding: LabelCoding::Regression,
            data: SyntheticSpec {
                n_samples: 32,
                features: 4,
                hidden: 6,
                outputs: 1,
                noise: 0.01,
            },
        };
        let a = train(&cfg).unwrap();
        let b = train(&cfg).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.loss.to_bits(), y.loss.to_bits());
        }
    }

    #[test]
    fn replication_infeasible_when_too_few_workers() {
        let cfg = TrainConfig {
            scheme: TrainScheme::Replication,
            n: 2,
            k: 3,
            s: 3,
            epochs: 2,
            eta: 0.1,
            seed: 1,
            loss: Loss::Mse,
            label_coding: LabelCoding::Regression,
            data: SyntheticSpec {
                n_samples: 12,
                features: 2,
                hidden: 4,
                outputs: 1,
                noise: 0.0,
            },
        };
        assert!(matches!(
            train(&cfg),
            Err(Error::InfeasibleReplication(_)) | Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn idx_roundtrip_and_validation() {
        use std::io::Cursor;

        let mut bytes = Vec::new();
        bytes.extend_from_slice(&idx::IMAGES_MAGIC.to_be_bytes());
        bytes.extend_from_slice(&2u32.to_be_bytes());
        bytes.extend_from_slice(&2u32.to_be_bytes());
        bytes.extend_from_slice(&3u32.to_be_bytes());
        bytes.extend_from_slice(&[10, 20, 30, 40, 50, 60, 70, 80, 90, 100, 110, 120]);
        let images = idx::read_images(&mut Cursor::new(&bytes)).unwrap();
        assert_eq!((images.count, images.rows, images.cols), (2, 2, 3));
        assert_eq!(images.pixels[7], 80);

        let mut lbl = Vec::new();
        lbl.extend_from_slice(&idx::LABELS_MAGIC.to_be_bytes());
        lbl.extend_from_slice(&3u32.to_be_bytes());
        lbl.extend_from_slice(&[1, 0, 9]);
        let labels = idx::read_labels(&mut Cursor::new(&lbl)).unwrap();
        assert_eq!(labels, vec![1, 0, 9]);

        let mut bad = bytes.clone();
        bad[3] = 0x01; // wrong magic
        assert!(idx::read_images(&mut Cursor::new(&bad)).is_err());

        let truncated = &bytes[..10];
        assert!(idx::read_images(&mut Cursor::new(truncated)).is_err());
    }
}
