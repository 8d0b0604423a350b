//! Stacked LSTM classifier trained from scratch with hand-derived gradients.
//!
//! Topology, front to back:
//!
//! ```text
//! input sequence (seq_len x batch x features)
//!   LSTM layer 0 .. n-2:  full hidden sequence
//!                         -> batch norm (stats over batch x time)
//!                         -> inverted dropout
//!   LSTM layer n-1:       last-timestep hidden state
//!                         -> batch norm (stats over batch)
//!                         -> dropout (layer rate, then head rate)
//!   dense -> ReLU -> dense -> sigmoid, one unit per binary target
//! ```
//!
//! Training uses mean-squared error against 0/1 targets and RMSprop updates.
//! Every stochastic choice (split, shuffling, dropout) is drawn from streams
//! derived from the run seed and the epoch index, so a run is a pure
//! function of (data, config) and can be resumed from a checkpoint
//! bit-exactly.

mod batchnorm;
mod cell;
pub mod checkpoint;
mod dropout;
mod linalg;
mod rmsprop;

pub use batchnorm::{BatchNorm, BnCache};
pub use cell::{cell_backward, cell_forward, lstm_cell_forward, sigmoid, CellCache, LstmLayerParams};
pub use dropout::dropout_mask;
pub use linalg::Mat;
pub use rmsprop::{RmspropParams, RmspropState};

use crate::config::{LstmConfig, PipelineConfig, SplitMode};
use crate::classic::{scaler_apply, scaler_fit};
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::labeling::LabelSet;
use crate::rng::{stream_rng, stream_seed};
use rand::seq::SliceRandom;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::collections::BTreeMap;
use std::path::Path;

// Stream tags for the run's random substreams.
const TAG_INIT: u64 = 0x11;
const TAG_SPLIT: u64 = 0x12;
const TAG_EPOCH: u64 = 0x13;

/// One recurrent layer plus its normalization and dropout rate.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmLayer {
    pub params: LstmLayerParams,
    pub bn: BatchNorm,
    pub dropout_rate: f64,
}

/// The dense head: ReLU hidden transform, then sigmoid outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct HeadParams {
    pub w1: Mat,
    pub b1: Vec<f64>,
    pub w2: Mat,
    pub b2: Vec<f64>,
    pub dropout_rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LstmModel {
    pub input_dim: usize,
    pub n_outputs: usize,
    pub layers: Vec<LstmLayer>,
    pub head: HeadParams,
}

fn init_uniform(rng: &mut ChaCha8Rng, values: &mut [f64], fan_in: usize) {
    use rand::Rng;
    let bound = 1.0 / (fan_in as f64).sqrt();
    for v in values {
        *v = rng.random_range(-bound..bound);
    }
}

impl LstmModel {
    /// Seeded initialization: weights uniform within +-1/sqrt(fan_in),
    /// biases zero, batch-norm scale one.
    pub fn init(input_dim: usize, config: &LstmConfig, n_outputs: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(seed, &[TAG_INIT]));
        let mut layers = Vec::with_capacity(config.hidden_sizes.len());
        let mut prev_dim = input_dim;
        for (&hidden, &rate) in config.hidden_sizes.iter().zip(&config.dropout_rates) {
            let mut params = LstmLayerParams::zeros(prev_dim, hidden);
            init_uniform(&mut rng, params.w.data_mut(), prev_dim);
            init_uniform(&mut rng, params.u.data_mut(), hidden);
            layers.push(LstmLayer {
                params,
                bn: BatchNorm::new(hidden, config.bn_momentum, config.bn_epsilon),
                dropout_rate: rate,
            });
            prev_dim = hidden;
        }
        let mut head = HeadParams {
            w1: Mat::zeros(config.head_hidden, prev_dim),
            b1: vec![0.0; config.head_hidden],
            w2: Mat::zeros(n_outputs, config.head_hidden),
            b2: vec![0.0; n_outputs],
            dropout_rate: config.head_dropout,
        };
        init_uniform(&mut rng, head.w1.data_mut(), prev_dim);
        init_uniform(&mut rng, head.w2.data_mut(), config.head_hidden);
        LstmModel {
            input_dim,
            n_outputs,
            layers,
            head,
        }
    }

    /// Names and shapes of the trainable tensors, in visit order.
    pub fn param_specs(&self) -> Vec<(String, Vec<usize>)> {
        let mut specs = Vec::new();
        for (l, layer) in self.layers.iter().enumerate() {
            let h = layer.params.hidden_dim;
            specs.push((format!("layer{l}/w"), vec![4 * h, layer.params.input_dim]));
            specs.push((format!("layer{l}/u"), vec![4 * h, h]));
            specs.push((format!("layer{l}/b"), vec![4 * h]));
            specs.push((format!("layer{l}/bn_gamma"), vec![h]));
            specs.push((format!("layer{l}/bn_beta"), vec![h]));
        }
        specs.push((
            "head/w1".into(),
            vec![self.head.w1.rows(), self.head.w1.cols()],
        ));
        specs.push(("head/b1".into(), vec![self.head.b1.len()]));
        specs.push((
            "head/w2".into(),
            vec![self.head.w2.rows(), self.head.w2.cols()],
        ));
        specs.push(("head/b2".into(), vec![self.head.b2.len()]));
        specs
    }

    /// Visit every trainable tensor immutably, in canonical order.
    pub fn visit_params(&self, f: &mut impl FnMut(&[f64])) {
        for layer in &self.layers {
            f(layer.params.w.data());
            f(layer.params.u.data());
            f(&layer.params.b);
            f(&layer.bn.gamma);
            f(&layer.bn.beta);
        }
        f(self.head.w1.data());
        f(&self.head.b1);
        f(self.head.w2.data());
        f(&self.head.b2);
    }

    /// Visit every trainable tensor mutably, in canonical order.
    pub fn visit_params_mut(&mut self, f: &mut impl FnMut(&mut [f64])) {
        for layer in &mut self.layers {
            f(layer.params.w.data_mut());
            f(layer.params.u.data_mut());
            f(&mut layer.params.b);
            f(&mut layer.bn.gamma);
            f(&mut layer.bn.beta);
        }
        f(self.head.w1.data_mut());
        f(&mut self.head.b1);
        f(self.head.w2.data_mut());
        f(&mut self.head.b2);
    }

    pub fn param_sizes(&self) -> Vec<usize> {
        let mut sizes = Vec::new();
        self.visit_params(&mut |values| sizes.push(values.len()));
        sizes
    }

    /// Non-trainable state (batch-norm running statistics), named.
    pub fn state_tensors(&self) -> Vec<(String, Vec<f64>)> {
        let mut out = Vec::new();
        for (l, layer) in self.layers.iter().enumerate() {
            out.push((format!("layer{l}/bn_running_mean"), layer.bn.running_mean.clone()));
            out.push((format!("layer{l}/bn_running_var"), layer.bn.running_var.clone()));
        }
        out
    }
}

/// Gradients for every trainable tensor, aligned with the model's visit
/// order.
#[derive(Debug, Clone)]
pub struct Grads {
    pub tensors: Vec<Vec<f64>>,
}

impl Grads {
    pub fn zeros_like(model: &LstmModel) -> Self {
        Grads {
            tensors: model.param_sizes().iter().map(|&n| vec![0.0; n]).collect(),
        }
    }
}

const PER_LAYER_TENSORS: usize = 5;
const IDX_W: usize = 0;
const IDX_U: usize = 1;
const IDX_B: usize = 2;
const IDX_GAMMA: usize = 3;
const IDX_BETA: usize = 4;

fn add_into(dst: &mut [f64], src: &[f64]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d += s;
    }
}

/// Everything the backward pass needs from one training forward pass.
pub struct ForwardCache {
    seq_len: usize,
    batch: usize,
    /// Per layer, per timestep cell caches.
    cell_caches: Vec<Vec<CellCache>>,
    /// Per non-final layer: BN cache and dropout mask over the stacked
    /// (seq_len * batch) x hidden activations.
    inter_bn: Vec<BnCache>,
    inter_masks: Vec<Mat>,
    /// Final layer: BN cache over the last-timestep batch.
    last_bn: BnCache,
    last_mask: Mat,
    head_mask: Mat,
    head_input: Mat,
    z1: Mat,
    r1: Mat,
    pred: Mat,
}

impl ForwardCache {
    pub fn predictions(&self) -> &Mat {
        &self.pred
    }
}

fn check_sequence(model: &LstmModel, seq: &[Mat]) -> Result<usize> {
    if seq.is_empty() {
        return Err(Error::Size("empty input sequence".into()));
    }
    let batch = seq[0].rows();
    for step in seq {
        if step.cols() != model.input_dim {
            return Err(Error::Size(format!(
                "input has {} features, model expects {}",
                step.cols(),
                model.input_dim
            )));
        }
        if step.rows() != batch {
            return Err(Error::Size("batch size varies across timesteps".into()));
        }
    }
    Ok(batch)
}

fn lstm_layer_forward(params: &LstmLayerParams, seq: &[Mat]) -> (Vec<Mat>, Vec<CellCache>) {
    let batch = seq[0].rows();
    let mut h = Mat::zeros(batch, params.hidden_dim);
    let mut c = Mat::zeros(batch, params.hidden_dim);
    let mut h_seq = Vec::with_capacity(seq.len());
    let mut caches = Vec::with_capacity(seq.len());
    for x_t in seq {
        let (h_new, c_new, cache) = cell_forward(params, x_t, &h, &c);
        h = h_new;
        c = c_new;
        h_seq.push(h.clone());
        caches.push(cache);
    }
    (h_seq, caches)
}

fn lstm_layer_backward(
    params: &LstmLayerParams,
    caches: &[CellCache],
    dh_seq: &[Mat],
) -> (Mat, Mat, Vec<f64>, Vec<Mat>) {
    let seq_len = caches.len();
    let batch = dh_seq[0].rows();
    let mut d_w = Mat::zeros(4 * params.hidden_dim, params.input_dim);
    let mut d_u = Mat::zeros(4 * params.hidden_dim, params.hidden_dim);
    let mut d_b = vec![0.0; 4 * params.hidden_dim];
    let mut dx_seq = vec![Mat::zeros(0, 0); seq_len];
    let mut dh_carry = Mat::zeros(batch, params.hidden_dim);
    let mut dc_carry = Mat::zeros(batch, params.hidden_dim);
    for t in (0..seq_len).rev() {
        let dh_total = dh_seq[t].add(&dh_carry);
        let grads = cell_backward(params, &caches[t], &dh_total, &dc_carry);
        d_w.add_assign(&grads.d_w);
        d_u.add_assign(&grads.d_u);
        add_into(&mut d_b, &grads.d_b);
        dx_seq[t] = grads.d_x;
        dh_carry = grads.d_h_prev;
        dc_carry = grads.d_c_prev;
    }
    (d_w, d_u, d_b, dx_seq)
}

fn split_stacked(stacked: &Mat, seq_len: usize, batch: usize) -> Vec<Mat> {
    (0..seq_len)
        .map(|t| {
            let mut part = Mat::zeros(batch, stacked.cols());
            for b in 0..batch {
                part.row_mut(b).copy_from_slice(stacked.row(t * batch + b));
            }
            part
        })
        .collect()
}

fn head_forward(head: &HeadParams, input: &Mat) -> (Mat, Mat, Mat) {
    let mut z1 = input.matmul_nt(&head.w1);
    z1.add_row_broadcast(&head.b1);
    let r1 = z1.map(|v| v.max(0.0));
    let mut z2 = r1.matmul_nt(&head.w2);
    z2.add_row_broadcast(&head.b2);
    let pred = z2.map(sigmoid);
    (z1, r1, pred)
}

/// Training-mode forward pass: batch statistics, seeded dropout masks, and
/// running-statistic updates. Returns sigmoid outputs in (0, 1).
pub fn forward_train(
    model: &mut LstmModel,
    seq: &[Mat],
    rng: &mut ChaCha8Rng,
) -> Result<(Mat, ForwardCache)> {
    let batch = check_sequence(model, seq)?;
    let seq_len = seq.len();
    let n_layers = model.layers.len();

    let mut current: Vec<Mat> = seq.to_vec();
    let mut cell_caches = Vec::with_capacity(n_layers);
    let mut inter_bn = Vec::with_capacity(n_layers - 1);
    let mut inter_masks = Vec::with_capacity(n_layers - 1);

    for l in 0..n_layers - 1 {
        let layer = &mut model.layers[l];
        let (h_seq, caches) = lstm_layer_forward(&layer.params, &current);
        cell_caches.push(caches);
        let refs: Vec<&Mat> = h_seq.iter().collect();
        let stacked = Mat::vstack(&refs);
        let (normed, bn_cache) = layer.bn.forward_train(&stacked);
        let mask = dropout_mask(rng, normed.rows(), normed.cols(), layer.dropout_rate);
        let dropped = normed.hadamard(&mask);
        inter_bn.push(bn_cache);
        inter_masks.push(mask);
        current = split_stacked(&dropped, seq_len, batch);
    }

    let last = &mut model.layers[n_layers - 1];
    let (h_seq, caches) = lstm_layer_forward(&last.params, &current);
    cell_caches.push(caches);
    let h_t = h_seq.last().expect("non-empty sequence").clone();
    let (normed, last_bn) = last.bn.forward_train(&h_t);
    let last_mask = dropout_mask(rng, normed.rows(), normed.cols(), last.dropout_rate);
    let after_layer_drop = normed.hadamard(&last_mask);
    let head_mask = dropout_mask(
        rng,
        after_layer_drop.rows(),
        after_layer_drop.cols(),
        model.head.dropout_rate,
    );
    let head_input = after_layer_drop.hadamard(&head_mask);
    let (z1, r1, pred) = head_forward(&model.head, &head_input);

    let cache = ForwardCache {
        seq_len,
        batch,
        cell_caches,
        inter_bn,
        inter_masks,
        last_bn,
        last_mask,
        head_mask,
        head_input,
        z1,
        r1,
        pred: pred.clone(),
    };
    Ok((pred, cache))
}

/// Evaluation-mode forward pass: running statistics, no dropout.
pub fn forward_eval(model: &LstmModel, seq: &[Mat]) -> Result<Mat> {
    check_sequence(model, seq)?;
    let n_layers = model.layers.len();
    let mut current: Vec<Mat> = seq.to_vec();
    for l in 0..n_layers - 1 {
        let layer = &model.layers[l];
        let (h_seq, _) = lstm_layer_forward(&layer.params, &current);
        current = h_seq.iter().map(|h| layer.bn.forward_eval(h)).collect();
    }
    let last = &model.layers[n_layers - 1];
    let (h_seq, _) = lstm_layer_forward(&last.params, &current);
    let h_t = h_seq.last().expect("non-empty sequence");
    let normed = last.bn.forward_eval(h_t);
    let (_, _, pred) = head_forward(&model.head, &normed);
    Ok(pred)
}

/// Backward pass for one training batch; gradients in canonical order.
pub fn backward(model: &LstmModel, cache: &ForwardCache, d_pred: &Mat) -> Grads {
    let n_layers = model.layers.len();
    let mut grads = Grads::zeros_like(model);
    let head_base = n_layers * PER_LAYER_TENSORS;

    // Head: sigmoid -> dense -> ReLU -> dense.
    let d_z2 = d_pred.zip(&cache.pred, |d, p| d * p * (1.0 - p));
    let d_w2 = d_z2.matmul_tn(&cache.r1);
    let d_b2 = d_z2.col_sums();
    let d_r1 = d_z2.matmul_nn(&model.head.w2);
    let d_z1 = d_r1.zip(&cache.z1, |d, z| if z > 0.0 { d } else { 0.0 });
    let d_w1 = d_z1.matmul_tn(&cache.head_input);
    let d_b1 = d_z1.col_sums();
    let d_head_input = d_z1.matmul_nn(&model.head.w1);
    grads.tensors[head_base].copy_from_slice(d_w1.data());
    grads.tensors[head_base + 1].copy_from_slice(&d_b1);
    grads.tensors[head_base + 2].copy_from_slice(d_w2.data());
    grads.tensors[head_base + 3].copy_from_slice(&d_b2);

    // Through the two dropout masks and the final layer's batch norm.
    let after_head_mask = d_head_input.hadamard(&cache.head_mask);
    let d_normed = after_head_mask.hadamard(&cache.last_mask);
    let last = &model.layers[n_layers - 1];
    let (d_h_t, d_gamma, d_beta) = last.bn.backward(&cache.last_bn, &d_normed);
    let last_base = (n_layers - 1) * PER_LAYER_TENSORS;
    grads.tensors[last_base + IDX_GAMMA].copy_from_slice(&d_gamma);
    grads.tensors[last_base + IDX_BETA].copy_from_slice(&d_beta);

    // BPTT through the final layer; gradient enters only at the last step.
    let mut dh_seq = vec![Mat::zeros(cache.batch, last.params.hidden_dim); cache.seq_len];
    dh_seq[cache.seq_len - 1] = d_h_t;
    let (d_w, d_u, d_b, mut dx_seq) =
        lstm_layer_backward(&last.params, &cache.cell_caches[n_layers - 1], &dh_seq);
    grads.tensors[last_base + IDX_W].copy_from_slice(d_w.data());
    grads.tensors[last_base + IDX_U].copy_from_slice(d_u.data());
    grads.tensors[last_base + IDX_B].copy_from_slice(&d_b);

    // Walk down through the stacked layers.
    for l in (0..n_layers - 1).rev() {
        let layer = &model.layers[l];
        let base = l * PER_LAYER_TENSORS;
        // dx_seq is the gradient at layer l's post-dropout output.
        let refs: Vec<&Mat> = dx_seq.iter().collect();
        let stacked = Mat::vstack(&refs);
        let after_mask = stacked.hadamard(&cache.inter_masks[l]);
        let (d_stacked, d_gamma, d_beta) = layer.bn.backward(&cache.inter_bn[l], &after_mask);
        grads.tensors[base + IDX_GAMMA].copy_from_slice(&d_gamma);
        grads.tensors[base + IDX_BETA].copy_from_slice(&d_beta);
        let dh_seq = split_stacked(&d_stacked, cache.seq_len, cache.batch);
        let (d_w, d_u, d_b, dx) =
            lstm_layer_backward(&layer.params, &cache.cell_caches[l], &dh_seq);
        grads.tensors[base + IDX_W].copy_from_slice(d_w.data());
        grads.tensors[base + IDX_U].copy_from_slice(d_u.data());
        grads.tensors[base + IDX_B].copy_from_slice(&d_b);
        dx_seq = dx;
    }
    grads
}

/// Mean over all elements of the squared prediction error.
pub fn mse_loss(pred: &Mat, target: &Mat) -> Result<f64> {
    if pred.rows() != target.rows() || pred.cols() != target.cols() {
        return Err(Error::Size(format!(
            "prediction {}x{} against target {}x{}",
            pred.rows(),
            pred.cols(),
            target.rows(),
            target.cols()
        )));
    }
    let n = (pred.rows() * pred.cols()) as f64;
    Ok(pred
        .data()
        .iter()
        .zip(target.data())
        .map(|(p, t)| (p - t) * (p - t))
        .sum::<f64>()
        / n)
}

/// Gradient of [`mse_loss`]: `2 (pred - target) / n`.
pub fn mse_grad(pred: &Mat, target: &Mat) -> Mat {
    let n = (pred.rows() * pred.cols()) as f64;
    pred.zip(target, move |p, t| 2.0 * (p - t) / n)
}

/// Apply one RMSprop step to every tensor from an aligned gradient set.
pub fn apply_grads(model: &mut LstmModel, grads: &Grads, opt: &mut RmspropState) -> Result<()> {
    let mut idx = 0;
    let mut outcome = Ok(());
    model.visit_params_mut(&mut |values| {
        if outcome.is_err() {
            return;
        }
        outcome = opt.step(idx, values, &grads.tensors[idx]);
        idx += 1;
    });
    outcome
}

// ---------------------------------------------------------------------------
// Sequence assembly, splitting, and the training loop.
// ---------------------------------------------------------------------------

/// Training samples: consecutive windows of one trial, chunked into
/// fixed-length sequences that inherit the trial's labels.
#[derive(Debug, Clone)]
pub struct SequenceSet {
    /// Feature-matrix row indices per sequence, each of length seq_len.
    pub rows: Vec<Vec<usize>>,
    /// Trial each sequence came from.
    pub trials: Vec<u32>,
    /// Binary targets per sequence: [valence_positive, arousal_positive].
    pub targets: Vec<[f64; 2]>,
}

/// Chunk each trial's windows (ordered by window index) into non-overlapping
/// sequences of `seq_len`; trailing windows that cannot fill a sequence are
/// dropped.
pub fn assemble_sequences(
    features: &FeatureMatrix,
    labels: &LabelSet,
    seq_len: usize,
) -> Result<SequenceSet> {
    if seq_len < 1 {
        return Err(Error::Config("sequence length must be >= 1".into()));
    }
    let mut by_trial: BTreeMap<u32, Vec<(i64, usize)>> = BTreeMap::new();
    for (row, prov) in features.provenance().iter().enumerate() {
        if prov.window < 0 {
            return Err(Error::Validation(
                "sequence assembly needs windowed features (window >= 0)".into(),
            ));
        }
        by_trial
            .entry(prov.trial)
            .or_default()
            .push((prov.window, row));
    }
    let mut set = SequenceSet {
        rows: Vec::new(),
        trials: Vec::new(),
        targets: Vec::new(),
    };
    for (trial, mut windows) in by_trial {
        let trial_idx = trial as usize;
        if trial_idx >= labels.len() {
            return Err(Error::Size(format!(
                "features reference trial {trial} but labels cover {}",
                labels.len()
            )));
        }
        windows.sort_unstable();
        let target = [
            f64::from(labels.valence_positive()[trial_idx]),
            f64::from(labels.arousal_positive()[trial_idx]),
        ];
        for chunk in windows.chunks_exact(seq_len) {
            set.rows.push(chunk.iter().map(|&(_, row)| row).collect());
            set.trials.push(trial);
            set.targets.push(target);
        }
    }
    if set.rows.is_empty() {
        return Err(Error::Size(format!(
            "no trial has {seq_len} consecutive windows"
        )));
    }
    Ok(set)
}

/// Deterministic train/validation partition of sequence indices.
fn split_sequences(
    set: &SequenceSet,
    mode: SplitMode,
    train_fraction: f64,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>)> {
    let (train, val): (Vec<usize>, Vec<usize>) = match mode {
        SplitMode::Trial => {
            let mut trials: Vec<u32> = set.trials.clone();
            trials.sort_unstable();
            trials.dedup();
            if trials.len() < 2 {
                return Err(Error::Config(
                    "trial-level split needs at least two trials".into(),
                ));
            }
            trials.shuffle(&mut stream_rng(seed, &[TAG_SPLIT]));
            let n_train = ((trials.len() as f64 * train_fraction).round() as usize)
                .clamp(1, trials.len() - 1);
            let train_trials: std::collections::HashSet<u32> =
                trials[..n_train].iter().copied().collect();
            (0..set.rows.len()).partition(|&i| train_trials.contains(&set.trials[i]))
        }
        SplitMode::Window => {
            let mut order: Vec<usize> = (0..set.rows.len()).collect();
            order.shuffle(&mut stream_rng(seed, &[TAG_SPLIT]));
            if order.len() < 2 {
                return Err(Error::Config(
                    "window-level split needs at least two sequences".into(),
                ));
            }
            let n_train = ((order.len() as f64 * train_fraction).round() as usize)
                .clamp(1, order.len() - 1);
            let train: Vec<usize> = order[..n_train].to_vec();
            let val: Vec<usize> = order[n_train..].to_vec();
            (train, val)
        }
    };
    if train.is_empty() || val.is_empty() {
        return Err(Error::Config(
            "train/validation split left one side empty".into(),
        ));
    }
    Ok((train, val))
}

/// Per-epoch curve entry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_accuracy: f64,
    pub val_loss: f64,
    pub val_accuracy: f64,
}

/// Everything a training run reports.
#[derive(Debug, Clone, Serialize)]
pub struct TrainReport {
    /// Evaluation-mode training loss before this run's first update.
    pub initial_train_loss: f64,
    pub split: SplitMode,
    pub n_train_sequences: usize,
    pub n_val_sequences: usize,
    pub epochs: Vec<EpochStats>,
    pub checkpoints: Vec<String>,
}

/// A finished run: final model, optimizer state, and the report.
#[derive(Debug)]
pub struct TrainOutcome {
    pub model: LstmModel,
    pub optimizer: RmspropState,
    pub report: TrainReport,
}

struct Prepared {
    scaled: FeatureMatrix,
    set: SequenceSet,
    train_idx: Vec<usize>,
    val_idx: Vec<usize>,
}

fn prepare(
    features: &FeatureMatrix,
    labels: &LabelSet,
    config: &PipelineConfig,
) -> Result<Prepared> {
    let set = assemble_sequences(features, labels, config.lstm.seq_len)?;
    let (train_idx, val_idx) =
        split_sequences(&set, config.lstm.split, config.lstm.train_fraction, config.rng_seed)?;

    // Scale on training rows only, then transform everything.
    let mut train_rows = FeatureMatrix::new(features.col_names().to_vec());
    for &seq in &train_idx {
        for &row in &set.rows[seq] {
            train_rows.push_row(features.provenance()[row], features.row(row))?;
        }
    }
    let scaler = scaler_fit(&train_rows)?;
    let scaled = scaler_apply(&scaler, features)?;
    Ok(Prepared {
        scaled,
        set,
        train_idx,
        val_idx,
    })
}

fn build_batch(prepared: &Prepared, indices: &[usize], seq_len: usize) -> (Vec<Mat>, Mat) {
    let batch = indices.len();
    let features = prepared.scaled.n_cols();
    let mut seq = vec![Mat::zeros(batch, features); seq_len];
    let mut target = Mat::zeros(batch, 2);
    for (b, &sample) in indices.iter().enumerate() {
        for (t, &row) in prepared.set.rows[sample].iter().enumerate() {
            seq[t].row_mut(b).copy_from_slice(prepared.scaled.row(row));
        }
        target.row_mut(b).copy_from_slice(&prepared.set.targets[sample]);
    }
    (seq, target)
}

fn binary_correct(pred: &Mat, target: &Mat) -> usize {
    pred.data()
        .iter()
        .zip(target.data())
        .filter(|(p, t)| (**p >= 0.5) == (**t >= 0.5))
        .count()
}

fn evaluate(
    model: &LstmModel,
    prepared: &Prepared,
    indices: &[usize],
    seq_len: usize,
    batch_size: usize,
) -> Result<(f64, f64)> {
    let mut loss_sum = 0.0;
    let mut correct = 0usize;
    let mut elements = 0usize;
    for chunk in indices.chunks(batch_size) {
        let (seq, target) = build_batch(prepared, chunk, seq_len);
        let pred = forward_eval(model, &seq)?;
        let n = pred.rows() * pred.cols();
        loss_sum += mse_loss(&pred, &target)? * n as f64;
        correct += binary_correct(&pred, &target);
        elements += n;
    }
    Ok((loss_sum / elements as f64, correct as f64 / elements as f64))
}

#[allow(clippy::too_many_arguments)]
fn run_epochs(
    mut model: LstmModel,
    mut optimizer: RmspropState,
    prepared: &Prepared,
    config: &PipelineConfig,
    start_epoch: usize,
    out_dir: Option<&Path>,
    digest: u64,
) -> Result<TrainOutcome> {
    let lstm = &config.lstm;
    let (initial_train_loss, _) = evaluate(
        &model,
        prepared,
        &prepared.train_idx,
        lstm.seq_len,
        lstm.batch_size,
    )?;

    let mut epochs = Vec::with_capacity(lstm.epochs.saturating_sub(start_epoch));
    let mut checkpoints = Vec::new();
    for epoch in start_epoch + 1..=lstm.epochs {
        let mut rng = stream_rng(config.rng_seed, &[TAG_EPOCH, epoch as u64]);
        let mut order = prepared.train_idx.clone();
        order.shuffle(&mut rng);

        let mut loss_sum = 0.0;
        let mut correct = 0usize;
        let mut elements = 0usize;
        for chunk in order.chunks(lstm.batch_size) {
            let (seq, target) = build_batch(prepared, chunk, lstm.seq_len);
            let (pred, cache) = forward_train(&mut model, &seq, &mut rng)?;
            let n = pred.rows() * pred.cols();
            loss_sum += mse_loss(&pred, &target)? * n as f64;
            correct += binary_correct(&pred, &target);
            elements += n;
            let d_pred = mse_grad(&pred, &target);
            let grads = backward(&model, &cache, &d_pred);
            apply_grads(&mut model, &grads, &mut optimizer)?;
        }
        let train_loss = loss_sum / elements as f64;
        let train_accuracy = correct as f64 / elements as f64;
        let (val_loss, val_accuracy) = evaluate(
            &model,
            prepared,
            &prepared.val_idx,
            lstm.seq_len,
            lstm.batch_size,
        )?;
        epochs.push(EpochStats {
            epoch,
            train_loss,
            train_accuracy,
            val_loss,
            val_accuracy,
        });

        if epoch % lstm.checkpoint_every == 0 {
            if let Some(dir) = out_dir {
                let path = dir.join(format!("checkpoint_epoch{epoch:04}.ckpt"));
                checkpoint::save(&path, &model, &optimizer, epoch, digest)?;
                checkpoints.push(path.display().to_string());
            }
        }
    }

    Ok(TrainOutcome {
        model,
        optimizer,
        report: TrainReport {
            initial_train_loss,
            split: lstm.split,
            n_train_sequences: prepared.train_idx.len(),
            n_val_sequences: prepared.val_idx.len(),
            epochs,
            checkpoints,
        },
    })
}

/// Train from scratch on windowed features and per-trial labels.
/// Checkpoints are written into `out_dir` every `checkpoint_every` epochs.
pub fn train(
    features: &FeatureMatrix,
    labels: &LabelSet,
    config: &PipelineConfig,
    out_dir: Option<&Path>,
) -> Result<TrainOutcome> {
    config.validate()?;
    let prepared = prepare(features, labels, config)?;
    let model = LstmModel::init(features.n_cols(), &config.lstm, 2, config.rng_seed);
    let optimizer = RmspropState::new(
        RmspropParams {
            learning_rate: config.lstm.learning_rate,
            rho: config.lstm.rho,
            epsilon: config.lstm.epsilon,
        },
        &model.param_sizes(),
    );
    run_epochs(model, optimizer, &prepared, config, 0, out_dir, config.digest())
}

/// Resume a run from a checkpoint and train up to `config.lstm.epochs`.
/// The data, config, and seed must match the original run for the result to
/// equal an uninterrupted run.
pub fn train_resumed(
    checkpoint_path: &Path,
    features: &FeatureMatrix,
    labels: &LabelSet,
    config: &PipelineConfig,
    out_dir: Option<&Path>,
) -> Result<TrainOutcome> {
    config.validate()?;
    let prepared = prepare(features, labels, config)?;
    let mut model = LstmModel::init(features.n_cols(), &config.lstm, 2, config.rng_seed);
    let mut optimizer = RmspropState::new(
        RmspropParams {
            learning_rate: config.lstm.learning_rate,
            rho: config.lstm.rho,
            epsilon: config.lstm.epsilon,
        },
        &model.param_sizes(),
    );
    let epoch = checkpoint::load_into(checkpoint_path, &mut model, &mut optimizer, config.digest())?;
    if epoch >= config.lstm.epochs {
        return Err(Error::Config(format!(
            "checkpoint is at epoch {epoch}, config trains only to {}",
            config.lstm.epochs
        )));
    }
    run_epochs(model, optimizer, &prepared, config, epoch, out_dir, config.digest())
}

/// Write a TrainReport as JSON lines, one epoch per line.
pub fn write_report_jsonl(report: &TrainReport, path: &Path) -> Result<()> {
    use std::io::Write as _;
    let file = std::fs::File::create(path)?;
    let mut out = std::io::BufWriter::new(file);
    for epoch in &report.epochs {
        let line = serde_json::to_string(epoch)
            .map_err(|e| Error::Validation(format!("serialize epoch stats: {e}")))?;
        writeln!(out, "{line}")?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests;
