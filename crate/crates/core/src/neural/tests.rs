use super::*;
use crate::features::RowProvenance;
use crate::labeling::LabelSet;
use rand::Rng;

fn tiny_config() -> LstmConfig {
    LstmConfig {
        hidden_sizes: vec![8, 4],
        dropout_rates: vec![0.0, 0.0],
        head_dropout: 0.0,
        head_hidden: 5,
        seq_len: 3,
        batch_size: 2,
        epochs: 2,
        ..LstmConfig::default()
    }
}

fn random_seq(rng: &mut impl Rng, seq_len: usize, batch: usize, features: usize) -> Vec<Mat> {
    (0..seq_len)
        .map(|_| {
            Mat::from_vec(
                batch,
                features,
                (0..batch * features)
                    .map(|_| rng.random_range(-1.0..1.0))
                    .collect(),
            )
        })
        .collect()
}

#[test]
fn eval_outputs_stay_in_unit_interval() {
    let config = tiny_config();
    let model = LstmModel::init(6, &config, 2, 9);
    let mut rng = crate::rng::stream_rng(80, &[0]);
    let seq = random_seq(&mut rng, 3, 4, 6);
    let pred = forward_eval(&model, &seq).unwrap();
    for &p in pred.data() {
        assert!(p > 0.0 && p < 1.0);
    }
}

#[test]
fn zero_dropout_makes_train_and_eval_agree() {
    // Momentum 0 copies this batch's statistics into the running estimates,
    // so a second eval pass sees exactly the train-mode normalization.
    let mut config = tiny_config();
    config.bn_momentum = 0.0;
    let mut model = LstmModel::init(6, &config, 2, 10);
    let mut rng = crate::rng::stream_rng(81, &[0]);
    let seq = random_seq(&mut rng, 3, 4, 6);
    let mut mask_rng = crate::rng::stream_rng(81, &[1]);
    let (train_pred, _) = forward_train(&mut model, &seq, &mut mask_rng).unwrap();
    let eval_pred = forward_eval(&model, &seq).unwrap();
    for (a, b) in train_pred.data().iter().zip(eval_pred.data()) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn training_forward_is_deterministic_given_stream() {
    let mut config = tiny_config();
    config.dropout_rates = vec![0.3, 0.3];
    config.head_dropout = 0.2;
    let mut rng = crate::rng::stream_rng(82, &[0]);
    let seq = random_seq(&mut rng, 3, 4, 6);

    let mut model_a = LstmModel::init(6, &config, 2, 11);
    let mut rng_a = crate::rng::stream_rng(82, &[1]);
    let (pred_a, _) = forward_train(&mut model_a, &seq, &mut rng_a).unwrap();

    let mut model_b = LstmModel::init(6, &config, 2, 11);
    let mut rng_b = crate::rng::stream_rng(82, &[1]);
    let (pred_b, _) = forward_train(&mut model_b, &seq, &mut rng_b).unwrap();
    assert_eq!(pred_a, pred_b);
}

#[test]
fn mse_analytic_examples() {
    let pred = Mat::from_vec(1, 2, vec![1.0, 2.0]);
    let target = Mat::from_vec(1, 2, vec![0.0, 0.0]);
    assert!((mse_loss(&pred, &target).unwrap() - 2.5).abs() < 1e-15);
    assert_eq!(mse_loss(&pred, &pred).unwrap(), 0.0);
    let bad = Mat::zeros(2, 2);
    assert!(mse_loss(&pred, &bad).is_err());
}

#[test]
fn mse_gradient_matches_finite_differences() {
    let mut rng = crate::rng::stream_rng(83, &[0]);
    let pred = Mat::from_vec(2, 3, (0..6).map(|_| rng.random_range(0.0..1.0)).collect());
    let target = Mat::from_vec(2, 3, (0..6).map(|_| rng.random_range(0.0..1.0)).collect());
    let grad = mse_grad(&pred, &target);
    let h = 1e-7;
    for r in 0..2 {
        for c in 0..3 {
            let mut plus = pred.clone();
            *plus.at_mut(r, c) += h;
            let mut minus = pred.clone();
            *minus.at_mut(r, c) -= h;
            let numeric = (mse_loss(&plus, &target).unwrap()
                - mse_loss(&minus, &target).unwrap())
                / (2.0 * h);
            assert!((grad.at(r, c) - numeric).abs() < 1e-6);
        }
    }
}

fn get_param(model: &LstmModel, flat_index: usize) -> f64 {
    let mut remaining = flat_index;
    let mut found = None;
    model.visit_params(&mut |values| {
        if found.is_some() {
            return;
        }
        if remaining < values.len() {
            found = Some(values[remaining]);
        } else {
            remaining -= values.len();
        }
    });
    found.expect("index in range")
}

fn set_param(model: &mut LstmModel, flat_index: usize, value: f64) {
    let mut remaining = flat_index;
    let mut done = false;
    model.visit_params_mut(&mut |values| {
        if done {
            return;
        }
        if remaining < values.len() {
            values[remaining] = value;
            done = true;
        } else {
            remaining -= values.len();
        }
    });
    assert!(done, "index in range");
}

/// Every parameter of the down-scaled model checks against central finite
/// differences at 1e-4 relative.
#[test]
fn full_model_gradients_match_finite_differences() {
    let config = tiny_config();
    let model = LstmModel::init(6, &config, 2, 12);
    let mut rng = crate::rng::stream_rng(84, &[0]);
    let seq = random_seq(&mut rng, 3, 2, 6);
    let target = Mat::from_vec(2, 2, (0..4).map(|_| rng.random_range(0.0..1.0)).collect());

    let loss_of = |m: &LstmModel| -> f64 {
        let mut m = m.clone();
        let mut rng = crate::rng::stream_rng(0, &[0]);
        let (pred, _) = forward_train(&mut m, &seq, &mut rng).unwrap();
        mse_loss(&pred, &target).unwrap()
    };

    let analytic = {
        let mut m = model.clone();
        let mut rng = crate::rng::stream_rng(0, &[0]);
        let (pred, cache) = forward_train(&mut m, &seq, &mut rng).unwrap();
        let d_pred = mse_grad(&pred, &target);
        backward(&m, &cache, &d_pred)
    };
    let flat_analytic: Vec<f64> = analytic.tensors.iter().flatten().copied().collect();
    let total: usize = model.param_sizes().iter().sum();
    assert_eq!(flat_analytic.len(), total);

    let h = 1e-5;
    let mut worst = 0.0f64;
    for (index, &a) in flat_analytic.iter().enumerate() {
        let original = get_param(&model, index);
        let mut plus = model.clone();
        set_param(&mut plus, index, original + h);
        let mut minus = model.clone();
        set_param(&mut minus, index, original - h);
        let numeric = (loss_of(&plus) - loss_of(&minus)) / (2.0 * h);
        // Sub-1e-6 gradients fall below the central difference's own f64
        // cancellation floor; the denominator floor compares them absolutely.
        let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-6);
        worst = worst.max(rel);
        assert!(
            rel < 1e-4,
            "param {index}: analytic {a} vs numeric {numeric} (rel {rel})"
        );
    }
    assert!(worst > 0.0, "check exercised at least one parameter");
}

fn planted_features(n_trials: usize, windows_per_trial: usize, n_cols: usize) -> (FeatureMatrix, LabelSet) {
    // Even trials are positive on both targets; the first feature column
    // carries the signal.
    let mut rng = crate::rng::stream_rng(85, &[0]);
    let mut matrix = FeatureMatrix::new((0..n_cols).map(|c| format!("f{c}")).collect());
    let mut valence = Vec::new();
    let mut arousal = Vec::new();
    for trial in 0..n_trials {
        let positive = trial % 2 == 0;
        valence.push(positive);
        arousal.push(positive);
        for window in 0..windows_per_trial {
            let mut row: Vec<f64> = (0..n_cols).map(|_| rng.random_range(-0.5..0.5)).collect();
            row[0] += if positive { 3.0 } else { -3.0 };
            matrix
                .push_row(
                    RowProvenance {
                        subject: 0,
                        trial: trial as u32,
                        window: window as i64,
                    },
                    &row,
                )
                .unwrap();
        }
    }
    (matrix, LabelSet::new(valence, arousal).unwrap())
}

#[test]
fn sequences_chunk_windows_per_trial() {
    let (features, labels) = planted_features(4, 10, 3);
    let set = assemble_sequences(&features, &labels, 3).unwrap();
    // Ten windows per trial yield three full sequences of three.
    assert_eq!(set.rows.len(), 4 * 3);
    assert!(set.rows.iter().all(|rows| rows.len() == 3));
    // Sequence windows are consecutive and ordered.
    let prov = features.provenance();
    for rows in &set.rows {
        for pair in rows.windows(2) {
            assert_eq!(prov[pair[1]].window, prov[pair[0]].window + 1);
            assert_eq!(prov[pair[1]].trial, prov[pair[0]].trial);
        }
    }
}

#[test]
fn trial_split_keeps_trials_whole() {
    let (features, labels) = planted_features(8, 12, 3);
    let set = assemble_sequences(&features, &labels, 4).unwrap();
    let (train, val) = split_sequences(&set, SplitMode::Trial, 0.75, 7).unwrap();
    assert!(!train.is_empty() && !val.is_empty());
    let train_trials: std::collections::HashSet<u32> =
        train.iter().map(|&i| set.trials[i]).collect();
    let val_trials: std::collections::HashSet<u32> = val.iter().map(|&i| set.trials[i]).collect();
    assert!(train_trials.is_disjoint(&val_trials));
}

#[test]
fn training_run_is_reproducible() {
    let (features, labels) = planted_features(6, 12, 4);
    let config = PipelineConfig {
        lstm: LstmConfig {
            hidden_sizes: vec![6, 4],
            dropout_rates: vec![0.2, 0.2],
            head_dropout: 0.1,
            head_hidden: 4,
            seq_len: 4,
            batch_size: 4,
            epochs: 3,
            ..LstmConfig::default()
        },
        ..PipelineConfig::default()
    };
    let a = train(&features, &labels, &config, None).unwrap();
    let b = train(&features, &labels, &config, None).unwrap();
    assert_eq!(format!("{:?}", a.report), format!("{:?}", b.report));
    assert_eq!(a.model, b.model);
}

#[test]
fn checkpoints_round_trip_losslessly() {
    let (features, labels) = planted_features(6, 12, 4);
    let config = PipelineConfig {
        lstm: LstmConfig {
            hidden_sizes: vec![6, 4],
            dropout_rates: vec![0.2, 0.2],
            head_dropout: 0.1,
            head_hidden: 4,
            seq_len: 4,
            batch_size: 4,
            epochs: 2,
            checkpoint_every: 1,
            ..LstmConfig::default()
        },
        ..PipelineConfig::default()
    };
    let dir = tempfile::tempdir().unwrap();
    let outcome = train(&features, &labels, &config, Some(dir.path())).unwrap();
    assert_eq!(outcome.report.checkpoints.len(), 2);

    let mut restored = LstmModel::init(4, &config.lstm, 2, config.rng_seed);
    let mut opt = RmspropState::new(
        RmspropParams::default(),
        &restored.param_sizes(),
    );
    let epoch = checkpoint::load_into(
        std::path::Path::new(&outcome.report.checkpoints[1]),
        &mut restored,
        &mut opt,
        config.digest(),
    )
    .unwrap();
    assert_eq!(epoch, 2);
    assert_eq!(restored, outcome.model);
    assert_eq!(opt.averages, outcome.optimizer.averages);

    // Identical models produce identical eval outputs.
    let mut rng = crate::rng::stream_rng(86, &[0]);
    let seq = random_seq(&mut rng, 4, 3, 4);
    assert_eq!(
        forward_eval(&restored, &seq).unwrap(),
        forward_eval(&outcome.model, &seq).unwrap()
    );
}

#[test]
fn resume_equals_straight_run() {
    let (features, labels) = planted_features(6, 12, 4);
    let config = PipelineConfig {
        lstm: LstmConfig {
            hidden_sizes: vec![6, 4],
            dropout_rates: vec![0.2, 0.2],
            head_dropout: 0.1,
            head_hidden: 4,
            seq_len: 4,
            batch_size: 4,
            epochs: 4,
            checkpoint_every: 2,
            ..LstmConfig::default()
        },
        ..PipelineConfig::default()
    };
    let dir_full = tempfile::tempdir().unwrap();
    let straight = train(&features, &labels, &config, Some(dir_full.path())).unwrap();

    let dir_resume = tempfile::tempdir().unwrap();
    let midpoint = dir_full.path().join("checkpoint_epoch0002.ckpt");
    let resumed = train_resumed(&midpoint, &features, &labels, &config, Some(dir_resume.path()))
        .unwrap();

    assert_eq!(straight.model, resumed.model);
    assert_eq!(straight.optimizer.averages, resumed.optimizer.averages);
    // The resumed report covers epochs 3..=4 and matches the tail of the
    // straight run.
    assert_eq!(resumed.report.epochs.len(), 2);
    assert_eq!(&straight.report.epochs[2..], &resumed.report.epochs[..]);
    // Final checkpoints are bitwise identical.
    let full_bytes = std::fs::read(dir_full.path().join("checkpoint_epoch0004.ckpt")).unwrap();
    let resumed_bytes = std::fs::read(dir_resume.path().join("checkpoint_epoch0004.ckpt")).unwrap();
    assert_eq!(full_bytes, resumed_bytes);
}

#[test]
fn digest_mismatch_rejected_on_resume() {
    let (features, labels) = planted_features(6, 12, 4);
    let config = PipelineConfig {
        lstm: LstmConfig {
            hidden_sizes: vec![6, 4],
            dropout_rates: vec![0.1, 0.1],
            head_dropout: 0.0,
            head_hidden: 4,
            seq_len: 4,
            batch_size: 4,
            epochs: 2,
            checkpoint_every: 2,
            ..LstmConfig::default()
        },
        ..PipelineConfig::default()
    };
    let dir = tempfile::tempdir().unwrap();
    train(&features, &labels, &config, Some(dir.path())).unwrap();
    let mut other = config.clone();
    other.rng_seed = 1234;
    other.lstm.epochs = 4;
    let err = train_resumed(
        &dir.path().join("checkpoint_epoch0002.ckpt"),
        &features,
        &labels,
        &other,
        None,
    )
    .unwrap_err();
    assert!(matches!(err, Error::Config(_)));
}

#[test]
fn loss_decreases_on_planted_data() {
    let (features, labels) = planted_features(8, 20, 4);
    let config = PipelineConfig {
        lstm: LstmConfig {
            hidden_sizes: vec![8, 4],
            dropout_rates: vec![0.0, 0.0],
            head_dropout: 0.0,
            head_hidden: 8,
            seq_len: 5,
            batch_size: 8,
            epochs: 5,
            learning_rate: 0.005,
            ..LstmConfig::default()
        },
        ..PipelineConfig::default()
    };
    let outcome = train(&features, &labels, &config, None).unwrap();
    let first = outcome.report.epochs.first().unwrap();
    assert!(
        first.train_loss < outcome.report.initial_train_loss,
        "epoch-1 loss {} not below initial {}",
        first.train_loss,
        outcome.report.initial_train_loss
    );
}
