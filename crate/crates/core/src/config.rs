//! Pipeline configuration and the flat `key = value` config-file format.

use crate::bands::BandSelector;
use crate::error::{Error, Result};
use serde::Serialize;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

/// How the train/validation split groups samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SplitMode {
    /// Hold out whole trials; windows of one trial never straddle the split.
    Trial,
    /// Hold out individual sequences regardless of their trial.
    Window,
}

impl FromStr for SplitMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "trial" => Ok(SplitMode::Trial),
            "window" => Ok(SplitMode::Window),
            other => Err(Error::Config(format!(
                "unknown split mode {other:?}; expected \"trial\" or \"window\""
            ))),
        }
    }
}

/// Recurrent-model hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LstmConfig {
    /// Hidden size per stacked recurrent layer.
    pub hidden_sizes: Vec<usize>,
    /// Dropout rate after each recurrent layer; length must match `hidden_sizes`.
    pub dropout_rates: Vec<f64>,
    /// Dropout rate between the normalized last hidden state and the head.
    pub head_dropout: f64,
    /// Width of the ReLU layer inside the head.
    pub head_hidden: usize,
    /// Timesteps per training sequence.
    pub seq_len: usize,
    pub batch_size: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub rho: f64,
    pub epsilon: f64,
    pub bn_momentum: f64,
    pub bn_epsilon: f64,
    /// Serialize a checkpoint every this many epochs.
    pub checkpoint_every: usize,
    /// Fraction of samples used for training.
    pub train_fraction: f64,
    pub split: SplitMode,
}

impl Default for LstmConfig {
    fn default() -> Self {
        LstmConfig {
            hidden_sizes: vec![32, 16, 8, 8, 4],
            dropout_rates: vec![0.3, 0.5, 0.3, 0.3, 0.3],
            head_dropout: 0.2,
            head_hidden: 32,
            seq_len: 10,
            batch_size: 16,
            epochs: 100,
            learning_rate: 0.001,
            rho: 0.9,
            epsilon: 1e-8,
            bn_momentum: 0.9,
            bn_epsilon: 1e-5,
            checkpoint_every: 50,
            train_fraction: 0.75,
            split: SplitMode::Trial,
        }
    }
}

impl LstmConfig {
    /// The published full-size stack. Expect long runtimes.
    pub fn full_size() -> Self {
        LstmConfig {
            hidden_sizes: vec![512, 256, 128, 64, 10],
            epochs: 1000,
            ..LstmConfig::default()
        }
    }
}

/// Every tunable of the pipeline, with the documented defaults.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PipelineConfig {
    /// Sliding-window length in samples.
    pub window_len: usize,
    /// Sliding-window step in samples.
    pub window_step: usize,
    /// Welch segment length in samples.
    pub welch_segment_len: usize,
    /// Welch segment overlap as a fraction of the segment length.
    pub welch_overlap: f64,
    /// 0-based channel indices used for window features.
    pub channel_subset: Vec<usize>,
    #[serde(serialize_with = "serialize_selector")]
    pub band_selector: BandSelector,
    pub rng_seed: u64,
    pub knn_k: usize,
    pub svm_c: f64,
    pub svm_epochs: usize,
    pub cv_folds: usize,
    pub lstm: LstmConfig,
}

fn serialize_selector<S: serde::Serializer>(
    sel: &BandSelector,
    ser: S,
) -> std::result::Result<S::Ok, S::Error> {
    ser.serialize_str(&sel.to_string())
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            window_len: 256,
            window_step: 16,
            welch_segment_len: 256,
            welch_overlap: 0.5,
            channel_subset: vec![1, 2, 3, 4, 6, 11, 13, 17, 19, 20, 21, 25, 29, 31],
            band_selector: BandSelector::Meta,
            rng_seed: 42,
            knn_k: 5,
            svm_c: 1.0,
            svm_epochs: 100,
            cv_folds: 5,
            lstm: LstmConfig::default(),
        }
    }
}

impl PipelineConfig {
    /// Load a config file and overlay it on the defaults.
    pub fn from_file(path: &Path) -> Result<Self> {
        let mut config = PipelineConfig::default();
        config.merge_file(path)?;
        Ok(config)
    }

    /// Apply `key = value` lines from `path` over the current values.
    /// Blank lines and `#` comments are skipped; unknown keys are rejected.
    pub fn merge_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path)?;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!(
                    "{}:{}: expected `key = value`, got {raw:?}",
                    path.display(),
                    lineno + 1
                ))
            })?;
            self.set(key.trim(), value.trim()).map_err(|e| {
                Error::Config(format!("{}:{}: {e}", path.display(), lineno + 1))
            })?;
        }
        self.validate()
    }

    /// Set one key from its textual form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
            value.parse().map_err(|_| {
                Error::Config(format!("key {key:?}: cannot parse value {value:?}"))
            })
        }
        fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
            value
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(|s| {
                    s.parse().map_err(|_| {
                        Error::Config(format!("key {key:?}: cannot parse element {s:?}"))
                    })
                })
                .collect()
        }

        match key {
            "window_len" => self.window_len = parse(key, value)?,
            "window_step" => self.window_step = parse(key, value)?,
            "welch_segment_len" => self.welch_segment_len = parse(key, value)?,
            "welch_overlap" => self.welch_overlap = parse(key, value)?,
            "channel_subset" => self.channel_subset = parse_list(key, value)?,
            "band_set" => self.band_selector = value.parse()?,
            "rng_seed" => self.rng_seed = parse(key, value)?,
            "knn_k" => self.knn_k = parse(key, value)?,
            "svm_c" => self.svm_c = parse(key, value)?,
            "svm_epochs" => self.svm_epochs = parse(key, value)?,
            "cv_folds" => self.cv_folds = parse(key, value)?,
            "lstm_hidden" => self.lstm.hidden_sizes = parse_list(key, value)?,
            "lstm_dropout" => self.lstm.dropout_rates = parse_list(key, value)?,
            "lstm_head_dropout" => self.lstm.head_dropout = parse(key, value)?,
            "lstm_head_hidden" => self.lstm.head_hidden = parse(key, value)?,
            "lstm_seq_len" => self.lstm.seq_len = parse(key, value)?,
            "lstm_batch_size" => self.lstm.batch_size = parse(key, value)?,
            "lstm_epochs" => self.lstm.epochs = parse(key, value)?,
            "lstm_lr" => self.lstm.learning_rate = parse(key, value)?,
            "lstm_rho" => self.lstm.rho = parse(key, value)?,
            "lstm_epsilon" => self.lstm.epsilon = parse(key, value)?,
            "lstm_bn_momentum" => self.lstm.bn_momentum = parse(key, value)?,
            "lstm_bn_epsilon" => self.lstm.bn_epsilon = parse(key, value)?,
            "lstm_checkpoint_every" => self.lstm.checkpoint_every = parse(key, value)?,
            "lstm_train_fraction" => self.lstm.train_fraction = parse(key, value)?,
            "lstm_split" => self.lstm.split = value.parse()?,
            other => {
                return Err(Error::Config(format!("unknown config key {other:?}")));
            }
        }
        Ok(())
    }

    /// Check the documented invariants.
    pub fn validate(&self) -> Result<()> {
        if self.window_step < 1 {
            return Err(Error::Config("window_step must be >= 1".into()));
        }
        if self.window_len < 2 || !self.window_len.is_power_of_two() {
            return Err(Error::Config(format!(
                "window_len must be a power of two >= 2, got {}",
                self.window_len
            )));
        }
        if self.welch_segment_len < 2 || !self.welch_segment_len.is_power_of_two() {
            return Err(Error::Config(format!(
                "welch_segment_len must be a power of two >= 2, got {}",
                self.welch_segment_len
            )));
        }
        if !(0.0..1.0).contains(&self.welch_overlap) {
            return Err(Error::Config(format!(
                "welch_overlap must be in [0, 1), got {}",
                self.welch_overlap
            )));
        }
        if self.channel_subset.is_empty() {
            return Err(Error::Config("channel_subset must be non-empty".into()));
        }
        for pair in self.channel_subset.windows(2) {
            if pair[1] <= pair[0] {
                return Err(Error::Config(
                    "channel_subset must be strictly increasing".into(),
                ));
            }
        }
        if self.knn_k < 1 {
            return Err(Error::Config("knn_k must be >= 1".into()));
        }
        if self.svm_c <= 0.0 {
            return Err(Error::Config("svm_c must be > 0".into()));
        }
        if self.cv_folds < 2 {
            return Err(Error::Config("cv_folds must be >= 2".into()));
        }
        let lstm = &self.lstm;
        if lstm.hidden_sizes.is_empty() {
            return Err(Error::Config("lstm_hidden must be non-empty".into()));
        }
        if lstm.dropout_rates.len() != lstm.hidden_sizes.len() {
            return Err(Error::Config(format!(
                "lstm_dropout has {} rates for {} layers",
                lstm.dropout_rates.len(),
                lstm.hidden_sizes.len()
            )));
        }
        for &rate in lstm.dropout_rates.iter().chain([&lstm.head_dropout]) {
            if !(0.0..1.0).contains(&rate) {
                return Err(Error::Config(format!(
                    "dropout rates must be in [0, 1), got {rate}"
                )));
            }
        }
        if lstm.seq_len < 1 || lstm.batch_size < 1 || lstm.head_hidden < 1 {
            return Err(Error::Config(
                "lstm_seq_len, lstm_batch_size, and lstm_head_hidden must be >= 1".into(),
            ));
        }
        if lstm.checkpoint_every < 1 {
            return Err(Error::Config("lstm_checkpoint_every must be >= 1".into()));
        }
        if !(0.0 < lstm.train_fraction && lstm.train_fraction < 1.0) {
            return Err(Error::Config(format!(
                "lstm_train_fraction must be in (0, 1), got {}",
                lstm.train_fraction
            )));
        }
        Ok(())
    }

    /// Stable digest of every field; recorded in manifests and checkpoints.
    pub fn digest(&self) -> u64 {
        let mut repr = String::new();
        let _ = write!(
            repr,
            "{:?}|{:?}|{:?}|{}|{:?}|{}|{}|{}|{}|{}|{}",
            self.window_len,
            self.window_step,
            self.welch_segment_len,
            self.welch_overlap,
            self.channel_subset,
            self.band_selector,
            self.rng_seed,
            self.knn_k,
            self.svm_c,
            self.svm_epochs,
            self.cv_folds,
        );
        let _ = write!(repr, "|{:?}", self.lstm);
        crate::rng::fnv1a64(repr.as_bytes())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn defaults_are_valid() {
        let config = PipelineConfig::default();
        config.validate().unwrap();
        assert_eq!(config.window_len, 256);
        assert_eq!(config.window_step, 16);
        assert_eq!(config.channel_subset.len(), 14);
        assert!(config.channel_subset.iter().all(|&c| c < 32));
    }

    #[test]
    fn config_file_overrides_defaults() {
        let mut file = tempfile::NamedTempFile::new().unwrap();
        writeln!(file, "# comment\nwindow_step = 32\nband_set = table_one").unwrap();
        writeln!(file, "lstm_hidden = 8, 4\nlstm_dropout = 0.1, 0.2").unwrap();
        let config = PipelineConfig::from_file(file.path()).unwrap();
        assert_eq!(config.window_step, 32);
        assert_eq!(config.band_selector, BandSelector::TableOne);
        assert_eq!(config.lstm.hidden_sizes, vec![8, 4]);
        assert_eq!(config.lstm.dropout_rates, vec![0.1, 0.2]);
    }

    #[test]
    fn mismatched_dropout_rates_rejected() {
        let mut file = tempfile::NamedTempFile::new().unwrap();
        writeln!(file, "lstm_hidden = 8, 4").unwrap();
        assert!(PipelineConfig::from_file(file.path()).is_err());
    }

    #[test]
    fn unknown_key_rejected() {
        let mut config = PipelineConfig::default();
        let err = config.set("windowlen", "10").unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn non_power_of_two_window_rejected() {
        let config = PipelineConfig {
            window_len: 300,
            ..PipelineConfig::default()
        };
        assert!(config.validate().is_err());
    }

    #[test]
    fn non_increasing_channel_subset_rejected() {
        let config = PipelineConfig {
            channel_subset: vec![3, 3, 7],
            ..PipelineConfig::default()
        };
        assert!(config.validate().is_err());
        let config = PipelineConfig {
            channel_subset: vec![5, 2],
            ..PipelineConfig::default()
        };
        assert!(config.validate().is_err());
    }

    #[test]
    fn digest_tracks_changes() {
        let base = PipelineConfig::default();
        let mut changed = base.clone();
        changed.rng_seed = 43;
        assert_ne!(base.digest(), changed.digest());
        assert_eq!(base.digest(), PipelineConfig::default().digest());
    }
}
