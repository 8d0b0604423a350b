//! In-memory containers for one subject's recordings and ratings.

use crate::error::{Error, Result};
use crate::layout::{default_channel_layout, ChannelLayout};

/// One subject's data: trials x channels x samples of microvolt values at a
/// fixed sample rate. Storage is trial-major, then channel, then sample.
#[derive(Debug, Clone)]
pub struct TrialTensor {
    subject_id: u32,
    n_trials: usize,
    n_channels: usize,
    n_samples: usize,
    sample_rate_hz: f64,
    data: Vec<f64>,
    layout: Option<ChannelLayout>,
}

impl TrialTensor {
    /// Build a tensor, validating dimensions, rate, and finiteness.
    /// A 32-channel tensor gets the standard layout attached.
    pub fn new(
        subject_id: u32,
        n_trials: usize,
        n_channels: usize,
        n_samples: usize,
        sample_rate_hz: f64,
        data: Vec<f64>,
    ) -> Result<Self> {
        if n_trials == 0 || n_channels == 0 || n_samples == 0 {
            return Err(Error::Size(format!(
                "tensor dimensions must all be >= 1, got {n_trials}x{n_channels}x{n_samples}"
            )));
        }
        if !sample_rate_hz.is_finite() || sample_rate_hz <= 0.0 {
            return Err(Error::Validation(format!(
                "sample rate must be > 0, got {sample_rate_hz}"
            )));
        }
        let expected = n_trials * n_channels * n_samples;
        if data.len() != expected {
            return Err(Error::Size(format!(
                "tensor of {n_trials}x{n_channels}x{n_samples} needs {expected} values, got {}",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::Validation("tensor contains NaN or Inf".into()));
        }
        let layout = if n_channels == 32 {
            Some(default_channel_layout())
        } else {
            None
        };
        Ok(TrialTensor {
            subject_id,
            n_trials,
            n_channels,
            n_samples,
            sample_rate_hz,
            data,
            layout,
        })
    }

    pub fn subject_id(&self) -> u32 {
        self.subject_id
    }

    pub fn n_trials(&self) -> usize {
        self.n_trials
    }

    pub fn n_channels(&self) -> usize {
        self.n_channels
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    /// Attached electrode layout; present only for 32-channel tensors unless
    /// overridden.
    pub fn layout(&self) -> Option<&ChannelLayout> {
        self.layout.as_ref()
    }

    pub fn with_layout(mut self, layout: ChannelLayout) -> Result<Self> {
        if layout.len() != self.n_channels {
            return Err(Error::Size(format!(
                "layout of {} electrodes does not fit {} channels",
                layout.len(),
                self.n_channels
            )));
        }
        self.layout = Some(layout);
        Ok(self)
    }

    pub fn value(&self, trial: usize, channel: usize, sample: usize) -> f64 {
        self.data[(trial * self.n_channels + channel) * self.n_samples + sample]
    }

    /// All samples of one channel within one trial.
    pub fn channel(&self, trial: usize, channel: usize) -> &[f64] {
        let start = (trial * self.n_channels + channel) * self.n_samples;
        &self.data[start..start + self.n_samples]
    }

    /// Raw trial-major payload.
    pub fn data(&self) -> &[f64] {
        &self.data
    }
}

/// Per-trial valence and arousal ratings on the 1-9 scale.
#[derive(Debug, Clone, PartialEq)]
pub struct Ratings {
    valence: Vec<f64>,
    arousal: Vec<f64>,
}

impl Ratings {
    pub fn new(valence: Vec<f64>, arousal: Vec<f64>) -> Result<Self> {
        if valence.len() != arousal.len() {
            return Err(Error::Size(format!(
                "{} valence ratings but {} arousal ratings",
                valence.len(),
                arousal.len()
            )));
        }
        if valence.is_empty() {
            return Err(Error::Size("ratings must cover at least one trial".into()));
        }
        for (trial, (v, a)) in valence.iter().zip(&arousal).enumerate() {
            for (name, value) in [("valence", v), ("arousal", a)] {
                if !(*value >= 1.0 && *value <= 9.0) {
                    return Err(Error::Validation(format!(
                        "trial {trial}: {name} rating {value} outside [1, 9]"
                    )));
                }
            }
        }
        Ok(Ratings { valence, arousal })
    }

    pub fn len(&self) -> usize {
        self.valence.len()
    }

    pub fn is_empty(&self) -> bool {
        self.valence.is_empty()
    }

    pub fn valence(&self) -> &[f64] {
        &self.valence
    }

    pub fn arousal(&self) -> &[f64] {
        &self.arousal
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn indexing_is_trial_major() {
        let data: Vec<f64> = (0..2 * 3 * 4).map(|v| v as f64).collect();
        let t = TrialTensor::new(0, 2, 3, 4, 128.0, data).unwrap();
        assert_eq!(t.value(0, 0, 0), 0.0);
        assert_eq!(t.value(0, 1, 0), 4.0);
        assert_eq!(t.value(1, 0, 0), 12.0);
        assert_eq!(t.channel(1, 2), &[20.0, 21.0, 22.0, 23.0]);
    }

    #[test]
    fn rejects_bad_dimensions_and_values() {
        assert!(TrialTensor::new(0, 0, 1, 1, 128.0, vec![]).is_err());
        assert!(TrialTensor::new(0, 1, 1, 2, 128.0, vec![0.0]).is_err());
        assert!(TrialTensor::new(0, 1, 1, 1, 0.0, vec![0.0]).is_err());
        assert!(TrialTensor::new(0, 1, 1, 1, 128.0, vec![f64::NAN]).is_err());
    }

    #[test]
    fn layout_attached_for_32_channels() {
        let t = TrialTensor::new(0, 1, 32, 4, 128.0, vec![0.0; 128]).unwrap();
        assert!(t.layout().is_some());
        let t = TrialTensor::new(0, 1, 2, 4, 128.0, vec![0.0; 8]).unwrap();
        assert!(t.layout().is_none());
    }

    #[test]
    fn ratings_validate_range() {
        assert!(Ratings::new(vec![1.0, 9.0], vec![5.0, 5.0]).is_ok());
        let err = Ratings::new(vec![9.5], vec![5.0]).unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
    }
}
