//! Seeded synthetic EEG with known spectral content.
//!
//! Each channel of each trial is a sum of band-limited sinusoids plus white
//! Gaussian noise. Two of the components carry the labels: their amplitude
//! is multiplied by `boost_factor` on trials designated valence-positive
//! (respectively arousal-positive), and the written ratings place those
//! trials above the median. That gives tests a dataset where the class
//! signal is planted with a known margin.

use crate::error::{Error, Result};
use crate::rng::stream_rng;
use crate::tensor::{Ratings, TrialTensor};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::Normal;

/// One sinusoidal component confined to a band.
#[derive(Debug, Clone)]
pub struct BandComponent {
    pub name: String,
    pub low_hz: f64,
    pub high_hz: f64,
    pub center_hz: f64,
    pub amplitude_uv: f64,
}

impl BandComponent {
    pub fn new(
        name: impl Into<String>,
        low_hz: f64,
        high_hz: f64,
        center_hz: f64,
        amplitude_uv: f64,
    ) -> Self {
        BandComponent {
            name: name.into(),
            low_hz,
            high_hz,
            center_hz,
            amplitude_uv,
        }
    }
}

/// Recipe for a synthetic subject.
#[derive(Debug, Clone)]
pub struct SyntheticSpec {
    pub components: Vec<BandComponent>,
    /// Component index whose amplitude encodes valence.
    pub valence_component: usize,
    /// Component index whose amplitude encodes arousal.
    pub arousal_component: usize,
    /// Amplitude multiplier applied on positive trials.
    pub boost_factor: f64,
    pub noise_sigma_uv: f64,
    pub rng_seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            components: vec![
                BandComponent::new("theta", 4.0, 8.0, 6.0, 2.0),
                BandComponent::new("alpha", 8.0, 12.0, 10.0, 4.0),
                BandComponent::new("beta", 16.0, 25.0, 20.0, 2.0),
                BandComponent::new("gamma", 25.0, 45.0, 35.0, 1.0),
            ],
            valence_component: 1,
            arousal_component: 2,
            boost_factor: 4.0,
            noise_sigma_uv: 1.0,
            rng_seed: 42,
        }
    }
}

impl SyntheticSpec {
    fn validate(&self, fs: f64) -> Result<()> {
        if self.components.is_empty() {
            return Err(Error::Config("spec needs at least one component".into()));
        }
        for c in &self.components {
            if !(c.low_hz <= c.center_hz && c.center_hz < c.high_hz) {
                return Err(Error::Config(format!(
                    "component {:?}: center {} outside band [{}, {})",
                    c.name, c.center_hz, c.low_hz, c.high_hz
                )));
            }
            if c.amplitude_uv < 0.0 {
                return Err(Error::Config(format!(
                    "component {:?}: amplitude must be >= 0",
                    c.name
                )));
            }
            if fs <= 2.0 * c.center_hz {
                return Err(Error::Config(format!(
                    "sample rate {fs} Hz cannot represent component {:?} at {} Hz (need fs > {})",
                    c.name,
                    c.center_hz,
                    2.0 * c.center_hz
                )));
            }
        }
        if self.noise_sigma_uv < 0.0 {
            return Err(Error::Config("noise_sigma must be >= 0".into()));
        }
        let n = self.components.len();
        if self.valence_component >= n || self.arousal_component >= n {
            return Err(Error::Config(
                "label component indices must point into `components`".into(),
            ));
        }
        if self.valence_component == self.arousal_component {
            return Err(Error::Config(
                "valence and arousal must be carried by distinct components".into(),
            ));
        }
        if self.boost_factor <= 1.0 {
            return Err(Error::Config("boost_factor must be > 1".into()));
        }
        Ok(())
    }
}

// Stream tags for the independent random substreams.
const TAG_ASSIGN_VALENCE: u64 = 1;
const TAG_ASSIGN_AROUSAL: u64 = 2;
const TAG_RATING: u64 = 3;
const TAG_SIGNAL: u64 = 4;

/// Balanced positive/negative assignment over trials, seeded by `tag`.
fn assign_positive(spec: &SyntheticSpec, n_trials: usize, tag: u64) -> Vec<bool> {
    let mut order: Vec<usize> = (0..n_trials).collect();
    order.shuffle(&mut stream_rng(spec.rng_seed, &[tag]));
    let mut flags = vec![false; n_trials];
    for &trial in order.iter().take(n_trials.div_ceil(2)) {
        flags[trial] = true;
    }
    flags
}

/// Generate one subject: a tensor of planted sinusoids plus the ratings the
/// label rule implies. Pure function of (spec, dimensions, fs).
pub fn generate_synthetic(
    spec: &SyntheticSpec,
    n_trials: usize,
    n_channels: usize,
    n_samples: usize,
    fs: f64,
) -> Result<(TrialTensor, Ratings)> {
    if n_trials == 0 || n_channels == 0 || n_samples == 0 {
        return Err(Error::Size(format!(
            "dimensions must all be >= 1, got {n_trials}x{n_channels}x{n_samples}"
        )));
    }
    if !fs.is_finite() || fs <= 0.0 {
        return Err(Error::Config(format!("sample rate must be > 0, got {fs}")));
    }
    spec.validate(fs)?;

    let valence_positive = assign_positive(spec, n_trials, TAG_ASSIGN_VALENCE);
    let arousal_positive = assign_positive(spec, n_trials, TAG_ASSIGN_AROUSAL);

    let noise = if spec.noise_sigma_uv > 0.0 {
        Some(Normal::new(0.0, spec.noise_sigma_uv).expect("sigma validated"))
    } else {
        None
    };

    let mut data = Vec::with_capacity(n_trials * n_channels * n_samples);
    let two_pi = 2.0 * std::f64::consts::PI;
    for trial in 0..n_trials {
        let amplitudes: Vec<f64> = spec
            .components
            .iter()
            .enumerate()
            .map(|(idx, c)| {
                let boosted = (idx == spec.valence_component && valence_positive[trial])
                    || (idx == spec.arousal_component && arousal_positive[trial]);
                if boosted {
                    c.amplitude_uv * spec.boost_factor
                } else {
                    c.amplitude_uv
                }
            })
            .collect();
        for channel in 0..n_channels {
            let mut rng = stream_rng(
                spec.rng_seed,
                &[TAG_SIGNAL, trial as u64, channel as u64],
            );
            let phases: Vec<f64> = spec
                .components
                .iter()
                .map(|_| rng.random_range(0.0..two_pi))
                .collect();
            for sample in 0..n_samples {
                let t = sample as f64 / fs;
                let mut value = 0.0;
                for ((component, &amplitude), &phase) in
                    spec.components.iter().zip(&amplitudes).zip(&phases)
                {
                    value += amplitude * (two_pi * component.center_hz * t + phase).sin();
                }
                if let Some(normal) = &noise {
                    value += rng.sample(normal);
                }
                data.push(value);
            }
        }
    }

    let mut rating_rng = stream_rng(spec.rng_seed, &[TAG_RATING]);
    let mut valence = Vec::with_capacity(n_trials);
    let mut arousal = Vec::with_capacity(n_trials);
    for trial in 0..n_trials {
        let jitter_v: f64 = rating_rng.random_range(-0.5..0.5);
        let jitter_a: f64 = rating_rng.random_range(-0.5..0.5);
        valence.push(if valence_positive[trial] { 7.5 } else { 2.5 } + jitter_v);
        arousal.push(if arousal_positive[trial] { 7.5 } else { 2.5 } + jitter_a);
    }

    let tensor = TrialTensor::new(0, n_trials, n_channels, n_samples, fs, data)?;
    let ratings = Ratings::new(valence, arousal)?;
    Ok((tensor, ratings))
}
