//! valaro-core: an EEG valence/arousal pipeline.
//!
//! The crate covers the full path from raw trial tensors to classifier
//! scores:
//!
//! ```text
//! .eegt tensor ─┬─ spectral      FFT, Hamming window, Welch PSD, band power
//!               ├─ features      sliding-window meta vectors, regional stats
//!               ├─ labeling      median-split valence/arousal, quadrants
//!               ├─ classic       scaler, KNN, linear SVM, k-fold CV metrics
//!               └─ neural        stacked LSTM + RMSprop, trained from scratch
//! ```
//!
//! `io` defines the portable EEGT container and the ratings CSV; `synth`
//! generates seeded test subjects with planted spectral structure so the
//! whole pipeline can be exercised without licensed recordings.

pub mod bands;
pub mod classic;
pub mod config;
pub mod error;
pub mod features;
pub mod io;
pub mod labeling;
pub mod layout;
pub mod neural;
pub mod rng;
pub mod spectral;
pub mod synth;
pub mod tensor;

pub use bands::{band_set, Band, BandSelector, BandSet};
pub use config::{LstmConfig, PipelineConfig, SplitMode};
pub use error::{Error, Result};
pub use features::{meta_vectors, region_stats, sliding_windows, FeatureMatrix, WindowPlan};
pub use io::{read_ratings, read_tensor, write_ratings, write_tensor};
pub use labeling::{make_labels, median_split, LabelSet, Quadrant};
pub use layout::{default_channel_layout, ChannelLayout, Region};
pub use spectral::{
    band_power, fft, hamming_window, ifft, welch_psd, Complex, PsdEstimate, Spectrum,
};
pub use synth::{generate_synthetic, BandComponent, SyntheticSpec};
pub use tensor::{Ratings, TrialTensor};
