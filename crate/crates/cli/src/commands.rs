//! The six pipeline commands. Each one writes its outputs plus a
//! `manifest.json` recording the seed, the config digest, and a hash of
//! every file produced, so reruns can be compared at a glance.

use crate::topomap::{electrode_positions, interpolate_grid, write_grid_csv, write_grid_svg};
use serde::Serialize;
use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use valaro_core::bands::{band_set, BandSelector};
use valaro_core::classic::{cross_validate, scaler_apply, scaler_fit, ClassifierSpec};
use valaro_core::config::PipelineConfig;
use valaro_core::error::{Error, Result};
use valaro_core::features::{meta_vectors, region_stats, FeatureMatrix};
use valaro_core::labeling::{make_labels, LabelSet};
use valaro_core::neural;
use valaro_core::rng::fnv1a64;
use valaro_core::synth::{generate_synthetic, SyntheticSpec};
use valaro_core::{io as eegt, TrialTensor};

/// Feature-extraction flavor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExtractMode {
    Meta,
    Regions,
}

impl FromStr for ExtractMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "meta" => Ok(ExtractMode::Meta),
            "regions" => Ok(ExtractMode::Regions),
            other => Err(Error::Config(format!(
                "unknown extract mode {other:?}; expected \"meta\" or \"regions\""
            ))),
        }
    }
}

/// Which label a classic training run targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Target {
    Valence,
    Arousal,
    Quadrant,
}

impl Target {
    pub fn as_str(&self) -> &'static str {
        match self {
            Target::Valence => "valence",
            Target::Arousal => "arousal",
            Target::Quadrant => "quadrant",
        }
    }
}

impl FromStr for Target {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "valence" => Ok(Target::Valence),
            "arousal" => Ok(Target::Arousal),
            "quadrant" => Ok(Target::Quadrant),
            other => Err(Error::Config(format!(
                "unknown target {other:?}; expected valence, arousal, or quadrant"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algo {
    Svm,
    Knn,
}

impl Algo {
    pub fn as_str(&self) -> &'static str {
        match self {
            Algo::Svm => "svm",
            Algo::Knn => "knn",
        }
    }
}

impl FromStr for Algo {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "svm" => Ok(Algo::Svm),
            "knn" => Ok(Algo::Knn),
            other => Err(Error::Config(format!(
                "unknown algorithm {other:?}; expected \"svm\" or \"knn\""
            ))),
        }
    }
}

#[derive(Serialize)]
struct Manifest {
    command: String,
    seed: u64,
    config_digest: String,
    outputs: BTreeMap<String, String>,
}

/// Hash produced files and write `manifest.json` beside them.
fn write_manifest(command: &str, config: &PipelineConfig, out_dir: &Path, files: &[PathBuf]) -> Result<PathBuf> {
    let mut outputs = BTreeMap::new();
    for file in files {
        let bytes = std::fs::read(file)?;
        let name = file
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| file.display().to_string());
        outputs.insert(name, format!("fnv1a64:{:016x}", fnv1a64(&bytes)));
    }
    let manifest = Manifest {
        command: command.to_string(),
        seed: config.rng_seed,
        config_digest: format!("{:016x}", config.digest()),
        outputs,
    };
    let path = out_dir.join("manifest.json");
    let file = File::create(&path)?;
    let mut out = BufWriter::new(file);
    let json = serde_json::to_string_pretty(&manifest)
        .map_err(|e| Error::Validation(format!("serialize manifest: {e}")))?;
    writeln!(out, "{json}")?;
    out.flush()?;
    Ok(path)
}

fn ensure_out_dir(out_dir: &Path) -> Result<()> {
    std::fs::create_dir_all(out_dir)?;
    Ok(())
}

/// Synthetic-generation knobs exposed on the command line.
#[derive(Debug, Clone, Copy)]
pub struct GenerateArgs {
    pub trials: usize,
    pub channels: usize,
    pub samples: usize,
    pub sample_rate_hz: f64,
    pub subject: u32,
    pub noise_sigma: Option<f64>,
    pub boost: Option<f64>,
}

impl Default for GenerateArgs {
    fn default() -> Self {
        GenerateArgs {
            trials: 40,
            channels: 32,
            samples: 8064,
            sample_rate_hz: 128.0,
            subject: 0,
            noise_sigma: None,
            boost: None,
        }
    }
}

/// Generate a synthetic subject: `subjectNN.eegt` + `ratings.csv`.
pub fn cmd_generate(
    config: &PipelineConfig,
    args: &GenerateArgs,
    out_dir: &Path,
) -> Result<Vec<PathBuf>> {
    ensure_out_dir(out_dir)?;
    let mut spec = SyntheticSpec {
        rng_seed: config.rng_seed,
        ..SyntheticSpec::default()
    };
    if let Some(sigma) = args.noise_sigma {
        spec.noise_sigma_uv = sigma;
    }
    if let Some(boost) = args.boost {
        spec.boost_factor = boost;
    }
    let (tensor, ratings) = generate_synthetic(
        &spec,
        args.trials,
        args.channels,
        args.samples,
        args.sample_rate_hz,
    )?;
    let tensor = TrialTensor::new(
        args.subject,
        tensor.n_trials(),
        tensor.n_channels(),
        tensor.n_samples(),
        tensor.sample_rate_hz(),
        tensor.data().to_vec(),
    )?;

    let tensor_path = out_dir.join(format!("subject{:02}.eegt", args.subject));
    let ratings_path = out_dir.join("ratings.csv");
    eegt::write_tensor(&tensor, &tensor_path)?;
    eegt::write_ratings(&ratings, &ratings_path)?;
    let mut files = vec![tensor_path, ratings_path];
    let manifest = write_manifest("generate", config, out_dir, &files)?;
    files.push(manifest);
    Ok(files)
}

/// Extract features and labels: `features_<mode>.csv` + `labels.csv`.
pub fn cmd_extract(
    config: &PipelineConfig,
    tensor_path: &Path,
    ratings_path: &Path,
    mode: ExtractMode,
    out_dir: &Path,
) -> Result<Vec<PathBuf>> {
    ensure_out_dir(out_dir)?;
    let tensor = eegt::read_tensor(tensor_path)?;
    let ratings = eegt::read_ratings(ratings_path)?;
    let labels = make_labels(&ratings)?;

    let (features, name) = match mode {
        ExtractMode::Meta => (meta_vectors(&tensor, &ratings, config)?, "features_meta.csv"),
        ExtractMode::Regions => (region_stats(&tensor, config)?, "features_regions.csv"),
    };
    let features_path = out_dir.join(name);
    let labels_path = out_dir.join("labels.csv");
    features.write_csv(&features_path)?;
    labels.write_csv(&labels_path)?;
    let mut files = vec![features_path, labels_path];
    let manifest = write_manifest("extract", config, out_dir, &files)?;
    files.push(manifest);
    Ok(files)
}

fn labels_for_rows(
    features: &FeatureMatrix,
    labels: &LabelSet,
    target: Target,
) -> Result<Vec<usize>> {
    features
        .provenance()
        .iter()
        .map(|prov| {
            let trial = prov.trial as usize;
            if trial >= labels.len() {
                return Err(Error::Validation(format!(
                    "features reference trial {trial} but labels cover {}",
                    labels.len()
                )));
            }
            Ok(match target {
                Target::Valence => usize::from(labels.valence_positive()[trial]),
                Target::Arousal => usize::from(labels.arousal_positive()[trial]),
                Target::Quadrant => labels.quadrant(trial).class_index(),
            })
        })
        .collect()
}

/// Scale features and run seeded k-fold cross-validation; writes a JSON
/// metrics report.
pub fn cmd_train_classic(
    config: &PipelineConfig,
    features_path: &Path,
    labels_path: &Path,
    target: Target,
    algo: Algo,
    out_dir: &Path,
) -> Result<Vec<PathBuf>> {
    ensure_out_dir(out_dir)?;
    let features = FeatureMatrix::read_csv(features_path)?;
    let labels = LabelSet::read_csv(labels_path)?;
    let y = labels_for_rows(&features, &labels, target)?;

    let scaler = scaler_fit(&features)?;
    let scaled = scaler_apply(&scaler, &features)?;
    let spec = match algo {
        Algo::Knn => ClassifierSpec::Knn { k: config.knn_k },
        Algo::Svm => ClassifierSpec::LinearSvm {
            c: config.svm_c,
            epochs: config.svm_epochs,
        },
    };
    let report = cross_validate(&scaled, &y, &spec, config.cv_folds, config.rng_seed)?;

    let report_path = out_dir.join(format!(
        "metrics_{}_{}.json",
        target.as_str(),
        algo.as_str()
    ));
    let file = File::create(&report_path)?;
    let mut out = BufWriter::new(file);
    let json = serde_json::to_string_pretty(&report)
        .map_err(|e| Error::Validation(format!("serialize metrics: {e}")))?;
    writeln!(out, "{json}")?;
    out.flush()?;

    let mut files = vec![report_path];
    let manifest = write_manifest("train-classic", config, out_dir, &files)?;
    files.push(manifest);
    Ok(files)
}

/// Train the recurrent model; writes `train_report.jsonl` and periodic
/// checkpoints. `resume` continues from an existing checkpoint.
pub fn cmd_train_lstm(
    config: &PipelineConfig,
    features_path: &Path,
    labels_path: &Path,
    resume: Option<&Path>,
    out_dir: &Path,
) -> Result<Vec<PathBuf>> {
    ensure_out_dir(out_dir)?;
    let features = FeatureMatrix::read_csv(features_path)?;
    let labels = LabelSet::read_csv(labels_path)?;

    let outcome = match resume {
        Some(checkpoint) => {
            neural::train_resumed(checkpoint, &features, &labels, config, Some(out_dir))?
        }
        None => neural::train(&features, &labels, config, Some(out_dir))?,
    };

    let report_path = out_dir.join("train_report.jsonl");
    neural::write_report_jsonl(&outcome.report, &report_path)?;

    let mut files = vec![report_path];
    files.extend(outcome.report.checkpoints.iter().map(PathBuf::from));
    let manifest = write_manifest("train-lstm", config, out_dir, &files)?;
    files.push(manifest);
    Ok(files)
}

/// Band power per electrode over a time span, interpolated to a 64x64 scalp
/// grid; writes CSV and SVG.
pub fn cmd_topomap(
    config: &PipelineConfig,
    tensor_path: &Path,
    trial: usize,
    t_start: f64,
    t_end: f64,
    band_name: &str,
    out_dir: &Path,
) -> Result<Vec<PathBuf>> {
    ensure_out_dir(out_dir)?;
    let tensor = eegt::read_tensor(tensor_path)?;
    if trial >= tensor.n_trials() {
        return Err(Error::Validation(format!(
            "trial {trial} outside tensor with {} trials",
            tensor.n_trials()
        )));
    }
    if tensor.n_channels() != 32 {
        return Err(Error::Config(format!(
            "topographic maps need the 32-channel montage, tensor has {}",
            tensor.n_channels()
        )));
    }
    let fs = tensor.sample_rate_hz();
    let duration = tensor.n_samples() as f64 / fs;
    if !(0.0 <= t_start && t_start < t_end && t_end <= duration) {
        return Err(Error::Validation(format!(
            "time range [{t_start}, {t_end}) outside trial of {duration:.3} s"
        )));
    }
    let bands = band_set(BandSelector::TableOne);
    let band = bands
        .bands()
        .iter()
        .find(|b| b.name == band_name)
        .ok_or_else(|| {
            Error::Config(format!(
                "unknown band {band_name:?}; expected theta, alpha, beta, or gamma"
            ))
        })?;

    // Shorter spans than one FFT window use the enclosing 256-sample window
    // centered on the span.
    let m = config.welch_segment_len;
    let start_sample = (t_start * fs).round() as usize;
    let end_sample = ((t_end * fs).round() as usize).min(tensor.n_samples());
    let (lo, hi) = if end_sample.saturating_sub(start_sample) >= m {
        (start_sample, end_sample)
    } else {
        let center = (start_sample + end_sample) / 2;
        let lo = center.saturating_sub(m / 2).min(tensor.n_samples() - m);
        (lo, lo + m)
    };

    let high = band.high_hz.min(fs / 2.0);
    let mut electrode_values = Vec::with_capacity(32);
    for channel in 0..32 {
        let samples = &tensor.channel(trial, channel)[lo..hi];
        let psd = valaro_core::spectral::welch_psd(samples, fs, m, config.welch_overlap)?;
        electrode_values.push(valaro_core::spectral::band_power(&psd, band.low_hz, high)?);
    }

    let grid = interpolate_grid(
        &band.name,
        t_start,
        t_end,
        &electrode_positions(),
        &electrode_values,
        64,
    )?;
    let csv_path = out_dir.join(format!("topomap_{}.csv", band.name));
    let svg_path = out_dir.join(format!("topomap_{}.svg", band.name));
    write_grid_csv(&grid, &csv_path)?;
    write_grid_svg(&grid, &svg_path)?;
    let mut files = vec![csv_path, svg_path];
    let manifest = write_manifest("topomap", config, out_dir, &files)?;
    files.push(manifest);
    Ok(files)
}

/// Welch PSD per channel over one trial; CSV with a frequency column and one
/// column per channel.
pub fn cmd_psd(
    config: &PipelineConfig,
    tensor_path: &Path,
    trial: usize,
    channels: Option<&[usize]>,
    f_min: f64,
    f_max: Option<f64>,
    out_dir: &Path,
) -> Result<Vec<PathBuf>> {
    ensure_out_dir(out_dir)?;
    let tensor = eegt::read_tensor(tensor_path)?;
    if trial >= tensor.n_trials() {
        return Err(Error::Validation(format!(
            "trial {trial} outside tensor with {} trials",
            tensor.n_trials()
        )));
    }
    let selected: Vec<usize> = match channels {
        Some(list) => {
            for &c in list {
                if c >= tensor.n_channels() {
                    return Err(Error::Config(format!(
                        "channel {c} outside tensor with {} channels",
                        tensor.n_channels()
                    )));
                }
            }
            list.to_vec()
        }
        None => (0..tensor.n_channels()).collect(),
    };
    let fs = tensor.sample_rate_hz();
    let f_max = f_max.unwrap_or(fs / 2.0);
    if !(0.0 <= f_min && f_min < f_max && f_max <= fs / 2.0) {
        return Err(Error::Config(format!(
            "frequency range [{f_min}, {f_max}] must sit inside [0, {}]",
            fs / 2.0
        )));
    }

    let mut psds = Vec::with_capacity(selected.len());
    for &channel in &selected {
        psds.push(valaro_core::spectral::welch_psd(
            tensor.channel(trial, channel),
            fs,
            config.welch_segment_len,
            config.welch_overlap,
        )?);
    }

    let csv_path = out_dir.join(format!("psd_trial{trial:02}.csv"));
    let file = File::create(&csv_path)?;
    let mut out = BufWriter::new(file);
    write!(out, "freq_hz")?;
    for &channel in &selected {
        let name = tensor
            .layout()
            .and_then(|l| l.name(channel))
            .map(str::to_string)
            .unwrap_or_else(|| format!("ch{channel:02}"));
        write!(out, ",{name}")?;
    }
    writeln!(out)?;
    let freqs = &psds[0].freqs_hz;
    for (bin, &freq) in freqs.iter().enumerate() {
        if freq < f_min || freq > f_max {
            continue;
        }
        write!(out, "{freq}")?;
        for psd in &psds {
            write!(out, ",{}", psd.power[bin])?;
        }
        writeln!(out)?;
    }
    out.flush()?;

    let mut files = vec![csv_path];
    let manifest = write_manifest("psd", config, out_dir, &files)?;
    files.push(manifest);
    Ok(files)
}
