//! Feature construction: sliding-window band-power vectors and per-trial
//! regional statistics.

use crate::bands::{band_set, BandSelector, BandSet};
use crate::config::PipelineConfig;
use crate::error::{Error, Result};
use crate::layout::Region;
use crate::spectral::{band_power, hamming_window, periodogram, segment_starts, welch_psd_with_window};
use crate::tensor::{Ratings, TrialTensor};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

/// Where a feature row came from. `window` is -1 for per-trial rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RowProvenance {
    pub subject: u32,
    pub trial: u32,
    pub window: i64,
}

/// Dense row-major matrix of feature values with named columns and per-row
/// provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    values: Vec<f64>,
    n_rows: usize,
    n_cols: usize,
    col_names: Vec<String>,
    row_prov: Vec<RowProvenance>,
}

impl FeatureMatrix {
    pub fn new(col_names: Vec<String>) -> Self {
        FeatureMatrix {
            values: Vec::new(),
            n_rows: 0,
            n_cols: col_names.len(),
            col_names,
            row_prov: Vec::new(),
        }
    }

    /// Build from explicit rows; provenance defaults to row order.
    pub fn from_rows(col_names: Vec<String>, rows: Vec<Vec<f64>>) -> Result<Self> {
        let mut matrix = FeatureMatrix::new(col_names);
        for (i, row) in rows.into_iter().enumerate() {
            matrix.push_row(
                RowProvenance {
                    subject: 0,
                    trial: i as u32,
                    window: -1,
                },
                &row,
            )?;
        }
        Ok(matrix)
    }

    pub fn push_row(&mut self, prov: RowProvenance, row: &[f64]) -> Result<()> {
        if row.len() != self.n_cols {
            return Err(Error::Size(format!(
                "row of {} values pushed into a {}-column matrix",
                row.len(),
                self.n_cols
            )));
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::Validation("feature row contains NaN or Inf".into()));
        }
        self.values.extend_from_slice(row);
        self.row_prov.push(prov);
        self.n_rows += 1;
        Ok(())
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn col_names(&self) -> &[String] {
        &self.col_names
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n_cols..(i + 1) * self.n_cols]
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.n_cols + col]
    }

    pub fn provenance(&self) -> &[RowProvenance] {
        &self.row_prov
    }

    /// Column-wise means and population standard deviations.
    pub fn column_stats(&self) -> (Vec<f64>, Vec<f64>) {
        let mut means = vec![0.0; self.n_cols];
        for r in 0..self.n_rows {
            for (m, v) in means.iter_mut().zip(self.row(r)) {
                *m += v;
            }
        }
        for m in &mut means {
            *m /= self.n_rows as f64;
        }
        let mut vars = vec![0.0; self.n_cols];
        for r in 0..self.n_rows {
            for ((var, mean), v) in vars.iter_mut().zip(&means).zip(self.row(r)) {
                let d = v - mean;
                *var += d * d;
            }
        }
        let stds = vars
            .into_iter()
            .map(|v| (v / self.n_rows as f64).sqrt())
            .collect();
        (means, stds)
    }

    /// CSV with `subject,trial,window` provenance columns before the data.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let file = File::create(path)?;
        let mut out = BufWriter::new(file);
        write!(out, "subject,trial,window")?;
        for name in &self.col_names {
            write!(out, ",{name}")?;
        }
        writeln!(out)?;
        for (prov, r) in self.row_prov.iter().zip(0..self.n_rows) {
            write!(out, "{},{},{}", prov.subject, prov.trial, prov.window)?;
            for v in self.row(r) {
                write!(out, ",{v}")?;
            }
            writeln!(out)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut lines = text.lines().enumerate();
        let header = match lines.next() {
            Some((_, h)) => h,
            None => return Err(Error::Format("feature CSV is empty".into())),
        };
        let cols: Vec<&str> = header.split(',').collect();
        if cols.len() < 4 || cols[0] != "subject" || cols[1] != "trial" || cols[2] != "window" {
            return Err(Error::Format(
                "feature CSV must start with subject,trial,window columns".into(),
            ));
        }
        let col_names: Vec<String> = cols[3..].iter().map(|s| s.to_string()).collect();
        let mut matrix = FeatureMatrix::new(col_names);
        let mut row = Vec::new();
        for (lineno, raw) in lines {
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            let mut fields = line.split(',');
            let parse_err = |what: &str| {
                Error::Validation(format!("row {}: bad {what}", lineno + 1))
            };
            let subject: u32 = fields
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| parse_err("subject"))?;
            let trial: u32 = fields
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| parse_err("trial"))?;
            let window: i64 = fields
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| parse_err("window"))?;
            row.clear();
            for field in fields {
                row.push(field.parse::<f64>().map_err(|_| parse_err("value"))?);
            }
            matrix.push_row(
                RowProvenance {
                    subject,
                    trial,
                    window,
                },
                &row,
            )?;
        }
        Ok(matrix)
    }
}

/// Geometry of a sliding-window pass over one trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WindowPlan {
    pub window_len: usize,
    pub step: usize,
    pub n_windows: usize,
}

impl WindowPlan {
    /// First sample of window `w`.
    pub fn start(&self, w: usize) -> usize {
        w * self.step
    }
}

/// Plan `floor((n_samples - window_len) / step) + 1` windows.
pub fn sliding_windows(n_samples: usize, window_len: usize, step: usize) -> Result<WindowPlan> {
    if window_len < 1 || step < 1 {
        return Err(Error::Config(
            "window_len and step must both be >= 1".into(),
        ));
    }
    if n_samples < window_len {
        return Err(Error::Size(format!(
            "trial of {n_samples} samples is shorter than one window of {window_len}"
        )));
    }
    Ok(WindowPlan {
        window_len,
        step,
        n_windows: (n_samples - window_len) / step + 1,
    })
}

fn format_hz(hz: f64) -> String {
    if hz.fract() == 0.0 {
        format!("{}", hz as i64)
    } else {
        format!("{hz}")
    }
}

fn channel_column_name(tensor: &TrialTensor, channel: usize) -> String {
    tensor
        .layout()
        .and_then(|l| l.name(channel))
        .map(str::to_string)
        .unwrap_or_else(|| format!("ch{channel:02}"))
}

/// Sliding-window band-power vectors: one row per (trial, window), one
/// column per (subset channel, band). The window itself is the single Welch
/// segment, so each value is that window's band power.
pub fn meta_vectors(
    tensor: &TrialTensor,
    ratings: &Ratings,
    config: &PipelineConfig,
) -> Result<FeatureMatrix> {
    if ratings.len() != tensor.n_trials() {
        return Err(Error::Size(format!(
            "{} ratings for {} trials",
            ratings.len(),
            tensor.n_trials()
        )));
    }
    for &channel in &config.channel_subset {
        if channel >= tensor.n_channels() {
            return Err(Error::Config(format!(
                "channel subset index {channel} outside tensor with {} channels",
                tensor.n_channels()
            )));
        }
    }
    let plan = sliding_windows(tensor.n_samples(), config.window_len, config.window_step)?;
    let bands = band_set(config.band_selector);
    let window = hamming_window(config.window_len)?;

    let mut col_names = Vec::with_capacity(config.channel_subset.len() * bands.len());
    for &channel in &config.channel_subset {
        let channel_name = channel_column_name(tensor, channel);
        for band in bands.bands() {
            col_names.push(format!(
                "{channel_name}_{}_{}",
                format_hz(band.low_hz),
                format_hz(band.high_hz)
            ));
        }
    }

    let fs = tensor.sample_rate_hz();
    let mut matrix = FeatureMatrix::new(col_names);
    let mut row = Vec::with_capacity(config.channel_subset.len() * bands.len());
    for trial in 0..tensor.n_trials() {
        for w in 0..plan.n_windows {
            let start = plan.start(w);
            row.clear();
            for &channel in &config.channel_subset {
                let samples = &tensor.channel(trial, channel)[start..start + plan.window_len];
                let psd =
                    welch_psd_with_window(samples, fs, plan.window_len, config.welch_overlap, &window)?;
                for band in bands.bands() {
                    row.push(band_power(&psd, band.low_hz, band.high_hz)?);
                }
            }
            matrix.push_row(
                RowProvenance {
                    subject: tensor.subject_id(),
                    trial: trial as u32,
                    window: w as i64,
                },
                &row,
            )?;
        }
    }
    Ok(matrix)
}

/// Inclusive-method quantile with linear interpolation between order
/// statistics. `sorted` must be ascending and non-empty.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
    }
}

const STAT_NAMES: [&str; 7] = ["mean", "std", "min", "q1", "median", "q3", "max"];

/// The seven summary statistics, in column order.
fn seven_stats(values: &mut [f64]) -> [f64; 7] {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    values.sort_by(|a, b| a.partial_cmp(b).expect("band powers are finite"));
    [
        mean,
        var.sqrt(),
        values[0],
        quantile(values, 0.25),
        quantile(values, 0.5),
        quantile(values, 0.75),
        *values.last().expect("non-empty"),
    ]
}

/// Per-trial regional statistics: for every (region, named band) pair, the
/// seven statistics over the pool of per-segment, per-channel band powers
/// within that region. Columns are region-major, then band, then statistic.
pub fn region_stats(tensor: &TrialTensor, config: &PipelineConfig) -> Result<FeatureMatrix> {
    let layout = tensor.layout().ok_or_else(|| {
        Error::Config(format!(
            "regional statistics need the 32-channel layout; tensor has {} channels",
            tensor.n_channels()
        ))
    })?;
    let bands: BandSet = band_set(BandSelector::TableOne);
    let region_channels: Vec<(Region, Vec<usize>)> = Region::ALL
        .iter()
        .map(|&region| (region, layout.channels_in(region)))
        .collect();
    for (region, channels) in &region_channels {
        if channels.is_empty() {
            return Err(Error::Config(format!("region {region} has no channels")));
        }
    }

    let mut col_names = Vec::with_capacity(region_channels.len() * bands.len() * 7);
    for (region, _) in &region_channels {
        for band in bands.bands() {
            for stat in STAT_NAMES {
                col_names.push(format!("{region}_{}_{stat}", band.name));
            }
        }
    }

    let fs = tensor.sample_rate_hz();
    let m = config.welch_segment_len;
    let window = hamming_window(m)?;
    let starts = segment_starts(tensor.n_samples(), m, config.welch_overlap)?;

    let mut matrix = FeatureMatrix::new(col_names);
    let mut row = Vec::with_capacity(region_channels.len() * bands.len() * 7);
    for trial in 0..tensor.n_trials() {
        // Per-segment band powers for every channel of this trial.
        let mut channel_band_powers: Vec<Vec<[f64; 4]>> =
            Vec::with_capacity(tensor.n_channels());
        for channel in 0..tensor.n_channels() {
            let samples = tensor.channel(trial, channel);
            let mut per_segment = Vec::with_capacity(starts.len());
            for &start in &starts {
                let power = periodogram(&samples[start..start + m], &window, fs)?;
                let psd = crate::spectral::PsdEstimate {
                    freqs_hz: (0..=m / 2).map(|k| k as f64 * fs / m as f64).collect(),
                    power,
                    segment_len: m,
                    n_segments: 1,
                    window_energy: crate::spectral::window_energy(&window),
                    fs,
                };
                let mut powers = [0.0; 4];
                for (slot, band) in powers.iter_mut().zip(bands.bands()) {
                    *slot = band_power(&psd, band.low_hz, band.high_hz.min(fs / 2.0))?;
                }
                per_segment.push(powers);
            }
            channel_band_powers.push(per_segment);
        }

        row.clear();
        for (_, channels) in &region_channels {
            for band_idx in 0..bands.len() {
                let mut pool: Vec<f64> = Vec::with_capacity(channels.len() * starts.len());
                for &channel in channels {
                    for segment in &channel_band_powers[channel] {
                        pool.push(segment[band_idx]);
                    }
                }
                row.extend_from_slice(&seven_stats(&mut pool));
            }
        }
        matrix.push_row(
            RowProvenance {
                subject: tensor.subject_id(),
                trial: trial as u32,
                window: -1,
            },
            &row,
        )?;
    }
    Ok(matrix)
}
