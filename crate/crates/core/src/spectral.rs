//! Spectral estimation: radix-2 FFT, Hamming window, Welch periodogram
//! averaging, and band-power integration.
//!
//! The Welch estimate divides the signal into overlapping segments of length
//! `M`, tapers each with `w(n) = 0.54 - 0.46 cos(2 n pi / M)`, and averages
//! the one-sided periodograms `P(f) = |FFT(x_i w)|^2 / (M U fs)`, where
//! `M U = sum w(n)^2` is the window energy. With that normalization the
//! integral `sum P(f) df` recovers the signal's mean power, which is what
//! the band-power tests pin down.

use crate::error::{Error, Result};
use std::ops::{Add, Mul, Sub};

/// Minimal complex value; enough for FFT work without an external crate.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Complex {
    pub re: f64,
    pub im: f64,
}

impl Complex {
    pub const ZERO: Complex = Complex { re: 0.0, im: 0.0 };

    pub fn new(re: f64, im: f64) -> Self {
        Complex { re, im }
    }

    pub fn conj(self) -> Self {
        Complex::new(self.re, -self.im)
    }

    pub fn norm_sq(self) -> f64 {
        self.re * self.re + self.im * self.im
    }

    pub fn scale(self, s: f64) -> Self {
        Complex::new(self.re * s, self.im * s)
    }
}

impl Add for Complex {
    type Output = Complex;
    fn add(self, rhs: Complex) -> Complex {
        Complex::new(self.re + rhs.re, self.im + rhs.im)
    }
}

impl Sub for Complex {
    type Output = Complex;
    fn sub(self, rhs: Complex) -> Complex {
        Complex::new(self.re - rhs.re, self.im - rhs.im)
    }
}

impl Mul for Complex {
    type Output = Complex;
    fn mul(self, rhs: Complex) -> Complex {
        Complex::new(
            self.re * rhs.re - self.im * rhs.im,
            self.re * rhs.im + self.im * rhs.re,
        )
    }
}

/// Full-length DFT of a real signal. Bin `k` sits at frequency `k * fs / N`.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub bins: Vec<Complex>,
    pub fs: f64,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.bins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bins.is_empty()
    }

    pub fn bin_freq(&self, k: usize) -> f64 {
        k as f64 * self.fs / self.bins.len() as f64
    }
}

fn check_power_of_two(n: usize) -> Result<()> {
    if n < 2 || !n.is_power_of_two() {
        return Err(Error::Size(format!(
            "FFT length must be a power of two >= 2, got {n}"
        )));
    }
    Ok(())
}

/// In-place radix-2 decimation-in-time transform.
/// `invert` computes the unscaled inverse (caller divides by N).
fn fft_in_place(buf: &mut [Complex], invert: bool) {
    let n = buf.len();
    debug_assert!(n.is_power_of_two());

    // Bit-reversal permutation.
    let mut j = 0usize;
    for i in 1..n {
        let mut bit = n >> 1;
        while j & bit != 0 {
            j ^= bit;
            bit >>= 1;
        }
        j |= bit;
        if i < j {
            buf.swap(i, j);
        }
    }

    // Twiddle table w_k = exp(-+ 2 pi i k / n), computed directly per index
    // so rounding does not accumulate across stages.
    let sign = if invert { 1.0 } else { -1.0 };
    let half = n / 2;
    let mut twiddle = Vec::with_capacity(half);
    for k in 0..half {
        let angle = sign * 2.0 * std::f64::consts::PI * k as f64 / n as f64;
        let (s, c) = angle.sin_cos();
        twiddle.push(Complex::new(c, s));
    }

    let mut len = 2;
    while len <= n {
        let stride = n / len;
        let mut start = 0;
        while start < n {
            for k in 0..len / 2 {
                let w = twiddle[k * stride];
                let a = buf[start + k];
                let b = buf[start + k + len / 2] * w;
                buf[start + k] = a + b;
                buf[start + k + len / 2] = a - b;
            }
            start += len;
        }
        len <<= 1;
    }
}

/// Forward DFT of a real signal: `X[k] = sum_n x[n] e^(-j 2 pi k n / N)`.
pub fn fft(signal: &[f64], fs: f64) -> Result<Spectrum> {
    check_power_of_two(signal.len())?;
    let mut bins: Vec<Complex> = signal.iter().map(|&x| Complex::new(x, 0.0)).collect();
    fft_in_place(&mut bins, false);
    Ok(Spectrum { bins, fs })
}

/// Forward DFT of complex input, in place.
pub fn fft_complex(buf: &mut [Complex]) -> Result<()> {
    check_power_of_two(buf.len())?;
    fft_in_place(buf, false);
    Ok(())
}

/// Inverse DFT. For spectra of real signals the imaginary parts vanish;
/// only the real parts are returned.
pub fn ifft(spectrum: &Spectrum) -> Result<Vec<f64>> {
    check_power_of_two(spectrum.bins.len())?;
    let mut buf = spectrum.bins.clone();
    fft_in_place(&mut buf, true);
    let n = buf.len() as f64;
    Ok(buf.into_iter().map(|c| c.re / n).collect())
}

/// Hamming taper `w(n) = 0.54 - 0.46 cos(2 n pi / M)` for `n = 0..M-1`.
///
/// The denominator is `M`, not the more common `M - 1`; the difference is a
/// fraction of one sample of phase and is below every tolerance used here.
pub fn hamming_window(m: usize) -> Result<Vec<f64>> {
    if m < 2 {
        return Err(Error::Size(format!("window length must be >= 2, got {m}")));
    }
    Ok((0..m)
        .map(|n| 0.54 - 0.46 * (2.0 * n as f64 * std::f64::consts::PI / m as f64).cos())
        .collect())
}

/// Window energy `M U = sum w(n)^2`.
pub fn window_energy(window: &[f64]) -> f64 {
    window.iter().map(|w| w * w).sum()
}

/// One-sided power spectral density estimate in power per Hz.
#[derive(Debug, Clone)]
pub struct PsdEstimate {
    /// Ascending bin frequencies, 0 through fs/2 inclusive.
    pub freqs_hz: Vec<f64>,
    /// Power density per bin; same length as `freqs_hz`.
    pub power: Vec<f64>,
    /// Segment length M.
    pub segment_len: usize,
    /// Number of averaged segments L.
    pub n_segments: usize,
    /// Window energy M U.
    pub window_energy: f64,
    pub fs: f64,
}

impl PsdEstimate {
    /// Frequency resolution fs / M.
    pub fn bin_width(&self) -> f64 {
        self.fs / self.segment_len as f64
    }
}

/// Start offsets of the Welch segments: `i * step` with
/// `step = round(M (1 - overlap))`, clamped to at least one sample.
pub fn segment_starts(signal_len: usize, segment_len: usize, overlap: f64) -> Result<Vec<usize>> {
    if !(0.0..1.0).contains(&overlap) {
        return Err(Error::Config(format!(
            "overlap must be in [0, 1), got {overlap}"
        )));
    }
    if signal_len < segment_len {
        return Err(Error::Size(format!(
            "signal of {signal_len} samples is shorter than one segment of {segment_len}"
        )));
    }
    let step = ((segment_len as f64 * (1.0 - overlap)).round() as usize).max(1);
    Ok((0..=(signal_len - segment_len) / step)
        .map(|i| i * step)
        .collect())
}

/// One-sided periodogram of a single windowed segment, density-normalized by
/// `1 / (M U fs)`. Interior bins are doubled to fold in negative frequencies.
pub fn periodogram(segment: &[f64], window: &[f64], fs: f64) -> Result<Vec<f64>> {
    let m = segment.len();
    if window.len() != m {
        return Err(Error::Size(format!(
            "segment of {m} samples but window of {}",
            window.len()
        )));
    }
    check_power_of_two(m)?;
    let mut buf: Vec<Complex> = segment
        .iter()
        .zip(window)
        .map(|(&x, &w)| Complex::new(x * w, 0.0))
        .collect();
    fft_in_place(&mut buf, false);

    let mu = window_energy(window);
    let norm = 1.0 / (mu * fs);
    let half = m / 2;
    let mut power = Vec::with_capacity(half + 1);
    for (k, bin) in buf.iter().take(half + 1).enumerate() {
        let doubling = if k == 0 || k == half { 1.0 } else { 2.0 };
        power.push(bin.norm_sq() * norm * doubling);
    }
    Ok(power)
}

/// Welch PSD with a caller-supplied window (test hook; the public estimator
/// below fixes the Hamming taper).
pub fn welch_psd_with_window(
    signal: &[f64],
    fs: f64,
    segment_len: usize,
    overlap: f64,
    window: &[f64],
) -> Result<PsdEstimate> {
    if !fs.is_finite() || fs <= 0.0 {
        return Err(Error::Config(format!("sample rate must be > 0, got {fs}")));
    }
    let starts = segment_starts(signal.len(), segment_len, overlap)?;
    let n_segments = starts.len();
    let half = segment_len / 2;
    let mut power = vec![0.0; half + 1];
    for &start in &starts {
        let p = periodogram(&signal[start..start + segment_len], window, fs)?;
        for (acc, v) in power.iter_mut().zip(&p) {
            *acc += v;
        }
    }
    let scale = 1.0 / n_segments as f64;
    for v in &mut power {
        *v *= scale;
    }
    let freqs_hz = (0..=half)
        .map(|k| k as f64 * fs / segment_len as f64)
        .collect();
    Ok(PsdEstimate {
        freqs_hz,
        power,
        segment_len,
        n_segments,
        window_energy: window_energy(window),
        fs,
    })
}

/// Welch PSD: Hamming-tapered overlapping segments, averaged periodograms.
pub fn welch_psd(signal: &[f64], fs: f64, segment_len: usize, overlap: f64) -> Result<PsdEstimate> {
    let window = hamming_window(segment_len)?;
    welch_psd_with_window(signal, fs, segment_len, overlap, &window)
}

/// Integrated power over `[low, high)` in the PSD's units times Hz.
/// An empty bin range yields `(0.0, true)`.
pub fn band_power_flagged(psd: &PsdEstimate, low_hz: f64, high_hz: f64) -> Result<(f64, bool)> {
    if !(0.0 <= low_hz && low_hz < high_hz && high_hz <= psd.fs / 2.0) {
        return Err(Error::Config(format!(
            "band [{low_hz}, {high_hz}) must satisfy 0 <= low < high <= fs/2 = {}",
            psd.fs / 2.0
        )));
    }
    let df = psd.bin_width();
    let mut total = 0.0;
    let mut bins = 0usize;
    for (f, p) in psd.freqs_hz.iter().zip(&psd.power) {
        if *f >= low_hz && *f < high_hz {
            total += p * df;
            bins += 1;
        }
    }
    Ok((total, bins == 0))
}

/// Integrated power over `[low, high)`; see [`band_power_flagged`] for the
/// empty-range diagnostic.
pub fn band_power(psd: &PsdEstimate, low_hz: f64, high_hz: f64) -> Result<f64> {
    band_power_flagged(psd, low_hz, high_hz).map(|(p, _)| p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    /// Textbook O(N^2) DFT; the oracle the FFT is checked against.
    pub fn naive_dft(signal: &[f64]) -> Vec<Complex> {
        let n = signal.len();
        (0..n)
            .map(|k| {
                let mut acc = Complex::ZERO;
                for (idx, &x) in signal.iter().enumerate() {
                    let angle = -2.0 * std::f64::consts::PI * k as f64 * idx as f64 / n as f64;
                    let (s, c) = angle.sin_cos();
                    acc = acc + Complex::new(x * c, x * s);
                }
                acc
            })
            .collect()
    }

    fn random_signal(rng: &mut impl Rng, len: usize) -> Vec<f64> {
        (0..len).map(|_| rng.random_range(-1.0..1.0)).collect()
    }

    #[test]
    fn impulse_has_flat_spectrum() {
        let spec = fft(&[1.0, 0.0, 0.0, 0.0], 4.0).unwrap();
        for bin in &spec.bins {
            assert!((bin.re - 1.0).abs() < 1e-12 && bin.im.abs() < 1e-12);
        }
    }

    #[test]
    fn dc_signal_concentrates_in_bin_zero() {
        let spec = fft(&[1.0, 1.0, 1.0, 1.0], 4.0).unwrap();
        assert!((spec.bins[0].re - 4.0).abs() < 1e-12);
        for bin in &spec.bins[1..] {
            assert!(bin.norm_sq() < 1e-24);
        }
    }

    #[test]
    fn fft_matches_naive_dft() {
        let mut rng = crate::rng::stream_rng(11, &[1]);
        let signal = random_signal(&mut rng, 64);
        let spec = fft(&signal, 64.0).unwrap();
        let oracle = naive_dft(&signal);
        for (a, b) in spec.bins.iter().zip(&oracle) {
            assert!((a.re - b.re).abs() < 1e-10 && (a.im - b.im).abs() < 1e-10);
        }
    }

    #[test]
    fn non_power_of_two_rejected() {
        assert!(matches!(fft(&[0.0; 12], 1.0), Err(Error::Size(_))));
        assert!(matches!(fft(&[0.0; 1], 1.0), Err(Error::Size(_))));
    }

    #[test]
    fn ifft_inverts_fft() {
        let mut rng = crate::rng::stream_rng(12, &[2]);
        let signal = random_signal(&mut rng, 256);
        let spec = fft(&signal, 128.0).unwrap();
        let back = ifft(&spec).unwrap();
        for (a, b) in signal.iter().zip(&back) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn parseval_holds() {
        let mut rng = crate::rng::stream_rng(13, &[3]);
        for &len in &[8usize, 64, 512] {
            let signal = random_signal(&mut rng, len);
            let spec = fft(&signal, 1.0).unwrap();
            let time_energy: f64 = signal.iter().map(|x| x * x).sum();
            let freq_energy: f64 =
                spec.bins.iter().map(|b| b.norm_sq()).sum::<f64>() / len as f64;
            assert!((time_energy - freq_energy).abs() <= 1e-9 * time_energy.max(1.0));
        }
    }

    #[test]
    fn fft_is_linear() {
        let mut rng = crate::rng::stream_rng(14, &[4]);
        let x = random_signal(&mut rng, 128);
        let y = random_signal(&mut rng, 128);
        let (a, b) = (1.75, -0.3);
        let combined: Vec<f64> = x.iter().zip(&y).map(|(xi, yi)| a * xi + b * yi).collect();
        let fx = fft(&x, 1.0).unwrap();
        let fy = fft(&y, 1.0).unwrap();
        let fc = fft(&combined, 1.0).unwrap();
        for ((cx, cy), cc) in fx.bins.iter().zip(&fy.bins).zip(&fc.bins) {
            let expect = cx.scale(a) + cy.scale(b);
            assert!((expect.re - cc.re).abs() < 1e-10 && (expect.im - cc.im).abs() < 1e-10);
        }
    }

    #[test]
    fn hamming_endpoints_and_midpoint() {
        let w = hamming_window(256).unwrap();
        assert!((w[0] - 0.08).abs() < 1e-12);
        assert!((w[128] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn hamming_too_short_rejected() {
        assert!(matches!(hamming_window(1), Err(Error::Size(_))));
    }

    #[test]
    fn window_energy_matches_direct_sum() {
        let w = hamming_window(200).unwrap();
        let direct: f64 = (0..200)
            .map(|n| {
                let v = 0.54 - 0.46 * (2.0 * n as f64 * std::f64::consts::PI / 200.0).cos();
                v * v
            })
            .sum();
        assert!((window_energy(&w) - direct).abs() < 1e-12);
    }

    #[test]
    fn zero_signal_has_zero_psd() {
        let psd = welch_psd(&vec![0.0; 1024], 128.0, 256, 0.5).unwrap();
        assert!(psd.power.iter().all(|&p| p == 0.0));
        assert_eq!(psd.power.len(), 129);
    }

    #[test]
    fn sinusoid_power_integrates_to_half_amplitude_squared() {
        // A = 2 at 8 Hz lands exactly on bin 16 for fs = 128, M = 256.
        let fs = 128.0;
        let amp = 2.0;
        let signal: Vec<f64> = (0..1024)
            .map(|n| amp * (2.0 * std::f64::consts::PI * 8.0 * n as f64 / fs).sin())
            .collect();
        let psd = welch_psd(&signal, fs, 256, 0.5).unwrap();
        let total: f64 = psd.power.iter().map(|p| p * psd.bin_width()).sum();
        let expect = amp * amp / 2.0;
        assert!(
            (total - expect).abs() < 0.05 * expect,
            "integrated power {total}, expected {expect}"
        );
    }

    #[test]
    fn white_noise_psd_is_flat() {
        let mut rng = crate::rng::stream_rng(900, &[5]);
        let normal = rand_distr::Normal::new(0.0, 1.0).unwrap();
        let signal: Vec<f64> = (0..8064).map(|_| rng.sample(normal)).collect();
        let psd = welch_psd(&signal, 128.0, 256, 0.5).unwrap();
        assert!(psd.n_segments >= 50);
        let in_range: Vec<f64> = psd
            .freqs_hz
            .iter()
            .zip(&psd.power)
            .filter(|(f, _)| **f >= 2.0 && **f <= 60.0)
            .map(|(_, p)| *p)
            .collect();
        let max = in_range.iter().cloned().fold(f64::MIN, f64::max);
        let min = in_range.iter().cloned().fold(f64::MAX, f64::min);
        assert!(max / min < 3.0, "max/min ratio {}", max / min);
    }

    #[test]
    fn short_signal_rejected() {
        assert!(matches!(
            welch_psd(&[0.0; 100], 128.0, 256, 0.5),
            Err(Error::Size(_))
        ));
    }

    #[test]
    fn psd_scales_quadratically_with_amplitude() {
        let mut rng = crate::rng::stream_rng(15, &[6]);
        let signal = random_signal(&mut rng, 1024);
        let doubled: Vec<f64> = signal.iter().map(|x| 2.0 * x).collect();
        let a = welch_psd(&signal, 128.0, 256, 0.5).unwrap();
        let b = welch_psd(&doubled, 128.0, 256, 0.5).unwrap();
        for (pa, pb) in a.power.iter().zip(&b.power) {
            if *pa > 0.0 {
                assert!((pb / pa - 4.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn single_segment_rectangular_welch_equals_periodogram() {
        let mut rng = crate::rng::stream_rng(16, &[7]);
        let signal = random_signal(&mut rng, 256);
        let rect = vec![1.0; 256];
        let welch = welch_psd_with_window(&signal, 128.0, 256, 0.5, &rect).unwrap();
        assert_eq!(welch.n_segments, 1);
        let bare = periodogram(&signal, &rect, 128.0).unwrap();
        for (a, b) in welch.power.iter().zip(&bare) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn band_power_zero_for_zero_signal() {
        let psd = welch_psd(&vec![0.0; 512], 128.0, 256, 0.5).unwrap();
        assert_eq!(band_power(&psd, 4.0, 8.0).unwrap(), 0.0);
    }

    #[test]
    fn meta_bands_sum_to_total_range() {
        let mut rng = crate::rng::stream_rng(17, &[8]);
        let signal = random_signal(&mut rng, 2048);
        let psd = welch_psd(&signal, 128.0, 256, 0.5).unwrap();
        let edges = [4.0, 8.0, 12.0, 16.0, 25.0, 45.0];
        let parts: f64 = edges
            .windows(2)
            .map(|e| band_power(&psd, e[0], e[1]).unwrap())
            .sum();
        let whole = band_power(&psd, 4.0, 45.0).unwrap();
        assert!((parts - whole).abs() < 1e-9);
    }

    #[test]
    fn empty_band_range_flags() {
        let psd = welch_psd(&vec![1.0; 512], 128.0, 256, 0.5).unwrap();
        // Bin width is 0.5 Hz; (4.1, 4.4) contains no bin center.
        let (power, empty) = band_power_flagged(&psd, 4.1, 4.4).unwrap();
        assert_eq!(power, 0.0);
        assert!(empty);
        let (_, nonempty) = band_power_flagged(&psd, 4.0, 8.0).unwrap();
        assert!(!nonempty);
    }

    #[test]
    fn band_power_rejects_bad_range() {
        let psd = welch_psd(&vec![0.0; 512], 128.0, 256, 0.5).unwrap();
        assert!(band_power(&psd, 8.0, 4.0).is_err());
        assert!(band_power(&psd, 0.0, 65.0).is_err());
    }

    #[test]
    fn segment_starts_follow_half_overlap_rule() {
        let starts = segment_starts(1024, 256, 0.5).unwrap();
        assert_eq!(starts, vec![0, 128, 256, 384, 512, 640, 768]);
        let starts = segment_starts(512, 256, 0.0).unwrap();
        assert_eq!(starts, vec![0, 256]);
    }
}
