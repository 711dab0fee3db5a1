//! Offline metrics on recorded traces.
//!
//! Spectra are power per bin, averaged over segments and normalized to the
//! power of the 0 Hz component. Bins are not folded: a tone of amplitude `A`
//! reads `A^2 / 4` in its positive-frequency bin, and a constant `c` reads
//! `c^2` at DC. Each segment has its mean removed before windowing so the
//! DC component does not leak into neighbouring bins; its power is tracked
//! separately.

use std::f64::consts::PI;
use std::ops::Range;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filter::{FilterWeights, ReferenceSpectrum};

/// Floor applied when converting powers to dB.
pub const DB_FLOOR: f64 = -120.0;

pub fn to_db(power: f64) -> f64 {
    if power > 0.0 {
        (10.0 * power.log10()).max(DB_FLOOR)
    } else {
        DB_FLOOR
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum WindowKind {
    #[default]
    Hann,
    Rectangular,
}

impl WindowKind {
    fn coefficients(self, len: usize) -> Vec<f64> {
        match self {
            // periodic Hann
            WindowKind::Hann => (0..len)
                .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / len as f64).cos())
                .collect(),
            WindowKind::Rectangular => vec![1.0; len],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WelchConfig {
    pub segment: usize,
    /// Fraction of a segment shared with the next one, in `[0, 1)`.
    pub overlap: f64,
    pub window: WindowKind,
}

impl WelchConfig {
    pub fn hann(segment: usize) -> Self {
        Self {
            segment,
            overlap: 0.5,
            window: WindowKind::Hann,
        }
    }

    /// One rectangular segment per `segment` samples, no overlap.
    pub fn rectangular(segment: usize) -> Self {
        Self {
            segment,
            overlap: 0.0,
            window: WindowKind::Rectangular,
        }
    }

    fn hop(&self) -> usize {
        ((self.segment as f64 * (1.0 - self.overlap)).round() as usize).max(1)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerSpectrum {
    pub bin_width: f64,
    /// Per-bin power for bins `0..=L/2`, before normalization.
    pub absolute: Vec<f64>,
    /// Power of the 0 Hz component used for normalization; 1 when the
    /// trace has no DC component.
    pub reference: f64,
    /// Segment length the bins came from.
    pub segment: usize,
}

impl PowerSpectrum {
    pub fn len(&self) -> usize {
        self.absolute.len()
    }

    pub fn is_empty(&self) -> bool {
        self.absolute.is_empty()
    }

    pub fn frequency(&self, bin: usize) -> f64 {
        bin as f64 * self.bin_width
    }

    pub fn frequencies(&self) -> Vec<f64> {
        (0..self.len()).map(|k| self.frequency(k)).collect()
    }

    /// DC-normalized linear power of bin `k`.
    pub fn power(&self, k: usize) -> f64 {
        self.absolute[k] / self.reference
    }

    pub fn db(&self, k: usize) -> f64 {
        to_db(self.power(k))
    }

    pub fn db_all(&self) -> Vec<f64> {
        (0..self.len()).map(|k| self.db(k)).collect()
    }

    /// Bins whose center frequency lies in `[lo, hi]`.
    pub fn bins_in(&self, lo: f64, hi: f64) -> Range<usize> {
        let first = (lo / self.bin_width).ceil().max(0.0) as usize;
        let last = ((hi / self.bin_width).floor() as isize).min(self.len() as isize - 1);
        if last < first as isize {
            first..first
        } else {
            first..last as usize + 1
        }
    }

    /// Total absolute power with the negative-frequency half folded back;
    /// equals the mean square of the trace for one rectangular segment.
    pub fn total_power(&self) -> f64 {
        let interior_end = if self.segment % 2 == 0 {
            self.len() - 1
        } else {
            self.len()
        };
        let mut total = self.absolute[0];
        total += 2.0 * self.absolute[1..interior_end].iter().sum::<f64>();
        if self.segment % 2 == 0 {
            total += self.absolute[self.len() - 1];
        }
        total
    }
}

struct SegmentTransform {
    fft: Arc<dyn Fft<f64>>,
    window: Vec<f64>,
    gain: f64,
    buf: Vec<Complex64>,
}

impl SegmentTransform {
    fn new(len: usize, kind: WindowKind) -> Self {
        let window = kind.coefficients(len);
        let gain = window.iter().sum::<f64>().powi(2);
        Self {
            fft: FftPlanner::new().plan_fft_forward(len),
            window,
            gain,
            buf: vec![Complex64::new(0.0, 0.0); len],
        }
    }

    /// Adds the per-bin power of a mean-removed segment to `acc`; returns the
    /// segment mean.
    fn accumulate(&mut self, segment: &[f64], acc: &mut [f64]) -> f64 {
        let mean = segment.iter().sum::<f64>() / segment.len() as f64;
        for ((b, &x), &w) in self.buf.iter_mut().zip(segment).zip(&self.window) {
            *b = Complex64::new((x - mean) * w, 0.0);
        }
        self.fft.process(&mut self.buf);
        for (a, b) in acc.iter_mut().zip(&self.buf) {
            *a += b.norm_sqr() / self.gain;
        }
        mean
    }
}

/// Averaged-periodogram power spectrum of `trace` sampled at `sample_rate`.
pub fn welch_spectrum(trace: &[f64], sample_rate: f64, cfg: &WelchConfig) -> Result<PowerSpectrum> {
    let len = cfg.segment;
    if len < 2 {
        return Err(Error::Config(format!("segment length {len} too short")));
    }
    if trace.len() < len {
        return Err(Error::TraceTooShort {
            needed: len,
            got: trace.len(),
        });
    }
    let mut tx = SegmentTransform::new(len, cfg.window);
    let bins = len / 2 + 1;
    let mut acc = vec![0.0; bins];
    let mut dc = 0.0;
    let mut count = 0usize;
    let mut start = 0;
    while start + len <= trace.len() {
        let mean = tx.accumulate(&trace[start..start + len], &mut acc);
        dc += mean * mean;
        count += 1;
        start += cfg.hop();
    }
    let scale = 1.0 / count as f64;
    let mut absolute: Vec<f64> = acc.iter().map(|a| a * scale).collect();
    absolute[0] = dc * scale;
    let reference = if absolute[0] > 0.0 { absolute[0] } else { 1.0 };
    Ok(PowerSpectrum {
        bin_width: sample_rate / len as f64,
        absolute,
        reference,
        segment: len,
    })
}

/// Converts a switch trace to 0/1 samples.
pub fn as_levels(trace: &[bool]) -> Vec<f64> {
    trace.iter().map(|&b| f64::from(u8::from(b))).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SfdrReference {
    /// The 0 Hz component against the largest non-DC peak; the wanted output
    /// of a DC-DC converter is its DC component.
    #[default]
    Dc,
    /// Largest against second-largest non-DC peak.
    LargestPeak,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SfdrConfig {
    pub reference: SfdrReference,
    /// Half-width in bins of the local-maximum test.
    pub neighborhood: usize,
}

impl Default for SfdrConfig {
    fn default() -> Self {
        Self {
            reference: SfdrReference::Dc,
            neighborhood: 3,
        }
    }
}

/// Non-DC local maxima, sorted by descending power. A plateau yields one
/// peak at its first bin.
pub fn peaks(spectrum: &PowerSpectrum, neighborhood: usize) -> Vec<usize> {
    let p = &spectrum.absolute;
    let n = p.len();
    let mut found: Vec<usize> = (1..n)
        .filter(|&k| {
            let lo = k.saturating_sub(neighborhood).max(1);
            let hi = (k + neighborhood).min(n - 1);
            p[k] > 0.0 && (lo..k).all(|j| p[k] > p[j]) && (k + 1..=hi).all(|j| p[k] >= p[j])
        })
        .collect();
    found.sort_by(|&a, &b| p[b].total_cmp(&p[a]).then(a.cmp(&b)));
    found
}

/// Spurious-free dynamic range in dB.
pub fn sfdr(spectrum: &PowerSpectrum, cfg: &SfdrConfig) -> Result<f64> {
    if spectrum.len() < 2 {
        return Err(Error::NoPeaks);
    }
    let found = peaks(spectrum, cfg.neighborhood);
    match cfg.reference {
        SfdrReference::Dc => {
            let top = *found.first().ok_or(Error::NoPeaks)?;
            if spectrum.absolute[0] <= 0.0 {
                return Err(Error::NoPeaks);
            }
            Ok(10.0 * (spectrum.absolute[0] / spectrum.absolute[top]).log10())
        }
        SfdrReference::LargestPeak => {
            if found.len() < 2 {
                return Err(Error::NoPeaks);
            }
            let p = &spectrum.absolute;
            Ok(10.0 * (p[found[0]] / p[found[1]]).log10())
        }
    }
}

/// Largest non-DC bin in dB relative to DC, with its frequency.
pub fn max_peak(spectrum: &PowerSpectrum) -> (f64, f64) {
    let (k, _) = spectrum.absolute[1..]
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("spectrum has non-DC bins");
    (spectrum.frequency(k + 1), spectrum.db(k + 1))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub lo: f64,
    pub hi: f64,
}

impl Band {
    pub fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    /// Gap band and the two adjacent flanks of width `flank`.
    pub fn with_flanks(lo: f64, hi: f64, flank: f64) -> (Band, [Band; 2]) {
        (
            Band::new(lo, hi),
            [Band::new(lo - flank, lo), Band::new(hi, hi + flank)],
        )
    }
}

fn mean_db(spectrum: &PowerSpectrum, bins: Range<usize>) -> f64 {
    let n = bins.len() as f64;
    bins.map(|k| spectrum.db(k)).sum::<f64>() / n
}

/// Mean flank level minus mean in-gap level, both averaged in dB.
///
/// Bins lying on a shared edge count for the gap only.
pub fn gap_depth(spectrum: &PowerSpectrum, gap: Band, flanks: &[Band]) -> Result<f64> {
    let gap_bins = spectrum.bins_in(gap.lo, gap.hi);
    let gap_bins = gap_bins.start.max(1)..gap_bins.end;
    if gap_bins.is_empty() {
        return Err(Error::EmptyBand {
            lo: gap.lo,
            hi: gap.hi,
        });
    }
    let mut flank_sum = 0.0;
    let mut flank_count = 0usize;
    for f in flanks {
        let bins = spectrum.bins_in(f.lo, f.hi);
        for k in bins.start.max(1)..bins.end {
            if !gap_bins.contains(&k) {
                flank_sum += spectrum.db(k);
                flank_count += 1;
            }
        }
    }
    if flank_count == 0 {
        let f = flanks.first().copied().unwrap_or(gap);
        return Err(Error::EmptyBand { lo: f.lo, hi: f.hi });
    }
    Ok(flank_sum / flank_count as f64 - mean_db(spectrum, gap_bins))
}

/// DC-normalized power summed over the non-DC bins in `band`.
pub fn distortion_power(spectrum: &PowerSpectrum, band: Band) -> Result<f64> {
    let bins = spectrum.bins_in(band.lo, band.hi);
    let bins = bins.start.max(1)..bins.end;
    if bins.is_empty() {
        return Err(Error::EmptyBand {
            lo: band.lo,
            hi: band.hi,
        });
    }
    Ok(bins.map(|k| spectrum.power(k)).sum())
}

/// Number of low-to-high transitions.
pub fn rising_edges(trace: &[bool]) -> usize {
    trace.windows(2).filter(|w| !w[0] && w[1]).count()
}

/// Rising edges per second.
pub fn avg_switching_frequency(trace: &[bool], duration: f64) -> f64 {
    assert!(duration > 0.0, "duration must be positive");
    rising_edges(trace) as f64 / duration
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RippleStats {
    pub variance: f64,
    pub peak_to_peak: f64,
    /// Variance relative to the baseline trace.
    pub variance_factor: Option<f64>,
    pub peak_to_peak_factor: Option<f64>,
}

fn variance_and_p2p(trace: &[f64]) -> (f64, f64) {
    if trace.is_empty() {
        return (0.0, 0.0);
    }
    let n = trace.len() as f64;
    let mean = trace.iter().sum::<f64>() / n;
    let var = trace.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let (lo, hi) = trace
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    (var, hi - lo)
}

/// Ripple of `trace`, with factors relative to `baseline` when given.
pub fn ripple_stats(trace: &[f64], baseline: Option<&[f64]>) -> RippleStats {
    let (variance, peak_to_peak) = variance_and_p2p(trace);
    let (variance_factor, peak_to_peak_factor) = match baseline {
        Some(b) => {
            let (bv, bp) = variance_and_p2p(b);
            (Some(variance / bv), Some(peak_to_peak / bp))
        }
        None => (None, None),
    };
    RippleStats {
        variance,
        peak_to_peak,
        variance_factor,
        peak_to_peak_factor,
    }
}

/// The part of a trace after discarding the leading `fraction`.
pub fn steady_state(trace: &[f64], fraction: f64) -> &[f64] {
    let skip = ((trace.len() as f64) * fraction.clamp(0.0, 1.0)).round() as usize;
    &trace[skip.min(trace.len())..]
}

#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram {
    /// Center time of each column, s.
    pub times: Vec<f64>,
    pub bin_width: f64,
    /// `power_db[column][bin]`, absolute power per bin in dB.
    pub power_db: Vec<Vec<f64>>,
}

impl Spectrogram {
    /// Column `c` as a spectrum normalized to its own mean power of one.
    pub fn column(&self, c: usize) -> PowerSpectrum {
        let absolute: Vec<f64> = self.power_db[c].iter().map(|db| 10f64.powf(db / 10.0)).collect();
        PowerSpectrum {
            bin_width: self.bin_width,
            segment: 2 * (absolute.len() - 1),
            absolute,
            reference: 1.0,
        }
    }
}

/// Short-time power spectrum with a Hann window, mean removed per column.
pub fn spectrogram(trace: &[f64], sample_rate: f64, window: usize, hop: usize) -> Result<Spectrogram> {
    if window < 2 || hop == 0 {
        return Err(Error::Config("spectrogram window >= 2 and hop >= 1 required".into()));
    }
    if trace.len() < window {
        return Err(Error::TraceTooShort {
            needed: window,
            got: trace.len(),
        });
    }
    let mut tx = SegmentTransform::new(window, WindowKind::Hann);
    let bins = window / 2 + 1;
    let mut times = Vec::new();
    let mut power_db = Vec::new();
    let mut start = 0;
    while start + window <= trace.len() {
        let mut acc = vec![0.0; bins];
        tx.accumulate(&trace[start..start + window], &mut acc);
        acc[0] = 0.0;
        power_db.push(acc.into_iter().map(to_db).collect());
        times.push((start as f64 + window as f64 / 2.0) / sample_rate);
        start += hop;
    }
    Ok(Spectrogram {
        times,
        bin_width: sample_rate / window as f64,
        power_db,
    })
}

/// Time-averaged squared 2-norm of the weighted, rectified spectrum of the
/// switch trace, evaluated on windows of `window` samples every `hop`
/// samples and normalized by `window^2`.
pub fn filtered_distortion_power(
    trace: &[bool],
    window: usize,
    hop: usize,
    weights: &FilterWeights,
    reference: &ReferenceSpectrum,
) -> Result<f64> {
    if weights.len() != window / 2 || reference.targets.len() != window / 2 {
        return Err(Error::Config(format!(
            "weights and reference need {} bins",
            window / 2
        )));
    }
    if trace.len() < window {
        return Err(Error::TraceTooShort {
            needed: window,
            got: trace.len(),
        });
    }
    let fft = FftPlanner::new().plan_fft_forward(window);
    let mut buf = vec![Complex64::new(0.0, 0.0); window];
    let mut total = 0.0;
    let mut count = 0usize;
    let mut start = 0;
    while start + window <= trace.len() {
        for (b, &x) in buf.iter_mut().zip(&trace[start..start + window]) {
            *b = Complex64::new(f64::from(u8::from(x)), 0.0);
        }
        fft.process(&mut buf);
        total += buf[1..=window / 2]
            .iter()
            .zip(&weights.weights)
            .zip(&reference.targets)
            .map(|((b, w), t)| (w * (b.norm() - t).max(0.0)).powi(2))
            .sum::<f64>();
        count += 1;
        start += hop.max(1);
    }
    Ok(total / count as f64 / (window * window) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn tone(len: usize, fs: f64, f: f64, amp: f64, offset: f64) -> Vec<f64> {
        (0..len)
            .map(|i| offset + amp * (2.0 * PI * f * i as f64 / fs).cos())
            .collect()
    }

    fn synthetic(db: &[f64]) -> PowerSpectrum {
        PowerSpectrum {
            bin_width: 1.0,
            absolute: db.iter().map(|d| 10f64.powf(d / 10.0)).collect(),
            reference: 1.0,
            segment: 2 * (db.len() - 1),
        }
    }

    #[test]
    fn sinusoid_gives_single_peak() {
        let fs = 1024.0;
        let x = tone(8192, fs, 64.0, 1.0, 1.0);
        let s = welch_spectrum(&x, fs, &WelchConfig::hann(256)).unwrap();
        let (f, db) = max_peak(&s);
        assert_eq!(f, 64.0);
        // amplitude-1 tone against DC 1: A^2/4 -> -6 dB
        assert!((db + 6.0206).abs() < 1e-6);
        let found = peaks(&s, 3);
        assert_eq!(found[0], 16);
        assert!(s.db(found[1]) < -100.0);
    }

    #[test]
    fn constant_signal_is_pure_dc() {
        let x = vec![0.7; 4096];
        let s = welch_spectrum(&x, 1.0, &WelchConfig::hann(512)).unwrap();
        assert!((s.absolute[0] - 0.49).abs() < 1e-12);
        assert!(s.absolute[1..].iter().all(|&p| p < 1e-25));
    }

    #[test]
    fn white_noise_is_flat() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let x: Vec<f64> = (0..1 << 18)
            .map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 })
            .collect();
        let s = welch_spectrum(&x, 1.0, &WelchConfig::hann(256)).unwrap();
        let db: Vec<f64> = (2..s.len()).map(|k| to_db(s.absolute[k])).collect();
        let mean = db.iter().sum::<f64>() / db.len() as f64;
        assert!(db.iter().all(|d| (d - mean).abs() < 3.0));
    }

    #[test]
    fn parseval_rectangular() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for len in [1000usize, 1001] {
            let x: Vec<f64> = (0..len).map(|_| rng.random_range(-1.0..2.0)).collect();
            let s = welch_spectrum(&x, 1.0, &WelchConfig::rectangular(len)).unwrap();
            let ms = x.iter().map(|v| v * v).sum::<f64>() / len as f64;
            assert!((s.total_power() - ms).abs() < 1e-3 * ms);
        }
    }

    #[test]
    fn too_short_trace_errors() {
        assert!(matches!(
            welch_spectrum(&[1.0; 10], 1.0, &WelchConfig::hann(16)),
            Err(Error::TraceTooShort { .. })
        ));
    }

    #[test]
    fn sfdr_examples() {
        let by_peak = SfdrConfig {
            reference: SfdrReference::LargestPeak,
            neighborhood: 3,
        };
        let s = synthetic(&[10.0, -60.0, -60.0, 0.0, -60.0, -60.0, -60.0, -60.0, -20.0, -60.0, -60.0]);
        assert!((sfdr(&s, &by_peak).unwrap() - 20.0).abs() < 1e-9);
        assert!((sfdr(&s, &SfdrConfig::default()).unwrap() - 10.0).abs() < 1e-9);
        let eq = synthetic(&[0.0, -60.0, -5.0, -60.0, -60.0, -60.0, -60.0, -5.0, -60.0]);
        assert!(sfdr(&eq, &by_peak).unwrap().abs() < 1e-9);
        let flat = synthetic(&[0.0; 8]);
        assert!(matches!(sfdr(&flat, &by_peak), Err(Error::NoPeaks)));
    }

    #[test]
    fn sfdr_of_square_wave() {
        // 50 % square wave on bin-aligned harmonics: fundamental / 3rd = 3
        let period = 64;
        let len = 64 * period;
        let x: Vec<f64> = (0..len).map(|i| f64::from(u8::from(i % period < period / 2))).collect();
        let s = welch_spectrum(&x, 1.0, &WelchConfig::hann(len / 4)).unwrap();
        let by_peak = SfdrConfig {
            reference: SfdrReference::LargestPeak,
            neighborhood: 3,
        };
        let v = sfdr(&s, &by_peak).unwrap();
        let expected = 20.0 * 3f64.log10();
        assert!((v - expected).abs() < 0.05, "sfdr {v}");
    }

    #[test]
    fn sfdr_is_scale_invariant() {
        let base = synthetic(&[3.0, -50.0, -7.0, -50.0, -50.0, -50.0, -12.0, -50.0, -50.0]);
        let mut scaled = base.clone();
        for p in &mut scaled.absolute {
            *p *= 37.5;
        }
        for cfg in [SfdrConfig::default(), SfdrConfig { reference: SfdrReference::LargestPeak, neighborhood: 2 }] {
            assert!((sfdr(&base, &cfg).unwrap() - sfdr(&scaled, &cfg).unwrap()).abs() < 1e-9);
        }
    }

    #[test]
    fn gap_depth_examples() {
        let flat = synthetic(&[0.0; 40]);
        let (gap, flanks) = Band::with_flanks(15.0, 24.0, 5.0);
        assert!(gap_depth(&flat, gap, &flanks).unwrap().abs() < 1e-12);

        let mut db = vec![-10.0; 40];
        for v in &mut db[15..=24] {
            *v = -40.0;
        }
        let notch = synthetic(&db);
        assert!((gap_depth(&notch, gap, &flanks).unwrap() - 30.0).abs() < 1e-9);
        let mut scaled = notch.clone();
        for p in &mut scaled.absolute {
            *p *= 1e3;
        }
        assert!((gap_depth(&scaled, gap, &flanks).unwrap() - 30.0).abs() < 1e-9);

        assert!(gap_depth(&flat, Band::new(15.2, 15.8), &flanks).is_err());
        assert!(gap_depth(&flat, gap, &[Band::new(100.0, 110.0)]).is_err());
    }

    #[test]
    fn distortion_power_examples() {
        let s = synthetic(&[0.0; 20]);
        assert!((distortion_power(&s, Band::new(0.0, 5.0)).unwrap() - 5.0).abs() < 1e-12);
        assert!((distortion_power(&s, Band::new(3.0, 9.0)).unwrap() - 7.0).abs() < 1e-12);
        assert!(distortion_power(&s, Band::new(3.2, 3.8)).is_err());
    }

    #[test]
    fn switching_frequency_counts_rising_edges() {
        let fs = 400e3;
        let f = 20e3;
        let period = (fs / f) as usize;
        let trace: Vec<bool> = (0..400_000).map(|i| i % period < period / 2).collect();
        assert_eq!(rising_edges(&trace), 19_999);
        let freq = avg_switching_frequency(&trace, 1.0);
        assert_eq!(freq * 1.0, rising_edges(&trace) as f64);
        assert_eq!(avg_switching_frequency(&vec![true; 1000], 1.0), 0.0);
    }

    #[test]
    fn ripple_examples() {
        let x: Vec<f64> = (0..1000).map(|i| (i as f64 * 0.1).sin()).collect();
        let r = ripple_stats(&x, Some(&x));
        assert_eq!(r.variance_factor, Some(1.0));
        assert_eq!(r.peak_to_peak_factor, Some(1.0));
        let c = ripple_stats(&[3.0; 100], None);
        assert_eq!((c.variance, c.peak_to_peak), (0.0, 0.0));
        assert_eq!(steady_state(&x, 0.2).len(), 800);
    }

    #[test]
    fn spectrogram_examples() {
        let fs = 1000.0;
        let x = tone(10_000, fs, 125.0, 1.0, 0.0);
        let sg = spectrogram(&x, fs, 256, 128).unwrap();
        let ridge = (125.0 / sg.bin_width) as usize;
        for col in &sg.power_db {
            let (k, _) = col.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap();
            assert_eq!(k, ridge);
            assert!((col[ridge] - sg.power_db[0][ridge]).abs() < 1e-9);
        }
        let z = spectrogram(&vec![0.0; 1000], fs, 256, 256).unwrap();
        assert!(z.power_db.iter().flatten().all(|&d| d == DB_FLOOR));
    }

    #[test]
    fn filtered_distortion_power_of_constant_is_zero() {
        let n = 64;
        let w = FilterWeights::uniform(n, 1.0);
        let r = ReferenceSpectrum::zero(n);
        let p = filtered_distortion_power(&vec![true; 1000], n, 16, &w, &r).unwrap();
        assert!(p < 1e-20);
        let alt: Vec<bool> = (0..1000).map(|i| i % 2 == 0).collect();
        let p = filtered_distortion_power(&alt, n, 16, &w, &r).unwrap();
        // Nyquist bin holds N/2 -> (N/2)^2 / N^2
        assert!((p - 0.25).abs() < 1e-9);
    }
}
