//! Spectral weighting: declarative filter shapes compiled to per-bin weights.
//!
//! A large weight suppresses distortion in a bin. Gap bands are therefore
//! expressed as high weights overriding the underlying segment shape.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const EDGE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shape {
    Constant,
    /// `magnitude * f / f_end`
    LinearInF,
    /// `magnitude * f_ref / f`, `f_ref = max(f_start, bin width)`
    InverseInF,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Segment {
    pub start: f64,
    pub end: f64,
    pub shape: Shape,
    pub magnitude: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Gap {
    pub center: f64,
    pub width: f64,
    pub weight: f64,
}

impl Gap {
    pub fn lo(&self) -> f64 {
        self.center - self.width / 2.0
    }

    pub fn hi(&self) -> f64 {
        self.center + self.width / 2.0
    }

    pub fn contains(&self, f: f64) -> bool {
        f >= self.lo() && f <= self.hi()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilterSpec {
    pub segments: Vec<Segment>,
    #[serde(default)]
    pub gaps: Vec<Gap>,
    /// Weight of the 0 Hz bin; defaults to the segment weight of bin 1.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dc_weight: Option<f64>,
}

impl FilterSpec {
    /// Default weighting: high inverse-frequency weight up to `fc/10` where
    /// the voltage loop acts, then a weight rising linearly to 1 at `fc/2`.
    pub fn template(fc: f64) -> Self {
        Self {
            segments: vec![
                Segment {
                    start: 0.0,
                    end: fc / 10.0,
                    shape: Shape::InverseInF,
                    magnitude: 100.0,
                },
                Segment {
                    start: fc / 10.0,
                    end: fc / 2.0,
                    shape: Shape::LinearInF,
                    magnitude: 1.0,
                },
            ],
            gaps: Vec::new(),
            dc_weight: None,
        }
    }

    pub fn with_gap(mut self, gap: Gap) -> Self {
        self.gaps.push(gap);
        self
    }

    pub fn validate(&self, fc: f64) -> Result<()> {
        let nyquist = fc / 2.0;
        let tol = EDGE_TOL * nyquist.max(1.0);
        for (i, s) in self.segments.iter().enumerate() {
            check_magnitude(&format!("segments[{i}].magnitude"), s.magnitude)?;
            if !(s.start.is_finite() && s.end.is_finite()) || s.end <= s.start {
                return Err(Error::Config(format!(
                    "segments[{i}]: start {} must be below end {}",
                    s.start, s.end
                )));
            }
        }
        let first = self
            .segments
            .first()
            .ok_or_else(|| Error::Config("filter needs at least one segment".into()))?;
        if first.start > tol {
            return Err(Error::UncoveredRange {
                from: 0.0,
                to: first.start,
            });
        }
        for pair in self.segments.windows(2) {
            let (a, b) = (&pair[0], &pair[1]);
            if b.start < a.end - tol {
                return Err(Error::OverlappingSegments { at: b.start });
            }
            if b.start > a.end + tol {
                return Err(Error::UncoveredRange {
                    from: a.end,
                    to: b.start,
                });
            }
        }
        let last = self.segments.last().expect("non-empty");
        if last.end < nyquist - tol {
            return Err(Error::UncoveredRange {
                from: last.end,
                to: nyquist,
            });
        }
        if let Some(w) = self.dc_weight {
            check_magnitude("dc_weight", w)?;
        }
        for (i, g) in self.gaps.iter().enumerate() {
            check_magnitude(&format!("gaps[{i}].weight"), g.weight)?;
            check_band(g, nyquist)?;
        }
        Ok(())
    }

    /// Per-bin weights for bins `1..=N/2` at control frequency `fc`.
    pub fn compile(&self, window: usize, fc: f64) -> Result<FilterWeights> {
        self.validate(fc)?;
        if window < 2 {
            return Err(Error::Config(format!(
                "window length must be at least 2, got {window}"
            )));
        }
        let bin_width = fc / window as f64;
        let weights = (1..=window / 2)
            .map(|n| {
                let f = n as f64 * bin_width;
                let gap = self
                    .gaps
                    .iter()
                    .filter(|g| g.contains(f))
                    .map(|g| g.weight)
                    .reduce(f64::max);
                gap.unwrap_or_else(|| self.segment_weight(f, bin_width))
            })
            .collect();
        let dc = self
            .dc_weight
            .unwrap_or_else(|| self.segment_weight(bin_width, bin_width));
        Ok(FilterWeights { weights, dc })
    }

    /// Moves gap `index` to a new center frequency. The caller recompiles.
    pub fn move_gap(&self, index: usize, new_center: f64, fc: f64) -> Result<FilterSpec> {
        let gap = self.gaps.get(index).ok_or(Error::NoSuchGap(index))?;
        let moved = Gap {
            center: new_center,
            ..*gap
        };
        check_band(&moved, fc / 2.0)?;
        let mut out = self.clone();
        out.gaps[index] = moved;
        Ok(out)
    }

    fn segment_weight(&self, f: f64, bin_width: f64) -> f64 {
        let seg = self
            .segments
            .iter()
            .find(|s| f < s.end)
            .unwrap_or_else(|| self.segments.last().expect("validated"));
        match seg.shape {
            Shape::Constant => seg.magnitude,
            Shape::LinearInF => seg.magnitude * f / seg.end,
            Shape::InverseInF => seg.magnitude * seg.start.max(bin_width) / f,
        }
    }
}

fn check_magnitude(what: &str, value: f64) -> Result<()> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        Err(Error::NegativeMagnitude {
            what: what.into(),
            value,
        })
    }
}

fn check_band(g: &Gap, nyquist: f64) -> Result<()> {
    let ok = g.width.is_finite()
        && g.width > 0.0
        && g.lo() > 0.0
        && g.hi() <= nyquist * (1.0 + EDGE_TOL);
    if ok {
        Ok(())
    } else {
        Err(Error::BandOutOfRange {
            lo: g.lo(),
            hi: g.hi(),
            nyquist,
        })
    }
}

/// Non-negative weights for bins `1..=N/2`, plus the weight of the 0 Hz
/// bin.
///
/// The 0 Hz bin of the shifted window is the accumulated difference between
/// the applied states and the duty reference; weighting it makes the window
/// mean follow the reference.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterWeights {
    pub weights: Vec<f64>,
    pub dc: f64,
}

impl FilterWeights {
    /// Equal weights for bins `1..=N/2`; the 0 Hz bin is left unweighted.
    pub fn uniform(window: usize, value: f64) -> Self {
        Self {
            weights: vec![value; window / 2],
            dc: 0.0,
        }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// Target magnitudes for bins `1..=N/2`; the default is all zero.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceSpectrum {
    pub targets: Vec<f64>,
}

impl ReferenceSpectrum {
    pub fn zero(window: usize) -> Self {
        Self {
            targets: vec![0.0; window / 2],
        }
    }

    /// Constant target `level` for bins with frequency in `[f_lo, f_hi]`.
    pub fn flat(window: usize, fc: f64, f_lo: f64, f_hi: f64, level: f64) -> Result<Self> {
        check_magnitude("reference level", level)?;
        let bin_width = fc / window as f64;
        let targets = (1..=window / 2)
            .map(|n| {
                let f = n as f64 * bin_width;
                if f >= f_lo && f <= f_hi {
                    level
                } else {
                    0.0
                }
            })
            .collect();
        Ok(Self { targets })
    }

    /// Flat target over `[f_lo, f_hi]` whose total power equals the
    /// distortion power of a binary window with mean `duty`.
    ///
    /// A binary window of length `N` and mean `d` has non-DC power
    /// `N^2 d (1 - d)` summed over all bins, half of it in `1..=N/2`.
    pub fn flat_calibrated(window: usize, fc: f64, f_lo: f64, f_hi: f64, duty: f64) -> Result<Self> {
        let bin_width = fc / window as f64;
        let count = (1..=window / 2)
            .map(|n| n as f64 * bin_width)
            .filter(|f| *f >= f_lo && *f <= f_hi)
            .count();
        if count == 0 {
            return Err(Error::EmptyBand { lo: f_lo, hi: f_hi });
        }
        let n = window as f64;
        let total = n * n * duty * (1.0 - duty) / 2.0;
        let level = (total / count as f64).sqrt();
        log::info!("calibrated flat reference level {level:.4} over {count} bins");
        Self::flat(window, fc, f_lo, f_hi, level)
    }

    /// Copy with zero target in every gap band of `spec`.
    pub fn notched(&self, spec: &FilterSpec, window: usize, fc: f64) -> Self {
        let bin_width = fc / window as f64;
        let targets = self
            .targets
            .iter()
            .enumerate()
            .map(|(i, &t)| {
                let f = (i + 1) as f64 * bin_width;
                if spec.gaps.iter().any(|g| g.contains(f)) {
                    0.0
                } else {
                    t
                }
            })
            .collect();
        Self { targets }
    }

    pub fn is_zero(&self) -> bool {
        self.targets.iter().all(|&t| t == 0.0)
    }
}

/// Linear schedule of a gap center moving at a constant rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapRamp {
    pub gap: usize,
    pub from: f64,
    pub to: f64,
    pub start: f64,
    /// Hz per second, always positive.
    pub rate: f64,
}

impl GapRamp {
    pub fn duration(&self) -> f64 {
        (self.to - self.from).abs() / self.rate
    }

    pub fn center_at(&self, t: f64) -> f64 {
        let elapsed = (t - self.start).clamp(0.0, self.duration());
        self.from + (self.to - self.from).signum() * self.rate * elapsed
    }

    /// Centers at every `interval` seconds from the start, ending at `to`.
    pub fn centers(&self, interval: f64) -> Vec<f64> {
        let steps = (self.duration() / interval).ceil() as usize;
        (0..=steps)
            .map(|i| self.center_at(self.start + i as f64 * interval))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const FC: f64 = 400e3;
    const N: usize = 2048;

    #[test]
    fn zero_filter_compiles_to_zero() {
        let spec = FilterSpec {
            segments: vec![Segment {
                start: 0.0,
                end: FC / 2.0,
                shape: Shape::Constant,
                magnitude: 0.0,
            }],
            gaps: vec![],
            dc_weight: None,
        };
        let w = spec.compile(N, FC).unwrap();
        assert_eq!(w.len(), N / 2);
        assert!(w.weights.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn template_shape_and_gap() {
        let spec = FilterSpec::template(FC).with_gap(Gap {
            center: 100e3,
            width: 2e3,
            weight: 100.0,
        });
        let w = spec.compile(N, FC).unwrap();
        let bw = FC / N as f64;
        let freq = |i: usize| (i + 1) as f64 * bw;
        // inverse band decreases monotonically up to fc/10
        let knee = w.weights.iter().enumerate().find(|(i, _)| freq(*i) >= 40e3).unwrap().0;
        assert!(w.weights[..knee].windows(2).all(|p| p[1] < p[0]));
        assert_eq!(w.weights[0], 100.0);
        // sharp drop at the knee
        assert!(w.weights[knee] < w.weights[knee - 1]);
        // linear band increases outside the gap
        for i in knee..w.len() - 1 {
            let (f0, f1) = (freq(i), freq(i + 1));
            let in_gap = |f: f64| (99e3..=101e3).contains(&f);
            if !in_gap(f0) && !in_gap(f1) {
                assert!(w.weights[i + 1] > w.weights[i]);
            }
        }
        for (i, &x) in w.weights.iter().enumerate() {
            let f = freq(i);
            if (99e3..=101e3).contains(&f) {
                assert_eq!(x, 100.0);
            } else if f > 40e3 {
                assert!(x <= 1.0);
            }
        }
        assert!((w.weights[N / 2 - 1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn compile_is_deterministic() {
        let spec = FilterSpec::template(FC);
        assert_eq!(spec.compile(N, FC).unwrap(), spec.compile(N, FC).unwrap());
    }

    #[test]
    fn compile_rejects_bad_specs() {
        let mut spec = FilterSpec::template(FC);
        spec.segments[1].start = 30e3;
        assert!(matches!(
            spec.compile(N, FC),
            Err(Error::OverlappingSegments { .. })
        ));

        let mut spec = FilterSpec::template(FC);
        spec.segments[1].start = 50e3;
        assert!(matches!(spec.compile(N, FC), Err(Error::UncoveredRange { .. })));

        let mut spec = FilterSpec::template(FC);
        spec.segments[1].end = 150e3;
        assert!(matches!(spec.compile(N, FC), Err(Error::UncoveredRange { .. })));

        let mut spec = FilterSpec::template(FC);
        spec.segments[0].magnitude = -1.0;
        assert!(matches!(
            spec.compile(N, FC),
            Err(Error::NegativeMagnitude { .. })
        ));
    }

    #[test]
    fn move_gap_behaviour() {
        let spec = FilterSpec::template(125e3).with_gap(Gap {
            center: 10e3,
            width: 2e3,
            weight: 100.0,
        });
        assert_eq!(spec.move_gap(0, 10e3, 125e3).unwrap(), spec);
        let moved = spec.move_gap(0, 23e3, 125e3).unwrap();
        assert_eq!(moved.gaps[0].center, 23e3);
        assert!(matches!(
            spec.move_gap(0, 70e3, 125e3),
            Err(Error::BandOutOfRange { .. })
        ));
        assert!(matches!(spec.move_gap(3, 20e3, 125e3), Err(Error::NoSuchGap(3))));
    }

    #[test]
    fn move_gap_only_touches_old_and_new_band() {
        let fc = 125e3;
        let n = 2047;
        let spec = FilterSpec::template(fc).with_gap(Gap {
            center: 15e3,
            width: 2e3,
            weight: 50.0,
        });
        let moved = spec.move_gap(0, 30e3, fc).unwrap();
        let (a, b) = (spec.compile(n, fc).unwrap(), moved.compile(n, fc).unwrap());
        let bw = fc / n as f64;
        for i in 0..a.len() {
            let f = (i + 1) as f64 * bw;
            let touched = spec.gaps[0].contains(f) || moved.gaps[0].contains(f);
            if !touched {
                assert_eq!(a.weights[i], b.weights[i]);
            }
        }
    }

    #[test]
    fn gap_ramp_interpolates() {
        let ramp = GapRamp {
            gap: 0,
            from: 10e3,
            to: 23e3,
            start: 0.0,
            rate: 1.2e3,
        };
        assert!((ramp.duration() - 13.0 / 1.2).abs() < 1e-12);
        let centers = ramp.centers(1.0);
        assert_eq!(centers.first(), Some(&10e3));
        assert_eq!(centers.last(), Some(&23e3));
        for p in centers.windows(2).take(centers.len() - 2) {
            assert!((p[1] - p[0] - 1.2e3).abs() < 1e-6);
        }
        assert!((ramp.center_at(5.0) - 16e3).abs() < 1e-9);
    }

    #[test]
    fn dc_weight_defaults_to_first_bin() {
        let spec = FilterSpec::template(FC);
        let w = spec.compile(N, FC).unwrap();
        assert_eq!(w.dc, w.weights[0]);
        let mut spec = spec;
        spec.dc_weight = Some(7.5);
        assert_eq!(spec.compile(N, FC).unwrap().dc, 7.5);
        spec.dc_weight = Some(-1.0);
        assert!(spec.compile(N, FC).is_err());
        assert_eq!(FilterWeights::uniform(N, 1.0).dc, 0.0);
    }

    #[test]
    fn notch_zeroes_gap_targets_only() {
        let (n, fc) = (2047, 125e3);
        let flat = ReferenceSpectrum::flat(n, fc, 10e3, fc / 2.0, 3.0).unwrap();
        let spec = FilterSpec::template(fc).with_gap(Gap {
            center: 15e3,
            width: 2e3,
            weight: 50.0,
        });
        let notched = flat.notched(&spec, n, fc);
        let bw = fc / n as f64;
        for (i, (&a, &b)) in flat.targets.iter().zip(&notched.targets).enumerate() {
            let f = (i + 1) as f64 * bw;
            if (14e3..=16e3).contains(&f) {
                assert_eq!(b, 0.0);
            } else {
                assert_eq!(a, b);
            }
        }
        assert!(notched.targets.iter().filter(|&&t| t == 0.0).count() > flat.targets.iter().filter(|&&t| t == 0.0).count());
        assert_eq!(flat.notched(&FilterSpec::template(fc), n, fc), flat);
    }

    #[test]
    fn calibrated_reference_power() {
        let (n, fc, d) = (2047, 125e3, 0.25);
        let r = ReferenceSpectrum::flat_calibrated(n, fc, 10e3, fc / 2.0, d).unwrap();
        let total: f64 = r.targets.iter().map(|t| t * t).sum();
        let expected = (n * n) as f64 * d * (1.0 - d) / 2.0;
        assert!((total - expected).abs() < 1e-9 * expected);
        assert!(ReferenceSpectrum::zero(n).is_zero());
    }

    proptest! {
        #[test]
        fn weights_scale_with_magnitudes(k in 0u32..6) {
            let alpha = f64::from(1u32 << k);
            let spec = FilterSpec::template(FC).with_gap(Gap { center: 80e3, width: 4e3, weight: 30.0 });
            let mut scaled = spec.clone();
            for s in &mut scaled.segments {
                s.magnitude *= alpha;
            }
            for g in &mut scaled.gaps {
                g.weight *= alpha;
            }
            let (a, b) = (spec.compile(N, FC).unwrap(), scaled.compile(N, FC).unwrap());
            for (x, y) in a.weights.iter().zip(&b.weights) {
                prop_assert_eq!(x * alpha, *y);
            }
        }

        #[test]
        fn weights_are_nonnegative(n in 2usize..4096) {
            let w = FilterSpec::template(FC).compile(n, FC).unwrap();
            prop_assert_eq!(w.len(), n / 2);
            prop_assert!(w.weights.iter().all(|x| x.is_finite() && *x >= 0.0));
        }
    }
}
