//! Sliding DFT over the window of DC-shifted switch states.
//!
//! The spectrum of the last `N` control samples is kept up to date with one
//! complex rotate-and-add per stored bin and step. Bins are indexed with the
//! oldest window sample at time index 0, which makes the recursive update and
//! a direct DFT of the window agree exactly (up to rounding), not only in
//! magnitude.
//!
//! Only bins `0..=N/2` are stored; the window is real so the rest follow by
//! conjugate symmetry.

use std::f64::consts::TAU;

use log::warn;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Default number of steps between full recomputations of the spectrum.
pub const DEFAULT_RESYNC_INTERVAL: u64 = 65_536;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EngineConfig {
    /// Window length in control samples.
    pub window: usize,
    /// Control frequency in Hz.
    pub fc: f64,
    /// Steps between direct recomputations of the spectrum.
    pub resync_interval: u64,
}

impl EngineConfig {
    pub fn new(window: usize, fc: f64) -> Result<Self> {
        let cfg = Self {
            window,
            fc,
            resync_interval: DEFAULT_RESYNC_INTERVAL,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.window < 2 {
            return Err(Error::Config(format!(
                "window length must be at least 2, got {}",
                self.window
            )));
        }
        if !(self.fc.is_finite() && self.fc > 0.0) {
            return Err(Error::Config(format!(
                "control frequency must be positive, got {}",
                self.fc
            )));
        }
        if self.resync_interval == 0 {
            return Err(Error::Config("resync interval must be at least 1".into()));
        }
        Ok(())
    }

    /// Number of stored bins, `N/2 + 1`.
    pub fn stored_bins(&self) -> usize {
        self.window / 2 + 1
    }

    /// Frequency in Hz of bin `n`.
    pub fn bin_frequency(&self, n: usize) -> f64 {
        n as f64 * self.fc / self.window as f64
    }
}

/// Per-bin unit rotations `exp(j 2 pi n / N)` for the stored bins.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftVector {
    window: usize,
    twiddles: Vec<Complex64>,
}

impl ShiftVector {
    pub fn new(window: usize) -> Result<Self> {
        if window < 2 {
            return Err(Error::Config(format!(
                "window length must be at least 2, got {window}"
            )));
        }
        let twiddles = (0..=window / 2)
            .map(|n| {
                let (s, c) = (TAU * n as f64 / window as f64).sin_cos();
                Complex64::new(c, s)
            })
            .collect();
        Ok(Self { window, twiddles })
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn twiddles(&self) -> &[Complex64] {
        &self.twiddles
    }

    /// `dst[n] = (src[n] + delta) * twiddle[n]`.
    ///
    /// `delta` is the inserted sample minus the expelled one.
    #[inline]
    pub fn slide_into(&self, src: &[Complex64], delta: f64, dst: &mut [Complex64]) {
        debug_assert_eq!(src.len(), self.twiddles.len());
        debug_assert_eq!(dst.len(), self.twiddles.len());
        for ((d, s), t) in dst.iter_mut().zip(src).zip(&self.twiddles) {
            let re = s.re + delta;
            *d = Complex64::new(re * t.re - s.im * t.im, re * t.im + s.im * t.re);
        }
    }

    /// In-place variant of [`ShiftVector::slide_into`].
    #[inline]
    pub fn slide_in_place(&self, bins: &mut [Complex64], delta: f64) {
        debug_assert_eq!(bins.len(), self.twiddles.len());
        for (b, t) in bins.iter_mut().zip(&self.twiddles) {
            let re = b.re + delta;
            *b = Complex64::new(re * t.re - b.im * t.im, re * t.im + b.im * t.re);
        }
    }
}

/// Builds the shift vector for a window of length `window`.
pub fn make_shift_vector(window: usize) -> Result<ShiftVector> {
    ShiftVector::new(window)
}

/// DC-shifted switch sample: `raw - duty_ref`.
///
/// A duty reference outside `[0, 1]` is clamped.
pub fn shifted_value(raw: bool, duty_ref: f64) -> f64 {
    let d = clamp_duty(duty_ref);
    f64::from(u8::from(raw)) - d
}

pub(crate) fn clamp_duty(duty_ref: f64) -> f64 {
    if (0.0..=1.0).contains(&duty_ref) {
        duty_ref
    } else {
        let clamped = if duty_ref.is_nan() {
            0.0
        } else {
            duty_ref.clamp(0.0, 1.0)
        };
        warn!("duty reference {duty_ref} outside [0, 1], clamped to {clamped}");
        clamped
    }
}

/// Ring buffer of the last `N` switch states, both raw and DC-shifted.
#[derive(Debug, Clone, PartialEq)]
pub struct SwitchingWindow {
    shifted: Vec<f64>,
    raw: Vec<bool>,
    /// Index of the oldest sample, which is also the next slot to overwrite.
    head: usize,
    transitions: usize,
}

impl SwitchingWindow {
    /// All-zero window: raw state 0 inserted with a zero duty reference.
    pub fn new(window: usize) -> Result<Self> {
        if window < 2 {
            return Err(Error::Config(format!(
                "window length must be at least 2, got {window}"
            )));
        }
        Ok(Self {
            shifted: vec![0.0; window],
            raw: vec![false; window],
            head: 0,
            transitions: 0,
        })
    }

    /// Window filled from a sequence of `(raw, duty_ref)` pairs, oldest first.
    pub fn from_states<I>(window: usize, states: I) -> Result<Self>
    where
        I: IntoIterator<Item = (bool, f64)>,
    {
        let mut w = Self::new(window)?;
        let mut count = 0;
        for (raw, duty) in states {
            w.push(raw, duty);
            count += 1;
        }
        if count != window {
            return Err(Error::Config(format!(
                "expected {window} initial states, got {count}"
            )));
        }
        Ok(w)
    }

    /// Window pre-filled with a first-order sigma-delta sequence whose mean
    /// equals `duty_ref`.
    pub fn prefilled(window: usize, duty_ref: f64) -> Result<Self> {
        let d = clamp_duty(duty_ref);
        let mut acc = 0.5;
        let states: Vec<(bool, f64)> = (0..window)
            .map(|_| {
                acc += d;
                let bit = acc >= 1.0;
                if bit {
                    acc -= 1.0;
                }
                (bit, d)
            })
            .collect();
        Self::from_states(window, states)
    }

    /// Window of independent draws with probability `duty_ref` of a one.
    pub fn random<R: rand::Rng + ?Sized>(window: usize, duty_ref: f64, rng: &mut R) -> Result<Self> {
        let d = clamp_duty(duty_ref);
        let states: Vec<(bool, f64)> = (0..window).map(|_| (rng.random_bool(d), d)).collect();
        Self::from_states(window, states)
    }

    pub fn len(&self) -> usize {
        self.raw.len()
    }

    pub fn is_empty(&self) -> bool {
        self.raw.is_empty()
    }

    /// Number of adjacent unequal raw states in the window.
    pub fn transition_count(&self) -> usize {
        self.transitions
    }

    /// Shifted sample at age position `i` (0 = oldest).
    #[inline]
    pub fn shifted_at(&self, i: usize) -> f64 {
        self.shifted[self.index(i)]
    }

    /// Raw state at age position `i` (0 = oldest).
    #[inline]
    pub fn raw_at(&self, i: usize) -> bool {
        self.raw[self.index(i)]
    }

    pub fn newest_raw(&self) -> bool {
        self.raw_at(self.len() - 1)
    }

    /// Shifted samples, oldest first.
    pub fn shifted_samples(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(move |i| self.shifted_at(i))
    }

    /// Raw states, oldest first.
    pub fn raw_states(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len()).map(move |i| self.raw_at(i))
    }

    /// Appends a state, expelling the oldest one. Returns the expelled
    /// shifted sample.
    pub fn push(&mut self, raw: bool, duty_ref: f64) -> f64 {
        let n = self.len();
        let second_oldest = self.raw_at(1);
        let newest = self.newest_raw();
        if self.raw[self.head] != second_oldest {
            self.transitions -= 1;
        }
        if newest != raw {
            self.transitions += 1;
        }
        let expelled = self.shifted[self.head];
        self.shifted[self.head] = shifted_value(raw, duty_ref);
        self.raw[self.head] = raw;
        self.head = (self.head + 1) % n;
        expelled
    }

    /// Length of the trailing run of identical raw states.
    pub fn trailing_run(&self) -> usize {
        let last = self.newest_raw();
        (0..self.len())
            .rev()
            .take_while(|&i| self.raw_at(i) == last)
            .count()
    }

    #[inline]
    fn index(&self, i: usize) -> usize {
        let j = self.head + i;
        if j >= self.raw.len() {
            j - self.raw.len()
        } else {
            j
        }
    }
}

/// Complex DFT bins `0..=N/2` of the current window.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumState {
    pub bins: Vec<Complex64>,
    /// Steps since the last direct recomputation.
    pub age: u64,
}

impl SpectrumState {
    pub fn zeros(window: usize) -> Self {
        Self {
            bins: vec![Complex64::new(0.0, 0.0); window / 2 + 1],
            age: 0,
        }
    }

    pub fn magnitudes(&self) -> impl Iterator<Item = f64> + '_ {
        self.bins.iter().map(|b| b.norm())
    }
}

/// Advances `spectrum` by one sample: the oldest window sample leaves and
/// `new_shifted` enters. The window itself is not modified.
pub fn slide(
    spectrum: &SpectrumState,
    shift: &ShiftVector,
    window: &SwitchingWindow,
    new_shifted: f64,
) -> SpectrumState {
    let mut bins = spectrum.bins.clone();
    shift.slide_in_place(&mut bins, new_shifted - window.shifted_at(0));
    SpectrumState {
        bins,
        age: spectrum.age + 1,
    }
}

/// Inserts a switch state into both the window and its spectrum.
pub fn commit(
    spectrum: &mut SpectrumState,
    shift: &ShiftVector,
    window: &mut SwitchingWindow,
    raw: bool,
    duty_ref: f64,
) {
    let expelled = window.push(raw, duty_ref);
    let inserted = window.shifted_at(window.len() - 1);
    shift.slide_in_place(&mut spectrum.bins, inserted - expelled);
    spectrum.age += 1;
}

/// Recomputes the stored bins of `window` by direct summation.
pub fn resync(window: &SwitchingWindow) -> SpectrumState {
    let n = window.len();
    // exp(-j 2 pi k / N) for k in 0..N, indexed by (bin * sample) mod N
    let table: Vec<Complex64> = (0..n)
        .map(|k| {
            let (s, c) = (TAU * k as f64 / n as f64).sin_cos();
            Complex64::new(c, -s)
        })
        .collect();
    let samples: Vec<f64> = window.shifted_samples().collect();
    let bins = (0..=n / 2)
        .map(|bin| {
            let mut acc = Complex64::new(0.0, 0.0);
            let mut k = 0usize;
            for &x in &samples {
                acc += table[k] * x;
                k += bin;
                if k >= n {
                    k -= n;
                }
            }
            acc
        })
        .collect();
    SpectrumState { bins, age: 0 }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn naive_dft(samples: &[f64]) -> Vec<Complex64> {
        let n = samples.len();
        (0..=n / 2)
            .map(|k| {
                samples
                    .iter()
                    .enumerate()
                    .map(|(m, &x)| {
                        let ang = -TAU * (k * m) as f64 / n as f64;
                        Complex64::new(x * ang.cos(), x * ang.sin())
                    })
                    .sum()
            })
            .collect()
    }

    #[test]
    fn shift_vector_values() {
        let sv = make_shift_vector(4).unwrap();
        assert_eq!(sv.twiddles()[0], Complex64::new(1.0, 0.0));
        assert!((sv.twiddles()[1] - Complex64::new(0.0, 1.0)).norm() < 1e-15);

        let sv = make_shift_vector(2048).unwrap();
        assert!((sv.twiddles()[512] - Complex64::new(0.0, 1.0)).norm() <= 1e-12);
        assert_eq!(sv.twiddles().len(), 1025);
        for t in sv.twiddles() {
            assert!((t.norm() - 1.0).abs() <= 1e-12);
        }
        assert!(make_shift_vector(1).is_err());
    }

    #[test]
    fn shifted_values() {
        assert_eq!(shifted_value(true, 12.0 / 48.0), 0.75);
        assert_eq!(shifted_value(false, 12.0 / 48.0), -0.25);
        assert_eq!(shifted_value(false, 0.0), 0.0);
        assert_eq!(shifted_value(true, 1.5), 0.0);
        assert_eq!(shifted_value(false, -0.2), 0.0);
    }

    #[test]
    fn zero_window_stays_zero() {
        let sv = make_shift_vector(16).unwrap();
        let w = SwitchingWindow::new(16).unwrap();
        let s = slide(&SpectrumState::zeros(16), &sv, &w, 0.0);
        assert!(s.bins.iter().all(|b| b.norm() == 0.0));
        assert_eq!(s.age, 1);
    }

    #[test]
    fn single_insert_from_zero() {
        let n = 32;
        let sv = make_shift_vector(n).unwrap();
        let w = SwitchingWindow::new(n).unwrap();
        let v = 0.75;
        let s = slide(&SpectrumState::zeros(n), &sv, &w, v);
        for (b, t) in s.bins.iter().zip(sv.twiddles()) {
            assert!((b - t * v).norm() < 1e-15);
        }
    }

    #[test]
    fn resync_constant_and_zero() {
        let n = 64;
        let z = resync(&SwitchingWindow::new(n).unwrap());
        assert!(z.bins.iter().all(|b| b.norm() == 0.0));

        let c = 0.3;
        let w = SwitchingWindow::from_states(n, (0..n).map(|_| (true, 1.0 - c))).unwrap();
        let s = resync(&w);
        assert!((s.bins[0] - Complex64::new(n as f64 * c, 0.0)).norm() < 1e-9);
        for b in &s.bins[1..] {
            assert!(b.norm() < 1e-9);
        }
    }

    #[test]
    fn resync_matches_textbook_dft() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 16;
        let states: Vec<(bool, f64)> = (0..n).map(|_| (rng.random::<bool>(), 0.5)).collect();
        let w = SwitchingWindow::from_states(n, states).unwrap();
        let samples: Vec<f64> = w.shifted_samples().collect();
        let expected = naive_dft(&samples);
        let got = resync(&w);
        for (a, b) in got.bins.iter().zip(&expected) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn sliding_tracks_direct_dft() {
        let n = 64;
        let sv = make_shift_vector(n).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut w = SwitchingWindow::new(n).unwrap();
        let mut s = SpectrumState::zeros(n);
        for _ in 0..10_000 {
            let duty = rng.random_range(0.0..1.0);
            commit(&mut s, &sv, &mut w, rng.random(), duty);
        }
        let samples: Vec<f64> = w.shifted_samples().collect();
        let direct = naive_dft(&samples);
        let err = s
            .bins
            .iter()
            .zip(&direct)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-9, "max error {err}");
        assert_eq!(s.age, 10_000);
    }

    #[test]
    fn dc_bin_is_window_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 128;
        let states: Vec<(bool, f64)> = (0..n)
            .map(|_| (rng.random(), rng.random_range(0.0..1.0)))
            .collect();
        let w = SwitchingWindow::from_states(n, states).unwrap();
        let sum: f64 = w.shifted_samples().sum();
        let s = resync(&w);
        assert!((s.bins[0].re - sum).abs() <= 1e-10 * n as f64);
        assert!(s.bins[0].im.abs() <= 1e-10 * n as f64);
    }

    #[test]
    fn prefilled_window_has_requested_mean() {
        let w = SwitchingWindow::prefilled(2048, 0.25).unwrap();
        let ones = w.raw_states().filter(|&b| b).count();
        assert_eq!(ones, 512);
        let sum: f64 = w.shifted_samples().sum();
        assert!(sum.abs() < 1e-9);
    }

    #[test]
    fn random_window_is_seeded() {
        use rand::SeedableRng;
        let mut a = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let mut b = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let w1 = SwitchingWindow::random(4096, 0.25, &mut a).unwrap();
        let w2 = SwitchingWindow::random(4096, 0.25, &mut b).unwrap();
        assert_eq!(w1, w2);
        let ones = w1.raw_states().filter(|&x| x).count() as f64 / 4096.0;
        assert!((ones - 0.25).abs() < 0.03, "{ones}");
        assert!(w1.shifted_samples().all(|x| x == 0.75 || x == -0.25));
    }

    #[test]
    fn trailing_run_counts_last_state() {
        let w = SwitchingWindow::from_states(
            6,
            [false, true, false, true, true, true].map(|b| (b, 0.5)),
        )
        .unwrap();
        assert_eq!(w.trailing_run(), 3);
        assert_eq!(w.transition_count(), 3);
    }

    proptest! {
        #[test]
        fn transition_count_matches_recount(
            n in 2usize..40,
            bits in proptest::collection::vec(any::<bool>(), 0..300),
        ) {
            let mut w = SwitchingWindow::new(n).unwrap();
            for b in bits {
                w.push(b, 0.3);
                let raw: Vec<bool> = w.raw_states().collect();
                let recount = raw.windows(2).filter(|p| p[0] != p[1]).count();
                prop_assert_eq!(w.transition_count(), recount);
                prop_assert!(w.transition_count() < n);
            }
        }

        #[test]
        fn branching_is_bit_identical(
            seed in any::<u64>(),
            steps in 1usize..50,
        ) {
            let n = 32;
            let sv = make_shift_vector(n).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut w = SwitchingWindow::new(n).unwrap();
            let mut s = SpectrumState::zeros(n);
            for _ in 0..20 {
                commit(&mut s, &sv, &mut w, rng.random(), 0.4);
            }
            let (mut w2, mut s2) = (w.clone(), s.clone());
            for _ in 0..steps {
                let b: bool = rng.random();
                commit(&mut s, &sv, &mut w, b, 0.4);
                commit(&mut s2, &sv, &mut w2, b, 0.4);
            }
            prop_assert_eq!(s, s2);
        }

        #[test]
        fn slide_is_linear_on_halves(
            a in proptest::collection::vec(-8i32..8, 16),
            b in proptest::collection::vec(-8i32..8, 16),
            xa in -8i32..8,
            xb in -8i32..8,
        ) {
            let n = 16;
            let sv = make_shift_vector(n).unwrap();
            let to_spec = |v: &[i32]| SpectrumState {
                bins: v[..n / 2 + 1]
                    .iter()
                    .zip(&v[n / 2 - 1..])
                    .map(|(&re, &im)| Complex64::new(re as f64 * 0.5, im as f64 * 0.5))
                    .collect(),
                age: 0,
            };
            let (sa, sb) = (to_spec(&a), to_spec(&b));
            let sum = SpectrumState {
                bins: sa.bins.iter().zip(&sb.bins).map(|(p, q)| p + q).collect(),
                age: 0,
            };
            let (da, db) = (xa as f64 * 0.5, xb as f64 * 0.5);
            let mut ra = sa.bins.clone();
            sv.slide_in_place(&mut ra, da);
            let mut rb = sb.bins.clone();
            sv.slide_in_place(&mut rb, db);
            let mut rs = sum.bins.clone();
            sv.slide_in_place(&mut rs, da + db);
            for ((p, q), r) in ra.iter().zip(&rb).zip(&rs) {
                prop_assert!((p + q - r).norm() <= 1e-12);
            }
        }
    }
}
