//! Receding-horizon selection of the next switch state.
//!
//! Every control cycle all `2^M` switching paths over the horizon are scored
//! on the window as it would look at the end of the horizon. Paths share
//! prefixes, so the spectra form a binary tree: each tree edge is one slide
//! of the parent spectrum, `2^(M+1) - 2` slides per cycle in total. Only the
//! first bit of the cheapest feasible path is applied.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filter::{FilterWeights, ReferenceSpectrum};
use crate::spectrum::{self, shifted_value, EngineConfig, ShiftVector, SpectrumState, SwitchingWindow};

/// Largest supported prediction horizon.
pub const MAX_HORIZON: usize = 8;

/// Relative tolerance under which two path costs count as equal.
pub const TIE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Norm {
    #[serde(rename = "1")]
    L1,
    #[serde(rename = "2")]
    L2,
    #[serde(rename = "inf")]
    Inf,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostWeights {
    pub lambda1: f64,
    pub lambda2: f64,
    pub norm: Norm,
    /// Maximum number of consecutive cycles without a switching action;
    /// `None` disables the ripple constraint.
    pub k_max: Option<u32>,
}

impl CostWeights {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("lambda1", self.lambda1), ("lambda2", self.lambda2)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Config(format!("{name} must be >= 0, got {v}")));
            }
        }
        if self.k_max == Some(0) {
            return Err(Error::Config("k_max must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HorizonConfig {
    steps: usize,
}

impl HorizonConfig {
    pub fn new(steps: usize) -> Result<Self> {
        if !(1..=MAX_HORIZON).contains(&steps) {
            return Err(Error::Config(format!(
                "prediction horizon must be in 1..={MAX_HORIZON}, got {steps}"
            )));
        }
        Ok(Self { steps })
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn candidate_count(&self) -> usize {
        1 << self.steps
    }

    /// Tree edges, i.e. slides per cycle without pruning.
    pub fn node_count(&self) -> usize {
        (1 << (self.steps + 1)) - 2
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ControllerState {
    pub window: SwitchingWindow,
    pub spectrum: SpectrumState,
    /// Consecutive past cycles without a switching action.
    pub k_sw: u32,
    pub last_output: bool,
}

impl ControllerState {
    /// State for an existing window; the spectrum is computed directly.
    pub fn from_window(window: SwitchingWindow) -> Self {
        let spectrum = spectrum::resync(&window);
        let k_sw = (window.trailing_run() - 1) as u32;
        let last_output = window.newest_raw();
        Self {
            window,
            spectrum,
            k_sw,
            last_output,
        }
    }
}

/// Weighted spectral cost of a spectrum over bins `0..=N/2`.
///
/// Each bin contributes `w[n] * max(|X[n]| - target[n], 0)`; the terms are
/// combined with the 1-, 2- or max-norm. The 0 Hz target is always zero.
pub fn spectral_cost(
    spectrum: &SpectrumState,
    weights: &FilterWeights,
    reference: &ReferenceSpectrum,
    norm: Norm,
) -> f64 {
    let dc = weights.dc * spectrum.bins[0].norm();
    let terms = std::iter::once(dc).chain(
        spectrum.bins[1..]
            .iter()
            .zip(&weights.weights)
            .zip(&reference.targets)
            .map(|((b, w), t)| w * (b.norm() - t).max(0.0)),
    );
    match norm {
        Norm::L1 => terms.sum(),
        Norm::L2 => terms.map(|t| t * t).sum::<f64>().sqrt(),
        Norm::Inf => terms.fold(0.0, f64::max),
    }
}

/// Transition count of the window after appending `path` and expelling as
/// many of the oldest states.
pub fn switching_cost(window: &SwitchingWindow, path: &[bool]) -> usize {
    assert!(
        !path.is_empty() && path.len() < window.len(),
        "path length must be in 1..N"
    );
    let mut count = window.transition_count() - expelled_transitions(window, path.len());
    let mut prev = window.newest_raw();
    for &bit in path {
        count += usize::from(bit != prev);
        prev = bit;
    }
    count
}

fn expelled_transitions(window: &SwitchingWindow, m: usize) -> usize {
    (0..m)
        .filter(|&i| window.raw_at(i) != window.raw_at(i + 1))
        .count()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Feasibility {
    Feasible,
    /// The path holds the switch state for `k_max` cycles; a switching
    /// action is forced instead.
    Infeasible,
}

/// Checks a candidate path against the ripple constraint.
pub fn ripple_feasibility(
    k_sw: u32,
    path: &[bool],
    last_output: bool,
    k_max: Option<u32>,
) -> Feasibility {
    let Some(k_max) = k_max else {
        return Feasibility::Feasible;
    };
    let mut run = k_sw;
    let mut prev = last_output;
    for &bit in path {
        run = if bit == prev { run + 1 } else { 0 };
        if run >= k_max {
            return Feasibility::Infeasible;
        }
        prev = bit;
    }
    Feasibility::Feasible
}

/// How candidate subtrees are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Evaluation {
    #[default]
    Sequential,
    /// The two first-bit subtrees run on the rayon pool.
    Parallel,
}

/// Outcome of one candidate search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decision {
    pub output: bool,
    /// Lowest feasible path cost for first bit 0 and 1.
    pub best: [Option<f64>; 2],
    /// Slides performed, leaf evaluations included.
    pub slides: u64,
}

fn is_tie(a: f64, b: f64) -> bool {
    (a - b).abs() <= TIE_TOLERANCE * a.abs().max(b.abs())
}

/// Picks the first bit from the per-subtree minima. Equal costs keep the
/// previous output.
pub fn choose(best: [Option<f64>; 2], last_output: bool) -> bool {
    match best {
        [Some(a), Some(b)] => {
            if is_tie(a, b) {
                last_output
            } else {
                b < a
            }
        }
        [Some(_), None] => false,
        [None, Some(_)] => true,
        // unreachable: the always-toggling path is feasible
        [None, None] => !last_output,
    }
}

/// Spectral cost evaluator with per-norm fast paths.
#[derive(Debug, Clone)]
struct CostKernel {
    weights: Vec<f64>,
    squared: Vec<f64>,
    targets: Option<Vec<f64>>,
    norm: Norm,
}

impl CostKernel {
    fn new(filter: &FilterWeights, reference: &ReferenceSpectrum, norm: Norm) -> Self {
        let weights: Vec<f64> = std::iter::once(filter.dc).chain(filter.weights.iter().copied()).collect();
        Self {
            squared: weights.iter().map(|w| w * w).collect(),
            weights,
            targets: (!reference.is_zero())
                .then(|| std::iter::once(0.0).chain(reference.targets.iter().copied()).collect()),
            norm,
        }
    }

    /// Cost of the spectrum `src + delta` (delta added to every bin).
    ///
    /// The twiddle rotation of a slide does not change magnitudes, so a leaf
    /// is scored without applying it.
    #[inline]
    fn eval(&self, src: &[Complex64], delta: f64) -> f64 {
        let bins = src;
        let mag2 = |b: &Complex64| {
            let re = b.re + delta;
            re * re + b.im * b.im
        };
        if let Some(targets) = &self.targets {
            let terms = bins
                .iter()
                .zip(&self.weights)
                .zip(targets)
                .map(|((b, w), t)| w * (mag2(b).sqrt() - t).max(0.0));
            return match self.norm {
                Norm::L1 => terms.sum(),
                Norm::L2 => terms.map(|t| t * t).sum::<f64>().sqrt(),
                Norm::Inf => terms.fold(0.0, f64::max),
            };
        }
        match self.norm {
            Norm::L1 => bins
                .iter()
                .zip(&self.weights)
                .map(|(b, w)| w * mag2(b).sqrt())
                .sum(),
            Norm::L2 => bins
                .iter()
                .zip(&self.squared)
                .map(|(b, w2)| w2 * mag2(b))
                .sum::<f64>()
                .sqrt(),
            Norm::Inf => bins
                .iter()
                .zip(&self.squared)
                .map(|(b, w2)| w2 * mag2(b))
                .fold(0.0, f64::max)
                .sqrt(),
        }
    }
}

/// One candidate search over a fixed state.
struct Search<'a> {
    shift: &'a ShiftVector,
    kernel: &'a CostKernel,
    cw: CostWeights,
    depth: usize,
    /// Shifted value of a candidate state, indexed by the bit.
    candidate: [f64; 2],
    expelled: [f64; MAX_HORIZON],
    base_transitions: usize,
    k_sw: u32,
    last_raw: bool,
}

impl<'a> Search<'a> {
    fn new(
        shift: &'a ShiftVector,
        kernel: &'a CostKernel,
        state: &ControllerState,
        cw: CostWeights,
        depth: usize,
        duty_ref: f64,
    ) -> Self {
        let window = &state.window;
        let mut expelled = [0.0; MAX_HORIZON];
        for (j, e) in expelled.iter_mut().enumerate().take(depth) {
            *e = window.shifted_at(j);
        }
        Self {
            shift,
            kernel,
            cw,
            depth,
            candidate: [shifted_value(false, duty_ref), shifted_value(true, duty_ref)],
            expelled,
            base_transitions: window.transition_count() - expelled_transitions(window, depth),
            k_sw: state.k_sw,
            last_raw: window.newest_raw(),
        }
    }

    fn scratch(&self, bins: usize) -> Vec<Vec<Complex64>> {
        vec![vec![Complex64::new(0.0, 0.0); bins]; self.depth.saturating_sub(1)]
    }

    /// Minimum feasible cost over paths starting with `first`, plus the
    /// number of slides spent.
    fn subtree(
        &self,
        root: &[Complex64],
        first: bool,
        bufs: &mut [Vec<Complex64>],
    ) -> (Option<f64>, u64) {
        let mut slides = 0;
        let best = self.visit(
            root,
            0,
            first,
            self.last_raw,
            self.k_sw,
            self.base_transitions,
            bufs,
            &mut slides,
        );
        (best, slides)
    }

    #[allow(clippy::too_many_arguments)]
    fn visit(
        &self,
        src: &[Complex64],
        level: usize,
        bit: bool,
        prev: bool,
        run: u32,
        transitions: usize,
        bufs: &mut [Vec<Complex64>],
        slides: &mut u64,
    ) -> Option<f64> {
        let run = if bit == prev { run + 1 } else { 0 };
        if self.cw.k_max.is_some_and(|k| run >= k) {
            return None;
        }
        let transitions = transitions + usize::from(bit != prev);
        let delta = self.candidate[usize::from(bit)] - self.expelled[level];
        *slides += 1;

        if level + 1 == self.depth {
            let spectral = if self.cw.lambda1 == 0.0 {
                0.0
            } else {
                self.cw.lambda1 * self.kernel.eval(src, delta)
            };
            return Some(spectral + self.cw.lambda2 * transitions as f64);
        }

        let (buf, rest) = bufs.split_first_mut().expect("scratch depth");
        self.shift.slide_into(src, delta, buf);
        let a = self.visit(buf, level + 1, false, bit, run, transitions, rest, slides);
        let b = self.visit(buf, level + 1, true, bit, run, transitions, rest, slides);
        match (a, b) {
            (Some(x), Some(y)) => Some(x.min(y)),
            (x, y) => x.or(y),
        }
    }

    fn run(&self, root: &[Complex64], mode: Evaluation, bufs: &mut [Vec<Complex64>]) -> ([Option<f64>; 2], u64) {
        match mode {
            Evaluation::Sequential => {
                let (a, sa) = self.subtree(root, false, bufs);
                let (b, sb) = self.subtree(root, true, bufs);
                ([a, b], sa + sb)
            }
            Evaluation::Parallel => {
                let bins = root.len();
                let ((a, sa), (b, sb)) = rayon::join(
                    || self.subtree(root, false, &mut self.scratch(bins)),
                    || self.subtree(root, true, &mut self.scratch(bins)),
                );
                ([a, b], sa + sb)
            }
        }
    }
}

/// Chooses the next switch state for `state` without modifying it.
pub fn evaluate_candidates(
    state: &ControllerState,
    filter: &FilterWeights,
    reference: &ReferenceSpectrum,
    cw: CostWeights,
    horizon: HorizonConfig,
    duty_ref: f64,
) -> Decision {
    let n = state.window.len();
    let shift = ShiftVector::new(n).expect("window length validated");
    let kernel = CostKernel::new(filter, reference, cw.norm);
    let search = Search::new(&shift, &kernel, state, cw, horizon.steps(), duty_ref);
    let mut bufs = search.scratch(n / 2 + 1);
    let (best, slides) = search.run(&state.spectrum.bins, Evaluation::Sequential, &mut bufs);
    Decision {
        output: choose(best, state.last_output),
        best,
        slides,
    }
}

/// Running totals kept by the controller.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ControllerStats {
    pub steps: u64,
    pub slides: u64,
    pub resyncs: u64,
}

/// Stateful predictive spectral controller.
#[derive(Debug, Clone)]
pub struct PredictiveController {
    config: EngineConfig,
    shift: ShiftVector,
    state: ControllerState,
    weights: CostWeights,
    horizon: HorizonConfig,
    filter: FilterWeights,
    reference: ReferenceSpectrum,
    kernel: CostKernel,
    bufs: Vec<Vec<Complex64>>,
    mode: Evaluation,
    stats: ControllerStats,
}

impl PredictiveController {
    pub fn new(
        config: EngineConfig,
        window: SwitchingWindow,
        filter: FilterWeights,
        reference: ReferenceSpectrum,
        weights: CostWeights,
        horizon: HorizonConfig,
    ) -> Result<Self> {
        config.validate()?;
        weights.validate()?;
        let n = config.window;
        if window.len() != n {
            return Err(Error::Config(format!(
                "window holds {} samples, expected {n}",
                window.len()
            )));
        }
        if horizon.steps() >= n {
            return Err(Error::Config(format!(
                "horizon {} must be shorter than the window {n}",
                horizon.steps()
            )));
        }
        check_lengths(n, &filter, &reference)?;
        let kernel = CostKernel::new(&filter, &reference, weights.norm);
        Ok(Self {
            config,
            shift: ShiftVector::new(n)?,
            state: ControllerState::from_window(window),
            weights,
            horizon,
            filter,
            reference,
            kernel,
            bufs: vec![vec![Complex64::new(0.0, 0.0); n / 2 + 1]; horizon.steps() - 1],
            mode: Evaluation::Sequential,
            stats: ControllerStats::default(),
        })
    }

    pub fn with_evaluation(mut self, mode: Evaluation) -> Self {
        self.mode = mode;
        self
    }

    pub fn state(&self) -> &ControllerState {
        &self.state
    }

    pub fn stats(&self) -> ControllerStats {
        self.stats
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    pub fn weights(&self) -> CostWeights {
        self.weights
    }

    pub fn filter(&self) -> &FilterWeights {
        &self.filter
    }

    pub fn reference(&self) -> &ReferenceSpectrum {
        &self.reference
    }

    pub fn set_filter(&mut self, filter: FilterWeights) -> Result<()> {
        check_lengths(self.config.window, &filter, &self.reference)?;
        self.kernel = CostKernel::new(&filter, &self.reference, self.weights.norm);
        self.filter = filter;
        Ok(())
    }

    pub fn set_reference(&mut self, reference: ReferenceSpectrum) -> Result<()> {
        check_lengths(self.config.window, &self.filter, &reference)?;
        self.kernel = CostKernel::new(&self.filter, &reference, self.weights.norm);
        self.reference = reference;
        Ok(())
    }

    pub fn set_weights(&mut self, weights: CostWeights) -> Result<()> {
        weights.validate()?;
        self.kernel = CostKernel::new(&self.filter, &self.reference, weights.norm);
        self.weights = weights;
        Ok(())
    }

    /// Runs the candidate search without committing anything.
    pub fn decide(&mut self, duty_ref: f64) -> Decision {
        let search = Search::new(
            &self.shift,
            &self.kernel,
            &self.state,
            self.weights,
            self.horizon.steps(),
            duty_ref,
        );
        let (best, slides) = search.run(&self.state.spectrum.bins, self.mode, &mut self.bufs);
        Decision {
            output: choose(best, self.state.last_output),
            best,
            slides,
        }
    }

    /// One control cycle: search, commit the chosen state and return it.
    pub fn step(&mut self, duty_ref: f64) -> bool {
        let decision = self.decide(duty_ref);
        self.stats.slides += decision.slides;
        self.commit(decision.output, duty_ref);
        decision.output
    }

    /// Inserts `bit` into the window and spectrum and updates the
    /// non-switching counter.
    pub fn commit(&mut self, bit: bool, duty_ref: f64) {
        let st = &mut self.state;
        spectrum::commit(&mut st.spectrum, &self.shift, &mut st.window, bit, duty_ref);
        st.k_sw = if bit == st.last_output { st.k_sw + 1 } else { 0 };
        st.last_output = bit;
        self.stats.steps += 1;
        if st.spectrum.age >= self.config.resync_interval {
            st.spectrum = spectrum::resync(&st.window);
            self.stats.resyncs += 1;
        }
    }
}

fn check_lengths(n: usize, filter: &FilterWeights, reference: &ReferenceSpectrum) -> Result<()> {
    if filter.len() != n / 2 || reference.targets.len() != n / 2 {
        return Err(Error::Config(format!(
            "filter ({}) and reference ({}) must have {} bins",
            filter.len(),
            reference.targets.len(),
            n / 2
        )));
    }
    Ok(())
}
