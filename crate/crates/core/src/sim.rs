//! Closed-loop runs: measure, PI, predictive controller, plant.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;

use crate::analysis::{
    self, as_levels, Band, PowerSpectrum, RippleStats, SfdrConfig, SfdrReference, WelchConfig,
};
use crate::controller::{Evaluation, HorizonConfig, PredictiveController};
use crate::error::{Error, Result};
use crate::filter::{FilterSpec, GapRamp};
use crate::pi::{PiController, PiParams};
use crate::plant::{DiscretePlant, PlantParams, PlantState};
use crate::pwm::{pwm_baseline, PwmConfig, PwmRun};
use crate::scenario::{EventSpec, InitialState, Prefill, Scenario};
use crate::spectrum::SwitchingWindow;

/// Per-cycle recordings of a run.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Traces {
    /// Chosen switch state of each control period.
    pub switch: Vec<bool>,
    /// Capacitor voltage at the end of each period, V.
    pub vc: Vec<f64>,
    /// Inductor current at the end of each period, A.
    pub il: Vec<f64>,
    /// Duty reference handed to the controller.
    pub duty: Vec<f64>,
}

impl Traces {
    pub fn len(&self) -> usize {
        self.switch.len()
    }

    pub fn is_empty(&self) -> bool {
        self.switch.is_empty()
    }
}

/// The controller's own spectrum magnitudes at one instant.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Snapshot {
    pub time: f64,
    pub magnitudes: Vec<f64>,
}

/// The PWM comparison run.
#[derive(Debug, Clone, PartialEq)]
pub struct Baseline {
    pub duty: f64,
    pub frequency: f64,
    pub run: PwmRun,
}

#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub scenario: Scenario,
    pub traces: Traces,
    pub snapshots: Vec<Snapshot>,
    pub baseline: Option<Baseline>,
    /// Gap centers in effect, as `(time, gap index, center)` whenever one
    /// changed.
    pub gap_history: Vec<(f64, usize, f64)>,
    pub slides: u64,
    pub resyncs: u64,
}

struct ActiveRamp {
    ramp: GapRamp,
    compiled: f64,
}

/// Runs a validated scenario.
pub fn run_scenario(scenario: &Scenario) -> Result<RunArtifacts> {
    let problems = scenario.validate();
    if !problems.is_empty() {
        let text: Vec<String> = problems.iter().map(ToString::to_string).collect();
        return Err(Error::Config(text.join("; ")));
    }
    let c = &scenario.control;
    let fc = c.fc;
    let n = c.window;
    let mut params = scenario.plant_params();
    let vref = scenario.plant.vref;
    let mut plant = DiscretePlant::new(params)?;

    let mut pi_params = PiParams::design(&params, fc, vref);
    if let Some(kp) = scenario.pi.kp {
        pi_params.kp = kp;
    }
    if let Some(ki) = scenario.pi.ki {
        pi_params.ki = ki;
    }
    if let Some(bias) = scenario.pi.bias {
        pi_params.bias = bias;
    }
    let mut pi = PiController::new(pi_params);

    let (mut state, start_duty) = match scenario.plant.initial {
        InitialState::Equilibrium => {
            let d = params.equilibrium_duty(vref).clamp(0.0, 1.0);
            pi.preset(d);
            (params.equilibrium(vref), d)
        }
        InitialState::Zero => (PlantState::default(), 0.0),
    };

    let mut spec = scenario.filter_spec();
    let weights = spec.compile(n, fc)?;
    let base_reference = scenario
        .reference
        .build(n, fc, params.equilibrium_duty(vref).clamp(0.0, 1.0))?;
    let reference = base_reference.notched(&spec, n, fc);
    let mut rng = ChaCha8Rng::seed_from_u64(scenario.seed);
    let window = match c.prefill {
        Prefill::SigmaDelta => SwitchingWindow::prefilled(n, start_duty)?,
        Prefill::Random => SwitchingWindow::random(n, start_duty, &mut rng)?,
    };
    let mode = if c.parallel {
        Evaluation::Parallel
    } else {
        Evaluation::Sequential
    };
    let mut controller = PredictiveController::new(
        c.engine(),
        window,
        weights,
        reference,
        c.weights(),
        HorizonConfig::new(c.horizon)?,
    )?
    .with_evaluation(mode);

    let steps = scenario.steps();
    let dt = 1.0 / fc;
    let mut traces = Traces {
        switch: Vec::with_capacity(steps),
        vc: Vec::with_capacity(steps),
        il: Vec::with_capacity(steps),
        duty: Vec::with_capacity(steps),
    };
    let mut gap_history: Vec<(f64, usize, f64)> =
        spec.gaps.iter().enumerate().map(|(i, g)| (0.0, i, g.center)).collect();
    let mut ramps: Vec<ActiveRamp> = Vec::new();
    let recompile_step = fc / n as f64 / 8.0;

    let jitter = if scenario.plant.load_jitter > 0.0 {
        Some(Normal::new(0.0, scenario.plant.load_jitter).map_err(|e| Error::Config(e.to_string()))?)
    } else {
        None
    };

    let snapshot_every = scenario
        .analysis
        .snapshot_interval
        .map(|s| ((s * fc).round() as usize).max(1));
    let mut snapshots = Vec::new();
    let mut next_event = 0;

    for k in 0..steps {
        let t = k as f64 * dt;
        while next_event < scenario.events.len() && scenario.events[next_event].time() <= t + 0.5 * dt {
            match scenario.events[next_event] {
                EventSpec::LoadStep { load, .. } => {
                    params.load = load;
                    plant = DiscretePlant::new(params)?;
                    log::debug!("t={t:.6}: load {load:?}");
                }
                EventSpec::GapMove { gap, center, rate, .. } => {
                    ramps.retain(|r| r.ramp.gap != gap);
                    match rate {
                        None => {
                            spec = spec.move_gap(gap, center, fc)?;
                            controller.set_filter(spec.compile(n, fc)?)?;
                            controller.set_reference(base_reference.notched(&spec, n, fc))?;
                            gap_history.push((t, gap, center));
                        }
                        Some(rate) => {
                            let from = spec.gaps[gap].center;
                            ramps.push(ActiveRamp {
                                ramp: GapRamp {
                                    gap,
                                    from,
                                    to: center,
                                    start: t,
                                    rate,
                                },
                                compiled: from,
                            });
                        }
                    }
                }
                EventSpec::Weights { lambda1, lambda2, .. } => {
                    let mut w = controller.weights();
                    w.lambda1 = lambda1.unwrap_or(w.lambda1);
                    w.lambda2 = lambda2.unwrap_or(w.lambda2);
                    controller.set_weights(w)?;
                }
                EventSpec::KMax { k_max, .. } => {
                    let mut w = controller.weights();
                    w.k_max = k_max.0;
                    controller.set_weights(w)?;
                }
            }
            next_event += 1;
        }
        if !ramps.is_empty() {
            let mut changed = false;
            for r in &mut ramps {
                let center = r.ramp.center_at(t);
                let done = t >= r.ramp.start + r.ramp.duration();
                if (center - r.compiled).abs() >= recompile_step || (done && center != r.compiled) {
                    spec = spec.move_gap(r.ramp.gap, center, fc)?;
                    r.compiled = center;
                    gap_history.push((t, r.ramp.gap, center));
                    changed = true;
                }
            }
            ramps.retain(|r| t < r.ramp.start + r.ramp.duration());
            if changed {
                controller.set_filter(spec.compile(n, fc)?)?;
                controller.set_reference(base_reference.notched(&spec, n, fc))?;
            }
        }

        let duty = pi.step(vref, state.vc);
        let bit = controller.step(duty);
        state = match &jitter {
            Some(dist) => plant.step_with(state, bit, dist.sample(&mut rng)),
            None => plant.step(state, bit),
        };
        traces.switch.push(bit);
        traces.vc.push(state.vc);
        traces.il.push(state.il);
        traces.duty.push(duty);
        if snapshot_every.is_some_and(|every| (k + 1) % every == 0) {
            snapshots.push(Snapshot {
                time: (k + 1) as f64 * dt,
                magnitudes: controller.state().spectrum.magnitudes().collect(),
            });
        }
    }

    let baseline = if scenario.baseline.enabled && steps > 0 {
        Some(run_baseline(scenario, &traces)?)
    } else {
        None
    };
    let stats = controller.stats();
    Ok(RunArtifacts {
        scenario: scenario.clone(),
        traces,
        snapshots,
        baseline,
        gap_history,
        slides: stats.slides,
        resyncs: stats.resyncs,
    })
}

/// PWM at the run's steady-state duty and average switching frequency
/// unless the scenario pins them.
fn run_baseline(scenario: &Scenario, traces: &Traces) -> Result<Baseline> {
    let fc = scenario.control.fc;
    let fraction = scenario.analysis.steady_state_fraction;
    let skip = steady_start(traces.len(), fraction);
    let duty = scenario.baseline.duty.unwrap_or_else(|| {
        let tail = &traces.duty[skip..];
        tail.iter().sum::<f64>() / tail.len().max(1) as f64
    });
    let frequency = match scenario.baseline.frequency {
        Some(f) => f,
        None => {
            let tail = &traces.switch[skip..];
            analysis::avg_switching_frequency(tail, tail.len().max(1) as f64 / fc)
        }
    };
    if frequency <= 0.0 {
        return Err(Error::Config("run never switched; set baseline.frequency".into()));
    }
    let params = scenario.plant_params();
    let initial = match scenario.plant.initial {
        InitialState::Equilibrium => params.equilibrium(scenario.plant.vref),
        InitialState::Zero => PlantState::default(),
    };
    let run = pwm_baseline(
        &PwmConfig {
            duty,
            frequency,
            duration: scenario.duration,
            oversample: scenario.baseline.oversample,
        },
        &params,
        initial,
    )?;
    Ok(Baseline { duty, frequency, run })
}

pub fn steady_start(len: usize, fraction: f64) -> usize {
    ((len as f64) * fraction.clamp(0.0, 1.0)).round() as usize
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapMetric {
    pub index: usize,
    pub center: f64,
    pub width: f64,
    pub depth_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumMetrics {
    /// DC component against the largest spur.
    pub sfdr_db: f64,
    /// Largest against second-largest spur.
    pub sfdr_peak_to_peak_db: f64,
    pub max_peak_db: f64,
    pub max_peak_frequency: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BaselineMetrics {
    pub duty: f64,
    pub frequency: f64,
    pub mean_vc: f64,
    pub avg_switching_frequency: f64,
    pub ripple: RippleStats,
    pub spectrum: SpectrumMetrics,
    /// Baseline largest spur minus the run's largest spur.
    pub peak_reduction_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LoadStepMetrics {
    pub time: f64,
    pub mean_vc_before: f64,
    pub mean_vc_after: f64,
    /// Time from the step until the moving mean stays inside the band.
    pub settle_time: Option<f64>,
    pub gap_depth_before_db: Vec<f64>,
    pub gap_depth_after_db: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MovingGapMetrics {
    pub gap: usize,
    pub columns: usize,
    pub min_depth_db: f64,
    pub mean_depth_db: f64,
    pub first_center: f64,
    pub last_center: f64,
    /// Per column: `(time, commanded center, depth)`.
    pub track: Vec<(f64, f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunMetrics {
    pub name: String,
    pub seed: u64,
    pub steps: usize,
    pub fc: f64,
    pub mean_vc: f64,
    pub avg_switching_frequency: f64,
    pub ripple: RippleStats,
    /// Longest run of identical consecutive switch states.
    pub max_run_length: usize,
    /// Runs longer than the `K_max` in effect.
    pub k_max_violations: usize,
    pub spectrum: Option<SpectrumMetrics>,
    /// DC-normalized power of all non-DC bins up to `fc/2`.
    pub distortion_power: Option<f64>,
    /// Mean squared weighted excess over the reference, per window.
    pub filtered_distortion_power: Option<f64>,
    pub gaps: Vec<GapMetric>,
    pub baseline: Option<BaselineMetrics>,
    pub load_step: Option<LoadStepMetrics>,
    pub moving_gap: Option<MovingGapMetrics>,
    pub slides: u64,
    pub resyncs: u64,
}

fn mean(x: &[f64]) -> f64 {
    if x.is_empty() {
        f64::NAN
    } else {
        x.iter().sum::<f64>() / x.len() as f64
    }
}

fn spectrum_metrics(s: &PowerSpectrum, neighborhood: usize) -> Option<SpectrumMetrics> {
    let dc = SfdrConfig {
        reference: SfdrReference::Dc,
        neighborhood,
    };
    let pp = SfdrConfig {
        reference: SfdrReference::LargestPeak,
        neighborhood,
    };
    let (f, db) = analysis::max_peak(s);
    Some(SpectrumMetrics {
        sfdr_db: analysis::sfdr(s, &dc).ok()?,
        sfdr_peak_to_peak_db: analysis::sfdr(s, &pp).unwrap_or(f64::NAN),
        max_peak_db: db,
        max_peak_frequency: f,
    })
}

/// Welch spectrum of the switch trace at the control rate.
pub fn switch_spectrum(scenario: &Scenario, switch: &[bool]) -> Result<PowerSpectrum> {
    let cfg = WelchConfig {
        overlap: scenario.analysis.overlap,
        ..WelchConfig::hann(scenario.segment())
    };
    analysis::welch_spectrum(&as_levels(switch), scenario.control.fc, &cfg)
}

/// Welch spectrum of the baseline at equal bin width.
pub fn baseline_spectrum(scenario: &Scenario, baseline: &Baseline) -> Result<PowerSpectrum> {
    let cfg = WelchConfig {
        overlap: scenario.analysis.overlap,
        ..WelchConfig::hann(scenario.segment() * scenario.baseline.oversample)
    };
    analysis::welch_spectrum(&as_levels(&baseline.run.switch), baseline.run.sample_rate, &cfg)
}

fn gap_depths(scenario: &Scenario, spec: &FilterSpec, s: &PowerSpectrum) -> Vec<GapMetric> {
    spec.gaps
        .iter()
        .enumerate()
        .filter_map(|(index, g)| {
            let (gap, flanks) = Band::with_flanks(g.lo(), g.hi(), scenario.analysis.gap_flank);
            analysis::gap_depth(s, gap, &flanks).ok().map(|depth_db| GapMetric {
                index,
                center: g.center,
                width: g.width,
                depth_db,
            })
        })
        .collect()
}

fn run_lengths(switch: &[bool]) -> impl Iterator<Item = (usize, usize)> + '_ {
    // (start index, length)
    let mut start = 0;
    std::iter::from_fn(move || {
        if start >= switch.len() {
            return None;
        }
        let v = switch[start];
        let len = switch[start..].iter().take_while(|&&b| b == v).count();
        let out = (start, len);
        start += len;
        Some(out)
    })
}

/// `K_max` in effect at step `k`.
fn k_max_at(scenario: &Scenario, k: usize) -> Option<u32> {
    let t = k as f64 / scenario.control.fc;
    let mut current = scenario.control.k_max.0;
    for ev in &scenario.events {
        if let EventSpec::KMax { time, k_max } = ev {
            if *time <= t {
                current = k_max.0;
            }
        }
    }
    current
}

/// Runs longer than the `K_max` in effect; the run that was in progress at
/// t=0 is exempt.
fn count_violations(scenario: &Scenario, switch: &[bool]) -> usize {
    run_lengths(switch)
        .filter(|&(start, _)| start > 0)
        .filter(|&(start, len)| {
            (start..start + len).any(|k| {
                k_max_at(scenario, k).is_some_and(|km| k - start + 1 > km as usize)
            })
        })
        .count()
}

/// Computes all metrics of a finished run.
pub fn analyze(artifacts: &RunArtifacts) -> Result<RunMetrics> {
    let sc = &artifacts.scenario;
    let tr = &artifacts.traces;
    let fc = sc.control.fc;
    let a = &sc.analysis;
    let skip = steady_start(tr.len(), a.steady_state_fraction);
    let switch_ss = &tr.switch[skip..];
    let vc_ss = &tr.vc[skip..];
    let duration_ss = switch_ss.len() as f64 / fc;

    let baseline_vc_ss: Option<&[f64]> = artifacts.baseline.as_ref().map(|b| {
        let skip_b = steady_start(b.run.vc.len(), a.steady_state_fraction);
        &b.run.vc[skip_b..]
    });

    let spectrum = if switch_ss.len() >= sc.segment() {
        Some(switch_spectrum(sc, switch_ss)?)
    } else {
        None
    };
    let spectrum_m = spectrum.as_ref().and_then(|s| spectrum_metrics(s, a.sfdr_neighborhood));

    let mut final_spec = sc.filter_spec();
    for &(_, gap, center) in &artifacts.gap_history {
        final_spec.gaps[gap].center = center;
    }
    let gaps = match &spectrum {
        Some(s) if !moving(sc) => gap_depths(sc, &final_spec, s),
        _ => Vec::new(),
    };

    let filtered = if switch_ss.len() >= sc.control.window {
        let n = sc.control.window;
        let weights = sc.filter_spec().compile(n, fc)?;
        let params = sc.plant_params();
        let reference = sc.reference.build(n, fc, params.equilibrium_duty(sc.plant.vref).clamp(0.0, 1.0))?;
        Some(analysis::filtered_distortion_power(switch_ss, n, n / 4, &weights, &reference)?)
    } else {
        None
    };
    let distortion = match &spectrum {
        Some(s) => Some(analysis::distortion_power(s, Band::new(0.0, fc / 2.0))?),
        None => None,
    };

    let baseline = match &artifacts.baseline {
        Some(b) => {
            let s = baseline_spectrum(sc, b)?;
            let bm = spectrum_metrics(&s, a.sfdr_neighborhood);
            let skip_b = steady_start(b.run.switch.len(), a.steady_state_fraction);
            let vc_b = &b.run.vc[skip_b..];
            let sw_b = &b.run.switch[skip_b..];
            bm.map(|spectrum| BaselineMetrics {
                duty: b.duty,
                frequency: b.frequency,
                mean_vc: mean(vc_b),
                avg_switching_frequency: analysis::avg_switching_frequency(
                    sw_b,
                    sw_b.len() as f64 / b.run.sample_rate,
                ),
                ripple: analysis::ripple_stats(vc_b, None),
                peak_reduction_db: spectrum_m
                    .as_ref()
                    .map_or(f64::NAN, |m| spectrum.max_peak_db - m.max_peak_db),
                spectrum,
            })
        }
        None => None,
    };

    let load_step = load_step_metrics(artifacts)?;
    let moving_gap = moving_gap_metrics(artifacts)?;

    Ok(RunMetrics {
        name: sc.name.clone(),
        seed: sc.seed,
        steps: tr.len(),
        fc,
        mean_vc: mean(vc_ss),
        avg_switching_frequency: if duration_ss > 0.0 {
            analysis::avg_switching_frequency(switch_ss, duration_ss)
        } else {
            0.0
        },
        ripple: analysis::ripple_stats(vc_ss, baseline_vc_ss),
        max_run_length: run_lengths(&tr.switch).map(|(_, l)| l).max().unwrap_or(0),
        k_max_violations: count_violations(sc, &tr.switch),
        spectrum: spectrum_m,
        distortion_power: distortion,
        filtered_distortion_power: filtered,
        gaps,
        baseline,
        load_step,
        moving_gap,
        slides: artifacts.slides,
        resyncs: artifacts.resyncs,
    })
}

fn moving(sc: &Scenario) -> bool {
    sc.events.iter().any(|e| matches!(e, EventSpec::GapMove { rate: Some(_), .. }))
}

fn load_step_metrics(artifacts: &RunArtifacts) -> Result<Option<LoadStepMetrics>> {
    let sc = &artifacts.scenario;
    let Some(time) = sc.events.iter().find_map(|e| match e {
        EventSpec::LoadStep { time, .. } => Some(*time),
        _ => None,
    }) else {
        return Ok(None);
    };
    let tr = &artifacts.traces;
    let fc = sc.control.fc;
    let a = &sc.analysis;
    let step_k = (time * fc).round() as usize;
    if step_k == 0 || step_k >= tr.len() {
        return Ok(None);
    }
    let default_len = tr.len() - step_k;
    let len = a
        .step_window
        .map_or(default_len, |w| (w * fc).round() as usize)
        .min(step_k)
        .min(tr.len() - step_k);
    let before = step_k - len..step_k;
    let after = tr.len() - len..tr.len();

    let vref = sc.plant.vref;
    let w = ((a.settle_window * fc).round() as usize).max(1);
    let tol = a.settle_tolerance * vref;
    // moving mean over `w` samples ending at each index after the step
    let mut settle = None;
    if tr.len() >= step_k + w {
        let mut sums = Vec::with_capacity(tr.len() - step_k);
        let mut acc: f64 = tr.vc[step_k..step_k + w].iter().sum();
        sums.push(acc);
        for k in step_k + w..tr.len() {
            acc += tr.vc[k] - tr.vc[k - w];
            sums.push(acc);
        }
        let mut last_bad = None;
        for (i, s) in sums.iter().enumerate() {
            if (s / w as f64 - vref).abs() > tol {
                last_bad = Some(i);
            }
        }
        settle = match last_bad {
            None => Some(w as f64 / fc),
            Some(i) if i + 1 < sums.len() => Some((i + 1 + w) as f64 / fc),
            Some(_) => None,
        };
    }

    let mut spec = sc.filter_spec();
    for &(t, gap, center) in &artifacts.gap_history {
        if t <= time {
            spec.gaps[gap].center = center;
        }
    }
    let depth = |range: std::ops::Range<usize>| -> Result<Vec<f64>> {
        if range.len() < sc.segment() {
            return Ok(Vec::new());
        }
        let s = switch_spectrum(sc, &tr.switch[range])?;
        Ok(gap_depths(sc, &spec, &s).into_iter().map(|g| g.depth_db).collect())
    };
    Ok(Some(LoadStepMetrics {
        time,
        mean_vc_before: mean(&tr.vc[before.clone()]),
        mean_vc_after: mean(&tr.vc[after.clone()]),
        settle_time: settle,
        gap_depth_before_db: depth(before)?,
        gap_depth_after_db: depth(after)?,
    }))
}

/// Commanded center of `gap` at time `t` from the recorded history.
fn center_at(history: &[(f64, usize, f64)], gap: usize, t: f64) -> Option<f64> {
    history
        .iter()
        .filter(|&&(time, g, _)| g == gap && time <= t)
        .map(|&(_, _, c)| c)
        .next_back()
}

fn moving_gap_metrics(artifacts: &RunArtifacts) -> Result<Option<MovingGapMetrics>> {
    let sc = &artifacts.scenario;
    let Some((gap, start)) = sc.events.iter().find_map(|e| match e {
        EventSpec::GapMove { gap, rate: Some(_), time, .. } => Some((*gap, *time)),
        _ => None,
    }) else {
        return Ok(None);
    };
    let tr = &artifacts.traces;
    let fc = sc.control.fc;
    let a = &sc.analysis;
    let window = a.spectrogram_window.unwrap_or(sc.control.window);
    let hop = a.spectrogram_hop.unwrap_or(window);
    if tr.len() < window {
        return Ok(None);
    }
    let sg = analysis::spectrogram(&as_levels(&tr.switch), fc, window, hop)?;
    let width = sc.filter.gaps[gap].width;
    let mut track = Vec::with_capacity(sg.times.len());
    let half = window as f64 / fc / 2.0;
    for (c, &t) in sg.times.iter().enumerate() {
        // columns reaching back before the move began show the start-up
        if t - half < start {
            continue;
        }
        // the column covers [t - T/2, t + T/2]; use the center in effect
        // at its midpoint
        let center = center_at(&artifacts.gap_history, gap, t).unwrap_or(sc.filter.gaps[gap].center);
        let (band, flanks) = Band::with_flanks(center - width / 2.0, center + width / 2.0, a.gap_flank);
        let depth = analysis::gap_depth(&sg.column(c), band, &flanks)?;
        track.push((t, center, depth));
    }
    let depths: Vec<f64> = track.iter().map(|x| x.2).collect();
    Ok(Some(MovingGapMetrics {
        gap,
        columns: track.len(),
        min_depth_db: depths.iter().copied().fold(f64::INFINITY, f64::min),
        mean_depth_db: mean(&depths),
        first_center: track.first().map_or(f64::NAN, |x| x.1),
        last_center: track.last().map_or(f64::NAN, |x| x.1),
        track,
    }))
}

/// Peak-to-peak capacitor ripple expected when the longest interval without
/// a switching action is `k_max` periods at duty `duty`.
///
/// Uses the buck ripple `(1 - D) V T^2 / (8 L C)` with the switching period
/// `T` implied by the longer of the two phases lasting `k_max` periods.
pub fn ripple_bound(params: &PlantParams, vout: f64, k_max: u32, duty: f64) -> f64 {
    let d = duty.clamp(1e-6, 1.0 - 1e-6);
    let t = k_max as f64 * params.dt / d.min(1.0 - d);
    (1.0 - d) * vout * t * t / (8.0 * params.inductance * params.capacitance)
}

/// True when the load is a constant resistance or current.
pub fn constant_load(sc: &Scenario) -> bool {
    sc.plant.load_jitter == 0.0 && !sc.events.iter().any(|e| matches!(e, EventSpec::LoadStep { .. }))
}
