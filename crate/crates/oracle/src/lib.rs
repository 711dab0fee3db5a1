//! Slow reference implementations for the test suite.
//!
//! Nothing here is fast or clever on purpose: a textbook DFT, exhaustive
//! enumeration of every switching path, a sub-stepped RK4 plant and a plain
//! transition count. The library never calls into this crate.

use std::f64::consts::PI;

use num_complex::Complex64;

use spectral_mpc::controller::{ControllerState, CostWeights, Norm, TIE_TOLERANCE};
use spectral_mpc::filter::{FilterWeights, ReferenceSpectrum};
use spectral_mpc::plant::{PlantParams, PlantState};

/// All `N` bins of `X[k] = sum_i x[i] exp(-j 2 pi k i / N)`.
pub fn direct_dft(window: &[f64]) -> Vec<Complex64> {
    let n = window.len();
    (0..n)
        .map(|k| {
            let mut re = 0.0;
            let mut im = 0.0;
            for (i, &x) in window.iter().enumerate() {
                let angle = 2.0 * PI * (k as f64) * (i as f64) / (n as f64);
                re += x * angle.cos();
                im -= x * angle.sin();
            }
            Complex64::new(re, im)
        })
        .collect()
}

/// Number of adjacent unequal pairs.
pub fn count_transitions(states: &[bool]) -> usize {
    let mut count = 0;
    for i in 1..states.len() {
        if states[i] != states[i - 1] {
            count += 1;
        }
    }
    count
}

fn shifted(raw: bool, duty: f64) -> f64 {
    let d = if duty.is_nan() { 0.0 } else { duty.clamp(0.0, 1.0) };
    if raw {
        1.0 - d
    } else {
        -d
    }
}

/// Weighted excess cost of a full-length spectrum, bins `0..=N/2`.
fn path_spectral_cost(bins: &[Complex64], filter: &FilterWeights, reference: &ReferenceSpectrum, norm: Norm) -> f64 {
    let half = bins.len() / 2;
    let mut terms = Vec::with_capacity(half + 1);
    for (k, bin) in bins.iter().enumerate().take(half + 1) {
        let (w, t) = if k == 0 {
            (filter.dc, 0.0)
        } else {
            (filter.weights[k - 1], reference.targets[k - 1])
        };
        let excess = bin.norm() - t;
        terms.push(if excess > 0.0 { w * excess } else { 0.0 });
    }
    match norm {
        Norm::L1 => terms.iter().sum(),
        Norm::L2 => terms.iter().map(|t| t * t).sum::<f64>().sqrt(),
        Norm::Inf => terms.iter().fold(0.0, |a, &b| if b > a { b } else { a }),
    }
}

/// True if holding rules allow `path` after `k_sw` cycles without a switch.
fn path_feasible(k_sw: u32, last: bool, path: &[bool], k_max: Option<u32>) -> bool {
    let Some(k_max) = k_max else {
        return true;
    };
    let mut held = k_sw;
    let mut prev = last;
    for &bit in path {
        if bit == prev {
            held += 1;
            if held >= k_max {
                return false;
            }
        } else {
            held = 0;
        }
        prev = bit;
    }
    true
}

/// Cost of every path of length `horizon`, `None` where infeasible. Path
/// index bit `m` (counting from the most significant of `horizon` bits) is
/// the state applied at step `m`.
pub fn path_costs(
    state: &ControllerState,
    filter: &FilterWeights,
    reference: &ReferenceSpectrum,
    weights: CostWeights,
    horizon: usize,
    duty_ref: f64,
) -> Vec<Option<f64>> {
    let raw: Vec<bool> = state.window.raw_states().collect();
    let values: Vec<f64> = state.window.shifted_samples().collect();
    let n = raw.len();
    (0..1usize << horizon)
        .map(|code| {
            let path: Vec<bool> = (0..horizon).map(|m| (code >> (horizon - 1 - m)) & 1 == 1).collect();
            if !path_feasible(state.k_sw, state.last_output, &path, weights.k_max) {
                return None;
            }
            let mut end_raw = raw[horizon..].to_vec();
            end_raw.extend_from_slice(&path);
            let mut end_values = values[horizon..].to_vec();
            end_values.extend(path.iter().map(|&b| shifted(b, duty_ref)));
            debug_assert_eq!(end_values.len(), n);
            let spectral = if weights.lambda1 == 0.0 {
                0.0
            } else {
                weights.lambda1 * path_spectral_cost(&direct_dft(&end_values), filter, reference, weights.norm)
            };
            Some(spectral + weights.lambda2 * count_transitions(&end_raw) as f64)
        })
        .collect()
}

/// Next switch state by exhaustive search over all `2^horizon` paths.
///
/// The best path starting with 0 is compared with the best starting with
/// 1; costs within the relative tie tolerance keep the previous output.
pub fn brute_force_choice(
    state: &ControllerState,
    filter: &FilterWeights,
    reference: &ReferenceSpectrum,
    weights: CostWeights,
    horizon: usize,
    duty_ref: f64,
) -> bool {
    let costs = path_costs(state, filter, reference, weights, horizon, duty_ref);
    let half = costs.len() / 2;
    let best = |range: std::ops::Range<usize>| {
        costs[range]
            .iter()
            .flatten()
            .copied()
            .fold(None, |acc: Option<f64>, c| Some(acc.map_or(c, |a| a.min(c))))
    };
    match (best(0..half), best(half..costs.len())) {
        (Some(a), Some(b)) => {
            if (a - b).abs() <= TIE_TOLERANCE * a.abs().max(b.abs()) {
                state.last_output
            } else {
                b < a
            }
        }
        (Some(_), None) => false,
        (None, Some(_)) => true,
        (None, None) => !state.last_output,
    }
}

fn derivative(params: &PlantParams, switch: bool, il: f64, vc: f64) -> (f64, f64) {
    let u = if switch { params.vin } else { 0.0 };
    let dil = (u - vc - params.series_resistance * il) / params.inductance;
    let dvc = (il - params.load.current_at(vc)) / params.capacitance;
    (dil, dvc)
}

/// One control period integrated with classical RK4 on `substeps` equal
/// sub-intervals.
pub fn substep_plant(state: PlantState, switch: bool, params: &PlantParams, substeps: usize) -> PlantState {
    assert!(substeps >= 1, "substeps must be at least 1");
    let h = params.dt / substeps as f64;
    let (mut il, mut vc) = (state.il, state.vc);
    for _ in 0..substeps {
        let k1 = derivative(params, switch, il, vc);
        let k2 = derivative(params, switch, il + 0.5 * h * k1.0, vc + 0.5 * h * k1.1);
        let k3 = derivative(params, switch, il + 0.5 * h * k2.0, vc + 0.5 * h * k2.1);
        let k4 = derivative(params, switch, il + h * k3.0, vc + h * k3.1);
        il += h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
        vc += h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
    }
    PlantState { il, vc }
}
