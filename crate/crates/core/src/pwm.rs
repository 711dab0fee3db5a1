//! Fixed-frequency PWM baseline.
//!
//! The switch signal is sampled on a grid `oversample` times finer than the
//! control frequency. The plant is integrated piecewise between the exact
//! edge instants, so only the recorded binary sequence is quantized.

use crate::error::{Error, Result};
use crate::plant::{DiscretePlant, PlantParams, PlantState};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PwmConfig {
    pub duty: f64,
    /// Switching frequency, Hz.
    pub frequency: f64,
    /// Simulated time, s.
    pub duration: f64,
    /// Grid refinement relative to the plant's control period.
    pub oversample: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PwmRun {
    /// Grid sample rate, Hz.
    pub sample_rate: f64,
    /// Switch state at the start of each grid interval.
    pub switch: Vec<bool>,
    /// Capacitor voltage at the end of each grid interval.
    pub vc: Vec<f64>,
    /// Inductor current at the end of each grid interval.
    pub il: Vec<f64>,
}

/// Trailing-edge PWM: high for `duty / frequency` at the start of each period.
pub fn pwm_baseline(cfg: &PwmConfig, plant: &PlantParams, initial: PlantState) -> Result<PwmRun> {
    plant.validate()?;
    if cfg.oversample == 0 {
        return Err(Error::Config("oversample must be at least 1".into()));
    }
    let h = plant.dt / cfg.oversample as f64;
    let sample_rate = 1.0 / h;
    if !(cfg.frequency > 0.0 && cfg.frequency < sample_rate / 2.0) {
        return Err(Error::Config(format!(
            "PWM frequency {} Hz must be in (0, {}) Hz",
            cfg.frequency,
            sample_rate / 2.0
        )));
    }
    if !(0.0..=1.0).contains(&cfg.duty) {
        return Err(Error::Config(format!("duty {} outside [0, 1]", cfg.duty)));
    }
    let steps = (cfg.duration / h).round().max(0.0) as usize;
    let grid_step = DiscretePlant::over(PlantParams { dt: h, ..*plant }, h);
    let period = 1.0 / cfg.frequency;
    let d = cfg.duty;
    let toggles = d > 0.0 && d < 1.0;

    let mut high = d > 0.0;
    let mut cycle = 0u64;
    let mut next_edge = if toggles { d * period } else { f64::INFINITY };
    let mut state = initial;
    let mut run = PwmRun {
        sample_rate,
        switch: Vec::with_capacity(steps),
        vc: Vec::with_capacity(steps),
        il: Vec::with_capacity(steps),
    };
    let mut advance_edge = |high: &mut bool, next_edge: &mut f64| {
        *high = !*high;
        if *high {
            *next_edge = (cycle as f64 + d) * period;
        } else {
            cycle += 1;
            *next_edge = cycle as f64 * period;
        }
    };

    for k in 0..steps {
        let t0 = k as f64 * h;
        let t1 = (k + 1) as f64 * h;
        while next_edge <= t0 {
            advance_edge(&mut high, &mut next_edge);
        }
        run.switch.push(high);
        if next_edge >= t1 {
            state = grid_step.step(state, high);
        } else {
            let mut t = t0;
            while next_edge < t1 {
                state = DiscretePlant::over(*plant, next_edge - t).step(state, high);
                t = next_edge;
                advance_edge(&mut high, &mut next_edge);
            }
            state = DiscretePlant::over(*plant, t1 - t).step(state, high);
        }
        run.vc.push(state.vc);
        run.il.push(state.il);
    }
    Ok(run)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plant::Load;

    fn plant() -> PlantParams {
        PlantParams {
            vin: 48.0,
            inductance: 42e-6,
            capacitance: 5000e-6,
            series_resistance: 0.0,
            load: Load::Resistance(1.2),
            dt: 1.0 / 400e3,
        }
    }

    #[test]
    fn zero_duty_is_constant_low() {
        let cfg = PwmConfig {
            duty: 0.0,
            frequency: 75e3,
            duration: 1e-3,
            oversample: 16,
        };
        let run = pwm_baseline(&cfg, &plant(), PlantState::default()).unwrap();
        assert_eq!(run.switch.len(), 6400);
        assert!(run.switch.iter().all(|&b| !b));
        assert!(run.vc.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn duty_and_edge_count() {
        let cfg = PwmConfig {
            duty: 0.25,
            frequency: 100e3,
            duration: 1e-3,
            oversample: 16,
        };
        let run = pwm_baseline(&cfg, &plant(), PlantState::default()).unwrap();
        let ones = run.switch.iter().filter(|&&b| b).count();
        assert_eq!(ones, 1600);
        let rising = run.switch.windows(2).filter(|w| !w[0] && w[1]).count();
        assert_eq!(rising, 99);
    }

    #[test]
    fn mean_output_follows_duty() {
        let p = plant();
        let cfg = PwmConfig {
            duty: 0.25,
            frequency: 75e3,
            duration: 0.2,
            oversample: 16,
        };
        let run = pwm_baseline(&cfg, &p, p.equilibrium(12.0)).unwrap();
        let tail = &run.vc[run.vc.len() / 2..];
        let mean = tail.iter().sum::<f64>() / tail.len() as f64;
        assert!((mean - 12.0).abs() < 0.01 * 12.0, "mean {mean}");
    }

    #[test]
    fn rejects_frequency_above_grid_nyquist() {
        let cfg = PwmConfig {
            duty: 0.5,
            frequency: 4e6,
            duration: 1e-3,
            oversample: 16,
        };
        assert!(pwm_baseline(&cfg, &plant(), PlantState::default()).is_err());
    }
}
