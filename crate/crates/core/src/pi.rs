//! Output-voltage PI loop producing the duty reference.

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::plant::{Load, PlantParams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PiParams {
    pub kp: f64,
    /// Integral gain, 1/s.
    pub ki: f64,
    /// Feedforward duty added to the controller output.
    pub bias: f64,
    pub out_min: f64,
    pub out_max: f64,
    /// Sample period, s.
    pub dt: f64,
}

/// Time constant of the first-order lag standing in for the spectral loop.
pub fn spectral_lag(fc: f64) -> f64 {
    5.0 / (TAU * fc)
}

impl PiParams {
    /// Gains for the voltage loop around `plant` at control frequency `fc`.
    ///
    /// The integral crossover sits at `fc/20`, lowered to `w0 / (2 Q)` when
    /// the output filter resonance would otherwise be amplified (gain margin
    /// of 2 at the resonance). Well-damped filters still keep the crossover
    /// a factor of 5 below `w0`. The proportional zero cancels the spectral-loop
    /// lag pole. The feedforward is `vref / vin`.
    pub fn design(plant: &PlantParams, fc: f64, vref: f64) -> Self {
        let tau = spectral_lag(fc);
        let (w0, q) = plant.resonance();
        let mut wc = TAU * fc / 20.0;
        if q.is_finite() {
            wc = wc.min(w0 / (2.0 * q.max(2.5)));
        } else {
            wc = wc.min(w0 / 200.0);
        }
        let ki = wc / plant.vin;
        Self {
            kp: ki * tau,
            ki,
            bias: vref / plant.vin,
            out_min: 0.0,
            out_max: 1.0,
            dt: plant.dt,
        }
    }

    /// Open-loop response `C(jw) * vin * H_lc(jw) * lag(jw)` at angular
    /// frequency `w`.
    pub fn loop_gain(&self, plant: &PlantParams, fc: f64, w: f64) -> Complex64 {
        let s = Complex64::new(0.0, w);
        let c = self.kp + self.ki / s;
        let z_series = s * plant.inductance + plant.series_resistance;
        let z_load = match plant.load {
            Load::Resistance(r) => r / (1.0 + s * r * plant.capacitance),
            Load::Current(_) => 1.0 / (s * plant.capacitance),
        };
        let lc = z_load / (z_series + z_load);
        let lag = 1.0 / (1.0 + s * spectral_lag(fc));
        c * plant.vin * lc * lag
    }

    /// Phase margin (degrees) and gain margin (linear) from a dense
    /// logarithmic frequency sweep up to `fc/2`.
    pub fn margins(&self, plant: &PlantParams, fc: f64) -> (f64, f64) {
        let points = 20_000;
        let (lo, hi) = ((1e-2f64).ln(), (TAU * fc / 2.0).ln());
        let mut pm = f64::INFINITY;
        let mut gm = f64::INFINITY;
        let mut prev: Option<Complex64> = None;
        for i in 0..=points {
            let w = (lo + (hi - lo) * i as f64 / points as f64).exp();
            let l = self.loop_gain(plant, fc, w);
            if let Some(p) = prev {
                if (p.norm() - 1.0) * (l.norm() - 1.0) <= 0.0 {
                    pm = pm.min(180.0 + l.arg().to_degrees());
                }
                // phase crossing -180 deg: imaginary part changes sign on the
                // negative real axis
                if p.im * l.im <= 0.0 && l.re < 0.0 {
                    gm = gm.min(1.0 / l.norm());
                }
            }
            prev = Some(l);
        }
        (pm, gm)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PiController {
    pub params: PiParams,
    integrator: f64,
}

impl PiController {
    pub fn new(params: PiParams) -> Self {
        Self {
            params,
            integrator: 0.0,
        }
    }

    pub fn integrator(&self) -> f64 {
        self.integrator
    }

    /// Loads the integrator so that a zero error yields `duty`.
    pub fn preset(&mut self, duty: f64) {
        let p = &self.params;
        self.integrator = (duty - p.bias).clamp(p.out_min - p.bias, p.out_max - p.bias);
    }

    /// One sample of the loop; returns the clamped duty reference.
    ///
    /// The integrator only moves when the output is unsaturated or the error
    /// drives it back out of saturation.
    pub fn step(&mut self, vref: f64, vmeas: f64) -> f64 {
        let p = &self.params;
        let e = vref - vmeas;
        let candidate = self.integrator + p.ki * p.dt * e;
        let u = p.bias + p.kp * e + candidate;
        if u > p.out_max {
            if e < 0.0 {
                self.integrator = candidate;
            }
        } else if u < p.out_min {
            if e > 0.0 {
                self.integrator = candidate;
            }
        } else {
            self.integrator = candidate;
        }
        // keep the stored integrator within the reachable output range
        self.integrator = self
            .integrator
            .clamp(p.out_min - p.bias, p.out_max - p.bias);
        (p.bias + p.kp * e + self.integrator).clamp(p.out_min, p.out_max)
    }
}

/// Stateless single step: `vmeas == vref` with a zero integrator yields the
/// clamped bias.
pub fn pi_step(vref: f64, vmeas: f64, pi: &mut PiController) -> f64 {
    pi.step(vref, vmeas)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sim_plant() -> PlantParams {
        PlantParams {
            vin: 48.0,
            inductance: 42e-6,
            capacitance: 5000e-6,
            series_resistance: 0.0,
            load: Load::Resistance(1.2),
            dt: 1.0 / 400e3,
        }
    }

    fn replica_plant(load: Load) -> PlantParams {
        PlantParams {
            vin: 48.0,
            inductance: 22e-6,
            capacitance: 15e-6,
            series_resistance: 0.03,
            load,
            dt: 1.0 / 125e3,
        }
    }

    #[test]
    fn balanced_input_returns_bias() {
        let params = PiParams::design(&sim_plant(), 400e3, 12.0);
        let mut pi = PiController::new(params);
        assert_eq!(pi_step(12.0, 12.0, &mut pi), 0.25);
        let mut pi = PiController::new(PiParams { bias: 1.7, ..params });
        assert_eq!(pi.step(12.0, 12.0), 1.0);
    }

    #[test]
    fn saturation_clamps_integrator() {
        let params = PiParams {
            kp: 0.1,
            ki: 1e4,
            bias: 0.25,
            out_min: 0.0,
            out_max: 1.0,
            dt: 1e-5,
        };
        let mut pi = PiController::new(params);
        for _ in 0..100_000 {
            let u = pi.step(12.0, 0.0);
            assert!((0.0..=1.0).contains(&u));
        }
        assert!(pi.integrator() <= 0.75);
        // recovers immediately once the error reverses
        let u = pi.step(12.0, 13.0);
        assert!(u < 1.0);
        for _ in 0..100_000 {
            let u = pi.step(0.0, 12.0);
            assert!((0.0..=1.0).contains(&u));
        }
        assert!(pi.integrator() >= -0.25);
    }

    #[test]
    fn designed_loops_have_margin() {
        let cases = [
            (sim_plant(), 400e3),
            (replica_plant(Load::Resistance(1.2)), 125e3),
            (replica_plant(Load::Current(5.0)), 125e3),
            (replica_plant(Load::Current(10.0)), 125e3),
        ];
        for (plant, fc) in cases {
            let pi = PiParams::design(&plant, fc, 12.0);
            let (pm, gm) = pi.margins(&plant, fc);
            assert!(pm >= 60.0, "phase margin {pm}");
            assert!(gm >= 1.9, "gain margin {gm}");
        }
    }

    #[test]
    fn lag_model_step_settles_below_tenth_of_fc() {
        // closed loop of the designed PI around vin / (1 + s tau)
        let fc = 400e3;
        let plant = sim_plant();
        let params = PiParams::design(&plant, fc, 0.0);
        let mut pi = PiController::new(PiParams {
            bias: 0.0,
            out_min: f64::NEG_INFINITY,
            out_max: f64::INFINITY,
            ..params
        });
        let tau = spectral_lag(fc);
        let a = (-plant.dt / tau).exp();
        let mut y = 0.0;
        let target = 1.0;
        let mut t10 = None;
        let mut t90 = None;
        let mut peak: f64 = 0.0;
        let steps = 2_000_000;
        for k in 0..steps {
            let u = pi.step(target, y);
            y = a * y + (1.0 - a) * plant.vin * u;
            peak = peak.max(y);
            let t = k as f64 * plant.dt;
            if t10.is_none() && y >= 0.1 * target {
                t10 = Some(t);
            }
            if t90.is_none() && y >= 0.9 * target {
                t90 = Some(t);
            }
        }
        let rise = t90.unwrap() - t10.unwrap();
        let bandwidth = 0.35 / rise;
        assert!(bandwidth <= fc / 10.0, "bandwidth {bandwidth}");
        assert!((y - target).abs() < 0.02);
        assert!(peak < 1.1 * target);
    }
}
