//! Switched model of an ideal synchronous buck converter.
//!
//! The half-bridge output is `switch * vin`; switching happens only at step
//! boundaries. Between boundaries the plant is linear time-invariant, so each
//! step is advanced exactly with a precomputed state-transition matrix.

use nalgebra::{Matrix2, Matrix3, Vector2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum Load {
    /// Ohms.
    Resistance(f64),
    /// Ideal current sink, amperes.
    Current(f64),
}

impl Load {
    /// Load current at output voltage `vc`.
    pub fn current_at(&self, vc: f64) -> f64 {
        match *self {
            Load::Resistance(r) => vc / r,
            Load::Current(i) => i,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlantParams {
    pub vin: f64,
    pub inductance: f64,
    pub capacitance: f64,
    /// Series resistance of the inductor path, ohms. Zero is ideal.
    pub series_resistance: f64,
    pub load: Load,
    /// Control period, seconds.
    pub dt: f64,
}

impl PlantParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("vin", self.vin),
            ("inductance", self.inductance),
            ("capacitance", self.capacitance),
            ("dt", self.dt),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.series_resistance.is_finite() && self.series_resistance >= 0.0) {
            return Err(Error::Config(format!(
                "series resistance must be >= 0, got {}",
                self.series_resistance
            )));
        }
        match self.load {
            Load::Resistance(r) if !(r.is_finite() && r > 0.0) => {
                Err(Error::Config(format!("load resistance must be positive, got {r}")))
            }
            Load::Current(i) if !i.is_finite() => {
                Err(Error::Config(format!("load current must be finite, got {i}")))
            }
            _ => Ok(()),
        }
    }

    /// Continuous-time `dx/dt = A x + b(switch)` for `x = [iL, vC]`.
    pub fn continuous(&self, switch: bool) -> (Matrix2<f64>, Vector2<f64>) {
        let (l, c) = (self.inductance, self.capacitance);
        let (a22, sink) = match self.load {
            Load::Resistance(r) => (-1.0 / (r * c), 0.0),
            Load::Current(i) => (0.0, i),
        };
        let a = Matrix2::new(-self.series_resistance / l, -1.0 / l, 1.0 / c, a22);
        let u = if switch { self.vin } else { 0.0 };
        (a, Vector2::new(u / l, -sink / c))
    }

    /// Natural frequency (rad/s) and quality factor of the output filter
    /// with its load.
    pub fn resonance(&self) -> (f64, f64) {
        let (l, c) = (self.inductance, self.capacitance);
        let w0 = 1.0 / (l * c).sqrt();
        let from_load = match self.load {
            Load::Resistance(r) => 0.5 / r * (l / c).sqrt(),
            Load::Current(_) => 0.0,
        };
        let zeta = from_load + 0.5 * self.series_resistance * (c / l).sqrt();
        let q = if zeta > 0.0 { 0.5 / zeta } else { f64::INFINITY };
        (w0, q)
    }

    /// Steady state for a constant output voltage `vout`.
    pub fn equilibrium(&self, vout: f64) -> PlantState {
        PlantState {
            il: self.load.current_at(vout),
            vc: vout,
        }
    }

    /// Duty ratio holding `vout` in steady state.
    pub fn equilibrium_duty(&self, vout: f64) -> f64 {
        (vout + self.series_resistance * self.load.current_at(vout)) / self.vin
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PlantState {
    /// Inductor current, A.
    pub il: f64,
    /// Output capacitor voltage, V.
    pub vc: f64,
}

impl PlantState {
    fn vector(&self) -> Vector2<f64> {
        Vector2::new(self.il, self.vc)
    }

    fn from_vector(v: Vector2<f64>) -> Self {
        Self { il: v[0], vc: v[1] }
    }
}

/// Exact discretization `x' = Phi x + Gamma(switch)` over a fixed interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscretePlant {
    pub params: PlantParams,
    phi: Matrix2<f64>,
    gamma: [Vector2<f64>; 2],
    /// State response to one ampere of extra load current held over the step.
    sink: Vector2<f64>,
}

impl DiscretePlant {
    pub fn new(params: PlantParams) -> Result<Self> {
        params.validate()?;
        Ok(Self::over(params, params.dt))
    }

    /// Discretization over an arbitrary interval `h`.
    pub(crate) fn over(params: PlantParams, h: f64) -> Self {
        let (a, b0) = params.continuous(false);
        let (_, b1) = params.continuous(true);
        let (phi, g0) = discretize(a, b0, h);
        let (_, g1) = discretize(a, b1, h);
        let (_, sink) = discretize(a, Vector2::new(0.0, -1.0 / params.capacitance), h);
        Self {
            params,
            phi,
            gamma: [g0, g1],
            sink,
        }
    }

    #[inline]
    pub fn step(&self, state: PlantState, switch: bool) -> PlantState {
        PlantState::from_vector(self.phi * state.vector() + self.gamma[usize::from(switch)])
    }

    /// Step with `extra` amperes drawn on top of the configured load.
    #[inline]
    pub fn step_with(&self, state: PlantState, switch: bool, extra: f64) -> PlantState {
        PlantState::from_vector(
            self.phi * state.vector() + self.gamma[usize::from(switch)] + self.sink * extra,
        )
    }
}

/// Matrix exponential of the affine system augmented with a constant input.
fn discretize(a: Matrix2<f64>, b: Vector2<f64>, h: f64) -> (Matrix2<f64>, Vector2<f64>) {
    let aug = Matrix3::new(
        a[(0, 0)], a[(0, 1)], b[0],
        a[(1, 0)], a[(1, 1)], b[1],
        0.0, 0.0, 0.0,
    ) * h;
    let e = aug.exp();
    let phi = Matrix2::new(e[(0, 0)], e[(0, 1)], e[(1, 0)], e[(1, 1)]);
    (phi, Vector2::new(e[(0, 2)], e[(1, 2)]))
}

/// Advances `state` by one control period with the bridge held at `switch`.
pub fn plant_step(state: PlantState, switch: bool, params: &PlantParams) -> Result<PlantState> {
    Ok(DiscretePlant::new(*params)?.step(state, switch))
}
