//! Plant, controller and unity-feedback loop.
//!
//! The loop is `W → (+/-) → E → G_r → U → G_s → Y` with `Y` fed back, where
//!
//! ```text
//! G_s(s) = 1 / (a2 s^alpha + a1 s^beta + a0)
//! G_r(s) = K + Td s^delta
//! ```
//!
//! so the output obeys
//! `a2 y^(alpha) + a1 y^(beta) + Td y^(delta) + (a0 + K) y = K w + Td w^(delta)`.

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::fracops::SampledSignal;

/// Coefficients and orders of `G_s(s) = 1 / (a2 s^alpha + a1 s^beta + a0)`.
///
/// `a2` may be zero (a static or lower-order plant). Routines that divide by
/// it reject that case themselves.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlantParams {
    pub a0: f64,
    pub a1: f64,
    pub a2: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl PlantParams {
    pub fn new(a0: f64, a1: f64, a2: f64, alpha: f64, beta: f64) -> Result<Self> {
        let plant = Self {
            a0,
            a1,
            a2,
            alpha,
            beta,
        };
        plant.validate()?;
        Ok(plant)
    }

    pub fn validate(&self) -> Result<()> {
        if ![self.a0, self.a1, self.a2, self.alpha, self.beta]
            .iter()
            .all(|v| v.is_finite())
        {
            return Err(invalid("plant parameters must be finite"));
        }
        if !(self.beta >= 0.0 && self.alpha > self.beta) {
            return Err(invalid(format!(
                "plant orders must satisfy alpha > beta >= 0 (alpha = {}, beta = {})",
                self.alpha, self.beta
            )));
        }
        Ok(())
    }
}

/// `G_r(s) = K + Td s^delta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControllerParams {
    pub k: f64,
    pub td: f64,
    pub delta: f64,
}

impl ControllerParams {
    pub fn new(k: f64, td: f64, delta: f64) -> Result<Self> {
        let ctrl = Self { k, td, delta };
        ctrl.validate()?;
        Ok(ctrl)
    }

    pub fn validate(&self) -> Result<()> {
        if ![self.k, self.td, self.delta].iter().all(|v| v.is_finite()) {
            return Err(invalid("controller parameters must be finite"));
        }
        if self.delta < 0.0 {
            return Err(invalid(format!(
                "derivative order must be nonnegative, got {}",
                self.delta
            )));
        }
        Ok(())
    }
}

/// Setpoint signal `w(t)`, zero for `t < 0`.
#[derive(Debug, Clone, PartialEq)]
pub enum InputSignal {
    UnitStep,
    ScaledStep(f64),
    Samples(SampledSignal),
}

impl InputSignal {
    /// Samples `w(t_k)` for `k = 0..=n` at step `h`.
    ///
    /// Sampled inputs must share the step `h` and cover the whole horizon.
    pub fn sample(&self, h: f64, n: usize) -> Result<Vec<f64>> {
        match self {
            InputSignal::UnitStep => Ok(vec![1.0; n + 1]),
            InputSignal::ScaledStep(a) => Ok(vec![*a; n + 1]),
            InputSignal::Samples(sig) => {
                if (sig.step() - h).abs() > 1e-12 * h {
                    return Err(invalid(format!(
                        "input sampled at step {} but simulation step is {h}",
                        sig.step()
                    )));
                }
                if sig.len() < n + 1 {
                    return Err(invalid(format!(
                        "input has {} samples, simulation needs {}",
                        sig.len(),
                        n + 1
                    )));
                }
                Ok(sig.values()[..=n].to_vec())
            }
        }
    }

    /// Constant level of a step input, `None` for sampled inputs.
    pub fn step_level(&self) -> Option<f64> {
        match self {
            InputSignal::UnitStep => Some(1.0),
            InputSignal::ScaledStep(a) => Some(*a),
            InputSignal::Samples(_) => None,
        }
    }
}

/// Plant and controller in unity feedback, driven by `input`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedLoopModel {
    pub plant: PlantParams,
    pub controller: ControllerParams,
    pub input: InputSignal,
}

impl ClosedLoopModel {
    /// Builds the loop; `alpha` must be the highest order in the loop equation.
    pub fn new(
        plant: PlantParams,
        controller: ControllerParams,
        input: InputSignal,
    ) -> Result<Self> {
        plant.validate()?;
        controller.validate()?;
        if controller.delta > plant.alpha {
            return Err(invalid(format!(
                "alpha ({}) must be the highest order, but delta = {}",
                plant.alpha, controller.delta
            )));
        }
        Ok(Self {
            plant,
            controller,
            input,
        })
    }

    /// Three-member plant `0.8 s^2.2 + 0.5 s^0.9 + 1` under
    /// `20.5 + 3.7343 s^1.15`, unit-step driven. A stable focus.
    pub fn benchmark() -> Self {
        Self {
            plant: PlantParams {
                a0: 1.0,
                a1: 0.5,
                a2: 0.8,
                alpha: 2.2,
                beta: 0.9,
            },
            controller: ControllerParams {
                k: 20.5,
                td: 3.7343,
                delta: 1.15,
            },
            input: InputSignal::UnitStep,
        }
    }

    pub fn with_controller(mut self, controller: ControllerParams) -> Result<Self> {
        self.controller = controller;
        Self::new(self.plant, self.controller, self.input)
    }

    pub fn with_input(mut self, input: InputSignal) -> Self {
        self.input = input;
        self
    }

    /// Order of the highest derivative in the loop equation.
    pub fn system_order(&self) -> f64 {
        self.plant.alpha
    }

    /// `a0 + K`, the coefficient of `y` in the loop equation.
    pub fn static_gain_coefficient(&self) -> f64 {
        self.plant.a0 + self.controller.k
    }
}

/// `s^q` on the principal branch, `Arg s ∈ (-π, π]`.
pub fn principal_pow(s: Complex64, q: f64) -> Result<Complex64> {
    if s == Complex64::new(0.0, 0.0) {
        return if q > 0.0 {
            Ok(Complex64::new(0.0, 0.0))
        } else if q == 0.0 {
            Ok(Complex64::new(1.0, 0.0))
        } else {
            Err(Error::Pole { s })
        };
    }
    if q == 0.0 {
        return Ok(Complex64::new(1.0, 0.0));
    }
    // Integer powers by repeated multiplication keep i^2 = -1 exact.
    if q.fract() == 0.0 && q.abs() <= 64.0 {
        return Ok(s.powi(q as i32));
    }
    let mut arg = s.im.atan2(s.re);
    if arg == -std::f64::consts::PI {
        arg = std::f64::consts::PI;
    }
    Ok(Complex64::from_polar(s.norm().powf(q), q * arg))
}

fn check_finite(s: Complex64) -> Result<()> {
    if s.re.is_finite() && s.im.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("evaluation point must be finite, got {s}")))
    }
}

pub fn plant_transfer(plant: &PlantParams, s: Complex64) -> Result<Complex64> {
    check_finite(s)?;
    let den = plant.a2 * principal_pow(s, plant.alpha)?
        + plant.a1 * principal_pow(s, plant.beta)?
        + plant.a0;
    if den == Complex64::new(0.0, 0.0) {
        return Err(Error::Pole { s });
    }
    Ok(den.inv())
}

pub fn controller_transfer(ctrl: &ControllerParams, s: Complex64) -> Result<Complex64> {
    check_finite(s)?;
    Ok(ctrl.k + ctrl.td * principal_pow(s, ctrl.delta)?)
}

/// `G_r(s) G_s(s)`.
pub fn open_loop_transfer(model: &ClosedLoopModel, s: Complex64) -> Result<Complex64> {
    Ok(controller_transfer(&model.controller, s)? * plant_transfer(&model.plant, s)?)
}

/// `Y/W = G_r G_s / (1 + G_r G_s)`.
pub fn closed_loop_transfer(model: &ClosedLoopModel, s: Complex64) -> Result<Complex64> {
    let l = open_loop_transfer(model, s)?;
    let den = 1.0 + l;
    if den == Complex64::new(0.0, 0.0) {
        return Err(Error::Pole { s });
    }
    Ok(l / den)
}

/// Sum of `coefficient · s^order` terms, orders strictly decreasing.
#[derive(Debug, Clone, PartialEq)]
pub struct FractionalTermList {
    terms: Vec<(f64, f64)>,
}

impl FractionalTermList {
    /// Sorts by decreasing order, merges equal orders by summing their
    /// coefficients and drops terms whose coefficient is zero.
    pub fn from_terms(terms: impl IntoIterator<Item = (f64, f64)>) -> Self {
        let mut sorted: Vec<(f64, f64)> = terms.into_iter().collect();
        sorted.sort_by(|a, b| b.1.total_cmp(&a.1));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(sorted.len());
        for (coef, order) in sorted {
            match merged.last_mut() {
                Some(last) if last.1 == order => last.0 += coef,
                _ => merged.push((coef, order)),
            }
        }
        merged.retain(|&(c, _)| c != 0.0);
        Self { terms: merged }
    }

    /// `(coefficient, order)` pairs.
    pub fn terms(&self) -> &[(f64, f64)] {
        &self.terms
    }

    pub fn orders(&self) -> impl Iterator<Item = f64> + '_ {
        self.terms.iter().map(|t| t.1)
    }

    pub fn evaluate(&self, s: Complex64) -> Result<Complex64> {
        let mut acc = Complex64::new(0.0, 0.0);
        for &(coef, order) in &self.terms {
            acc += coef * principal_pow(s, order)?;
        }
        Ok(acc)
    }
}

/// Left-hand operator of the loop equation:
/// `a2 s^alpha + Td s^delta + a1 s^beta + (a0 + K)`.
pub fn characteristic_terms(model: &ClosedLoopModel) -> FractionalTermList {
    let p = &model.plant;
    let c = &model.controller;
    FractionalTermList::from_terms([
        (p.a2, p.alpha),
        (c.td, c.delta),
        (p.a1, p.beta),
        (p.a0 + c.k, 0.0),
    ])
}
