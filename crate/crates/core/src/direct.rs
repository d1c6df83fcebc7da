//! Direct GL solution of the closed-loop equation
//! `a2 y^(alpha) + a1 y^(beta) + Td y^(delta) + (a0 + K) y = K w + Td w^(delta)`.
//!
//! Every fractional term is replaced by its GL sum; the current sample `y_k`
//! appears only through the `j = 0` weights, so each step is a single
//! division and needs no iteration.

use crate::error::{invalid, Error, Result};
use crate::fracops::{gl_coefficients, history_dot};
use crate::model::ClosedLoopModel;

/// Solver knobs shared by the time-domain simulators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimOptions {
    /// Short-memory window in samples; `None` keeps the full history.
    pub memory: Option<usize>,
    /// Runs stop once any monitored value exceeds this magnitude.
    pub divergence_bound: f64,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self {
            memory: None,
            divergence_bound: 1e6,
        }
    }
}

impl SimOptions {
    pub(crate) fn validate(&self) -> Result<()> {
        if self.memory == Some(0) {
            return Err(invalid("memory length must be at least 1"));
        }
        if self.divergence_bound.is_nan() || self.divergence_bound <= 0.0 {
            return Err(invalid("divergence bound must be positive"));
        }
        Ok(())
    }

    pub(crate) fn exceeded(&self, v: f64) -> bool {
        !v.is_finite() || v.abs() > self.divergence_bound
    }
}

/// Sampled output `y` and input `w` on `t[k] = k * step`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    pub step: f64,
    pub t: Vec<f64>,
    pub y: Vec<f64>,
    pub w: Vec<f64>,
    /// The run hit the divergence bound and was cut short after the last sample.
    pub diverged: bool,
}

impl TimeSeries {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }
}

/// Number of steps `N = floor(t_end / h)`, tolerant of representation error
/// in the ratio (15 / 0.001 is 14999.999...).
pub(crate) fn step_count(h: f64, t_end: f64) -> Result<usize> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(invalid(format!("step must be positive, got {h}")));
    }
    if !(t_end.is_finite() && t_end >= h) {
        return Err(invalid(format!(
            "t_end ({t_end}) must be at least the step ({h})"
        )));
    }
    Ok((t_end / h * (1.0 + 1e-12)).floor() as usize)
}

/// `coef · h^(-q) · c_j` for `j = 0..=n`.
pub(crate) fn scaled_weights(coef: f64, q: f64, h: f64, n: usize) -> Result<Vec<f64>> {
    let scale = coef * h.powf(-q);
    Ok(gl_coefficients(q, n)?
        .into_weights()
        .into_iter()
        .map(|c| scale * c)
        .collect())
}

pub(crate) fn add_into(acc: &mut [f64], other: &[f64]) {
    for (a, b) in acc.iter_mut().zip(other) {
        *a += b;
    }
}

/// Unit-step (or general input) response of the loop on `[0, t_end]`, at rest for `t < 0`.
pub fn simulate_direct(
    model: &ClosedLoopModel,
    h: f64,
    t_end: f64,
    opts: &SimOptions,
) -> Result<TimeSeries> {
    opts.validate()?;
    let n = step_count(h, t_end)?;
    let w = model.input.sample(h, n)?;
    let p = &model.plant;
    let c = &model.controller;
    let len = opts.memory.map_or(n, |m| m.min(n));

    // Combined kernel of all fractional terms acting on y.
    let mut kernel = scaled_weights(p.a2, p.alpha, h, len)?;
    add_into(&mut kernel, &scaled_weights(p.a1, p.beta, h, len)?);
    add_into(&mut kernel, &scaled_weights(c.td, c.delta, h, len)?);
    let input_kernel = scaled_weights(c.td, c.delta, h, len)?;

    let denom = kernel[0] + p.a0 + c.k;
    if !(denom.is_finite() && denom > 0.0) {
        return Err(Error::IllPosedDiscretization(format!(
            "update denominator a2 h^-alpha + a1 h^-beta + Td h^-delta + a0 + K = {denom} at h = {h}"
        )));
    }
    let past_kernel = &kernel[1..];
    let past_memory = opts.memory.map(|m| m - 1);

    let mut y: Vec<f64> = Vec::with_capacity(n + 1);
    let mut diverged = false;
    for k in 0..=n {
        let forcing = c.k * w[k] + history_dot(&input_kernel, &w, k, opts.memory);
        let past = if k == 0 {
            0.0
        } else {
            history_dot(past_kernel, &y, k - 1, past_memory)
        };
        let yk = (forcing - past) / denom;
        if opts.exceeded(yk) {
            diverged = true;
            if yk.is_finite() {
                y.push(yk);
            }
            break;
        }
        y.push(yk);
    }

    let m = y.len();
    Ok(TimeSeries {
        step: h,
        t: (0..m).map(|k| k as f64 * h).collect(),
        y,
        w: w[..m].to_vec(),
        diverged,
    })
}

/// Output level the loop settles to under a constant input, `K w / (a0 + K)`.
pub fn steady_state_prediction(model: &ClosedLoopModel, w_const: f64) -> Result<f64> {
    let g = model.static_gain_coefficient();
    if g == 0.0 {
        return Err(Error::NoEquilibrium);
    }
    Ok(model.controller.k * w_const / g)
}
