//! Grünwald–Letnikov (GL) differintegral on uniformly sampled signals.
//!
//! For a signal sampled at `t_k = k h` with zero history before `t = 0`,
//!
//! ```text
//! D^q y(t_k) ≈ h^(-q) Σ_{j=0..k} c_j y(t_{k-j}),   c_j = (-1)^j C(q, j)
//! ```
//!
//! Positive `q` differentiates, negative `q` integrates and `q = 0` is the
//! identity. The same weights drive every solver in this crate.

use statrs::function::gamma::gamma;

use crate::error::{invalid, Error, Result};

/// GL binomial weights `c_0..c_n` for a fixed order.
#[derive(Debug, Clone, PartialEq)]
pub struct GlCoefficients {
    order: f64,
    weights: Vec<f64>,
}

impl GlCoefficients {
    pub fn order(&self) -> f64 {
        self.order
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn into_weights(self) -> Vec<f64> {
        self.weights
    }
}

/// Computes `c_0..c_n` for order `q` with `c_j = c_{j-1} (1 - (1 + q) / j)`.
///
/// The multiplicative recurrence never forms factorials, so it stays finite
/// and accurate for long histories. For a nonnegative integer order `m` the
/// factor at `j = m + 1` is exactly zero and every later weight vanishes.
pub fn gl_coefficients(q: f64, n: usize) -> Result<GlCoefficients> {
    if !q.is_finite() {
        return Err(invalid(format!(
            "differintegral order must be finite, got {q}"
        )));
    }
    let mut weights = Vec::with_capacity(n + 1);
    weights.push(1.0);
    let mut prev = 1.0;
    for j in 1..=n {
        prev *= 1.0 - (1.0 + q) / j as f64;
        weights.push(prev);
    }
    Ok(GlCoefficients { order: q, weights })
}

/// Samples `values[k]` of a signal at `t_k = k * step`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledSignal {
    step: f64,
    values: Vec<f64>,
}

impl SampledSignal {
    pub fn new(step: f64, values: Vec<f64>) -> Result<Self> {
        if !(step > 0.0 && step.is_finite()) {
            return Err(invalid(format!("sample step must be positive, got {step}")));
        }
        if values.is_empty() {
            return Err(invalid("sampled signal must contain at least one value"));
        }
        Ok(Self { step, values })
    }

    /// Samples `f` at `t_k = k * step` for `k = 0..=n`.
    pub fn from_fn(step: f64, n: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(step, (0..=n).map(|k| f(k as f64 * step)).collect())
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Evaluates `Σ_j kernel[j] * history[k - j]` for `j = 0..=min(k, memory, kernel.len() - 1)`.
///
/// Summation runs strictly in ascending `j` so results are bitwise
/// reproducible. `history` must hold at least `k + 1` samples.
pub(crate) fn history_dot(kernel: &[f64], history: &[f64], k: usize, memory: Option<usize>) -> f64 {
    let mut last = k;
    if let Some(m) = memory {
        last = last.min(m);
    }
    if kernel.is_empty() {
        return 0.0;
    }
    last = last.min(kernel.len() - 1);
    let mut acc = 0.0;
    for (j, &c) in kernel[..=last].iter().enumerate() {
        acc += c * history[k - j];
    }
    acc
}

/// GL approximation of `D^q` of `signal` at sample `k`.
///
/// `memory` limits the sum to the most recent `memory` samples behind `k`
/// (short-memory principle); `None` keeps the full history back to `t = 0`.
pub fn gl_differintegral(
    signal: &SampledSignal,
    q: f64,
    k: usize,
    memory: Option<usize>,
) -> Result<f64> {
    if k >= signal.len() {
        return Err(Error::IndexOutOfRange {
            index: k,
            len: signal.len(),
        });
    }
    if memory == Some(0) {
        return Err(invalid("memory length must be at least 1"));
    }
    let terms = memory.map_or(k, |m| m.min(k));
    let coeffs = gl_coefficients(q, terms)?;
    let sum = history_dot(coeffs.weights(), signal.values(), k, memory);
    Ok(signal.step.powf(-q) * sum)
}

/// Closed form `D^q t^p = Γ(p + 1) / Γ(p + 1 - q) · t^(p - q)` with lower terminal 0.
///
/// Used as a reference for the discrete operator.
pub fn power_law_differintegral(p: f64, q: f64, t: f64) -> Result<f64> {
    if !(p.is_finite() && q.is_finite()) {
        return Err(invalid("power and order must be finite"));
    }
    if p <= -1.0 {
        return Err(invalid(format!("power must exceed -1, got {p}")));
    }
    if !(t > 0.0 && t.is_finite()) {
        return Err(invalid(format!(
            "evaluation time must be positive, got {t}"
        )));
    }
    let denom_arg = p + 1.0 - q;
    // 1/Γ vanishes at the nonpositive integers.
    if denom_arg <= 0.0 && denom_arg == denom_arg.round() {
        return Ok(0.0);
    }
    if p - q <= -1.0 {
        return Err(invalid(format!(
            "D^{q} t^{p} is not locally integrable at t = 0 (p - q must exceed -1)"
        )));
    }
    Ok(gamma(p + 1.0) / gamma(denom_arg) * t.powf(p - q))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    // (-1)^j C(q, j) from the generalized binomial product, independent of
    // the recurrence used by `gl_coefficients`.
    fn binomial_weight(q: f64, j: usize) -> f64 {
        let mut num = 1.0;
        for i in 0..j {
            num *= (q - i as f64) / (i as f64 + 1.0);
        }
        if j.is_multiple_of(2) {
            num
        } else {
            -num
        }
    }

    #[test]
    fn identity_weights() {
        let c = gl_coefficients(0.0, 3).unwrap();
        assert_eq!(c.weights(), &[1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn first_difference_weights() {
        let c = gl_coefficients(1.0, 3).unwrap();
        assert_eq!(c.weights(), &[1.0, -1.0, 0.0, 0.0]);
    }

    #[test]
    fn fractional_weights_match_hand_values() {
        let c = gl_coefficients(1.15, 3).unwrap();
        let expected = [1.0, -1.15, 0.08625, 0.0244375];
        for (got, want) in c.weights().iter().zip(expected) {
            assert!((got - want).abs() < 1e-14, "{got} vs {want}");
        }
    }

    #[test]
    fn integer_order_weights_vanish_beyond_order() {
        for m in 0..5 {
            let c = gl_coefficients(m as f64, 20).unwrap();
            assert!(c.weights()[m + 1..].iter().all(|&w| w == 0.0));
        }
    }

    #[test]
    fn non_finite_order_rejected() {
        assert!(matches!(
            gl_coefficients(f64::NAN, 3),
            Err(Error::InvalidParameter(_))
        ));
        assert!(gl_coefficients(f64::INFINITY, 3).is_err());
    }

    #[test]
    fn zero_order_is_identity() {
        let s = SampledSignal::new(0.1, vec![3.0, -1.0, 4.0, 1.5]).unwrap();
        for k in 0..4 {
            assert_eq!(gl_differintegral(&s, 0.0, k, None).unwrap(), s.values()[k]);
        }
    }

    #[test]
    fn first_order_is_backward_difference() {
        let s = SampledSignal::new(1.0, vec![0.0, 1.0, 2.0, 3.0]).unwrap();
        assert_eq!(gl_differintegral(&s, 1.0, 3, None).unwrap(), 1.0);

        let h = 0.01;
        let s = SampledSignal::from_fn(h, 200, |t| (3.0 * t).sin() + t * t).unwrap();
        for k in 1..=200 {
            let got = gl_differintegral(&s, 1.0, k, None).unwrap();
            let want = (s.values()[k] - s.values()[k - 1]) / h;
            assert!((got - want).abs() <= 1e-12 * want.abs().max(1.0));
        }
    }

    #[test]
    fn half_derivative_of_square() {
        let h = 1e-3;
        let s = SampledSignal::from_fn(h, 1000, |t| t * t).unwrap();
        let got = gl_differintegral(&s, 0.5, 1000, None).unwrap();
        // Γ(3) / Γ(2.5)
        let want = 2.0 / 1.329_340_388_179_137;
        assert!((got - want).abs() / want < 0.01, "{got} vs {want}");
    }

    #[test]
    fn out_of_range_index() {
        let s = SampledSignal::new(1.0, vec![1.0, 2.0]).unwrap();
        assert_eq!(
            gl_differintegral(&s, 0.5, 2, None),
            Err(Error::IndexOutOfRange { index: 2, len: 2 })
        );
        assert!(gl_differintegral(&s, 0.5, 1, Some(0)).is_err());
    }

    #[test]
    fn short_memory_truncates_history() {
        let s = SampledSignal::new(1.0, vec![1.0; 10]).unwrap();
        let full = gl_differintegral(&s, 0.5, 9, None).unwrap();
        let short = gl_differintegral(&s, 0.5, 9, Some(2)).unwrap();
        let c = gl_coefficients(0.5, 2).unwrap();
        assert_eq!(short, c.weights().iter().sum::<f64>());
        assert_ne!(full, short);
        assert_eq!(gl_differintegral(&s, 0.5, 9, Some(100)).unwrap(), full);
    }

    #[test]
    fn invalid_signal() {
        assert!(SampledSignal::new(0.0, vec![1.0]).is_err());
        assert!(SampledSignal::new(-1.0, vec![1.0]).is_err());
        assert!(SampledSignal::new(1.0, vec![]).is_err());
    }

    #[test]
    fn power_law_values() {
        assert!((power_law_differintegral(1.0, 1.0, 5.0).unwrap() - 1.0).abs() < 1e-12);
        assert!((power_law_differintegral(2.0, 0.0, 3.0).unwrap() - 9.0).abs() < 1e-12);
        let half = power_law_differintegral(2.0, 0.5, 1.0).unwrap();
        assert!((half - 1.504_505_556_127_712).abs() < 1e-9, "{half}");
        // second derivative of t is zero: 1/Γ(0)
        assert_eq!(power_law_differintegral(1.0, 2.0, 1.0).unwrap(), 0.0);
        assert!(power_law_differintegral(-1.5, 0.0, 1.0).is_err());
        assert!(power_law_differintegral(0.0, 0.5, 0.0).is_err());
        assert!(power_law_differintegral(0.0, 1.5, 1.0).is_err());
    }

    #[test]
    fn gl_error_is_first_order() {
        let want = power_law_differintegral(2.0, 0.5, 1.0).unwrap();
        let err = |n: usize| {
            let h = 1.0 / n as f64;
            let s = SampledSignal::from_fn(h, n, |t| t * t).unwrap();
            (gl_differintegral(&s, 0.5, n, None).unwrap() - want).abs()
        };
        let ratio = err(1000) / err(2000);
        assert!((1.7..=2.3).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn derivative_then_integral_reconstructs() {
        // The order-q and order-(-q) weight sequences are convolution inverses,
        // so the round trip is exact up to rounding at every step size.
        let roundtrip_error = |n: usize| {
            let h = 1.0 / n as f64;
            let q = 0.6;
            let s = SampledSignal::from_fn(h, n, |t| t * t + (2.0 * t).sin()).unwrap();
            let d: Vec<f64> = (0..=n)
                .map(|k| gl_differintegral(&s, q, k, None).unwrap())
                .collect();
            let ds = SampledSignal::new(h, d).unwrap();
            (0..=n)
                .map(|k| (gl_differintegral(&ds, -q, k, None).unwrap() - s.values()[k]).abs())
                .fold(0.0, f64::max)
        };
        for n in [200, 400] {
            let err = roundtrip_error(n);
            assert!(err < 1e-10, "n={n} err={err}");
        }
    }

    proptest! {
        #[test]
        fn recurrence_matches_binomial(q in -3.0f64..3.0) {
            let c = gl_coefficients(q, 200).unwrap();
            prop_assert_eq!(c.weights()[0], 1.0);
            for j in 1..=200 {
                let w = c.weights()[j];
                prop_assert_eq!(w, c.weights()[j - 1] * (1.0 - (1.0 + q) / j as f64));
                let b = binomial_weight(q, j);
                let scale = b.abs().max(f64::MIN_POSITIVE);
                prop_assert!((w - b).abs() <= 1e-12 * scale, "j={} w={} b={}", j, w, b);
            }
        }
    }
}
