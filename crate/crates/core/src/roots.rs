//! All roots of a real polynomial by Aberth–Ehrlich simultaneous iteration.

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};

const MAX_ITERATIONS: usize = 2000;
/// Largest accepted `|p(z)| / Σ |a_i| |z|^i`.
pub const RESIDUAL_TOLERANCE: f64 = 1e-8;

/// `p(z)` and `p'(z)` by Horner's rule; `coeffs[i]` multiplies `z^i`.
fn eval_with_derivative(coeffs: &[f64], z: Complex64) -> (Complex64, Complex64) {
    let mut p = Complex64::new(0.0, 0.0);
    let mut dp = Complex64::new(0.0, 0.0);
    for &a in coeffs.iter().rev() {
        dp = dp * z + p;
        p = p * z + a;
    }
    (p, dp)
}

pub fn evaluate(coeffs: &[f64], z: Complex64) -> Complex64 {
    coeffs
        .iter()
        .rev()
        .fold(Complex64::new(0.0, 0.0), |acc, &a| acc * z + a)
}

/// Backward-error style residual `|p(z)| / Σ |a_i| |z|^i`.
pub fn relative_residual(coeffs: &[f64], z: Complex64) -> f64 {
    let r = z.norm();
    let scale = coeffs.iter().rev().fold(0.0, |acc, &a| acc * r + a.abs());
    if scale == 0.0 {
        return 0.0;
    }
    evaluate(coeffs, z).norm() / scale
}

/// Roots of `Σ coeffs[i] z^i` with multiplicity, in no particular order.
pub fn aberth_roots(coeffs: &[f64]) -> Result<Vec<Complex64>> {
    if coeffs.iter().any(|a| !a.is_finite()) {
        return Err(invalid("polynomial coefficients must be finite"));
    }
    let degree = match coeffs.iter().rposition(|&a| a != 0.0) {
        Some(d) if d >= 1 => d,
        _ => return Err(invalid("polynomial degree must be at least 1")),
    };
    let coeffs = &coeffs[..=degree];

    // Exact zero roots come from vanishing low-order coefficients.
    let zeros = coeffs.iter().position(|&a| a != 0.0).unwrap_or(0);
    let reduced = &coeffs[zeros..];
    let n = reduced.len() - 1;
    let mut roots = vec![Complex64::new(0.0, 0.0); zeros];
    if n == 0 {
        return Ok(roots);
    }

    // Start on a circle whose radius is the geometric mean of the root moduli,
    // rotated off the real axis so conjugate pairs are not started symmetric.
    let radius = (reduced[0].abs() / reduced[n].abs()).powf(1.0 / n as f64);
    let mut z: Vec<Complex64> = (0..n)
        .map(|k| {
            let theta = 2.0 * std::f64::consts::PI * k as f64 / n as f64 + 0.4;
            Complex64::from_polar(radius, theta)
        })
        .collect();

    let mut iterations = 0;
    while iterations < MAX_ITERATIONS {
        iterations += 1;
        let mut max_step = 0.0f64;
        for i in 0..n {
            let (p, dp) = eval_with_derivative(reduced, z[i]);
            if p == Complex64::new(0.0, 0.0) {
                continue;
            }
            let newton = p / dp;
            let mut repulsion = Complex64::new(0.0, 0.0);
            for (j, zj) in z.iter().enumerate() {
                if j != i {
                    repulsion += (z[i] - zj).inv();
                }
            }
            let step = newton / (1.0 - newton * repulsion);
            if step.re.is_finite() && step.im.is_finite() {
                z[i] -= step;
                max_step = max_step.max(step.norm() / z[i].norm().max(1e-300));
            }
        }
        if max_step < 1e-15 {
            break;
        }
    }

    // Newton polish; keep a correction only if it lowers the residual.
    for zi in z.iter_mut() {
        for _ in 0..3 {
            let (p, dp) = eval_with_derivative(reduced, *zi);
            if dp == Complex64::new(0.0, 0.0) {
                break;
            }
            let cand = *zi - p / dp;
            if relative_residual(reduced, cand) < relative_residual(reduced, *zi) {
                *zi = cand;
            } else {
                break;
            }
        }
    }

    let worst = z
        .iter()
        .map(|&zi| relative_residual(reduced, zi))
        .fold(0.0, f64::max);
    if worst.is_nan() || worst >= RESIDUAL_TOLERANCE {
        return Err(Error::RootFinding {
            iterations,
            max_residual: worst,
        });
    }
    roots.extend(z);
    Ok(roots)
}

/// Coefficients (ascending powers) of `leading · Π (z - r_i)`.
pub fn reconstruct(leading: f64, roots: &[Complex64]) -> Vec<Complex64> {
    let mut poly = vec![Complex64::new(leading, 0.0)];
    for &r in roots {
        let mut next = vec![Complex64::new(0.0, 0.0); poly.len() + 1];
        for (i, &c) in poly.iter().enumerate() {
            next[i + 1] += c;
            next[i] -= c * r;
        }
        poly = next;
    }
    poly
}
