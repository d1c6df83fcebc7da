//! State-space forms of the closed loop.
//!
//! The two-state model keeps first derivatives on the left,
//!
//! ```text
//! x1' = x2
//! x2' = Σ coef · D^order(source)        source ∈ {x1, x2, w}
//! y   = Σ coef · D^order(source)
//! ```
//!
//! and is stepped with forward Euler while every fractional right-hand term is
//! a GL sum over the accumulated history. The commensurate vector model
//! `D^q x = A x + B u` is stepped directly with GL weights.

use nalgebra::{DMatrix, DVector, RowDVector};

use crate::direct::{add_into, scaled_weights, step_count, SimOptions};
use crate::error::{invalid, Error, Result};
use crate::fracops::{gl_coefficients, history_dot, SampledSignal};
use crate::model::ClosedLoopModel;

/// Which form of the second state equation to build.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Variant {
    /// Term-for-term the published two-state model: the `Td` and `a1` terms
    /// act on `x1` and the input enters with a minus sign.
    Verbatim,
    /// Re-derived from the loop equation through the internal state `z` with
    /// `a2 z^(alpha) + a1 z^(beta) + Td z^(delta) + (a0 + K) z = w`,
    /// `x1 = z`, `x2 = z'`. Reproduces the direct solution.
    #[default]
    DerivedConsistent,
}

impl Variant {
    pub fn as_str(&self) -> &'static str {
        match self {
            Variant::Verbatim => "verbatim",
            Variant::DerivedConsistent => "derived",
        }
    }
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "verbatim" => Ok(Variant::Verbatim),
            "derived" | "derived_consistent" => Ok(Variant::DerivedConsistent),
            other => Err(invalid(format!(
                "unknown variant '{other}' (expected verbatim or derived)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Source {
    X1,
    X2,
    W,
}

/// `coefficient · D^order(source)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Term {
    pub coefficient: f64,
    pub order: f64,
    pub source: Source,
}

impl Term {
    fn new(coefficient: f64, order: f64, source: Source) -> Self {
        Self {
            coefficient,
            order,
            source,
        }
    }
}

/// Two-state realization; `x1' = x2` is implied.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpaceRealization {
    pub variant: Variant,
    /// Right-hand side of `x2'`.
    pub rhs_terms: Vec<Term>,
    pub output_terms: Vec<Term>,
    /// Highest derivative order of the underlying loop equation.
    pub system_order: f64,
}

impl StateSpaceRealization {
    pub fn state_count(&self) -> usize {
        2
    }
}

pub fn build_realization(
    model: &ClosedLoopModel,
    variant: Variant,
) -> Result<StateSpaceRealization> {
    let p = &model.plant;
    let c = &model.controller;
    if p.a2 == 0.0 {
        return Err(invalid(
            "a2 must be nonzero to solve for the highest derivative",
        ));
    }
    let o_static = 2.0 - p.alpha;
    let o_td = 1.0 + c.delta - p.alpha;
    let o_a1 = 1.0 + p.beta - p.alpha;
    let g = model.static_gain_coefficient();
    let (mid_source, input_sign) = match variant {
        Variant::Verbatim => (Source::X1, -1.0),
        Variant::DerivedConsistent => (Source::X2, 1.0),
    };
    let rhs_terms = vec![
        Term::new(-g / p.a2, o_static, Source::X1),
        Term::new(-c.td / p.a2, o_td, mid_source),
        Term::new(-p.a1 / p.a2, o_a1, mid_source),
        Term::new(input_sign / p.a2, o_static, Source::W),
    ];
    let output_terms = vec![
        Term::new(c.k, 0.0, Source::X1),
        Term::new(c.td, c.delta - 1.0, Source::X2),
    ];
    Ok(StateSpaceRealization {
        variant,
        rhs_terms,
        output_terms,
        system_order: model.system_order(),
    })
}

/// Phase-plane path of the two-state model.
#[derive(Debug, Clone, PartialEq)]
pub struct StateTrajectory {
    pub step: f64,
    pub t: Vec<f64>,
    pub x1: Vec<f64>,
    pub x2: Vec<f64>,
    pub y: Vec<f64>,
    pub w: Vec<f64>,
    pub diverged: bool,
}

impl StateTrajectory {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }
}

/// Per-source kernels `Σ coef · h^-order · c_j`, trailing exact zeros dropped.
struct SourceKernels {
    x1: Vec<f64>,
    x2: Vec<f64>,
    w: Vec<f64>,
}

impl SourceKernels {
    fn build(terms: &[Term], h: f64, len: usize) -> Result<Self> {
        let mut kernels = Self {
            x1: Vec::new(),
            x2: Vec::new(),
            w: Vec::new(),
        };
        for term in terms {
            if term.coefficient == 0.0 {
                continue;
            }
            let weights = scaled_weights(term.coefficient, term.order, h, len)?;
            let target = match term.source {
                Source::X1 => &mut kernels.x1,
                Source::X2 => &mut kernels.x2,
                Source::W => &mut kernels.w,
            };
            if target.is_empty() {
                *target = weights;
            } else {
                add_into(target, &weights);
            }
        }
        for k in [&mut kernels.x1, &mut kernels.x2, &mut kernels.w] {
            while k.last() == Some(&0.0) {
                k.pop();
            }
        }
        Ok(kernels)
    }

    fn apply(&self, x1: &[f64], x2: &[f64], w: &[f64], k: usize, memory: Option<usize>) -> f64 {
        history_dot(&self.x1, x1, k, memory)
            + history_dot(&self.x2, x2, k, memory)
            + history_dot(&self.w, w, k, memory)
    }
}

/// Forward-Euler stepping of the two-state model from rest.
pub fn simulate_state_space(
    realization: &StateSpaceRealization,
    model: &ClosedLoopModel,
    h: f64,
    t_end: f64,
    opts: &SimOptions,
) -> Result<StateTrajectory> {
    opts.validate()?;
    let n = step_count(h, t_end)?;
    let w = model.input.sample(h, n)?;
    let len = opts.memory.map_or(n, |m| m.min(n));
    let rhs = SourceKernels::build(&realization.rhs_terms, h, len)?;
    let out = SourceKernels::build(&realization.output_terms, h, len)?;

    let mut x1 = vec![0.0; n + 1];
    let mut x2 = vec![0.0; n + 1];
    let mut y = Vec::with_capacity(n + 1);
    let mut diverged = false;
    for k in 0..=n {
        let yk = out.apply(&x1, &x2, &w, k, opts.memory);
        if opts.exceeded(x1[k]) || opts.exceeded(x2[k]) || opts.exceeded(yk) {
            diverged = true;
            if x1[k].is_finite() && x2[k].is_finite() && yk.is_finite() {
                y.push(yk);
            }
            break;
        }
        y.push(yk);
        if k == n {
            break;
        }
        let f = rhs.apply(&x1, &x2, &w, k, opts.memory);
        x1[k + 1] = x1[k] + h * x2[k];
        x2[k + 1] = x2[k] + h * f;
    }

    let m = y.len();
    x1.truncate(m);
    x2.truncate(m);
    Ok(StateTrajectory {
        step: h,
        t: (0..m).map(|k| k as f64 * h).collect(),
        x1,
        x2,
        y,
        w: w[..m].to_vec(),
        diverged,
    })
}

/// `D^q x = A x + B u`, `y = C x` with a single commensurate order `q`.
#[derive(Debug, Clone, PartialEq)]
pub struct CommensurateStateSpace {
    pub order: f64,
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub c: RowDVector<f64>,
}

impl CommensurateStateSpace {
    pub fn new(order: f64, a: DMatrix<f64>, b: DVector<f64>, c: RowDVector<f64>) -> Result<Self> {
        if !(order > 0.0 && order.is_finite()) {
            return Err(invalid(format!(
                "commensurate order must be positive, got {order}"
            )));
        }
        let n = a.nrows();
        if n == 0 || a.ncols() != n || b.len() != n || c.len() != n {
            return Err(invalid(format!(
                "dimension mismatch: A is {}x{}, B has {} rows, C has {} columns",
                a.nrows(),
                a.ncols(),
                b.len(),
                c.len()
            )));
        }
        Ok(Self { order, a, b, c })
    }

    /// Stability results for this form are usually stated for `0 < q <= 1`.
    pub fn order_in_usual_range(&self) -> bool {
        self.order <= 1.0
    }

    pub fn state_count(&self) -> usize {
        self.a.nrows()
    }
}

/// Trajectory of a commensurate system; `x[i]` is the series of state `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct CommensurateTrajectory {
    pub step: f64,
    pub t: Vec<f64>,
    pub x: Vec<Vec<f64>>,
    pub y: Vec<f64>,
    pub u: Vec<f64>,
    pub diverged: bool,
}

/// GL stepping from rest:
/// `x_{k+1} = h^q (A x_k + B u_k) - Σ_{j=1..k+1} c_j x_{k+1-j}`.
pub fn simulate_commensurate(
    ss: &CommensurateStateSpace,
    input: &SampledSignal,
    h: f64,
) -> Result<CommensurateTrajectory> {
    if (input.step() - h).abs() > 1e-12 * h {
        return Err(invalid(format!(
            "input sampled at step {} but simulation step is {h}",
            input.step()
        )));
    }
    let n = input.len() - 1;
    let dim = ss.state_count();
    let weights = gl_coefficients(ss.order, n + 1)?.into_weights();
    let hq = h.powf(ss.order);
    let u = input.values();

    let mut states: Vec<DVector<f64>> = Vec::with_capacity(n + 1);
    states.push(DVector::zeros(dim));
    let mut diverged = false;
    for k in 0..n {
        let mut next = (&ss.a * &states[k] + &ss.b * u[k]) * hq;
        for j in 1..=k + 1 {
            next.axpy(-weights[j], &states[k + 1 - j], 1.0);
        }
        if next.iter().any(|v| !v.is_finite()) {
            diverged = true;
            break;
        }
        states.push(next);
    }

    let m = states.len();
    let x = (0..dim)
        .map(|i| states.iter().map(|s| s[i]).collect())
        .collect();
    Ok(CommensurateTrajectory {
        step: h,
        t: (0..m).map(|k| k as f64 * h).collect(),
        x,
        y: states.iter().map(|s| ss.c.dot(&s.transpose())).collect(),
        u: u[..m].to_vec(),
        diverged,
    })
}

/// Rest point of the two-state model under a constant input.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquilibriumPoint {
    pub x1_star: f64,
    pub x2_star: f64,
    pub y_star: f64,
}

/// Statics of the derived form: `x2* = 0`, `x1* = w / (a0 + K)`, `y* = K x1*`.
pub fn equilibrium(model: &ClosedLoopModel, w_const: f64) -> Result<EquilibriumPoint> {
    let g = model.static_gain_coefficient();
    if g == 0.0 {
        return Err(Error::NoEquilibrium);
    }
    let x1_star = w_const / g;
    Ok(EquilibriumPoint {
        x1_star,
        x2_star: 0.0,
        y_star: model.controller.k * w_const / g,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Classification {
    Converging,
    Diverging,
    Undetermined,
}

impl Classification {
    pub fn as_str(&self) -> &'static str {
        match self {
            Classification::Converging => "converging",
            Classification::Diverging => "diverging",
            Classification::Undetermined => "undetermined",
        }
    }
}

impl std::fmt::Display for Classification {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

pub const DEFAULT_SETTLE_WINDOW: f64 = 0.25;

/// Compares the peak distance from `eq` over the last `settle_window` of the
/// run with the peak over an equally long window ending at the midpoint.
/// Ratio below 0.5 is converging, above 2 diverging.
pub fn classify_trajectory(
    traj: &StateTrajectory,
    eq: &EquilibriumPoint,
    settle_window: f64,
) -> Result<Classification> {
    let n = traj.len();
    if n < 10 {
        return Err(invalid(format!(
            "trajectory has {n} samples, need at least 10"
        )));
    }
    if !(settle_window > 0.0 && settle_window <= 0.5) {
        return Err(invalid(format!(
            "settle window must lie in (0, 0.5], got {settle_window}"
        )));
    }
    if traj.diverged {
        return Ok(Classification::Diverging);
    }
    let r: Vec<f64> = traj
        .x1
        .iter()
        .zip(&traj.x2)
        .map(|(a, b)| (a - eq.x1_star).hypot(b - eq.x2_star))
        .collect();
    let window = ((settle_window * n as f64) as usize).max(1);
    let half = n / 2;
    let peak = |s: &[f64]| s.iter().cloned().fold(0.0, f64::max);
    let late = peak(&r[n - window..]);
    let mid = peak(&r[half.saturating_sub(window)..half]);

    let ratio = if late < 1e-12 && mid < 1e-12 {
        0.0
    } else if mid == 0.0 {
        f64::INFINITY
    } else {
        late / mid
    };
    Ok(if ratio < 0.5 {
        Classification::Converging
    } else if ratio > 2.0 {
        Classification::Diverging
    } else {
        Classification::Undetermined
    })
}
