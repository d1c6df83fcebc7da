//! Simulation and stability analysis of fractional-order feedback loops.
//!
//! A plant `G_s(s) = 1 / (a2 s^alpha + a1 s^beta + a0)` under a `PD^delta`
//! controller `G_r(s) = K + Td s^delta` in unity feedback is solved in the
//! time domain with Grünwald–Letnikov sums, either directly or through a
//! two-state model stepped with Euler's method, and analysed through the
//! roots of its commensurate characteristic polynomial.

pub mod analysis;
pub mod direct;
pub mod error;
pub mod fracops;
pub mod model;
pub mod roots;
pub mod statespace;

pub use analysis::{
    characteristic_polynomial, commensurate_base, frequency_response, polynomial_roots,
    principal_poles, stability_report, BodePoint, CommensuratePolynomial, Response,
    StabilityReport, Verdict,
};
pub use direct::{simulate_direct, steady_state_prediction, SimOptions, TimeSeries};
pub use error::{Error, Result};
pub use fracops::{
    gl_coefficients, gl_differintegral, power_law_differintegral, GlCoefficients, SampledSignal,
};
pub use model::{
    characteristic_terms, closed_loop_transfer, controller_transfer, open_loop_transfer,
    plant_transfer, ClosedLoopModel, ControllerParams, FractionalTermList, InputSignal,
    PlantParams,
};
pub use statespace::{
    build_realization, classify_trajectory, equilibrium, simulate_commensurate,
    simulate_state_space, Classification, CommensurateStateSpace, CommensurateTrajectory,
    EquilibriumPoint, Source, StateSpaceRealization, StateTrajectory, Term, Variant,
};
