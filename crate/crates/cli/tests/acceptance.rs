//! Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any failure.
//!
//! Independent runs execute on scoped threads; each check is deterministic on its own.

use std::f64::consts::PI;
use std::path::PathBuf;
use std::process::Command;
use std::time::Instant;

use fodesim_core::{
    build_realization, characteristic_polynomial, classify_trajectory, equilibrium,
    gl_differintegral, polynomial_roots, simulate_commensurate, simulate_direct,
    simulate_state_space, stability_report, Classification, ClosedLoopModel,
    CommensurateStateSpace, ControllerParams, InputSignal, PlantParams, SampledSignal, SimOptions,
    Variant, Verdict,
};
use nalgebra::{DMatrix, DVector, RowDVector};

struct Outcome {
    id: &'static str,
    name: &'static str,
    pass: bool,
    detail: String,
}

fn outcome(id: &'static str, name: &'static str, pass: bool, detail: String) -> Outcome {
    Outcome {
        id,
        name,
        pass,
        detail,
    }
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

fn with_td(td: f64) -> ClosedLoopModel {
    ClosedLoopModel::benchmark()
        .with_controller(ControllerParams::new(20.5, td, 1.15).unwrap())
        .unwrap()
}

fn equilibrium_reproduction() -> Outcome {
    let start = Instant::now();
    let ts = simulate_direct(
        &ClosedLoopModel::benchmark(),
        1e-3,
        15.0,
        &SimOptions::default(),
    )
    .unwrap();
    let secs = start.elapsed().as_secs_f64();
    let target = 20.5 / 21.5;
    let y15 = *ts.y.last().unwrap();
    let err = (y15 - target).abs();
    outcome(
        "1",
        "equilibrium reproduction",
        err < 0.02 && (ts.t.last().unwrap() - 15.0).abs() < 1e-9 && secs <= 30.0,
        format!("y(15) = {y15:.6}, target {target:.6}, |err| = {err:.2e} (tol 0.02), {secs:.2} s"),
    )
}

fn stability_dichotomy() -> Outcome {
    let cases = [
        (3.7343, Classification::Converging, Verdict::Stable),
        (0.7343, Classification::Diverging, Verdict::Unstable),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (td, want, want_verdict) in cases {
        let model = with_td(td);
        let real = build_realization(&model, Variant::DerivedConsistent).unwrap();
        let eq = equilibrium(&model, 1.0).unwrap();
        let classes: Vec<Classification> = std::thread::scope(|s| {
            let handles: Vec<_> = [1e-3, 5e-4]
                .map(|h| {
                    let (real, model, eq) = (&real, &model, &eq);
                    s.spawn(move || {
                        let tr = simulate_state_space(real, model, h, 30.0, &SimOptions::default())
                            .unwrap();
                        classify_trajectory(&tr, eq, 0.25).unwrap()
                    })
                })
                .into_iter()
                .collect();
            handles.into_iter().map(|h| h.join().unwrap()).collect()
        });
        let verdict = stability_report(&model).unwrap().verdict;
        pass &= classes.iter().all(|c| *c == want) && verdict == want_verdict;
        parts.push(format!(
            "Td={td}: {} / {} (sector: {verdict})",
            classes[0], classes[1]
        ));
    }
    outcome("2", "stability dichotomy", pass, parts.join("; "))
}

fn cross_validation() -> Outcome {
    let model = ClosedLoopModel::benchmark();
    let real = build_realization(&model, Variant::DerivedConsistent).unwrap();
    let gaps: Vec<f64> = std::thread::scope(|s| {
        let handles: Vec<_> = [1e-3, 5e-4, 2.5e-4]
            .map(|h| {
                let (real, model) = (&real, &model);
                s.spawn(move || {
                    let opts = SimOptions::default();
                    let d = simulate_direct(model, h, 10.0, &opts).unwrap();
                    let ss = simulate_state_space(real, model, h, 10.0, &opts).unwrap();
                    max_abs_diff(&d.y, &ss.y)
                })
            })
            .into_iter()
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });
    let monotone = gaps.windows(2).all(|w| w[1] < w[0]);
    outcome(
        "3",
        "solver cross-validation",
        gaps[2] < 0.05 && monotone,
        format!(
            "max gap {:.3e} / {:.3e} / {:.3e} at h = 1e-3 / 5e-4 / 2.5e-4 (tol 0.05, monotone: {monotone})",
            gaps[0], gaps[1], gaps[2]
        ),
    )
}

fn dominant_pole() -> [Outcome; 2] {
    let r = stability_report(&ClosedLoopModel::benchmark()).unwrap();
    let p = r.dominant_pole.unwrap();
    let re_ok = (p.re + 1.5).abs() <= 0.15;
    let a = outcome(
        "4a",
        "dominant pole real part",
        re_ok,
        format!(
            "dominant pole {:.6} {:+.6}i, Re target -1.5 +- 0.15",
            p.re, p.im
        ),
    );
    let ratio = r.damping_measure.unwrap();
    let recip = r.damping_reciprocal.unwrap();
    let hit = (ratio - 0.37).abs() <= 0.05 || (recip - 0.37).abs() <= 0.05;
    let b = outcome(
        "4b",
        "damping measure convention",
        hit && r.convention_notes.contains("|Re/Im|"),
        format!("|Re/Im| = {ratio:.4}, |Im/Re| = {recip:.4}, target 0.37 +- 0.05"),
    );
    [a, b]
}

fn gl_accuracy() -> Outcome {
    // Γ(3) / Γ(2.5) = 2 / (0.75 √π)
    let exact = 2.0 / (0.75 * PI.sqrt());
    let err = |h: f64| {
        let n = (1.0 / h).round() as usize;
        let sig = SampledSignal::from_fn(h, n, |t| t * t).unwrap();
        let v = gl_differintegral(&sig, 0.5, n, None).unwrap();
        (v - exact).abs()
    };
    let (e1, e2) = (err(1e-3), err(5e-4));
    let rel = e1 / exact;
    let ratio = e1 / e2;
    outcome(
        "5",
        "GL operator accuracy",
        rel < 0.01 && (1.7..=2.3).contains(&ratio),
        format!("rel err {rel:.3e} at h = 1e-3 (tol 1e-2), error ratio {ratio:.3} (want 1.7..2.3)"),
    )
}

/// RK4 on `a2 z'' + (a1 + Td) z' + (a0 + K) z = 1`, output `K z + Td z'`.
fn rk4_reference(h: f64, n: usize) -> Vec<f64> {
    let (a2, a1, a0, k, td) = (0.8, 0.5, 1.0, 20.5, 3.7343);
    let f = |z: f64, v: f64| (v, (1.0 - (a1 + td) * v - (a0 + k) * z) / a2);
    let (mut z, mut v) = (0.0, 0.0);
    let mut y = Vec::with_capacity(n + 1);
    for _ in 0..=n {
        y.push(k * z + td * v);
        let (k1z, k1v) = f(z, v);
        let (k2z, k2v) = f(z + 0.5 * h * k1z, v + 0.5 * h * k1v);
        let (k3z, k3v) = f(z + 0.5 * h * k2z, v + 0.5 * h * k2v);
        let (k4z, k4v) = f(z + h * k3z, v + h * k3v);
        z += h / 6.0 * (k1z + 2.0 * k2z + 2.0 * k3z + k4z);
        v += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
    }
    y
}

fn integer_degeneration() -> Outcome {
    let model = ClosedLoopModel::new(
        PlantParams::new(1.0, 0.5, 0.8, 2.0, 1.0).unwrap(),
        ControllerParams::new(20.5, 3.7343, 1.0).unwrap(),
        InputSignal::UnitStep,
    )
    .unwrap();
    let h = 1e-3;
    let reference: Vec<f64> = rk4_reference(h / 10.0, 100_000)
        .into_iter()
        .step_by(10)
        .collect();
    let opts = SimOptions::default();
    let d = simulate_direct(&model, h, 10.0, &opts).unwrap();
    let real = build_realization(&model, Variant::DerivedConsistent).unwrap();
    let ss = simulate_state_space(&real, &model, h, 10.0, &opts).unwrap();
    let (ed, es) = (
        max_abs_diff(&d.y, &reference),
        max_abs_diff(&ss.y, &reference),
    );
    outcome(
        "6",
        "integer-order degeneration",
        ed < 1e-2 && es < 1e-2 && d.len() == reference.len() && ss.len() == reference.len(),
        format!("max err direct {ed:.3e}, state space {es:.3e} (tol 1e-2)"),
    )
}

fn commensurate_simulator() -> Outcome {
    // D^0.5 x = u: unit step response t^0.5 / Γ(1.5), Γ(1.5) = √π / 2.
    let h = 1e-3;
    let half = CommensurateStateSpace::new(
        0.5,
        DMatrix::zeros(1, 1),
        DVector::from_element(1, 1.0),
        RowDVector::from_element(1, 1.0),
    )
    .unwrap();
    let u = SampledSignal::from_fn(h, 1000, |_| 1.0).unwrap();
    let tr = simulate_commensurate(&half, &u, h).unwrap();
    let exact = 2.0 / PI.sqrt();
    let rel = (tr.y[1000] - exact).abs() / exact;

    // q = 1 against hand-written explicit Euler
    let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -4.0, -0.6]);
    let b = DVector::from_row_slice(&[0.0, 1.0]);
    let c = RowDVector::from_row_slice(&[1.0, 0.0]);
    let ss = CommensurateStateSpace::new(1.0, a, b, c).unwrap();
    let n = 2000;
    let h1 = 5e-3;
    let u1 = SampledSignal::from_fn(h1, n, |t| (2.0 * t).sin()).unwrap();
    let tr1 = simulate_commensurate(&ss, &u1, h1).unwrap();
    let (mut x0, mut x1) = (0.0f64, 0.0f64);
    let mut worst = 0.0f64;
    for k in 0..=n {
        worst = worst
            .max((tr1.x[0][k] - x0).abs())
            .max((tr1.x[1][k] - x1).abs());
        let uk = u1.values()[k];
        let (n0, n1) = (x0 + h1 * x1, x1 + h1 * (-4.0 * x0 - 0.6 * x1 + uk));
        x0 = n0;
        x1 = n1;
    }
    outcome(
        "7",
        "commensurate simulator",
        rel < 0.01 && worst < 1e-12,
        format!(
            "half integrator rel err {rel:.3e} (tol 1e-2); q = 1 vs Euler {worst:.2e} (tol 1e-12)"
        ),
    )
}

fn root_finder() -> Outcome {
    let p = characteristic_polynomial(&ClosedLoopModel::benchmark()).unwrap();
    let roots = polynomial_roots(&p).unwrap();
    let worst = roots
        .iter()
        .map(|r| p.relative_residual(*r))
        .fold(0.0, f64::max);
    let recon = p.reconstruction_error(&roots);
    outcome(
        "8",
        "root-finder contract",
        p.degree() == 44 && roots.len() == 44 && worst < 1e-8 && recon < 1e-6,
        format!(
            "degree {}, {} roots, max residual {worst:.2e} (tol 1e-8), reconstruction {recon:.2e} (tol 1e-6)",
            p.degree(),
            roots.len()
        ),
    )
}

fn run_cli(args: &[&str], threads: &str) -> Vec<u8> {
    let out = Command::new(env!("CARGO_BIN_EXE_fodesim"))
        .args(args)
        .env("FODESIM_THREADS", threads)
        .output()
        .expect("spawn fodesim");
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out.stdout
}

fn determinism() -> Outcome {
    let cfg: PathBuf = [
        env!("CARGO_MANIFEST_DIR"),
        "..",
        "..",
        "configs",
        "benchmark.cfg",
    ]
    .iter()
    .collect();
    let cfg = cfg.to_str().unwrap().to_string();
    let commands: [&[&str]; 5] = [
        &["step", "--t-end", "10"],
        &["traj", "--t-end", "10"],
        &["poles"],
        &["bode"],
        &["bode", "--which", "closed_loop"],
    ];
    let mut mismatched = Vec::new();
    let mut bytes = 0;
    std::thread::scope(|s| {
        let handles: Vec<_> = commands
            .iter()
            .map(|cmd| {
                let cfg = &cfg;
                s.spawn(move || {
                    let mut args = cmd.to_vec();
                    args.extend(["--config", cfg.as_str()]);
                    let runs = [
                        run_cli(&args, "1"),
                        run_cli(&args, "1"),
                        run_cli(&args, "4"),
                    ];
                    (cmd.join(" "), runs)
                })
            })
            .collect();
        for h in handles {
            let (name, runs) = h.join().unwrap();
            bytes += runs[0].len();
            if runs[0].is_empty() || runs[0] != runs[1] || runs[0] != runs[2] {
                mismatched.push(name);
            }
        }
    });
    outcome(
        "9",
        "CLI determinism",
        mismatched.is_empty(),
        if mismatched.is_empty() {
            format!(
                "{} commands byte-identical across runs and thread counts ({bytes} bytes)",
                commands.len()
            )
        } else {
            format!("output differs for: {}", mismatched.join(", "))
        },
    )
}

fn main() {
    let start = Instant::now();
    let mut results: Vec<Outcome> = std::thread::scope(|s| {
        let single: Vec<_> = [
            equilibrium_reproduction as fn() -> Outcome,
            stability_dichotomy,
            cross_validation,
            gl_accuracy,
            integer_degeneration,
            commensurate_simulator,
            root_finder,
            determinism,
        ]
        .into_iter()
        .map(|f| s.spawn(f))
        .collect();
        single.into_iter().map(|h| h.join().unwrap()).collect()
    });
    results.extend(dominant_pole());
    let key = |o: &Outcome| {
        (
            o.id.trim_end_matches(char::is_alphabetic)
                .parse::<u32>()
                .unwrap(),
            o.id.to_string(),
        )
    };
    results.sort_by_key(key);

    let mut failed = 0;
    for r in &results {
        println!(
            "[{}] criterion {:<3} {:<28} {}",
            if r.pass { "PASS" } else { "FAIL" },
            r.id,
            r.name,
            r.detail
        );
        failed += usize::from(!r.pass);
    }
    println!(
        "acceptance: {} passed, {failed} failed ({:.1} s)",
        results.len() - failed,
        start.elapsed().as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
