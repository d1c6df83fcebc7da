use fodesim_core::analysis::on_principal_sheet;
use fodesim_core::{
    build_realization, classify_trajectory, equilibrium, frequency_response, simulate_direct,
    simulate_state_space, stability_report, Response, Result,
};

use crate::config::RunConfig;
use crate::csv::{g12, row};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Solver {
    Direct,
    Statespace,
    Both,
}

/// `t,w,y_direct,y_statespace`; a trailing `diverged` column appears when a
/// run hit the divergence bound, set to 1 on the final row only.
pub fn step(cfg: &RunConfig, solver: Solver) -> Result<String> {
    let model = cfg.model().expect("validated config");
    let opts = cfg.sim_options();
    let want_direct = solver != Solver::Statespace;
    let want_ss = solver != Solver::Direct;

    let (direct, ss) = rayon::join(
        || {
            want_direct
                .then(|| simulate_direct(&model, cfg.h, cfg.t_end, &opts))
                .transpose()
        },
        || {
            want_ss
                .then(|| {
                    let r = build_realization(&model, cfg.variant)?;
                    simulate_state_space(&r, &model, cfg.h, cfg.t_end, &opts)
                })
                .transpose()
        },
    );
    let (direct, ss) = (direct?, ss?);

    let mut len = usize::MAX;
    let mut diverged = false;
    let mut header = vec!["t".to_string(), "w".to_string()];
    let (t, w) = match (&direct, &ss) {
        (Some(d), _) => (&d.t, &d.w),
        (None, Some(s)) => (&s.t, &s.w),
        (None, None) => unreachable!("at least one solver runs"),
    };
    if let Some(d) = &direct {
        header.push("y_direct".into());
        len = len.min(d.len());
        diverged |= d.diverged;
    }
    if let Some(s) = &ss {
        header.push("y_statespace".into());
        len = len.min(s.len());
        diverged |= s.diverged;
    }
    if diverged {
        header.push("diverged".into());
    }

    let mut out = row(&header);
    for k in 0..len {
        let mut fields = vec![g12(t[k]), g12(w[k])];
        if let Some(d) = &direct {
            fields.push(g12(d.y[k]));
        }
        if let Some(s) = &ss {
            fields.push(g12(s.y[k]));
        }
        if diverged {
            fields.push(if k + 1 == len { "1" } else { "0" }.into());
        }
        out.push_str(&row(&fields));
    }
    Ok(out)
}

/// `t,x1,x2,y` plus a classification footer.
pub fn traj(cfg: &RunConfig) -> Result<String> {
    let model = cfg.model().expect("validated config");
    let r = build_realization(&model, cfg.variant)?;
    let tr = simulate_state_space(&r, &model, cfg.h, cfg.t_end, &cfg.sim_options())?;
    let eq = equilibrium(&model, cfg.input_level())?;

    let mut header: Vec<String> = ["t", "x1", "x2", "y"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    if tr.diverged {
        header.push("diverged".into());
    }
    let mut out = row(&header);
    for k in 0..tr.len() {
        let mut fields = vec![g12(tr.t[k]), g12(tr.x1[k]), g12(tr.x2[k]), g12(tr.y[k])];
        if tr.diverged {
            fields.push(if k + 1 == tr.len() { "1" } else { "0" }.into());
        }
        out.push_str(&row(&fields));
    }
    let class = classify_trajectory(&tr, &eq, cfg.settle_window)?;
    out.push_str(&format!(
        "# classification: {class}; equilibrium: {},{}\n",
        g12(eq.x1_star),
        g12(eq.x2_star)
    ));
    Ok(out)
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "none".to_string(), g12)
}

/// `re_v,im_v,on_principal_sheet,re_s,im_s` followed by a `#` summary block.
pub fn poles(cfg: &RunConfig) -> Result<String> {
    let model = cfg.model().expect("validated config");
    let report = stability_report(&model)?;
    let q0 = report.base_order;

    let mut out = row(&["re_v", "im_v", "on_principal_sheet", "re_s", "im_s"].map(String::from));
    for &v in &report.v_roots {
        let on = on_principal_sheet(v, q0);
        let (re_s, im_s) = if on {
            let s = fodesim_core::model::principal_pow(v, 1.0 / q0)?;
            (g12(s.re), g12(s.im))
        } else {
            (String::new(), String::new())
        };
        out.push_str(&row(&[
            g12(v.re),
            g12(v.im),
            if on { "1" } else { "0" }.into(),
            re_s,
            im_s,
        ]));
    }
    let dom = report.dominant_pole;
    out.push_str(&format!("# base_order: {}\n", g12(q0)));
    out.push_str(&format!("# degree: {}\n", report.v_roots.len()));
    out.push_str(&format!("# verdict: {}\n", report.verdict));
    out.push_str(&format!("# sector_margin: {}\n", g12(report.sector_margin)));
    out.push_str(&format!(
        "# dominant_pole: {}\n",
        dom.map_or_else(
            || "none".to_string(),
            |p| format!("{},{}", g12(p.re), g12(p.im))
        )
    ));
    out.push_str(&format!(
        "# dominant_real_part: {}\n",
        opt(report.dominant_real_part())
    ));
    out.push_str(&format!(
        "# S_t (-max Re s): {}\n",
        opt(report.stability_measure)
    ));
    out.push_str(&format!("# T_l |Re/Im|: {}\n", opt(report.damping_measure)));
    out.push_str(&format!(
        "# T_l |Im/Re|: {}\n",
        opt(report.damping_reciprocal)
    ));
    out.push_str(&format!("# notes: {}\n", report.convention_notes));
    Ok(out)
}

/// `omega,mag_db,phase_deg`; points at a pole print `nan`.
pub fn bode(cfg: &RunConfig, which: Response) -> Result<String> {
    let model = cfg.model().expect("validated config");
    let points = frequency_response(&model, cfg.omega_min, cfg.omega_max, cfg.points, which)?;
    let mut out = row(&["omega", "mag_db", "phase_deg"].map(String::from));
    for p in points {
        out.push_str(&row(&[g12(p.omega), g12(p.magnitude_db), g12(p.phase_deg)]));
    }
    Ok(out)
}
