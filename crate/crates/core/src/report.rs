//! CSV and binary export of trajectories and reports.
//!
//! CSV dialect: comma separated, `.` decimal point, one header row, LF line
//! endings. Floats are written in Rust's shortest round-trip form, so output
//! bytes are reproducible for identical inputs.
//!
//! The coefficient sidecar is little-endian binary: a header of three
//! `u64` values `{n, m_axis, count}` followed by `count` samples, each the
//! contiguous `f64` coefficients of u, then v, then w (row-major modes).

use crate::bounds::BoundsReport;
use crate::dynamics::Trajectory;
use crate::model::{DerivedConstants, DomainSpec, EmbeddingConstants, OregonatorParams};
use crate::spectral::SineBasis;
use crate::tangent::DimensionReport;

fn push_row(out: &mut String, fields: &[String]) {
    out.push_str(&fields.join(","));
    out.push('\n');
}

/// `t, l2_u, l2_v, l2_w, min_grid` per sample.
pub fn trajectory_csv(traj: &Trajectory) -> String {
    let mut out = String::from("t,l2_u,l2_v,l2_w,min_grid\n");
    for s in &traj.samples {
        push_row(
            &mut out,
            &[
                s.state.t.to_string(),
                SineBasis::l2_norm_sq(&s.state.u).sqrt().to_string(),
                SineBasis::l2_norm_sq(&s.state.v).sqrt().to_string(),
                SineBasis::l2_norm_sq(&s.state.w).sqrt().to_string(),
                s.min_grid.to_string(),
            ],
        );
    }
    out
}

/// Binary coefficient dump (see module docs for the layout).
pub fn coefficient_dump(dom: &DomainSpec, traj: &Trajectory) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(&(dom.dimension() as u64).to_le_bytes());
    out.extend_from_slice(&(dom.modes_per_axis() as u64).to_le_bytes());
    out.extend_from_slice(&(traj.samples.len() as u64).to_le_bytes());
    for s in &traj.samples {
        for comp in s.state.components() {
            for &x in comp {
                out.extend_from_slice(&x.to_le_bytes());
            }
        }
    }
    out
}

/// `t, e_w, l6_w, grad_sq, linf, min_grid` per sample.
pub fn bounds_csv(report: &BoundsReport) -> String {
    let mut out = String::from("t,e_w,l6_w,grad_sq,linf,min_grid\n");
    for r in &report.rows {
        push_row(
            &mut out,
            &[
                r.t.to_string(),
                r.e_w.to_string(),
                r.l6_w.to_string(),
                r.grad_sq.to_string(),
                r.linf.to_string(),
                r.min_grid.to_string(),
            ],
        );
    }
    out
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map_or_else(|| "n/a".to_string(), |v| v.to_string())
}

/// Text summary of one certificate run.
pub fn bounds_summary(report: &BoundsReport, consts: &DerivedConstants) -> String {
    let mut s = String::new();
    s.push_str("certificate summary\n");
    s.push_str(&format!(
        "  K1 = {}   K2 = {}   K3 = {}   K_E = {}\n",
        consts.k1, consts.k2, consts.k3, consts.k_e
    ));
    s.push_str(&format!(
        "  linf_bound = {}   dim_bound_m = {}\n",
        consts.linf_bound, consts.dim_bound_m
    ));
    s.push_str(&format!(
        "  positivity: {} (min grid { }, tol {})\n",
        if report.positivity.passed { "pass" } else { "FAIL" },
        report.positivity.min_grid,
        report.positivity.pos_tol
    ));
    s.push_str(&format!(
        "  L2 envelope: {} ({} samples, {} violations, max excess {})\n",
        if report.l2_envelope.passed() { "pass" } else { "FAIL" },
        report.l2_envelope.checked,
        report.l2_envelope.violations.len(),
        report.l2_envelope.max_excess
    ));
    s.push_str(&format!(
        "  L6 envelope ({:?}): {} ({} samples, {} violations, max excess {})\n",
        report.l6_variant,
        if report.l6_envelope.passed() { "pass" } else { "FAIL" },
        report.l6_envelope.checked,
        report.l6_envelope.violations.len(),
        report.l6_envelope.max_excess
    ));
    s.push_str(&format!(
        "  entry time into K1-ball: {}   entry into K_E-ball: {}\n",
        fmt_opt(report.entry_time),
        fmt_opt(report.entry_time_e)
    ));
    s.push_str(&format!(
        "  gradient bound: {} (sup {} vs K_E {})\n",
        if report.gradient.passed { "pass" } else { "FAIL" },
        fmt_opt(report.gradient.sup_grad),
        report.gradient.k_e
    ));
    s.push_str(&format!(
        "  sup-norm bound: {} (sup {} vs bound {})\n",
        if report.linf.passed { "pass" } else { "FAIL" },
        report.linf.sup, report.linf.bound
    ));
    s
}

/// `name, value, formula` rows for every derived constant.
pub fn constants_csv(
    consts: &DerivedConstants,
    dom: &DomainSpec,
    emb: &EmbeddingConstants,
    _p: &OregonatorParams,
) -> String {
    let mut out = String::from("name,value,formula\n");
    let rows: Vec<(&str, String, &str)> = vec![
        ("gamma", dom.poincare_gamma().to_string(), "pi^2 sum_i 1/L_i^2"),
        ("volume", dom.volume().to_string(), "prod_i L_i"),
        ("d0", consts.d0.to_string(), "min{d1; d2; d3}"),
        ("M1", consts.m1.to_string(), "a1 + (b1^2 + (a3 c2/c3)^2)/(2 b2)"),
        ("M2", consts.m2.to_string(), "c2^2/(b2 c3)"),
        (
            "M3",
            consts.m3.to_string(),
            "a1 + (5/6) b1^(6/5)/b2^(1/5) + (a3 c2/c3)^6/(6 b2^5)",
        ),
        ("M4", consts.m4.to_string(), "c2^6/(b2^5 c3)"),
        ("M5", consts.m5.to_string(), "(K1 max{1; M2} + M1^3 |O|/F^2)/d0"),
        ("K1", consts.k1.to_string(), "M1^3 |O|/(gamma d0 F^2 min{1; M2})"),
        ("K2", consts.k2.to_string(), "(K1 K3)^(1/2)"),
        ("K3", consts.k3.to_string(), "M3^7 |O|/(gamma d0 F^6 min{1; M4})"),
        (
            "K_E",
            consts.k_e.to_string(),
            "(M5 + K1 (2(a1^2+b1^2)/d1 + a3^2 c2^2/(2 d3 b2 c3)))/min{1; M2} exp(eta^4 M5 (G1^2/(2 d1) + G2^2/(2 d2)))",
        ),
        (
            "K_n",
            consts.k_n.to_string(),
            "max_{s>=0} (G1+G2) sqrt(K1) C^2 s^(n/2) - (d0/2) s^2",
        ),
        (
            "dim_threshold",
            consts.dim_threshold.to_string(),
            "(2 (K_n + a1 + b1 + c2 + a3)/(d0 Psi))^(n/2) |O|",
        ),
        (
            "dim_bound_m",
            consts.dim_bound_m.to_string(),
            "unique integer m with m-1 <= dim_threshold < m",
        ),
        (
            "N_literal_at_0",
            consts.n_of_r.eval_literal(0.0).to_string(),
            "4 gamma (a1^2+b1^2+b2^2+c2^2+a3^2+c3^2)",
        ),
        (
            "N_corrected_at_0",
            consts.n_of_r.eval_corrected(0.0).to_string(),
            "(4/gamma)(a1^2+b1^2+b2^2+c2^2+a3^2+c3^2)",
        ),
        (
            "N_slope",
            consts.n_of_r.slope.to_string(),
            "(16 F^2 + 8 (G1^2+G2^2)) eta^2",
        ),
        (
            "linf_bound",
            consts.linf_bound.to_string(),
            "C2 (sqrt(K1) + 4 sqrt(K_E) L(sqrt(K_E))); L(r) = sqrt(N(eta^2 r^2))",
        ),
        (
            "eta",
            emb.eta.to_string(),
            "configured H1_0 -> L4 embedding constant",
        ),
    ];
    for (name, value, formula) in rows {
        push_row(
            &mut out,
            &[name.to_string(), value, format!("\"{formula}\"")],
        );
    }
    out
}

/// Aligned human-readable table of the same constants.
pub fn constants_table(
    consts: &DerivedConstants,
    dom: &DomainSpec,
    emb: &EmbeddingConstants,
    p: &OregonatorParams,
) -> String {
    let csv = constants_csv(consts, dom, emb, p);
    let mut out = String::from("derived constants\n");
    for line in csv.lines().skip(1) {
        let mut parts = line.splitn(3, ',');
        let name = parts.next().unwrap_or("");
        let value = parts.next().unwrap_or("");
        out.push_str(&format!("  {name:<18} {value}\n"));
    }
    out
}

/// `m, q_m, mu_m` rows.
pub fn dimension_csv(report: &DimensionReport) -> String {
    let mut out = String::from("m,q_m,mu_m\n");
    for (i, (q, mu)) in report.q_max.iter().zip(report.exponents.iter()).enumerate() {
        push_row(
            &mut out,
            &[(i + 1).to_string(), q.to_string(), mu.to_string()],
        );
    }
    out
}

/// Text summary of a dimension run.
pub fn dimension_summary(report: &DimensionReport) -> String {
    let mut s = String::new();
    s.push_str("dimension summary\n");
    s.push_str(&format!(
        "  m_star = {}   dim_bound_m = {}\n",
        report
            .m_star
            .map_or_else(|| "not found".to_string(), |m| m.to_string()),
        report.dim_bound_m
    ));
    s.push_str(&format!("  kaplan_yorke = {}\n", report.kaplan_yorke));
    s.push_str(&format!("  exponent drift = {}\n", report.drift));
    if let Some(margin) = report.gamma_margin {
        s.push_str(&format!(
            "  gamma certificate margin (max dGamma/dt - rho Gamma) = {margin}\n"
        ));
    }
    s
}
