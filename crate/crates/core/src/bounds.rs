//! Norm functionals and numerical verification of the a-priori estimates
//! along simulated trajectories: weighted L² and L⁶ decay envelopes,
//! absorbing-set entry times, gradient and sup-norm bounds, embedding
//! calibration, and the time-Hölder diagnostic.
//!
//! Envelope checks carry a small slack: a relative part (round-off) plus an
//! additive `dt`-proportional allowance, since the discrete flow can violate
//! a continuous-time inequality by O(dt). Violations are reported with their
//! magnitudes, never thrown.
//!
//! The L⁶ envelope has two variants. The `Literal` one uses the decay rate
//! `10 γ d0`. Chasing the constants through `∇(u³) = 3 u² ∇u` gives
//! `5 d ‖u²∇u‖² = (5/9) d ‖∇u³‖²` and hence the rate `(10/3) γ d0` with a
//! correspondingly larger floor; that `Corrected` variant is the default and
//! is the one the simulated dynamics actually satisfy. The absorbing radius
//! `K3` is untouched by the distinction.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dynamics::{Sample, Trajectory};
use crate::error::{Error, Result};
use crate::model::{DerivedConstants, DomainSpec, OregonatorParams};
use crate::spectral::SineBasis;

/// Weighted L² energy `E_w = ‖u‖² + ‖v‖² + M2 ‖w‖²` (Parseval, exact).
pub fn weighted_l2_energy(state: &crate::dynamics::SpectralState, p: &OregonatorParams) -> f64 {
    SineBasis::l2_norm_sq(&state.u)
        + SineBasis::l2_norm_sq(&state.v)
        + p.m2() * SineBasis::l2_norm_sq(&state.w)
}

/// Weighted L⁶ energy `‖u‖⁶_{L⁶} + ‖v‖⁶_{L⁶} + M4 ‖w‖⁶_{L⁶}` by grid
/// quadrature.
pub fn weighted_l6_energy(
    basis: &SineBasis,
    state: &crate::dynamics::SpectralState,
    p: &OregonatorParams,
) -> Result<f64> {
    Ok(basis.lp_integral(&state.u, 6)?
        + basis.lp_integral(&state.v, 6)?
        + p.m4() * basis.lp_integral(&state.w, 6)?)
}

/// Unweighted L⁶ energy `Σ_components ‖·‖⁶_{L⁶}`.
pub fn l6_energy(basis: &SineBasis, state: &crate::dynamics::SpectralState) -> Result<f64> {
    Ok(basis.lp_integral(&state.u, 6)?
        + basis.lp_integral(&state.v, 6)?
        + basis.lp_integral(&state.w, 6)?)
}

/// Unweighted gradient energy `‖∇u‖² + ‖∇v‖² + ‖∇w‖²`.
pub fn grad_energy(basis: &SineBasis, state: &crate::dynamics::SpectralState) -> Result<f64> {
    Ok(basis.grad_norm_sq(&state.u)?
        + basis.grad_norm_sq(&state.v)?
        + basis.grad_norm_sq(&state.w)?)
}

/// Weighted gradient energy `‖∇u‖² + ‖∇v‖² + M2 ‖∇w‖²`.
pub fn grad_energy_weighted(
    basis: &SineBasis,
    state: &crate::dynamics::SpectralState,
    p: &OregonatorParams,
) -> Result<f64> {
    Ok(basis.grad_norm_sq(&state.u)?
        + basis.grad_norm_sq(&state.v)?
        + p.m2() * basis.grad_norm_sq(&state.w)?)
}

/// Grid sup-norm over the three components.
pub fn sup_norm(basis: &SineBasis, state: &crate::dynamics::SpectralState) -> Result<f64> {
    let mut m = 0.0f64;
    for c in state.components() {
        m = m.max(basis.sup_grid(c)?);
    }
    Ok(m)
}

/// Squared product-space L⁴ norm, `‖g‖²_{L⁴} = (∫ u⁴ + v⁴ + w⁴)^{1/2}`.
pub fn l4_norm_sq(basis: &SineBasis, state: &crate::dynamics::SpectralState) -> Result<f64> {
    let quartic = basis.lp_integral(&state.u, 4)?
        + basis.lp_integral(&state.v, 4)?
        + basis.lp_integral(&state.w, 4)?;
    Ok(quartic.sqrt())
}

/// Asymptote of the L² envelope, `M1³ |Ω| / (3 γ d0 F²)`.
pub fn l2_asymptote(p: &OregonatorParams, dom: &DomainSpec) -> f64 {
    let a3c2_over_c3 = p.a3 * p.c2 / p.c3;
    let m1 = p.a1 + (p.b1 * p.b1 + a3c2_over_c3 * a3c2_over_c3) / (2.0 * p.b2);
    m1.powi(3) * dom.volume() / (3.0 * dom.poincare_gamma() * p.d0() * p.f * p.f)
}

/// Slack policy for envelope checks.
#[derive(Debug, Clone, Copy)]
pub struct EnvelopeOptions {
    /// Relative slack on the right-hand side (round-off).
    pub rel_slack: f64,
    /// Step size of the run, for the O(dt) discrete-flow allowance.
    pub dt: f64,
}

impl Default for EnvelopeOptions {
    fn default() -> Self {
        Self {
            rel_slack: 1e-6,
            dt: 1e-3,
        }
    }
}

/// One envelope failure: the measured energy exceeded the certified bound
/// plus slack at time `t`.
#[derive(Debug, Clone, Copy)]
pub struct EnvelopeViolation {
    pub t: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub excess: f64,
}

/// Outcome of an envelope sweep over trajectory samples.
#[derive(Debug, Clone, Default)]
pub struct EnvelopeCheck {
    pub violations: Vec<EnvelopeViolation>,
    pub max_excess: f64,
    pub checked: usize,
}

impl EnvelopeCheck {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

fn sweep_envelope(
    pairs: impl Iterator<Item = (f64, f64)>,
    rhs_of: impl Fn(f64) -> f64,
    lipschitz_of: impl Fn(f64) -> f64,
    opts: &EnvelopeOptions,
) -> EnvelopeCheck {
    let mut check = EnvelopeCheck::default();
    for (t, lhs) in pairs {
        let rhs = rhs_of(t);
        let slack = opts.rel_slack * rhs + opts.dt * lipschitz_of(rhs);
        check.checked += 1;
        if lhs > rhs + slack {
            let excess = lhs - rhs - slack;
            check.max_excess = check.max_excess.max(excess);
            check.violations.push(EnvelopeViolation { t, lhs, rhs, excess });
        }
    }
    check
}

/// Gronwall envelope for the weighted L² energy:
/// `E_w(t) ≤ e^{-2 γ d0 t} E_w(0) + M1³|Ω|/(3 γ d0 F²)`.
pub fn check_l2_envelope(
    traj: &Trajectory,
    p: &OregonatorParams,
    dom: &DomainSpec,
    opts: &EnvelopeOptions,
) -> EnvelopeCheck {
    let rate = 2.0 * dom.poincare_gamma() * p.d0();
    let asympt = l2_asymptote(p, dom);
    // Source of the differential inequality, 2 M1³|Ω|/(3F²) = rate · asympt.
    let source = rate * asympt;
    let t0 = traj.samples[0].state.t;
    let e0 = weighted_l2_energy(&traj.samples[0].state, p);
    sweep_envelope(
        traj.samples
            .iter()
            .map(|s| (s.state.t, weighted_l2_energy(&s.state, p))),
        |t| (-(rate) * (t - t0)).exp() * e0 + asympt,
        |rhs| rate * rhs + source,
        opts,
    )
}

/// Which L⁶ decay rate to certify.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum L6Rate {
    /// Rate `10 γ d0`, floor `M3⁷|Ω|/(10 γ d0 F⁶ min{1,M4})`.
    Literal,
    /// Rate `(10/3) γ d0`, floor `(9/35) M3⁷|Ω|/(γ d0 F⁶ min{1,M4})`.
    Corrected,
}

/// Gronwall envelope for the L⁶ energy (componentwise sum), in the printed
/// `max/min`-prefactor form:
/// `U6(t) ≤ (max{1,M4}/min{1,M4}) e^{-r t} U6(0) + floor`.
pub fn check_l6_envelope(
    basis: &SineBasis,
    traj: &Trajectory,
    p: &OregonatorParams,
    dom: &DomainSpec,
    opts: &EnvelopeOptions,
    variant: L6Rate,
) -> Result<EnvelopeCheck> {
    let gamma = dom.poincare_gamma();
    let d0 = p.d0();
    let m4 = p.m4();
    let a3c2_over_c3 = p.a3 * p.c2 / p.c3;
    let m3 = p.a1
        + (5.0 / 6.0) * p.b1.powf(1.2) / p.b2.powf(0.2)
        + a3c2_over_c3.powi(6) / (6.0 * p.b2.powi(5));
    let m3_term = m3.powi(7) * dom.volume() / p.f.powi(6);

    let (rate, floor) = match variant {
        L6Rate::Literal => (10.0 * gamma * d0, m3_term / (10.0 * gamma * d0 * m4.min(1.0))),
        L6Rate::Corrected => (
            10.0 / 3.0 * gamma * d0,
            (6.0 / 7.0) * m3_term / (10.0 / 3.0 * gamma * d0 * m4.min(1.0)),
        ),
    };
    let prefactor = m4.max(1.0) / m4.min(1.0);
    let source = rate * floor;

    let t0 = traj.samples[0].state.t;
    let u6_0 = l6_energy(basis, &traj.samples[0].state)?;
    let mut pairs = Vec::with_capacity(traj.samples.len());
    for s in &traj.samples {
        pairs.push((s.state.t, l6_energy(basis, &s.state)?));
    }
    Ok(sweep_envelope(
        pairs.into_iter(),
        |t| prefactor * (-(rate) * (t - t0)).exp() * u6_0 + floor,
        |rhs| rate * rhs + source,
        opts,
    ))
}

/// First sample time after which the supplied energy stays at or below
/// `radius` for the remainder of the trajectory; `None` if it never does.
pub fn absorbing_entry_time(series: &[(f64, f64)], radius: f64) -> Option<f64> {
    let mut entry = None;
    for &(t, e) in series {
        if e > radius {
            entry = None;
        } else if entry.is_none() {
            entry = Some(t);
        }
    }
    entry
}

/// [`absorbing_entry_time`] applied to the weighted L² energy.
pub fn absorbing_entry_time_l2(
    traj: &Trajectory,
    p: &OregonatorParams,
    radius: f64,
) -> Option<f64> {
    let series: Vec<(f64, f64)> = traj
        .samples
        .iter()
        .map(|s| (s.state.t, weighted_l2_energy(&s.state, p)))
        .collect();
    absorbing_entry_time(&series, radius)
}

/// Gradient-bound verdict: the sup of the gradient energy one time unit past
/// the measured absorbing entry, against `K_E`.
#[derive(Debug, Clone)]
pub struct GradientReport {
    pub entry_time: Option<f64>,
    /// Sup of the unweighted gradient energy over the window `t ≥ entry + 1`.
    pub sup_grad: Option<f64>,
    pub k_e: f64,
    pub passed: bool,
}

/// Verify `‖(∇u, ∇v, ∇w)‖² ≤ K_E` after the measured entry time plus one.
pub fn check_gradient_bound(
    basis: &SineBasis,
    traj: &Trajectory,
    p: &OregonatorParams,
    consts: &DerivedConstants,
    opts: &EnvelopeOptions,
) -> Result<GradientReport> {
    let entry = absorbing_entry_time_l2(traj, p, consts.k1 * 1.001);
    let Some(entry) = entry else {
        return Ok(GradientReport {
            entry_time: None,
            sup_grad: None,
            k_e: consts.k_e,
            passed: false,
        });
    };
    let mut sup: Option<f64> = None;
    for s in &traj.samples {
        if s.state.t >= entry + 1.0 {
            let g = grad_energy(basis, &s.state)?;
            sup = Some(sup.map_or(g, |m: f64| m.max(g)));
        }
    }
    let passed = match sup {
        Some(g) => g <= consts.k_e * (1.0 + opts.rel_slack),
        None => false, // horizon too short to open the window
    };
    Ok(GradientReport {
        entry_time: Some(entry),
        sup_grad: sup,
        k_e: consts.k_e,
        passed,
    })
}

/// Sup-norm verdict against the semigroup bound
/// `C(2)(√K1 + 4 √K_E L(√K_E))`.
#[derive(Debug, Clone)]
pub struct LinfReport {
    pub sup: f64,
    pub bound: f64,
    pub passed: bool,
}

/// Compare the grid sup-norm on the supplied (post-entry) samples against
/// the certified sup-norm bound.
pub fn check_linf_bound(
    basis: &SineBasis,
    samples: &[Sample],
    consts: &DerivedConstants,
) -> Result<LinfReport> {
    let mut sup = 0.0f64;
    for s in samples {
        sup = sup.max(sup_norm(basis, &s.state)?);
    }
    Ok(LinfReport {
        sup,
        bound: consts.linf_bound,
        passed: sup <= consts.linf_bound,
    })
}

/// `‖φ‖_{L⁴} / ‖∇φ‖` for one scalar coefficient field.
pub fn l4_grad_ratio(basis: &SineBasis, coeffs: &[f64]) -> Result<f64> {
    let l4 = basis.lp_integral(coeffs, 4)?.powf(0.25);
    let grad = basis.grad_norm_sq(coeffs)?.sqrt();
    if grad == 0.0 {
        return Err(Error::ZeroDifference);
    }
    Ok(l4 / grad)
}

/// Numerical lower bound for the embedding constant `eta`: the max of
/// `‖φ‖_{L⁴}/‖∇φ‖` over random band-limited fields. A sampled max under
/// the true sup, hence a lower bound only.
pub fn calibrate_eta(basis: &SineBasis, trials: usize, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = basis.modes_total();
    let mut best = 0.0f64;
    for _ in 0..trials.max(1) {
        let mut c = basis.zero_coeffs();
        for coeff in c.iter_mut().take(m) {
            *coeff = rng.gen_range(-1.0..1.0);
        }
        best = best.max(l4_grad_ratio(basis, &c)?);
    }
    Ok(best)
}

/// Least-squares exponent of `‖g(t) - g(t0)‖ ~ (t - t0)^θ` over a short
/// sample window. Smooth trajectories give θ ≈ 1; the certified regularity
/// is θ ≥ 1/2.
pub fn time_holder_exponent(samples: &[Sample]) -> Result<f64> {
    if samples.len() < 8 {
        return Err(Error::DegenerateFit(1e-13));
    }
    let first = &samples[0].state;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for s in &samples[1..] {
        let dtime = s.state.t - first.t;
        let mut dsq = 0.0;
        for (a, b) in s.state.components().iter().zip(first.components().iter()) {
            dsq += a
                .iter()
                .zip(b.iter())
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>();
        }
        let disp = dsq.sqrt();
        if disp > 1e-13 && dtime > 0.0 {
            xs.push(dtime.ln());
            ys.push(disp.ln());
        }
    }
    if xs.len() < 4 {
        return Err(Error::DegenerateFit(1e-13));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (x, y) in xs.iter().zip(ys.iter()) {
        num += (x - mx) * (y - my);
        den += (x - mx) * (x - mx);
    }
    if den == 0.0 {
        return Err(Error::DegenerateFit(1e-13));
    }
    Ok(num / den)
}

/// Positivity audit over a trajectory.
#[derive(Debug, Clone, Copy)]
pub struct PositivityReport {
    pub min_grid: f64,
    pub pos_tol: f64,
    pub passed: bool,
}

pub fn check_positivity(traj: &Trajectory, pos_tol: f64) -> PositivityReport {
    let min_grid = traj.min_grid_overall();
    PositivityReport {
        min_grid,
        pos_tol,
        passed: min_grid >= -pos_tol,
    }
}

/// One per-sample row of the certificate report.
#[derive(Debug, Clone, Copy)]
pub struct BoundsRow {
    pub t: f64,
    pub e_w: f64,
    pub l6_w: f64,
    pub grad_sq: f64,
    pub linf: f64,
    pub min_grid: f64,
}

/// Full certificate verdict for one trajectory.
#[derive(Debug, Clone)]
pub struct BoundsReport {
    pub rows: Vec<BoundsRow>,
    pub l2_envelope: EnvelopeCheck,
    pub l6_envelope: EnvelopeCheck,
    pub l6_variant: L6Rate,
    pub positivity: PositivityReport,
    /// Entry time into the L² absorbing ball of radius `K1 (1 + 1e-3)`.
    pub entry_time: Option<f64>,
    /// Entry time into the E absorbing ball (gradient energy ≤ K_E).
    pub entry_time_e: Option<f64>,
    pub gradient: GradientReport,
    pub linf: LinfReport,
}

impl BoundsReport {
    pub fn compute(
        basis: &SineBasis,
        traj: &Trajectory,
        p: &OregonatorParams,
        dom: &DomainSpec,
        consts: &DerivedConstants,
        opts: &EnvelopeOptions,
        pos_tol: f64,
        l6_variant: L6Rate,
    ) -> Result<Self> {
        let mut rows = Vec::with_capacity(traj.samples.len());
        for s in &traj.samples {
            rows.push(BoundsRow {
                t: s.state.t,
                e_w: weighted_l2_energy(&s.state, p),
                l6_w: weighted_l6_energy(basis, &s.state, p)?,
                grad_sq: grad_energy_weighted(basis, &s.state, p)?,
                linf: sup_norm(basis, &s.state)?,
                min_grid: s.min_grid,
            });
        }

        let l2_envelope = check_l2_envelope(traj, p, dom, opts);
        let l6_envelope = check_l6_envelope(basis, traj, p, dom, opts, l6_variant)?;
        let positivity = check_positivity(traj, pos_tol);
        let entry_time = absorbing_entry_time_l2(traj, p, consts.k1 * 1.001);
        let grad_series: Vec<(f64, f64)> = traj
            .samples
            .iter()
            .zip(rows.iter())
            .map(|(s, _)| -> Result<(f64, f64)> {
                Ok((s.state.t, grad_energy(basis, &s.state)?))
            })
            .collect::<Result<_>>()?;
        let entry_time_e = absorbing_entry_time(&grad_series, consts.k_e * 1.001);
        let gradient = check_gradient_bound(basis, traj, p, consts, opts)?;

        let post: Vec<Sample> = match gradient.entry_time {
            Some(entry) => traj
                .samples
                .iter()
                .filter(|s| s.state.t >= entry)
                .cloned()
                .collect(),
            None => Vec::new(),
        };
        let linf = check_linf_bound(basis, &post, consts)?;

        Ok(Self {
            rows,
            l2_envelope,
            l6_envelope,
            l6_variant,
            positivity,
            entry_time,
            entry_time_e,
            gradient,
            linf,
        })
    }

    /// Count of all failed checks (envelope violations count individually).
    pub fn violation_count(&self) -> usize {
        let mut n = self.l2_envelope.violations.len() + self.l6_envelope.violations.len();
        if !self.positivity.passed {
            n += 1;
        }
        if !self.gradient.passed {
            n += 1;
        }
        if !self.linf.passed {
            n += 1;
        }
        n
    }

    pub fn passed(&self) -> bool {
        self.violation_count() == 0
    }
}
