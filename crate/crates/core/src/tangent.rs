//! Variational (linearized) flow along a trajectory, Benettin Lyapunov
//! spectra with Gram-Schmidt reorthonormalization, the trace functional
//! `q_m`, Kaplan-Yorke dimension, and the norm-quotient growth certificate.
//!
//! The variational system advances tangent triples `Z = (U, V, W)` by
//!
//! ```text
//! U' = d1 ΔU + a1 U + b1 V - 2F u U - G1 v U - G1 u V
//! V' = d2 ΔV - b2 V + c2 W - G2 v U - G2 u V
//! W' = d3 ΔW + a3 U - c3 W
//! ```
//!
//! with `(u, v)` the base trajectory (the diffusion coefficient of the third
//! row is d3, matching the operator of the base system). Tangents are
//! stepped by the exact linearization of the base IMEX map, with the
//! Jacobian frozen at the stage base states, so that Lyapunov exponents of
//! the discrete flow are measured consistently.
//!
//! Two Rayleigh quotients of a difference `y = g1 - g2` are exposed: the
//! pure-Laplacian (unweighted) quotient `Σ λ_j y_j² / Σ y_j²`, which is the
//! one certified against `ρ = N(R)/d0`, and the diffusion-weighted variant
//! `Σ d_i λ_j y_{ij}² / Σ y_j²`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bounds::l4_norm_sq;
use crate::dynamics::{reaction_spectral, SpectralState, IntegratorConfig, Scheme, Trajectory};
use crate::error::{Error, Result};
use crate::model::{DerivedConstants, OregonatorParams};
use crate::spectral::SineBasis;

/// One tangent direction: sine coefficients of `(U, V, W)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tangent {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub w: Vec<f64>,
}

impl Tangent {
    pub fn zero(basis: &SineBasis) -> Self {
        Self {
            u: basis.zero_coeffs(),
            v: basis.zero_coeffs(),
            w: basis.zero_coeffs(),
        }
    }

    pub fn components(&self) -> [&[f64]; 3] {
        [&self.u, &self.v, &self.w]
    }

    /// L²-product inner product (Parseval over the three components).
    pub fn dot(&self, other: &Self) -> f64 {
        let mut acc = 0.0;
        for (a, b) in self.components().iter().zip(other.components().iter()) {
            acc += a.iter().zip(b.iter()).map(|(x, y)| x * y).sum::<f64>();
        }
        acc
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn scale(&mut self, s: f64) {
        for c in [&mut self.u, &mut self.v, &mut self.w] {
            for x in c.iter_mut() {
                *x *= s;
            }
        }
    }

    /// `self -= s * other`
    pub fn axpy(&mut self, s: f64, other: &Self) {
        for (c, o) in [
            (&mut self.u, &other.u),
            (&mut self.v, &other.v),
            (&mut self.w, &other.w),
        ] {
            for (x, y) in c.iter_mut().zip(o.iter()) {
                *x -= s * y;
            }
        }
    }
}

/// Difference of two states as a tangent-like triple.
pub fn state_difference(a: &SpectralState, b: &SpectralState) -> Tangent {
    Tangent {
        u: a.u.iter().zip(b.u.iter()).map(|(x, y)| x - y).collect(),
        v: a.v.iter().zip(b.v.iter()).map(|(x, y)| x - y).collect(),
        w: a.w.iter().zip(b.w.iter()).map(|(x, y)| x - y).collect(),
    }
}

/// Base fields synthesized once per Jacobian evaluation (only `u` and `v`
/// enter the quadratic couplings).
pub struct BaseGrids {
    u: Vec<f64>,
    v: Vec<f64>,
}

impl BaseGrids {
    pub fn new(basis: &SineBasis, base: &SpectralState) -> Result<Self> {
        Ok(Self {
            u: basis.synthesize_dealias(&base.u)?,
            v: basis.synthesize_dealias(&base.v)?,
        })
    }
}

/// Apply the reaction Jacobian `f'(g)` at the given base to one tangent.
/// Diffusion is not included here; it is handled by the modal propagators.
pub fn jacobian_apply(
    basis: &SineBasis,
    p: &OregonatorParams,
    base: &BaseGrids,
    z: &Tangent,
) -> Result<Tangent> {
    let m = basis.modes_total();
    for c in z.components() {
        if c.len() != m {
            return Err(Error::ShapeMismatch {
                expected: m,
                got: c.len(),
                context: "tangent coefficients",
            });
        }
    }
    let ug = basis.synthesize_dealias(&z.u)?;
    let vg = basis.synthesize_dealias(&z.v)?;

    let q1: Vec<f64> = base
        .u
        .iter()
        .zip(base.v.iter())
        .zip(ug.iter().zip(vg.iter()))
        .map(|((bu, bv), (tu, tv))| {
            -(2.0 * p.f * bu + p.g1 * bv) * tu - p.g1 * bu * tv
        })
        .collect();
    let q2: Vec<f64> = base
        .u
        .iter()
        .zip(base.v.iter())
        .zip(ug.iter().zip(vg.iter()))
        .map(|((bu, bv), (tu, tv))| -p.g2 * bv * tu - p.g2 * bu * tv)
        .collect();
    let q1c = basis.analyze_dealias(&q1)?;
    let q2c = basis.analyze_dealias(&q2)?;

    let mut out = Tangent::zero(basis);
    for j in 0..m {
        out.u[j] = p.a1 * z.u[j] + p.b1 * z.v[j] + q1c[j];
        out.v[j] = -p.b2 * z.v[j] + p.c2 * z.w[j] + q2c[j];
        out.w[j] = p.a3 * z.u[j] - p.c3 * z.w[j];
    }
    Ok(out)
}

/// Base state plus `m` tangent directions and the Benettin accumulators.
#[derive(Debug, Clone)]
pub struct TangentBundle {
    pub base: SpectralState,
    pub tangents: Vec<Tangent>,
    /// Accumulated `ln` growth per direction since the last reset.
    pub log_sums: Vec<f64>,
    /// Time accumulated into `log_sums`.
    pub accumulated_time: f64,
    /// Steps between reorthonormalizations.
    pub reorth_cadence: usize,
}

impl TangentBundle {
    /// Random orthonormal frame of `m` directions, seeded.
    pub fn seeded(basis: &SineBasis, base: SpectralState, m: usize, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut tangents = Vec::with_capacity(m);
        for _ in 0..m {
            let mut z = Tangent::zero(basis);
            for c in [&mut z.u, &mut z.v, &mut z.w] {
                for x in c.iter_mut() {
                    *x = rng.gen_range(-1.0..1.0);
                }
            }
            tangents.push(z);
        }
        orthonormalize(&mut tangents)?;
        Ok(Self {
            base,
            tangents,
            log_sums: vec![0.0; m],
            accumulated_time: 0.0,
            reorth_cadence: 10,
        })
    }

    pub fn m(&self) -> usize {
        self.tangents.len()
    }

    /// Reorthonormalize and fold the growth factors into the accumulators.
    pub fn reorthonormalize(&mut self) -> Result<Vec<f64>> {
        let growth = orthonormalize(&mut self.tangents)?;
        for (s, g) in self.log_sums.iter_mut().zip(growth.iter()) {
            *s += g.ln();
        }
        Ok(growth)
    }

    pub fn reset_accumulators(&mut self) {
        self.log_sums.iter_mut().for_each(|s| *s = 0.0);
        self.accumulated_time = 0.0;
    }
}

/// Modified Gram-Schmidt in the L²-product inner product. Returns the
/// R-diagonal (the per-direction growth factors).
pub fn orthonormalize(tangents: &mut [Tangent]) -> Result<Vec<f64>> {
    let mut growth = Vec::with_capacity(tangents.len());
    for i in 0..tangents.len() {
        for j in 0..i {
            let proj = tangents[i].dot(&tangents[j]);
            let prev = tangents[j].clone();
            tangents[i].axpy(proj, &prev);
        }
        let norm = tangents[i].norm();
        if !(norm > 1e-300) {
            return Err(Error::RankDeficient {
                index: i,
                factor: norm,
            });
        }
        tangents[i].scale(1.0 / norm);
        growth.push(norm);
    }
    Ok(growth)
}

/// Lock-step integrator for a base state and its tangent directions: every
/// stage of the base IMEX scheme is differentiated exactly, so a tangent is
/// the derivative of the discrete flow map applied to its initial direction.
pub struct PairStepper<'a> {
    basis: &'a SineBasis,
    p: OregonatorParams,
    cfg: IntegratorConfig,
    prop: [Vec<f64>; 3],
}

impl<'a> PairStepper<'a> {
    pub fn new(basis: &'a SineBasis, p: &OregonatorParams, cfg: &IntegratorConfig) -> Result<Self> {
        p.validate()?;
        cfg.validate()?;
        let mk = |d: f64| -> Vec<f64> {
            basis.lambdas().iter().map(|l| (-d * l * cfg.dt).exp()).collect()
        };
        Ok(Self {
            basis,
            p: *p,
            cfg: *cfg,
            prop: [mk(p.d1), mk(p.d2), mk(p.d3)],
        })
    }

    fn rhs_base(&self, s: &SpectralState) -> Result<[Vec<f64>; 3]> {
        if self.cfg.reaction_enabled {
            let (fu, fv, fw) = reaction_spectral(self.basis, &self.p, &s.u, &s.v, &s.w)?;
            Ok([fu, fv, fw])
        } else {
            let z = self.basis.zero_coeffs();
            Ok([z.clone(), z.clone(), z])
        }
    }

    fn propagate(&self, fields: [&[f64]; 3], k: &[Vec<f64>; 3], dt: f64) -> [Vec<f64>; 3] {
        let m = self.basis.modes_total();
        let mut out = [Vec::new(), Vec::new(), Vec::new()];
        for i in 0..3 {
            out[i] = (0..m)
                .map(|j| self.prop[i][j] * (fields[i][j] + dt * k[i][j]))
                .collect();
        }
        out
    }

    fn jac(&self, grids: &BaseGrids, z: &Tangent) -> Result<Tangent> {
        if self.cfg.reaction_enabled {
            jacobian_apply(self.basis, &self.p, grids, z)
        } else {
            Ok(Tangent::zero(self.basis))
        }
    }

    /// Advance base and tangents by one step. With `pinned` the base is held
    /// fixed (frozen-coefficient linear flow).
    pub fn step(
        &self,
        base: &SpectralState,
        tangents: &[Tangent],
        pinned: bool,
    ) -> Result<(SpectralState, Vec<Tangent>)> {
        let dt = self.cfg.dt;
        let m = self.basis.modes_total();
        let grids = BaseGrids::new(self.basis, base)?;

        match self.cfg.scheme {
            Scheme::ImexEuler => {
                let mut new_tangents = Vec::with_capacity(tangents.len());
                for z in tangents {
                    let k = self.jac(&grids, z)?;
                    let out = self.propagate(z.components(), &[k.u, k.v, k.w], dt);
                    let [u, v, w] = out;
                    new_tangents.push(Tangent { u, v, w });
                }
                let new_base = if pinned {
                    base.clone()
                } else {
                    let kb = self.rhs_base(base)?;
                    let [u, v, w] = self.propagate(base.components(), &kb, dt);
                    SpectralState::new(base.t + dt, u, v, w)
                };
                Ok((new_base, new_tangents))
            }
            Scheme::ImexRk2 => {
                // Base predictor (for a pinned base the predictor is itself).
                let (pred, kb1) = if pinned {
                    (base.clone(), None)
                } else {
                    let kb1 = self.rhs_base(base)?;
                    let [u, v, w] = self.propagate(base.components(), &kb1, dt);
                    (SpectralState::new(base.t + dt, u, v, w), Some(kb1))
                };
                let grids_pred = if pinned {
                    None
                } else {
                    Some(BaseGrids::new(self.basis, &pred)?)
                };
                let grids_pred = grids_pred.as_ref().unwrap_or(&grids);

                let mut new_tangents = Vec::with_capacity(tangents.len());
                for z in tangents {
                    let k1 = self.jac(&grids, z)?;
                    let zp = self.propagate(z.components(), &[k1.u.clone(), k1.v.clone(), k1.w.clone()], dt);
                    let zpred = Tangent {
                        u: zp[0].clone(),
                        v: zp[1].clone(),
                        w: zp[2].clone(),
                    };
                    let k2 = self.jac(grids_pred, &zpred)?;
                    let half = self.propagate(z.components(), &[k1.u, k1.v, k1.w], 0.5 * dt);
                    let mut out = Tangent {
                        u: half[0].clone(),
                        v: half[1].clone(),
                        w: half[2].clone(),
                    };
                    for (c, k) in [(&mut out.u, &k2.u), (&mut out.v, &k2.v), (&mut out.w, &k2.w)] {
                        for j in 0..m {
                            c[j] += 0.5 * dt * k[j];
                        }
                    }
                    new_tangents.push(out);
                }

                let new_base = if pinned {
                    base.clone()
                } else {
                    let kb1 = kb1.expect("base stage present when not pinned");
                    let kb2 = self.rhs_base(&pred)?;
                    let half = self.propagate(base.components(), &kb1, 0.5 * dt);
                    let mut out = half;
                    for i in 0..3 {
                        for j in 0..m {
                            out[i][j] += 0.5 * dt * kb2[i][j];
                        }
                    }
                    let [u, v, w] = out;
                    SpectralState::new(base.t + dt, u, v, w)
                };
                Ok((new_base, new_tangents))
            }
        }
    }
}

/// Advance a bundle by whole steps covering `t_span` (rounded to steps),
/// reorthonormalizing at the bundle cadence.
pub fn evolve_tangent(
    basis: &SineBasis,
    p: &OregonatorParams,
    cfg: &IntegratorConfig,
    bundle: &mut TangentBundle,
    t_span: f64,
    pinned: bool,
) -> Result<()> {
    let stepper = PairStepper::new(basis, p, cfg)?;
    let n_steps = (t_span / cfg.dt).round() as usize;
    let cadence = bundle.reorth_cadence.max(1);
    for k in 1..=n_steps {
        let (nb, nt) = stepper.step(&bundle.base, &bundle.tangents, pinned)?;
        bundle.base = nb;
        bundle.tangents = nt;
        bundle.accumulated_time += cfg.dt;
        if k % cadence == 0 || k == n_steps {
            bundle.reorthonormalize()?;
        }
    }
    Ok(())
}

/// Trace of `(A + f'(g))` over the orthonormal frame:
/// `Σ_j ⟨AΦ_j, Φ_j⟩ + ⟨f'(g)Φ_j, Φ_j⟩` with
/// `⟨AΦ, Φ⟩ = -Σ_i d_i Σ_j λ_j |Φ^i_j|²`.
pub fn trace_qm(
    basis: &SineBasis,
    p: &OregonatorParams,
    base: &SpectralState,
    frame: &[Tangent],
) -> Result<f64> {
    let grids = BaseGrids::new(basis, base)?;
    let ds = [p.d1, p.d2, p.d3];
    let mut total = 0.0;
    for phi in frame {
        let mut diff = 0.0;
        for (i, comp) in phi.components().iter().enumerate() {
            diff -= ds[i] * basis.grad_norm_sq(comp)?;
        }
        let jphi = jacobian_apply(basis, p, &grids, phi)?;
        total += diff + jphi.dot(phi);
    }
    Ok(total)
}

/// Options for a Benettin run.
#[derive(Debug, Clone, Copy)]
pub struct LyapunovOptions {
    pub m: usize,
    /// Frame-alignment span; accumulators are reset afterwards.
    pub t_warmup: f64,
    /// Accumulation span for the exponents.
    pub t_span: f64,
    pub cadence: usize,
    pub seed: u64,
    /// Max allowed drift of any exponent between the two half-windows.
    pub drift_tol: f64,
    /// Hold the base fixed (frozen linear flow).
    pub pinned_base: bool,
}

impl Default for LyapunovOptions {
    fn default() -> Self {
        Self {
            m: 4,
            t_warmup: 1.0,
            t_span: 5.0,
            cadence: 10,
            seed: 1,
            drift_tol: f64::INFINITY,
            pinned_base: false,
        }
    }
}

/// Result of a Benettin run.
#[derive(Debug, Clone)]
pub struct LyapunovRun {
    /// Exponents in direction order (descending after alignment).
    pub exponents: Vec<f64>,
    /// `q_k = Σ_{j ≤ k} μ_j`, the time-averaged k-frame trace.
    pub q: Vec<f64>,
    /// Least `k` with `q_k < 0`.
    pub m_star: Option<usize>,
    pub kaplan_yorke: f64,
    /// Max drift of any exponent between the two half-windows.
    pub drift: f64,
    pub final_base: SpectralState,
}

/// Kaplan-Yorke dimension from a descending exponent sequence.
pub fn kaplan_yorke(exponents: &[f64]) -> f64 {
    let mut cum = 0.0;
    let mut j = 0usize;
    let mut qj = 0.0;
    for (i, mu) in exponents.iter().enumerate() {
        cum += mu;
        if cum >= 0.0 {
            j = i + 1;
            qj = cum;
        } else {
            break;
        }
    }
    if j == 0 {
        return 0.0;
    }
    if j >= exponents.len() {
        return exponents.len() as f64;
    }
    let next = exponents[j];
    if next.abs() < 1e-300 {
        return j as f64;
    }
    j as f64 + qj / next.abs()
}

/// Benettin: evolve the bundle, reorthonormalize at the cadence, accumulate
/// log growth factors. Exponents are the accumulated logs over the elapsed
/// accumulation time; `q_k` are their partial sums.
pub fn lyapunov_spectrum(
    basis: &SineBasis,
    p: &OregonatorParams,
    cfg: &IntegratorConfig,
    g0: &SpectralState,
    opts: &LyapunovOptions,
) -> Result<LyapunovRun> {
    let mut bundle = TangentBundle::seeded(basis, g0.clone(), opts.m, opts.seed)?;
    bundle.reorth_cadence = opts.cadence.max(1);

    if opts.t_warmup > 0.0 {
        evolve_tangent(basis, p, cfg, &mut bundle, opts.t_warmup, opts.pinned_base)?;
        bundle.reset_accumulators();
    }

    // Two half-windows for the convergence diagnostic.
    evolve_tangent(basis, p, cfg, &mut bundle, opts.t_span / 2.0, opts.pinned_base)?;
    let half_logs = bundle.log_sums.clone();
    let half_time = bundle.accumulated_time;
    evolve_tangent(basis, p, cfg, &mut bundle, opts.t_span / 2.0, opts.pinned_base)?;

    let total_time = bundle.accumulated_time;
    if total_time <= 0.0 {
        return Err(Error::DegenerateFit(0.0));
    }
    let exponents: Vec<f64> = bundle.log_sums.iter().map(|s| s / total_time).collect();

    let mut drift = 0.0f64;
    let second_time = total_time - half_time;
    if half_time > 0.0 && second_time > 0.0 {
        for j in 0..opts.m {
            let first = half_logs[j] / half_time;
            let second = (bundle.log_sums[j] - half_logs[j]) / second_time;
            drift = drift.max((first - second).abs());
        }
    }
    if drift > opts.drift_tol {
        return Err(Error::NotConverged {
            drift,
            tol: opts.drift_tol,
        });
    }

    let mut q = Vec::with_capacity(opts.m);
    let mut cum = 0.0;
    for mu in &exponents {
        cum += mu;
        q.push(cum);
    }
    let m_star = q.iter().position(|&x| x < 0.0).map(|i| i + 1);
    let kaplan_yorke = kaplan_yorke(&exponents);

    Ok(LyapunovRun {
        exponents,
        q,
        m_star,
        kaplan_yorke,
        drift,
        final_base: bundle.base,
    })
}

/// Unweighted norm quotient `Γ = Σ λ_j y_j² / Σ y_j²` of a difference.
pub fn gamma_quotient(basis: &SineBasis, y: &Tangent) -> Result<f64> {
    let denom = y.dot(y);
    if denom < 1e-300 {
        return Err(Error::ZeroDifference);
    }
    let mut num = 0.0;
    for comp in y.components() {
        num += basis.grad_norm_sq(comp)?;
    }
    Ok(num / denom)
}

/// Diffusion-weighted quotient `Σ d_i λ_j y_{ij}² / Σ y_j²`.
pub fn gamma_quotient_weighted(
    basis: &SineBasis,
    p: &OregonatorParams,
    y: &Tangent,
) -> Result<f64> {
    let denom = y.dot(y);
    if denom < 1e-300 {
        return Err(Error::ZeroDifference);
    }
    let ds = [p.d1, p.d2, p.d3];
    let mut num = 0.0;
    for (i, comp) in y.components().iter().enumerate() {
        num += ds[i] * basis.grad_norm_sq(comp)?;
    }
    Ok(num / denom)
}

/// One growth-certificate failure.
#[derive(Debug, Clone, Copy)]
pub struct GammaViolation {
    pub t: f64,
    pub fd: f64,
    pub bound: f64,
    pub excess: f64,
}

/// Outcome of the norm-quotient growth check along a trajectory pair.
#[derive(Debug, Clone)]
pub struct GammaGrowthReport {
    /// `N(R_measured)/d0` with the configured N(R) variant.
    pub rho: f64,
    /// Max sampled squared product-space L⁴ norm over both trajectories.
    pub r_measured: f64,
    pub violations: Vec<GammaViolation>,
    pub checked: usize,
    pub max_excess: f64,
    /// Max over samples of `dΓ/dt - ρΓ` (the certificate margin; negative
    /// means satisfied strictly).
    pub max_fd_minus_bound: f64,
}

impl GammaGrowthReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Verify `dΓ/dt ≤ ρ Γ` by forward differences of the unweighted quotient
/// along two sampled trajectories sharing the same clock. The slack is
/// `rel_slack · ρΓ` plus a curvature allowance measured from the second
/// difference of `Γ`.
pub fn check_gamma_growth(
    basis: &SineBasis,
    consts: &DerivedConstants,
    traj1: &Trajectory,
    traj2: &Trajectory,
    rel_slack: f64,
) -> Result<GammaGrowthReport> {
    let n = traj1.samples.len().min(traj2.samples.len());
    if n < 2 {
        return Err(Error::DegenerateFit(0.0));
    }

    let mut r_measured = 0.0f64;
    for s in traj1.samples.iter().take(n).chain(traj2.samples.iter().take(n)) {
        r_measured = r_measured.max(l4_norm_sq(basis, &s.state)?);
    }
    let rho = consts.rho(r_measured);

    let mut gammas = Vec::with_capacity(n);
    let mut times = Vec::with_capacity(n);
    for i in 0..n {
        let y = state_difference(&traj1.samples[i].state, &traj2.samples[i].state);
        gammas.push(gamma_quotient(basis, &y)?);
        times.push(traj1.samples[i].state.t);
    }

    let mut report = GammaGrowthReport {
        rho,
        r_measured,
        violations: Vec::new(),
        checked: 0,
        max_excess: 0.0,
        max_fd_minus_bound: f64::NEG_INFINITY,
    };
    for i in 0..n - 1 {
        let dt = times[i + 1] - times[i];
        if dt <= 0.0 {
            continue;
        }
        let fd = (gammas[i + 1] - gammas[i]) / dt;
        let bound = rho * gammas[i];
        // Forward-difference curvature allowance from the second difference.
        let curvature = if i + 2 < n {
            (gammas[i + 2] - 2.0 * gammas[i + 1] + gammas[i]).abs() / (2.0 * dt)
        } else if i > 0 {
            (gammas[i + 1] - 2.0 * gammas[i] + gammas[i - 1]).abs() / (2.0 * dt)
        } else {
            0.0
        };
        let slack = rel_slack * bound.abs().max(1.0) + curvature;
        report.checked += 1;
        report.max_fd_minus_bound = report.max_fd_minus_bound.max(fd - bound);
        if fd > bound + slack {
            let excess = fd - bound - slack;
            report.max_excess = report.max_excess.max(excess);
            report.violations.push(GammaViolation {
                t: times[i],
                fd,
                bound,
                excess,
            });
        }
    }
    Ok(report)
}

/// Aggregated dimension diagnostics.
#[derive(Debug, Clone)]
pub struct DimensionReport {
    /// Sampled max of the time-averaged `q_k` over base points and frames
    /// (a lower estimate of the supremum in the trace criterion).
    pub q_max: Vec<f64>,
    /// Exponents of the representative (first) run, descending.
    pub exponents: Vec<f64>,
    pub kaplan_yorke: f64,
    /// Least `k` whose sampled-max `q_k` is negative.
    pub m_star: Option<usize>,
    pub dim_bound_m: u64,
    /// Worst observed `dΓ/dt - ρΓ` margin, when the Γ check ran.
    pub gamma_margin: Option<f64>,
    pub drift: f64,
}

/// Run Benettin from several post-entry base points and random frames,
/// taking the per-k max of the time-averaged traces.
pub fn dimension_report(
    basis: &SineBasis,
    p: &OregonatorParams,
    cfg: &IntegratorConfig,
    consts: &DerivedConstants,
    base_points: &[SpectralState],
    frames: usize,
    opts: &LyapunovOptions,
) -> Result<DimensionReport> {
    if base_points.is_empty() {
        return Err(Error::DegenerateFit(0.0));
    }
    let mut q_max: Vec<f64> = vec![f64::NEG_INFINITY; opts.m];
    let mut first_run: Option<LyapunovRun> = None;
    let mut worst_drift = 0.0f64;
    for (bi, base) in base_points.iter().enumerate() {
        for fi in 0..frames.max(1) {
            let run_opts = LyapunovOptions {
                seed: opts
                    .seed
                    .wrapping_add((bi * frames.max(1) + fi) as u64 * 0x9e37),
                ..*opts
            };
            let run = lyapunov_spectrum(basis, p, cfg, base, &run_opts)?;
            for (k, &qk) in run.q.iter().enumerate() {
                q_max[k] = q_max[k].max(qk);
            }
            worst_drift = worst_drift.max(run.drift);
            if first_run.is_none() {
                first_run = Some(run);
            }
        }
    }
    let rep = first_run.expect("at least one run");
    let m_star = q_max.iter().position(|&x| x < 0.0).map(|i| i + 1);
    Ok(DimensionReport {
        q_max,
        exponents: rep.exponents,
        kaplan_yorke: rep.kaplan_yorke,
        m_star,
        dim_bound_m: consts.dim_bound_m,
        gamma_margin: None,
        drift: worst_drift,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{simulate, step};
    use crate::model::{derive_constants, DomainSpec, EmbeddingConstants};
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn setup(modes: usize) -> (DomainSpec, SineBasis, OregonatorParams) {
        let dom = DomainSpec::interval(1.0, modes, 2 * modes).unwrap();
        let basis = SineBasis::new(&dom);
        (dom, basis, OregonatorParams::all_ones())
    }

    fn random_tangent(basis: &SineBasis, seed: u64) -> Tangent {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut z = Tangent::zero(basis);
        for c in [&mut z.u, &mut z.v, &mut z.w] {
            for x in c.iter_mut() {
                *x = rng.gen_range(-1.0..1.0);
            }
        }
        z
    }

    #[test]
    fn jacobian_at_zero_is_linear_part() {
        let (_, basis, p) = setup(12);
        let base = SpectralState::zero(&basis);
        let grids = BaseGrids::new(&basis, &base).unwrap();
        let z = random_tangent(&basis, 3);
        let jz = jacobian_apply(&basis, &p, &grids, &z).unwrap();
        for j in 0..basis.modes_total() {
            assert_relative_eq!(jz.u[j], p.a1 * z.u[j] + p.b1 * z.v[j], epsilon = 1e-12);
            assert_relative_eq!(jz.v[j], -p.b2 * z.v[j] + p.c2 * z.w[j], epsilon = 1e-12);
            assert_relative_eq!(jz.w[j], p.a3 * z.u[j] - p.c3 * z.w[j], epsilon = 1e-12);
        }
    }

    #[test]
    fn jacobian_of_zero_tangent_is_zero() {
        let (_, basis, p) = setup(8);
        let mut base = SpectralState::zero(&basis);
        base.u[0] = 0.7;
        base.v[1] = -0.2;
        let grids = BaseGrids::new(&basis, &base).unwrap();
        let z = Tangent::zero(&basis);
        let jz = jacobian_apply(&basis, &p, &grids, &z).unwrap();
        assert_eq!(jz.norm(), 0.0);
    }

    /// Quadratic part of the reaction at `z`, for the exact finite-difference
    /// identity `f(g + hz) = f(g) + h f'(g) z + h² B(z, z)`.
    fn quadratic_part(basis: &SineBasis, p: &OregonatorParams, z: &Tangent) -> Tangent {
        let zuu = basis.quadratic_product(&z.u, &z.u).unwrap();
        let zuv = basis.quadratic_product(&z.u, &z.v).unwrap();
        let mut out = Tangent::zero(basis);
        for j in 0..basis.modes_total() {
            out.u[j] = -p.f * zuu[j] - p.g1 * zuv[j];
            out.v[j] = -p.g2 * zuv[j];
        }
        out
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let (_, basis, p) = setup(16);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut base = SpectralState::zero(&basis);
        for c in [&mut base.u, &mut base.v, &mut base.w] {
            for x in c.iter_mut() {
                *x = rng.gen_range(-0.5..0.5);
            }
        }
        let mut z = random_tangent(&basis, 11);
        z.scale(1.0 / z.norm());
        let grids = BaseGrids::new(&basis, &base).unwrap();
        let jz = jacobian_apply(&basis, &p, &grids, &z).unwrap();
        let bzz = quadratic_part(&basis, &p, &z);

        let f_at = |s: &SpectralState| -> [Vec<f64>; 3] {
            let (a, b, c) = reaction_spectral(&basis, &p, &s.u, &s.v, &s.w).unwrap();
            [a, b, c]
        };
        let f0 = f_at(&base);
        let mut prev_err = f64::INFINITY;
        for &h in &[1e-2, 1e-3, 1e-4] {
            let mut shifted = base.clone();
            for (c, t) in [
                (&mut shifted.u, &z.u),
                (&mut shifted.v, &z.v),
                (&mut shifted.w, &z.w),
            ] {
                for (x, y) in c.iter_mut().zip(t.iter()) {
                    *x += h * y;
                }
            }
            let fh = f_at(&shifted);
            let mut err_sq = 0.0;
            for (i, comp) in [&jz.u, &jz.v, &jz.w].iter().enumerate() {
                for j in 0..basis.modes_total() {
                    let fd = (fh[i][j] - f0[i][j]) / h;
                    err_sq += (fd - comp[j]) * (fd - comp[j]);
                }
            }
            let err = err_sq.sqrt();
            // Exact identity: the FD error is h * ||B(z,z)||.
            assert_relative_eq!(err, h * bzz.norm(), max_relative = 1e-6);
            assert!(err < prev_err);
            prev_err = err;
        }
    }

    /// Dense matrix exponential by scaling and squaring with a Taylor core.
    fn expm3(a: [[f64; 3]; 3], t: f64) -> [[f64; 3]; 3] {
        let mut scaled = a;
        let norm: f64 = a.iter().flatten().map(|x| x.abs()).sum::<f64>() * t.abs();
        let s = (norm.log2().ceil().max(0.0)) as u32 + 1;
        let factor = t / 2f64.powi(s as i32);
        for row in scaled.iter_mut() {
            for x in row.iter_mut() {
                *x *= factor;
            }
        }
        let matmul = |x: &[[f64; 3]; 3], y: &[[f64; 3]; 3]| {
            let mut out = [[0.0; 3]; 3];
            for i in 0..3 {
                for j in 0..3 {
                    for k in 0..3 {
                        out[i][j] += x[i][k] * y[k][j];
                    }
                }
            }
            out
        };
        let mut result = [[0.0; 3]; 3];
        for (i, row) in result.iter_mut().enumerate() {
            row[i] = 1.0;
        }
        let mut term = result;
        for k in 1..24 {
            term = matmul(&term, &scaled);
            for row in term.iter_mut() {
                for x in row.iter_mut() {
                    *x /= k as f64;
                }
            }
            for i in 0..3 {
                for j in 0..3 {
                    result[i][j] += term[i][j];
                }
            }
        }
        for _ in 0..s {
            result = matmul(&result, &result);
        }
        result
    }

    #[test]
    fn pinned_base_matches_matrix_exponential() {
        // Base 0: each mode evolves by the 3x3 block -lambda*diag(d) + f'(0).
        let (_, basis, _) = setup(4);
        let p = OregonatorParams {
            d1: 1.0,
            d2: 0.5,
            d3: 0.25,
            ..OregonatorParams::all_ones()
        };
        let cfg = IntegratorConfig {
            dt: 1e-5,
            scheme: Scheme::ImexRk2,
            ..Default::default()
        };
        let base = SpectralState::zero(&basis);
        let mode = 1; // second mode
        let lam = basis.lambdas()[mode];
        let block = [
            [-p.d1 * lam + p.a1, p.b1, 0.0],
            [0.0, -p.d2 * lam - p.b2, p.c2],
            [p.a3, 0.0, -p.d3 * lam - p.c3],
        ];
        let t_end = 0.01;
        let exact = expm3(block, t_end);

        let stepper = PairStepper::new(&basis, &p, &cfg).unwrap();
        let z0 = [0.3, -0.7, 0.55];
        let mut z = Tangent::zero(&basis);
        z.u[mode] = z0[0];
        z.v[mode] = z0[1];
        z.w[mode] = z0[2];
        let mut tangents = vec![z];
        let mut state = base.clone();
        for _ in 0..(t_end / cfg.dt).round() as usize {
            let (nb, nt) = stepper.step(&state, &tangents, true).unwrap();
            state = nb;
            tangents = nt;
        }
        let expect = [
            exact[0][0] * z0[0] + exact[0][1] * z0[1] + exact[0][2] * z0[2],
            exact[1][0] * z0[0] + exact[1][1] * z0[1] + exact[1][2] * z0[2],
            exact[2][0] * z0[0] + exact[2][1] * z0[1] + exact[2][2] * z0[2],
        ];
        assert_relative_eq!(tangents[0].u[mode], expect[0], max_relative = 1e-8);
        assert_relative_eq!(tangents[0].v[mode], expect[1], max_relative = 1e-8);
        assert_relative_eq!(tangents[0].w[mode], expect[2], max_relative = 1e-8);
    }

    #[test]
    fn tangent_flow_is_linear() {
        let (_, basis, p) = setup(12);
        let cfg = IntegratorConfig::default();
        let mut base = SpectralState::zero(&basis);
        base.u[0] = 0.4;
        base.v[0] = 0.3;
        let stepper = PairStepper::new(&basis, &p, &cfg).unwrap();

        let z = random_tangent(&basis, 21);
        let mut z_scaled = z.clone();
        z_scaled.scale(3.5);
        let (_, out) = stepper.step(&base, &[z.clone()], false).unwrap();
        let (_, out_scaled) = stepper.step(&base, &[z_scaled], false).unwrap();
        for (a, b) in out[0].components().iter().zip(out_scaled[0].components().iter()) {
            for (x, y) in a.iter().zip(b.iter()) {
                assert_relative_eq!(3.5 * x, *y, epsilon = 1e-12, max_relative = 1e-12);
            }
        }

        let zero = Tangent::zero(&basis);
        let (_, out) = stepper.step(&base, &[zero], false).unwrap();
        assert_eq!(out[0].norm(), 0.0);
    }

    #[test]
    fn pair_stepper_base_matches_dynamics_step() {
        let (_, basis, p) = setup(16);
        for scheme in [Scheme::ImexEuler, Scheme::ImexRk2] {
            let cfg = IntegratorConfig {
                scheme,
                ..Default::default()
            };
            let mut base = SpectralState::zero(&basis);
            base.u[0] = 0.9;
            base.v[1] = 0.2;
            base.w[0] = 0.5;
            let stepper = PairStepper::new(&basis, &p, &cfg).unwrap();
            let (nb, _) = stepper.step(&base, &[], false).unwrap();
            let reference = step(&basis, &p, &cfg, &base).unwrap();
            assert_eq!(nb, reference);
        }
    }

    #[test]
    fn orthonormalize_identity_and_rank_deficiency() {
        let (_, basis, _) = setup(8);
        // Already orthonormal: unchanged, growth factors 1.
        let mut e1 = Tangent::zero(&basis);
        e1.u[0] = 1.0;
        let mut e2 = Tangent::zero(&basis);
        e2.v[0] = 1.0;
        let mut set = vec![e1.clone(), e2.clone()];
        let growth = orthonormalize(&mut set).unwrap();
        assert_relative_eq!(growth[0], 1.0, epsilon = 1e-15);
        assert_relative_eq!(growth[1], 1.0, epsilon = 1e-15);
        assert_eq!(set[0], e1);
        assert_eq!(set[1], e2);

        // Parallel vectors: rank deficient on the second.
        let mut par = e1.clone();
        par.scale(2.0);
        let mut set = vec![e1, par];
        assert!(matches!(
            orthonormalize(&mut set),
            Err(Error::RankDeficient { index: 1, .. })
        ));
    }

    #[test]
    fn orthonormalize_matches_dense_qr() {
        let (_, basis, _) = setup(10);
        let mut set: Vec<Tangent> = (0..3).map(|i| random_tangent(&basis, 100 + i)).collect();
        let cols: Vec<Vec<f64>> = set
            .iter()
            .map(|z| {
                let mut col = Vec::new();
                for c in z.components() {
                    col.extend_from_slice(c);
                }
                col
            })
            .collect();
        let growth = orthonormalize(&mut set).unwrap();

        // Gram matrix is the identity to 1e-10.
        for i in 0..3 {
            for j in 0..3 {
                let g = set[i].dot(&set[j]);
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((g - expect).abs() < 1e-10, "gram[{i}][{j}] = {g}");
            }
        }

        // R-diagonal vs dense Householder QR.
        let rows = cols[0].len();
        let mat = nalgebra::DMatrix::from_fn(rows, 3, |r, c| cols[c][r]);
        let qr = mat.qr();
        let r = qr.r();
        for i in 0..3 {
            assert_relative_eq!(growth[i], r[(i, i)].abs(), max_relative = 1e-8);
        }
    }

    #[test]
    fn trace_hand_values() {
        let (_, basis, p) = setup(8);
        let base = SpectralState::zero(&basis);

        let mut phi_u = Tangent::zero(&basis);
        phi_u.u[0] = 1.0;
        let q = trace_qm(&basis, &p, &base, &[phi_u.clone()]).unwrap();
        assert_relative_eq!(q, 1.0 - PI * PI, epsilon = 1e-8);

        let mut phi_w = Tangent::zero(&basis);
        phi_w.w[0] = 1.0;
        let qw = trace_qm(&basis, &p, &base, &[phi_w.clone()]).unwrap();
        assert_relative_eq!(qw, -PI * PI - 1.0, epsilon = 1e-8);

        // Additivity over orthonormal directions.
        let both = trace_qm(&basis, &p, &base, &[phi_u, phi_w]).unwrap();
        assert_relative_eq!(both, q + qw, epsilon = 1e-10);
    }

    #[test]
    fn strongly_diffusive_top_exponent_negative() {
        let (_, basis, p) = setup(8);
        let p = OregonatorParams {
            d1: 5.0,
            d2: 5.0,
            d3: 5.0,
            ..p
        };
        let cfg = IntegratorConfig::default();
        let mut g0 = SpectralState::zero(&basis);
        g0.u[0] = 0.3;
        g0.v[0] = 0.2;
        g0.w[0] = 0.2;
        let opts = LyapunovOptions {
            m: 1,
            t_warmup: 0.5,
            t_span: 2.0,
            cadence: 10,
            seed: 9,
            ..Default::default()
        };
        let run = lyapunov_spectrum(&basis, &p, &cfg, &g0, &opts).unwrap();
        assert!(run.exponents[0] < 0.0, "mu1 = {}", run.exponents[0]);
        assert_eq!(run.m_star, Some(1));
        assert_eq!(run.kaplan_yorke, 0.0);
    }

    #[test]
    fn exponents_ordered_and_q_decreasing() {
        let (_, basis, p) = setup(8);
        let cfg = IntegratorConfig::default();
        let base = SpectralState::zero(&basis);
        let opts = LyapunovOptions {
            m: 5,
            t_warmup: 2.0,
            t_span: 4.0,
            cadence: 5,
            seed: 13,
            pinned_base: true,
            ..Default::default()
        };
        let run = lyapunov_spectrum(&basis, &p, &cfg, &base, &opts).unwrap();
        for win in run.exponents.windows(2) {
            assert!(win[0] >= win[1] - 1e-3, "{:?}", run.exponents);
        }
        // All exponents negative here, so q_k strictly decreases.
        for win in run.q.windows(2) {
            assert!(win[1] < win[0]);
        }
    }

    #[test]
    fn gamma_quotient_examples() {
        let (_, basis, _) = setup(8);
        let mut y = Tangent::zero(&basis);
        y.u[0] = 0.8;
        assert_relative_eq!(gamma_quotient(&basis, &y).unwrap(), PI * PI, max_relative = 1e-13);

        let mut y2 = Tangent::zero(&basis);
        y2.v[1] = -0.4;
        assert_relative_eq!(
            gamma_quotient(&basis, &y2).unwrap(),
            4.0 * PI * PI,
            max_relative = 1e-13
        );

        let zero = Tangent::zero(&basis);
        assert!(matches!(
            gamma_quotient(&basis, &zero),
            Err(Error::ZeroDifference)
        ));
    }

    #[test]
    fn gamma_quotient_at_least_poincare() {
        let (dom, basis, _) = setup(16);
        let gamma = dom.poincare_gamma();
        for seed in 0..10 {
            let y = random_tangent(&basis, 500 + seed);
            let g = gamma_quotient(&basis, &y).unwrap();
            assert!(g >= gamma * (1.0 - 1e-12));
        }
    }

    #[test]
    fn weighted_quotient_scales_with_diffusion() {
        let (_, basis, _) = setup(8);
        let p = OregonatorParams {
            d1: 2.0,
            ..OregonatorParams::all_ones()
        };
        let mut y = Tangent::zero(&basis);
        y.u[0] = 1.0;
        let unweighted = gamma_quotient(&basis, &y).unwrap();
        let weighted = gamma_quotient_weighted(&basis, &p, &y).unwrap();
        assert_relative_eq!(weighted, 2.0 * unweighted, max_relative = 1e-13);
    }

    #[test]
    fn gamma_growth_reaction_off_pair() {
        let (dom, basis, p) = setup(16);
        let consts = derive_constants(&p, &dom, &EmbeddingConstants::default()).unwrap();
        let cfg = IntegratorConfig {
            reaction_enabled: false,
            ..Default::default()
        };
        let mut a = SpectralState::zero(&basis);
        a.u[0] = 0.5;
        let mut b = a.clone();
        b.u[0] = 0.5 + 1e-4;
        let t1 = simulate(&basis, &p, &cfg, &a, 0.5, 10).unwrap();
        let t2 = simulate(&basis, &p, &cfg, &b, 0.5, 10).unwrap();
        let rep = check_gamma_growth(&basis, &consts, &t1, &t2, 1e-6).unwrap();
        // Single-mode difference: Gamma is constant, trivially within rho*Gamma.
        assert!(rep.passed(), "{:?}", rep.violations);
        assert!(rep.rho > 0.0);
    }

    #[test]
    fn kaplan_yorke_values() {
        assert_eq!(kaplan_yorke(&[-0.5, -1.0]), 0.0);
        assert_relative_eq!(kaplan_yorke(&[1.0, -2.0]), 1.5, epsilon = 1e-12);
        assert_relative_eq!(kaplan_yorke(&[1.0, 0.5, -3.0]), 2.5, epsilon = 1e-12);
        assert_eq!(kaplan_yorke(&[1.0, 1.0]), 2.0);
    }
}
