//! Galerkin dynamics: the reaction map, IMEX time stepping with exact modal
//! diffusion, and trajectory generation.
//!
//! In coefficient space the truncated system is a 3M-dimensional ODE
//!
//! ```text
//! q' = -Λ q + P_M f(q),    Λ = diag(d_i λ_j)
//! ```
//!
//! Both schemes propagate the stiff diffusion part exactly per mode with the
//! factor `exp(-d_i λ_j dt)` and treat the quadratic reaction explicitly:
//!
//! * `ImexEuler`: `q⁺ = E (q + dt f(q))` — first order.
//! * `ImexRk2`: Heun on the integrating-factor form,
//!   `q⁺ = E q + dt/2 (E f(q) + f(E(q + dt f(q))))` — second order.
//!
//! With the reaction switched off each mode decays exactly by
//! `exp(-d_i λ_j t)`, so the linear regime carries no time-stepping error.

use crate::error::{Error, Result};
use crate::model::OregonatorParams;
use crate::spectral::SineBasis;

/// The Galerkin state: sine coefficients of the three concentrations.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralState {
    pub t: f64,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub w: Vec<f64>,
}

impl SpectralState {
    pub fn zero(basis: &SineBasis) -> Self {
        Self {
            t: 0.0,
            u: basis.zero_coeffs(),
            v: basis.zero_coeffs(),
            w: basis.zero_coeffs(),
        }
    }

    pub fn new(t: f64, u: Vec<f64>, v: Vec<f64>, w: Vec<f64>) -> Self {
        Self { t, u, v, w }
    }

    pub fn components(&self) -> [&[f64]; 3] {
        [&self.u, &self.v, &self.w]
    }

    /// Squared H-norm `‖u‖² + ‖v‖² + ‖w‖²` (Parseval).
    pub fn h_norm_sq(&self) -> f64 {
        SineBasis::l2_norm_sq(&self.u) + SineBasis::l2_norm_sq(&self.v)
            + SineBasis::l2_norm_sq(&self.w)
    }

    fn max_abs(&self) -> f64 {
        self.components()
            .iter()
            .flat_map(|c| c.iter())
            .fold(0.0f64, |m, &x| m.max(x.abs()))
    }

    fn all_finite(&self) -> bool {
        self.components().iter().all(|c| c.iter().all(|x| x.is_finite()))
    }
}

/// Time-stepping scheme tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    ImexEuler,
    ImexRk2,
}

/// Integrator options.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig {
    pub dt: f64,
    pub scheme: Scheme,
    /// Tolerated undershoot when auditing grid positivity.
    pub pos_tol: f64,
    /// Reset negative grid values to zero after each step. Off by default:
    /// cone invariance is audited, not enforced.
    pub clip_negatives: bool,
    /// Integrator-level switch for the reaction term (diffusion-only runs).
    pub reaction_enabled: bool,
    /// Abort threshold for the blow-up guard.
    pub blowup_guard: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            scheme: Scheme::ImexRk2,
            pos_tol: 1e-8,
            clip_negatives: false,
            reaction_enabled: true,
            blowup_guard: 1e12,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::NonPositiveParameter("dt".into()));
        }
        Ok(())
    }
}

/// Pointwise reaction map,
/// `f = (a1 u + b1 v - F u² - G1 u v, -b2 v + c2 w - G2 u v, a3 u - c3 w)`.
pub fn reaction(p: &OregonatorParams, u: f64, v: f64, w: f64) -> (f64, f64, f64) {
    (
        p.a1 * u + p.b1 * v - p.f * u * u - p.g1 * u * v,
        -p.b2 * v + p.c2 * w - p.g2 * u * v,
        p.a3 * u - p.c3 * w,
    )
}

/// Rescaled third component `W = (c2/b2) w`, coefficientwise.
pub fn rescale_w(p: &OregonatorParams, w: &[f64]) -> Vec<f64> {
    let s = p.c2 / p.b2;
    w.iter().map(|x| s * x).collect()
}

/// Retained-mode coefficients of `f(u, v, w)`; quadratic terms through the
/// dealiased pseudospectral product.
pub fn reaction_spectral(
    basis: &SineBasis,
    p: &OregonatorParams,
    u: &[f64],
    v: &[f64],
    w: &[f64],
) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let puu = basis.quadratic_product(u, u)?;
    let puv = basis.quadratic_product(u, v)?;
    let m = basis.modes_total();
    let mut fu = vec![0.0; m];
    let mut fv = vec![0.0; m];
    let mut fw = vec![0.0; m];
    for j in 0..m {
        fu[j] = p.a1 * u[j] + p.b1 * v[j] - p.f * puu[j] - p.g1 * puv[j];
        fv[j] = -p.b2 * v[j] + p.c2 * w[j] - p.g2 * puv[j];
        fw[j] = p.a3 * u[j] - p.c3 * w[j];
    }
    Ok((fu, fv, fw))
}

/// Reusable stepper holding the per-mode diffusion propagators
/// `exp(-d_i λ_j dt)`.
#[derive(Debug, Clone)]
pub struct Stepper<'a> {
    basis: &'a SineBasis,
    p: OregonatorParams,
    cfg: IntegratorConfig,
    prop: [Vec<f64>; 3],
}

impl<'a> Stepper<'a> {
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

    pub fn config(&self) -> &IntegratorConfig {
        &self.cfg
    }

    fn rhs(&self, u: &[f64], v: &[f64], w: &[f64]) -> Result<[Vec<f64>; 3]> {
        if self.cfg.reaction_enabled {
            let (fu, fv, fw) = reaction_spectral(self.basis, &self.p, u, v, w)?;
            Ok([fu, fv, fw])
        } else {
            let z = self.basis.zero_coeffs();
            Ok([z.clone(), z.clone(), z])
        }
    }

    fn check_state(&self, s: &SpectralState) -> Result<()> {
        if !s.all_finite() || s.max_abs() > self.cfg.blowup_guard {
            return Err(Error::NonFiniteState { t: s.t });
        }
        Ok(())
    }

    fn clip(&self, s: &mut SpectralState) -> Result<()> {
        for c in [&mut s.u, &mut s.v, &mut s.w] {
            let mut g = self.basis.synthesize(c)?;
            let mut touched = false;
            for x in g.iter_mut() {
                if *x < 0.0 {
                    *x = 0.0;
                    touched = true;
                }
            }
            if touched {
                *c = self.basis.analyze(&g)?;
            }
        }
        Ok(())
    }

    /// Advance one step of `dt`.
    pub fn step(&self, s: &SpectralState) -> Result<SpectralState> {
        let dt = self.cfg.dt;
        let m = self.basis.modes_total();
        for c in s.components() {
            if c.len() != m {
                return Err(Error::ShapeMismatch {
                    expected: m,
                    got: c.len(),
                    context: "state coefficients",
                });
            }
        }

        let k1 = self.rhs(&s.u, &s.v, &s.w)?;
        let fields = [&s.u, &s.v, &s.w];

        let mut next = match self.cfg.scheme {
            Scheme::ImexEuler => {
                let mut out = [Vec::new(), Vec::new(), Vec::new()];
                for i in 0..3 {
                    out[i] = (0..m)
                        .map(|j| self.prop[i][j] * (fields[i][j] + dt * k1[i][j]))
                        .collect();
                }
                SpectralState::new(s.t + dt, out[0].clone(), out[1].clone(), out[2].clone())
            }
            Scheme::ImexRk2 => {
                let mut pred = [Vec::new(), Vec::new(), Vec::new()];
                for i in 0..3 {
                    pred[i] = (0..m)
                        .map(|j| self.prop[i][j] * (fields[i][j] + dt * k1[i][j]))
                        .collect();
                }
                let k2 = self.rhs(&pred[0], &pred[1], &pred[2])?;
                let mut out = [Vec::new(), Vec::new(), Vec::new()];
                for i in 0..3 {
                    out[i] = (0..m)
                        .map(|j| {
                            self.prop[i][j] * (fields[i][j] + 0.5 * dt * k1[i][j])
                                + 0.5 * dt * k2[i][j]
                        })
                        .collect();
                }
                SpectralState::new(s.t + dt, out[0].clone(), out[1].clone(), out[2].clone())
            }
        };

        if self.cfg.clip_negatives {
            self.clip(&mut next)?;
        }
        self.check_state(&next)?;
        Ok(next)
    }
}

/// One-shot step without building a [`Stepper`].
pub fn step(
    basis: &SineBasis,
    p: &OregonatorParams,
    cfg: &IntegratorConfig,
    s: &SpectralState,
) -> Result<SpectralState> {
    Stepper::new(basis, p, cfg)?.step(s)
}

/// A recorded trajectory sample: the state plus the smallest grid value over
/// the three synthesized concentrations (the positivity audit).
#[derive(Debug, Clone)]
pub struct Sample {
    pub state: SpectralState,
    pub min_grid: f64,
}

/// Samples at the requested cadence, always including the initial and final
/// states.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
}

impl Trajectory {
    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.state.t).collect()
    }

    pub fn last(&self) -> &Sample {
        self.samples.last().expect("trajectory has at least one sample")
    }

    /// Worst (most negative) grid value seen across all samples.
    pub fn min_grid_overall(&self) -> f64 {
        self.samples.iter().map(|s| s.min_grid).fold(f64::INFINITY, f64::min)
    }
}

fn min_grid_of(basis: &SineBasis, s: &SpectralState) -> Result<f64> {
    let mut m = f64::INFINITY;
    for c in s.components() {
        m = m.min(basis.min_grid(c)?);
    }
    Ok(m)
}

/// Integrate from `g0` for `horizon` time units (rounded to whole steps),
/// recording every `sample_every`-th step.
pub fn simulate(
    basis: &SineBasis,
    p: &OregonatorParams,
    cfg: &IntegratorConfig,
    g0: &SpectralState,
    horizon: f64,
    sample_every: usize,
) -> Result<Trajectory> {
    if !(horizon.is_finite() && horizon >= 0.0) {
        return Err(Error::NonPositiveParameter("horizon".into()));
    }
    let stepper = Stepper::new(basis, p, cfg)?;
    let cadence = sample_every.max(1);
    let n_steps = (horizon / cfg.dt).round() as usize;

    let mut samples = Vec::with_capacity(n_steps / cadence + 2);
    let mut state = g0.clone();
    samples.push(Sample {
        min_grid: min_grid_of(basis, &state)?,
        state: state.clone(),
    });
    for k in 1..=n_steps {
        state = stepper.step(&state)?;
        if k % cadence == 0 || k == n_steps {
            samples.push(Sample {
                min_grid: min_grid_of(basis, &state)?,
                state: state.clone(),
            });
        }
    }
    Ok(Trajectory { samples })
}
