//! Model parameters, box domain, embedding-constant configuration, and the
//! closed-form constants of the a-priori estimates.
//!
//! The dimensionless Oregonator system on a box `Ω ⊂ R^n` (n = 1 or 2) with
//! homogeneous Dirichlet boundary conditions is
//!
//! ```text
//! u_t = d1 Δu + a1 u + b1 v - F u² - G1 u v
//! v_t = d2 Δv - b2 v + c2 w - G2 u v
//! w_t = d3 Δw + a3 u - c3 w
//! ```
//!
//! Every constant in this module (`M1..M5`, `K1..K3`, `K_E`, `K(n)`, `N(R)`,
//! the dimension bound `m`, the sup-norm bound) is evaluated literally from
//! its closed-form expression; nothing is fitted. The four embedding
//! constants (`eta`, `gn_c`, `lt_psi`, `reg_c2`) are nonconstructive inputs:
//! the derived quantities are certificates *parameterized* by them, with 1.0
//! as the documented default.

use crate::error::{Error, Result};

/// The twelve positive rate and diffusion constants.
///
/// `f`, `g1`, `g2` are the quadratic rate constants (written F, G1, G2 in the
/// configuration file); everything else is linear or diffusive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OregonatorParams {
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
    pub a1: f64,
    pub b1: f64,
    pub b2: f64,
    pub c2: f64,
    pub a3: f64,
    pub c3: f64,
    pub f: f64,
    pub g1: f64,
    pub g2: f64,
}

impl OregonatorParams {
    /// All twelve constants set to one. The standard smoke-test configuration.
    pub fn all_ones() -> Self {
        Self {
            d1: 1.0,
            d2: 1.0,
            d3: 1.0,
            a1: 1.0,
            b1: 1.0,
            b2: 1.0,
            c2: 1.0,
            a3: 1.0,
            c3: 1.0,
            f: 1.0,
            g1: 1.0,
            g2: 1.0,
        }
    }

    fn fields(&self) -> [(&'static str, f64); 12] {
        [
            ("d1", self.d1),
            ("d2", self.d2),
            ("d3", self.d3),
            ("a1", self.a1),
            ("b1", self.b1),
            ("b2", self.b2),
            ("c2", self.c2),
            ("a3", self.a3),
            ("c3", self.c3),
            ("F", self.f),
            ("G1", self.g1),
            ("G2", self.g2),
        ]
    }

    /// Ok iff every field is finite and strictly positive.
    pub fn validate(&self) -> Result<()> {
        for (name, value) in self.fields() {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::NonPositiveParameter(name.to_string()));
            }
        }
        Ok(())
    }

    /// `d0 = min{d1, d2, d3}`.
    pub fn d0(&self) -> f64 {
        self.d1.min(self.d2).min(self.d3)
    }

    /// Weight `M2 = c2² / (b2 c3)` of the rescaled third component in the
    /// L² energy.
    pub fn m2(&self) -> f64 {
        self.c2 * self.c2 / (self.b2 * self.c3)
    }

    /// Weight `M4 = c2⁶ / (b2⁵ c3)` of the rescaled third component in the
    /// L⁶ energy.
    pub fn m4(&self) -> f64 {
        self.c2.powi(6) / (self.b2.powi(5) * self.c3)
    }
}

/// Alias matching the operation name used in reports.
pub fn validate_params(p: &OregonatorParams) -> Result<()> {
    p.validate()
}

/// Box domain: an interval `(0, L1)` or a rectangle `(0, L1) × (0, L2)`,
/// with `modes_per_axis` Dirichlet sine modes and `grid_points` uniform
/// subintervals per axis for collocation.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainSpec {
    lengths: Vec<f64>,
    modes_per_axis: usize,
    grid_points: usize,
}

impl DomainSpec {
    /// 1-d domain `(0, l1)`.
    pub fn interval(l1: f64, modes_per_axis: usize, grid_points: usize) -> Result<Self> {
        Self::new(vec![l1], modes_per_axis, grid_points)
    }

    /// 2-d domain `(0, l1) × (0, l2)`.
    pub fn rectangle(l1: f64, l2: f64, modes_per_axis: usize, grid_points: usize) -> Result<Self> {
        Self::new(vec![l1, l2], modes_per_axis, grid_points)
    }

    pub fn new(lengths: Vec<f64>, modes_per_axis: usize, grid_points: usize) -> Result<Self> {
        if lengths.is_empty() || lengths.len() > 2 {
            return Err(Error::InvalidDomain(format!(
                "spatial dimension must be 1 or 2, got {}",
                lengths.len()
            )));
        }
        if lengths.iter().any(|&l| !(l.is_finite() && l > 0.0)) {
            return Err(Error::InvalidDomain("side lengths must be positive".into()));
        }
        if modes_per_axis < 1 {
            return Err(Error::InvalidDomain("need at least one mode per axis".into()));
        }
        if grid_points <= modes_per_axis {
            return Err(Error::InvalidDomain(format!(
                "grid_points ({grid_points}) must exceed modes_per_axis ({modes_per_axis})"
            )));
        }
        Ok(Self {
            lengths,
            modes_per_axis,
            grid_points,
        })
    }

    pub fn dimension(&self) -> usize {
        self.lengths.len()
    }

    pub fn lengths(&self) -> &[f64] {
        &self.lengths
    }

    pub fn modes_per_axis(&self) -> usize {
        self.modes_per_axis
    }

    /// Number of uniform subintervals per axis; collocation happens at the
    /// `grid_points - 1` interior nodes.
    pub fn grid_points(&self) -> usize {
        self.grid_points
    }

    /// Total number of retained modes, `modes_per_axis^n`.
    pub fn modes_total(&self) -> usize {
        self.modes_per_axis.pow(self.dimension() as u32)
    }

    /// `|Ω| = Π L_i`.
    pub fn volume(&self) -> f64 {
        self.lengths.iter().product()
    }

    /// Poincaré constant `γ = π² Σ 1/L_i²`, the smallest Dirichlet-Laplacian
    /// eigenvalue of the box.
    pub fn poincare_gamma(&self) -> f64 {
        let pi2 = std::f64::consts::PI * std::f64::consts::PI;
        pi2 * self.lengths.iter().map(|l| 1.0 / (l * l)).sum::<f64>()
    }
}

/// Free-function form of [`DomainSpec::poincare_gamma`].
pub fn poincare_gamma(dom: &DomainSpec) -> f64 {
    dom.poincare_gamma()
}

/// The nonconstructive embedding constants entering the certificates, plus
/// the direction flag for the suspected misprint in the difference estimate
/// (see [`NrOfR`]).
///
/// * `eta`: H¹₀ -> L⁴ embedding, `‖φ‖_{L⁴} ≤ eta ‖∇φ‖`.
/// * `gn_c`: Gagliardo-Nirenberg constant, `‖φ‖_{L⁴} ≤ C ‖∇φ‖^{n/4} ‖φ‖^{1-n/4}`.
/// * `lt_psi`: Lieb-Thirring constant, `Σ ‖∇φ_j‖² ≥ Ψ m^{1+2/n} / |Ω|^{2/n}`.
/// * `reg_c2`: (L², L∞) regularity constant of the diffusion semigroup.
/// * `n0`, `n1`: semigroup Hölder/Lipschitz constants; accepted in the
///   configuration for completeness but unused by the default certificates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmbeddingConstants {
    pub eta: f64,
    pub gn_c: f64,
    pub lt_psi: f64,
    pub reg_c2: f64,
    /// When set (the default), `N(R)` multiplies its linear-term group by
    /// `1/γ` as dimensional analysis of the Poincaré step requires, instead
    /// of the literal `γ`.
    pub corrected_poincare_direction: bool,
    pub n0: Option<f64>,
    pub n1: Option<f64>,
}

impl Default for EmbeddingConstants {
    fn default() -> Self {
        Self {
            eta: 1.0,
            gn_c: 1.0,
            lt_psi: 1.0,
            reg_c2: 1.0,
            corrected_poincare_direction: true,
            n0: None,
            n1: None,
        }
    }
}

impl EmbeddingConstants {
    pub fn validate(&self) -> Result<()> {
        for (name, value) in [
            ("eta", self.eta),
            ("gn_C", self.gn_c),
            ("lt_Psi", self.lt_psi),
            ("reg_C2", self.reg_c2),
        ] {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::NonPositiveParameter(name.to_string()));
            }
        }
        Ok(())
    }
}

/// The difference estimate `‖f(g1) - f(g2)‖² ≤ N(R) ‖∇(g1-g2)‖²` as a
/// function of `R`, the common bound on the squared L⁴ norms of the states.
///
/// `N(R) = lin + slope · R` with
/// `slope = (16 F² + 8 (G1² + G2²)) η²` and the linear-term group
/// `4 (a1² + b1² + b2² + c2² + a3² + c3²)` multiplied by `γ` in the literal
/// variant and by `1/γ` in the corrected one. The corrected variant is the
/// one consistent with `‖y‖² ≤ γ⁻¹ ‖∇y‖²`; both are kept.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NrOfR {
    pub lin_literal: f64,
    pub lin_corrected: f64,
    pub slope: f64,
    /// Which variant [`NrOfR::eval`] and the derived `rho`, `L(r)` use.
    pub corrected_default: bool,
}

impl NrOfR {
    pub fn eval_literal(&self, r: f64) -> f64 {
        self.lin_literal + self.slope * r
    }

    pub fn eval_corrected(&self, r: f64) -> f64 {
        self.lin_corrected + self.slope * r
    }

    /// Default variant, per the `corrected_default` flag.
    pub fn eval(&self, r: f64) -> f64 {
        if self.corrected_default {
            self.eval_corrected(r)
        } else {
            self.eval_literal(r)
        }
    }
}

/// Every closed-form constant of the a-priori estimates, evaluated once per
/// `(params, domain, embedding)` triple.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivedConstants {
    pub d0: f64,
    pub m1: f64,
    pub m2: f64,
    pub m3: f64,
    pub m4: f64,
    pub m5: f64,
    /// L² absorbing radius: `limsup ‖g‖² ≤ K1/3 < K1`.
    pub k1: f64,
    /// L⁴ absorbing radius via interpolation, `K2 = (K1 K3)^{1/2}`.
    pub k2: f64,
    /// L⁶ absorbing radius.
    pub k3: f64,
    /// Gradient-energy absorbing radius (uniform Gronwall).
    pub k_e: f64,
    /// Young-inequality optimum `K(n) = max_{s≥0} (G1+G2)√K1 C² s^{n/2} - (d0/2) s²`.
    pub k_n: f64,
    /// Threshold `T = (2(K(n)+a1+b1+c2+a3)/(d0 Ψ))^{n/2} |Ω|` of the
    /// dimension condition `m - 1 ≤ T < m`.
    pub dim_threshold: f64,
    /// The unique integer satisfying the dimension condition, `floor(T) + 1`.
    pub dim_bound_m: u64,
    pub n_of_r: NrOfR,
    /// Sup-norm bound `C(2) (√K1 + 4 √K_E L(√K_E))`.
    pub linf_bound: f64,
    /// Copy of `eta`, needed to evaluate `L(r)` and `rho` later.
    pub eta: f64,
}

impl DerivedConstants {
    /// Growth constant `rho(R) = N(R)/d0` of the norm-quotient certificate,
    /// with `R` the measured bound on squared L⁴ norms.
    pub fn rho(&self, r: f64) -> f64 {
        self.n_of_r.eval(r) / self.d0
    }

    /// Lipschitz constant of the reaction map on the E-ball of radius `r`:
    /// `L(r) = sqrt(N(η² r²))`, reusing the difference estimate with
    /// `R = η² r²`.
    pub fn lipschitz_on_e_ball(&self, r: f64) -> f64 {
        self.n_of_r.eval(self.eta * self.eta * r * r).sqrt()
    }
}

/// Maximum of `s ↦ b s^{n/2} - (d0/2) s²` over `s ≥ 0`, in closed form via
/// the stationarity condition. For n = 1 the maximizer is
/// `s* = (b/(2 d0))^{2/3}`; for n = 2 the map is quadratic and the maximum
/// is `b²/(2 d0)`.
pub fn young_quadratic_max(b: f64, d0: f64, n: usize) -> f64 {
    match n {
        1 => {
            let s = (b / (2.0 * d0)).powf(2.0 / 3.0);
            b * s.sqrt() - 0.5 * d0 * s * s
        }
        2 => b * b / (2.0 * d0),
        _ => unreachable!("dimension restricted to 1 or 2"),
    }
}

/// Evaluate every closed-form constant. Formulas, with `γ` the Poincaré
/// constant and `|Ω|` the volume:
///
/// ```text
/// M1  = a1 + (b1² + (a3 c2/c3)²) / (2 b2)
/// M2  = c2² / (b2 c3)
/// K1  = M1³ |Ω| / (γ d0 F² min{1, M2})
/// M3  = a1 + (5/6) b1^{6/5} / b2^{1/5} + (a3 c2/c3)⁶ / (6 b2⁵)
/// M4  = c2⁶ / (b2⁵ c3)
/// K3  = M3⁷ |Ω| / (γ d0 F⁶ min{1, M4})
/// K2  = (K1 K3)^{1/2}
/// M5  = (K1 max{1, M2} + M1³ |Ω| / F²) / d0
/// K_E = (M5 + K1 (2(a1²+b1²)/d1 + a3² c2²/(2 d3 b2 c3))) / min{1, M2}
///       · exp(η⁴ M5 (G1²/(2 d1) + G2²/(2 d2)))
/// ```
pub fn derive_constants(
    p: &OregonatorParams,
    dom: &DomainSpec,
    emb: &EmbeddingConstants,
) -> Result<DerivedConstants> {
    p.validate()?;
    emb.validate()?;

    let gamma = dom.poincare_gamma();
    let volume = dom.volume();
    let n = dom.dimension();

    let d0 = p.d0();
    let a3c2_over_c3 = p.a3 * p.c2 / p.c3;
    let m1 = p.a1 + (p.b1 * p.b1 + a3c2_over_c3 * a3c2_over_c3) / (2.0 * p.b2);
    let m2 = p.m2();
    let k1 = m1.powi(3) * volume / (gamma * d0 * p.f * p.f * m2.min(1.0));

    let m3 = p.a1
        + (5.0 / 6.0) * p.b1.powf(1.2) / p.b2.powf(0.2)
        + a3c2_over_c3.powi(6) / (6.0 * p.b2.powi(5));
    let m4 = p.m4();
    let k3 = m3.powi(7) * volume / (gamma * d0 * p.f.powi(6) * m4.min(1.0));

    let k2 = (k1 * k3).sqrt();

    let m5 = (k1 * m2.max(1.0) + m1.powi(3) * volume / (p.f * p.f)) / d0;
    let grad_source = k1
        * (2.0 * (p.a1 * p.a1 + p.b1 * p.b1) / p.d1
            + p.a3 * p.a3 * p.c2 * p.c2 / (2.0 * p.d3 * p.b2 * p.c3));
    let eta4 = emb.eta.powi(4);
    let k_e = (m5 + grad_source) / m2.min(1.0)
        * (eta4 * m5 * (p.g1 * p.g1 / (2.0 * p.d1) + p.g2 * p.g2 / (2.0 * p.d2))).exp();

    let b_young = (p.g1 + p.g2) * k1.sqrt() * emb.gn_c * emb.gn_c;
    let k_n = young_quadratic_max(b_young, d0, n);

    let linear_sum = k_n + p.a1 + p.b1 + p.c2 + p.a3;
    let dim_threshold = (2.0 * linear_sum / (d0 * emb.lt_psi)).powf(n as f64 / 2.0) * volume;
    let dim_bound_m = dim_threshold.floor() as u64 + 1;

    let sq_sum = p.a1 * p.a1
        + p.b1 * p.b1
        + p.b2 * p.b2
        + p.c2 * p.c2
        + p.a3 * p.a3
        + p.c3 * p.c3;
    let slope = (16.0 * p.f * p.f + 8.0 * (p.g1 * p.g1 + p.g2 * p.g2)) * emb.eta * emb.eta;
    let n_of_r = NrOfR {
        lin_literal: 4.0 * gamma * sq_sum,
        lin_corrected: 4.0 / gamma * sq_sum,
        slope,
        corrected_default: emb.corrected_poincare_direction,
    };

    let consts = DerivedConstants {
        d0,
        m1,
        m2,
        m3,
        m4,
        m5,
        k1,
        k2,
        k3,
        k_e,
        k_n,
        dim_threshold,
        dim_bound_m,
        n_of_r,
        linf_bound: 0.0,
        eta: emb.eta,
    };
    let lip = consts.lipschitz_on_e_ball(k_e.sqrt());
    let linf_bound = emb.reg_c2 * (k1.sqrt() + 4.0 * k_e.sqrt() * lip);

    Ok(DerivedConstants {
        linf_bound,
        ..consts
    })
}
