//! Dirichlet sine eigenbasis on the box: eigenvalues, grid/coefficient
//! transforms, Laplacian application, and dealiased quadratic products.
//!
//! Basis functions are L²-orthonormal,
//! `e_j(x) = Π_i sqrt(2/L_i) sin(j_i π x_i / L_i)`, so the Euclidean norm of
//! a coefficient vector equals the L² norm of the field (Parseval) and the
//! boundary condition holds by construction.
//!
//! A scalar field has two interchangeable views: the coefficient vector over
//! the retained modes (the representation stored everywhere in this crate)
//! and its point values on the uniform collocation grid
//! `x_k = k L / N, k = 1..N-1`. [`SineBasis::synthesize`] and
//! [`SineBasis::analyze`] convert between the two; they are mutually inverse
//! to round-off.
//!
//! Quadratic products are evaluated pseudospectrally on a finer internal
//! grid with three subintervals per retained mode (the 2/3 rule for a
//! quadratic nonlinearity) before re-projection, which pushes the aliasing
//! residual of the retained coefficients below 1e-8.

use crate::error::{Error, Result};
use crate::model::DomainSpec;

/// Per-axis mode index, 1-based as in `sin(j π x / L)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModeIndex {
    j: [usize; 2],
    n: usize,
}

impl ModeIndex {
    pub fn one(j1: usize) -> Self {
        Self { j: [j1, 0], n: 1 }
    }

    pub fn two(j1: usize, j2: usize) -> Self {
        Self { j: [j1, j2], n: 2 }
    }

    pub fn indices(&self) -> &[usize] {
        &self.j[..self.n]
    }
}

/// One-axis sine transform with a precomputed table.
///
/// `table[k * modes + j] = sqrt(2/L) sin(π (j+1)(k+1) / N)` for the interior
/// nodes `k+1 = 1..N-1`. Synthesis is a plain matrix-vector product; analysis
/// is the transpose product scaled by the exact quadrature weight `L/N`.
#[derive(Debug, Clone)]
struct AxisDst {
    modes: usize,
    interior: usize,
    table: Vec<f64>,
    analyze_scale: f64,
    cell: f64,
}

impl AxisDst {
    fn new(length: f64, modes: usize, subintervals: usize) -> Self {
        let interior = subintervals - 1;
        let norm = (2.0 / length).sqrt();
        let mut table = vec![0.0; interior * modes];
        for k in 0..interior {
            for j in 0..modes {
                let angle = std::f64::consts::PI * ((j + 1) * (k + 1)) as f64
                    / subintervals as f64;
                table[k * modes + j] = norm * angle.sin();
            }
        }
        Self {
            modes,
            interior,
            table,
            analyze_scale: length / subintervals as f64,
            cell: length / subintervals as f64,
        }
    }

    /// out[k, col] = sum_j table[k, j] input[j, col]
    fn synth_axis0(&self, input: &[f64], cols: usize, out: &mut [f64]) {
        out.fill(0.0);
        for j in 0..self.modes {
            let row = &input[j * cols..(j + 1) * cols];
            for k in 0..self.interior {
                let t = self.table[k * self.modes + j];
                if t != 0.0 {
                    let dst = &mut out[k * cols..(k + 1) * cols];
                    for c in 0..cols {
                        dst[c] += t * row[c];
                    }
                }
            }
        }
    }

    /// out[j, col] = scale * sum_k table[k, j] input[k, col]
    fn analyze_axis0(&self, input: &[f64], cols: usize, out: &mut [f64]) {
        out.fill(0.0);
        for k in 0..self.interior {
            let row = &input[k * cols..(k + 1) * cols];
            for j in 0..self.modes {
                let t = self.table[k * self.modes + j];
                let dst = &mut out[j * cols..(j + 1) * cols];
                for c in 0..cols {
                    dst[c] += t * row[c];
                }
            }
        }
        for v in out.iter_mut() {
            *v *= self.analyze_scale;
        }
    }

    /// out[row, k] = sum_j input[row, j] table[k, j]
    fn synth_axis1(&self, input: &[f64], rows: usize, out: &mut [f64]) {
        for r in 0..rows {
            let src = &input[r * self.modes..(r + 1) * self.modes];
            let dst = &mut out[r * self.interior..(r + 1) * self.interior];
            for (k, d) in dst.iter_mut().enumerate() {
                let mut acc = 0.0;
                let trow = &self.table[k * self.modes..(k + 1) * self.modes];
                for (t, s) in trow.iter().zip(src.iter()) {
                    acc += t * s;
                }
                *d = acc;
            }
        }
    }

    /// out[row, j] = scale * sum_k input[row, k] table[k, j]
    fn analyze_axis1(&self, input: &[f64], rows: usize, out: &mut [f64]) {
        for r in 0..rows {
            let src = &input[r * self.interior..(r + 1) * self.interior];
            let dst = &mut out[r * self.modes..(r + 1) * self.modes];
            dst.fill(0.0);
            for (k, s) in src.iter().enumerate() {
                let trow = &self.table[k * self.modes..(k + 1) * self.modes];
                for (d, t) in dst.iter_mut().zip(trow.iter()) {
                    *d += t * s;
                }
            }
            for d in dst.iter_mut() {
                *d *= self.analyze_scale;
            }
        }
    }
}

/// Transform plan for a [`DomainSpec`]: sampling-grid and dealias-grid
/// tables plus the flattened eigenvalue array. Read-only after construction
/// and safe to share across threads.
#[derive(Debug, Clone)]
pub struct SineBasis {
    dom: DomainSpec,
    axes: Vec<AxisDst>,
    dealias: Vec<AxisDst>,
    lambdas: Vec<f64>,
}

impl SineBasis {
    pub fn new(dom: &DomainSpec) -> Self {
        let m = dom.modes_per_axis();
        let axes: Vec<AxisDst> = dom
            .lengths()
            .iter()
            .map(|&l| AxisDst::new(l, m, dom.grid_points()))
            .collect();
        // 2/3-rule grid for quadratic terms: three subintervals per mode.
        let dealias_n = (3 * m).max(dom.grid_points());
        let dealias: Vec<AxisDst> = dom
            .lengths()
            .iter()
            .map(|&l| AxisDst::new(l, m, dealias_n))
            .collect();

        let pi2 = std::f64::consts::PI * std::f64::consts::PI;
        let lambdas = match dom.dimension() {
            1 => {
                let l = dom.lengths()[0];
                (1..=m).map(|j| pi2 * (j as f64 / l).powi(2)).collect()
            }
            _ => {
                let (l1, l2) = (dom.lengths()[0], dom.lengths()[1]);
                let mut v = Vec::with_capacity(m * m);
                for j1 in 1..=m {
                    for j2 in 1..=m {
                        v.push(pi2 * ((j1 as f64 / l1).powi(2) + (j2 as f64 / l2).powi(2)));
                    }
                }
                v
            }
        };

        Self {
            dom: dom.clone(),
            axes,
            dealias,
            lambdas,
        }
    }

    pub fn domain(&self) -> &DomainSpec {
        &self.dom
    }

    /// Number of retained coefficients.
    pub fn modes_total(&self) -> usize {
        self.lambdas.len()
    }

    /// Number of collocation nodes on the sampling grid.
    pub fn grid_total(&self) -> usize {
        self.axes.iter().map(|a| a.interior).product()
    }

    fn dealias_total(&self) -> usize {
        self.dealias.iter().map(|a| a.interior).product()
    }

    /// Volume element of one dealias-grid cell.
    fn dealias_cell(&self) -> f64 {
        self.dealias.iter().map(|a| a.cell).product()
    }

    /// Flattened Laplacian eigenvalues `λ_j` in coefficient order.
    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    /// `λ_j = π² Σ_i (j_i / L_i)²` for a per-axis index.
    pub fn eigenvalue(&self, index: ModeIndex) -> Result<f64> {
        if index.indices().len() != self.dom.dimension() {
            return Err(Error::InvalidDomain(format!(
                "mode index has {} axes but domain has {}",
                index.indices().len(),
                self.dom.dimension()
            )));
        }
        let m = self.dom.modes_per_axis();
        for &j in index.indices() {
            if j < 1 || j > m {
                return Err(Error::IndexOutOfRange { index: j, max: m });
            }
        }
        Ok(self.lambdas[self.flat_index(index)])
    }

    /// Position of a per-axis index in the flattened coefficient array.
    pub fn flat_index(&self, index: ModeIndex) -> usize {
        let m = self.dom.modes_per_axis();
        match index.indices() {
            [j1] => j1 - 1,
            [j1, j2] => (j1 - 1) * m + (j2 - 1),
            _ => unreachable!(),
        }
    }

    fn check_len(&self, got: usize, expected: usize, context: &'static str) -> Result<()> {
        if got == expected {
            Ok(())
        } else {
            Err(Error::ShapeMismatch {
                expected,
                got,
                context,
            })
        }
    }

    fn synth_with(&self, axes: &[AxisDst], coeffs: &[f64]) -> Vec<f64> {
        match axes {
            [ax] => {
                let mut out = vec![0.0; ax.interior];
                ax.synth_axis1(coeffs, 1, &mut out);
                out
            }
            [ax0, ax1] => {
                let m = ax1.modes;
                let mut tmp = vec![0.0; ax0.interior * m];
                ax0.synth_axis0(coeffs, m, &mut tmp);
                let mut out = vec![0.0; ax0.interior * ax1.interior];
                ax1.synth_axis1(&tmp, ax0.interior, &mut out);
                out
            }
            _ => unreachable!(),
        }
    }

    fn analyze_with(&self, axes: &[AxisDst], grid: &[f64]) -> Vec<f64> {
        match axes {
            [ax] => {
                let mut out = vec![0.0; ax.modes];
                ax.analyze_axis1(grid, 1, &mut out);
                out
            }
            [ax0, ax1] => {
                let mut tmp = vec![0.0; ax0.interior * ax1.modes];
                ax1.analyze_axis1(grid, ax0.interior, &mut tmp);
                let mut out = vec![0.0; ax0.modes * ax1.modes];
                ax0.analyze_axis0(&tmp, ax1.modes, &mut out);
                out
            }
            _ => unreachable!(),
        }
    }

    /// Point values on the sampling grid.
    pub fn synthesize(&self, coeffs: &[f64]) -> Result<Vec<f64>> {
        self.check_len(coeffs.len(), self.modes_total(), "synthesize coefficients")?;
        Ok(self.synth_with(&self.axes, coeffs))
    }

    /// Coefficients of the sine interpolant of sampling-grid values.
    pub fn analyze(&self, grid: &[f64]) -> Result<Vec<f64>> {
        self.check_len(grid.len(), self.grid_total(), "analyze grid values")?;
        Ok(self.analyze_with(&self.axes, grid))
    }

    /// Point values on the internal dealias grid.
    pub fn synthesize_dealias(&self, coeffs: &[f64]) -> Result<Vec<f64>> {
        self.check_len(coeffs.len(), self.modes_total(), "synthesize coefficients")?;
        Ok(self.synth_with(&self.dealias, coeffs))
    }

    /// Retained-mode coefficients of dealias-grid values.
    pub fn analyze_dealias(&self, grid: &[f64]) -> Result<Vec<f64>> {
        self.check_len(grid.len(), self.dealias_total(), "analyze dealias grid values")?;
        Ok(self.analyze_with(&self.dealias, grid))
    }

    /// `c_j -> -λ_j c_j`.
    pub fn apply_laplacian(&self, coeffs: &[f64]) -> Result<Vec<f64>> {
        self.check_len(coeffs.len(), self.modes_total(), "laplacian coefficients")?;
        Ok(coeffs
            .iter()
            .zip(self.lambdas.iter())
            .map(|(c, l)| -l * c)
            .collect())
    }

    /// Retained-mode coefficients of the pointwise product `a · b`,
    /// evaluated on the dealias grid.
    pub fn quadratic_product(&self, a: &[f64], b: &[f64]) -> Result<Vec<f64>> {
        self.check_len(a.len(), self.modes_total(), "product left factor")?;
        self.check_len(b.len(), self.modes_total(), "product right factor")?;
        let ga = self.synth_with(&self.dealias, a);
        let gb = self.synth_with(&self.dealias, b);
        let prod: Vec<f64> = ga.iter().zip(gb.iter()).map(|(x, y)| x * y).collect();
        Ok(self.analyze_with(&self.dealias, &prod))
    }

    /// `∫ f^p dx` by dealias-grid quadrature of the synthesized field
    /// (signed for odd p).
    pub fn lp_integral(&self, coeffs: &[f64], p: u32) -> Result<f64> {
        self.check_len(coeffs.len(), self.modes_total(), "lp integrand")?;
        let g = self.synth_with(&self.dealias, coeffs);
        let cell = self.dealias_cell();
        Ok(cell * g.iter().map(|&x| x.powi(p as i32)).sum::<f64>())
    }

    /// Parseval: squared L² norm from coefficients.
    pub fn l2_norm_sq(coeffs: &[f64]) -> f64 {
        coeffs.iter().map(|c| c * c).sum()
    }

    /// Squared H¹₀ seminorm `‖∇f‖² = Σ λ_j c_j²`.
    pub fn grad_norm_sq(&self, coeffs: &[f64]) -> Result<f64> {
        self.check_len(coeffs.len(), self.modes_total(), "gradient coefficients")?;
        Ok(coeffs
            .iter()
            .zip(self.lambdas.iter())
            .map(|(c, l)| l * c * c)
            .sum())
    }

    /// Smallest grid value of the synthesized field (sampling grid).
    pub fn min_grid(&self, coeffs: &[f64]) -> Result<f64> {
        let g = self.synthesize(coeffs)?;
        Ok(g.iter().copied().fold(f64::INFINITY, f64::min))
    }

    /// Largest absolute grid value of the synthesized field (sampling grid).
    pub fn sup_grid(&self, coeffs: &[f64]) -> Result<f64> {
        let g = self.synthesize(coeffs)?;
        Ok(g.iter().fold(0.0f64, |m, &x| m.max(x.abs())))
    }

    pub fn zero_coeffs(&self) -> Vec<f64> {
        vec![0.0; self.modes_total()]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn basis_1d(modes: usize) -> SineBasis {
        SineBasis::new(&DomainSpec::interval(1.0, modes, 2 * modes).unwrap())
    }

    fn random_coeffs(basis: &SineBasis, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..basis.modes_total()).map(|_| rng.gen_range(-1.0..1.0)).collect()
    }

    #[test]
    fn eigenvalue_examples() {
        let b = basis_1d(8);
        assert_relative_eq!(b.eigenvalue(ModeIndex::one(1)).unwrap(), PI * PI, max_relative = 1e-15);
        assert_relative_eq!(
            b.eigenvalue(ModeIndex::one(3)).unwrap(),
            9.0 * PI * PI,
            max_relative = 1e-15
        );
        let b2 = SineBasis::new(&DomainSpec::rectangle(1.0, 1.0, 4, 8).unwrap());
        assert_relative_eq!(
            b2.eigenvalue(ModeIndex::two(1, 2)).unwrap(),
            5.0 * PI * PI,
            max_relative = 1e-15
        );
        assert!(matches!(
            b.eigenvalue(ModeIndex::one(9)),
            Err(Error::IndexOutOfRange { index: 9, max: 8 })
        ));
    }

    #[test]
    fn gamma_is_first_eigenvalue() {
        let dom = DomainSpec::rectangle(1.0, 2.5, 4, 8).unwrap();
        let b = SineBasis::new(&dom);
        assert_relative_eq!(
            b.eigenvalue(ModeIndex::two(1, 1)).unwrap(),
            dom.poincare_gamma(),
            max_relative = 1e-14
        );
    }

    #[test]
    fn mode_one_synthesis_matches_sine() {
        // Unit coefficient on mode 1 over (0,1): grid samples of sqrt(2) sin(pi x).
        let b = basis_1d(8);
        let mut c = b.zero_coeffs();
        c[0] = 1.0;
        let g = b.synthesize(&c).unwrap();
        let n = b.domain().grid_points();
        for (k, &val) in g.iter().enumerate() {
            let x = (k + 1) as f64 / n as f64;
            assert_relative_eq!(val, 2f64.sqrt() * (PI * x).sin(), max_relative = 1e-13);
        }
    }

    #[test]
    fn round_trip_1d() {
        let b = basis_1d(32);
        let c = random_coeffs(&b, 7);
        let back = b.analyze(&b.synthesize(&c).unwrap()).unwrap();
        for (x, y) in c.iter().zip(back.iter()) {
            assert_relative_eq!(x, y, max_relative = 1e-12, epsilon = 1e-14);
        }
    }

    #[test]
    fn round_trip_2d() {
        let dom = DomainSpec::rectangle(1.0, 1.7, 12, 24).unwrap();
        let b = SineBasis::new(&dom);
        let c = random_coeffs(&b, 11);
        let back = b.analyze(&b.synthesize(&c).unwrap()).unwrap();
        for (x, y) in c.iter().zip(back.iter()) {
            assert_relative_eq!(x, y, max_relative = 1e-12, epsilon = 1e-14);
        }
    }

    #[test]
    fn parseval_sine_norm() {
        // ||sin(pi x)||^2 over (0,1) is 1/2; its coefficient vector is
        // 1/sqrt(2) on mode 1.
        let b = basis_1d(8);
        let mut c = b.zero_coeffs();
        c[0] = 1.0 / 2f64.sqrt();
        assert_relative_eq!(SineBasis::l2_norm_sq(&c), 0.5, max_relative = 1e-15);
        // Grid quadrature agrees.
        let g = b.synthesize(&c).unwrap();
        let cell = 1.0 / b.domain().grid_points() as f64;
        let quad: f64 = cell * g.iter().map(|x| x * x).sum::<f64>();
        assert_relative_eq!(quad, 0.5, max_relative = 1e-12);
    }

    #[test]
    fn laplacian_examples() {
        let b = basis_1d(8);
        let mut c = b.zero_coeffs();
        c[0] = 1.0;
        let lc = b.apply_laplacian(&c).unwrap();
        assert_relative_eq!(lc[0], -PI * PI, max_relative = 1e-14);
        assert!(lc[1..].iter().all(|&x| x == 0.0));

        let zero = b.zero_coeffs();
        assert!(b.apply_laplacian(&zero).unwrap().iter().all(|&x| x == 0.0));

        let mut c2 = b.zero_coeffs();
        c2[0] = 2.0;
        c2[1] = -3.0;
        let lc2 = b.apply_laplacian(&c2).unwrap();
        assert_relative_eq!(lc2[0], -2.0 * PI * PI, max_relative = 1e-14);
        assert_relative_eq!(lc2[1], 3.0 * 4.0 * PI * PI, max_relative = 1e-14);
    }

    #[test]
    fn laplacian_negative_definite() {
        let b = basis_1d(24);
        let gamma = b.domain().poincare_gamma();
        for seed in 0..5 {
            let c = random_coeffs(&b, seed);
            let lc = b.apply_laplacian(&c).unwrap();
            let quad: f64 = lc.iter().zip(c.iter()).map(|(a, x)| a * x).sum();
            let norm = SineBasis::l2_norm_sq(&c);
            assert!(quad <= -gamma * norm * (1.0 - 1e-12));
        }
    }

    #[test]
    fn product_of_zero_is_zero() {
        let b = basis_1d(16);
        let z = b.zero_coeffs();
        let p = b.quadratic_product(&z, &z).unwrap();
        assert!(p.iter().all(|&x| x == 0.0));
    }

    /// Closed form of the projection of sin²(pi x) on the normalized sine
    /// basis over (0,1): -4 sqrt(2) / (π j (j² - 4)) for odd j, 0 for even j.
    fn sin_sq_projection(j: usize) -> f64 {
        if j % 2 == 0 {
            0.0
        } else {
            let jf = j as f64;
            -4.0 * 2f64.sqrt() / (PI * jf * (jf * jf - 4.0))
        }
    }

    #[test]
    fn sin_squared_projection_oracle() {
        // quadratic_product(sin, sin) against the dense-quadrature projection
        // of sin²(pi x). The closed form is itself validated by Simpson
        // quadrature below.
        for j in [1usize, 3, 5] {
            let n = 40_000;
            let h = 1.0 / n as f64;
            let f = |x: f64| (PI * x).sin().powi(2) * 2f64.sqrt() * (j as f64 * PI * x).sin();
            let mut s = f(0.0) + f(1.0);
            for k in 1..n {
                let w = if k % 2 == 1 { 4.0 } else { 2.0 };
                s += w * f(k as f64 * h);
            }
            let quad = s * h / 3.0;
            assert_relative_eq!(quad, sin_sq_projection(j), epsilon = 1e-12);
        }

        let b = basis_1d(128);
        let mut c = b.zero_coeffs();
        c[0] = 1.0 / 2f64.sqrt(); // sin(pi x)
        let p = b.quadratic_product(&c, &c).unwrap();
        for (idx, &got) in p.iter().enumerate() {
            let expect = sin_sq_projection(idx + 1);
            assert!(
                (got - expect).abs() <= 1e-8,
                "mode {}: got {got}, expected {expect}",
                idx + 1
            );
        }
    }

    #[test]
    fn product_consistency_low_modes() {
        // For low-mode inputs the retained coefficients match the dense
        // Simpson projection of the pointwise product.
        let b = basis_1d(128);
        let mut a = b.zero_coeffs();
        let mut c = b.zero_coeffs();
        a[0] = 0.8;
        a[2] = -0.3;
        c[1] = 0.5;
        c[3] = 0.2;
        let p = b.quadratic_product(&a, &c).unwrap();

        let eval = |coef: &[f64], x: f64| -> f64 {
            coef.iter()
                .enumerate()
                .map(|(j, v)| v * 2f64.sqrt() * ((j + 1) as f64 * PI * x).sin())
                .sum()
        };
        let n = 20_000;
        let h = 1.0 / n as f64;
        for j in [1usize, 2, 5, 8] {
            let f = |x: f64| eval(&a, x) * eval(&c, x) * 2f64.sqrt() * (j as f64 * PI * x).sin();
            let mut s = f(0.0) + f(1.0);
            for k in 1..n {
                let w = if k % 2 == 1 { 4.0 } else { 2.0 };
                s += w * f(k as f64 * h);
            }
            let oracle = s * h / 3.0;
            assert!(
                (p[j - 1] - oracle).abs() <= 1e-10,
                "mode {j}: got {}, oracle {oracle}",
                p[j - 1]
            );
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn parseval_random_fields(seed in 0u64..1000) {
            let b = basis_1d(24);
            let c = random_coeffs(&b, seed);
            let g = b.synthesize(&c).unwrap();
            let cell = 1.0 / b.domain().grid_points() as f64;
            let quad: f64 = cell * g.iter().map(|x| x * x).sum::<f64>();
            let coef = SineBasis::l2_norm_sq(&c);
            prop_assert!((quad - coef).abs() <= 1e-10 * coef.max(1e-30));
        }

        #[test]
        fn product_bilinear_commutative(seed in 0u64..1000, alpha in -2.0f64..2.0) {
            let b = basis_1d(12);
            let x = random_coeffs(&b, seed);
            let y = random_coeffs(&b, seed.wrapping_add(99));
            let z = random_coeffs(&b, seed.wrapping_add(1234));

            let xy = b.quadratic_product(&x, &y).unwrap();
            let yx = b.quadratic_product(&y, &x).unwrap();
            for (p, q) in xy.iter().zip(yx.iter()) {
                prop_assert!((p - q).abs() <= 1e-12);
            }

            // x * (alpha y + z) = alpha (x*y) + x*z
            let lin: Vec<f64> = y.iter().zip(z.iter()).map(|(a, b)| alpha * a + b).collect();
            let lhs = b.quadratic_product(&x, &lin).unwrap();
            let xz = b.quadratic_product(&x, &z).unwrap();
            for ((l, p), q) in lhs.iter().zip(xy.iter()).zip(xz.iter()) {
                prop_assert!((l - (alpha * p + q)).abs() <= 1e-11);
            }
        }
    }

    #[test]
    fn shape_mismatch_detected() {
        let b = basis_1d(8);
        assert!(matches!(
            b.synthesize(&[0.0; 5]),
            Err(Error::ShapeMismatch { .. })
        ));
        assert!(matches!(
            b.analyze(&[0.0; 5]),
            Err(Error::ShapeMismatch { .. })
        ));
    }
}
