//! Seeded random initial data.
//!
//! Nonnegative fields are built as pointwise squares of random band-limited
//! fields, so they vanish on the boundary, are smooth, and are exactly
//! nonnegative at every grid node. The seed fully determines the data.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dynamics::SpectralState;
use crate::error::Result;
use crate::model::OregonatorParams;
use crate::spectral::SineBasis;

fn random_band_limited(basis: &SineBasis, rng: &mut ChaCha8Rng, band: usize) -> Vec<f64> {
    let m = basis.domain().modes_per_axis();
    let band = band.clamp(1, m);
    let mut c = basis.zero_coeffs();
    match basis.domain().dimension() {
        1 => {
            for (j, coeff) in c.iter_mut().enumerate().take(band) {
                *coeff = rng.gen_range(-1.0..1.0) * (-0.4 * j as f64).exp();
            }
        }
        _ => {
            for j1 in 0..band {
                for j2 in 0..band {
                    c[j1 * m + j2] =
                        rng.gen_range(-1.0..1.0) * (-0.4 * (j1 + j2) as f64).exp();
                }
            }
        }
    }
    c
}

/// Random band-limited field that is nonnegative on the whole domain, not
/// just at grid nodes. Uses `|sin(jθ)| ≤ j sin(θ)` on `[0, π]`: making the
/// ground-mode amplitude dominate `Σ j_1 j_2 |a_j|` over the higher modes
/// forces `ψ ≥ 0` pointwise, and the field stays exactly representable at
/// any resolution.
fn nonneg_field(basis: &SineBasis, rng: &mut ChaCha8Rng, band: usize) -> Vec<f64> {
    let m = basis.domain().modes_per_axis();
    let mut c = random_band_limited(basis, rng, band);
    let margin = 1.05 + rng.gen_range(0.0..1.0);
    match basis.domain().dimension() {
        1 => {
            let dominated: f64 = c
                .iter()
                .enumerate()
                .skip(1)
                .map(|(j, a)| (j + 1) as f64 * a.abs())
                .sum();
            c[0] = margin * dominated.max(0.2);
        }
        _ => {
            let dominated: f64 = c
                .iter()
                .enumerate()
                .filter(|(idx, _)| *idx != 0)
                .map(|(idx, a)| {
                    let j1 = idx / m + 1;
                    let j2 = idx % m + 1;
                    (j1 * j2) as f64 * a.abs()
                })
                .sum();
            c[0] = margin * dominated.max(0.2);
        }
    }
    c
}

/// Random nonnegative state with the weighted L² energy
/// `‖u‖² + ‖v‖² + M2 ‖w‖²` scaled to `target_energy`.
pub fn nonneg_state(
    basis: &SineBasis,
    p: &OregonatorParams,
    seed: u64,
    band: usize,
    target_energy: f64,
) -> Result<SpectralState> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u = nonneg_field(basis, &mut rng, band);
    let v = nonneg_field(basis, &mut rng, band);
    let w = nonneg_field(basis, &mut rng, band);

    let energy = SineBasis::l2_norm_sq(&u)
        + SineBasis::l2_norm_sq(&v)
        + p.m2() * SineBasis::l2_norm_sq(&w);
    let scale = if energy > 0.0 {
        (target_energy / energy).sqrt()
    } else {
        0.0
    };

    Ok(SpectralState::new(
        0.0,
        u.iter().map(|x| scale * x).collect(),
        v.iter().map(|x| scale * x).collect(),
        w.iter().map(|x| scale * x).collect(),
    ))
}

/// Random signed band-limited state (no positivity), for convergence and
/// perturbation studies.
pub fn signed_state(basis: &SineBasis, seed: u64, band: usize, amplitude: f64) -> SpectralState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mk = |rng: &mut ChaCha8Rng| -> Vec<f64> {
        random_band_limited(basis, rng, band)
            .iter()
            .map(|x| amplitude * x)
            .collect()
    };
    let u = mk(&mut rng);
    let v = mk(&mut rng);
    let w = mk(&mut rng);
    SpectralState::new(0.0, u, v, w)
}
