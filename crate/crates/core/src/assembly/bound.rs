use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::sparse::{dot, SparseSymMatrix};
use super::AssemblyError;
use crate::evolve::solver::{pcg_solve, Preconditioner};

pub const MAX_POWER_ITERATIONS: usize = 10_000;

#[derive(Clone, Copy, Debug, Serialize)]
pub struct SpectralBound {
    pub lambda_max: f64,
    /// 2/√λ_max.
    pub dt_max: f64,
    pub iterations: usize,
}

/// Largest generalized eigenvalue of (𝕂+𝔻)u = λ𝕄u by power iteration on
/// 𝕄⁻¹(𝕂+𝔻), stopping when the Rayleigh quotient changes by less than `tol`
/// relative.
pub fn estimate_spectral_bound(
    mass: &SparseSymMatrix,
    wave: &SparseSymMatrix,
    tol: f64,
) -> Result<SpectralBound, AssemblyError> {
    let n = mass.n;
    let pre = Preconditioner::for_mass(mass);
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let mut lambda = 0.0;
    let mut y = vec![0.0; n];
    for it in 1..=MAX_POWER_ITERATIONS {
        let ax = wave.mul_vec(&x);
        let mx = mass.mul_vec(&x);
        let next = dot(&x, &ax) / dot(&x, &mx);
        // y ← 𝕄⁻¹ A x, warm-started from the previous direction scaled by λ
        for (yi, xi) in y.iter_mut().zip(&x) {
            *yi = next * xi;
        }
        pcg_solve(mass, &ax, &pre, &mut y, 1e-12, 10 * n.max(100)).map_err(|e| AssemblyError::Solver(e.to_string()))?;
        let s = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for (xi, yi) in x.iter_mut().zip(&y) {
            *xi = yi / s;
        }
        if it > 1 && (next - lambda).abs() <= tol * next.abs() {
            return Ok(SpectralBound {
                lambda_max: next,
                dt_max: 2.0 / next.sqrt(),
                iterations: it,
            });
        }
        lambda = next;
    }
    Err(AssemblyError::NoConvergence {
        iterations: MAX_POWER_ITERATIONS,
        estimate: lambda,
    })
}
