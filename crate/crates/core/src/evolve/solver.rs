//! Preconditioned conjugate gradients for mass solves.

use serde::Serialize;

use super::EvolveError;
use crate::assembly::sparse::{dot, SparseSymMatrix};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum PreconditionerKind {
    Jacobi,
    IncompleteCholesky0,
}

#[derive(Clone, Debug)]
pub enum Preconditioner {
    /// Inverse diagonal.
    Jacobi(Vec<f64>),
    /// Lower factor L with 𝕄 ≈ L Lᵀ on 𝕄's pattern.
    Ic0(SparseSymMatrix),
}

impl Preconditioner {
    pub fn jacobi(m: &SparseSymMatrix) -> Self {
        Preconditioner::Jacobi(m.diagonal().iter().map(|d| 1.0 / d).collect())
    }

    /// IC(0), or Jacobi when a pivot breaks down.
    pub fn for_mass(m: &SparseSymMatrix) -> Self {
        match ic0_factor(m) {
            Ok(p) => p,
            Err(e) => {
                log::warn!("{e}; falling back to Jacobi preconditioning");
                Self::jacobi(m)
            }
        }
    }

    pub fn kind(&self) -> PreconditionerKind {
        match self {
            Preconditioner::Jacobi(_) => PreconditionerKind::Jacobi,
            Preconditioner::Ic0(_) => PreconditionerKind::IncompleteCholesky0,
        }
    }

    /// z = P⁻¹ r.
    pub fn apply(&self, r: &[f64], z: &mut [f64]) {
        match self {
            Preconditioner::Jacobi(inv) => {
                for ((zi, ri), di) in z.iter_mut().zip(r).zip(inv) {
                    *zi = ri * di;
                }
            }
            Preconditioner::Ic0(l) => {
                // L y = r
                for i in 0..l.n {
                    let lo = l.row_ptr[i];
                    let hi = l.row_ptr[i + 1] - 1;
                    let mut s = r[i];
                    for p in lo..hi {
                        s -= l.values[p] * z[l.col_idx[p]];
                    }
                    z[i] = s / l.values[hi];
                }
                // Lᵀ z = y, column-oriented on the rows of L
                for i in (0..l.n).rev() {
                    let lo = l.row_ptr[i];
                    let hi = l.row_ptr[i + 1] - 1;
                    z[i] /= l.values[hi];
                    let zi = z[i];
                    for p in lo..hi {
                        z[l.col_idx[p]] -= l.values[p] * zi;
                    }
                }
            }
        }
    }
}

/// Zero-fill incomplete Cholesky factorization on the lower pattern of `m`.
pub fn ic0_factor(m: &SparseSymMatrix) -> Result<Preconditioner, EvolveError> {
    let mut l = m.clone();
    for i in 0..l.n {
        let lo = l.row_ptr[i];
        let hi = l.row_ptr[i + 1] - 1;
        for p in lo..hi {
            let k = l.col_idx[p];
            // Σ_{j<k} L_ij L_kj over the shared pattern
            let (klo, khi) = (l.row_ptr[k], l.row_ptr[k + 1] - 1);
            let (mut a, mut b) = (lo, klo);
            let mut s = 0.0;
            while a < p && b < khi {
                match l.col_idx[a].cmp(&l.col_idx[b]) {
                    std::cmp::Ordering::Less => a += 1,
                    std::cmp::Ordering::Greater => b += 1,
                    std::cmp::Ordering::Equal => {
                        s += l.values[a] * l.values[b];
                        a += 1;
                        b += 1;
                    }
                }
            }
            l.values[p] = (l.values[p] - s) / l.values[khi];
        }
        let s: f64 = l.values[lo..hi].iter().map(|v| v * v).sum();
        let pivot = l.values[hi] - s;
        if !(pivot > 0.0) {
            return Err(EvolveError::BreakdownPivot { row: i, pivot });
        }
        l.values[hi] = pivot.sqrt();
    }
    Ok(Preconditioner::Ic0(l))
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct PcgOutcome {
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Default iteration cap 10·√N.
pub fn default_max_iter(n: usize) -> usize {
    ((10.0 * (n as f64).sqrt()).ceil() as usize).max(10)
}

/// Solves 𝕄x = b to ‖𝕄x − b‖ ≤ tol·‖b‖, starting from the incoming x.
pub fn pcg_solve(
    m: &SparseSymMatrix,
    b: &[f64],
    pre: &Preconditioner,
    x: &mut [f64],
    tol: f64,
    max_iter: usize,
) -> Result<PcgOutcome, EvolveError> {
    let n = m.n;
    let bnorm = dot(b, b).sqrt();
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(PcgOutcome {
            iterations: 0,
            relative_residual: 0.0,
        });
    }
    let mut r = m.mul_vec(x);
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
    let mut rnorm = dot(&r, &r).sqrt();
    if rnorm <= tol * bnorm {
        return Ok(PcgOutcome {
            iterations: 0,
            relative_residual: rnorm / bnorm,
        });
    }
    let mut z = vec![0.0; n];
    pre.apply(&r, &mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut q = vec![0.0; n];
    for it in 1..=max_iter {
        m.mul_vec_into(&p, &mut q);
        let alpha = rz / dot(&p, &q);
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * q[i];
        }
        rnorm = dot(&r, &r).sqrt();
        if rnorm <= tol * bnorm {
            return Ok(PcgOutcome {
                iterations: it,
                relative_residual: rnorm / bnorm,
            });
        }
        pre.apply(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(EvolveError::NoConvergence {
        iterations: max_iter,
        residual: rnorm / bnorm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::{assemble, build_dof_map, quadrature_rule};
    use crate::domain::build_domain;
    use crate::mesh::generate_mesh;
    use proptest::prelude::*;

    fn mass(n: usize, l: usize) -> SparseSymMatrix {
        let d = build_domain();
        let m = generate_mesh(&d, n, l, 1.0).unwrap();
        let dm = build_dof_map(&m).unwrap();
        assemble(&m, &dm, &quadrature_rule(4).unwrap()).unwrap().mass
    }

    #[test]
    fn diagonal_ic0_is_exact() {
        let rows: Vec<Vec<usize>> = vec![vec![]; 4];
        let mut a = SparseSymMatrix::from_pattern(4, &rows);
        for i in 0..4 {
            a.add(i, i, (i + 1) as f64 * 4.0);
        }
        let Preconditioner::Ic0(l) = ic0_factor(&a).unwrap() else { panic!() };
        for i in 0..4 {
            assert_eq!(l.values[i], ((i + 1) as f64 * 4.0).sqrt());
        }
    }

    #[test]
    fn breakdown_is_reported() {
        let rows: Vec<Vec<usize>> = vec![vec![], vec![0]];
        let mut a = SparseSymMatrix::from_pattern(2, &rows);
        a.add(0, 0, 1.0);
        a.add(1, 0, 2.0);
        a.add(1, 1, 1.0);
        assert!(matches!(ic0_factor(&a), Err(EvolveError::BreakdownPivot { row: 1, .. })));
        assert_eq!(Preconditioner::for_mass(&a).kind(), PreconditionerKind::Jacobi);
    }

    #[test]
    fn solves_known_vector_and_zero() {
        let m = mass(2, 2);
        let pre = Preconditioner::for_mass(&m);
        assert_eq!(pre.kind(), PreconditionerKind::IncompleteCholesky0);
        let y: Vec<f64> = (0..m.n).map(|i| ((i * 7919) % 101) as f64 / 50.0 - 1.0).collect();
        let b = m.mul_vec(&y);
        let mut x = vec![0.0; m.n];
        pcg_solve(&m, &b, &pre, &mut x, 1e-12, default_max_iter(m.n)).unwrap();
        let err = x.iter().zip(&y).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        assert!(err <= 1e-10 * dot(&y, &y).sqrt());

        let mut z = vec![1.0; m.n];
        let o = pcg_solve(&m, &vec![0.0; m.n], &pre, &mut z, 1e-12, 10).unwrap();
        assert_eq!(o.iterations, 0);
        assert!(z.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn ic0_beats_jacobi() {
        let m = mass(4, 4);
        let b: Vec<f64> = (0..m.n).map(|i| (i as f64 * 0.37).sin()).collect();
        let count = |p: &Preconditioner| {
            let mut x = vec![0.0; m.n];
            pcg_solve(&m, &b, p, &mut x, 1e-12, 10_000).unwrap().iterations
        };
        let ic = count(&ic0_factor(&m).unwrap());
        let jac = count(&Preconditioner::jacobi(&m));
        assert!(ic < jac, "ic0 {ic} jacobi {jac}");
    }

    #[test]
    fn iteration_cap() {
        let m = mass(2, 2);
        let b = vec![1.0; m.n];
        let mut x = vec![0.0; m.n];
        let r = pcg_solve(&m, &b, &Preconditioner::jacobi(&m), &mut x, 1e-14, 1);
        assert!(matches!(r, Err(EvolveError::NoConvergence { iterations: 1, .. })));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn preconditioner_is_positive(u in prop::collection::vec(-1.0..1.0f64, 1..40usize)) {
            let m = mass(1, 1);
            let mut v = vec![0.0; m.n];
            for (i, x) in u.iter().enumerate() {
                v[i % m.n] += x;
            }
            prop_assume!(dot(&v, &v) > 1e-6);
            for pre in [ic0_factor(&m).unwrap(), Preconditioner::jacobi(&m)] {
                let mut z = vec![0.0; m.n];
                pre.apply(&v, &mut z);
                prop_assert!(dot(&z, &v) > 0.0);
            }
        }
    }
}
