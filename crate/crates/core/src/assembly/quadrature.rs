//! Symmetric quadrature on the reference tetrahedron.

use serde::Serialize;

use super::AssemblyError;

#[derive(Clone, Debug, Serialize)]
pub struct QuadratureRule {
    pub degree: usize,
    /// Barycentric coordinates (λ₀, λ₁, λ₂, λ₃).
    pub points: Vec<[f64; 4]>,
    /// Weights on the reference tetrahedron; they sum to 1/6.
    pub weights: Vec<f64>,
}

fn orbit_1111(a: f64) -> Vec<[f64; 4]> {
    let b = 1.0 - 3.0 * a;
    (0..4)
        .map(|k| {
            let mut p = [a; 4];
            p[k] = b;
            p
        })
        .collect()
}

fn orbit_22(b: f64) -> Vec<[f64; 4]> {
    let c = 0.5 - b;
    let pairs = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];
    pairs
        .iter()
        .map(|&(i, j)| {
            let mut p = [c; 4];
            p[i] = b;
            p[j] = b;
            p
        })
        .collect()
}

/// Degree 2 (4 points) or degree 4 (14 points, exact through degree 5).
pub fn quadrature_rule(degree: usize) -> Result<QuadratureRule, AssemblyError> {
    match degree {
        2 => {
            let b = 0.138_196_601_125_010_5;
            Ok(QuadratureRule {
                degree,
                points: orbit_1111(b),
                weights: vec![1.0 / 24.0; 4],
            })
        }
        4 => {
            let (a1, w1) = (0.310_885_919_263_300_6, 0.018_781_320_953_002_642);
            let (a2, w2) = (0.092_735_250_310_891_23, 0.012_248_840_519_393_658);
            let (b, w3) = (0.045_503_704_125_649_65, 0.007_091_003_462_846_911);
            let mut points = orbit_1111(a1);
            points.extend(orbit_1111(a2));
            points.extend(orbit_22(b));
            let mut weights = vec![w1; 4];
            weights.extend([w2; 4]);
            weights.extend([w3; 6]);
            Ok(QuadratureRule {
                degree,
                points,
                weights,
            })
        }
        d => Err(AssemblyError::UnsupportedDegree(d)),
    }
}

impl QuadratureRule {
    /// ∫ f over the reference tetrahedron, f given in Cartesian (x, y, z) = (λ₁, λ₂, λ₃).
    pub fn integrate_reference(&self, f: impl Fn(f64, f64, f64) -> f64) -> f64 {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(p, w)| w * f(p[1], p[2], p[3]))
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn factorial(n: u32) -> f64 {
        (1..=n).map(|k| k as f64).product()
    }

    /// ∫ x^a y^b z^c over the reference tetrahedron = a! b! c! / (a+b+c+3)!.
    fn monomial(a: u32, b: u32, c: u32) -> f64 {
        factorial(a) * factorial(b) * factorial(c) / factorial(a + b + c + 3)
    }

    #[test]
    fn volume_and_xy() {
        for d in [2, 4] {
            let q = quadrature_rule(d).unwrap();
            let s: f64 = q.weights.iter().sum();
            assert!((s - 1.0 / 6.0).abs() < 1e-16);
            for p in &q.points {
                assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-15);
            }
        }
        let q = quadrature_rule(2).unwrap();
        assert!((q.integrate_reference(|x, y, _| x * y) - 1.0 / 120.0).abs() < 1e-15);
        assert!(matches!(quadrature_rule(3), Err(AssemblyError::UnsupportedDegree(3))));
    }

    #[test]
    fn monomial_sweep() {
        for (deg, exact_to, tol) in [(2usize, 2u32, 1e-15), (4, 5, 1e-14)] {
            let q = quadrature_rule(deg).unwrap();
            for a in 0..=exact_to {
                for b in 0..=(exact_to - a) {
                    for c in 0..=(exact_to - a - b) {
                        let v = q.integrate_reference(|x, y, z| {
                            x.powi(a as i32) * y.powi(b as i32) * z.powi(c as i32)
                        });
                        let e = monomial(a, b, c);
                        assert!((v - e).abs() < tol, "deg {deg}: x^{a}y^{b}z^{c}: {v} vs {e}");
                    }
                }
            }
        }
    }
}
