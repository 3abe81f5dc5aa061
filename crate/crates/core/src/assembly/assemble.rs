use nalgebra::{Matrix3, Vector3};

use super::dof::DofMap;
use super::quadrature::QuadratureRule;
use super::sparse::SparseSymMatrix;
use super::AssemblyError;
use crate::mesh::TetMesh;

/// The three weighted P1 matrices on the identified DOFs.
#[derive(Clone, Debug)]
pub struct Operators {
    pub mass: SparseSymMatrix,
    pub stiffness: SparseSymMatrix,
    pub drift: SparseSymMatrix,
}

impl Operators {
    /// 𝕂 + 𝔻.
    pub fn wave_operator(&self) -> SparseSymMatrix {
        self.stiffness.add_scaled(&self.drift, 1.0)
    }
}

/// Local 4×4 matrices of one tetrahedron, plus the gradients of its barycentric
/// coordinates.
pub struct LocalMatrices {
    pub mass: [[f64; 4]; 4],
    pub stiffness: [[f64; 4]; 4],
    pub drift: [[f64; 4]; 4],
}

pub fn weight(x: &Vector3<f64>) -> Option<f64> {
    let s = 1.0 - x.norm_squared();
    (s > 0.0).then(|| 1.0 / s.sqrt())
}

pub fn local_matrices(x: &[Vector3<f64>; 4], rule: &QuadratureRule, tet: usize) -> Result<LocalMatrices, AssemblyError> {
    let jac = Matrix3::from_columns(&[x[1] - x[0], x[2] - x[0], x[3] - x[0]]);
    let det = jac.determinant();
    let inv = jac.try_inverse().ok_or(AssemblyError::DegenerateElement(tet))?;
    // ∇λ_k for k = 1, 2, 3 are the rows of J⁻¹
    let mut grad = [Vector3::zeros(); 4];
    for k in 0..3 {
        grad[k + 1] = inv.row(k).transpose();
    }
    grad[0] = -(grad[1] + grad[2] + grad[3]);

    let scale = det.abs();
    let mut out = LocalMatrices {
        mass: [[0.0; 4]; 4],
        stiffness: [[0.0; 4]; 4],
        drift: [[0.0; 4]; 4],
    };
    let mut wsum = 0.0;
    for (p, qw) in rule.points.iter().zip(&rule.weights) {
        let xq = x[0] * p[0] + x[1] * p[1] + x[2] * p[2] + x[3] * p[3];
        let w = weight(&xq).ok_or(AssemblyError::WeightSingularity {
            tet,
            radius: xq.norm(),
        })?;
        let c = qw * scale * w;
        wsum += c;
        let xg = grad.map(|g| xq.dot(&g));
        for a in 0..4 {
            for b in 0..4 {
                out.mass[a][b] += c * p[a] * p[b];
                out.drift[a][b] -= c * xg[a] * xg[b];
            }
        }
    }
    for a in 0..4 {
        for b in 0..4 {
            out.stiffness[a][b] = wsum * grad[a].dot(&grad[b]);
        }
    }
    Ok(out)
}

/// Sparsity pattern of the identified DOFs: (I, J) is present when some tet
/// contains members of both classes.
pub fn dof_pattern(mesh: &TetMesh, dofs: &DofMap) -> SparseSymMatrix {
    let n = dofs.num_dofs();
    let mut rows: Vec<Vec<usize>> = vec![Vec::new(); n];
    for t in &mesh.tets {
        let d = t.map(|v| dofs.node_to_dof[v]);
        for &i in &d {
            for &j in &d {
                if j < i {
                    rows[i].push(j);
                }
            }
        }
    }
    SparseSymMatrix::from_pattern(n, &rows)
}

/// 𝕄, 𝕂, 𝔻 with entries summed over class members. Tets are processed in
/// order, so results are bit-reproducible.
pub fn assemble(mesh: &TetMesh, dofs: &DofMap, rule: &QuadratureRule) -> Result<Operators, AssemblyError> {
    let pattern = dof_pattern(mesh, dofs);
    let mut mass = pattern.clone();
    let mut stiffness = pattern.clone();
    let mut drift = pattern;
    for (ti, t) in mesh.tets.iter().enumerate() {
        let x = t.map(|v| mesh.vertices[v]);
        let loc = local_matrices(&x, rule, ti)?;
        let d = t.map(|v| dofs.node_to_dof[v]);
        for a in 0..4 {
            for b in 0..4 {
                // each unordered global pair once; identified diagonal pairs twice
                if d[a] < d[b] || (d[a] == d[b] && a > b) {
                    continue;
                }
                let p = mass.position(d[a], d[b]).expect("pattern covers tet");
                mass.values[p] += loc.mass[a][b];
                stiffness.values[p] += loc.stiffness[a][b];
                drift.values[p] += loc.drift[a][b];
            }
        }
    }
    Ok(Operators { mass, stiffness, drift })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::dof::build_dof_map;
    use crate::assembly::quadrature::quadrature_rule;
    use crate::domain::build_domain;
    use crate::mesh::generate_mesh;
    use crate::mesh::validate::EXACT_VOLUME;
    use nalgebra::{DMatrix, SymmetricEigen};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn setup(n: usize, l: usize) -> (TetMesh, DofMap, Operators) {
        let d = build_domain();
        let m = generate_mesh(&d, n, l, 1.0).unwrap();
        let dm = build_dof_map(&m).unwrap();
        let ops = assemble(&m, &dm, &quadrature_rule(4).unwrap()).unwrap();
        (m, dm, ops)
    }

    fn det3(a: Vector3<f64>, b: Vector3<f64>, c: Vector3<f64>) -> f64 {
        a.cross(&b).dot(&c)
    }

    /// Neumaier-compensated accumulator.
    #[derive(Clone, Copy, Default)]
    struct Acc(f64, f64);

    impl Acc {
        fn add(&mut self, v: f64) {
            let t = self.0 + v;
            if self.0.abs() >= v.abs() {
                self.1 += (self.0 - t) + v;
            } else {
                self.1 += (v - t) + self.0;
            }
            self.0 = t;
        }
    }

    /// Dense reference: λ_a(X) as the sub-volume ratio with vertex a replaced by
    /// X, ∇λ_a from the cross product of the opposite face; every (vertex, vertex)
    /// pair at every quadrature point summed with compensation.
    fn dense_reference(m: &TetMesh, dm: &DofMap) -> [DMatrix<f64>; 3] {
        let rule = quadrature_rule(4).unwrap();
        let nd = dm.num_dofs();
        let mut acc = vec![[Acc::default(); 3]; nd * nd];
        for t in &m.tets {
            let x = t.map(|i| m.vertices[i]);
            let six_v = det3(x[1] - x[0], x[2] - x[0], x[3] - x[0]);
            let lambda = |a: usize, p: &Vector3<f64>| {
                let mut y = x;
                y[a] = *p;
                det3(y[1] - y[0], y[2] - y[0], y[3] - y[0]) / six_v
            };
            let g: Vec<Vector3<f64>> = (0..4)
                .map(|a| {
                    let (b, c, d) = ((a + 1) % 4, (a + 2) % 4, (a + 3) % 4);
                    let n = (x[c] - x[b]).cross(&(x[d] - x[b]));
                    // orient toward vertex a
                    let n = if n.dot(&(x[a] - x[b])) < 0.0 { -n } else { n };
                    n / n.dot(&(x[a] - x[b]))
                })
                .collect();
            for (p, qw) in rule.points.iter().zip(&rule.weights) {
                let mut xq = Vector3::zeros();
                for k in 0..4 {
                    xq += x[k] * p[k];
                }
                let w = 1.0 / (1.0 - xq.norm_squared()).sqrt();
                let e: Vec<f64> = (0..4).map(|a| lambda(a, &xq)).collect();
                let s = qw * six_v.abs() * w;
                for a in 0..4 {
                    for b in 0..4 {
                        let (i, j) = (dm.node_to_dof[t[a]], dm.node_to_dof[t[b]]);
                        let cell = &mut acc[i * nd + j];
                        cell[0].add(s * e[a] * e[b]);
                        cell[1].add(s * g[a].dot(&g[b]));
                        cell[2].add(-s * xq.dot(&g[a]) * xq.dot(&g[b]));
                    }
                }
            }
        }
        [0, 1, 2].map(|k| DMatrix::from_fn(nd, nd, |i, j| acc[i * nd + j][k].0 + acc[i * nd + j][k].1))
    }

    #[test]
    fn matches_dense_reference() {
        let (m, dm, ops) = setup(1, 1);
        assert!(dm.num_dofs() <= 50);
        let r = dense_reference(&m, &dm);
        for (sp, de) in [&ops.mass, &ops.stiffness, &ops.drift].iter().zip(&r) {
            let diff = (sp.to_dense() - de).amax();
            assert!(diff < 1e-14, "max diff {diff:e}");
        }
    }

    #[test]
    fn mass_is_positive_definite_and_kernel_is_constants() {
        let (_, _, ops) = setup(1, 1);
        let md = ops.mass.to_dense();
        let eig = SymmetricEigen::new(md.clone());
        assert!(eig.eigenvalues.min() > 0.0);
        // generalized eigenvalues via M^{-1/2} A M^{-1/2}
        let l = md.cholesky().unwrap().l();
        let li = l.try_inverse().unwrap();
        let a = ops.wave_operator().to_dense();
        let s = &li * a * li.transpose();
        let mut ev: Vec<f64> = SymmetricEigen::new(s).eigenvalues.iter().copied().collect();
        ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!(ev[0].abs() < 1e-10, "{}", ev[0]);
        assert!(ev[1] > 1.0, "{}", ev[1]);
    }

    #[test]
    fn row_sums_and_volume() {
        let (_, dm, ops) = setup(4, 4);
        let ones = vec![1.0; dm.num_dofs()];
        let r = ops.wave_operator().mul_vec(&ones);
        let kmax = ops.stiffness.max_abs();
        assert!(r.iter().all(|v| v.abs() <= 1e-12 * kmax));
        let total = ops.mass.bilinear(&ones, &ones);
        assert!((total - EXACT_VOLUME).abs() / EXACT_VOLUME < 2e-3 * 4.0);
        assert!(ops.mass.check_structure());
    }

    #[test]
    fn quadratic_form_nonnegative() {
        let (_, dm, ops) = setup(2, 2);
        let a = ops.wave_operator();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let u: Vec<f64> = (0..dm.num_dofs()).map(|_| rng.random_range(-1.0..1.0)).collect();
            let q = a.bilinear(&u, &u);
            let n2: f64 = u.iter().map(|v| v * v).sum();
            assert!(q >= -1e-12 * n2);
        }
    }

    #[test]
    fn tet_order_does_not_matter() {
        let (mut m, dm, ops) = setup(2, 2);
        m.tets.reverse();
        for t in m.tets.iter_mut() {
            t.rotate_left(2);
        }
        let rule = quadrature_rule(4).unwrap();
        let o2 = assemble(&m, &dm, &rule).unwrap();
        for (a, b) in [(&ops.mass, &o2.mass), (&ops.stiffness, &o2.stiffness), (&ops.drift, &o2.drift)] {
            assert_eq!(a.col_idx, b.col_idx);
            let scale = a.max_abs();
            let diff = a.values.iter().zip(&b.values).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
            assert!(diff <= 1e-15 * scale.max(1.0), "{diff:e}");
        }
    }

    #[test]
    fn singular_weight_is_reported() {
        let rule = quadrature_rule(2).unwrap();
        let x = [
            Vector3::new(0.9, 0.0, 0.0),
            Vector3::new(1.5, 0.0, 0.0),
            Vector3::new(0.9, 0.5, 0.0),
            Vector3::new(0.9, 0.0, 0.5),
        ];
        assert!(matches!(local_matrices(&x, &rule, 3), Err(AssemblyError::WeightSingularity { tet: 3, .. })));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn local_matrices_symmetric_with_zero_row_sums(
            pts in prop::collection::vec(-0.3..0.3f64, 12)
        ) {
            let x = [0, 1, 2, 3].map(|k| Vector3::new(pts[3 * k], pts[3 * k + 1], pts[3 * k + 2]));
            let vol = (x[1] - x[0]).cross(&(x[2] - x[0])).dot(&(x[3] - x[0]));
            prop_assume!(vol.abs() > 1e-4);
            let l = local_matrices(&x, &quadrature_rule(4).unwrap(), 0).unwrap();
            for a in 0..4 {
                let rs: f64 = (0..4).map(|b| l.stiffness[a][b] + l.drift[a][b]).sum();
                prop_assert!(rs.abs() < 1e-10 * (1.0 + l.stiffness[a][a].abs()));
                for b in 0..4 {
                    prop_assert!((l.mass[a][b] - l.mass[b][a]).abs() < 1e-16);
                    prop_assert!((l.drift[a][b] - l.drift[b][a]).abs() < 1e-12 * (1.0 + l.drift[a][a].abs()));
                }
            }
        }
    }
}
