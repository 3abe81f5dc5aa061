//! Initial data on the identified DOFs.

use nalgebra::{Vector3, Vector4};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::EvolveError;
use crate::assembly::DofMap;
use crate::domain::{lift, sphere_distance, DomainError, FundamentalDomain};
use crate::icosian::{quat_mul, GroupTable, Quaternion};
use crate::mesh::TetMesh;

/// A·exp(d/(d − r₀)) for d < r₀, zero beyond.
pub fn bump_profile(d: f64, r0: f64, amplitude: f64) -> f64 {
    if d < r0 {
        amplitude * (d / (d - r0)).exp()
    } else {
        0.0
    }
}

/// Distance in 𝒮³/𝓘*: the smallest spherical distance from `p` to any image g·q.
pub fn quotient_distance(images: &[Vector4<f64>], p: &Vector4<f64>) -> f64 {
    images.iter().map(|q| sphere_distance(p, q)).fold(f64::INFINITY, f64::min)
}

/// The 120 images of lift(x) under left multiplication.
pub fn orbit_of(group: &GroupTable, x: &Vector3<f64>) -> Result<Vec<Vector4<f64>>, DomainError> {
    let q = Quaternion::from_vector(&lift(x)?);
    Ok(group.quats().map(|g| quat_mul(g, &q).to_vector()).collect())
}

/// Bump centred at x0 evaluated at every DOF representative.
pub fn initial_bump(
    domain: &FundamentalDomain,
    group: &GroupTable,
    mesh: &TetMesh,
    dofs: &DofMap,
    x0: &Vector3<f64>,
    r0: f64,
    amplitude: f64,
) -> Result<Vec<f64>, EvolveError> {
    if !(r0 > 0.0) {
        return Err(EvolveError::InvalidParameter(format!("bump radius must be positive, got {r0}")));
    }
    if !domain.contains(x0, 1e-9)? {
        return Err(EvolveError::Domain(DomainError::NotInDomain(domain.max_violation(x0)?)));
    }
    let images = orbit_of(group, x0)?;
    dofs.representative
        .iter()
        .map(|&v| {
            let p = lift(&mesh.vertices[v])?;
            Ok(bump_profile(quotient_distance(&images, &p), r0, amplitude))
        })
        .collect()
}

/// Uniform values in [−A, A] from ChaCha8 seeded with `seed`.
pub fn initial_random(seed: u64, amplitude: f64, len: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..len).map(|_| amplitude * (2.0 * rng.random::<f64>() - 1.0)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::build_dof_map;
    use crate::domain::build_domain;
    use crate::icosian::generate_group;
    use crate::mesh::generate_mesh;

    #[test]
    fn profile_values() {
        assert_eq!(bump_profile(0.0, 0.3, 100.0), 100.0);
        assert!((bump_profile(0.15, 0.3, 2.0) - 2.0 / std::f64::consts::E).abs() < 1e-15);
        assert_eq!(bump_profile(0.3, 0.3, 1.0), 0.0);
        assert_eq!(bump_profile(0.5, 0.3, 1.0), 0.0);
        assert!(bump_profile(0.3 - 1e-9, 0.3, 1.0) < 1e-100);
    }

    #[test]
    fn random_data() {
        let a = initial_random(1, 2.0, 1000);
        assert_eq!(a, initial_random(1, 2.0, 1000));
        assert!(a.iter().all(|v| v.abs() <= 2.0));
        let b = initial_random(2, 2.0, 1000);
        let differ = a.iter().zip(&b).filter(|(x, y)| x != y).count();
        assert!(differ >= 990);
        assert!(initial_random(3, 0.0, 50).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn bump_on_mesh() {
        let d = build_domain();
        let g = generate_group().unwrap();
        let m = generate_mesh(&d, 2, 2, 1.0).unwrap();
        let dm = build_dof_map(&m).unwrap();
        let u = initial_bump(&d, &g, &m, &dm, &Vector3::zeros(), 0.3, 100.0).unwrap();
        // the origin is the last vertex and its own class
        assert_eq!(u[dm.node_to_dof[m.vertices.len() - 1]], 100.0);
        assert!(u.iter().all(|&v| (0.0..=100.0).contains(&v)));
        // boundary nodes are farther than 0.3 from every image of the origin
        assert!((0..m.vertices.len())
            .filter(|&v| !m.vertex_faces[v].is_empty())
            .all(|v| u[dm.node_to_dof[v]] == 0.0));
        let far = Vector3::new(0.9, 0.0, 0.0);
        assert!(matches!(
            initial_bump(&d, &g, &m, &dm, &far, 0.3, 1.0),
            Err(EvolveError::Domain(DomainError::NotInDomain(_)))
        ));
    }

    #[test]
    fn quotient_distance_is_invariant() {
        let d = build_domain();
        let g = generate_group().unwrap();
        let x0 = Vector3::new(0.05, -0.02, 0.1);
        let images = orbit_of(&g, &x0).unwrap();
        // a boundary point and its image under a face map are equidistant
        let s = d.vertex_v(5);
        let t = d.apply_face_map(d.faces_of(&s, 1e-9).unwrap()[0], &s).unwrap();
        let ds = quotient_distance(&images, &lift(&s).unwrap());
        let dt = quotient_distance(&images, &lift(&t).unwrap());
        assert!((ds - dt).abs() < 1e-12, "{ds} vs {dt}");
    }
}
