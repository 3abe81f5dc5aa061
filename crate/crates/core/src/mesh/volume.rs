//! Star-shaped layered tetrahedralization of 𝓕_v about the origin.

use super::{MeshError, SurfaceMesh, TetMesh};

const MIN_VOLUME: f64 = 1e-16;

/// Scaled copies of the surface at t_k = (k/L)^γ, k = 1 … L, prisms between
/// consecutive layers split into three tetrahedra, innermost layer coned to the
/// origin.
///
/// Vertex numbering: the surface nodes (layer L) keep their indices, followed by
/// layers L−1, …, 1, and the origin last.
pub fn build_volume_mesh(surface: &SurfaceMesh, layers: usize, grading: f64) -> Result<TetMesh, MeshError> {
    if layers < 1 {
        return Err(MeshError::InvalidLayers(layers));
    }
    let ns = surface.nodes.len();
    let nl = layers;
    let t = |k: usize| (k as f64 / nl as f64).powf(grading);
    // global index of surface node s on layer k (1 ≤ k ≤ L)
    let gid = |s: usize, k: usize| (nl - k) * ns + s;
    let origin = nl * ns;

    let mut vertices = Vec::with_capacity(origin + 1);
    for k in (1..=nl).rev() {
        let tk = t(k);
        vertices.extend(surface.nodes.iter().map(|x| x * tk));
    }
    vertices.push(nalgebra::Vector3::zeros());

    let mut tets = Vec::with_capacity(surface.triangles.len() * (3 * (nl - 1) + 1));
    for tri in &surface.triangles {
        let mut s = *tri;
        s.sort_unstable();
        let [a, b, c] = s;
        for k in 1..nl {
            let (a0, b0, c0) = (gid(a, k), gid(b, k), gid(c, k));
            let (a1, b1, c1) = (gid(a, k + 1), gid(b, k + 1), gid(c, k + 1));
            tets.push([a0, b0, c0, c1]);
            tets.push([a0, b0, b1, c1]);
            tets.push([a0, a1, b1, c1]);
        }
        tets.push([gid(a, 1), gid(b, 1), gid(c, 1), origin]);
    }

    let mut mesh = TetMesh {
        vertices,
        tets,
        boundary_tris: surface.triangles.clone(),
        boundary_face: surface.triangle_face.clone(),
        vertex_faces: {
            let mut v = surface.node_faces.clone();
            v.resize(origin + 1, Vec::new());
            v
        },
        partners: {
            let mut p = surface.partners.clone();
            p.resize(origin + 1, Vec::new());
            p
        },
        n: surface.n,
        layers,
    };
    for i in 0..mesh.tets.len() {
        let v = mesh.signed_volume(i);
        if v < 0.0 {
            mesh.tets[i].swap(2, 3);
        }
        let v = v.abs();
        if v < MIN_VOLUME {
            return Err(MeshError::DegenerateTet { tet: i, volume: v });
        }
    }
    Ok(mesh)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::build_domain;
    use crate::mesh::generate_mesh;
    use std::collections::HashMap;

    #[test]
    fn tet_count_formula() {
        let d = build_domain();
        for (n, l) in [(1, 1), (2, 2), (2, 3), (3, 1)] {
            let m = generate_mesh(&d, n, l, 1.0).unwrap();
            assert_eq!(m.tets.len(), 60 * n * n * (3 * (l - 1) + 1));
            assert_eq!(m.vertices.len(), l * (30 * n * n + 2) + 1);
            assert!((0..m.tets.len()).all(|t| m.signed_volume(t) > 0.0));
        }
    }

    #[test]
    fn conforming() {
        let d = build_domain();
        let m = generate_mesh(&d, 3, 3, 1.0).unwrap();
        let mut faces: HashMap<[usize; 3], usize> = HashMap::new();
        for t in &m.tets {
            for skip in 0..4 {
                let mut f: Vec<usize> = (0..4).filter(|&i| i != skip).map(|i| t[i]).collect();
                f.sort_unstable();
                *faces.entry([f[0], f[1], f[2]]).or_default() += 1;
            }
        }
        let mut bnd: Vec<[usize; 3]> = faces.iter().filter(|(_, &c)| c == 1).map(|(f, _)| *f).collect();
        assert!(faces.values().all(|&c| c == 1 || c == 2));
        let mut expect: Vec<[usize; 3]> = m
            .boundary_tris
            .iter()
            .map(|t| {
                let mut s = *t;
                s.sort_unstable();
                s
            })
            .collect();
        bnd.sort_unstable();
        expect.sort_unstable();
        assert_eq!(bnd, expect);
    }

    #[test]
    fn graded_layers_and_validation() {
        let d = build_domain();
        let m = generate_mesh(&d, 2, 3, 1.5).unwrap();
        assert!((0..m.tets.len()).all(|t| m.signed_volume(t) > 0.0));
        let e = build_volume_mesh(
            &crate::mesh::build_boundary_mesh(&d, &crate::mesh::triangulate_face_chart(&d, 1).unwrap()).unwrap(),
            0,
            1.0,
        );
        assert!(matches!(e, Err(MeshError::InvalidLayers(0))));
    }
}
