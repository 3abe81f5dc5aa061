//! Geometric and periodicity checks of a tetrahedral mesh of 𝓕_v.

use std::collections::HashMap;
use std::f64::consts::PI;

use serde::Serialize;

use super::TetMesh;
use crate::assembly::quadrature::quadrature_rule;
use crate::domain::FundamentalDomain;

/// 2π²/120, the volume of 𝒮³/𝓘*.
pub const EXACT_VOLUME: f64 = 2.0 * PI * PI / 120.0;

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct MeshReport {
    pub n: usize,
    pub layers: usize,
    pub num_vertices: usize,
    pub num_tets: usize,
    pub num_boundary_tris: usize,
    pub num_boundary_vertices: usize,
    pub periodic_pairs: usize,
    /// Σ ∫_T (1−|X|²)^{−1/2} dX, the Riemannian volume of the mesh.
    pub volume: f64,
    pub euclidean_volume: f64,
    pub exact_volume: f64,
    pub relative_volume_error: f64,
    pub min_tet_volume: f64,
    pub min_boundary_edge: f64,
    pub max_boundary_edge: f64,
    pub edge_ratio: f64,
    pub max_partner_error: f64,
    pub max_ellipsoid_residual: f64,
    pub max_domain_violation: f64,
    pub conforming: bool,
    pub partners_involutive: bool,
}

impl MeshReport {
    /// Problems found, empty when the mesh passes all checks.
    pub fn problems(&self, tol: f64, max_edge_ratio: f64) -> Vec<String> {
        let mut p = Vec::new();
        if !self.conforming {
            p.push("mesh is not conforming".into());
        }
        if self.min_tet_volume <= 0.0 {
            p.push(format!("nonpositive tet volume {:e}", self.min_tet_volume));
        }
        if self.max_partner_error > tol {
            p.push(format!("periodic partner error {:e}", self.max_partner_error));
        }
        if !self.partners_involutive {
            p.push("partner map is not an involution".into());
        }
        if self.max_ellipsoid_residual > tol {
            p.push(format!("boundary node off its ellipsoid by {:e}", self.max_ellipsoid_residual));
        }
        if self.max_domain_violation > tol {
            p.push(format!("vertex outside the domain by {:e}", self.max_domain_violation));
        }
        if self.edge_ratio > max_edge_ratio {
            p.push(format!("boundary edge ratio {:.3} exceeds {max_edge_ratio}", self.edge_ratio));
        }
        p
    }
}

/// ∫_T w dX with w = (1−|X|²)^{−1/2}, degree-4 quadrature.
pub fn riemannian_volume(mesh: &TetMesh) -> f64 {
    let rule = quadrature_rule(4).expect("degree 4 is supported");
    let mut total = 0.0;
    for (t, tet) in mesh.tets.iter().enumerate() {
        let det = 6.0 * mesh.signed_volume(t);
        let x = tet.map(|i| mesh.vertices[i]);
        let mut s = 0.0;
        for (p, w) in rule.points.iter().zip(&rule.weights) {
            let q = x[0] * p[0] + x[1] * p[1] + x[2] * p[2] + x[3] * p[3];
            s += w / (1.0 - q.norm_squared()).sqrt();
        }
        total += s * det;
    }
    total
}

pub fn validate_mesh(domain: &FundamentalDomain, mesh: &TetMesh) -> MeshReport {
    let euclidean_volume: f64 = (0..mesh.tets.len()).map(|t| mesh.signed_volume(t)).sum();
    let min_tet_volume = (0..mesh.tets.len())
        .map(|t| mesh.signed_volume(t))
        .fold(f64::INFINITY, f64::min);
    let volume = riemannian_volume(mesh);

    let mut faces: HashMap<[usize; 3], u32> = HashMap::new();
    for t in &mesh.tets {
        for skip in 0..4 {
            let mut f = [0usize; 3];
            let mut j = 0;
            for (i, &v) in t.iter().enumerate() {
                if i != skip {
                    f[j] = v;
                    j += 1;
                }
            }
            f.sort_unstable();
            *faces.entry(f).or_default() += 1;
        }
    }
    let mut boundary: Vec<[usize; 3]> = faces.iter().filter(|(_, &c)| c == 1).map(|(f, _)| *f).collect();
    let mut tagged: Vec<[usize; 3]> = mesh
        .boundary_tris
        .iter()
        .map(|t| {
            let mut s = *t;
            s.sort_unstable();
            s
        })
        .collect();
    boundary.sort_unstable();
    tagged.sort_unstable();
    let conforming = faces.values().all(|&c| c <= 2) && boundary == tagged;

    let mut min_e = f64::INFINITY;
    let mut max_e: f64 = 0.0;
    for t in &mesh.boundary_tris {
        for k in 0..3 {
            let l = (mesh.vertices[t[k]] - mesh.vertices[t[(k + 1) % 3]]).norm();
            min_e = min_e.min(l);
            max_e = max_e.max(l);
        }
    }

    let mut max_partner_error: f64 = 0.0;
    let mut partners_involutive = true;
    for (v, ps) in mesh.partners.iter().enumerate() {
        for p in ps {
            match domain.apply_face_map(p.map, &mesh.vertices[v]) {
                Ok(y) => max_partner_error = max_partner_error.max((y - mesh.vertices[p.node]).amax()),
                Err(_) => max_partner_error = f64::INFINITY,
            }
            let back = mesh.partners[p.node]
                .iter()
                .any(|q| q.node == v && q.map == domain.face_maps[p.map].inverse_index);
            partners_involutive &= back;
        }
    }

    let mut max_ellipsoid_residual: f64 = 0.0;
    for (v, fs) in mesh.vertex_faces.iter().enumerate() {
        for &f in fs {
            max_ellipsoid_residual =
                max_ellipsoid_residual.max(domain.faces[f].ellipsoid_residual(&mesh.vertices[v]).abs());
        }
    }
    let max_domain_violation = mesh
        .vertices
        .iter()
        .map(|x| domain.max_violation(x).unwrap_or(f64::INFINITY))
        .fold(f64::NEG_INFINITY, f64::max)
        .max(0.0);

    MeshReport {
        n: mesh.n,
        layers: mesh.layers,
        num_vertices: mesh.vertices.len(),
        num_tets: mesh.tets.len(),
        num_boundary_tris: mesh.boundary_tris.len(),
        num_boundary_vertices: mesh.num_boundary_vertices(),
        periodic_pairs: mesh.num_periodic_pairs(),
        volume,
        euclidean_volume,
        exact_volume: EXACT_VOLUME,
        relative_volume_error: (volume - EXACT_VOLUME).abs() / EXACT_VOLUME,
        min_tet_volume,
        min_boundary_edge: min_e,
        max_boundary_edge: max_e,
        edge_ratio: max_e / min_e,
        max_partner_error,
        max_ellipsoid_residual,
        max_domain_violation,
        conforming,
        partners_involutive,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::build_domain;
    use crate::mesh::generate_mesh;

    #[test]
    fn small_mesh_is_valid() {
        let d = build_domain();
        let m = generate_mesh(&d, 2, 2, 1.0).unwrap();
        let r = validate_mesh(&d, &m);
        assert!(r.problems(1e-9, 4.0).is_empty(), "{:?}", r.problems(1e-9, 4.0));
        assert!(r.relative_volume_error < 0.05);
        assert!(r.euclidean_volume < r.volume);
    }
}
