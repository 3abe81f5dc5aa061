//! Periodic triangulation of ∂𝓕_v.
//!
//! Face 1 comes from the chart; faces 2–6 are rotated copies; faces 7–12 are the
//! images of faces 1–6 under g₁ … g₆. Nodes on pentagon vertices and edges are
//! shared between faces and placed canonically on the geodesic edges.

use std::collections::HashMap;

use nalgebra::{Matrix3, Vector3, Vector4};
use serde::Serialize;

use super::chart::{embed, face_frame, FaceChart, NodeKey};
use super::{MeshError, Partner};
use crate::domain::{geodesic_point, lift, opposite, project, FundamentalDomain, NUM_FACES};
use crate::golden::{INV_SIGMA, SIGMA};

/// Rotations of ℝ³ sending F₁,ᵥ onto F₂,ᵥ … F₆,ᵥ (in that order).
pub fn replication_rotations() -> [Matrix3<f64>; 5] {
    let s = SIGMA;
    let i = INV_SIGMA;
    [
        Matrix3::new(i, s, 1.0, -s, 1.0, -i, -1.0, -i, s) * 0.5,
        Matrix3::new(s, -1.0, -i, 1.0, i, s, -i, -s, 1.0) * 0.5,
        Matrix3::new(i, -s, -1.0, s, 1.0, -i, 1.0, -i, s) * 0.5,
        Matrix3::new(s, -1.0, i, 1.0, i, -s, i, s, 1.0) * 0.5,
        Matrix3::new(s, 1.0, -i, -1.0, i, -s, -i, s, 1.0) * 0.5,
    ]
}

/// Global identity of a surface node.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum SurfaceKey {
    Vertex(usize),
    /// (lo, hi, k): k-th interior point from S_lo toward S_hi, lo < hi.
    Edge(usize, usize, usize),
    /// (face, local index among that face's interior nodes).
    Face(usize, usize),
}

#[derive(Clone, Debug, Serialize)]
pub struct SurfaceMesh {
    pub n: usize,
    pub nodes: Vec<Vector3<f64>>,
    pub keys: Vec<SurfaceKey>,
    /// Faces (0-based) each node lies on: 1, 2 or 3 entries.
    pub node_faces: Vec<Vec<usize>>,
    /// Oriented with outward normals (away from the origin).
    pub triangles: Vec<[usize; 3]>,
    pub triangle_face: Vec<usize>,
    pub partners: Vec<Vec<Partner>>,
}

const SNAP_LIMIT: f64 = 1e-6;
const PARTNER_TOL: f64 = 1e-12;

/// Builds the periodic surface mesh from the face-1 chart.
pub fn build_boundary_mesh(
    domain: &FundamentalDomain,
    chart: &FaceChart,
) -> Result<SurfaceMesh, MeshError> {
    let n = chart.n;
    // face-1 template in 𝒮³, taken from the chart
    let template: Vec<Vector4<f64>> = chart.nodes.iter().map(|&(u, v)| embed(u, v)).collect();
    let (corners1, _) = face_frame(domain, 0);
    for (k, key) in chart.keys.iter().enumerate() {
        if let NodeKey::Corner(c) = key {
            let d = (template[k] - corners1[*c]).amax();
            if d > SNAP_LIMIT {
                return Err(MeshError::SnapFailure { node: k, distance: d });
            }
        }
    }
    let rotations = replication_rotations();

    // per-face node positions in 𝒮³, faces 1–6 then 7–12
    let mut face_pts: Vec<Vec<Vector4<f64>>> = vec![Vec::new(); NUM_FACES];
    face_pts[0] = template.clone();
    for (f, r) in rotations.iter().enumerate() {
        face_pts[f + 1] = template
            .iter()
            .map(|p| {
                let x = r * project(p);
                Vector4::new(p[0], x[0], x[1], x[2])
            })
            .collect();
    }
    for f in 0..6 {
        let l = domain.face_maps[f].quat.left_matrix();
        face_pts[f + 6] = face_pts[f].iter().map(|p| l * p).collect();
    }

    let find_vertex = |p: &Vector4<f64>| -> Result<usize, MeshError> {
        domain
            .vertices
            .iter()
            .position(|v| (v - p).amax() < SNAP_LIMIT)
            .ok_or(MeshError::SnapFailure {
                node: usize::MAX,
                distance: f64::INFINITY,
            })
    };

    let mut keys: Vec<SurfaceKey> = Vec::new();
    let mut pos: Vec<Vector4<f64>> = Vec::new();
    let mut index: HashMap<SurfaceKey, usize> = HashMap::new();
    // vertices first, in domain order
    for (v, p) in domain.vertices.iter().enumerate() {
        index.insert(SurfaceKey::Vertex(v), keys.len());
        keys.push(SurfaceKey::Vertex(v));
        pos.push(*p);
    }

    let corner_ids: Vec<usize> = chart
        .keys
        .iter()
        .enumerate()
        .filter_map(|(i, k)| matches!(k, NodeKey::Corner(_)).then_some(i))
        .collect();

    let mut face_local: Vec<Vec<usize>> = vec![Vec::new(); NUM_FACES];
    // local→global maps filled in two passes so that edges precede face interiors
    let mut face_vertex_of_corner = vec![[0usize; 5]; NUM_FACES];
    for f in 0..NUM_FACES {
        for &i in &corner_ids {
            if let NodeKey::Corner(c) = chart.keys[i] {
                face_vertex_of_corner[f][c] = find_vertex(&face_pts[f][i])?;
            }
        }
        let mut set: Vec<usize> = face_vertex_of_corner[f].to_vec();
        let mut cyc: Vec<usize> = domain.faces[f].vertex_cycle.to_vec();
        set.sort_unstable();
        cyc.sort_unstable();
        if set != cyc {
            return Err(MeshError::SnapFailure {
                node: usize::MAX,
                distance: f64::INFINITY,
            });
        }
    }
    let edge_key = |f: usize, c: usize, k: usize| {
        let a = face_vertex_of_corner[f][c];
        let b = face_vertex_of_corner[f][(c + 1) % 5];
        if a < b {
            SurfaceKey::Edge(a, b, k)
        } else {
            SurfaceKey::Edge(b, a, n - k)
        }
    };
    for f in 0..NUM_FACES {
        for key in &chart.keys {
            if let NodeKey::Edge(c, k) = *key {
                let sk = edge_key(f, c, k);
                if let std::collections::hash_map::Entry::Vacant(e) = index.entry(sk) {
                    let SurfaceKey::Edge(lo, hi, t) = sk else { unreachable!() };
                    let p = geodesic_point(&domain.vertices[lo], &domain.vertices[hi], t as f64 / n as f64)
                        .map_err(MeshError::Domain)?;
                    e.insert(keys.len());
                    keys.push(sk);
                    pos.push(p);
                }
            }
        }
    }
    for f in 0..NUM_FACES {
        let mut local = 0;
        let a = domain.faces[f].normal;
        face_local[f] = chart
            .keys
            .iter()
            .enumerate()
            .map(|(i, key)| -> Result<usize, MeshError> {
                let sk = match *key {
                    NodeKey::Corner(c) => SurfaceKey::Vertex(face_vertex_of_corner[f][c]),
                    NodeKey::Edge(c, k) => edge_key(f, c, k),
                    _ => {
                        let sk = SurfaceKey::Face(f, local);
                        local += 1;
                        // project onto the face hyperplane, then back to 𝒮³
                        let p = face_pts[f][i];
                        let x = project(&p);
                        let mut q = Vector4::new(SIGMA * SIGMA * a.dot(&x), x[0], x[1], x[2]);
                        q /= q.norm();
                        let d = (q - p).amax();
                        if d > SNAP_LIMIT {
                            return Err(MeshError::SnapFailure { node: keys.len(), distance: d });
                        }
                        index.insert(sk, keys.len());
                        keys.push(sk);
                        pos.push(q);
                        return Ok(keys.len() - 1);
                    }
                };
                let g = index[&sk];
                let d = (pos[g] - face_pts[f][i]).amax();
                if d > SNAP_LIMIT {
                    return Err(MeshError::SnapFailure { node: g, distance: d });
                }
                Ok(g)
            })
            .collect::<Result<_, _>>()?;
    }

    let nodes: Vec<Vector3<f64>> = pos.iter().map(project).collect();

    // triangles, oriented outward
    let mut triangles = Vec::with_capacity(NUM_FACES * chart.triangles.len());
    let mut triangle_face = Vec::with_capacity(triangles.capacity());
    for f in 0..NUM_FACES {
        for t in &chart.triangles {
            let mut tri = t.map(|i| face_local[f][i]);
            let (a, b, c) = (nodes[tri[0]], nodes[tri[1]], nodes[tri[2]]);
            if (b - a).cross(&(c - a)).dot(&(a + b + c)) < 0.0 {
                tri.swap(1, 2);
            }
            triangles.push(tri);
            triangle_face.push(f);
        }
    }

    let mut node_faces: Vec<Vec<usize>> = vec![Vec::new(); nodes.len()];
    for f in 0..NUM_FACES {
        let mut seen: Vec<usize> = face_local[f].clone();
        seen.sort_unstable();
        seen.dedup();
        for g in seen {
            node_faces[g].push(f);
        }
    }

    // partners: node on face f ↦ node of the same structural position on the opposite face
    let mut partners: Vec<Vec<Partner>> = vec![Vec::new(); nodes.len()];
    for f in 0..NUM_FACES {
        let o = opposite(f);
        // face_local[o] is the image of face_local[f] under g_f for f < 6, and conversely
        for (i, &g) in face_local[f].iter().enumerate() {
            let h = face_local[o][i];
            if !partners[g].iter().any(|p| p.map == f) {
                partners[g].push(Partner { node: h, map: f });
            }
        }
    }
    let mesh = SurfaceMesh {
        n,
        nodes,
        keys,
        node_faces,
        triangles,
        triangle_face,
        partners,
    };
    let err = mesh.max_partner_error(domain)?;
    if err > PARTNER_TOL {
        return Err(MeshError::PeriodicityViolation { node: usize::MAX, distance: err });
    }
    Ok(mesh)
}

impl SurfaceMesh {
    /// max |Φ_f(v) − partner| over all recorded pairs.
    pub fn max_partner_error(&self, domain: &FundamentalDomain) -> Result<f64, MeshError> {
        let mut worst: f64 = 0.0;
        for (v, ps) in self.partners.iter().enumerate() {
            for p in ps {
                let y = domain.apply_face_map(p.map, &self.nodes[v]).map_err(MeshError::Domain)?;
                worst = worst.max((y - self.nodes[p.node]).amax());
            }
        }
        Ok(worst)
    }

    /// Largest ellipsoid residual of nodes on their faces.
    pub fn max_ellipsoid_residual(&self, domain: &FundamentalDomain) -> f64 {
        self.node_faces
            .iter()
            .enumerate()
            .flat_map(|(v, fs)| fs.iter().map(move |&f| (v, f)))
            .map(|(v, f)| domain.faces[f].ellipsoid_residual(&self.nodes[v]).abs())
            .fold(0.0, f64::max)
    }

    /// Nodes as points of 𝒮³.
    pub fn lifted(&self) -> Vec<Vector4<f64>> {
        self.nodes.iter().map(|x| lift(x).expect("boundary nodes lie in the ball")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::super::chart::triangulate_face_chart;
    use super::*;
    use crate::domain::build_domain;

    fn surface(n: usize) -> (FundamentalDomain, SurfaceMesh) {
        let d = build_domain();
        let c = triangulate_face_chart(&d, n).unwrap();
        let s = build_boundary_mesh(&d, &c).unwrap();
        (d, s)
    }

    #[test]
    fn rotations_map_face_one_to_adjacent_faces() {
        let d = build_domain();
        for (k, r) in replication_rotations().iter().enumerate() {
            assert!((r * r.transpose() - Matrix3::identity()).amax() < 1e-15);
            assert!((r.determinant() - 1.0).abs() < 1e-14);
            let target = &d.faces[k + 1];
            for &v in &d.faces[0].vertex_cycle {
                let y = r * d.vertex_v(v);
                assert!(target.vertex_cycle.iter().any(|&w| (d.vertex_v(w) - y).amax() < 1e-14));
            }
        }
    }

    #[test]
    fn counts() {
        for n in 1..=4 {
            let (_, s) = surface(n);
            assert_eq!(s.triangles.len(), 12 * 5 * n * n);
            assert_eq!(s.nodes.len(), 30 * n * n + 2);
            for f in 0..NUM_FACES {
                assert_eq!(s.triangle_face.iter().filter(|&&g| g == f).count(), 5 * n * n);
            }
        }
    }

    #[test]
    fn nodes_on_faces_and_partners() {
        let (d, s) = surface(4);
        assert!(s.max_ellipsoid_residual(&d) < 1e-12);
        assert!(s.max_partner_error(&d).unwrap() < 1e-12);
        for (v, fs) in s.node_faces.iter().enumerate() {
            assert!((1..=3).contains(&fs.len()));
            assert_eq!(s.partners[v].len(), fs.len());
            let p = lift(&s.nodes[v]).unwrap();
            for &f in fs {
                assert!(d.faces[f].hyperplane_residual(&p).abs() < 1e-14);
            }
            for pa in &s.partners[v] {
                // involution up to pairing
                let back = s.partners[pa.node].iter().find(|q| q.map == opposite(pa.map)).unwrap();
                assert_eq!(back.node, v);
            }
        }
        // F₁/F₇ ellipsoid at face-1 nodes
        for (v, fs) in s.node_faces.iter().enumerate() {
            if fs.contains(&0) {
                let x = s.nodes[v];
                let r = (SIGMA + 2.0) * x[0] * x[0] + 3.0 * SIGMA * SIGMA * x[1] * x[1] + x[2] * x[2]
                    + 2.0 * SIGMA.powi(3) * x[0] * x[1];
                assert!((r - 1.0).abs() < 1e-12);
                let y = d.apply_face_matrix(0, &x);
                assert!(s.nodes.iter().any(|z| (z - y).amax() < 1e-12));
            }
        }
    }

    #[test]
    fn closed_and_outward() {
        let (_, s) = surface(3);
        let mut edges: HashMap<(usize, usize), i32> = HashMap::new();
        for t in &s.triangles {
            for e in 0..3 {
                let (a, b) = (t[e], t[(e + 1) % 3]);
                *edges.entry((a, b)).or_default() += 1;
            }
        }
        // every directed edge appears once and its reverse once
        for (&(a, b), &c) in &edges {
            assert_eq!(c, 1);
            assert_eq!(edges.get(&(b, a)), Some(&1));
        }
        let vol: f64 = s
            .triangles
            .iter()
            .map(|t| s.nodes[t[0]].dot(&s.nodes[t[1]].cross(&s.nodes[t[2]])) / 6.0)
            .sum();
        assert!(vol > 0.15 && vol < 0.17, "{vol}");
    }
}
