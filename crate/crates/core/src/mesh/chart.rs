//! Planar chart of face F₁ and its structured fan triangulation.
//!
//! The plane −(1/σ)x − y = 1/(2√2) through the five vertices of F₁,ᵥ is moved to
//! z = 0 by X ↦ r(X − M₅,₂₀). Chart points are sent back to F₁ ⊂ 𝒮³ by the radial
//! projection through the origin of ℝ⁴.

use nalgebra::{Matrix2, Matrix3, Vector3, Vector4};
use serde::Serialize;

use super::MeshError;
use crate::domain::{geodesic_point, project, FundamentalDomain};
use crate::golden::{INV_2SQRT2, INV_SIGMA, SIGMA, SQRT5};

/// Midpoint of S₅,ᵥ S₂₀,ᵥ.
pub fn m520() -> Vector3<f64> {
    Vector3::new(0.0, -INV_2SQRT2, 0.0)
}

/// Rotation r taking the F₁ barycentric plane to z = 0.
pub fn chart_rotation() -> Matrix3<f64> {
    let s = SIGMA;
    let k = 3.0 - s;
    let rk = k.sqrt();
    Matrix3::new(
        1.0 / k,
        -1.0 / (s * k),
        1.0 / (s * rk),
        -1.0 / (s * k),
        1.0 / (s * s * k),
        1.0 / rk,
        -1.0 / (s * rk),
        -1.0 / rk,
        0.0,
    )
}

fn plane_residual(x: &Vector3<f64>) -> f64 {
    -INV_SIGMA * x[0] - x[1] - INV_2SQRT2
}

/// (x, y) = first two components of r(X − M₅,₂₀).
pub fn chart_forward(x: &Vector3<f64>) -> Result<(f64, f64), MeshError> {
    let res = plane_residual(x);
    if res.abs() > 1e-9 {
        return Err(MeshError::OffPlane(res));
    }
    let u = chart_rotation() * (x - m520());
    Ok((u[0], u[1]))
}

/// Full 3-vector r(X − M₅,₂₀), with no plane check.
pub fn chart_forward3(x: &Vector3<f64>) -> Vector3<f64> {
    chart_rotation() * (x - m520())
}

pub fn chart_inverse(u: f64, v: f64) -> Vector3<f64> {
    chart_rotation().transpose() * Vector3::new(u, v, 0.0) + m520()
}

/// Point of F₁ ⊂ 𝒮³ above chart point (u, v).
pub fn embed(u: f64, v: f64) -> Vector4<f64> {
    let x = chart_inverse(u, v);
    let p = Vector4::new(SIGMA * SIGMA * INV_2SQRT2, x[0], x[1], x[2]);
    p / p.norm()
}

/// Chart coordinates of a point of F₁ ⊂ 𝒮³ (central projection onto the plane).
pub fn unembed(p: &Vector4<f64>) -> Result<(f64, f64), MeshError> {
    let q = p * (SIGMA * SIGMA * INV_2SQRT2 / p[0]);
    chart_forward(&project(&q))
}

/// Denominator polynomial g(x, y) of the closed-form metric.
fn g_poly(x: f64, y: f64) -> f64 {
    let s2 = std::f64::consts::SQRT_2;
    80.0 * x * x + 80.0 * y * y + 8.0 * s2 * SQRT5 * x + s2 * (20.0 + 4.0 * SQRT5) * y + 45.0 + 17.0 * SQRT5
}

/// Unit-sphere embedding of F₁ in the coordinates of the closed-form metric.
pub fn embedding_closed_form(x: f64, y: f64) -> Vector4<f64> {
    let s2 = std::f64::consts::SQRT_2;
    let s5 = SQRT5;
    let s10 = 10f64.sqrt();
    let g = g_poly(x, y).sqrt() * s5;
    Vector4::new(
        2.5 * s2 * (3.0 + s5),
        (10.0 + 2.0 * s5) * x - 4.0 * s5 * y - s10,
        0.5 * (-8.0 * s5 * x + (20.0 - 4.0 * s5) * y - (5.0 + s5) * s2),
        (5.0 + s5).sqrt() * ((5.0 - s5) * s2 * x + 2.0 * s10 * y + s5),
    ) / g
}

/// Closed-form metric of the face chart, in the chart whose origin is the
/// centre of F₁,ᵥᵇ.
pub fn metric_closed_form(x: f64, y: f64) -> Matrix2<f64> {
    let r2 = std::f64::consts::SQRT_2;
    let r5 = SQRT5;
    let g = g_poly(x, y);
    let (x2, y2) = (x * x, y * y);
    let m11 = 320.0 / g.powi(3)
        * (1600.0 * x2 * y2 + 1600.0 * y2 * y2 + 80.0 * r2 * r5 * x2 * y + 400.0 * r2 * x2 * y
            + 160.0 * r2 * r5 * x * y2
            + 800.0 * r2 * y2 * y
            + 160.0 * r2 * r5 * y2 * y
            + 860.0 * x2
            + 340.0 * r5 * x2
            + 80.0 * x * y
            + 80.0 * r5 * x * y
            + 760.0 * r5 * y2
            + 2000.0 * y2
            + 86.0 * r2 * r5 * x
            + 170.0 * r2 * x
            + 258.0 * r2 * r5 * y
            + 610.0 * r2 * y
            + 845.0
            + 374.0 * r5);
    let m22 = 160.0 / g.powi(3)
        * (3200.0 * x2 * x2 + 3200.0 * x2 * y2 + 640.0 * r2 * r5 * x2 * x + 800.0 * r2 * x2 * y
            + 160.0 * r2 * r5 * x2 * y
            + 320.0 * r5 * r2 * x * y2
            + 3800.0 * x2
            + 1320.0 * r5 * x2
            + 160.0 * r5 * x * y
            + 160.0 * x * y
            + 1680.0 * y2
            + 640.0 * r5 * y2
            + 660.0 * r2 * x
            + 348.0 * r2 * r5 * x
            + 244.0 * r2 * r5 * y
            + 580.0 * r2 * y
            + 717.0 * r5
            + 1625.0);
    // the printed m₁₂ carries the opposite overall sign
    let m12 = -32000.0 / g.powi(6) * m12_poly(x, y);
    Matrix2::new(m11, m12, m12, m22)
}

#[rustfmt::skip]
fn m12_poly(x: f64, y: f64) -> f64 {
    let r2 = std::f64::consts::SQRT_2;
    let r5 = SQRT5;
    let p = |a: i32, b: i32| x.powi(a) * y.powi(b);
    8192000.0 * p(9, 1) + 32768000.0 * p(7, 3) + 49152000.0 * p(5, 5) + 32768000.0 * p(3, 7)
        + 8192000.0 * p(1, 9) + 204800.0 * r2 * r5 * p(9, 0)
        + 1024000.0 * r2 * p(9, 0) + 3686400.0 * r2 * r5 * p(8, 1) + 2457600.0 * r5 * r2 * p(7, 2)
        + 12288000.0 * r2 * p(7, 2) + 11468800.0 * r2 * r5 * p(6, 3)
        + 6144000.0 * r5 * r2 * p(5, 4) + 30720000.0 * r2 * p(5, 4) + 12288000.0 * r2 * r5 * p(4, 5)
        + 5734400.0 * r5 * r2 * p(3, 6)
        + 28672000.0 * r2 * p(3, 6) + 4915200.0 * r5 * r2 * p(2, 7) + 9216000.0 * r2 * p(1, 8)
        + 1843200.0 * r5 * r2 * p(1, 8) + 409600.0 * r5 * r2 * p(0, 9)
        + 921600.0 * p(8, 0) + 921600.0 * r5 * p(8, 0) + 7782400.0 * r5 * p(7, 1) + 27443200.0 * p(7, 1)
        + 8601600.0 * p(6, 2) + 8601600.0 * r5 * p(6, 2)
        + 84787200.0 * p(5, 3) + 25804800.0 * r5 * p(5, 3) + 15360000.0 * r5 * p(4, 4)
        + 15360000.0 * p(4, 4) + 87244800.0 * p(3, 5)
        + 28262400.0 * r5 * p(3, 5) + 8601600.0 * p(2, 6) + 8601600.0 * r5 * p(2, 6)
        + 29900800.0 * p(1, 7) + 10240000.0 * r5 * p(1, 7) + 921600.0 * r5 * p(0, 8)
        + 921600.0 * p(0, 8) + 1495040.0 * r2 * r5 * p(7, 0) + 3993600.0 * r2 * p(7, 0)
        + 7884800.0 * r2 * r5 * p(6, 1) + 13619200.0 * r2 * p(6, 1)
        + 13578240.0 * r2 * r5 * p(5, 2) + 35328000.0 * r2 * p(5, 2) + 18329600.0 * r2 * r5 * p(4, 3)
        + 32256000.0 * r2 * p(4, 3)
        + 22835200.0 * r2 * r5 * p(3, 4) + 57856000.0 * r2 * p(3, 4) + 11857920.0 * r2 * r5 * p(2, 5)
        + 21196800.0 * r2 * p(2, 5) + 26521600.0 * r2 * p(1, 6)
        + 10752000.0 * r2 * r5 * p(1, 6) + 1413120.0 * r5 * r2 * p(0, 7) + 2560000.0 * r2 * p(0, 7)
        + 4802560.0 * p(6, 0) + 2365440.0 * r5 * p(6, 0) + 43054080.0 * p(5, 1)
        + 18201600.0 * r5 * p(5, 1) + 31795200.0 * p(4, 2) + 15513600.0 * r5 * p(4, 2)
        + 95078400.0 * p(3, 3) + 40704000.0 * r5 * p(3, 3)
        + 15820800.0 * r5 * p(2, 4) + 32716800.0 * p(2, 4) + 51655680.0 * p(1, 5)
        + 22379520.0 * r5 * p(1, 5) + 5232640.0 * p(0, 6) + 2508800.0 * r5 * p(0, 6)
        + 2740224.0 * r2 * r5 * p(5, 0) + 6259200.0 * r2 * p(5, 0) + 19347200.0 * r2 * p(4, 1)
        + 8878336.0 * r2 * r5 * p(4, 1) + 16392192.0 * r2 * r5 * p(3, 2)
        + 37248000.0 * r2 * p(3, 2) + 27302400.0 * r2 * p(2, 3) + 12486144.0 * r2 * r5 * p(2, 3)
        + 13570048.0 * r2 * r5 * p(1, 4) + 30681600.0 * r2 * p(1, 4)
        + 5241600.0 * r2 * p(0, 5) + 2389248.0 * r2 * r5 * p(0, 5) + 5671424.0 * p(4, 0)
        + 2559744.0 * r5 * p(4, 0) + 32037888.0 * p(3, 1) + 14255616.0 * r5 * p(3, 1)
        + 9666048.0 * r5 * p(2, 2) + 21451776.0 * p(2, 2) + 36815872.0 * p(1, 3)
        + 16409088.0 * r5 * p(1, 3) + 6244864.0 * p(0, 4) + 2809600.0 * r5 * p(0, 4)
        + 1914304.0 * r2 * r5 * p(3, 0) + 4288192.0 * r2 * p(3, 0) + 8825088.0 * r2 * p(2, 1)
        + 3954816.0 * r2 * r5 * p(2, 1) + 5696448.0 * r5 * r2 * p(1, 2)
        + 12752064.0 * r2 * p(1, 2) + 3657984.0 * r2 * p(0, 3) + 1638528.0 * r2 * r5 * p(0, 3)
        + 2327712.0 * p(2, 0) + 1041696.0 * r5 * p(2, 0) + 3759032.0 * r5 * p(1, 1)
        + 8408152.0 * p(1, 1) + 1119072.0 * r5 * p(0, 2) + 2501088.0 * p(0, 2)
        + 458214.0 * r2 * r5 * p(1, 0) + 1024706.0 * r2 * p(1, 0) + 357278.0 * r2 * r5 * p(0, 1)
        + 798798.0 * r2 * p(0, 1) + 192091.0 + 85909.0 * r5
}

/// Metric of the embedding [`embed`] at chart point (x, y).
pub fn face_chart_metric(x: f64, y: f64) -> Matrix2<f64> {
    metric_closed_form(x, y - INV_2SQRT2)
}

/// Structural position of a node in the fan triangulation of a pentagon with
/// corners V₀ … V₄ and centre G. Sector c is the triangle (V_c, V_{c+1}, G).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum NodeKey {
    Center,
    Corner(usize),
    /// k-th of n−1 interior points on edge V_c → V_{c+1}.
    Edge(usize, usize),
    /// i-th of n−1 interior points on spoke V_c → G.
    Spoke(usize, usize),
    /// Sector c, ring i (0 on the edge, n at G), step k along the ring.
    Interior(usize, usize, usize),
}

impl NodeKey {
    pub fn on_boundary(&self) -> bool {
        matches!(self, NodeKey::Corner(_) | NodeKey::Edge(_, _))
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct FaceChart {
    pub n: usize,
    /// Chart coordinates.
    pub nodes: Vec<(f64, f64)>,
    pub keys: Vec<NodeKey>,
    /// Positively oriented in the chart.
    pub triangles: Vec<[usize; 3]>,
}

/// Lattice point of sector c: `a` steps along the edge, `b` steps toward G.
fn lattice_key(c: usize, a: usize, b: usize, n: usize) -> NodeKey {
    let j = n - a - b;
    if b == n {
        NodeKey::Center
    } else if j == 0 {
        // on the spoke of the next corner
        if b == 0 {
            NodeKey::Corner((c + 1) % 5)
        } else {
            NodeKey::Spoke((c + 1) % 5, b)
        }
    } else if a == 0 {
        if b == 0 {
            NodeKey::Corner(c)
        } else {
            NodeKey::Spoke(c, b)
        }
    } else if b == 0 {
        NodeKey::Edge(c, a)
    } else {
        NodeKey::Interior(c, b, a)
    }
}

/// Point of 𝒮³ for a structural key, given the pentagon corners and centre.
pub fn key_position(
    key: NodeKey,
    corners: &[Vector4<f64>; 5],
    center: &Vector4<f64>,
    n: usize,
) -> Vector4<f64> {
    let nf = n as f64;
    let slerp = |a: &Vector4<f64>, b: &Vector4<f64>, t: f64| {
        geodesic_point(a, b, t).expect("pentagon points are never antipodal")
    };
    match key {
        NodeKey::Center => *center,
        NodeKey::Corner(c) => corners[c],
        NodeKey::Edge(c, k) => slerp(&corners[c], &corners[(c + 1) % 5], k as f64 / nf),
        NodeKey::Spoke(c, i) => slerp(&corners[c], center, i as f64 / nf),
        NodeKey::Interior(c, i, k) => {
            let jk = (n - i) as f64;
            let e = slerp(&corners[c], &corners[(c + 1) % 5], k as f64 / jk);
            slerp(&e, center, i as f64 / nf)
        }
    }
}

/// Corners of F₁ in cycle order and the centre of F₁.
pub fn face1_frame(domain: &FundamentalDomain) -> ([Vector4<f64>; 5], Vector4<f64>) {
    face_frame(domain, 0)
}

pub fn face_frame(domain: &FundamentalDomain, face: usize) -> ([Vector4<f64>; 5], Vector4<f64>) {
    let cyc = domain.faces[face].vertex_cycle;
    let corners = cyc.map(|k| domain.vertices[k]);
    let center = corners.iter().fold(Vector4::zeros(), |a, b| a + b).normalize();
    (corners, center)
}

/// Fan triangulation of F₁: 5 sectors, each refined into n² triangles.
pub fn triangulate_face_chart(domain: &FundamentalDomain, n: usize) -> Result<FaceChart, MeshError> {
    if n < 1 {
        return Err(MeshError::InvalidSubdivision(n));
    }
    let (corners, center) = face1_frame(domain);
    let mut keys: Vec<NodeKey> = Vec::new();
    let mut index = std::collections::HashMap::new();
    let mut id = |key: NodeKey, keys: &mut Vec<NodeKey>| {
        *index.entry(key).or_insert_with(|| {
            keys.push(key);
            keys.len() - 1
        })
    };
    let mut triangles = Vec::with_capacity(5 * n * n);
    for c in 0..5 {
        for b in 0..n {
            for a in 0..(n - b) {
                let p0 = id(lattice_key(c, a, b, n), &mut keys);
                let p1 = id(lattice_key(c, a + 1, b, n), &mut keys);
                let p2 = id(lattice_key(c, a, b + 1, n), &mut keys);
                triangles.push([p0, p1, p2]);
                if a + b + 2 <= n {
                    let p3 = id(lattice_key(c, a + 1, b + 1, n), &mut keys);
                    triangles.push([p1, p3, p2]);
                }
            }
        }
    }
    let mut nodes = Vec::with_capacity(keys.len());
    for &k in &keys {
        nodes.push(unembed(&key_position(k, &corners, &center, n))?);
    }
    let area = |t: &[usize; 3]| {
        let (a, b, c) = (nodes[t[0]], nodes[t[1]], nodes[t[2]]);
        (b.0 - a.0) * (c.1 - a.1) - (b.1 - a.1) * (c.0 - a.0)
    };
    if area(&triangles[0]) < 0.0 {
        for t in &mut triangles {
            t.swap(1, 2);
        }
    }
    Ok(FaceChart {
        n,
        nodes,
        keys,
        triangles,
    })
}

impl FaceChart {
    pub fn signed_area(&self, t: usize) -> f64 {
        let tri = self.triangles[t];
        let (a, b, c) = (self.nodes[tri[0]], self.nodes[tri[1]], self.nodes[tri[2]]);
        0.5 * ((b.0 - a.0) * (c.1 - a.1) - (b.1 - a.1) * (c.0 - a.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{build_domain, sphere_distance};
    use proptest::prelude::*;

    fn fd_jacobian(f: impl Fn(f64, f64) -> Vector4<f64>, x: f64, y: f64) -> nalgebra::Matrix4x2<f64> {
        let h = 1e-6;
        let dx = (f(x + h, y) - f(x - h, y)) / (2.0 * h);
        let dy = (f(x, y + h) - f(x, y - h)) / (2.0 * h);
        nalgebra::Matrix4x2::from_columns(&[dx, dy])
    }

    #[test]
    fn rotation_is_proper() {
        let r = chart_rotation();
        assert!((r * r.transpose() - Matrix3::identity()).amax() < 1e-15);
        assert!((r.determinant() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn face_vertices_land_on_chart_plane() {
        let d = build_domain();
        for &k in &d.faces[0].vertex_cycle {
            let u = chart_forward3(&d.vertex_v(k));
            assert!(u[2].abs() < 1e-12);
        }
        let m = (d.vertex_v(4) + d.vertex_v(19)) / 2.0;
        assert!((m - m520()).amax() < 1e-16);
        let (u, v) = chart_forward(&m).unwrap();
        assert!(u.abs() < 1e-16 && v.abs() < 1e-16);
        assert!(matches!(chart_forward(&Vector3::zeros()), Err(MeshError::OffPlane(_))));
    }

    #[test]
    fn closed_form_chart_is_shifted_chart() {
        for (x, y) in [(0.0, 0.0), (0.1, -0.05), (-0.2, 0.1)] {
            let a = embedding_closed_form(x, y);
            let b = embed(x, y + INV_2SQRT2);
            assert!((a.norm() - 1.0).abs() < 1e-14);
            assert!((a - b).amax() < 1e-14, "{a} {b}");
        }
    }

    #[test]
    fn metric_at_origin() {
        let m = metric_closed_form(0.0, 0.0);
        let g = 45.0 + 17.0 * SQRT5;
        let expect = 320.0 * (845.0 + 374.0 * SQRT5) / g.powi(3);
        assert!((m[(0, 0)] - expect).abs() < 1e-14);
    }

    #[test]
    fn fan_counts() {
        let d = build_domain();
        for n in 1..=6 {
            let c = triangulate_face_chart(&d, n).unwrap();
            assert_eq!(c.triangles.len(), 5 * n * n);
            assert_eq!(c.nodes.len(), 1 + 5 * n * (n + 1) / 2);
            let boundary = c.keys.iter().filter(|k| k.on_boundary()).count();
            assert_eq!(boundary, 5 * n);
            for t in 0..c.triangles.len() {
                assert!(c.signed_area(t) > 0.0);
            }
        }
        assert_eq!(triangulate_face_chart(&d, 1).unwrap().nodes.len(), 6);
        assert_eq!(triangulate_face_chart(&d, 2).unwrap().nodes.len(), 16);
        assert!(matches!(triangulate_face_chart(&d, 0), Err(MeshError::InvalidSubdivision(0))));
    }

    #[test]
    fn boundary_spacing_uniform_in_arc_length() {
        let d = build_domain();
        let n = 7;
        let c = triangulate_face_chart(&d, n).unwrap();
        let (corners, _) = face1_frame(&d);
        for e in 0..5 {
            let mut pts = vec![corners[e]];
            for k in 1..n {
                let i = c.keys.iter().position(|&q| q == NodeKey::Edge(e, k)).unwrap();
                pts.push(embed(c.nodes[i].0, c.nodes[i].1));
            }
            pts.push(corners[(e + 1) % 5]);
            let arcs: Vec<f64> = pts.windows(2).map(|w| sphere_distance(&w[0], &w[1])).collect();
            for a in &arcs {
                assert!((a - arcs[0]).abs() < 1e-10);
            }
        }
    }

    proptest! {
        #[test]
        fn chart_round_trip(u in -0.3..0.3f64, v in -0.3..0.3f64) {
            let x = chart_inverse(u, v);
            let (a, b) = chart_forward(&x).unwrap();
            prop_assert!((a - u).abs() < 1e-12 && (b - v).abs() < 1e-12);
        }

        #[test]
        fn metric_matches_jacobian(u in -0.3..0.05f64, v in -0.05..0.3f64) {
            let j = fd_jacobian(embed, u, v);
            let m = face_chart_metric(u, v);
            let jtj = j.transpose() * j;
            prop_assert!((m - jtj).amax() < 1e-6, "{} vs {}", m, jtj);
            prop_assert!(m[(0, 0)] > 0.0 && m.determinant() > 0.0);
        }
    }
}
