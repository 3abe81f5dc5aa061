//! The fundamental domain 𝓕 ⊂ 𝒮³ (a spherical regular dodecahedron) and its
//! visualization 𝓕_v ⊂ ℝ³ obtained by dropping the first coordinate.
//!
//! Indexing is 0-based throughout: `vertices[k]` is S_{k+1} and `faces[k]` is
//! F_{k+1}. Face k and face k+6 are exchanged by the face map g_{k+1}.

use std::f64::consts::PI;

use nalgebra::{Matrix3, Matrix3x4, Matrix4x3, Vector3, Vector4};
use serde::Serialize;
use thiserror::Error;

use crate::golden::{INV_2SQRT2, INV_SIGMA, SIGMA};
use crate::icosian::Quaternion;

#[derive(Debug, Error, PartialEq)]
pub enum DomainError {
    #[error("point with |X| = {0} is outside the unit ball")]
    OutsideUnitBall(f64),
    #[error("geodesic endpoints are antipodal")]
    AntipodalEndpoints,
    #[error("point is not in the fundamental domain (violation {0:e})")]
    NotInDomain(f64),
}

pub const NUM_VERTICES: usize = 20;
pub const NUM_FACES: usize = 12;

/// Vertex coordinates of 𝓕 scaled by 2√2, in the order S₁ … S₂₀.
fn vertex_table() -> [[f64; 4]; NUM_VERTICES] {
    let s2 = SIGMA * SIGMA;
    let i1 = INV_SIGMA;
    let i2 = INV_SIGMA * INV_SIGMA;
    [
        [s2, -i1, i1, -i1],
        [s2, 1.0, i2, 0.0],
        [s2, -i1, -i1, i1],
        [s2, i1, -i1, -i1],
        [s2, 0.0, -1.0, -i2],
        [s2, i1, i1, i1],
        [s2, -i2, 0.0, 1.0],
        [s2, 0.0, 1.0, i2],
        [s2, -i1, i1, i1],
        [s2, i2, 0.0, 1.0],
        [s2, 0.0, 1.0, -i2],
        [s2, -1.0, i2, 0.0],
        [s2, -i2, 0.0, -1.0],
        [s2, i1, -i1, i1],
        [s2, i2, 0.0, -1.0],
        [s2, -i1, -i1, -i1],
        [s2, i1, i1, -i1],
        [s2, -1.0, -i2, 0.0],
        [s2, 1.0, -i2, 0.0],
        [s2, 0.0, -1.0, i2],
    ]
}

/// Outward coefficients (a, b, c) of faces F₁ … F₆; F_{k+6} has the negated triple.
fn face_normal_table() -> [[f64; 3]; 6] {
    let i1 = INV_SIGMA;
    [
        [-i1, -1.0, 0.0],
        [-1.0, 0.0, i1],
        [0.0, -i1, 1.0],
        [i1, -1.0, 0.0],
        [0.0, -i1, -1.0],
        [-1.0, 0.0, -i1],
    ]
}

/// Vertex cycles (0-based) of F₁ … F₆.
const FACE_CYCLES: [[usize; 5]; 6] = [
    [2, 17, 15, 4, 19],
    [17, 11, 8, 6, 2],
    [2, 6, 9, 13, 19],
    [19, 13, 18, 3, 4],
    [4, 3, 14, 12, 15],
    [15, 12, 0, 11, 17],
];

/// Face-map quaternions g₁ … g₆ (translation distance π/5); g_{k+6} = ḡ_k.
pub fn face_map_quaternions() -> [Quaternion; 6] {
    let a = SIGMA / 2.0;
    let b = INV_SIGMA / 2.0;
    [
        Quaternion::new(a, b, 0.5, 0.0),
        Quaternion::new(a, 0.5, 0.0, -b),
        Quaternion::new(a, 0.0, b, -0.5),
        Quaternion::new(a, -b, 0.5, 0.0),
        Quaternion::new(a, 0.0, b, 0.5),
        Quaternion::new(a, 0.5, 0.0, b),
    ]
}

#[derive(Clone, Debug, Serialize)]
pub struct FaceGeometry {
    /// 0-based face index.
    pub index: usize,
    /// (a, b, c) of the hyperplane a·X = x₀/σ².
    pub normal: Vector3<f64>,
    /// Right-hand side of the ℝ³ plane a·X = 1/(2√2) through the five vertices.
    pub bary_rhs: f64,
    /// Q with XᵀQX = 1 on the face.
    pub ellipsoid: Matrix3<f64>,
    /// 0-based vertex indices, cyclically ordered.
    pub vertex_cycle: [usize; 5],
}

impl FaceGeometry {
    /// Signed hyperplane residual a·X − x₀/σ² of a point of 𝒮³ (≤ 0 inside).
    pub fn hyperplane_residual(&self, p: &Vector4<f64>) -> f64 {
        self.normal.dot(&p.fixed_rows::<3>(1)) - p[0] * INV_SIGMA * INV_SIGMA
    }

    /// XᵀQX − 1 for a point of ℝ³.
    pub fn ellipsoid_residual(&self, x: &Vector3<f64>) -> f64 {
        x.dot(&(self.ellipsoid * x)) - 1.0
    }

    pub fn bary_residual(&self, x: &Vector3<f64>) -> f64 {
        self.normal.dot(x) - self.bary_rhs
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct FaceMap {
    /// 0-based index k: g_{k+1} maps face k onto face `target`.
    pub index: usize,
    pub quat: Quaternion,
    /// g_{k+1,v}: the restriction to face k in ℝ³ coordinates (linear there).
    pub matrix3: Matrix3<f64>,
    /// Index of the inverse map, (k + 6) mod 12.
    pub inverse_index: usize,
    pub target: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct FundamentalDomain {
    pub vertices: Vec<Vector4<f64>>,
    pub faces: Vec<FaceGeometry>,
    pub face_maps: Vec<FaceMap>,
}

/// Opposite face index.
pub fn opposite(face: usize) -> usize {
    (face + 6) % NUM_FACES
}

/// (√(1−|X|²), X).
pub fn lift(x: &Vector3<f64>) -> Result<Vector4<f64>, DomainError> {
    let r2 = x.norm_squared();
    if r2 >= 1.0 {
        return Err(DomainError::OutsideUnitBall(r2.sqrt()));
    }
    Ok(Vector4::new((1.0 - r2).sqrt(), x[0], x[1], x[2]))
}

/// Projection p of 𝒮³ onto ℝ³ dropping x₀.
pub fn project(p: &Vector4<f64>) -> Vector3<f64> {
    Vector3::new(p[1], p[2], p[3])
}

/// Spherical distance arccos⟨p, q⟩.
pub fn sphere_distance(p: &Vector4<f64>, q: &Vector4<f64>) -> f64 {
    // atan2 form stays accurate for nearby points
    let c = p.dot(q);
    let s = (p - q * c).norm();
    s.atan2(c)
}

/// Minor-arc geodesic from `a` to `b`, parametrized proportionally to arc length.
pub fn geodesic_point(
    a: &Vector4<f64>,
    b: &Vector4<f64>,
    t: f64,
) -> Result<Vector4<f64>, DomainError> {
    let theta = sphere_distance(a, b);
    if PI - theta < 1e-12 {
        return Err(DomainError::AntipodalEndpoints);
    }
    if theta < 1e-15 {
        return Ok(*a);
    }
    let alpha = ((1.0 - t) * theta).sin();
    let beta = (t * theta).sin();
    let p = a * alpha + b * beta;
    Ok(p / p.norm())
}

/// Matrix P·L(g)·E with E = [σ²aᵀ; I]: on face `face` (where x₀ = σ² a·X) this is
/// the exact action of g in ℝ³ coordinates.
fn face_matrix(q: &Quaternion, a: &Vector3<f64>) -> Matrix3<f64> {
    let l = q.left_matrix();
    let s2 = SIGMA * SIGMA;
    let mut e = Matrix4x3::zeros();
    for c in 0..3 {
        e[(0, c)] = s2 * a[c];
        e[(c + 1, c)] = 1.0;
    }
    let proj = Matrix3x4::new(
        0.0, 1.0, 0.0, 0.0, //
        0.0, 0.0, 1.0, 0.0, //
        0.0, 0.0, 0.0, 1.0,
    );
    proj * l * e
}

/// Builds 𝓕 from the closed-form constants.
pub fn build_domain() -> FundamentalDomain {
    let vertices: Vec<Vector4<f64>> = vertex_table()
        .iter()
        .map(|v| Vector4::from_row_slice(v) * INV_2SQRT2)
        .collect();
    let gq = face_map_quaternions();
    let normals = face_normal_table();

    let find_vertex = |p: &Vector4<f64>| {
        vertices
            .iter()
            .position(|v| (v - p).amax() < 1e-9)
            .expect("face map image is not a domain vertex")
    };

    let mut faces = Vec::with_capacity(NUM_FACES);
    for k in 0..NUM_FACES {
        let base = k % 6;
        let sign = if k < 6 { 1.0 } else { -1.0 };
        let a = Vector3::from_row_slice(&normals[base]) * sign;
        let cycle = if k < 6 {
            FACE_CYCLES[k]
        } else {
            let l = gq[base].left_matrix();
            FACE_CYCLES[base].map(|v| find_vertex(&(l * vertices[v])))
        };
        let s4 = SIGMA.powi(4);
        faces.push(FaceGeometry {
            index: k,
            normal: a,
            bary_rhs: INV_2SQRT2,
            ellipsoid: a * a.transpose() * s4 + Matrix3::identity(),
            vertex_cycle: cycle,
        });
    }

    let face_maps = (0..NUM_FACES)
        .map(|k| {
            let q = if k < 6 { gq[k] } else { gq[k - 6].conj() };
            FaceMap {
                index: k,
                quat: q,
                matrix3: face_matrix(&q, &faces[k].normal),
                inverse_index: opposite(k),
                target: opposite(k),
            }
        })
        .collect();

    FundamentalDomain {
        vertices,
        faces,
        face_maps,
    }
}

/// λ with d(C₁, C₈) = π/5 for the parametrized face-vertex family; the vertex
/// scale is λσ/6.
pub fn vertex_scale_lambda() -> f64 {
    // cos d(C₁, C₈) = 1 − λ²σ²/9
    (9.0 * (1.0 - (PI / 5.0).cos())).sqrt() / SIGMA
}

/// Equivalence class of a point of 𝓕_v under the face identifications.
#[derive(Clone, Debug, Serialize)]
pub struct EquivalenceClass {
    pub representative: Vector3<f64>,
    pub members: Vec<Vector3<f64>>,
    /// Faces (0-based) on which each member lies.
    pub member_faces: Vec<Vec<usize>>,
    /// Face maps used to reach the members.
    pub generators: Vec<usize>,
}

impl EquivalenceClass {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct DomainMetrics {
    /// 2·d(0, S₁) = d(S₁, S₁₄).
    pub diameter: f64,
    /// d(0, Sᵢ), common to all vertices.
    pub center_to_vertex: f64,
    pub vertex_distances: Vec<Vec<f64>>,
}

impl FundamentalDomain {
    pub fn vertex_v(&self, k: usize) -> Vector3<f64> {
        project(&self.vertices[k])
    }

    /// Largest hyperplane violation of lift(X) (≤ 0 inside).
    pub fn max_violation(&self, x: &Vector3<f64>) -> Result<f64, DomainError> {
        let p = lift(x)?;
        Ok(self
            .faces
            .iter()
            .map(|f| f.hyperplane_residual(&p))
            .fold(f64::NEG_INFINITY, f64::max))
    }

    /// True iff lift(X) satisfies all 12 half-space constraints up to `eps`.
    pub fn contains(&self, x: &Vector3<f64>, eps: f64) -> Result<bool, DomainError> {
        Ok(self.max_violation(x)? <= eps)
    }

    /// Faces whose hyperplane passes within `tol` of X.
    pub fn faces_of(&self, x: &Vector3<f64>, tol: f64) -> Result<Vec<usize>, DomainError> {
        let p = lift(x)?;
        Ok(self
            .faces
            .iter()
            .filter(|f| f.hyperplane_residual(&p).abs() <= tol)
            .map(|f| f.index)
            .collect())
    }

    /// Exact face identification Φ_k = p ∘ L(g_k) ∘ lift (defined on the whole ball).
    pub fn apply_face_map(&self, k: usize, x: &Vector3<f64>) -> Result<Vector3<f64>, DomainError> {
        let p = lift(x)?;
        Ok(project(&(self.face_maps[k].quat.left_matrix() * p)))
    }

    /// Linear g_{k,v}, valid for X on face k.
    pub fn apply_face_matrix(&self, k: usize, x: &Vector3<f64>) -> Vector3<f64> {
        self.face_maps[k].matrix3 * x
    }

    /// Differential of Φ_k at X.
    pub fn face_map_differential(&self, k: usize, x: &Vector3<f64>) -> Result<Matrix3<f64>, DomainError> {
        let p = lift(x)?;
        let mut df = Matrix4x3::zeros();
        for c in 0..3 {
            df[(0, c)] = -x[c] / p[0];
            df[(c + 1, c)] = 1.0;
        }
        let l = self.face_maps[k].quat.left_matrix() * df;
        Ok(l.fixed_rows::<3>(1).into_owned())
    }

    /// Euclidean unit normal QX/|QX| of the face ellipsoid.
    pub fn euclidean_normal(&self, face: usize, x: &Vector3<f64>) -> Vector3<f64> {
        (self.faces[face].ellipsoid * x).normalize()
    }

    /// Outgoing unit normal of face `face` at X for the sphere metric
    /// g = I + XXᵀ/(1−|X|²) pulled back to 𝓕_v.
    pub fn riemannian_normal(&self, face: usize, x: &Vector3<f64>) -> Vector3<f64> {
        let grad = self.faces[face].ellipsoid * x;
        let ginv = Matrix3::identity() - x * x.transpose();
        let v = ginv * grad;
        // |v|_g² = vᵀ g v = gradᵀ g⁻¹ grad
        v / grad.dot(&v).sqrt()
    }

    /// Class of X under the identifications: closure of {X} under the maps of the
    /// faces each member lies on.
    pub fn classify(&self, x: &Vector3<f64>, tol: f64) -> Result<EquivalenceClass, DomainError> {
        let viol = self.max_violation(x)?;
        if viol > tol {
            return Err(DomainError::NotInDomain(viol));
        }
        let mut members = vec![*x];
        let mut member_faces = vec![self.faces_of(x, tol)?];
        let mut generators = Vec::new();
        let mut i = 0;
        while i < members.len() {
            let faces = member_faces[i].clone();
            for f in faces {
                let y = self.apply_face_map(f, &members[i])?;
                if !members.iter().any(|m| (m - y).norm() <= tol.max(1e-12) * 10.0) {
                    members.push(y);
                    member_faces.push(self.faces_of(&y, tol)?);
                    generators.push(f);
                }
            }
            i += 1;
            if members.len() > 4 {
                break;
            }
        }
        let rep = *members
            .iter()
            .min_by(|a, b| {
                a.iter()
                    .zip(b.iter())
                    .map(|(p, q)| p.total_cmp(q))
                    .find(|o| o.is_ne())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .unwrap();
        Ok(EquivalenceClass {
            representative: rep,
            members,
            member_faces,
            generators,
        })
    }

    pub fn domain_metrics(&self) -> DomainMetrics {
        let origin = Vector4::new(1.0, 0.0, 0.0, 0.0);
        let center_to_vertex = sphere_distance(&origin, &self.vertices[0]);
        let vertex_distances = self
            .vertices
            .iter()
            .map(|a| self.vertices.iter().map(|b| sphere_distance(a, b)).collect())
            .collect();
        DomainMetrics {
            diameter: 2.0 * center_to_vertex,
            center_to_vertex,
            vertex_distances,
        }
    }
}
