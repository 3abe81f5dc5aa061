//! Quaternions, the binary icosahedral group 𝓘* and the 120-cell vertex orbit.
//!
//! Group elements are generated exactly in ℚ(√5) and carried in floating point
//! for everything downstream.

use std::collections::{HashMap, VecDeque};
use std::f64::consts::PI;
use std::ops::{Mul, Neg};

use nalgebra::{Matrix3, Matrix4, Vector3, Vector4};
use serde::Serialize;
use thiserror::Error;

use crate::golden::{Qr5, INV_2SQRT2, INV_SIGMA, SIGMA, SQRT5};

#[derive(Debug, Error, PartialEq)]
pub enum IcosianError {
    #[error("quaternion norm {0} is not 1")]
    NonUnitQuaternion(f64),
    #[error("group closure exceeded {0} elements")]
    GenerationDiverged(usize),
    #[error("orbit has {0} distinct points, expected 600")]
    OrbitCountMismatch(usize),
}

/// w·𝟏 + x·𝐢 + y·𝐣 + z·𝐤.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Quaternion {
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Quaternion {
    pub const ONE: Quaternion = Quaternion::new(1.0, 0.0, 0.0, 0.0);
    pub const I: Quaternion = Quaternion::new(0.0, 1.0, 0.0, 0.0);
    pub const J: Quaternion = Quaternion::new(0.0, 0.0, 1.0, 0.0);
    pub const K: Quaternion = Quaternion::new(0.0, 0.0, 0.0, 1.0);

    pub const fn new(w: f64, x: f64, y: f64, z: f64) -> Self {
        Quaternion { w, x, y, z }
    }

    pub fn from_vector(v: &Vector4<f64>) -> Self {
        Quaternion::new(v[0], v[1], v[2], v[3])
    }

    pub fn to_vector(&self) -> Vector4<f64> {
        Vector4::new(self.w, self.x, self.y, self.z)
    }

    pub fn to_array(&self) -> [f64; 4] {
        [self.w, self.x, self.y, self.z]
    }

    pub fn conj(&self) -> Self {
        Quaternion::new(self.w, -self.x, -self.y, -self.z)
    }

    /// ‖q‖ = w² + x² + y² + z².
    pub fn norm(&self) -> f64 {
        self.dot(self)
    }

    pub fn dot(&self, o: &Quaternion) -> f64 {
        self.w * o.w + self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn inverse(&self) -> Self {
        let n = self.norm();
        let c = self.conj();
        Quaternion::new(c.w / n, c.x / n, c.y / n, c.z / n)
    }

    pub fn scale(&self, s: f64) -> Self {
        Quaternion::new(self.w * s, self.x * s, self.y * s, self.z * s)
    }

    /// Matrix of p ↦ q·p in the basis (𝟏, 𝐢, 𝐣, 𝐤).
    pub fn left_matrix(&self) -> Matrix4<f64> {
        let (a, b, c, d) = (self.w, self.x, self.y, self.z);
        Matrix4::new(
            a, -b, -c, -d, //
            b, a, -d, c, //
            c, d, a, -b, //
            d, -c, b, a,
        )
    }

    pub fn max_abs_diff(&self, o: &Quaternion) -> f64 {
        (self.w - o.w)
            .abs()
            .max((self.x - o.x).abs())
            .max((self.y - o.y).abs())
            .max((self.z - o.z).abs())
    }
}

/// Hamilton product.
pub fn quat_mul(a: &Quaternion, b: &Quaternion) -> Quaternion {
    Quaternion::new(
        a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
        a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
        a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
        a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w,
    )
}

impl Mul for Quaternion {
    type Output = Quaternion;
    fn mul(self, o: Quaternion) -> Quaternion {
        quat_mul(&self, &o)
    }
}

impl Neg for Quaternion {
    type Output = Quaternion;
    fn neg(self) -> Quaternion {
        self.scale(-1.0)
    }
}

/// Quaternion with coefficients in ℚ(√5).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ExactQuaternion(pub [Qr5; 4]);

impl ExactQuaternion {
    pub fn one() -> Self {
        ExactQuaternion([Qr5::ONE, Qr5::ZERO, Qr5::ZERO, Qr5::ZERO])
    }

    pub fn mul(&self, o: &ExactQuaternion) -> ExactQuaternion {
        let [a0, a1, a2, a3] = self.0;
        let [b0, b1, b2, b3] = o.0;
        ExactQuaternion([
            a0 * b0 - a1 * b1 - a2 * b2 - a3 * b3,
            a0 * b1 + a1 * b0 + a2 * b3 - a3 * b2,
            a0 * b2 - a1 * b3 + a2 * b0 + a3 * b1,
            a0 * b3 + a1 * b2 - a2 * b1 + a3 * b0,
        ])
    }

    pub fn conj(&self) -> ExactQuaternion {
        let [a, b, c, d] = self.0;
        ExactQuaternion([a, -b, -c, -d])
    }

    pub fn norm(&self) -> Qr5 {
        self.0.iter().fold(Qr5::ZERO, |acc, &v| acc + v * v)
    }

    pub fn to_f64(&self) -> Quaternion {
        Quaternion::new(
            self.0[0].to_f64(),
            self.0[1].to_f64(),
            self.0[2].to_f64(),
            self.0[3].to_f64(),
        )
    }
}

/// s = ½(𝟏+𝐢+𝐣+𝐤).
pub fn generator_s() -> ExactQuaternion {
    ExactQuaternion([Qr5::HALF; 4])
}

/// γ = (σ/2)𝟏 + (1/2σ)𝐣 − ½𝐤.
pub fn generator_gamma() -> ExactQuaternion {
    let half = Qr5::HALF;
    ExactQuaternion([
        Qr5::sigma() * half,
        Qr5::ZERO,
        Qr5::inv_sigma() * half,
        -half,
    ])
}

/// The admissible translation distances of elements of 𝓘*.
pub const TRANSLATION_DISTANCES: [f64; 9] = [
    0.0,
    PI / 5.0,
    PI / 3.0,
    2.0 * PI / 5.0,
    PI / 2.0,
    3.0 * PI / 5.0,
    2.0 * PI / 3.0,
    4.0 * PI / 5.0,
    PI,
];

/// χ = arccos(w), clamped against round-off.
pub fn translation_distance(q: &Quaternion) -> f64 {
    q.w.clamp(-1.0, 1.0).acos()
}

/// Rotation q′ ↦ q q′ q⁻¹ of span{𝐢,𝐣,𝐤}.
pub fn rotation_of(q: &Quaternion) -> Result<Matrix3<f64>, IcosianError> {
    let n = q.norm();
    if (n - 1.0).abs() > 1e-9 {
        return Err(IcosianError::NonUnitQuaternion(n));
    }
    let (w, x, y, z) = (q.w, q.x, q.y, q.z);
    Ok(Matrix3::new(
        w * w + x * x - y * y - z * z,
        2.0 * (x * y - w * z),
        2.0 * (x * z + w * y),
        2.0 * (x * y + w * z),
        w * w - x * x + y * y - z * z,
        2.0 * (y * z - w * x),
        2.0 * (x * z - w * y),
        2.0 * (y * z + w * x),
        w * w - x * x - y * y + z * z,
    ))
}

/// Rotation angle in [0, π] and unit axis of a rotation matrix (axis is arbitrary
/// for the identity).
pub fn axis_angle(r: &Matrix3<f64>) -> (f64, Vector3<f64>) {
    let c = ((r.trace() - 1.0) / 2.0).clamp(-1.0, 1.0);
    let angle = c.acos();
    let v = Vector3::new(r[(2, 1)] - r[(1, 2)], r[(0, 2)] - r[(2, 0)], r[(1, 0)] - r[(0, 1)]);
    let n = v.norm();
    if n > 1e-12 {
        return (angle, v / n);
    }
    if angle < 1e-6 {
        return (angle, Vector3::z());
    }
    // half-turn: axis from the largest column of R + I
    let m = r + Matrix3::identity();
    let col = (0..3)
        .max_by(|&a, &b| m.column(a).norm().total_cmp(&m.column(b).norm()))
        .unwrap();
    (angle, m.column(col).normalize())
}

#[derive(Clone, Debug)]
pub struct GroupElement {
    pub quat: Quaternion,
    pub exact: ExactQuaternion,
    pub matrix4: Matrix4<f64>,
    pub chi: f64,
}

impl GroupElement {
    fn from_exact(exact: ExactQuaternion) -> Self {
        let quat = exact.to_f64();
        GroupElement {
            quat,
            exact,
            matrix4: quat.left_matrix(),
            chi: translation_distance(&quat),
        }
    }

    /// Index into [`TRANSLATION_DISTANCES`].
    pub fn distance_class(&self) -> usize {
        TRANSLATION_DISTANCES
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - self.chi).abs().total_cmp(&(b.1 - self.chi).abs()))
            .map(|(i, _)| i)
            .unwrap()
    }
}

/// The 120 elements of 𝓘* with product and inverse tables.
#[derive(Clone, Debug)]
pub struct GroupTable {
    pub elements: Vec<GroupElement>,
    product: Vec<usize>,
    inverse: Vec<usize>,
    identity: usize,
}

pub const GROUP_ORDER: usize = 120;
const GENERATION_CAP: usize = 200;

impl GroupTable {
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn identity(&self) -> usize {
        self.identity
    }

    /// Index of elements[a]·elements[b].
    pub fn product(&self, a: usize, b: usize) -> usize {
        self.product[a * self.len() + b]
    }

    pub fn inverse(&self, a: usize) -> usize {
        self.inverse[a]
    }

    /// Index of the element within `tol` (max-coefficient) of `q`.
    pub fn index_of(&self, q: &Quaternion, tol: f64) -> Option<usize> {
        self.elements
            .iter()
            .position(|e| e.quat.max_abs_diff(q) <= tol)
    }

    pub fn quats(&self) -> impl Iterator<Item = &Quaternion> {
        self.elements.iter().map(|e| &e.quat)
    }
}

/// Breadth-first closure of {s, γ} under the Hamilton product.
pub fn generate_group() -> Result<GroupTable, IcosianError> {
    let gens = [generator_s(), generator_gamma()];
    let mut index: HashMap<ExactQuaternion, usize> = HashMap::new();
    let mut elems: Vec<ExactQuaternion> = Vec::new();
    let mut queue = VecDeque::new();
    let one = ExactQuaternion::one();
    index.insert(one, 0);
    elems.push(one);
    queue.push_back(one);
    while let Some(q) = queue.pop_front() {
        for g in &gens {
            let p = q.mul(g);
            if !index.contains_key(&p) {
                if elems.len() >= GENERATION_CAP {
                    return Err(IcosianError::GenerationDiverged(GENERATION_CAP));
                }
                index.insert(p, elems.len());
                elems.push(p);
                queue.push_back(p);
            }
        }
    }
    let n = elems.len();
    let mut product = vec![0usize; n * n];
    for (i, a) in elems.iter().enumerate() {
        for (j, b) in elems.iter().enumerate() {
            product[i * n + j] = *index
                .get(&a.mul(b))
                .ok_or(IcosianError::GenerationDiverged(n))?;
        }
    }
    let inverse = elems
        .iter()
        .map(|e| index[&e.conj()])
        .collect::<Vec<_>>();
    Ok(GroupTable {
        elements: elems.into_iter().map(GroupElement::from_exact).collect(),
        product,
        inverse,
        identity: 0,
    })
}

/// The seven coordinate families of the 600 vertices, each stored as the
/// sorted absolute coordinates scaled by 2√2, with the expected count.
pub fn vertex_families() -> [([f64; 4], usize); 7] {
    let s = SIGMA;
    let is = INV_SIGMA;
    let sort = |mut v: [f64; 4]| {
        v.sort_by(|a, b| a.total_cmp(b));
        v
    };
    [
        (sort([2.0, 2.0, 0.0, 0.0]), 24),
        (sort([SQRT5, 1.0, 1.0, 1.0]), 64),
        (sort([s, s, s, is * is]), 64),
        (sort([s * s, is, is, is]), 64),
        (sort([s * s, is * is, 0.0, 1.0]), 96),
        (sort([SQRT5, is, 0.0, s]), 96),
        (sort([2.0, 1.0, is, s]), 192),
    ]
}

/// Family index (0-based) of a point of the 120-cell, if any.
pub fn classify_family(p: &Vector4<f64>, tol: f64) -> Option<usize> {
    let mut key = [0.0; 4];
    for (k, v) in key.iter_mut().zip(p.iter()) {
        *k = v.abs() / INV_2SQRT2;
    }
    key.sort_by(|a, b| a.total_cmp(b));
    vertex_families()
        .iter()
        .position(|(f, _)| f.iter().zip(&key).all(|(a, b)| (a - b).abs() <= tol))
}

#[derive(Clone, Debug, Serialize)]
pub struct Orbit {
    pub points: Vec<[f64; 4]>,
    /// 0-based family index of each point.
    pub family: Vec<usize>,
    pub family_counts: [usize; 7],
}

/// All images t(Sᵢ), t ∈ 𝓘*, deduplicated to tolerance 1e−9.
pub fn orbit_vertices(
    table: &GroupTable,
    seeds: &[Vector4<f64>],
) -> Result<Orbit, IcosianError> {
    const TOL: f64 = 1e-9;
    let mut points: Vec<Vector4<f64>> = Vec::new();
    for e in &table.elements {
        for s in seeds {
            let p = e.matrix4 * s;
            if !points.iter().any(|q| (q - p).amax() <= TOL) {
                points.push(p);
            }
        }
    }
    if points.len() != 600 {
        return Err(IcosianError::OrbitCountMismatch(points.len()));
    }
    let mut family = Vec::with_capacity(points.len());
    let mut family_counts = [0usize; 7];
    for p in &points {
        let f = classify_family(p, 1e-9).ok_or(IcosianError::OrbitCountMismatch(points.len()))?;
        family_counts[f] += 1;
        family.push(f);
    }
    Ok(Orbit {
        points: points.iter().map(|p| [p[0], p[1], p[2], p[3]]).collect(),
        family,
        family_counts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn unit(a: f64, b: f64, c: f64, d: f64) -> Quaternion {
        let q = Quaternion::new(a, b, c, d);
        q.scale(1.0 / q.norm().sqrt())
    }

    fn arb_unit() -> impl Strategy<Value = Quaternion> {
        (-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64)
            .prop_filter("nonzero", |(a, b, c, d)| a * a + b * b + c * c + d * d > 1e-3)
            .prop_map(|(a, b, c, d)| unit(a, b, c, d))
    }

    #[test]
    fn unit_products() {
        assert_eq!(Quaternion::I * Quaternion::J, Quaternion::K);
        assert_eq!(Quaternion::J * Quaternion::I, -Quaternion::K);
        let q = Quaternion::new(0.3, -1.2, 4.0, 0.5);
        assert_eq!(Quaternion::ONE * q, q);
        let s = generator_s().to_f64();
        assert!((s * s * s).max_abs_diff(&-Quaternion::ONE) < 1e-15);
    }

    #[test]
    fn exact_relations() {
        let s = generator_s();
        let g = generator_gamma();
        let minus_one = ExactQuaternion([-Qr5::ONE, Qr5::ZERO, Qr5::ZERO, Qr5::ZERO]);
        assert_eq!(s.mul(&s).mul(&s), minus_one);
        let g5 = (0..4).fold(g, |acc, _| acc.mul(&g));
        assert_eq!(g5, minus_one);
        assert_eq!(g.norm(), Qr5::ONE);
    }

    #[test]
    fn rotation_examples() {
        let id = rotation_of(&Quaternion::ONE).unwrap();
        assert!((id - Matrix3::identity()).amax() < 1e-15);

        let (ang, axis) = axis_angle(&rotation_of(&generator_s().to_f64()).unwrap());
        assert!((ang - 2.0 * PI / 3.0).abs() < 1e-12);
        let expect = Vector3::new(1.0, 1.0, 1.0) / 3f64.sqrt();
        assert!((axis - expect).amax() < 1e-12);

        let (ang, axis) = axis_angle(&rotation_of(&generator_gamma().to_f64()).unwrap());
        assert!((ang - 2.0 * PI / 5.0).abs() < 1e-12);
        let expect = Vector3::new(0.0, INV_SIGMA, -1.0) / (3.0 - SIGMA).sqrt();
        assert!((axis - expect).amax() < 1e-12);

        assert_eq!(
            rotation_of(&Quaternion::new(1.0, 1.0, 0.0, 0.0)),
            Err(IcosianError::NonUnitQuaternion(2.0))
        );
    }

    #[test]
    fn group_basics() {
        let t = generate_group().unwrap();
        assert_eq!(t.len(), GROUP_ORDER);
        assert!(t.index_of(&-Quaternion::ONE, 1e-12).is_some());
        for e in &t.elements {
            assert_eq!(e.exact.norm(), Qr5::ONE);
            let k = e.distance_class();
            assert!((e.chi - TRANSLATION_DISTANCES[k]).abs() < 1e-12);
            let d = e.matrix4.determinant();
            assert!((d - 1.0).abs() < 1e-12);
            assert!((e.matrix4 * e.matrix4.transpose() - Matrix4::identity()).amax() < 1e-14);
        }
        for a in 0..t.len() {
            assert_eq!(t.product(a, t.inverse(a)), t.identity());
            let qi = t.elements[t.inverse(a)].quat;
            assert!(qi.max_abs_diff(&t.elements[a].quat.conj()) < 1e-15);
        }
        assert!((translation_distance(&generator_s().to_f64()) - PI / 3.0).abs() < 1e-15);
    }

    #[test]
    fn explicit_element_list() {
        // ±1, ±i, ±j, ±k, ½(±1±i±j±k), and ½(0, ±1, ±1/σ, ±σ) under even permutations.
        let t = generate_group().unwrap();
        let mut list = Vec::new();
        for k in 0..4 {
            for s in [1.0, -1.0] {
                let mut v = [0.0; 4];
                v[k] = s;
                list.push(v);
            }
        }
        for m in 0..16 {
            let sg = |b: usize| if m >> b & 1 == 1 { -0.5 } else { 0.5 };
            list.push([sg(0), sg(1), sg(2), sg(3)]);
        }
        let even = [
            [0, 1, 2, 3], [0, 2, 3, 1], [0, 3, 1, 2], [1, 0, 3, 2], [1, 2, 0, 3], [1, 3, 2, 0],
            [2, 0, 1, 3], [2, 1, 3, 0], [2, 3, 0, 1], [3, 0, 2, 1], [3, 1, 0, 2], [3, 2, 1, 0],
        ];
        for p in even {
            for m in 0..8 {
                let sg = |b: usize| if m >> b & 1 == 1 { -0.5 } else { 0.5 };
                let base = [0.0, sg(0), sg(1) * INV_SIGMA, sg(2) * SIGMA];
                let mut v = [0.0; 4];
                for k in 0..4 {
                    v[p[k]] = base[k];
                }
                list.push(v);
            }
        }
        assert_eq!(list.len(), 120);
        for v in list {
            let q = Quaternion::new(v[0], v[1], v[2], v[3]);
            assert!(t.index_of(&q, 1e-12).is_some(), "{v:?} missing");
        }
    }

    #[test]
    fn family_table_counts() {
        let total: usize = vertex_families().iter().map(|f| f.1).sum();
        assert_eq!(total, 600);
    }

    proptest! {
        #[test]
        fn associativity(a in arb_unit(), b in arb_unit(), c in arb_unit()) {
            let l = (a * b) * c;
            let r = a * (b * c);
            prop_assert!(l.max_abs_diff(&r) < 1e-13);
        }

        #[test]
        fn norm_multiplicative(a in arb_unit(), s in 0.1..3.0f64, b in arb_unit()) {
            let a = a.scale(s);
            prop_assert!(((a * b).norm() - a.norm() * b.norm()).abs() < 1e-12);
        }

        #[test]
        fn conjugate_is_inverse(a in arb_unit()) {
            prop_assert!(a.conj().max_abs_diff(&a.inverse()) < 1e-14);
        }

        #[test]
        fn homomorphism(a in arb_unit(), b in arb_unit()) {
            let lhs = rotation_of(&a).unwrap() * rotation_of(&b).unwrap();
            let rhs = rotation_of(&(a * b)).unwrap();
            prop_assert!((lhs - rhs).amax() < 1e-12);
            prop_assert!((rotation_of(&a).unwrap() - rotation_of(&-a).unwrap()).amax() < 1e-15);
            prop_assert!((rotation_of(&a).unwrap().determinant() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn clifford_property(q in arb_unit()) {
            let t = generate_group().unwrap();
            for e in &t.elements {
                let gq = e.quat * q;
                let c = gq.dot(&q);
                prop_assert!((c - e.chi.cos()).abs() < 1e-12);
                // arccos is ill-conditioned at χ ∈ {0, π}
                if e.chi > 0.1 && e.chi < PI - 0.1 {
                    prop_assert!((c.clamp(-1.0, 1.0).acos() - e.chi).abs() < 1e-12);
                }
            }
        }
    }
}
