//! Tetrahedral meshes of 𝓕_v whose opposite boundary faces match under the face
//! maps, plus Tetgen/VTK I/O and validation.

pub mod boundary;
pub mod chart;
pub mod io;
pub mod validate;
pub mod volume;

use nalgebra::Vector3;
use serde::Serialize;
use thiserror::Error;

use crate::domain::DomainError;

pub use boundary::{build_boundary_mesh, SurfaceMesh};
pub use chart::{chart_forward, chart_inverse, face_chart_metric, triangulate_face_chart, FaceChart};
pub use io::{export_mesh, import_mesh, write_vtk};
pub use validate::{validate_mesh, MeshReport};
pub use volume::build_volume_mesh;

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("subdivision count must be at least 1, got {0}")]
    InvalidSubdivision(usize),
    #[error("layer count must be at least 1, got {0}")]
    InvalidLayers(usize),
    #[error("point is off the chart plane by {0:e}")]
    OffPlane(f64),
    #[error("node {node} is {distance:e} from its target surface")]
    SnapFailure { node: usize, distance: f64 },
    #[error("tetrahedron {tet} has volume {volume:e}")]
    DegenerateTet { tet: usize, volume: f64 },
    #[error("parse error at line {line}: {msg}")]
    ParseError { line: usize, msg: String },
    #[error("periodicity violation: boundary node {node} has no partner within tolerance (nearest {distance:e})")]
    PeriodicityViolation { node: usize, distance: f64 },
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Identified boundary node: `node` = Φ_map(this node).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Partner {
    pub node: usize,
    pub map: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct TetMesh {
    pub vertices: Vec<Vector3<f64>>,
    /// Positively oriented.
    pub tets: Vec<[usize; 4]>,
    pub boundary_tris: Vec<[usize; 3]>,
    /// 0-based face index of each boundary triangle.
    pub boundary_face: Vec<usize>,
    /// Faces each vertex lies on (empty for interior vertices).
    pub vertex_faces: Vec<Vec<usize>>,
    pub partners: Vec<Vec<Partner>>,
    /// Subdivision level and layer count of generated meshes (0 for imports).
    pub n: usize,
    pub layers: usize,
}

impl TetMesh {
    pub fn signed_volume(&self, t: usize) -> f64 {
        let [a, b, c, d] = self.tets[t].map(|i| self.vertices[i]);
        (b - a).cross(&(c - a)).dot(&(d - a)) / 6.0
    }

    pub fn num_boundary_vertices(&self) -> usize {
        self.vertex_faces.iter().filter(|f| !f.is_empty()).count()
    }

    /// Number of recorded (vertex, partner) pairs.
    pub fn num_periodic_pairs(&self) -> usize {
        self.partners.iter().map(|p| p.len()).sum()
    }
}

/// Surface chart, boundary mesh and volume mesh in one call.
pub fn generate_mesh(
    domain: &crate::domain::FundamentalDomain,
    n: usize,
    layers: usize,
    grading: f64,
) -> Result<TetMesh, MeshError> {
    let chart = triangulate_face_chart(domain, n)?;
    let surface = build_boundary_mesh(domain, &chart)?;
    build_volume_mesh(&surface, layers, grading)
}
