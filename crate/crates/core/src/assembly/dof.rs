//! Identified degrees of freedom: one unknown per equivalence class of boundary
//! nodes, one per interior node.

use serde::Serialize;

use super::AssemblyError;
use crate::mesh::TetMesh;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct DofCounts {
    /// Interior mesh vertices.
    pub nbvi: usize,
    /// Nodes per face interior (size-2 classes / 6).
    pub nbvf: usize,
    /// Nodes per edge interior (size-3 classes / 10).
    pub nbve: usize,
    /// Size-4 classes.
    pub vertex_classes: usize,
    pub face_classes: usize,
    pub edge_classes: usize,
}

impl DofCounts {
    /// 10·nbve + 6·nbvf + nbvi + 5.
    pub fn formula(&self) -> usize {
        n_h_formula(self.nbve, self.nbvf, self.nbvi)
    }
}

pub fn n_h_formula(nbve: usize, nbvf: usize, nbvi: usize) -> usize {
    30 / 3 * nbve + 12 / 2 * nbvf + nbvi + 20 / 4
}

#[derive(Clone, Debug, Serialize)]
pub struct DofMap {
    pub node_to_dof: Vec<usize>,
    /// Lowest mesh vertex index of each class.
    pub representative: Vec<usize>,
    /// Members of each class, ascending.
    pub members: Vec<Vec<usize>>,
    pub counts: DofCounts,
}

impl DofMap {
    pub fn num_dofs(&self) -> usize {
        self.representative.len()
    }

    pub fn class_size(&self, dof: usize) -> usize {
        self.members[dof].len()
    }

    /// Nodal values at every mesh vertex.
    pub fn expand(&self, u: &[f64]) -> Vec<f64> {
        self.node_to_dof.iter().map(|&d| u[d]).collect()
    }
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

pub fn build_dof_map(mesh: &TetMesh) -> Result<DofMap, AssemblyError> {
    let nv = mesh.vertices.len();
    let mut parent: Vec<usize> = (0..nv).collect();
    for (v, ps) in mesh.partners.iter().enumerate() {
        for p in ps {
            let (a, b) = (find(&mut parent, v), find(&mut parent, p.node));
            if a != b {
                // keep the smaller index as root
                let (lo, hi) = if a < b { (a, b) } else { (b, a) };
                parent[hi] = lo;
            }
        }
    }
    let roots: Vec<usize> = (0..nv).map(|v| find(&mut parent, v)).collect();

    let mut node_to_dof = vec![usize::MAX; nv];
    let mut representative = Vec::new();
    let mut members: Vec<Vec<usize>> = Vec::new();
    // roots are class minima, so scanning v ascending numbers classes by representative
    for v in 0..nv {
        let r = roots[v];
        if r == v {
            node_to_dof[v] = representative.len();
            representative.push(v);
            members.push(Vec::new());
        }
        let d = node_to_dof[r];
        node_to_dof[v] = d;
        members[d].push(v);
    }

    let mut counts = DofCounts::default();
    for (d, m) in members.iter().enumerate() {
        let on_boundary = !mesh.vertex_faces[representative[d]].is_empty();
        match (m.len(), on_boundary) {
            (1, false) => counts.nbvi += 1,
            (2, true) => counts.face_classes += 1,
            (3, true) => counts.edge_classes += 1,
            (4, true) => counts.vertex_classes += 1,
            (size, _) => {
                return Err(AssemblyError::ClassSizeError {
                    representative: representative[d],
                    size,
                })
            }
        }
    }
    counts.nbvf = counts.face_classes / 6;
    counts.nbve = counts.edge_classes / 10;

    Ok(DofMap {
        node_to_dof,
        representative,
        members,
        counts,
    })
}
