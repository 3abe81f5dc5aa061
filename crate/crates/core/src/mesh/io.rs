//! Tetgen `.node`/`.ele` reader and writer, and legacy VTK export.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use nalgebra::Vector3;

use super::{MeshError, Partner, TetMesh};
use crate::domain::{lift, FundamentalDomain};

/// Writes `mesh` as 1-based Tetgen files. The boundary marker of a node is one
/// plus the first face it lies on (0 for interior nodes).
pub fn write_node<W: Write>(mesh: &TetMesh, mut w: W) -> std::io::Result<()> {
    writeln!(w, "# pds n={} layers={}", mesh.n, mesh.layers)?;
    writeln!(w, "{} 3 0 1", mesh.vertices.len())?;
    for (i, x) in mesh.vertices.iter().enumerate() {
        let marker = mesh.vertex_faces[i].first().map_or(0, |f| f + 1);
        writeln!(w, "{} {:.16e} {:.16e} {:.16e} {}", i + 1, x[0], x[1], x[2], marker)?;
    }
    Ok(())
}

pub fn write_ele<W: Write>(mesh: &TetMesh, mut w: W) -> std::io::Result<()> {
    writeln!(w, "{} 4 0", mesh.tets.len())?;
    for (i, t) in mesh.tets.iter().enumerate() {
        writeln!(w, "{} {} {} {} {}", i + 1, t[0] + 1, t[1] + 1, t[2] + 1, t[3] + 1)?;
    }
    Ok(())
}

pub fn export_mesh(mesh: &TetMesh, node: &Path, ele: &Path) -> Result<(), MeshError> {
    let mut w = BufWriter::new(File::create(node)?);
    write_node(mesh, &mut w)?;
    w.flush()?;
    let mut w = BufWriter::new(File::create(ele)?);
    write_ele(mesh, &mut w)?;
    w.flush()?;
    Ok(())
}

/// Data lines of a Tetgen file with their 1-based line numbers; comments stripped.
fn data_lines(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines().enumerate().filter_map(|(i, l)| {
        let l = l.split('#').next().unwrap_or("");
        let toks: Vec<&str> = l.split_whitespace().collect();
        (!toks.is_empty()).then_some((i + 1, toks))
    })
}

fn parse<T: std::str::FromStr>(tok: &str, line: usize) -> Result<T, MeshError> {
    tok.parse().map_err(|_| MeshError::ParseError {
        line,
        msg: format!("cannot parse {tok:?}"),
    })
}

/// Parsed `.node` contents: coordinates and the first index used.
pub struct NodeFile {
    pub vertices: Vec<Vector3<f64>>,
    pub base: usize,
    pub n: usize,
    pub layers: usize,
}

pub fn parse_node(text: &str) -> Result<NodeFile, MeshError> {
    let (mut n, mut layers) = (0, 0);
    for l in text.lines() {
        if let Some(rest) = l.trim().strip_prefix("# pds") {
            for kv in rest.split_whitespace() {
                match kv.split_once('=') {
                    Some(("n", v)) => n = v.parse().unwrap_or(0),
                    Some(("layers", v)) => layers = v.parse().unwrap_or(0),
                    _ => {}
                }
            }
        }
    }
    let mut lines = data_lines(text);
    let (hl, header) = lines.next().ok_or(MeshError::ParseError {
        line: 0,
        msg: "empty node file".into(),
    })?;
    if header.len() < 2 {
        return Err(MeshError::ParseError { line: hl, msg: "bad header".into() });
    }
    let count: usize = parse(header[0], hl)?;
    let dim: usize = parse(header[1], hl)?;
    if dim != 3 {
        return Err(MeshError::ParseError { line: hl, msg: format!("dimension {dim} is not 3") });
    }
    let mut vertices = Vec::with_capacity(count);
    let mut base = None;
    for (ln, toks) in lines.by_ref().take(count) {
        if toks.len() < 4 {
            return Err(MeshError::ParseError { line: ln, msg: "expected index and 3 coordinates".into() });
        }
        let idx: usize = parse(toks[0], ln)?;
        let b = *base.get_or_insert(idx);
        if b > 1 {
            return Err(MeshError::ParseError { line: ln, msg: format!("first index {b} is neither 0 nor 1") });
        }
        if idx != vertices.len() + b {
            return Err(MeshError::ParseError { line: ln, msg: format!("index {idx} out of sequence") });
        }
        vertices.push(Vector3::new(parse(toks[1], ln)?, parse(toks[2], ln)?, parse(toks[3], ln)?));
    }
    if vertices.len() != count {
        return Err(MeshError::ParseError { line: 0, msg: format!("expected {count} nodes, found {}", vertices.len()) });
    }
    Ok(NodeFile {
        vertices,
        base: base.unwrap_or(0),
        n,
        layers,
    })
}

pub fn parse_ele(text: &str, base: usize, num_vertices: usize) -> Result<Vec<[usize; 4]>, MeshError> {
    let mut lines = data_lines(text);
    let (hl, header) = lines.next().ok_or(MeshError::ParseError {
        line: 0,
        msg: "empty ele file".into(),
    })?;
    let count: usize = parse(header[0], hl)?;
    let per: usize = match header.get(1) {
        Some(t) => parse(t, hl)?,
        None => 4,
    };
    if per < 4 {
        return Err(MeshError::ParseError { line: hl, msg: format!("{per} nodes per element") });
    }
    let mut tets = Vec::with_capacity(count);
    for (ln, toks) in lines.take(count) {
        if toks.len() < 5 {
            return Err(MeshError::ParseError { line: ln, msg: "expected index and 4 nodes".into() });
        }
        let mut t = [0usize; 4];
        for k in 0..4 {
            let v: usize = parse(toks[k + 1], ln)?;
            if v < base || v - base >= num_vertices {
                return Err(MeshError::ParseError { line: ln, msg: format!("node {v} out of range") });
            }
            t[k] = v - base;
        }
        tets.push(t);
    }
    if tets.len() != count {
        return Err(MeshError::ParseError { line: 0, msg: format!("expected {count} elements, found {}", tets.len()) });
    }
    Ok(tets)
}

struct PointGrid {
    h: f64,
    cells: HashMap<(i64, i64, i64), Vec<usize>>,
}

impl PointGrid {
    fn new(points: &[Vector3<f64>], ids: &[usize], h: f64) -> Self {
        let mut cells: HashMap<(i64, i64, i64), Vec<usize>> = HashMap::new();
        for &i in ids {
            cells.entry(Self::cell(&points[i], h)).or_default().push(i);
        }
        PointGrid { h, cells }
    }

    fn cell(p: &Vector3<f64>, h: f64) -> (i64, i64, i64) {
        ((p[0] / h).floor() as i64, (p[1] / h).floor() as i64, (p[2] / h).floor() as i64)
    }

    /// Nearest point among the 27 neighbouring cells.
    fn nearest(&self, points: &[Vector3<f64>], q: &Vector3<f64>) -> Option<(usize, f64)> {
        let (cx, cy, cz) = Self::cell(q, self.h);
        let mut best: Option<(usize, f64)> = None;
        for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    if let Some(c) = self.cells.get(&(cx + dx, cy + dy, cz + dz)) {
                        for &i in c {
                            let d = (points[i] - q).norm();
                            if best.is_none_or(|b| d < b.1) {
                                best = Some((i, d));
                            }
                        }
                    }
                }
            }
        }
        best
    }
}

/// Builds a [`TetMesh`] from raw vertices and tets: extracts the boundary,
/// assigns boundary vertices to faces and discovers periodic partners.
pub fn mesh_from_parts(
    domain: &FundamentalDomain,
    vertices: Vec<Vector3<f64>>,
    mut tets: Vec<[usize; 4]>,
    tol: f64,
) -> Result<TetMesh, MeshError> {
    let vol = |t: &[usize; 4]| {
        let [a, b, c, d] = t.map(|i| vertices[i]);
        (b - a).cross(&(c - a)).dot(&(d - a))
    };
    for t in &mut tets {
        if vol(t) < 0.0 {
            t.swap(2, 3);
        }
    }
    // faces appearing in exactly one tet, oriented outward
    let mut count: HashMap<[usize; 3], (u32, [usize; 3])> = HashMap::new();
    for t in &tets {
        for opp in [[1usize, 2, 3], [0, 3, 2], [0, 1, 3], [0, 2, 1]] {
            let f = opp.map(|k| t[k]);
            let mut s = f;
            s.sort_unstable();
            let e = count.entry(s).or_insert((0, f));
            e.0 += 1;
        }
    }
    let mut boundary: Vec<[usize; 3]> = count.values().filter(|(c, _)| *c == 1).map(|(_, f)| *f).collect();
    boundary.sort_unstable();

    let mut is_bnd = vec![false; vertices.len()];
    for t in &boundary {
        for &v in t {
            is_bnd[v] = true;
        }
    }
    let bnd_ids: Vec<usize> = (0..vertices.len()).filter(|&v| is_bnd[v]).collect();

    let mut vertex_faces = vec![Vec::new(); vertices.len()];
    for &v in &bnd_ids {
        let p = lift(&vertices[v])?;
        let res: Vec<f64> = domain.faces.iter().map(|f| f.hyperplane_residual(&p).abs()).collect();
        vertex_faces[v] = (0..res.len()).filter(|&f| res[f] <= tol).collect();
        if vertex_faces[v].is_empty() {
            let d = res.iter().cloned().fold(f64::INFINITY, f64::min);
            return Err(MeshError::PeriodicityViolation { node: v, distance: d });
        }
    }

    let mut boundary_face = Vec::with_capacity(boundary.len());
    for t in &boundary {
        let common: Vec<usize> = vertex_faces[t[0]]
            .iter()
            .filter(|f| vertex_faces[t[1]].contains(f) && vertex_faces[t[2]].contains(f))
            .cloned()
            .collect();
        let c = (vertices[t[0]] + vertices[t[1]] + vertices[t[2]]) / 3.0;
        let pc = lift(&c)?;
        let f = common
            .into_iter()
            .min_by(|&a, &b| {
                let ra = domain.faces[a].hyperplane_residual(&pc).abs();
                let rb = domain.faces[b].hyperplane_residual(&pc).abs();
                ra.total_cmp(&rb)
            })
            .ok_or(MeshError::PeriodicityViolation { node: t[0], distance: f64::INFINITY })?;
        boundary_face.push(f);
    }

    let h = (10.0 * tol).max(1e-4);
    let grid = PointGrid::new(&vertices, &bnd_ids, h);
    let mut partners = vec![Vec::new(); vertices.len()];
    for &v in &bnd_ids {
        for &f in &vertex_faces[v] {
            let y = domain.apply_face_map(f, &vertices[v])?;
            match grid.nearest(&vertices, &y) {
                Some((w, d)) if d <= tol => partners[v].push(Partner { node: w, map: f }),
                found => {
                    let d = found.map_or_else(
                        || bnd_ids.iter().map(|&w| (vertices[w] - y).norm()).fold(f64::INFINITY, f64::min),
                        |b| b.1,
                    );
                    return Err(MeshError::PeriodicityViolation { node: v, distance: d });
                }
            }
        }
    }

    Ok(TetMesh {
        vertices,
        tets,
        boundary_tris: boundary,
        boundary_face,
        vertex_faces,
        partners,
        n: 0,
        layers: 0,
    })
}

pub fn import_mesh_str(
    domain: &FundamentalDomain,
    node: &str,
    ele: &str,
    tol: f64,
) -> Result<TetMesh, MeshError> {
    let nf = parse_node(node)?;
    let tets = parse_ele(ele, nf.base, nf.vertices.len())?;
    let mut m = mesh_from_parts(domain, nf.vertices, tets, tol)?;
    m.n = nf.n;
    m.layers = nf.layers;
    Ok(m)
}

pub fn import_mesh(
    domain: &FundamentalDomain,
    node: &Path,
    ele: &Path,
    tol: f64,
) -> Result<TetMesh, MeshError> {
    let node = std::fs::read_to_string(node)?;
    let ele = std::fs::read_to_string(ele)?;
    import_mesh_str(domain, &node, &ele, tol)
}

/// Legacy ASCII VTK unstructured grid, optionally with point scalars.
pub fn write_vtk<W: Write>(mesh: &TetMesh, scalars: Option<(&str, &[f64])>, mut w: W) -> std::io::Result<()> {
    writeln!(w, "# vtk DataFile Version 3.0")?;
    writeln!(w, "pds mesh n={} layers={}", mesh.n, mesh.layers)?;
    writeln!(w, "ASCII")?;
    writeln!(w, "DATASET UNSTRUCTURED_GRID")?;
    writeln!(w, "POINTS {} double", mesh.vertices.len())?;
    for x in &mesh.vertices {
        writeln!(w, "{:.16e} {:.16e} {:.16e}", x[0], x[1], x[2])?;
    }
    writeln!(w, "CELLS {} {}", mesh.tets.len(), 5 * mesh.tets.len())?;
    for t in &mesh.tets {
        writeln!(w, "4 {} {} {} {}", t[0], t[1], t[2], t[3])?;
    }
    writeln!(w, "CELL_TYPES {}", mesh.tets.len())?;
    for _ in &mesh.tets {
        writeln!(w, "10")?;
    }
    if let Some((name, values)) = scalars {
        writeln!(w, "POINT_DATA {}", values.len())?;
        writeln!(w, "SCALARS {name} double 1")?;
        writeln!(w, "LOOKUP_TABLE default")?;
        for v in values {
            writeln!(w, "{v:.16e}")?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::build_domain;
    use crate::mesh::{generate_mesh, validate_mesh};

    fn to_strings(m: &TetMesh) -> (String, String) {
        let mut a = Vec::new();
        let mut b = Vec::new();
        write_node(m, &mut a).unwrap();
        write_ele(m, &mut b).unwrap();
        (String::from_utf8(a).unwrap(), String::from_utf8(b).unwrap())
    }

    #[test]
    fn round_trip_exact() {
        let d = build_domain();
        let m = generate_mesh(&d, 2, 2, 1.0).unwrap();
        let (node, ele) = to_strings(&m);
        let m2 = import_mesh_str(&d, &node, &ele, 1e-9).unwrap();
        assert_eq!(m.vertices, m2.vertices);
        assert_eq!(m.tets, m2.tets);
        assert_eq!((m2.n, m2.layers), (2, 2));
        assert_eq!(validate_mesh(&d, &m), validate_mesh(&d, &m2));
        for v in 0..m.vertices.len() {
            let mut a = m.partners[v].clone();
            let mut b = m2.partners[v].clone();
            a.sort_by_key(|p| p.map);
            b.sort_by_key(|p| p.map);
            assert_eq!(a, b);
            assert_eq!(m.vertex_faces[v], m2.vertex_faces[v]);
        }
    }

    #[test]
    fn zero_based_and_comments() {
        let d = build_domain();
        let m = generate_mesh(&d, 1, 1, 1.0).unwrap();
        let (node, ele) = to_strings(&m);
        let shift = |s: &str, skip_header: bool| -> String {
            let mut out = String::from("# shifted\n");
            for (i, l) in s.lines().enumerate() {
                let toks: Vec<&str> = l.split_whitespace().collect();
                if l.starts_with('#') || (i <= 1 && skip_header) || toks.len() < 4 {
                    out.push_str(l);
                } else {
                    let idx: usize = toks[0].parse().unwrap();
                    out.push_str(&format!("{} {}", idx - 1, toks[1..].join(" ")));
                }
                out.push('\n');
            }
            out
        };
        let node0 = shift(&node, true);
        let ele0: String = {
            let mut out = String::new();
            for (i, l) in ele.lines().enumerate() {
                if i == 0 {
                    out.push_str(l);
                } else {
                    let v: Vec<usize> = l.split_whitespace().map(|t| t.parse::<usize>().unwrap() - 1).collect();
                    out.push_str(&format!("{} {} {} {} {}", v[0], v[1], v[2], v[3], v[4]));
                }
                out.push('\n');
            }
            out
        };
        let m2 = import_mesh_str(&d, &node0, &ele0, 1e-9).unwrap();
        assert_eq!(m.tets, m2.tets);
    }

    #[test]
    fn perturbed_boundary_vertex_is_rejected() {
        let d = build_domain();
        let mut m = generate_mesh(&d, 2, 2, 1.0).unwrap();
        let v = (0..m.vertices.len()).find(|&v| m.vertex_faces[v].len() == 1).unwrap();
        let dir = d.faces[m.vertex_faces[v][0]].normal.cross(&Vector3::z()).normalize();
        m.vertices[v] += dir * 1e-3;
        let (node, ele) = to_strings(&m);
        let e = import_mesh_str(&d, &node, &ele, 1e-6);
        assert!(matches!(e, Err(MeshError::PeriodicityViolation { .. })), "{e:?}");
    }

    #[test]
    fn parse_errors() {
        let d = build_domain();
        assert!(matches!(import_mesh_str(&d, "", "", 1e-9), Err(MeshError::ParseError { .. })));
        assert!(matches!(
            import_mesh_str(&d, "1 3 0 0\n1 0.0 zero 0.0\n", "0 4 0\n", 1e-9),
            Err(MeshError::ParseError { line: 2, .. })
        ));
        assert!(matches!(
            import_mesh_str(&d, "1 3 0 0\n1 0 0 0\n", "1 4 0\n1 1 2 3 4\n", 1e-9),
            Err(MeshError::ParseError { line: 2, .. })
        ));
    }

    #[test]
    fn vtk_layout() {
        let d = build_domain();
        let m = generate_mesh(&d, 1, 1, 1.0).unwrap();
        let vals = vec![1.0; m.vertices.len()];
        let mut buf = Vec::new();
        write_vtk(&m, Some(("psi", &vals)), &mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.contains(&format!("CELLS {} {}", m.tets.len(), 5 * m.tets.len())));
        assert!(s.contains("SCALARS psi double 1"));
        assert_eq!(s.lines().filter(|l| *l == "10").count(), m.tets.len());
    }
}
