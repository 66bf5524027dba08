//! Newest-vertex bisection with conforming closure.

use std::collections::HashMap;

use super::{Mesh, Point};

/// Result of a refinement step.
#[derive(Debug, Clone)]
pub struct Refined {
    pub mesh: Mesh,
    /// Parent cell (in the input mesh) of every output cell.
    pub parent: Vec<usize>,
}

impl Refined {
    /// Children of every parent cell, in increasing order.
    pub fn children(&self, num_parents: usize) -> Vec<Vec<usize>> {
        let mut ch = vec![Vec::new(); num_parents];
        for (c, &p) in self.parent.iter().enumerate() {
            ch[p].push(c);
        }
        ch
    }
}

fn key(a: usize, b: usize) -> (usize, usize) {
    (a.min(b), a.max(b))
}

/// Splits every marked cell into four by bisecting all of its edges, and
/// bisects the minimal set of neighbors needed to remove hanging nodes.
/// Midpoints of boundary faces lying on the mesh arc are projected back onto
/// the arc.
pub fn refine(mesh: &Mesh, marked: &[usize]) -> Refined {
    let nc = mesh.num_cells();
    // Marked edges keyed by vertex pair; closure makes the refinement edge of
    // every cell with a marked edge marked too.
    let mut edge_marked: HashMap<(usize, usize), bool> = HashMap::new();
    let ref_edge = |c: usize| {
        let t = mesh.cells[c];
        key(t[1], t[2])
    };
    let mut stack: Vec<usize> = Vec::new();
    for &c in marked {
        for &f in &mesh.cell_faces[c] {
            let v = mesh.faces[f].vertices;
            if edge_marked.insert(key(v[0], v[1]), true).is_none() {
                stack.push(f);
            }
        }
    }
    while let Some(f) = stack.pop() {
        let face = &mesh.faces[f];
        for c in std::iter::once(face.owner).chain(face.neighbor) {
            let e = ref_edge(c);
            if let std::collections::hash_map::Entry::Vacant(slot) = edge_marked.entry(e) {
                slot.insert(true);
                stack.push(mesh.cell_faces[c][0]);
            }
        }
    }

    let mut vertices = mesh.vertices.clone();
    let mut midpoint: HashMap<(usize, usize), usize> = HashMap::new();
    // Create midpoints in face order for determinism.
    for (f, face) in mesh.faces.iter().enumerate() {
        let k = key(face.vertices[0], face.vertices[1]);
        if edge_marked.contains_key(&k) {
            let p = vertices[k.0];
            let q = vertices[k.1];
            let mut m: Point = (p + q) * 0.5;
            if mesh.face_on_arc[f] {
                if let Some(arc) = &mesh.arc {
                    m = arc.project(&m);
                }
            }
            midpoint.insert(k, vertices.len());
            vertices.push(m);
        }
    }

    let mut cells = Vec::with_capacity(nc * 2);
    let mut parent = Vec::with_capacity(nc * 2);
    for c in 0..nc {
        let start = cells.len();
        bisect(mesh.cells[c], &midpoint, &mut cells, 0);
        parent.extend(std::iter::repeat_n(c, cells.len() - start));
    }
    let refined = Mesh::new(vertices, cells, mesh.arc).expect("bisection produced an invalid mesh");
    Refined { mesh: refined, parent }
}

fn bisect(t: [usize; 3], midpoint: &HashMap<(usize, usize), usize>, out: &mut Vec<[usize; 3]>, depth: usize) {
    match midpoint.get(&key(t[1], t[2])) {
        Some(&m) if depth < 2 => {
            bisect([m, t[0], t[1]], midpoint, out, depth + 1);
            bisect([m, t[2], t[0]], midpoint, out, depth + 1);
        }
        _ => out.push(t),
    }
}

/// Splits every cell into four.
pub fn refine_uniform(mesh: &Mesh) -> Refined {
    let all: Vec<usize> = (0..mesh.num_cells()).collect();
    refine(mesh, &all)
}

////////////////////////////////////////////////////////////////////////////////

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_geometry, Domain};

    #[test]
    fn empty_marking_is_identity() {
        let m = build_geometry(Domain::LShape, 0.5).unwrap();
        let r = refine(&m, &[]);
        assert_eq!(r.mesh.cells, m.cells);
        assert_eq!(r.mesh.vertices, m.vertices);
        assert_eq!(r.parent, (0..m.num_cells()).collect::<Vec<_>>());
    }

    #[test]
    fn marking_all_splits_every_cell_into_four() {
        let m = build_geometry(Domain::UnitSquare, 0.25).unwrap();
        let r = refine_uniform(&m);
        assert_eq!(r.mesh.num_cells(), 4 * m.num_cells());
        for ch in r.children(m.num_cells()) {
            assert_eq!(ch.len(), 4);
        }
        assert!(r.mesh.conformity_audit());
        assert!((r.mesh.total_area() - 1.0).abs() < 1e-13);
    }

    #[test]
    fn single_interior_cell_is_conforming() {
        let m = build_geometry(Domain::UnitSquare, 0.25).unwrap();
        let c = m
            .faces
            .iter()
            .find(|f| !f.is_boundary() && !m.vertex_boundary[f.vertices[0]] && !m.vertex_boundary[f.vertices[1]])
            .unwrap()
            .owner;
        let r = refine(&m, &[c]);
        assert!(r.mesh.conformity_audit());
        assert!(r.mesh.num_cells() > m.num_cells());
    }

    #[test]
    fn repeated_local_refinement_keeps_angles() {
        let mut m = build_geometry(Domain::LShape, 0.5).unwrap();
        let initial = m.min_angle();
        for _ in 0..8 {
            let marked: Vec<usize> = (0..m.num_cells())
                .filter(|&c| {
                    let p = m.cell_points(c);
                    p.iter().any(|x| x.norm() < 1e-12)
                })
                .collect();
            m = refine(&m, &marked).mesh;
            assert!(m.conformity_audit());
        }
        // Newest-vertex bisection produces at most four similarity classes per
        // initial cell; for right isosceles initial cells angles stay at 45 deg.
        assert!(m.min_angle() >= initial - 1e-9);
        assert!((m.total_area() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn notch_midpoints_are_snapped() {
        let m = build_geometry(Domain::NotchedPlate, 1.0).unwrap();
        let r = refine_uniform(&m);
        let arc = r.mesh.arc.unwrap();
        let on_arc = r.mesh.face_on_arc.iter().filter(|&&b| b).count();
        let before = m.face_on_arc.iter().filter(|&&b| b).count();
        assert!(on_arc > before && on_arc <= 2 * before, "{on_arc} {before}");
        for (f, face) in r.mesh.faces.iter().enumerate() {
            if r.mesh.face_on_arc[f] {
                for &v in &face.vertices {
                    assert!(arc.contains(&r.mesh.vertices[v], 1e-12));
                }
            }
        }
        assert!(r.mesh.conformity_audit());
    }
}
