//! Conforming triangular meshes with vertex patches and newest-vertex bisection.
//!
//! Cells are stored counter-clockwise with their newest vertex in local slot 0,
//! so the refinement edge of every cell is the edge between local slots 1 and 2.

pub mod generate;
pub mod io;
pub mod refine;

use std::collections::HashMap;

use nalgebra::Vector2;
use thiserror::Error;

pub use generate::{build_geometry, Domain, NOTCH_CENTER, NOTCH_RADIUS};
pub use refine::refine;

pub type Point = Vector2<f64>;

#[derive(Error, Debug)]
pub enum MeshError {
    #[error("cell {0} has non-positive area {1}")]
    Degenerate(usize, f64),
    #[error("edge ({0},{1}) is shared by more than two cells")]
    NonManifold(usize, usize),
    #[error("mesh size {h} is infeasible: {reason}")]
    InfeasibleSize { h: f64, reason: String },
    #[error("minimum angle {found:.3} deg below required {required:.3} deg")]
    MinAngle { found: f64, required: f64 },
    #[error("malformed mesh file: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Circle on which boundary midpoints are re-projected during refinement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Arc {
    pub center: Point,
    pub radius: f64,
}

impl Arc {
    pub fn contains(&self, p: &Point, tol: f64) -> bool {
        ((p - self.center).norm() - self.radius).abs() <= tol * self.radius
    }

    pub fn project(&self, p: &Point) -> Point {
        let d = p - self.center;
        self.center + d * (self.radius / d.norm())
    }
}

#[derive(Debug, Clone)]
pub struct Face {
    /// Endpoints, lower vertex index first.
    pub vertices: [usize; 2],
    /// Lower-index incident cell.
    pub owner: usize,
    /// Higher-index incident cell, absent on the boundary.
    pub neighbor: Option<usize>,
    /// Unit normal pointing from `owner` toward `neighbor` (outward on the boundary).
    pub normal: Point,
    pub length: f64,
}

impl Face {
    pub fn is_boundary(&self) -> bool {
        self.neighbor.is_none()
    }
}

#[derive(Debug, Clone)]
pub struct Mesh {
    pub vertices: Vec<Point>,
    pub cells: Vec<[usize; 3]>,
    pub faces: Vec<Face>,
    /// Face opposite each local vertex.
    pub cell_faces: Vec<[usize; 3]>,
    pub vertex_boundary: Vec<bool>,
    pub vertex_cells: Vec<Vec<usize>>,
    pub arc: Option<Arc>,
    /// Boundary faces lying on `arc`.
    pub face_on_arc: Vec<bool>,
}

/// Vertex patch: the cells sharing a vertex.
#[derive(Debug, Clone)]
pub struct Patch {
    pub center: usize,
    pub cells: Vec<usize>,
    /// All faces of patch cells, sorted.
    pub faces: Vec<usize>,
    pub interior: bool,
}

impl Mesh {
    /// Builds the connectivity of a mesh. Cell triples are reoriented
    /// counter-clockwise while keeping slot 0 fixed.
    pub fn new(vertices: Vec<Point>, mut cells: Vec<[usize; 3]>, arc: Option<Arc>) -> Result<Mesh, MeshError> {
        for (c, cell) in cells.iter_mut().enumerate() {
            let a = signed_area(&vertices, cell);
            if a == 0.0 || !a.is_finite() {
                return Err(MeshError::Degenerate(c, a));
            }
            if a < 0.0 {
                cell.swap(1, 2);
            }
        }
        let mut edge_map: HashMap<(usize, usize), usize> = HashMap::with_capacity(cells.len() * 2);
        let mut faces: Vec<Face> = Vec::with_capacity(cells.len() * 2);
        let mut cell_faces = vec![[0usize; 3]; cells.len()];
        for (c, cell) in cells.iter().enumerate() {
            for i in 0..3 {
                let a = cell[(i + 1) % 3];
                let b = cell[(i + 2) % 3];
                let key = (a.min(b), a.max(b));
                let f = match edge_map.get(&key) {
                    Some(&f) => {
                        if faces[f].neighbor.is_some() {
                            return Err(MeshError::NonManifold(key.0, key.1));
                        }
                        faces[f].neighbor = Some(c);
                        f
                    }
                    None => {
                        let f = faces.len();
                        edge_map.insert(key, f);
                        faces.push(Face {
                            vertices: [key.0, key.1],
                            owner: c,
                            neighbor: None,
                            normal: Point::zeros(),
                            length: 0.0,
                        });
                        f
                    }
                };
                cell_faces[c][i] = f;
            }
        }
        for face in faces.iter_mut() {
            let p = vertices[face.vertices[0]];
            let q = vertices[face.vertices[1]];
            let t = q - p;
            face.length = t.norm();
            let mut n = Point::new(t.y, -t.x) / face.length;
            // Orient away from the owner cell.
            let cell = cells[face.owner];
            let centroid = (vertices[cell[0]] + vertices[cell[1]] + vertices[cell[2]]) / 3.0;
            if n.dot(&(p - centroid)) < 0.0 {
                n = -n;
            }
            face.normal = n;
        }
        let mut vertex_boundary = vec![false; vertices.len()];
        for face in &faces {
            if face.is_boundary() {
                vertex_boundary[face.vertices[0]] = true;
                vertex_boundary[face.vertices[1]] = true;
            }
        }
        let mut vertex_cells = vec![Vec::new(); vertices.len()];
        for (c, cell) in cells.iter().enumerate() {
            for &v in cell {
                vertex_cells[v].push(c);
            }
        }
        let face_on_arc = faces
            .iter()
            .map(|f| match (&arc, f.is_boundary()) {
                (Some(a), true) => {
                    let tol = 1e-9;
                    a.contains(&vertices[f.vertices[0]], tol) && a.contains(&vertices[f.vertices[1]], tol)
                }
                _ => false,
            })
            .collect();
        Ok(Mesh {
            vertices,
            cells,
            faces,
            cell_faces,
            vertex_boundary,
            vertex_cells,
            arc,
            face_on_arc,
        })
    }

    /// Rotates each cell so that slot 0 is opposite its longest edge.
    pub fn with_longest_edge_refinement(vertices: Vec<Point>, cells: Vec<[usize; 3]>, arc: Option<Arc>) -> Result<Mesh, MeshError> {
        let cells = cells
            .into_iter()
            .map(|c| {
                let len = |i: usize| (vertices[c[(i + 1) % 3]] - vertices[c[(i + 2) % 3]]).norm_squared();
                let mut best = 0;
                for i in 1..3 {
                    if len(i) > len(best) * (1.0 + 1e-12) {
                        best = i;
                    }
                }
                [c[best], c[(best + 1) % 3], c[(best + 2) % 3]]
            })
            .collect();
        Mesh::new(vertices, cells, arc)
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn num_faces(&self) -> usize {
        self.faces.len()
    }

    pub fn cell_points(&self, c: usize) -> [Point; 3] {
        let t = self.cells[c];
        [self.vertices[t[0]], self.vertices[t[1]], self.vertices[t[2]]]
    }

    pub fn area(&self, c: usize) -> f64 {
        signed_area(&self.vertices, &self.cells[c])
    }

    /// Cell diameter (longest edge).
    pub fn diameter(&self, c: usize) -> f64 {
        let p = self.cell_points(c);
        (p[0] - p[1]).norm().max((p[1] - p[2]).norm()).max((p[2] - p[0]).norm())
    }

    pub fn min_angle_deg(&self, c: usize) -> f64 {
        let p = self.cell_points(c);
        let mut m = f64::INFINITY;
        for i in 0..3 {
            let a = p[(i + 1) % 3] - p[i];
            let b = p[(i + 2) % 3] - p[i];
            let ang = (a.dot(&b) / (a.norm() * b.norm())).clamp(-1.0, 1.0).acos();
            m = m.min(ang.to_degrees());
        }
        m
    }

    pub fn min_angle(&self) -> f64 {
        (0..self.num_cells()).map(|c| self.min_angle_deg(c)).fold(f64::INFINITY, f64::min)
    }

    pub fn check_min_angle(&self, required: f64) -> Result<(), MeshError> {
        let found = self.min_angle();
        if found < required {
            return Err(MeshError::MinAngle { found, required });
        }
        Ok(())
    }

    pub fn vertex_patch(&self, a: usize) -> Patch {
        let cells = self.vertex_cells[a].clone();
        let mut faces: Vec<usize> = cells.iter().flat_map(|&c| self.cell_faces[c]).collect();
        faces.sort_unstable();
        faces.dedup();
        Patch {
            center: a,
            cells,
            faces,
            interior: !self.vertex_boundary[a],
        }
    }

    /// Hat function of vertex `a` on cell `c` at barycentric point `b`.
    pub fn hat(&self, a: usize, c: usize, b: &[f64; 3]) -> f64 {
        match self.cells[c].iter().position(|&v| v == a) {
            Some(i) => b[i],
            None => 0.0,
        }
    }

    /// Gradients of the barycentric coordinates of cell `c`.
    pub fn barycentric_gradients(&self, c: usize) -> [Point; 3] {
        let p = self.cell_points(c);
        let two_area = 2.0 * self.area(c);
        let mut g = [Point::zeros(); 3];
        for i in 0..3 {
            let e = p[(i + 2) % 3] - p[(i + 1) % 3];
            g[i] = Point::new(-e.y, e.x) / two_area;
        }
        g
    }

    pub fn map_point(&self, c: usize, b: &[f64; 3]) -> Point {
        let p = self.cell_points(c);
        p[0] * b[0] + p[1] * b[1] + p[2] * b[2]
    }

    /// Local index (0..3) of face `f` within cell `c`.
    pub fn local_face(&self, c: usize, f: usize) -> Option<usize> {
        self.cell_faces[c].iter().position(|&g| g == f)
    }

    /// Verifies that every interior face is shared by two cells with opposite
    /// traversal direction and that every edge is listed once.
    pub fn conformity_audit(&self) -> bool {
        let mut seen: HashMap<(usize, usize), Vec<(usize, bool)>> = HashMap::new();
        for (c, cell) in self.cells.iter().enumerate() {
            for i in 0..3 {
                let a = cell[(i + 1) % 3];
                let b = cell[(i + 2) % 3];
                seen.entry((a.min(b), a.max(b))).or_default().push((c, a < b));
            }
        }
        if seen.len() != self.faces.len() {
            return false;
        }
        for (key, uses) in &seen {
            match uses.len() {
                1 => {
                    // A boundary edge must not contain a vertex lying in its interior.
                    let p = self.vertices[key.0];
                    let q = self.vertices[key.1];
                    for (v, x) in self.vertices.iter().enumerate() {
                        if v == key.0 || v == key.1 {
                            continue;
                        }
                        let t = (x - p).dot(&(q - p)) / (q - p).norm_squared();
                        let d = (p + (q - p) * t - x).norm();
                        if t > 1e-9 && t < 1.0 - 1e-9 && d < 1e-12 * (q - p).norm() {
                            return false;
                        }
                    }
                }
                2 => {
                    if uses[0].1 == uses[1].1 {
                        return false;
                    }
                }
                _ => return false,
            }
        }
        self.cells.iter().enumerate().all(|(c, _)| self.area(c) > 0.0)
    }

    pub fn total_area(&self) -> f64 {
        (0..self.num_cells()).map(|c| self.area(c)).sum()
    }
}

pub fn signed_area(vertices: &[Point], cell: &[usize; 3]) -> f64 {
    let a = vertices[cell[0]];
    let b = vertices[cell[1]];
    let c = vertices[cell[2]];
    0.5 * ((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y))
}

////////////////////////////////////////////////////////////////////////////////

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fe::quadrature::make_quadrature;

    fn square() -> Mesh {
        build_geometry(Domain::UnitSquare, 0.5).unwrap()
    }

    #[test]
    fn unit_square_counts() {
        let m = square();
        assert_eq!(m.num_cells(), 8);
        assert_eq!(m.num_vertices(), 9);
        assert_eq!(m.num_faces(), 16);
        assert!(m.conformity_audit());
    }

    #[test]
    fn interior_patch_of_criss_cross_square() {
        let m = square();
        let center = (0..m.num_vertices())
            .find(|&v| (m.vertices[v] - Point::new(0.5, 0.5)).norm() < 1e-14)
            .unwrap();
        let p = m.vertex_patch(center);
        assert!(p.interior);
        assert_eq!(p.cells.len(), 8);
    }

    #[test]
    fn corner_patches_are_boundary() {
        let m = square();
        for corner in [Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(1.0, 1.0), Point::new(0.0, 1.0)] {
            let v = (0..m.num_vertices()).find(|&v| (m.vertices[v] - corner).norm() < 1e-14).unwrap();
            let p = m.vertex_patch(v);
            assert!(!p.interior);
            assert!(p.cells.len() == 1 || p.cells.len() == 2);
        }
    }

    #[test]
    fn normals_are_unit_and_oriented() {
        let m = build_geometry(Domain::LShape, 0.5).unwrap();
        for f in &m.faces {
            assert!((f.normal.norm() - 1.0).abs() < 1e-14);
            if let Some(nb) = f.neighbor {
                assert!(f.owner < nb);
            }
        }
        // Sum of signed boundary integrals of a constant field vanishes per cell and globally.
        let w = Point::new(0.3, -1.7);
        let mut total = 0.0;
        let mut scale = 0.0;
        for c in 0..m.num_cells() {
            let mut cell_sum = 0.0;
            for &f in &m.cell_faces[c] {
                let face = &m.faces[f];
                let sign = if face.owner == c { 1.0 } else { -1.0 };
                cell_sum += sign * face.length * face.normal.dot(&w);
                scale += face.length * w.norm();
            }
            assert!(cell_sum.abs() < 1e-14 * scale.max(1.0));
            total += cell_sum;
        }
        assert!(total.abs() < 1e-12 * scale);
    }

    #[test]
    fn partition_of_unity() {
        let m = build_geometry(Domain::LShape, 0.5).unwrap();
        let rule = make_quadrature(5).unwrap();
        for c in 0..m.num_cells() {
            for q in 0..7.min(rule.len()) {
                let b = rule.points[q];
                let s: f64 = (0..m.num_vertices()).map(|a| m.hat(a, c, &b)).sum();
                assert!((s - 1.0).abs() <= 1e-13);
            }
        }
    }

    #[test]
    fn barycentric_gradients_sum_to_zero() {
        let m = build_geometry(Domain::LShape, 0.5).unwrap();
        for c in 0..m.num_cells() {
            let g = m.barycentric_gradients(c);
            assert!((g[0] + g[1] + g[2]).norm() < 1e-13);
            let p = m.cell_points(c);
            for i in 0..3 {
                for j in 0..3 {
                    let expect = if i == j { 0.0 } else { -1.0 };
                    // lambda_i(p_j) - lambda_i(p_i) = grad . (p_j - p_i)
                    let v = g[i].dot(&(p[j] - p[i]));
                    assert!((v - expect).abs() < 1e-13);
                }
            }
        }
    }
}
