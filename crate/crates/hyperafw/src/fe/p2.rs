//! Continuous P2 vector Lagrange space.
//!
//! Nodes are the mesh vertices followed by the face midpoints. Degrees of
//! freedom are interleaved: node `n` carries dofs `2n` (x) and `2n+1` (y).
//! Local node `3+i` of a cell is the midpoint of the face opposite vertex `i`.

use crate::mesh::{Mesh, Point};

use super::Tensor2;

#[derive(Debug, Clone)]
pub struct P2Space {
    pub num_vertices: usize,
    pub num_nodes: usize,
    pub cell_nodes: Vec<[usize; 6]>,
    pub node_coords: Vec<Point>,
    pub boundary_node: Vec<bool>,
}

impl P2Space {
    pub fn new(mesh: &Mesh) -> P2Space {
        let nv = mesh.num_vertices();
        let num_nodes = nv + mesh.num_faces();
        let cell_nodes = (0..mesh.num_cells())
            .map(|c| {
                let t = mesh.cells[c];
                let f = mesh.cell_faces[c];
                [t[0], t[1], t[2], nv + f[0], nv + f[1], nv + f[2]]
            })
            .collect();
        let mut node_coords = mesh.vertices.clone();
        let mut boundary_node = mesh.vertex_boundary.clone();
        for face in &mesh.faces {
            let p = mesh.vertices[face.vertices[0]];
            let q = mesh.vertices[face.vertices[1]];
            node_coords.push((p + q) * 0.5);
            boundary_node.push(face.is_boundary());
        }
        P2Space {
            num_vertices: nv,
            num_nodes,
            cell_nodes,
            node_coords,
            boundary_node,
        }
    }

    pub fn dim(&self) -> usize {
        2 * self.num_nodes
    }

    pub fn cell_dofs(&self, c: usize) -> [usize; 12] {
        let n = self.cell_nodes[c];
        let mut d = [0; 12];
        for i in 0..6 {
            d[2 * i] = 2 * n[i];
            d[2 * i + 1] = 2 * n[i] + 1;
        }
        d
    }

    pub fn interpolate<F: Fn(&Point) -> [f64; 2]>(&self, f: F) -> Vec<f64> {
        let mut u = vec![0.0; self.dim()];
        for (n, p) in self.node_coords.iter().enumerate() {
            let v = f(p);
            u[2 * n] = v[0];
            u[2 * n + 1] = v[1];
        }
        u
    }
}

/// Scalar P2 basis values at barycentric point `b`.
pub fn shape_values(b: &[f64; 3]) -> [f64; 6] {
    [
        b[0] * (2.0 * b[0] - 1.0),
        b[1] * (2.0 * b[1] - 1.0),
        b[2] * (2.0 * b[2] - 1.0),
        4.0 * b[1] * b[2],
        4.0 * b[2] * b[0],
        4.0 * b[0] * b[1],
    ]
}

/// Scalar P2 basis gradients given the barycentric gradients of the cell.
pub fn shape_grads(b: &[f64; 3], gl: &[Point; 3]) -> [Point; 6] {
    [
        gl[0] * (4.0 * b[0] - 1.0),
        gl[1] * (4.0 * b[1] - 1.0),
        gl[2] * (4.0 * b[2] - 1.0),
        (gl[1] * b[2] + gl[2] * b[1]) * 4.0,
        (gl[2] * b[0] + gl[0] * b[2]) * 4.0,
        (gl[0] * b[1] + gl[1] * b[0]) * 4.0,
    ]
}

/// P2 vector field given by its coefficient vector.
#[derive(Debug, Clone)]
pub struct DisplacementField {
    pub coefficients: Vec<f64>,
}

impl DisplacementField {
    pub fn new(coefficients: Vec<f64>) -> Self {
        DisplacementField { coefficients }
    }

    pub fn value(&self, space: &P2Space, c: usize, b: &[f64; 3]) -> [f64; 2] {
        let n = space.cell_nodes[c];
        let phi = shape_values(b);
        let mut v = [0.0; 2];
        for i in 0..6 {
            v[0] += phi[i] * self.coefficients[2 * n[i]];
            v[1] += phi[i] * self.coefficients[2 * n[i] + 1];
        }
        v
    }

    /// Gradient `[du0/dx, du0/dy, du1/dx, du1/dy]`.
    pub fn gradient(&self, space: &P2Space, c: usize, b: &[f64; 3], gl: &[Point; 3]) -> Tensor2 {
        let n = space.cell_nodes[c];
        let g = shape_grads(b, gl);
        let mut out = [0.0; 4];
        for i in 0..6 {
            let ux = self.coefficients[2 * n[i]];
            let uy = self.coefficients[2 * n[i] + 1];
            out[0] += ux * g[i].x;
            out[1] += ux * g[i].y;
            out[2] += uy * g[i].x;
            out[3] += uy * g[i].y;
        }
        out
    }
}

/// Symmetric part of a gradient as `[e11, e22, e12]`.
pub fn sym_grad(g: &Tensor2) -> [f64; 3] {
    [g[0], g[3], 0.5 * (g[1] + g[2])]
}

////////////////////////////////////////////////////////////////////////////////

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fe::quadrature::make_quadrature;
    use crate::mesh::{build_geometry, Domain};

    const NODES: [[f64; 3]; 6] = [
        [1.0, 0.0, 0.0],
        [0.0, 1.0, 0.0],
        [0.0, 0.0, 1.0],
        [0.0, 0.5, 0.5],
        [0.5, 0.0, 0.5],
        [0.5, 0.5, 0.0],
    ];

    #[test]
    fn nodal_basis() {
        for (i, b) in NODES.iter().enumerate() {
            let v = shape_values(b);
            for (j, &x) in v.iter().enumerate() {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((x - e).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn partition_of_unity() {
        let rule = make_quadrature(6).unwrap();
        for b in &rule.points {
            let s: f64 = shape_values(b).iter().sum();
            assert!((s - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn dimension() {
        let m = build_geometry(Domain::LShape, 0.5).unwrap();
        let s = P2Space::new(&m);
        assert_eq!(s.dim(), 2 * (m.num_vertices() + m.num_faces()));
    }

    #[test]
    fn interpolated_affine_field_has_exact_gradient() {
        let m = build_geometry(Domain::LShape, 0.5).unwrap();
        let s = P2Space::new(&m);
        let u = DisplacementField::new(s.interpolate(|p| [p.x, p.x + p.y]));
        let rule = make_quadrature(4).unwrap();
        for c in 0..m.num_cells() {
            let gl = m.barycentric_gradients(c);
            for b in &rule.points {
                let g = u.gradient(&s, c, b, &gl);
                let expect = [1.0, 0.0, 1.0, 1.0];
                for k in 0..4 {
                    assert!((g[k] - expect[k]).abs() < 1e-13);
                }
            }
        }
    }

    #[test]
    fn quadratic_interpolation_is_exact() {
        let m = build_geometry(Domain::UnitSquare, 0.5).unwrap();
        let s = P2Space::new(&m);
        let f = |p: &Point| [p.x * p.y, p.y * p.y - 2.0 * p.x];
        let u = DisplacementField::new(s.interpolate(f));
        let rule = make_quadrature(3).unwrap();
        for c in 0..m.num_cells() {
            for b in &rule.points {
                let x = m.map_point(c, b);
                let v = u.value(&s, c, b);
                let e = f(&x);
                assert!((v[0] - e[0]).abs() < 1e-14 && (v[1] - e[1]).abs() < 1e-14);
            }
        }
    }
}
