//! Local weakly symmetric mixed spaces on a triangle.
//!
//! * Stresses: each row of the 2x2 tensor is a BDM2 vector field. Per row the
//!   degrees of freedom are the normal-trace moments against three orthonormal
//!   Legendre polynomials on every face (measured from the lower-index face
//!   vertex, normal taken as the fixed global face normal) and three interior
//!   moments against `(1,0)`, `(0,1)` and the rotation field. A global face
//!   dof therefore denotes the same functional from both incident cells.
//! * Displacements: discontinuous P1 vectors, basis `e_k * lambda_j`.
//! * Multipliers: skew P1 tensors `lambda_j * J` with `J = [[0,1],[-1,0]]`.

use nalgebra::SMatrix;

use crate::mesh::{Mesh, Point};

use super::quadrature::{gauss_legendre_unit, make_quadrature, QuadratureRule};
use super::{FeError, Tensor2};

pub const SIGMA_DIM: usize = 24;
pub const ROW_DIM: usize = 12;
pub const V_DIM: usize = 6;
pub const LAMBDA_DIM: usize = 3;

type M12 = SMatrix<f64, 12, 12>;

/// Orthonormal Legendre polynomials on [0,1].
pub fn edge_legendre(s: f64) -> [f64; 3] {
    [1.0, 3f64.sqrt() * (2.0 * s - 1.0), 5f64.sqrt() * (6.0 * s * s - 6.0 * s + 1.0)]
}

#[derive(Debug, Clone)]
pub struct AfwCell {
    pub center: Point,
    pub h: f64,
    /// Column `i` holds the monomial coefficients of row basis function `i`.
    pub coef: M12,
    pub faces: [usize; 3],
}

/// Monomials `1, xi, eta, xi^2, xi eta, eta^2` and their xi/eta derivatives.
#[inline]
fn monomials(xi: f64, eta: f64) -> ([f64; 6], [f64; 6], [f64; 6]) {
    (
        [1.0, xi, eta, xi * xi, xi * eta, eta * eta],
        [0.0, 1.0, 0.0, 2.0 * xi, eta, 0.0],
        [0.0, 0.0, 1.0, 0.0, xi, 2.0 * eta],
    )
}

/// Values of the 12 vector monomials: `(m_j, 0)` for j < 6, `(0, m_{j-6})` otherwise.
#[inline]
fn vector_monomial(j: usize, m: &[f64; 6]) -> [f64; 2] {
    if j < 6 {
        [m[j], 0.0]
    } else {
        [0.0, m[j - 6]]
    }
}

impl AfwCell {
    pub fn new(mesh: &Mesh, c: usize) -> Result<AfwCell, FeError> {
        let pts = mesh.cell_points(c);
        let center = (pts[0] + pts[1] + pts[2]) / 3.0;
        let h = mesh.diameter(c);
        let faces = mesh.cell_faces[c];
        let mut dof = M12::zeros();
        let (s_pts, s_wts) = gauss_legendre_unit(3);
        for (i, &f) in faces.iter().enumerate() {
            let face = &mesh.faces[f];
            let p = mesh.vertices[face.vertices[0]];
            let q = mesh.vertices[face.vertices[1]];
            let n = face.normal;
            for (k, &s) in s_pts.iter().enumerate() {
                let x = p + (q - p) * s;
                let (m, _, _) = monomials((x.x - center.x) / h, (x.y - center.y) / h);
                let leg = edge_legendre(s);
                for j in 0..12 {
                    let v = vector_monomial(j, &m);
                    let vn = v[0] * n.x + v[1] * n.y;
                    for (r, l) in leg.iter().enumerate() {
                        dof[(3 * i + r, j)] += s_wts[k] * vn * l;
                    }
                }
            }
        }
        let rule = make_quadrature(3)?;
        for (qi, b) in rule.points.iter().enumerate() {
            let x = pts[0] * b[0] + pts[1] * b[1] + pts[2] * b[2];
            let (xi, eta) = ((x.x - center.x) / h, (x.y - center.y) / h);
            let (m, _, _) = monomials(xi, eta);
            let w = rule.weights[qi];
            for j in 0..12 {
                let v = vector_monomial(j, &m);
                dof[(9, j)] += w * v[0];
                dof[(10, j)] += w * v[1];
                dof[(11, j)] += w * (-eta * v[0] + xi * v[1]);
            }
        }
        let coef = dof.try_inverse().ok_or(FeError::SingularLocal(c))?;
        Ok(AfwCell { center, h, coef, faces })
    }

    /// Values and divergences of the 12 row basis functions at point `x`.
    pub fn row_basis(&self, x: &Point) -> ([[f64; 2]; 12], [f64; 12]) {
        let (m, mx, my) = monomials((x.x - self.center.x) / self.h, (x.y - self.center.y) / self.h);
        let inv_h = 1.0 / self.h;
        let mut vals = [[0.0; 2]; 12];
        let mut divs = [0.0; 12];
        for i in 0..12 {
            let col = self.coef.column(i);
            let mut v0 = 0.0;
            let mut v1 = 0.0;
            let mut d = 0.0;
            for j in 0..6 {
                v0 += col[j] * m[j];
                v1 += col[j + 6] * m[j];
                d += col[j] * mx[j] + col[j + 6] * my[j];
            }
            vals[i] = [v0, v1];
            divs[i] = d * inv_h;
        }
        (vals, divs)
    }

    /// Evaluates the tensor with local coefficients `a` (24 entries) at `x`;
    /// returns the tensor and its row-wise divergence.
    pub fn eval(&self, a: &[f64; SIGMA_DIM], x: &Point) -> (Tensor2, [f64; 2]) {
        let (vals, divs) = self.row_basis(x);
        let mut t = [0.0; 4];
        let mut d = [0.0; 2];
        for r in 0..2 {
            for i in 0..12 {
                let c = a[r * 12 + i];
                t[2 * r] += c * vals[i][0];
                t[2 * r + 1] += c * vals[i][1];
                d[r] += c * divs[i];
            }
        }
        (t, d)
    }
}

/// Stress space over a whole mesh with globally numbered degrees of freedom.
#[derive(Debug, Clone)]
pub struct AfwSpace {
    pub cells: Vec<AfwCell>,
    pub num_faces: usize,
    pub num_cells: usize,
}

impl AfwSpace {
    pub fn new(mesh: &Mesh) -> Result<AfwSpace, FeError> {
        let cells = (0..mesh.num_cells()).map(|c| AfwCell::new(mesh, c)).collect::<Result<Vec<_>, _>>()?;
        Ok(AfwSpace {
            cells,
            num_faces: mesh.num_faces(),
            num_cells: mesh.num_cells(),
        })
    }

    pub fn dim(&self) -> usize {
        6 * self.num_faces + 6 * self.num_cells
    }

    pub fn face_dof(&self, f: usize, row: usize, moment: usize) -> usize {
        (2 * f + row) * 3 + moment
    }

    pub fn interior_dof(&self, c: usize, row: usize, moment: usize) -> usize {
        6 * self.num_faces + (2 * c + row) * 3 + moment
    }

    /// Global index of local stress dof `l` (0..24) of cell `c`.
    pub fn global_dof(&self, c: usize, l: usize) -> usize {
        let row = l / 12;
        let k = l % 12;
        if k < 9 {
            self.face_dof(self.cells[c].faces[k / 3], row, k % 3)
        } else {
            self.interior_dof(c, row, k - 9)
        }
    }

    pub fn cell_dofs(&self, c: usize) -> [usize; SIGMA_DIM] {
        let mut d = [0; SIGMA_DIM];
        for (l, x) in d.iter_mut().enumerate() {
            *x = self.global_dof(c, l);
        }
        d
    }

    pub fn gather(&self, c: usize, global: &[f64]) -> [f64; SIGMA_DIM] {
        let mut a = [0.0; SIGMA_DIM];
        for (l, x) in a.iter_mut().enumerate() {
            *x = global[self.global_dof(c, l)];
        }
        a
    }
}

/// Values of the skew multiplier basis `lambda_j J` as row-major tensors.
pub fn skew_basis(b: &[f64; 3]) -> [Tensor2; 3] {
    [[0.0, b[0], -b[0], 0.0], [0.0, b[1], -b[1], 0.0], [0.0, b[2], -b[2], 0.0]]
}

/// Values of the displacement basis `e_k lambda_j`, index `3k + j`.
pub fn vector_p1_basis(b: &[f64; 3]) -> [[f64; 2]; 6] {
    [
        [b[0], 0.0],
        [b[1], 0.0],
        [b[2], 0.0],
        [0.0, b[0]],
        [0.0, b[1]],
        [0.0, b[2]],
    ]
}

/// Dense per-cell matrices of the mixed system:
/// stress mass (24x24), divergence `(v_k, div tau_i)` (6x24) and
/// skew moments `(mu_j, tau_i)` (3x24).
pub struct CellMatrices {
    pub mass: SMatrix<f64, 24, 24>,
    pub div: SMatrix<f64, 6, 24>,
    pub skew: SMatrix<f64, 3, 24>,
}

pub fn cell_matrices(mesh: &Mesh, cell: &AfwCell, c: usize, rule: &QuadratureRule) -> CellMatrices {
    let area = mesh.area(c);
    let mut row_mass = M12::zeros();
    let mut div = SMatrix::<f64, 6, 24>::zeros();
    let mut skew = SMatrix::<f64, 3, 24>::zeros();
    for (q, b) in rule.points.iter().enumerate() {
        let w = rule.weights[q] * area;
        let x = mesh.map_point(c, b);
        let (vals, divs) = cell.row_basis(&x);
        for i in 0..12 {
            for j in i..12 {
                row_mass[(i, j)] += w * (vals[i][0] * vals[j][0] + vals[i][1] * vals[j][1]);
            }
        }
        for i in 0..12 {
            for j in 0..3 {
                // row 0: (v = e_0 lambda_j), row 1: e_1 lambda_j
                div[(j, i)] += w * b[j] * divs[i];
                div[(3 + j, 12 + i)] += w * b[j] * divs[i];
                // J : tau = tau01 - tau10
                skew[(j, i)] += w * b[j] * vals[i][1];
                skew[(j, 12 + i)] -= w * b[j] * vals[i][0];
            }
        }
    }
    for i in 0..12 {
        for j in 0..i {
            row_mass[(i, j)] = row_mass[(j, i)];
        }
    }
    let mut mass = SMatrix::<f64, 24, 24>::zeros();
    mass.fixed_view_mut::<12, 12>(0, 0).copy_from(&row_mass);
    mass.fixed_view_mut::<12, 12>(12, 12).copy_from(&row_mass);
    CellMatrices { mass, div, skew }
}

////////////////////////////////////////////////////////////////////////////////

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_geometry, Domain};
    use nalgebra::{DMatrix, DVector};

    fn mesh() -> Mesh {
        build_geometry(Domain::LShape, 0.5).unwrap()
    }

    #[test]
    fn dimensions() {
        assert_eq!(SIGMA_DIM, 24);
        assert_eq!(V_DIM, 6);
        assert_eq!(LAMBDA_DIM, 3);
    }

    // Each basis function reproduces its own dof and annihilates the others.
    #[test]
    fn dual_basis() {
        let m = mesh();
        let cell = AfwCell::new(&m, 5).unwrap();
        let (s_pts, s_wts) = gauss_legendre_unit(4);
        for i in 0..12 {
            for (lf, &f) in cell.faces.iter().enumerate() {
                let face = &m.faces[f];
                let p = m.vertices[face.vertices[0]];
                let q = m.vertices[face.vertices[1]];
                for r in 0..3 {
                    let mut mom = 0.0;
                    for (k, &s) in s_pts.iter().enumerate() {
                        let x = p + (q - p) * s;
                        let (v, _) = cell.row_basis(&x);
                        mom += s_wts[k] * (v[i][0] * face.normal.x + v[i][1] * face.normal.y) * edge_legendre(s)[r];
                    }
                    let e = if i == 3 * lf + r { 1.0 } else { 0.0 };
                    assert!((mom - e).abs() < 1e-12, "i={i} face={lf} r={r} mom={mom}");
                }
            }
        }
    }

    // Divergence of every stress basis tensor lies in the P1 displacement space.
    #[test]
    fn divergence_lies_in_p1() {
        let m = mesh();
        let c = 3;
        let cell = AfwCell::new(&m, c).unwrap();
        let rule = make_quadrature(6).unwrap();
        for i in 0..12 {
            let mut a = DMatrix::<f64>::zeros(rule.len(), 3);
            let mut rhs = DVector::<f64>::zeros(rule.len());
            for (q, b) in rule.points.iter().enumerate() {
                let x = m.map_point(c, b);
                let (_, d) = cell.row_basis(&x);
                for j in 0..3 {
                    a[(q, j)] = b[j];
                }
                rhs[q] = d[i];
            }
            let sol = a.clone().svd(true, true).solve(&rhs, 1e-14).unwrap();
            let res = (a * sol - &rhs).norm();
            assert!(res <= 1e-12 * rhs.norm().max(1.0), "{res}");
        }
    }

    // The 3 moments per face determine any P2 normal trace: Gram matrix of the
    // Legendre moments against a P2 edge basis is nonsingular.
    #[test]
    fn normal_trace_richness() {
        let (s_pts, s_wts) = gauss_legendre_unit(3);
        let mut g = nalgebra::Matrix3::<f64>::zeros();
        for r in 0..3 {
            for k in 0..3 {
                g[(r, k)] = s_pts.iter().zip(&s_wts).map(|(s, w)| w * edge_legendre(*s)[r] * s.powi(k as i32)).sum();
            }
        }
        let sv = g.svd(false, false).singular_values;
        assert!(sv.min() / sv.max() > 1e-3);
    }

    // Shared face dofs give matching normal traces from both cells.
    #[test]
    fn normal_continuity_by_dof_sharing() {
        let m = mesh();
        let space = AfwSpace::new(&m).unwrap();
        let global: Vec<f64> = (0..space.dim()).map(|k| ((k * 7919) % 13) as f64 - 6.0).collect();
        let (s_pts, _) = gauss_legendre_unit(4);
        for face in m.faces.iter().filter(|f| !f.is_boundary()) {
            let p = m.vertices[face.vertices[0]];
            let q = m.vertices[face.vertices[1]];
            let a = space.gather(face.owner, &global);
            let b = space.gather(face.neighbor.unwrap(), &global);
            for &s in &s_pts {
                let x = p + (q - p) * s;
                let (ta, _) = space.cells[face.owner].eval(&a, &x);
                let (tb, _) = space.cells[face.neighbor.unwrap()].eval(&b, &x);
                for r in 0..2 {
                    let na = ta[2 * r] * face.normal.x + ta[2 * r + 1] * face.normal.y;
                    let nb = tb[2 * r] * face.normal.x + tb[2 * r + 1] * face.normal.y;
                    assert!((na - nb).abs() < 1e-11 * (1.0 + na.abs()));
                }
            }
        }
    }

    #[test]
    fn constant_tensor_is_representable() {
        let m = mesh();
        let c = 7;
        let cell = AfwCell::new(&m, c).unwrap();
        // Interpolate the constant tensor [[1,2],[3,4]] through its dofs.
        let t = [1.0, 2.0, 3.0, 4.0];
        let mut a = [0.0; 24];
        let (s_pts, s_wts) = gauss_legendre_unit(3);
        for row in 0..2 {
            let v = Point::new(t[2 * row], t[2 * row + 1]);
            for (lf, &f) in cell.faces.iter().enumerate() {
                let face = &m.faces[f];
                for r in 0..3 {
                    let mom: f64 = s_pts.iter().zip(&s_wts).map(|(s, w)| w * v.dot(&face.normal) * edge_legendre(*s)[r]).sum();
                    a[row * 12 + 3 * lf + r] = mom;
                }
            }
            // interior moments: mean of v against (1,0),(0,1), rotation has zero mean
            a[row * 12 + 9] = v.x;
            a[row * 12 + 10] = v.y;
            a[row * 12 + 11] = 0.0;
        }
        let rule = make_quadrature(3).unwrap();
        for b in &rule.points {
            let x = m.map_point(c, b);
            let (val, d) = cell.eval(&a, &x);
            for k in 0..4 {
                assert!((val[k] - t[k]).abs() < 1e-12);
            }
            assert!(d[0].abs() < 1e-11 && d[1].abs() < 1e-11);
        }
    }
}
