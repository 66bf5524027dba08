//! Elementwise L2 projections onto P1 tensors and vectors.
//!
//! P1 fields are stored by their nodal values at the three cell vertices,
//! i.e. as coefficients of the barycentric basis.

use nalgebra::{Matrix3, Vector3};

use crate::mesh::{Mesh, Point};

use super::quadrature::QuadratureRule;
use super::{FeError, Tensor2};

/// Piecewise P1 tensor field: per cell, the tensor at each vertex.
pub type P1Tensor = Vec<[Tensor2; 3]>;
/// Piecewise P1 vector field: per cell, the vector at each vertex.
pub type P1Vector = Vec<[[f64; 2]; 3]>;

pub fn eval_p1_tensor(coef: &[Tensor2; 3], b: &[f64; 3]) -> Tensor2 {
    let mut t = [0.0; 4];
    for j in 0..3 {
        for k in 0..4 {
            t[k] += b[j] * coef[j][k];
        }
    }
    t
}

pub fn eval_p1_vector(coef: &[[f64; 2]; 3], b: &[f64; 3]) -> [f64; 2] {
    [
        b[0] * coef[0][0] + b[1] * coef[1][0] + b[2] * coef[2][0],
        b[0] * coef[0][1] + b[1] * coef[1][1] + b[2] * coef[2][1],
    ]
}

/// Row-wise divergence of a P1 tensor on a cell.
pub fn div_p1_tensor(coef: &[Tensor2; 3], gl: &[Point; 3]) -> [f64; 2] {
    let mut d = [0.0; 2];
    for j in 0..3 {
        d[0] += coef[j][0] * gl[j].x + coef[j][1] * gl[j].y;
        d[1] += coef[j][2] * gl[j].x + coef[j][3] * gl[j].y;
    }
    d
}

fn local_mass(rule: &QuadratureRule) -> Matrix3<f64> {
    let mut m = Matrix3::zeros();
    for (q, b) in rule.points.iter().enumerate() {
        for i in 0..3 {
            for j in 0..3 {
                m[(i, j)] += rule.weights[q] * b[i] * b[j];
            }
        }
    }
    m
}

/// Projects a tensor field onto P1 on cell `c`, integrating with `rule`.
/// `field(q, x)` is the integrand at quadrature point `q` with physical coordinates `x`.
pub fn project_tensor_cell<F: FnMut(usize, &Point) -> Tensor2>(
    mesh: &Mesh,
    c: usize,
    rule: &QuadratureRule,
    mut field: F,
) -> Result<[Tensor2; 3], FeError> {
    let m = local_mass(rule);
    let lu = m.lu();
    let mut rhs = [Vector3::zeros(); 4];
    for (q, b) in rule.points.iter().enumerate() {
        let x = mesh.map_point(c, b);
        let s = field(q, &x);
        for k in 0..4 {
            for j in 0..3 {
                rhs[k][j] += rule.weights[q] * b[j] * s[k];
            }
        }
    }
    let mut out = [[0.0; 4]; 3];
    for k in 0..4 {
        let sol = lu.solve(&rhs[k]).ok_or(FeError::SingularLocal(c))?;
        for j in 0..3 {
            out[j][k] = sol[j];
        }
    }
    Ok(out)
}

/// Projection of a tensor field onto piecewise P1 over the whole mesh.
pub fn project_tensor_p1<F: Fn(usize, usize, &Point) -> Tensor2 + Sync>(
    mesh: &Mesh,
    rule: &QuadratureRule,
    field: F,
) -> Result<P1Tensor, FeError> {
    use rayon::prelude::*;
    (0..mesh.num_cells())
        .into_par_iter()
        .map(|c| project_tensor_cell(mesh, c, rule, |q, x| field(c, q, x)))
        .collect()
}

/// Projection of a vector field onto piecewise P1.
pub fn project_vector_p1<F: Fn(&Point) -> [f64; 2]>(mesh: &Mesh, rule: &QuadratureRule, field: F) -> Result<P1Vector, FeError> {
    let lu = local_mass(rule).lu();
    let mut out = Vec::with_capacity(mesh.num_cells());
    for c in 0..mesh.num_cells() {
        let mut rhs = [Vector3::zeros(); 2];
        for (q, b) in rule.points.iter().enumerate() {
            let v = field(&mesh.map_point(c, b));
            for k in 0..2 {
                for j in 0..3 {
                    rhs[k][j] += rule.weights[q] * b[j] * v[k];
                }
            }
        }
        let mut cell = [[0.0; 2]; 3];
        for k in 0..2 {
            let sol = lu.solve(&rhs[k]).ok_or(FeError::SingularLocal(c))?;
            for j in 0..3 {
                cell[j][k] = sol[j];
            }
        }
        out.push(cell);
    }
    Ok(out)
}

////////////////////////////////////////////////////////////////////////////////
