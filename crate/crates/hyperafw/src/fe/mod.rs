//! Finite element spaces: P2 vector Lagrange displacements, the local
//! weakly symmetric stress triple (row-wise BDM2 stresses, P1 displacements,
//! skew P1 multipliers), rigid-body modes, and L2 projections.

pub mod afw;
pub mod p2;
pub mod projection;
pub mod quadrature;
pub mod rigid;

use thiserror::Error;

pub use afw::{AfwCell, AfwSpace};
pub use p2::{DisplacementField, P2Space};
pub use projection::{project_tensor_p1, project_vector_p1, P1Tensor, P1Vector};
pub use quadrature::{make_quadrature, QuadratureRule};
pub use rigid::rigid_body_modes;

#[derive(Error, Debug, Clone)]
pub enum FeError {
    #[error("quadrature degree {0} is outside the supported range 1..=20")]
    UnsupportedDegree(usize),
    #[error("singular local matrix on cell {0}")]
    SingularLocal(usize),
}

/// Row-major 2x2 tensor `[t00, t01, t10, t11]`.
pub type Tensor2 = [f64; 4];

pub fn tensor_dot(a: &Tensor2, b: &Tensor2) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + a[3] * b[3]
}
