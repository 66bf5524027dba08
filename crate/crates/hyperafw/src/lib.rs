//! Finite element solver and guaranteed a posteriori error control for
//! small-strain hyperelasticity in two dimensions.
//!
//! Displacements are approximated by continuous P2 elements and solved with
//! Newton's method. From each iterate, patchwise equilibrated and weakly
//! symmetric H(div) stresses are reconstructed, giving guaranteed error
//! bounds split into discretization, linearization, quadrature and data
//! oscillation parts. These drive an adaptive loop over meshes, Newton
//! iterations and quadrature degrees.

pub mod adaptivity;
pub mod cases;
pub mod cli;
pub mod constitutive;
pub mod estimators;
pub mod fe;
pub mod mesh;
pub mod reconstruction;
pub mod solver;

use thiserror::Error;

#[derive(Error, Debug)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Mesh(#[from] mesh::MeshError),
    #[error(transparent)]
    Fe(#[from] fe::FeError),
    #[error(transparent)]
    Law(#[from] constitutive::LawError),
    #[error(transparent)]
    Case(#[from] cases::CaseError),
    #[error(transparent)]
    Solver(#[from] solver::SolverError),
    #[error(transparent)]
    Reconstruction(#[from] reconstruction::ReconstructionError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Process exit code: 2 for configuration errors, 3 for solver failures,
    /// 4 for violated internal invariants.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Law(_) | Error::Case(_) => 2,
            Error::Mesh(mesh::MeshError::InfeasibleSize { .. }) | Error::Mesh(mesh::MeshError::Parse(_)) => 2,
            Error::Fe(fe::FeError::UnsupportedDegree(_)) => 2,
            Error::Solver(_) => 3,
            Error::Io(_) | Error::Csv(_) => 2,
            _ => 4,
        }
    }
}
