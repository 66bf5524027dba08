//! Benchmark problems: the L-shaped domain with a singular analytical
//! solution, and the notched plate under prescribed end displacements.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::constitutive::{ConstitutiveLaw, Damage, HenckyMises};
use crate::fe::{P2Space, Tensor2};
use crate::mesh::{Domain, Point, NOTCH_CENTER, NOTCH_RADIUS};
use crate::solver::{full_dirichlet, Dirichlet};

#[derive(Error, Debug, Clone, PartialEq)]
pub enum CaseError {
    #[error("the displacement gradient is singular at the origin")]
    Singular,
    #[error("boundary node ({0}, {1}) does not lie on a known boundary part")]
    UnclassifiedBoundary(f64, f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CaseName {
    LShape,
    NotchedPlate,
}

impl CaseName {
    pub fn domain(&self) -> Domain {
        match self {
            CaseName::LShape => Domain::LShape,
            CaseName::NotchedPlate => Domain::NotchedPlate,
        }
    }
}

/// Singular solution on `(-1,1)^2 \ [0,1]x[-1,0]`:
/// `u = r^alpha / (2 mu) (cos(alpha t) - cos((alpha-2) t), A sin(alpha t) + sin((alpha-2) t))`
/// with the polar angle `t` in `[0, 3 pi / 2]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LShapeSolution {
    pub mu: f64,
    pub lambda: f64,
    pub alpha: f64,
    pub a: f64,
}

impl Default for LShapeSolution {
    fn default() -> Self {
        LShapeSolution {
            mu: 1.0,
            lambda: 5.0,
            alpha: 0.6,
            a: 31.0 / 9.0,
        }
    }
}

/// Polar angle in `[0, 2 pi)`.
fn angle(x: &Point) -> f64 {
    let t = x.y.atan2(x.x);
    if t < 0.0 {
        t + 2.0 * PI
    } else {
        t
    }
}

impl LShapeSolution {
    pub fn law(&self) -> ConstitutiveLaw {
        ConstitutiveLaw::Linear {
            lambda: self.lambda,
            mu: self.mu,
        }
    }

    fn profile(&self, t: f64) -> ([f64; 2], [f64; 2]) {
        let (al, bl) = (self.alpha, self.alpha - 2.0);
        let g = [(al * t).cos() - (bl * t).cos(), self.a * (al * t).sin() + (bl * t).sin()];
        let dg = [-al * (al * t).sin() + bl * (bl * t).sin(), self.a * al * (al * t).cos() + bl * (bl * t).cos()];
        (g, dg)
    }

    pub fn displacement(&self, x: &Point) -> [f64; 2] {
        let r = x.norm();
        if r == 0.0 {
            return [0.0, 0.0];
        }
        let (g, _) = self.profile(angle(x));
        let s = r.powf(self.alpha) / (2.0 * self.mu);
        [s * g[0], s * g[1]]
    }

    /// `[du0/dx, du0/dy, du1/dx, du1/dy]`.
    pub fn gradient(&self, x: &Point) -> Result<Tensor2, CaseError> {
        let r = x.norm();
        if r == 0.0 {
            return Err(CaseError::Singular);
        }
        let t = angle(x);
        let (g, dg) = self.profile(t);
        let s = r.powf(self.alpha - 1.0) / (2.0 * self.mu);
        let (c, sn) = (t.cos(), t.sin());
        let mut out = [0.0; 4];
        for i in 0..2 {
            let dr = self.alpha * g[i] * s;
            let dt = dg[i] * s;
            out[2 * i] = c * dr - sn * dt;
            out[2 * i + 1] = sn * dr + c * dt;
        }
        Ok(out)
    }

    pub fn stress(&self, x: &Point) -> Result<Tensor2, CaseError> {
        let g = self.gradient(x)?;
        let e = crate::fe::p2::sym_grad(&g);
        Ok(crate::constitutive::sym_to_tensor(&self.law().stress(&e)))
    }

    pub fn dirichlet(&self, space: &P2Space) -> Dirichlet {
        full_dirichlet(space, |x| self.displacement(x))
    }
}

/// Carreau Hencky-Mises parameters of the L-shape study.
pub fn l_shape_hencky_mises() -> ConstitutiveLaw {
    ConstitutiveLaw::HenckyMises(HenckyMises {
        a: 1.0 / 20.0,
        b: 0.5,
        kappa: 17.0 / 3.0,
        rho_scale: 1.0,
    })
}

/// Notched plate `(0,10) x (-10,10)` minus the disc of radius 2 around
/// `(0, 11)`: `u_x = 0` on `x = 0`, `u_y = -+displacement` on `y = -+10`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NotchedPlate {
    pub displacement: f64,
    pub sigma_c: f64,
    pub young: f64,
    pub e_res: f64,
    pub mu: f64,
    pub lambda: f64,
}

impl Default for NotchedPlate {
    fn default() -> Self {
        NotchedPlate {
            displacement: 1.1e-3,
            sigma_c: 3e4,
            young: 3e8,
            e_res: 3e7,
            mu: 3e9 / 26.0,
            lambda: 9e9 / 52.0,
        }
    }
}

/// Ratio `a / (a + b)` of the plate's Hencky-Mises shear function.
pub const PLATE_SHEAR_RESIDUAL: f64 = 0.25;

/// Relative distance from the notch circle within which boundary nodes are
/// attributed to the notch.
const ARC_TOLERANCE: f64 = 0.1;

impl NotchedPlate {
    pub fn linear(&self) -> ConstitutiveLaw {
        ConstitutiveLaw::Linear {
            lambda: self.lambda,
            mu: self.mu,
        }
    }

    /// Hencky-Mises law with the elastic moduli at zero strain and a shear
    /// modulus softening to a quarter once the deviatoric strain exceeds
    /// `sigma_c / E`.
    pub fn hencky_mises(&self) -> ConstitutiveLaw {
        ConstitutiveLaw::HenckyMises(HenckyMises {
            a: PLATE_SHEAR_RESIDUAL * self.mu,
            b: (1.0 - PLATE_SHEAR_RESIDUAL) * self.mu,
            kappa: self.lambda + 1.5 * self.mu,
            rho_scale: (self.sigma_c / self.young).powi(2),
        })
    }

    pub fn damage(&self) -> ConstitutiveLaw {
        ConstitutiveLaw::Damage(Damage::calibrated(self.lambda, self.mu, self.sigma_c, self.e_res))
    }

    /// Componentwise Dirichlet data on the boundary nodes of `space`.
    pub fn dirichlet(&self, space: &P2Space) -> Result<Dirichlet, CaseError> {
        let mut d = Dirichlet::none(space.dim());
        let tol = 1e-9;
        let center = Point::new(NOTCH_CENTER.0, NOTCH_CENTER.1);
        for n in 0..space.num_nodes {
            if !space.boundary_node[n] {
                continue;
            }
            let x = space.node_coords[n];
            let mut known = false;
            if x.x.abs() < tol {
                d.fixed[2 * n] = true;
                d.values[2 * n] = 0.0;
                known = true;
            }
            if (x.y + 10.0).abs() < tol {
                d.fixed[2 * n + 1] = true;
                d.values[2 * n + 1] = -self.displacement;
                known = true;
            }
            if (x.y - 10.0).abs() < tol {
                d.fixed[2 * n + 1] = true;
                d.values[2 * n + 1] = self.displacement;
                known = true;
            }
            // Midpoints of chords on the notch lie inside the arc by at most the sagitta.
            known |= (x.x - 10.0).abs() < tol || ((x - center).norm() - NOTCH_RADIUS).abs() < ARC_TOLERANCE * NOTCH_RADIUS;
            if !known {
                return Err(CaseError::UnclassifiedBoundary(x.x, x.y));
            }
        }
        Ok(d)
    }
}

////////////////////////////////////////////////////////////////////////////////
