//! Stress-strain laws, their Newton tangents and the constants entering the
//! error bounds.
//!
//! Strains and stresses are stored as `[e11, e22, e12]` tensor components
//! (no engineering shear factor). The double contraction of two such
//! vectors therefore carries the weights `(1, 1, 2)`, see [`contract`].
//! Tangents are `3x3` matrices `D` with `D[(i, j)] = d sigma_i / d eps_j`,
//! where a variation of `eps_2` moves both off-diagonal entries.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fe::Tensor2;

/// Symmetric 2x2 tensor `[t11, t22, t12]`.
pub type Sym = [f64; 3];

const WEIGHTS: [f64; 3] = [1.0, 1.0, 2.0];

/// Radius of the strain ball (in units of `sqrt(rho_scale)`) on which the
/// documented Hencky-Mises Lipschitz bound holds.
pub const HM_STRAIN_BALL: f64 = 10.0;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum LawError {
    #[error("inadmissible parameter: {0}")]
    Inadmissible(String),
}

pub fn contract(a: &Sym, b: &Sym) -> f64 {
    a[0] * b[0] + a[1] * b[1] + 2.0 * a[2] * b[2]
}

pub fn sym_norm(a: &Sym) -> f64 {
    contract(a, a).sqrt()
}

pub fn sym_to_tensor(a: &Sym) -> Tensor2 {
    [a[0], a[2], a[2], a[1]]
}

pub fn tensor_to_sym(t: &Tensor2) -> Sym {
    [t[0], t[3], 0.5 * (t[1] + t[2])]
}

/// Constants of the growth, strong monotonicity and Lipschitz assumptions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LawConstants {
    pub c_gro: f64,
    pub c_mon: f64,
    pub c_lip: f64,
}

impl LawConstants {
    /// `sqrt(2) C_gro C_mon^-3`, the prefactor of the nonlinear bound.
    pub fn nonlinear_prefactor(&self) -> f64 {
        std::f64::consts::SQRT_2 * self.c_gro / self.c_mon.powi(3)
    }
}

/// Carreau-type Hencky-Mises law
/// `sigma = lt(rho) tr(eps) I + 2 mt(rho) eps` with
/// `mt(rho) = a + b (1 + rho^2)^(-1/2)`, `lt(rho) = kappa - 3/2 mt(rho)` and
/// `rho = ((tr(eps^2) - tr(eps)^2 / 2) / rho_scale)^(1/2)`, the magnitude of
/// the deviatoric strain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HenckyMises {
    pub a: f64,
    pub b: f64,
    pub kappa: f64,
    #[serde(default = "one")]
    pub rho_scale: f64,
}

fn one() -> f64 {
    1.0
}

impl HenckyMises {
    pub fn mu(&self, rho: f64) -> f64 {
        self.a + self.b / (1.0 + rho * rho).sqrt()
    }

    pub fn dmu(&self, rho: f64) -> f64 {
        -self.b * rho / (1.0 + rho * rho).powf(1.5)
    }

    /// Derivative of `mt` with respect to `tr(eps^2) - tr(eps)^2 / 2`.
    pub fn dmu_ddev(&self, rho: f64) -> f64 {
        -0.5 * self.b / (self.rho_scale * (1.0 + rho * rho).powf(1.5))
    }

    pub fn lambda(&self, rho: f64) -> f64 {
        self.kappa - 1.5 * self.mu(rho)
    }

    pub fn rho(&self, e: &Sym) -> f64 {
        let d = 0.5 * (e[0] - e[1]);
        ((2.0 * d * d + 2.0 * e[2] * e[2]) / self.rho_scale).sqrt()
    }

    /// Law whose Lamé functions are the constants `lambda`, `mu`.
    pub fn constant(lambda: f64, mu: f64) -> Self {
        HenckyMises {
            a: mu,
            b: 0.0,
            kappa: lambda + 1.5 * mu,
            rho_scale: 1.0,
        }
    }
}

/// Isotropic damage law `sigma = f(eps : C eps) C eps` with the damage curve
/// `f(s) = a_f + (1 - a_f) (1 + (s/s0)^(n/2))^(-1/n)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Damage {
    pub lambda: f64,
    pub mu: f64,
    pub a_f: f64,
    pub s0: f64,
    #[serde(default = "default_sharpness")]
    pub n: f64,
}

fn default_sharpness() -> f64 {
    16.0
}

impl Damage {
    /// Calibrates the curve to a bilinear plane-strain uniaxial response with
    /// knee stress `sigma_c` and residual slope `e_res`.
    pub fn calibrated(lambda: f64, mu: f64, sigma_c: f64, e_res: f64) -> Self {
        let e_ps = plane_strain_modulus(lambda, mu);
        Damage {
            lambda,
            mu,
            a_f: e_res / e_ps,
            s0: sigma_c * sigma_c / e_ps,
            n: default_sharpness(),
        }
    }

    pub fn f(&self, s: f64) -> f64 {
        let x = (s / self.s0).max(0.0);
        self.a_f + (1.0 - self.a_f) * (1.0 + x.powf(0.5 * self.n)).powf(-1.0 / self.n)
    }

    pub fn df(&self, s: f64) -> f64 {
        let x = (s / self.s0).max(0.0);
        if x == 0.0 {
            return 0.0;
        }
        let m = 0.5 * self.n;
        let xm = x.powf(m);
        -(1.0 - self.a_f) / self.n * (1.0 + xm).powf(-1.0 / self.n - 1.0) * m * xm / x / self.s0
    }

    fn c_apply(&self, e: &Sym) -> Sym {
        linear_stress(self.lambda, self.mu, e)
    }
}

/// Modulus of the uniaxial plane-strain response with vanishing lateral stress.
pub fn plane_strain_modulus(lambda: f64, mu: f64) -> f64 {
    4.0 * mu * (lambda + mu) / (lambda + 2.0 * mu)
}

fn linear_stress(lambda: f64, mu: f64, e: &Sym) -> Sym {
    let tr = e[0] + e[1];
    [lambda * tr + 2.0 * mu * e[0], lambda * tr + 2.0 * mu * e[1], 2.0 * mu * e[2]]
}

fn linear_tangent(lambda: f64, mu: f64) -> Matrix3<f64> {
    Matrix3::new(
        lambda + 2.0 * mu,
        lambda,
        0.0,
        lambda,
        lambda + 2.0 * mu,
        0.0,
        0.0,
        0.0,
        2.0 * mu,
    )
}

/// `a (b : .)` as a Voigt matrix.
fn outer(a: &Sym, b: &Sym) -> Matrix3<f64> {
    Matrix3::from_fn(|i, j| a[i] * b[j] * WEIGHTS[j])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConstitutiveLaw {
    Linear { lambda: f64, mu: f64 },
    HenckyMises(HenckyMises),
    Damage(Damage),
}

impl ConstitutiveLaw {
    pub fn validate(&self) -> Result<(), LawError> {
        let bad = |m: &str| Err(LawError::Inadmissible(m.into()));
        match self {
            ConstitutiveLaw::Linear { lambda, mu } => {
                if !(*mu > 0.0) {
                    return bad("linear law needs mu > 0");
                }
                if !(*lambda >= 0.0) {
                    return bad("linear law needs lambda >= 0");
                }
            }
            ConstitutiveLaw::HenckyMises(h) => {
                if !(h.a > 0.0) {
                    return bad("Hencky-Mises needs a > 0");
                }
                if !(h.b >= 0.0) {
                    return bad("Hencky-Mises needs b >= 0");
                }
                if !(h.kappa > 1.5 * (h.a + h.b)) {
                    return bad("Hencky-Mises needs kappa > 3(a+b)/2 so that the Lamé function lambda stays positive");
                }
                if !(h.rho_scale > 0.0) {
                    return bad("Hencky-Mises needs rho_scale > 0");
                }
            }
            ConstitutiveLaw::Damage(d) => {
                if !(d.mu > 0.0 && d.lambda >= 0.0) {
                    return bad("damage law needs mu > 0 and lambda >= 0 (uniform ellipticity of C)");
                }
                if !(d.a_f > 0.0 && d.a_f <= 1.0) {
                    return bad("damage law needs 0 < a_f <= 1");
                }
                if !(d.s0 > 0.0 && d.n >= 1.0) {
                    return bad("damage law needs s0 > 0 and n >= 1");
                }
            }
        }
        Ok(())
    }

    pub fn is_linear(&self) -> bool {
        matches!(self, ConstitutiveLaw::Linear { .. })
    }

    pub fn stress(&self, e: &Sym) -> Sym {
        match self {
            ConstitutiveLaw::Linear { lambda, mu } => linear_stress(*lambda, *mu, e),
            ConstitutiveLaw::HenckyMises(h) => {
                let rho = h.rho(e);
                let mu = h.mu(rho);
                let lt = h.kappa - 1.5 * mu;
                let tr = e[0] + e[1];
                [lt * tr + 2.0 * mu * e[0], lt * tr + 2.0 * mu * e[1], 2.0 * mu * e[2]]
            }
            ConstitutiveLaw::Damage(d) => {
                let ce = d.c_apply(e);
                let f = d.f(contract(e, &ce));
                [f * ce[0], f * ce[1], f * ce[2]]
            }
        }
    }

    pub fn tangent(&self, e: &Sym) -> Matrix3<f64> {
        match self {
            ConstitutiveLaw::Linear { lambda, mu } => linear_tangent(*lambda, *mu),
            ConstitutiveLaw::HenckyMises(h) => {
                let rho = h.rho(e);
                let mu = h.mu(rho);
                let dmu = h.dmu_ddev(rho);
                let tr = e[0] + e[1];
                // gradient of tr(eps^2) - tr(eps)^2 / 2, that is 2 eps - tr I
                let ddev = [e[0] - e[1], e[1] - e[0], 2.0 * e[2]];
                let dsig = [
                    dmu * (2.0 * e[0] - 1.5 * tr),
                    dmu * (2.0 * e[1] - 1.5 * tr),
                    dmu * 2.0 * e[2],
                ];
                linear_tangent(h.kappa - 1.5 * mu, mu) + outer(&dsig, &ddev)
            }
            ConstitutiveLaw::Damage(d) => {
                let ce = d.c_apply(e);
                let s = contract(e, &ce);
                let c = linear_tangent(d.lambda, d.mu);
                c * d.f(s) + outer(&ce, &ce) * (2.0 * d.df(s))
            }
        }
    }

    /// Tangent at zero strain, used for the initial guess of Newton's method.
    pub fn initial_tangent(&self) -> Matrix3<f64> {
        self.tangent(&[0.0; 3])
    }

    pub fn constants(&self) -> LawConstants {
        match self {
            ConstitutiveLaw::Linear { lambda, mu } => {
                let g = 2.0 * mu + 2.0 * lambda;
                LawConstants {
                    c_gro: g,
                    c_mon: (2.0 * mu).sqrt(),
                    c_lip: g,
                }
            }
            ConstitutiveLaw::HenckyMises(h) => {
                let mu0 = h.mu(0.0);
                let lam_max = (h.kappa - 1.5 * h.a).abs().max((h.kappa - 1.5 * (h.a + h.b)).abs());
                // |lt| |I (x) I| + 2 max mt + sup |d mt / d dev| |2 eps - 3/2 tr I| |2 eps - tr I|,
                // the last term split as 2 b sup r^2/(1+r^2)^1.5 + b R sup r/(1+r^2)^1.5.
                let c_lip = 2.0 * lam_max + 2.0 * (h.a + h.b) + 0.77 * h.b + 0.385 * h.b * HM_STRAIN_BALL;
                // |lt tr I| + |2 mt eps| with mt ranging over [a, a + b].
                let c_gro = [h.a, h.a + h.b]
                    .iter()
                    .map(|m| 2.0 * (h.kappa - 1.5 * m).abs() + 2.0 * m)
                    .fold(0.0, f64::max);
                LawConstants {
                    c_gro,
                    c_mon: (2.0 * mu0).sqrt(),
                    c_lip,
                }
            }
            ConstitutiveLaw::Damage(d) => {
                let c_upper = 2.0 * d.mu + 2.0 * d.lambda;
                let c_lower = 2.0 * d.mu;
                LawConstants {
                    c_gro: c_upper,
                    c_mon: (d.a_f * c_lower).sqrt(),
                    c_lip: c_upper,
                }
            }
        }
    }

    /// Shear modulus of the linear law, `None` otherwise.
    pub fn linear_moduli(&self) -> Option<(f64, f64)> {
        match self {
            ConstitutiveLaw::Linear { lambda, mu } => Some((*lambda, *mu)),
            _ => None,
        }
    }

    /// Characteristic strain magnitude where the law is nonlinear.
    pub fn strain_scale(&self) -> f64 {
        match self {
            ConstitutiveLaw::Linear { .. } => 1.0,
            ConstitutiveLaw::HenckyMises(h) => h.rho_scale.sqrt(),
            ConstitutiveLaw::Damage(d) => (d.s0 / (2.0 * d.mu)).sqrt(),
        }
    }

    /// Radius of the strain ball on which `c_lip` is valid.
    pub fn lipschitz_radius(&self) -> f64 {
        match self {
            ConstitutiveLaw::HenckyMises(h) => HM_STRAIN_BALL * h.rho_scale.sqrt(),
            _ => f64::INFINITY,
        }
    }
}

/// Solves the plane-strain uniaxial state (`sigma_22 = 0`, shear free) for a
/// given `eps_11` and returns `sigma_11`.
pub fn uniaxial_response(law: &ConstitutiveLaw, e11: f64) -> f64 {
    let mut e22 = 0.0;
    for _ in 0..100 {
        let e = [e11, e22, 0.0];
        let s = law.stress(&e);
        let d = law.tangent(&e)[(1, 1)];
        let step = s[1] / d;
        e22 -= step;
        if step.abs() <= 1e-15 * e11.abs().max(1e-300) {
            break;
        }
    }
    law.stress(&[e11, e22, 0.0])[0]
}

/// Tangent matrix as a `Vector3` map helper: `D eps`.
pub fn apply_tangent(d: &Matrix3<f64>, e: &Sym) -> Sym {
    let v = d * Vector3::new(e[0], e[1], e[2]);
    [v[0], v[1], v[2]]
}

////////////////////////////////////////////////////////////////////////////////

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn laws() -> Vec<ConstitutiveLaw> {
        vec![
            ConstitutiveLaw::Linear { lambda: 5.0, mu: 1.0 },
            ConstitutiveLaw::HenckyMises(HenckyMises {
                a: 0.05,
                b: 0.5,
                kappa: 17.0 / 3.0,
                rho_scale: 1.0,
            }),
            ConstitutiveLaw::Damage(Damage::calibrated(9.0 / 52.0 * 1e9, 3.0 / 26.0 * 1e9, 3e4, 3e7)),
        ]
    }

    fn random_strain(rng: &mut ChaCha8Rng, scale: f64) -> Sym {
        [
            rng.random_range(-3.0..3.0) * scale,
            rng.random_range(-3.0..3.0) * scale,
            rng.random_range(-3.0..3.0) * scale,
        ]
    }

    #[test]
    fn linear_identity_strain() {
        let law = ConstitutiveLaw::Linear { lambda: 5.0, mu: 1.0 };
        assert_eq!(law.stress(&[1.0, 1.0, 0.0]), [12.0, 12.0, 0.0]);
        let c = law.constants();
        assert_eq!(c.c_gro, 12.0);
        assert!((c.c_mon - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn zero_strain_gives_zero_stress() {
        for law in laws() {
            assert_eq!(law.stress(&[0.0; 3]), [0.0; 3]);
        }
    }

    #[test]
    fn carreau_constants() {
        let h = HenckyMises {
            a: 0.05,
            b: 0.5,
            kappa: 17.0 / 3.0,
            rho_scale: 1.0,
        };
        assert!((h.mu(0.0) - 0.55).abs() < 1e-15);
        let c = ConstitutiveLaw::HenckyMises(h).constants();
        assert!((c.c_mon - 1.1f64.sqrt()).abs() < 1e-15);
        assert!((c.c_gro - (0.1 + 2.0 * (17.0 / 3.0 - 0.075))).abs() < 1e-14);
    }

    #[test]
    fn constant_hencky_mises_is_linear() {
        let lin = ConstitutiveLaw::Linear { lambda: 5.0, mu: 1.0 };
        let hm = ConstitutiveLaw::HenckyMises(HenckyMises::constant(5.0, 1.0));
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let e = random_strain(&mut rng, 1.0);
            let a = lin.stress(&e);
            let b = hm.stress(&e);
            for k in 0..3 {
                assert!((a[k] - b[k]).abs() <= 1e-14 * sym_norm(&a).max(1.0));
            }
        }
        assert_eq!(lin.constants(), hm.constants());
    }

    #[test]
    fn linear_tangent_voigt() {
        let law = ConstitutiveLaw::Linear { lambda: 5.0, mu: 1.0 };
        let d = law.tangent(&[0.3, -0.1, 0.2]);
        assert_eq!(d, Matrix3::new(7.0, 5.0, 0.0, 5.0, 7.0, 0.0, 0.0, 0.0, 2.0));
    }

    #[test]
    fn hencky_mises_tangent_at_zero_is_linear() {
        let h = HenckyMises {
            a: 0.05,
            b: 0.5,
            kappa: 17.0 / 3.0,
            rho_scale: 1.0,
        };
        let d = ConstitutiveLaw::HenckyMises(h).tangent(&[0.0; 3]);
        assert_eq!(d, linear_tangent(h.lambda(0.0), h.mu(0.0)));
    }

    #[test]
    fn tangent_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for law in laws() {
            let scale = law.strain_scale();
            for _ in 0..100 {
                let e = random_strain(&mut rng, scale);
                let d = law.tangent(&e);
                let step = 1e-6 * scale;
                let mut fd = Matrix3::zeros();
                for j in 0..3 {
                    let mut p = e;
                    let mut m = e;
                    p[j] += step;
                    m[j] -= step;
                    let sp = law.stress(&p);
                    let sm = law.stress(&m);
                    for i in 0..3 {
                        fd[(i, j)] = (sp[i] - sm[i]) / (2.0 * step);
                    }
                }
                let rel = (fd - d).norm() / d.norm();
                assert!(rel <= 1e-6, "{law:?} {rel}");
            }
        }
    }

    #[test]
    fn damage_curve_product_increasing() {
        let ConstitutiveLaw::Damage(d) = laws()[2] else { unreachable!() };
        let mut prev = 0.0;
        for i in 0..=1600 {
            let s = 10f64.powf(-8.0 + i as f64 * 0.01);
            let v = s * d.f(s);
            assert!(v > prev);
            prev = v;
        }
    }

    #[test]
    fn damage_radial_stiffness_bounded_below() {
        let ConstitutiveLaw::Damage(d) = laws()[2] else { unreachable!() };
        for i in 0..=2000 {
            let s = d.s0 * 10f64.powf(-10.0 + i as f64 * 0.01);
            assert!(d.f(s) + 2.0 * s * d.df(s) >= d.a_f * (1.0 - 1e-12));
        }
    }

    #[test]
    fn damage_ellipticity_frame() {
        let law = laws()[2];
        let ConstitutiveLaw::Damage(d) = law else { unreachable!() };
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..1000 {
            let e = random_strain(&mut rng, law.strain_scale());
            let ce = d.c_apply(&e);
            let q = contract(&ce, &e);
            let s = contract(&law.stress(&e), &e);
            assert!(d.a_f * q <= s * (1.0 + 1e-12) && s <= q * (1.0 + 1e-12));
        }
    }

    #[test]
    fn damage_calibration_matches_bilinear_curve() {
        let lambda = 9.0 / 52.0 * 1e9;
        let mu = 3.0 / 26.0 * 1e9;
        let law = ConstitutiveLaw::Damage(Damage::calibrated(lambda, mu, 3e4, 3e7));
        let e_ps = plane_strain_modulus(lambda, mu);
        assert!((e_ps - 3e8 / 0.91).abs() < 1e-3);
        let eps_c = 3e4 / e_ps;
        for i in 0..=400 {
            let e11 = eps_c * 10f64.powf(-2.0 + i as f64 * 0.01);
            let target = if e11 <= eps_c { e_ps * e11 } else { 3e4 + 3e7 * (e11 - eps_c) };
            let got = uniaxial_response(&law, e11);
            assert!((got - target).abs() <= 0.05 * target, "{e11} {got} {target}");
        }
    }

    #[test]
    fn validation_names_violated_condition() {
        let bad = ConstitutiveLaw::HenckyMises(HenckyMises {
            a: 0.05,
            b: 0.5,
            kappa: 0.5,
            rho_scale: 1.0,
        });
        let err = bad.validate().unwrap_err().to_string();
        assert!(err.contains("kappa"));
        assert!(ConstitutiveLaw::Linear { lambda: 1.0, mu: 0.0 }.validate().is_err());
        for law in laws() {
            law.validate().unwrap();
        }
    }

    #[test]
    fn symmetric_strain_gives_symmetric_stress() {
        let t = sym_to_tensor(&laws()[1].stress(&[0.1, 0.2, 0.3]));
        assert_eq!(t[1], t[2]);
    }
}
