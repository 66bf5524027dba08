//! Guaranteed error estimators built from equilibrated stresses, residual
//! diagnostics, and energy errors against known solutions.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::constitutive::{apply_tangent, contract, sym_to_tensor, ConstitutiveLaw, Sym};
use crate::fe::p2::{shape_values, sym_grad};
use crate::fe::projection::eval_p1_tensor;
use crate::fe::quadrature::{gauss_legendre_unit, graded_rule};
use crate::fe::{make_quadrature, AfwSpace, DisplacementField, FeError, P1Tensor, P2Space, QuadratureRule, Tensor2};
use crate::mesh::{Mesh, Point};
use crate::reconstruction::StressField;
use crate::solver::Load;

/// Per-cell estimators.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LocalEstimators {
    pub disc: Vec<f64>,
    pub lin: Vec<f64>,
    pub quad: Vec<f64>,
    pub osc: Vec<f64>,
}

impl LocalEstimators {
    pub fn len(&self) -> usize {
        self.disc.len()
    }

    pub fn is_empty(&self) -> bool {
        self.disc.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GlobalEstimate {
    pub eta_disc: f64,
    pub eta_lin: f64,
    pub eta_quad: f64,
    pub eta_osc: f64,
    pub prefactor: f64,
    /// `prefactor * (eta_disc + eta_lin + eta_quad + eta_osc)`.
    pub total_bound: f64,
    /// `prefactor * (sum_T (sum of the four local terms)^2)^(1/2)`.
    pub unsplit_bound: f64,
}

/// Residual-type diagnostics per cell.
#[derive(Debug, Clone, Default)]
pub struct ResidualDiagnostics {
    pub sharp: Vec<f64>,
    pub flat: Vec<f64>,
}

/// Fields entering the estimators at one Newton iterate.
#[derive(Clone, Copy)]
pub struct EstimatorInput<'a> {
    pub mesh: &'a Mesh,
    pub space: &'a P2Space,
    pub afw: &'a AfwSpace,
    pub law: &'a ConstitutiveLaw,
    pub u: &'a DisplacementField,
    pub sigma_bar: &'a P1Tensor,
    pub disc: &'a StressField,
    pub lin: &'a StressField,
    pub load: Load<'a>,
}

/// Prefactor of the bound: `mu^(-1/2)` for the linear law,
/// `sqrt(2) C_gro C_mon^-3` otherwise.
pub fn prefactor(law: &ConstitutiveLaw) -> f64 {
    match law.linear_moduli() {
        Some((_, mu)) => mu.powf(-0.5),
        None => law.constants().nonlinear_prefactor(),
    }
}

/// Stress of the displacement field at barycentric point `b` of cell `c`.
pub fn discrete_stress(mesh: &Mesh, space: &P2Space, law: &ConstitutiveLaw, u: &DisplacementField, c: usize, b: &[f64; 3]) -> Tensor2 {
    let gl = mesh.barycentric_gradients(c);
    sym_to_tensor(&law.stress(&sym_grad(&u.gradient(space, c, b, &gl))))
}

fn sq_diff(a: &Tensor2, b: &Tensor2) -> f64 {
    (0..4).map(|k| (a[k] - b[k]).powi(2)).sum()
}

fn sq(a: &Tensor2) -> f64 {
    a.iter().map(|v| v * v).sum()
}

/// L2 projection of the load onto vector polynomials of degree `p` (1 or 2)
/// on cell `c`, returned as values at the points of `rule` together with the
/// load values there.
fn project_load(mesh: &Mesh, c: usize, load: Load, rule: &QuadratureRule, p: usize) -> (Vec<[f64; 2]>, Vec<[f64; 2]>) {
    let basis = |b: &[f64; 3]| -> Vec<f64> {
        if p == 1 {
            b.to_vec()
        } else {
            shape_values(b).to_vec()
        }
    };
    let n = if p == 1 { 3 } else { 6 };
    let mut m = DMatrix::<f64>::zeros(n, n);
    let mut r = [DVector::<f64>::zeros(n), DVector::<f64>::zeros(n)];
    let mut fvals = Vec::with_capacity(rule.len());
    for (q, b) in rule.points.iter().enumerate() {
        let w = rule.weights[q];
        let f = load(&mesh.map_point(c, b));
        let phi = basis(b);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] += w * phi[i] * phi[j];
            }
            r[0][i] += w * phi[i] * f[0];
            r[1][i] += w * phi[i] * f[1];
        }
        fvals.push(f);
    }
    let chol = m.cholesky().expect("local mass matrix is positive definite");
    let coef = [chol.solve(&r[0]), chol.solve(&r[1])];
    let proj = rule
        .points
        .iter()
        .map(|b| {
            let phi = basis(b);
            [(0..n).map(|i| phi[i] * coef[0][i]).sum(), (0..n).map(|i| phi[i] * coef[1][i]).sum()]
        })
        .collect();
    (proj, fvals)
}

/// Local estimators; `rule_high` should be of degree at least `nu + 3`.
pub fn local_estimators(input: &EstimatorInput, rule_high: &QuadratureRule) -> LocalEstimators {
    let m = input.mesh;
    let rows: Vec<[f64; 4]> = (0..m.num_cells())
        .into_par_iter()
        .map(|c| {
            let area = m.area(c);
            let (mut d, mut l, mut qd) = (0.0, 0.0, 0.0);
            for (q, b) in rule_high.points.iter().enumerate() {
                let w = rule_high.weights[q] * area;
                let x = m.map_point(c, b);
                let bar = eval_p1_tensor(&input.sigma_bar[c], b);
                let (sd, _) = input.disc.eval(input.afw, c, &x);
                let (sl, _) = input.lin.eval(input.afw, c, &x);
                let s = discrete_stress(m, input.space, input.law, input.u, c, b);
                d += w * sq_diff(&sd, &bar);
                l += w * sq(&sl);
                qd += w * sq_diff(&bar, &s);
            }
            let (proj, fvals) = project_load(m, c, input.load, rule_high, 1);
            let osc: f64 = (0..rule_high.len())
                .map(|q| rule_high.weights[q] * area * ((fvals[q][0] - proj[q][0]).powi(2) + (fvals[q][1] - proj[q][1]).powi(2)))
                .sum();
            [d.sqrt(), l.sqrt(), qd.sqrt(), m.diameter(c) / PI * osc.sqrt()]
        })
        .collect();
    LocalEstimators {
        disc: rows.iter().map(|r| r[0]).collect(),
        lin: rows.iter().map(|r| r[1]).collect(),
        quad: rows.iter().map(|r| r[2]).collect(),
        osc: rows.iter().map(|r| r[3]).collect(),
    }
}

/// `(4 sum_T eta_T^2)^(1/2)`.
pub fn global_norm(local: &[f64]) -> f64 {
    (4.0 * local.iter().map(|v| v * v).sum::<f64>()).sqrt()
}

pub fn global_estimate(local: &LocalEstimators, prefactor: f64) -> GlobalEstimate {
    let eta_disc = global_norm(&local.disc);
    let eta_lin = global_norm(&local.lin);
    let eta_quad = global_norm(&local.quad);
    let eta_osc = global_norm(&local.osc);
    let unsplit: f64 = (0..local.len())
        .map(|t| (local.disc[t] + local.lin[t] + local.quad[t] + local.osc[t]).powi(2))
        .sum();
    GlobalEstimate {
        eta_disc,
        eta_lin,
        eta_quad,
        eta_osc,
        prefactor,
        total_bound: prefactor * (eta_disc + eta_lin + eta_quad + eta_osc),
        unsplit_bound: prefactor * unsplit.sqrt(),
    }
}

/// `(C^-1 s, s)` for the plane linear law.
fn compliance_sq(lambda: f64, mu: f64, s: &Sym) -> f64 {
    let tr = s[0] + s[1];
    let k = lambda / (2.0 * (lambda + mu));
    let e = [(s[0] - k * tr) / (2.0 * mu), (s[1] - k * tr) / (2.0 * mu), s[2] / (2.0 * mu)];
    contract(s, &e)
}

/// Bound from the single equilibrated stress `disc + lin` applied directly
/// to the stress of `u`.
///
/// For the linear law the symmetric part of `sigma - sigma(u)` is measured in
/// the compliance norm, the skew-symmetric part of `sigma` is weighted by
/// `(2 mu)^(-1/2)` and the oscillation part by `mu^(-1/2)`, using
/// `||skew grad v||^2 = ||eps(v)||^2 - ||div v||^2` and
/// `||grad v||^2 <= 2 ||eps(v)||^2` for `v` vanishing on the boundary.
/// Otherwise the nonlinear prefactor multiplies
/// `(sum_T (h_T/pi ||f + div sigma||_T + ||sigma - sigma(u)||_T)^2)^(1/2)`.
pub fn basic_bound(input: &EstimatorInput, rule_high: &QuadratureRule) -> f64 {
    let m = input.mesh;
    let rows: Vec<[f64; 4]> = (0..m.num_cells())
        .into_par_iter()
        .map(|c| {
            let area = m.area(c);
            let (mut sym_c, mut skew, mut full, mut res) = (0.0, 0.0, 0.0, 0.0);
            for (q, b) in rule_high.points.iter().enumerate() {
                let w = rule_high.weights[q] * area;
                let x = m.map_point(c, b);
                let (sd, dd) = input.disc.eval(input.afw, c, &x);
                let (sl, dl) = input.lin.eval(input.afw, c, &x);
                let sh: Tensor2 = [sd[0] + sl[0], sd[1] + sl[1], sd[2] + sl[2], sd[3] + sl[3]];
                let s = discrete_stress(m, input.space, input.law, input.u, c, b);
                let f = (input.load)(&x);
                res += w * ((f[0] + dd[0] + dl[0]).powi(2) + (f[1] + dd[1] + dl[1]).powi(2));
                full += w * sq_diff(&sh, &s);
                skew += w * 0.5 * (sh[1] - sh[2]).powi(2);
                if let Some((lambda, mu)) = input.law.linear_moduli() {
                    let d = [sh[0] - s[0], sh[3] - s[3], 0.5 * (sh[1] + sh[2]) - s[1]];
                    sym_c += w * compliance_sq(lambda, mu, &d);
                }
            }
            [sym_c, skew, full.sqrt(), m.diameter(c) / PI * res.sqrt()]
        })
        .collect();
    match input.law.linear_moduli() {
        Some((_, mu)) => {
            let sym_c: f64 = rows.iter().map(|r| r[0]).sum();
            let skew: f64 = rows.iter().map(|r| r[1]).sum();
            let osc: f64 = rows.iter().map(|r| r[3] * r[3]).sum();
            sym_c.sqrt() + (2.0 * mu).powf(-0.5) * skew.sqrt() + mu.powf(-0.5) * osc.sqrt()
        }
        None => {
            let s: f64 = rows.iter().map(|r| (r[2] + r[3]).powi(2)).sum();
            prefactor(input.law) * s.sqrt()
        }
    }
}

/// Gradient of the strain of `u` on cell `c`: `d eps / d x_j` for `j = 0, 1`.
fn strain_derivatives(mesh: &Mesh, space: &P2Space, u: &DisplacementField, c: usize) -> [Sym; 2] {
    let gl = mesh.barycentric_gradients(c);
    let mut out = [[0.0; 3]; 2];
    for (i, g) in gl.iter().enumerate() {
        let mut b = [0.0; 3];
        b[i] = 1.0;
        let e = sym_grad(&u.gradient(space, c, &b, &gl));
        for k in 0..3 {
            out[0][k] += e[k] * g.x;
            out[1][k] += e[k] * g.y;
        }
    }
    out
}

/// Row-wise divergence of `sigma(eps(u))` at `b`.
fn stress_divergence(mesh: &Mesh, space: &P2Space, law: &ConstitutiveLaw, u: &DisplacementField, c: usize, b: &[f64; 3], de: &[Sym; 2]) -> [f64; 2] {
    let gl = mesh.barycentric_gradients(c);
    let e = sym_grad(&u.gradient(space, c, b, &gl));
    let d = law.tangent(&e);
    let s0 = sym_to_tensor(&apply_tangent(&d, &de[0]));
    let s1 = sym_to_tensor(&apply_tangent(&d, &de[1]));
    [s0[0] + s1[1], s0[2] + s1[3]]
}

/// Residual diagnostics `eta_sharp` and `eta_flat`; jumps are summed over
/// interior faces only.
pub fn residual_diagnostics(
    mesh: &Mesh,
    space: &P2Space,
    law: &ConstitutiveLaw,
    u: &DisplacementField,
    sigma_bar: &P1Tensor,
    load: Load,
    rule_high: &QuadratureRule,
) -> ResidualDiagnostics {
    let (gx, gw) = gauss_legendre_unit(8);
    // Squared face jumps weighted by h_F, for sigma_bar and sigma(u) - sigma_bar.
    let face_terms: Vec<[f64; 2]> = mesh
        .faces
        .par_iter()
        .map(|face| {
            let Some(nb) = face.neighbor else {
                return [0.0, 0.0];
            };
            let own = face.owner;
            let p = mesh.vertices[face.vertices[0]];
            let q = mesh.vertices[face.vertices[1]];
            let (mut js, mut jf) = (0.0, 0.0);
            for (s, w) in gx.iter().zip(&gw) {
                let x = p + (q - p) * *s;
                let ba = barycentric(mesh, own, &x);
                let bb = barycentric(mesh, nb, &x);
                let ta = eval_p1_tensor(&sigma_bar[own], &ba);
                let tb = eval_p1_tensor(&sigma_bar[nb], &bb);
                let sa = discrete_stress(mesh, space, law, u, own, &ba);
                let sb = discrete_stress(mesh, space, law, u, nb, &bb);
                let n = face.normal;
                for r in 0..2 {
                    let j = (ta[2 * r] - tb[2 * r]) * n.x + (ta[2 * r + 1] - tb[2 * r + 1]) * n.y;
                    let k = (sa[2 * r] - ta[2 * r] - sb[2 * r] + tb[2 * r]) * n.x + (sa[2 * r + 1] - ta[2 * r + 1] - sb[2 * r + 1] + tb[2 * r + 1]) * n.y;
                    js += w * face.length * j * j;
                    jf += w * face.length * k * k;
                }
            }
            [face.length * js, face.length * jf]
        })
        .collect();
    let rows: Vec<[f64; 2]> = (0..mesh.num_cells())
        .into_par_iter()
        .map(|c| {
            let area = mesh.area(c);
            let h = mesh.diameter(c);
            let gl = mesh.barycentric_gradients(c);
            let dbar = crate::fe::projection::div_p1_tensor(&sigma_bar[c], &gl);
            let de = strain_derivatives(mesh, space, u, c);
            let (proj, _) = project_load(mesh, c, load, rule_high, 2);
            let (mut a, mut b2) = (0.0, 0.0);
            for (q, b) in rule_high.points.iter().enumerate() {
                let w = rule_high.weights[q] * area;
                let ds = stress_divergence(mesh, space, law, u, c, b, &de);
                a += w * ((dbar[0] + proj[q][0]).powi(2) + (dbar[1] + proj[q][1]).powi(2));
                b2 += w * ((ds[0] - dbar[0]).powi(2) + (ds[1] - dbar[1]).powi(2));
            }
            let mut sharp = h * h * a;
            let mut flat = h * h * b2;
            for &f in &mesh.cell_faces[c] {
                sharp += face_terms[f][0];
                flat += face_terms[f][1];
            }
            [sharp.sqrt(), flat.sqrt()]
        })
        .collect();
    ResidualDiagnostics {
        sharp: rows.iter().map(|r| r[0]).collect(),
        flat: rows.iter().map(|r| r[1]).collect(),
    }
}

/// Barycentric coordinates of `x` in cell `c`.
pub fn barycentric(mesh: &Mesh, c: usize, x: &Point) -> [f64; 3] {
    let gl = mesh.barycentric_gradients(c);
    let p = mesh.cell_points(c);
    let mut b = [0.0; 3];
    for i in 0..3 {
        b[i] = gl[i].dot(&(x - p[(i + 1) % 3]));
    }
    b
}

/// Number of geometric grading levels toward a singular vertex.
pub const GRADING_LEVELS: usize = 3;
/// Quadrature degree of the energy error.
pub const ENERGY_DEGREE: usize = 10;

/// `||u - u_h||_en` for a known displacement gradient `grad_u`, with
/// quadrature graded toward `singular` (a vertex index) if given.
pub fn energy_error(
    mesh: &Mesh,
    space: &P2Space,
    law: &ConstitutiveLaw,
    u: &DisplacementField,
    grad_u: &(dyn Fn(&Point) -> Tensor2 + Sync),
    singular: Option<usize>,
) -> Result<f64, FeError> {
    let base = make_quadrature(ENERGY_DEGREE)?;
    let graded: Vec<QuadratureRule> = (0..3).map(|k| graded_rule(&base, k, GRADING_LEVELS)).collect();
    let total: f64 = (0..mesh.num_cells())
        .into_par_iter()
        .map(|c| {
            let corner = singular.and_then(|a| mesh.cells[c].iter().position(|&v| v == a));
            let rule = corner.map_or(&base, |k| &graded[k]);
            let gl = mesh.barycentric_gradients(c);
            let area = mesh.area(c);
            let mut s = 0.0;
            for (q, b) in rule.points.iter().enumerate() {
                let x = mesh.map_point(c, b);
                let gh = u.gradient(space, c, b, &gl);
                let g = grad_u(&x);
                let e = sym_grad(&[g[0] - gh[0], g[1] - gh[1], g[2] - gh[2], g[3] - gh[3]]);
                s += rule.weights[q] * area * contract(&law.stress(&e), &e);
            }
            s
        })
        .sum();
    Ok(total.max(0.0).sqrt())
}

////////////////////////////////////////////////////////////////////////////////

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_geometry, Domain};

    #[test]
    fn global_norm_has_factor_four() {
        let mut l = LocalEstimators {
            disc: vec![1.0],
            lin: vec![0.0],
            quad: vec![0.0],
            osc: vec![0.0],
        };
        let g = global_estimate(&l, 1.0);
        assert_eq!(g.eta_disc, 2.0);
        assert_eq!(g.total_bound, 2.0);
        l.lin[0] = 1.0;
        let g = global_estimate(&l, 3.0);
        assert_eq!(g.total_bound, 3.0 * 4.0);
        assert_eq!(g.unsplit_bound, 3.0 * 2.0);
    }

    #[test]
    fn prefactors() {
        assert_eq!(prefactor(&ConstitutiveLaw::Linear { lambda: 5.0, mu: 1.0 }), 1.0);
        let hm = ConstitutiveLaw::HenckyMises(crate::constitutive::HenckyMises {
            a: 0.05,
            b: 0.5,
            kappa: 17.0 / 3.0,
            rho_scale: 1.0,
        });
        let c = hm.constants();
        let expected = 2f64.sqrt() * c.c_gro / c.c_mon.powi(3);
        assert_eq!(prefactor(&hm), expected);
        // C_gro = 2 * 0.05 + 2 * (17/3 - 1.5 * 0.05), C_mon = sqrt(1.1).
        assert!((expected - 2f64.sqrt() * (0.1 + 2.0 * (17.0 / 3.0 - 0.075)) / 1.1f64.powf(1.5)).abs() < 1e-12);
    }

    #[test]
    fn barycentric_roundtrip() {
        let m = build_geometry(Domain::LShape, 0.5).unwrap();
        for c in 0..m.num_cells() {
            let b = [0.2, 0.3, 0.5];
            let x = m.map_point(c, &b);
            let r = barycentric(&m, c, &x);
            for k in 0..3 {
                assert!((r[k] - b[k]).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn oscillation_vanishes_for_affine_load() {
        let m = build_geometry(Domain::UnitSquare, 0.5).unwrap();
        let rule = make_quadrature(7).unwrap();
        let affine = |x: &Point| [1.0 + x.x, 2.0 - x.y];
        let (p, f) = project_load(&m, 0, &affine, &rule, 1);
        for q in 0..rule.len() {
            assert!((p[q][0] - f[q][0]).abs() < 1e-13 && (p[q][1] - f[q][1]).abs() < 1e-13);
        }
        let quad = |x: &Point| [x.x * x.y, x.y * x.y];
        let (p, f) = project_load(&m, 3, &quad, &rule, 2);
        for q in 0..rule.len() {
            assert!((p[q][0] - f[q][0]).abs() < 1e-13 && (p[q][1] - f[q][1]).abs() < 1e-13);
        }
    }

    #[test]
    fn energy_error_of_interpolated_affine_field_is_zero() {
        let m = build_geometry(Domain::LShape, 0.5).unwrap();
        let space = P2Space::new(&m);
        let law = ConstitutiveLaw::Linear { lambda: 5.0, mu: 1.0 };
        let u = DisplacementField::new(space.interpolate(|x| [x.x + 2.0 * x.y, -x.x]));
        let grad = |_: &Point| [1.0, 2.0, -1.0, 0.0];
        let origin = (0..m.num_vertices()).find(|&v| m.vertices[v].norm() == 0.0);
        assert!(energy_error(&m, &space, &law, &u, &grad, origin).unwrap() < 1e-12);
    }

    #[test]
    fn energy_error_matches_hand_value() {
        // u_h = 0 and u = (x, 0) on the unit square: ||u||_en^2 = lambda + 2 mu.
        let m = build_geometry(Domain::UnitSquare, 0.5).unwrap();
        let space = P2Space::new(&m);
        let law = ConstitutiveLaw::Linear { lambda: 5.0, mu: 1.0 };
        let u = DisplacementField::new(vec![0.0; space.dim()]);
        let grad = |_: &Point| [1.0, 0.0, 0.0, 0.0];
        let e = energy_error(&m, &space, &law, &u, &grad, Some(0)).unwrap();
        assert!((e - 7f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn compliance_inverts_the_linear_law() {
        let law = ConstitutiveLaw::Linear { lambda: 5.0, mu: 1.0 };
        let e = [0.3, -0.2, 0.7];
        let s = law.stress(&e);
        assert!((compliance_sq(5.0, 1.0, &s) - contract(&s, &e)).abs() < 1e-12);
    }

    #[test]
    fn sharp_vanishes_for_constant_stress_and_flat_for_linear_law() {
        let m = build_geometry(Domain::LShape, 0.5).unwrap();
        let space = P2Space::new(&m);
        let law = ConstitutiveLaw::Linear { lambda: 5.0, mu: 1.0 };
        let rule = make_quadrature(7).unwrap();
        let u = DisplacementField::new(space.interpolate(|x| [x.x * x.x + x.y, x.x * x.y]));
        let bar = crate::fe::project_tensor_p1(&m, &rule, |c, q, _| discrete_stress(&m, &space, &law, &u, c, &rule.points[q])).unwrap();
        let zero = |_: &Point| [0.0, 0.0];
        let d = residual_diagnostics(&m, &space, &law, &u, &bar, &zero, &rule);
        assert!(d.flat.iter().all(|v| *v < 1e-12));
        let constant: P1Tensor = vec![[[1.0, 2.0, 2.0, 3.0]; 3]; m.num_cells()];
        let d = residual_diagnostics(&m, &space, &law, &u, &constant, &zero, &rule);
        assert!(d.sharp.iter().all(|v| *v < 1e-12));
    }

    #[test]
    fn sharp_sees_a_known_jump() {
        // sigma_bar = e_x (x) e_x on cells left of x = 0.5, zero elsewhere: the
        // jump across the vertical middle line is 1 in the first row.
        let m = build_geometry(Domain::UnitSquare, 0.5).unwrap();
        let space = P2Space::new(&m);
        let law = ConstitutiveLaw::Linear { lambda: 5.0, mu: 1.0 };
        let rule = make_quadrature(4).unwrap();
        let u = DisplacementField::new(vec![0.0; space.dim()]);
        let bar: P1Tensor = (0..m.num_cells())
            .map(|c| {
                let centroid = m.map_point(c, &[1.0 / 3.0; 3]);
                if centroid.x < 0.5 {
                    [[1.0, 0.0, 0.0, 0.0]; 3]
                } else {
                    [[0.0; 4]; 3]
                }
            })
            .collect();
        let zero = |_: &Point| [0.0, 0.0];
        let d = residual_diagnostics(&m, &space, &law, &u, &bar, &zero, &rule);
        for c in 0..m.num_cells() {
            let mut expected = 0.0;
            for &f in &m.cell_faces[c] {
                let face = &m.faces[f];
                if let Some(nb) = face.neighbor {
                    let jump = (bar[face.owner][0][0] - bar[nb][0][0]) * face.normal.x;
                    expected += face.length * face.length * jump * jump;
                }
            }
            assert!((d.sharp[c] - expected.sqrt()).abs() < 1e-13);
        }
        assert!(d.sharp.iter().any(|v| *v > 0.1));
    }
}
