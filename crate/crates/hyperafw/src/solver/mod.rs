//! Assembly and Newton solution of the conforming P2 problem with strongly
//! imposed (per-component) Dirichlet conditions.

pub mod lu;
pub mod ordering;
pub mod sparse;

use rayon::prelude::*;
use thiserror::Error;

use crate::constitutive::{apply_tangent, ConstitutiveLaw, Sym};
use crate::fe::p2::{shape_grads, shape_values};
use crate::fe::{P2Space, QuadratureRule};
use crate::mesh::{Mesh, Point};

use lu::{LuFactors, SymbolicLu};
use ordering::{nested_dissection, Graph};
use sparse::CsrMatrix;

pub const MAX_NEWTON_ITERATIONS: usize = 50;
pub const RESIDUAL_TOLERANCE: f64 = 1e-12;
/// Smallest step length tried by [`NewtonSolver::damped_step`].
pub const MIN_STEP: f64 = 1.0 / 1024.0;

#[derive(Error, Debug, Clone)]
pub enum SolverError {
    #[error("zero pivot {value:e} at elimination step {step}")]
    ZeroPivot { step: usize, value: f64 },
    #[error("Newton did not converge in {iterations} iterations (residual history {residuals:?})")]
    NonConvergence { iterations: usize, residuals: Vec<f64> },
    #[error("non-finite values in the Newton iterate")]
    NotFinite,
}

/// Body force as a function of position.
pub type Load<'a> = &'a (dyn Fn(&Point) -> [f64; 2] + Sync);

pub fn zero_load(_: &Point) -> [f64; 2] {
    [0.0, 0.0]
}

/// Prescribed values on a subset of the P2 dofs.
#[derive(Debug, Clone)]
pub struct Dirichlet {
    pub fixed: Vec<bool>,
    pub values: Vec<f64>,
}

impl Dirichlet {
    pub fn none(dim: usize) -> Self {
        Dirichlet {
            fixed: vec![false; dim],
            values: vec![0.0; dim],
        }
    }

    /// The vector equal to the data on fixed dofs and zero elsewhere.
    pub fn lifting(&self) -> Vec<f64> {
        self.fixed
            .iter()
            .zip(&self.values)
            .map(|(&f, &v)| if f { v } else { 0.0 })
            .collect()
    }
}

#[derive(Clone, Copy)]
pub struct Problem<'a> {
    pub mesh: &'a Mesh,
    pub space: &'a P2Space,
    pub law: ConstitutiveLaw,
    pub load: Load<'a>,
    pub dirichlet: &'a Dirichlet,
}

/// Local dofs -> Voigt strain rows `[e11, e22, e12]`.
pub fn strain_matrix(b: &[f64; 3], gl: &[Point; 3]) -> [[f64; 12]; 3] {
    let g = shape_grads(b, gl);
    let mut m = [[0.0; 12]; 3];
    for i in 0..6 {
        m[0][2 * i] = g[i].x;
        m[2][2 * i] = 0.5 * g[i].y;
        m[1][2 * i + 1] = g[i].y;
        m[2][2 * i + 1] = 0.5 * g[i].x;
    }
    m
}

pub fn local_strain(bm: &[[f64; 12]; 3], ul: &[f64; 12]) -> Sym {
    let mut e = [0.0; 3];
    for r in 0..3 {
        for a in 0..12 {
            e[r] += bm[r][a] * ul[a];
        }
    }
    e
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Linearization {
    /// Tangent and nonlinear residual at the given state.
    Newton,
    /// Zero-strain tangent, with the residual of the linearized law.
    Initial,
}

struct ElementSystem {
    k: [[f64; 12]; 12],
    r: [f64; 12],
}

/// Nonlinear solver with cached pattern, scatter map and symbolic factorization.
pub struct NewtonSolver<'a> {
    pub problem: Problem<'a>,
    matrix: CsrMatrix,
    scatter: Vec<[usize; 144]>,
    symbolic: SymbolicLu,
}

/// One completed linearized solve.
pub struct NewtonIterate<'s> {
    pub k: usize,
    pub u: &'s [f64],
    pub u_prev: &'s [f64],
    pub residual: f64,
}

pub enum Control {
    Continue,
    Stop,
}

#[derive(Debug, Clone)]
pub struct NewtonOutcome {
    pub u: Vec<f64>,
    pub u_prev: Vec<f64>,
    pub iterations: usize,
    pub residuals: Vec<f64>,
    pub reference_residual: f64,
}

impl<'a> NewtonSolver<'a> {
    pub fn new(problem: Problem<'a>) -> NewtonSolver<'a> {
        let space = problem.space;
        let dofs: Vec<[usize; 12]> = (0..problem.mesh.num_cells()).map(|c| space.cell_dofs(c)).collect();
        let matrix = CsrMatrix::from_elements(space.dim(), dofs.iter().map(|d| &d[..]));
        let scatter = dofs
            .iter()
            .map(|d| {
                let mut s = [0usize; 144];
                for a in 0..12 {
                    for b in 0..12 {
                        s[a * 12 + b] = matrix.find(d[a], d[b]).unwrap();
                    }
                }
                s
            })
            .collect();
        let graph = Graph::from_elements(space.num_nodes, space.cell_nodes.iter().map(|c| &c[..]));
        let node_order = nested_dissection(&space.node_coords, &graph);
        let order: Vec<usize> = node_order
            .iter()
            .flat_map(|&n| [2 * n, 2 * n + 1])
            .filter(|&d| !problem.dirichlet.fixed[d])
            .collect();
        let symbolic = SymbolicLu::new(&matrix, order);
        NewtonSolver {
            problem,
            matrix,
            scatter,
            symbolic,
        }
    }

    pub fn num_free(&self) -> usize {
        self.symbolic.n
    }

    pub fn factor_nnz(&self) -> usize {
        self.symbolic.factor_nnz()
    }

    fn element(&self, c: usize, u: &[f64], rule: &QuadratureRule, mode: Linearization, with_matrix: bool) -> ElementSystem {
        let p = &self.problem;
        let dofs = p.space.cell_dofs(c);
        let mut ul = [0.0; 12];
        for a in 0..12 {
            ul[a] = u[dofs[a]];
        }
        let gl = p.mesh.barycentric_gradients(c);
        let area = p.mesh.area(c);
        let d0 = p.law.initial_tangent();
        let mut es = ElementSystem {
            k: [[0.0; 12]; 12],
            r: [0.0; 12],
        };
        for (q, b) in rule.points.iter().enumerate() {
            let w = rule.weights[q] * area;
            let bm = strain_matrix(b, &gl);
            let e = local_strain(&bm, &ul);
            let (sigma, d) = match mode {
                Linearization::Newton => (p.law.stress(&e), if with_matrix { p.law.tangent(&e) } else { d0 }),
                Linearization::Initial => (apply_tangent(&d0, &e), d0),
            };
            let x = p.mesh.map_point(c, b);
            let f = (p.load)(&x);
            let phi = shape_values(b);
            for a in 0..12 {
                let ev = [bm[0][a], bm[1][a], 2.0 * bm[2][a]];
                let load = if a % 2 == 0 { f[0] } else { f[1] } * phi[a / 2];
                es.r[a] += w * (load - (ev[0] * sigma[0] + ev[1] * sigma[1] + ev[2] * sigma[2]));
                if with_matrix {
                    // D B_b for each column b
                    for bb in 0..12 {
                        let col = [bm[0][bb], bm[1][bb], bm[2][bb]];
                        let ds = apply_tangent(&d, &col);
                        es.k[a][bb] += w * (ev[0] * ds[0] + ev[1] * ds[1] + ev[2] * ds[2]);
                    }
                }
            }
        }
        es
    }

    /// Assembles the (optionally) linearized matrix and the residual vector,
    /// with residual entries of fixed dofs set to zero.
    fn assemble(&mut self, u: &[f64], rule: &QuadratureRule, mode: Linearization, with_matrix: bool) -> Vec<f64> {
        let nc = self.problem.mesh.num_cells();
        let mut residual = vec![0.0; self.problem.space.dim()];
        if with_matrix {
            self.matrix.clear();
        }
        const CHUNK: usize = 4096;
        let mut start = 0;
        while start < nc {
            let end = (start + CHUNK).min(nc);
            let local: Vec<ElementSystem> = (start..end)
                .into_par_iter()
                .map(|c| self.element(c, u, rule, mode, with_matrix))
                .collect();
            for (i, es) in local.iter().enumerate() {
                let c = start + i;
                let dofs = self.problem.space.cell_dofs(c);
                for a in 0..12 {
                    residual[dofs[a]] += es.r[a];
                }
                if with_matrix {
                    let s = &self.scatter[c];
                    for a in 0..12 {
                        for b in 0..12 {
                            self.matrix.values[s[a * 12 + b]] += es.k[a][b];
                        }
                    }
                }
            }
            start = end;
        }
        for (r, &f) in residual.iter_mut().zip(&self.problem.dirichlet.fixed) {
            if f {
                *r = 0.0;
            }
        }
        residual
    }

    /// Euclidean norm of the free part of the nonlinear residual.
    pub fn residual_norm(&mut self, u: &[f64], rule: &QuadratureRule) -> f64 {
        norm(&self.assemble(u, rule, Linearization::Newton, false))
    }

    fn solve_with(&mut self, rhs: &[f64]) -> Result<Vec<f64>, SolverError> {
        let lu: LuFactors = self.symbolic.factor(&self.matrix)?;
        Ok(lu.solve(&self.symbolic, rhs))
    }

    /// Initial guess: linearized problem with the zero-strain tangent.
    pub fn initial_guess(&mut self, rule: &QuadratureRule) -> Result<Vec<f64>, SolverError> {
        let lift = self.problem.dirichlet.lifting();
        let r = self.assemble(&lift, rule, Linearization::Initial, true);
        let du = self.solve_with(&r)?;
        Ok(add(&lift, &du))
    }

    /// One Newton update `u^k` from `u^{k-1}` with the given rule.
    pub fn step(&mut self, u_prev: &[f64], rule: &QuadratureRule) -> Result<Vec<f64>, SolverError> {
        let r = self.assemble(u_prev, rule, Linearization::Newton, true);
        let du = self.solve_with(&r)?;
        let u = add(u_prev, &du);
        if u.iter().any(|v| !v.is_finite()) {
            return Err(SolverError::NotFinite);
        }
        Ok(u)
    }

    /// Newton update with backtracking: the step length `alpha` is halved
    /// until the residual norm decreases sufficiently, unless the full step
    /// already meets the residual tolerance. The damped iterate
    /// solves the linearized problem with the tangent scaled by `1 / alpha`.
    pub fn damped_step(&mut self, u_prev: &[f64], rule: &QuadratureRule) -> Result<(Vec<f64>, f64), SolverError> {
        let r = self.assemble(u_prev, rule, Linearization::Newton, true);
        let r0 = norm(&r);
        let du = self.solve_with(&r)?;
        let mut alpha = 1.0;
        loop {
            let u: Vec<f64> = u_prev.iter().zip(&du).map(|(x, d)| x + alpha * d).collect();
            if u.iter().any(|v| !v.is_finite()) {
                return Err(SolverError::NotFinite);
            }
            let r = self.residual_norm(&u, rule);
            if alpha <= MIN_STEP || r <= (1.0 - 1e-4 * alpha) * r0 {
                return Ok((u, alpha));
            }
            // A full step from an iterate already at round-off level.
            if alpha == 1.0 && r <= RESIDUAL_TOLERANCE * self.reference_residual(rule) {
                return Ok((u, alpha));
            }
            alpha *= 0.5;
        }
    }

    /// Residual at the Dirichlet lifting, the reference for relative stopping.
    pub fn reference_residual(&mut self, rule: &QuadratureRule) -> f64 {
        let lift = self.problem.dirichlet.lifting();
        let r = self.residual_norm(&lift, rule);
        if r > 0.0 {
            r
        } else {
            1.0
        }
    }

    /// Newton iteration from `u0` until the callback stops, the relative
    /// residual drops below `RESIDUAL_TOLERANCE`, or the iteration limit.
    pub fn solve<F>(&mut self, u0: Vec<f64>, rule: &QuadratureRule, mut callback: F) -> Result<NewtonOutcome, SolverError>
    where
        F: FnMut(&NewtonIterate) -> Control,
    {
        let r_ref = self.reference_residual(rule);
        let mut u_prev = u0;
        let mut residuals = Vec::new();
        for k in 1..=MAX_NEWTON_ITERATIONS {
            let u = self.step(&u_prev, rule)?;
            let res = self.residual_norm(&u, rule);
            residuals.push(res);
            let it = NewtonIterate {
                k,
                u: &u,
                u_prev: &u_prev,
                residual: res,
            };
            let stop = matches!(callback(&it), Control::Stop) || res <= RESIDUAL_TOLERANCE * r_ref;
            if stop {
                return Ok(NewtonOutcome {
                    u,
                    u_prev,
                    iterations: k,
                    residuals,
                    reference_residual: r_ref,
                });
            }
            u_prev = u;
        }
        Err(SolverError::NonConvergence {
            iterations: MAX_NEWTON_ITERATIONS,
            residuals,
        })
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

/// Dirichlet data on all boundary nodes from a displacement function.
pub fn full_dirichlet<F: Fn(&Point) -> [f64; 2]>(space: &P2Space, g: F) -> Dirichlet {
    let mut d = Dirichlet::none(space.dim());
    for n in 0..space.num_nodes {
        if space.boundary_node[n] {
            let v = g(&space.node_coords[n]);
            d.fixed[2 * n] = true;
            d.fixed[2 * n + 1] = true;
            d.values[2 * n] = v[0];
            d.values[2 * n + 1] = v[1];
        }
    }
    d
}

////////////////////////////////////////////////////////////////////////////////

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constitutive::HenckyMises;
    use crate::fe::make_quadrature;
    use crate::mesh::{build_geometry, Domain};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const LIN: ConstitutiveLaw = ConstitutiveLaw::Linear { lambda: 5.0, mu: 1.0 };

    #[test]
    fn affine_patch_test() {
        let m = build_geometry(Domain::LShape, 0.25).unwrap();
        let s = P2Space::new(&m);
        let g = |p: &Point| [0.1 + 0.3 * p.x - 0.2 * p.y, -0.4 * p.x + 0.25 * p.y];
        let bc = full_dirichlet(&s, g);
        let problem = Problem {
            mesh: &m,
            space: &s,
            law: LIN,
            load: &zero_load,
            dirichlet: &bc,
        };
        let mut solver = NewtonSolver::new(problem);
        let rule = make_quadrature(4).unwrap();
        let u0 = solver.initial_guess(&rule).unwrap();
        let exact = s.interpolate(g);
        for (a, b) in u0.iter().zip(&exact) {
            assert!((a - b).abs() < 1e-10);
        }
        let out = solver.solve(u0, &rule, |_| Control::Continue).unwrap();
        assert_eq!(out.iterations, 1);
    }

    #[test]
    fn zero_data_gives_zero_solution() {
        let m = build_geometry(Domain::UnitSquare, 0.25).unwrap();
        let s = P2Space::new(&m);
        let bc = full_dirichlet(&s, |_| [0.0, 0.0]);
        let problem = Problem {
            mesh: &m,
            space: &s,
            law: LIN,
            load: &zero_load,
            dirichlet: &bc,
        };
        let mut solver = NewtonSolver::new(problem);
        let u = solver.initial_guess(&make_quadrature(4).unwrap()).unwrap();
        assert!(u.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn linear_matrix_does_not_depend_on_state() {
        let m = build_geometry(Domain::UnitSquare, 0.5).unwrap();
        let s = P2Space::new(&m);
        let bc = full_dirichlet(&s, |_| [0.0, 0.0]);
        let problem = Problem {
            mesh: &m,
            space: &s,
            law: LIN,
            load: &zero_load,
            dirichlet: &bc,
        };
        let mut solver = NewtonSolver::new(problem);
        let rule = make_quadrature(4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let u1: Vec<f64> = (0..s.dim()).map(|_| rng.random_range(-1.0..1.0)).collect();
        solver.assemble(&vec![0.0; s.dim()], &rule, Linearization::Newton, true);
        let a0 = solver.matrix.values.clone();
        solver.assemble(&u1, &rule, Linearization::Newton, true);
        assert_eq!(a0, solver.matrix.values);
    }

    #[test]
    fn galerkin_orthogonality_with_load() {
        let m = build_geometry(Domain::UnitSquare, 0.25).unwrap();
        let s = P2Space::new(&m);
        let bc = full_dirichlet(&s, |_| [0.0, 0.0]);
        let load = |p: &Point| [p.x.sin(), 1.0 + p.y * p.x];
        let problem = Problem {
            mesh: &m,
            space: &s,
            law: LIN,
            load: &load,
            dirichlet: &bc,
        };
        let mut solver = NewtonSolver::new(problem);
        let rule = make_quadrature(6).unwrap();
        let u = solver.initial_guess(&rule).unwrap();
        let r = solver.assemble(&u, &rule, Linearization::Newton, true);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let scale = norm(&solver.assemble(&vec![0.0; s.dim()], &rule, Linearization::Newton, false));
        for _ in 0..100 {
            let v: Vec<f64> = (0..s.dim())
                .map(|i| if bc.fixed[i] { 0.0 } else { rng.random_range(-1.0..1.0) })
                .collect();
            let dot: f64 = r.iter().zip(&v).map(|(a, b)| a * b).sum();
            assert!(dot.abs() <= 1e-10 * scale * norm(&v));
        }
    }

    #[test]
    fn hencky_mises_newton_converges() {
        let m = build_geometry(Domain::LShape, 0.25).unwrap();
        let s = P2Space::new(&m);
        let bc = full_dirichlet(&s, |p| [0.5 * p.x * p.y, 0.3 * p.x]);
        let law = ConstitutiveLaw::HenckyMises(HenckyMises {
            a: 0.05,
            b: 0.5,
            kappa: 17.0 / 3.0,
            rho_scale: 1.0,
        });
        let problem = Problem {
            mesh: &m,
            space: &s,
            law,
            load: &zero_load,
            dirichlet: &bc,
        };
        let mut solver = NewtonSolver::new(problem);
        let rule = make_quadrature(4).unwrap();
        let u0 = solver.initial_guess(&rule).unwrap();
        let out = solver.solve(u0, &rule, |_| Control::Continue).unwrap();
        assert!(out.iterations > 1 && out.iterations < 20, "{:?}", out.residuals);
    }
}
