//! The adaptive algorithm: mesh adaptation around Newton iterations around
//! quadrature escalation, stopped by comparing the error estimators.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::cases::{CaseName, LShapeSolution, NotchedPlate};
use crate::constitutive::{apply_tangent, sym_to_tensor, ConstitutiveLaw};
use crate::estimators::{
    basic_bound, discrete_stress, energy_error, global_estimate, local_estimators, prefactor, residual_diagnostics, EstimatorInput,
    GlobalEstimate, LocalEstimators,
};
use crate::fe::p2::sym_grad;
use crate::fe::projection::eval_p1_tensor;
use crate::fe::{make_quadrature, project_tensor_p1, DisplacementField, P1Tensor, P2Space, QuadratureRule, Tensor2};
use crate::mesh::{build_geometry, refine, Mesh, Point};
use crate::reconstruction::{dirichlet_face_rows, CellValues, Reconstructor, StressField};
use crate::solver::{zero_load, Dirichlet, NewtonSolver, Problem, SolverError, MAX_NEWTON_ITERATIONS, RESIDUAL_TOLERANCE};
use crate::Error;

/// Initial quadrature degree `2p` for P2 displacements.
pub const INITIAL_DEGREE: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CriterionMode {
    #[default]
    Global,
    Local,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Stopping {
    /// Stop Newton once the linearization estimator is small enough.
    #[default]
    Adaptive,
    /// Stop Newton on the relative residual only.
    Residual,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Refinement {
    #[default]
    Adaptive,
    Uniform,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdaptiveConfig {
    pub gamma_lin: f64,
    pub gamma_quad: f64,
    /// Stop once `eta_disc + eta_osc` is at most this value.
    pub target: f64,
    pub criterion: CriterionMode,
    pub theta: f64,
    /// Number of refinements after the initial mesh.
    pub max_loops: usize,
    /// Do not refine meshes with more cells than this.
    pub max_cells: usize,
    pub nu_max: usize,
    pub stopping: Stopping,
    pub refinement: Refinement,
}

impl Default for AdaptiveConfig {
    fn default() -> Self {
        AdaptiveConfig {
            gamma_lin: 0.1,
            gamma_quad: 0.1,
            target: 0.0,
            criterion: CriterionMode::Global,
            theta: 0.3,
            max_loops: 6,
            max_cells: 200_000,
            nu_max: 12,
            stopping: Stopping::Adaptive,
            refinement: Refinement::Adaptive,
        }
    }
}

impl AdaptiveConfig {
    pub fn validate(&self) -> Result<(), Error> {
        let open_unit = |v: f64| v > 0.0 && v < 1.0;
        if !open_unit(self.gamma_lin) {
            return Err(Error::Config(format!("gamma_lin = {} must lie in (0, 1)", self.gamma_lin)));
        }
        if !open_unit(self.gamma_quad) {
            return Err(Error::Config(format!("gamma_quad = {} must lie in (0, 1)", self.gamma_quad)));
        }
        if !(self.theta > 0.0 && self.theta <= 1.0) {
            return Err(Error::Config(format!("theta = {} must lie in (0, 1]", self.theta)));
        }
        if !(self.target >= 0.0) {
            return Err(Error::Config(format!("target = {} must be non-negative", self.target)));
        }
        if self.nu_max < INITIAL_DEGREE || self.nu_max + 3 > crate::fe::quadrature::MAX_DEGREE {
            return Err(Error::Config(format!(
                "nu_max = {} must lie in {}..={}",
                self.nu_max,
                INITIAL_DEGREE,
                crate::fe::quadrature::MAX_DEGREE - 3
            )));
        }
        Ok(())
    }
}

/// Outcome of the stopping criteria at one iterate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Criteria {
    pub quad_ok: bool,
    pub lin_ok: bool,
    pub done: bool,
}

pub fn check_criteria(local: &LocalEstimators, global: &GlobalEstimate, config: &AdaptiveConfig) -> Criteria {
    let (quad_ok, lin_ok) = match config.criterion {
        CriterionMode::Global => (
            global.eta_quad <= config.gamma_quad * (global.eta_disc + global.eta_lin + global.eta_osc),
            global.eta_lin <= config.gamma_lin * (global.eta_disc + global.eta_osc),
        ),
        CriterionMode::Local => {
            let n = local.len();
            (
                (0..n).all(|t| local.quad[t] <= config.gamma_quad * (local.disc[t] + local.lin[t] + local.osc[t])),
                (0..n).all(|t| local.lin[t] <= config.gamma_lin * (local.disc[t] + local.osc[t])),
            )
        }
    };
    Criteria {
        quad_ok,
        lin_ok,
        done: global.eta_disc + global.eta_osc <= config.target,
    }
}

/// Bulk marking: the smallest set of cells, taken by decreasing `eta`
/// (ties by index), whose squared estimators reach `theta` of the total.
pub fn mark_cells(eta: &[f64], theta: f64) -> Vec<usize> {
    let total: f64 = eta.iter().map(|v| v * v).sum();
    if total == 0.0 {
        return Vec::new();
    }
    let mut order: Vec<usize> = (0..eta.len()).collect();
    order.sort_by(|&a, &b| eta[b].total_cmp(&eta[a]).then(a.cmp(&b)));
    let mut acc = 0.0;
    let mut marked = Vec::new();
    for c in order {
        if acc >= theta * total || eta[c] == 0.0 {
            break;
        }
        acc += eta[c] * eta[c];
        marked.push(c);
    }
    marked.sort_unstable();
    marked
}

/// Problem definition: benchmark case and material law.
#[derive(Debug, Clone, PartialEq)]
pub struct Setup {
    pub case: CaseName,
    pub law: ConstitutiveLaw,
    pub initial_h: f64,
    pub l_shape: LShapeSolution,
    pub plate: NotchedPlate,
}

impl Setup {
    pub fn dirichlet(&self, space: &P2Space) -> Result<Dirichlet, Error> {
        Ok(match self.case {
            CaseName::LShape => self.l_shape.dirichlet(space),
            CaseName::NotchedPlate => self.plate.dirichlet(space)?,
        })
    }

    /// The analytical solution, when the L-shape is run with its own law.
    pub fn exact(&self) -> Option<&LShapeSolution> {
        (self.case == CaseName::LShape && self.law == self.l_shape.law()).then_some(&self.l_shape)
    }

    pub fn initial_mesh(&self) -> Result<Mesh, Error> {
        Ok(build_geometry(self.case.domain(), self.initial_h)?)
    }
}

/// One record per (mesh, Newton iteration, quadrature degree).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    #[serde(rename = "loop")]
    pub mesh_loop: usize,
    pub k: usize,
    pub nu: usize,
    pub ncells: usize,
    pub eta_disc: f64,
    pub eta_lin: f64,
    pub eta_quad: f64,
    pub eta_osc: f64,
    pub total_bound: f64,
    pub energy_error: Option<f64>,
    pub ieff: Option<f64>,
    pub newton_residual: f64,
    pub wall_ms: f64,
    pub basic_bound: f64,
    pub unsplit_bound: f64,
    pub eta_sharp: f64,
    pub eta_flat: f64,
    pub quad_ok: bool,
    pub lin_ok: bool,
}

#[derive(Debug, Clone, Default)]
pub struct RunLog {
    pub records: Vec<RunRecord>,
    pub warnings: Vec<String>,
}

impl RunLog {
    /// Newton iterations accepted on each mesh.
    pub fn newton_counts(&self) -> Vec<usize> {
        let mut out: Vec<usize> = Vec::new();
        for r in &self.records {
            if r.mesh_loop >= out.len() {
                out.resize(r.mesh_loop + 1, 0);
            }
            out[r.mesh_loop] = out[r.mesh_loop].max(r.k);
        }
        out
    }

    /// The last record of each mesh.
    pub fn final_records(&self) -> Vec<&RunRecord> {
        let mut out: Vec<&RunRecord> = Vec::new();
        for r in &self.records {
            match out.last() {
                Some(last) if last.mesh_loop == r.mesh_loop => *out.last_mut().unwrap() = r,
                _ => out.push(r),
            }
        }
        out
    }

    /// The last record of each Newton iteration on mesh `mesh_loop`.
    pub fn iterations(&self, mesh_loop: usize) -> Vec<&RunRecord> {
        let mut out: Vec<&RunRecord> = Vec::new();
        for r in self.records.iter().filter(|r| r.mesh_loop == mesh_loop) {
            match out.last() {
                Some(last) if last.k == r.k => *out.last_mut().unwrap() = r,
                _ => out.push(r),
            }
        }
        out
    }
}

/// Everything computed at one Newton iterate and quadrature degree.
pub struct Evaluation {
    pub local: LocalEstimators,
    pub global: GlobalEstimate,
    pub basic_bound: f64,
    pub eta_sharp: f64,
    pub eta_flat: f64,
    pub disc: StressField,
    pub lin: StressField,
    pub sigma_bar: P1Tensor,
}

/// Per-mesh objects reused across Newton iterations.
pub struct MeshContext<'m> {
    pub mesh: &'m Mesh,
    pub space: &'m P2Space,
    pub law: ConstitutiveLaw,
    pub reconstructor: Reconstructor<'m>,
}

impl<'m> MeshContext<'m> {
    pub fn new(mesh: &'m Mesh, space: &'m P2Space, law: ConstitutiveLaw, dirichlet: &Dirichlet) -> Result<MeshContext<'m>, Error> {
        let rows = dirichlet_face_rows(mesh, space, &dirichlet.fixed);
        Ok(MeshContext {
            mesh,
            space,
            law,
            reconstructor: Reconstructor::new(mesh, rows)?,
        })
    }

    fn strain(&self, u: &DisplacementField, c: usize, b: &[f64; 3]) -> [f64; 3] {
        let gl = self.mesh.barycentric_gradients(c);
        sym_grad(&u.gradient(self.space, c, b, &gl))
    }

    /// Reconstructions and estimators for the iterate `u` obtained by a
    /// Newton step of length `step` from `u_prev`, with quadrature `rule`.
    pub fn evaluate(&self, u: &[f64], u_prev: &[f64], step: f64, rule: &QuadratureRule, diagnostics: bool) -> Result<Evaluation, Error> {
        let mesh = self.mesh;
        let uk = DisplacementField::new(u.to_vec());
        let up = DisplacementField::new(u_prev.to_vec());
        let stress: CellValues<Tensor2> = (0..mesh.num_cells())
            .map(|c| rule.points.iter().map(|b| discrete_stress(mesh, self.space, &self.law, &uk, c, b)).collect())
            .collect();
        let sigma_bar = project_tensor_p1(mesh, rule, |c, q, _| stress[c][q])?;
        let linearized = project_tensor_p1(mesh, rule, |c, q, _| {
            let b = &rule.points[q];
            let ep = self.strain(&up, c, b);
            let ek = self.strain(&uk, c, b);
            let de = [(ek[0] - ep[0]) / step, (ek[1] - ep[1]) / step, (ek[2] - ep[2]) / step];
            let s = self.law.stress(&ep);
            let ds = apply_tangent(&self.law.tangent(&ep), &de);
            sym_to_tensor(&[s[0] + ds[0], s[1] + ds[1], s[2] + ds[2]])
        })?;
        // Projected with the same rule as sigma_bar, so that the defect vanishes
        // once Newton has converged.
        let lin_defect: CellValues<Tensor2> = (0..mesh.num_cells())
            .map(|c| {
                rule.points
                    .iter()
                    .map(|b| {
                        let lin = eval_p1_tensor(&linearized[c], b);
                        let bar = eval_p1_tensor(&sigma_bar[c], b);
                        [lin[0] - bar[0], lin[1] - bar[1], lin[2] - bar[2], lin[3] - bar[3]]
                    })
                    .collect()
            })
            .collect();
        let load: CellValues<[f64; 2]> = (0..mesh.num_cells())
            .map(|c| rule.points.iter().map(|b| zero_load(&mesh.map_point(c, b))).collect())
            .collect();
        let split = self.reconstructor.reconstruct_split(&sigma_bar, &lin_defect, Some(&load), rule)?;
        let high = make_quadrature(rule.degree + 3)?;
        let input = EstimatorInput {
            mesh,
            space: self.space,
            afw: &self.reconstructor.space,
            law: &self.law,
            u: &uk,
            sigma_bar: &sigma_bar,
            disc: &split.disc,
            lin: &split.lin,
            load: &zero_load,
        };
        let local = local_estimators(&input, &high);
        let global = global_estimate(&local, prefactor(&self.law));
        let basic = basic_bound(&input, &high);
        let (eta_sharp, eta_flat) = if diagnostics {
            let d = residual_diagnostics(mesh, self.space, &self.law, &uk, &sigma_bar, &zero_load, &high);
            let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
            (norm(&d.sharp), norm(&d.flat))
        } else {
            (f64::NAN, f64::NAN)
        };
        Ok(Evaluation {
            local,
            global,
            basic_bound: basic,
            eta_sharp,
            eta_flat,
            disc: split.disc,
            lin: split.lin,
            sigma_bar,
        })
    }
}

/// State on a finished mesh, handed to observers before refinement.
pub struct MeshSnapshot<'a> {
    pub mesh_loop: usize,
    pub mesh: &'a Mesh,
    pub space: &'a P2Space,
    pub reconstructor: &'a Reconstructor<'a>,
    pub u: &'a [f64],
    pub evaluation: &'a Evaluation,
    pub newton_iterations: usize,
}

/// Runs the adaptive algorithm, appending to `log`; observers see each
/// finished mesh.
pub fn run_adaptive<F>(setup: &Setup, config: &AdaptiveConfig, log: &mut RunLog, mut observer: F) -> Result<(), Error>
where
    F: FnMut(&MeshSnapshot) -> Result<(), Error>,
{
    config.validate()?;
    setup.law.validate()?;
    let start = Instant::now();
    let mut mesh = setup.initial_mesh()?;
    let exact = setup.exact();
    for mesh_loop in 0..=config.max_loops {
        let space = P2Space::new(&mesh);
        let dirichlet = setup.dirichlet(&space)?;
        let ctx = MeshContext::new(&mesh, &space, setup.law, &dirichlet)?;
        let problem = Problem {
            mesh: &mesh,
            space: &space,
            law: setup.law,
            load: &zero_load,
            dirichlet: &dirichlet,
        };
        let mut solver = NewtonSolver::new(problem);
        let singular = exact.and_then(|_| (0..mesh.num_vertices()).find(|&v| mesh.vertices[v].norm() == 0.0));
        let mut nu = INITIAL_DEGREE;
        let mut rule = make_quadrature(nu)?;
        let mut u_prev = solver.initial_guess(&rule)?;
        let mut residuals = Vec::new();
        let mut k = 1;
        let (u, evaluation) = loop {
            let (u, ev, crit, residual) = loop {
                let (u, step) = solver.damped_step(&u_prev, &rule)?;
                let ev = ctx.evaluate(&u, &u_prev, step, &rule, true)?;
                let crit = check_criteria(&ev.local, &ev.global, config);
                let residual = solver.residual_norm(&u, &rule) / solver.reference_residual(&rule);
                let energy = match exact {
                    Some(sol) => Some(energy_error(&mesh, &space, &setup.law, &DisplacementField::new(u.clone()), &|x: &Point| sol.gradient(x).unwrap_or([0.0; 4]), singular)?),
                    None => None,
                };
                log.records.push(RunRecord {
                    mesh_loop,
                    k,
                    nu,
                    ncells: mesh.num_cells(),
                    eta_disc: ev.global.eta_disc,
                    eta_lin: ev.global.eta_lin,
                    eta_quad: ev.global.eta_quad,
                    eta_osc: ev.global.eta_osc,
                    total_bound: ev.global.total_bound,
                    energy_error: energy,
                    ieff: energy.map(|e| ev.basic_bound / e),
                    newton_residual: residual,
                    wall_ms: start.elapsed().as_secs_f64() * 1e3,
                    basic_bound: ev.basic_bound,
                    unsplit_bound: ev.global.unsplit_bound,
                    eta_sharp: ev.eta_sharp,
                    eta_flat: ev.eta_flat,
                    quad_ok: crit.quad_ok,
                    lin_ok: crit.lin_ok,
                });
                if crit.quad_ok {
                    break (u, ev, crit, residual);
                }
                if nu >= config.nu_max {
                    log.warnings.push(format!(
                        "mesh {mesh_loop}, iteration {k}: quadrature criterion not met at the maximal degree {nu}"
                    ));
                    break (u, ev, crit, residual);
                }
                nu += 1;
                rule = make_quadrature(nu)?;
            };
            residuals.push(residual);
            let stop = match config.stopping {
                Stopping::Adaptive => crit.lin_ok,
                Stopping::Residual => false,
            } || residual <= RESIDUAL_TOLERANCE;
            if stop {
                break (u, ev);
            }
            if k == MAX_NEWTON_ITERATIONS {
                return Err(SolverError::NonConvergence {
                    iterations: k,
                    residuals,
                }
                .into());
            }
            u_prev = u;
            k += 1;
        };
        observer(&MeshSnapshot {
            mesh_loop,
            mesh: &mesh,
            space: &space,
            reconstructor: &ctx.reconstructor,
            u: &u,
            evaluation: &evaluation,
            newton_iterations: k,
        })?;
        let done = evaluation.global.eta_disc + evaluation.global.eta_osc <= config.target;
        if done || mesh_loop == config.max_loops || mesh.num_cells() > config.max_cells {
            break;
        }
        let marked = match config.refinement {
            Refinement::Uniform => (0..mesh.num_cells()).collect(),
            Refinement::Adaptive => mark_cells(&evaluation.local.disc, config.theta),
        };
        let next = refine(&mesh, &marked).mesh;
        drop(ctx);
        mesh = next;
    }
    Ok(())
}

////////////////////////////////////////////////////////////////////////////////
