//! Patchwise equilibrated, weakly symmetric stress reconstructions.
//!
//! For every vertex `a` a small mixed problem is solved on its patch with the
//! stress, displacement and skew multiplier spaces of [`crate::fe::afw`].
//! Normal traces vanish on the patch boundary except on boundary faces that
//! carry Dirichlet data for the corresponding row. The displacement space is
//! kept orthogonal to the rigid motions `Z_a` that are compatible with these
//! constraints (all of them for interior vertices), via extra multipliers.
//!
//! The patch matrix only depends on the geometry and is factorized once per
//! mesh (within a memory budget); the three constructions change only the
//! right-hand side.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, OnceLock};

use nalgebra::{DMatrix, DVector, Dyn, LU};
use rayon::prelude::*;
use thiserror::Error;

use crate::fe::afw::{cell_matrices, skew_basis, vector_p1_basis, AfwSpace, SIGMA_DIM};
use crate::fe::projection::{eval_p1_tensor, P1Tensor};
use crate::fe::rigid::rigid_body_modes;
use crate::fe::{make_quadrature, FeError, P2Space, QuadratureRule, Tensor2};
use crate::mesh::{Mesh, Point};

const NONE: usize = usize::MAX;
/// Relative tolerance of the patch compatibility audit.
pub const COMPATIBILITY_TOLERANCE: f64 = 1e-8;
/// Default memory budget for cached patch factorizations.
pub const DEFAULT_CACHE_BYTES: usize = 512 << 20;

#[derive(Error, Debug, Clone)]
pub enum ReconstructionError {
    #[error("nonequilibrated input: compatibility residual {residual:e} exceeds {tolerance:e} on the patch of vertex {vertex}")]
    NonEquilibrated { vertex: usize, residual: f64, tolerance: f64 },
    #[error("internal invariant violated on the patch of vertex {vertex}: {what}")]
    Internal { vertex: usize, what: String },
    #[error(transparent)]
    Fe(#[from] FeError),
}

/// Per-cell values at the points of a quadrature rule.
pub type CellValues<T> = Vec<Vec<T>>;

/// Tensor-valued source term of a construction.
#[derive(Clone, Copy)]
pub enum Source<'s> {
    P1(&'s P1Tensor),
    Points(&'s CellValues<Tensor2>),
}

impl Source<'_> {
    fn at(&self, c: usize, q: usize, b: &[f64; 3]) -> Tensor2 {
        match self {
            Source::P1(p) => eval_p1_tensor(&p[c], b),
            Source::Points(v) => v[c][q],
        }
    }
}

/// Reconstructed stress in the global face/interior dof basis.
#[derive(Debug, Clone)]
pub struct StressField {
    pub coefficients: Vec<f64>,
}

impl StressField {
    pub fn zeros(space: &AfwSpace) -> Self {
        StressField {
            coefficients: vec![0.0; space.dim()],
        }
    }

    /// Value and row-wise divergence on cell `c` at physical point `x`.
    pub fn eval(&self, space: &AfwSpace, c: usize, x: &Point) -> (Tensor2, [f64; 2]) {
        let a = space.gather(c, &self.coefficients);
        space.cells[c].eval(&a, x)
    }

    pub fn add(&self, other: &StressField) -> StressField {
        StressField {
            coefficients: self.coefficients.iter().zip(&other.coefficients).map(|(a, b)| a + b).collect(),
        }
    }
}

/// For every face, whether each stress row is left free on it because the
/// corresponding displacement component is prescribed there.
pub fn dirichlet_face_rows(mesh: &Mesh, space: &P2Space, fixed: &[bool]) -> Vec<[bool; 2]> {
    let nv = mesh.num_vertices();
    mesh.faces
        .iter()
        .enumerate()
        .map(|(f, face)| {
            if !face.is_boundary() {
                return [false, false];
            }
            let n = nv + f;
            debug_assert!(space.boundary_node[n]);
            [fixed[2 * n], fixed[2 * n + 1]]
        })
        .collect()
}

struct PatchFactor {
    cells: Vec<usize>,
    /// Global stress dofs that are unknowns of the patch problem.
    sigma: Vec<usize>,
    /// Local dof of patch cell -> index in `sigma`, or `NONE` if constrained.
    cell_map: Vec<[usize; SIGMA_DIM]>,
    /// Local index of the patch vertex in each patch cell.
    local_vertex: Vec<usize>,
    origin: Point,
    scale: f64,
    /// Coefficients of the compatible rigid motions in the scaled basis.
    z: Vec<[f64; 3]>,
    z_gram_inv: DMatrix<f64>,
    lu: LU<f64, Dyn, Dyn>,
    dim: usize,
}

impl PatchFactor {
    fn nv(&self) -> usize {
        6 * self.cells.len()
    }

    fn z_at(&self, x: &Point) -> Vec<[f64; 2]> {
        let rb = rigid_body_modes(x, &self.origin, self.scale);
        self.z
            .iter()
            .map(|c| [c[0] * rb[0][0] + c[1] * rb[1][0] + c[2] * rb[2][0], c[0] * rb[0][1] + c[1] * rb[1][1] + c[2] * rb[2][1]])
            .collect()
    }

    fn bytes(&self) -> usize {
        self.dim * self.dim * 8 + self.sigma.len() * 16 + self.cells.len() * 200
    }
}

/// Result of a split reconstruction.
pub struct SplitReconstruction {
    pub disc: StressField,
    pub lin: StressField,
    /// Compatibility correction per vertex (empty where `Z_a` is trivial),
    /// as coefficients of `Z_a` and the basis coefficients of `Z_a`.
    pub y: Vec<Vec<f64>>,
}

pub struct Reconstructor<'m> {
    pub mesh: &'m Mesh,
    pub space: AfwSpace,
    face_rows: Vec<[bool; 2]>,
    matrix_rule: QuadratureRule,
    cache: Vec<OnceLock<Option<Arc<PatchFactor>>>>,
    cache_used: AtomicUsize,
    cache_budget: usize,
}

/// Right-hand side description of one construction on a patch.
struct Terms<'s> {
    mass: Option<Source<'s>>,
    div: Option<Source<'s>>,
    load: Option<&'s CellValues<[f64; 2]>>,
    /// Coefficient of `y` in the divergence source.
    y_sign: f64,
}

struct PatchRhs {
    rhs: DVector<f64>,
    /// `(g, z_m)` for the divergence source `g`, and a scale for it.
    compat: Vec<f64>,
    compat_scale: f64,
}

impl<'m> Reconstructor<'m> {
    pub fn new(mesh: &'m Mesh, face_rows: Vec<[bool; 2]>) -> Result<Reconstructor<'m>, ReconstructionError> {
        Self::with_cache_budget(mesh, face_rows, DEFAULT_CACHE_BYTES)
    }

    pub fn with_cache_budget(mesh: &'m Mesh, face_rows: Vec<[bool; 2]>, budget: usize) -> Result<Reconstructor<'m>, ReconstructionError> {
        Ok(Reconstructor {
            mesh,
            space: AfwSpace::new(mesh)?,
            face_rows,
            matrix_rule: make_quadrature(4)?,
            cache: (0..mesh.num_vertices()).map(|_| OnceLock::new()).collect(),
            cache_used: AtomicUsize::new(0),
            cache_budget: budget,
        })
    }

    fn is_constrained(&self, a: usize, f: usize, row: usize) -> bool {
        let face = &self.mesh.faces[f];
        if face.is_boundary() {
            !self.mesh.vertex_boundary[a] || !self.face_rows[f][row]
        } else {
            !face.vertices.contains(&a)
        }
    }

    /// Compatible rigid motions as coefficient vectors in the scaled basis.
    fn compatible_modes(&self, a: usize, cells: &[usize], origin: &Point, scale: f64) -> Vec<[f64; 3]> {
        let mut rows: Vec<[f64; 3]> = Vec::new();
        for &c in cells.iter().filter(|_| self.mesh.vertex_boundary[a]) {
            for &f in &self.mesh.cell_faces[c] {
                let face = &self.mesh.faces[f];
                if !face.is_boundary() {
                    continue;
                }
                for r in 0..2 {
                    if self.face_rows[f][r] {
                        for &v in &face.vertices {
                            let rb = rigid_body_modes(&self.mesh.vertices[v], origin, scale);
                            rows.push([rb[0][r], rb[1][r], rb[2][r]]);
                        }
                    }
                }
            }
        }
        if rows.is_empty() {
            return vec![[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        }
        while rows.len() < 3 {
            rows.push([0.0; 3]);
        }
        let c = DMatrix::from_fn(rows.len(), 3, |i, j| rows[i][j]);
        let svd = c.svd(false, true);
        let vt = svd.v_t.unwrap();
        let smax = svd.singular_values.max();
        let mut out = Vec::new();
        for (i, &s) in svd.singular_values.iter().enumerate() {
            if s <= 1e-10 * smax.max(1.0) {
                out.push([vt[(i, 0)], vt[(i, 1)], vt[(i, 2)]]);
            }
        }
        out
    }

    fn build_factor(&self, a: usize) -> Result<PatchFactor, ReconstructionError> {
        let mesh = self.mesh;
        let cells = mesh.vertex_cells[a].clone();
        let origin = mesh.vertices[a];
        let scale = cells.iter().map(|&c| mesh.diameter(c)).fold(0.0, f64::max);
        let mut sigma: Vec<usize> = Vec::new();
        for &c in &cells {
            for l in 0..SIGMA_DIM {
                let k = l % 12;
                if k < 9 && self.is_constrained(a, self.space.cells[c].faces[k / 3], l / 12) {
                    continue;
                }
                sigma.push(self.space.global_dof(c, l));
            }
        }
        sigma.sort_unstable();
        sigma.dedup();
        let cell_map: Vec<[usize; SIGMA_DIM]> = cells
            .iter()
            .map(|&c| {
                let mut m = [NONE; SIGMA_DIM];
                for (l, x) in m.iter_mut().enumerate() {
                    let g = self.space.global_dof(c, l);
                    if let Ok(p) = sigma.binary_search(&g) {
                        *x = p;
                    }
                }
                m
            })
            .collect();
        let local_vertex: Vec<usize> = cells.iter().map(|&c| mesh.cells[c].iter().position(|&v| v == a).unwrap()).collect();
        let z = self.compatible_modes(a, &cells, &origin, scale);
        let ns = sigma.len();
        let n = cells.len();
        let nz = z.len();
        let (v0, l0, z0) = (ns, ns + 6 * n, ns + 9 * n);
        let dim = z0 + nz;
        let mut mat = DMatrix::<f64>::zeros(dim, dim);
        let mut z_gram = DMatrix::<f64>::zeros(nz, nz);
        let mut proto = PatchFactor {
            cells: cells.clone(),
            sigma,
            cell_map,
            local_vertex,
            origin,
            scale,
            z,
            z_gram_inv: DMatrix::zeros(0, 0),
            lu: DMatrix::<f64>::identity(1, 1).lu(),
            dim,
        };
        for (i, &c) in cells.iter().enumerate() {
            let cm = cell_matrices(mesh, &self.space.cells[c], c, &self.matrix_rule);
            let map = &proto.cell_map[i];
            for p in 0..SIGMA_DIM {
                let gp = map[p];
                if gp == NONE {
                    continue;
                }
                for q in 0..SIGMA_DIM {
                    let gq = map[q];
                    if gq != NONE {
                        mat[(gp, gq)] += cm.mass[(p, q)];
                    }
                }
                for j in 0..6 {
                    let v = cm.div[(j, p)];
                    mat[(v0 + 6 * i + j, gp)] += v;
                    mat[(gp, v0 + 6 * i + j)] += v;
                }
                for j in 0..3 {
                    let v = cm.skew[(j, p)];
                    mat[(l0 + 3 * i + j, gp)] += v;
                    mat[(gp, l0 + 3 * i + j)] += v;
                }
            }
            if nz > 0 {
                let area = mesh.area(c);
                for (qi, b) in self.matrix_rule.points.iter().enumerate() {
                    let w = self.matrix_rule.weights[qi] * area;
                    let x = mesh.map_point(c, b);
                    let zs = proto.z_at(&x);
                    let vb = vector_p1_basis(b);
                    for m in 0..nz {
                        for j in 0..6 {
                            let g = w * (zs[m][0] * vb[j][0] + zs[m][1] * vb[j][1]);
                            mat[(z0 + m, v0 + 6 * i + j)] += g;
                            mat[(v0 + 6 * i + j, z0 + m)] += g;
                        }
                        for n2 in 0..nz {
                            z_gram[(m, n2)] += w * (zs[m][0] * zs[n2][0] + zs[m][1] * zs[n2][1]);
                        }
                    }
                }
            }
        }
        proto.z_gram_inv = if nz > 0 {
            z_gram.try_inverse().ok_or_else(|| ReconstructionError::Internal {
                vertex: a,
                what: "singular rigid-motion Gram matrix".into(),
            })?
        } else {
            DMatrix::zeros(0, 0)
        };
        let lu = mat.lu();
        if !lu.is_invertible() {
            return Err(ReconstructionError::Internal {
                vertex: a,
                what: "singular patch matrix".into(),
            });
        }
        proto.lu = lu;
        Ok(proto)
    }

    fn factor(&self, a: usize) -> Result<Arc<PatchFactor>, ReconstructionError> {
        if let Some(Some(f)) = self.cache[a].get() {
            return Ok(f.clone());
        }
        let f = Arc::new(self.build_factor(a)?);
        let bytes = f.bytes();
        let used = self.cache_used.fetch_add(bytes, Ordering::Relaxed);
        if used + bytes <= self.cache_budget {
            let _ = self.cache[a].set(Some(f.clone()));
        } else {
            self.cache_used.fetch_sub(bytes, Ordering::Relaxed);
        }
        Ok(f)
    }

    /// Dense patch matrix (for audits and tests).
    pub fn patch_matrix(&self, a: usize) -> Result<DMatrix<f64>, ReconstructionError> {
        let f = self.build_factor(a)?;
        Ok(f.lu.l() * f.lu.u())
    }

    /// Sizes `(stress, displacement, multiplier, rigid)` of the patch system.
    pub fn patch_sizes(&self, a: usize) -> Result<(usize, usize, usize, usize), ReconstructionError> {
        let f = self.factor(a)?;
        Ok((f.sigma.len(), f.nv(), 3 * f.cells.len(), f.z.len()))
    }

    /// Global stress dofs that are unknowns of the patch of `a`.
    pub fn patch_unknowns(&self, a: usize) -> Result<Vec<usize>, ReconstructionError> {
        Ok(self.factor(a)?.sigma.clone())
    }

    fn assemble_rhs(&self, pf: &PatchFactor, t: &Terms, y: &[f64], rule: &QuadratureRule) -> PatchRhs {
        let mesh = self.mesh;
        let nz = pf.z.len();
        let mut rhs = DVector::<f64>::zeros(pf.dim);
        let ns = pf.sigma.len();
        let mut compat = vec![0.0; nz];
        let (mut g_sq, mut z_sq) = (0.0, vec![0.0; nz]);
        for (i, &c) in pf.cells.iter().enumerate() {
            let area = mesh.area(c);
            let gl = mesh.barycentric_gradients(c);
            let lv = pf.local_vertex[i];
            let gpsi = gl[lv];
            let cell = &self.space.cells[c];
            let map = &pf.cell_map[i];
            for (q, b) in rule.points.iter().enumerate() {
                let w = rule.weights[q] * area;
                let psi = b[lv];
                let x = mesh.map_point(c, b);
                if let Some(src) = &t.mass {
                    let s = src.at(c, q, b);
                    let (vals, _) = cell.row_basis(&x);
                    for row in 0..2 {
                        for k in 0..12 {
                            let p = map[row * 12 + k];
                            if p != NONE {
                                rhs[p] += w * psi * (s[2 * row] * vals[k][0] + s[2 * row + 1] * vals[k][1]);
                            }
                        }
                    }
                }
                let mut g = [0.0; 2];
                let mut g_abs = 0.0;
                if let Some(src) = &t.div {
                    let s = src.at(c, q, b);
                    let sg = [s[0] * gpsi.x + s[1] * gpsi.y, s[2] * gpsi.x + s[3] * gpsi.y];
                    g[0] += sg[0];
                    g[1] += sg[1];
                    g_abs += (sg[0] * sg[0] + sg[1] * sg[1]).sqrt();
                }
                if let Some(load) = t.load {
                    let f = load[c][q];
                    g[0] -= psi * f[0];
                    g[1] -= psi * f[1];
                    g_abs += psi * (f[0] * f[0] + f[1] * f[1]).sqrt();
                }
                let zs = if nz > 0 { pf.z_at(&x) } else { Vec::new() };
                if t.y_sign != 0.0 {
                    for m in 0..nz {
                        g[0] += t.y_sign * y[m] * zs[m][0];
                        g[1] += t.y_sign * y[m] * zs[m][1];
                        g_abs += (y[m] * y[m] * (zs[m][0] * zs[m][0] + zs[m][1] * zs[m][1])).sqrt();
                    }
                }
                let vb = vector_p1_basis(b);
                for j in 0..6 {
                    rhs[ns + 6 * i + j] += w * (g[0] * vb[j][0] + g[1] * vb[j][1]);
                }
                g_sq += w * g_abs * g_abs;
                for m in 0..nz {
                    compat[m] += w * (g[0] * zs[m][0] + g[1] * zs[m][1]);
                    z_sq[m] += w * (zs[m][0] * zs[m][0] + zs[m][1] * zs[m][1]);
                }
            }
        }
        let zmax = z_sq.iter().fold(0.0f64, |m, v| m.max(*v)).sqrt();
        PatchRhs {
            rhs,
            compat,
            compat_scale: g_sq.sqrt() * zmax,
        }
    }

    /// `y` on the patch: `(y, z) = (-psi_a f + sigma_bar grad psi_a, z)` for `z` in `Z_a`.
    fn compatibility_correction(&self, pf: &PatchFactor, sigma_bar: Source, load: Option<&CellValues<[f64; 2]>>, rule: &QuadratureRule) -> Vec<f64> {
        let nz = pf.z.len();
        if nz == 0 {
            return Vec::new();
        }
        let t = Terms {
            mass: None,
            div: Some(sigma_bar),
            load,
            y_sign: 0.0,
        };
        let r = self.assemble_rhs(pf, &t, &[], rule);
        let rhs = DVector::from_vec(r.compat);
        (&pf.z_gram_inv * rhs).iter().copied().collect()
    }

    fn check_compat(r: &PatchRhs, scale: f64) -> Result<(), f64> {
        let worst = r.compat.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let tol = COMPATIBILITY_TOLERANCE * scale;
        if worst > tol {
            Err(worst)
        } else {
            Ok(())
        }
    }

    fn scatter(&self, results: Vec<(Arc<PatchFactor>, Vec<DVector<f64>>)>, count: usize, order: &[usize]) -> Vec<StressField> {
        let mut fields: Vec<StressField> = (0..count).map(|_| StressField::zeros(&self.space)).collect();
        for &idx in order {
            let (pf, sols) = &results[idx];
            for (field, sol) in fields.iter_mut().zip(sols) {
                for (p, &g) in pf.sigma.iter().enumerate() {
                    field.coefficients[g] += sol[p];
                }
            }
        }
        fields
    }

    /// Construction with the exact discrete stress: `sigma` at the points of
    /// `rule` is used both in the mass and divergence sources.
    pub fn reconstruct_basic(&self, sigma: Source, load: Option<&CellValues<[f64; 2]>>, rule: &QuadratureRule) -> Result<StressField, ReconstructionError> {
        let nv = self.mesh.num_vertices();
        let results: Vec<(Arc<PatchFactor>, Vec<DVector<f64>>)> = (0..nv)
            .into_par_iter()
            .map(|a| {
                let pf = self.factor(a)?;
                let t = Terms {
                    mass: Some(sigma),
                    div: Some(sigma),
                    load,
                    y_sign: 0.0,
                };
                let r = self.assemble_rhs(&pf, &t, &[], rule);
                if let Err(residual) = Self::check_compat(&r, r.compat_scale) {
                    return Err(ReconstructionError::NonEquilibrated {
                        vertex: a,
                        residual,
                        tolerance: COMPATIBILITY_TOLERANCE * r.compat_scale,
                    });
                }
                let sol = pf.lu.solve(&r.rhs).ok_or_else(|| ReconstructionError::Internal {
                    vertex: a,
                    what: "patch solve failed".into(),
                })?;
                Ok((pf, vec![sol]))
            })
            .collect::<Result<_, _>>()?;
        let order: Vec<usize> = (0..nv).collect();
        Ok(self.scatter(results, 1, &order).pop().unwrap())
    }

    /// Discretization and linearization reconstructions. `sigma_bar` is the P1
    /// projection of the discrete stress, `lin_defect` the linearized stress
    /// minus `sigma_bar` at the points of `rule`.
    pub fn reconstruct_split(
        &self,
        sigma_bar: &P1Tensor,
        lin_defect: &CellValues<Tensor2>,
        load: Option<&CellValues<[f64; 2]>>,
        rule: &QuadratureRule,
    ) -> Result<SplitReconstruction, ReconstructionError> {
        let order: Vec<usize> = (0..self.mesh.num_vertices()).collect();
        self.reconstruct_split_ordered(sigma_bar, lin_defect, load, rule, &order)
    }

    /// As [`Self::reconstruct_split`], summing patch contributions in `order`.
    pub fn reconstruct_split_ordered(
        &self,
        sigma_bar: &P1Tensor,
        lin_defect: &CellValues<Tensor2>,
        load: Option<&CellValues<[f64; 2]>>,
        rule: &QuadratureRule,
        order: &[usize],
    ) -> Result<SplitReconstruction, ReconstructionError> {
        let nv = self.mesh.num_vertices();
        let bar = Source::P1(sigma_bar);
        let defect = Source::Points(lin_defect);
        let solved: Vec<(Arc<PatchFactor>, Vec<DVector<f64>>, Vec<f64>)> = (0..nv)
            .into_par_iter()
            .map(|a| {
                let pf = self.factor(a)?;
                let y = self.compatibility_correction(&pf, bar, load, rule);
                let disc = self.assemble_rhs(
                    &pf,
                    &Terms {
                        mass: Some(bar),
                        div: Some(bar),
                        load,
                        y_sign: -1.0,
                    },
                    &y,
                    rule,
                );
                let lin = self.assemble_rhs(
                    &pf,
                    &Terms {
                        mass: Some(defect),
                        div: Some(defect),
                        load: None,
                        y_sign: 1.0,
                    },
                    &y,
                    rule,
                );
                let scale = disc.compat_scale.max(lin.compat_scale);
                for r in [&disc, &lin] {
                    if let Err(residual) = Self::check_compat(r, scale) {
                        return Err(ReconstructionError::Internal {
                            vertex: a,
                            what: format!("compatibility residual {residual:e} after correction"),
                        });
                    }
                }
                let mut rhs = DMatrix::<f64>::zeros(pf.dim, 2);
                rhs.set_column(0, &disc.rhs);
                rhs.set_column(1, &lin.rhs);
                let sol = pf.lu.solve(&rhs).ok_or_else(|| ReconstructionError::Internal {
                    vertex: a,
                    what: "patch solve failed".into(),
                })?;
                let cols = vec![sol.column(0).into_owned(), sol.column(1).into_owned()];
                Ok((pf, cols, y))
            })
            .collect::<Result<_, _>>()?;
        let mut ys = Vec::with_capacity(nv);
        let mut results = Vec::with_capacity(nv);
        for (pf, cols, y) in solved {
            ys.push(y);
            results.push((pf, cols));
        }
        let mut fields = self.scatter(results, 2, order);
        let lin = fields.pop().unwrap();
        let disc = fields.pop().unwrap();
        Ok(SplitReconstruction { disc, lin, y: ys })
    }

    /// Number of patch factorizations currently cached.
    pub fn cached_patches(&self) -> usize {
        self.cache.iter().filter(|c| matches!(c.get(), Some(Some(_)))).count()
    }
}

/// Maximum pointwise normal-trace jump across interior faces, relative to
/// the maximum pointwise stress magnitude.
pub fn normal_jump_audit(mesh: &Mesh, space: &AfwSpace, field: &StressField) -> f64 {
    let s_pts = [0.0, 0.25, 0.5, 0.75, 1.0];
    let mut jump = 0.0f64;
    let mut scale = 0.0f64;
    for face in &mesh.faces {
        let p = mesh.vertices[face.vertices[0]];
        let q = mesh.vertices[face.vertices[1]];
        let n = face.normal;
        for &s in &s_pts {
            let x = p + (q - p) * s;
            let (ta, _) = field.eval(space, face.owner, &x);
            scale = scale.max(ta.iter().fold(0.0f64, |m, v| m.max(v.abs())));
            if let Some(nb) = face.neighbor {
                let (tb, _) = field.eval(space, nb, &x);
                for r in 0..2 {
                    let d = (ta[2 * r] - tb[2 * r]) * n.x + (ta[2 * r + 1] - tb[2 * r + 1]) * n.y;
                    jump = jump.max(d.abs());
                }
            }
        }
    }
    if scale > 0.0 {
        jump / scale
    } else {
        jump
    }
}

/// `max_T ||Pi_V (f + div sigma)||_T` relative to
/// `||f|| + (sum_T ||sigma||_T^2 / h_T^2)^(1/2)`. The load is given at the
/// points of `rule`, the rule of the reconstruction.
pub fn equilibrium_audit(mesh: &Mesh, space: &AfwSpace, field: &StressField, load: Option<&CellValues<[f64; 2]>>, rule: &QuadratureRule) -> f64 {
    let mut worst = 0.0f64;
    let mut f_sq = 0.0;
    let mut s_sq = 0.0;
    for c in 0..mesh.num_cells() {
        let area = mesh.area(c);
        let h = mesh.diameter(c);
        let mut m = nalgebra::Matrix3::<f64>::zeros();
        let mut rhs = [nalgebra::Vector3::<f64>::zeros(); 2];
        let mut cell_s = 0.0;
        for (q, b) in rule.points.iter().enumerate() {
            let w = rule.weights[q] * area;
            let x = mesh.map_point(c, b);
            let (t, d) = field.eval(space, c, &x);
            let f = load.map_or([0.0; 2], |l| l[c][q]);
            f_sq += w * (f[0] * f[0] + f[1] * f[1]);
            cell_s += w * t.iter().map(|v| v * v).sum::<f64>();
            let g = [f[0] + d[0], f[1] + d[1]];
            for i in 0..3 {
                for j in 0..3 {
                    m[(i, j)] += w * b[i] * b[j];
                }
                rhs[0][i] += w * b[i] * g[0];
                rhs[1][i] += w * b[i] * g[1];
            }
        }
        s_sq += cell_s / (h * h);
        let lu = m.lu();
        let mut n2 = 0.0;
        for r in &rhs {
            let c = lu.solve(r).unwrap();
            n2 += c.dot(&(m * c));
        }
        worst = worst.max(n2.sqrt());
    }
    let scale = f_sq.sqrt() + s_sq.sqrt();
    if scale > 0.0 {
        worst / scale
    } else {
        worst
    }
}

/// `max_T max_j |(sigma, mu_j)_T| / (||sigma||_T ||mu_j||_T)` over the skew
/// P1 basis `mu_j`.
pub fn weak_symmetry_audit(mesh: &Mesh, space: &AfwSpace, field: &StressField) -> f64 {
    let rule = make_quadrature(4).expect("degree 4 is supported");
    let mut worst = 0.0f64;
    for c in 0..mesh.num_cells() {
        let area = mesh.area(c);
        let mut mom = [0.0; 3];
        let mut mu_sq = [0.0; 3];
        let mut s_sq = 0.0;
        for (q, b) in rule.points.iter().enumerate() {
            let w = rule.weights[q] * area;
            let x = mesh.map_point(c, b);
            let (t, _) = field.eval(space, c, &x);
            s_sq += w * t.iter().map(|v| v * v).sum::<f64>();
            for (j, mu) in skew_basis(b).iter().enumerate() {
                mom[j] += w * (t[1] * mu[1] + t[2] * mu[2]);
                mu_sq[j] += w * (mu[1] * mu[1] + mu[2] * mu[2]);
            }
        }
        if s_sq == 0.0 {
            continue;
        }
        for j in 0..3 {
            worst = worst.max(mom[j].abs() / (s_sq.sqrt() * mu_sq[j].sqrt()));
        }
    }
    worst
}

////////////////////////////////////////////////////////////////////////////////
