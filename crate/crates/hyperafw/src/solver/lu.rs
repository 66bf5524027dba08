//! Sparse `L D U` factorization without pivoting for matrices with a
//! symmetric sparsity pattern.
//!
//! The factorization is up-looking: row `k` of `L` and column `k` of `U` are
//! obtained by two sparse triangular solves whose nonzero pattern is the
//! elimination-tree reach of row `k` of `A`. `L` (by columns) and `U` (by
//! rows) share a single index array.

use super::sparse::CsrMatrix;
use super::SolverError;

const NONE: usize = usize::MAX;

/// Ordering, elimination tree and the permuted pattern of the reduced matrix.
#[derive(Debug, Clone)]
pub struct SymbolicLu {
    pub n: usize,
    /// Full index of the dof eliminated at step `k`.
    pub order: Vec<usize>,
    /// Step of a full dof, `NONE` if the dof is not part of the system.
    pub position: Vec<usize>,
    parent: Vec<usize>,
    col_ptr: Vec<usize>,
    /// Permuted rows: (column, source of A[k, col], source of A[col, k]).
    row_ptr: Vec<usize>,
    entries: Vec<(usize, usize, usize)>,
}

impl SymbolicLu {
    /// `order` lists the retained rows/columns of `a` in elimination order.
    pub fn new(a: &CsrMatrix, order: Vec<usize>) -> SymbolicLu {
        let n = order.len();
        let mut position = vec![NONE; a.n];
        for (k, &o) in order.iter().enumerate() {
            position[o] = k;
        }
        let mut row_ptr = vec![0];
        let mut entries = Vec::with_capacity(a.nnz());
        for &o in &order {
            let start = entries.len();
            for p in a.row(o) {
                let j = a.col_idx[p];
                if position[j] != NONE {
                    let t = a.find(j, o).expect("pattern must be symmetric");
                    entries.push((position[j], p, t));
                }
            }
            entries[start..].sort_unstable_by_key(|e| e.0);
            row_ptr.push(entries.len());
        }
        let mut sym = SymbolicLu {
            n,
            order,
            position,
            parent: vec![NONE; n],
            col_ptr: Vec::new(),
            row_ptr,
            entries,
        };
        sym.etree();
        sym.column_counts();
        sym
    }

    fn row(&self, k: usize) -> &[(usize, usize, usize)] {
        &self.entries[self.row_ptr[k]..self.row_ptr[k + 1]]
    }

    fn etree(&mut self) {
        let mut ancestor = vec![NONE; self.n];
        for k in 0..self.n {
            for e in self.row_ptr[k]..self.row_ptr[k + 1] {
                let mut i = self.entries[e].0;
                while i != NONE && i < k {
                    let next = ancestor[i];
                    ancestor[i] = k;
                    if next == NONE {
                        self.parent[i] = k;
                    }
                    i = next;
                }
            }
        }
    }

    /// Writes the reach of row `k` into `stack[top..]` in topological order.
    fn ereach(&self, k: usize, flag: &mut [usize], stack: &mut [usize]) -> usize {
        let mut top = self.n;
        flag[k] = k;
        for &(j, _, _) in self.row(k) {
            if j >= k {
                break;
            }
            let mut len = 0;
            let mut i = j;
            while flag[i] != k {
                stack[len] = i;
                len += 1;
                flag[i] = k;
                i = self.parent[i];
            }
            while len > 0 {
                len -= 1;
                top -= 1;
                stack[top] = stack[len];
            }
        }
        top
    }

    fn column_counts(&mut self) {
        let mut counts = vec![0usize; self.n];
        let mut flag = vec![NONE; self.n];
        let mut stack = vec![0; self.n];
        for k in 0..self.n {
            let top = self.ereach(k, &mut flag, &mut stack);
            for &i in &stack[top..] {
                counts[i] += 1;
            }
        }
        let mut ptr = Vec::with_capacity(self.n + 1);
        ptr.push(0);
        for c in counts {
            ptr.push(ptr.last().unwrap() + c);
        }
        self.col_ptr = ptr;
    }

    pub fn factor_nnz(&self) -> usize {
        *self.col_ptr.last().unwrap_or(&0)
    }

    /// Numeric factorization of the values of `a` (same pattern as at construction).
    pub fn factor(&self, a: &CsrMatrix) -> Result<LuFactors, SolverError> {
        let n = self.n;
        let nnz = self.factor_nnz();
        let mut li = vec![0usize; nnz];
        let mut lx = vec![0.0; nnz];
        let mut ux = vec![0.0; nnz];
        let mut d = vec![0.0; n];
        let mut next: Vec<usize> = self.col_ptr[..n].to_vec();
        let mut x = vec![0.0; n];
        let mut y = vec![0.0; n];
        let mut flag = vec![NONE; n];
        let mut stack = vec![0; n];
        let scale = a.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for k in 0..n {
            let top = self.ereach(k, &mut flag, &mut stack);
            let mut dkk = 0.0;
            for &(j, p, t) in self.row(k) {
                if j < k {
                    x[j] = a.values[p];
                    y[j] = a.values[t];
                } else if j == k {
                    dkk = a.values[p];
                }
            }
            for &i in &stack[top..] {
                let w = x[i];
                let v = y[i];
                x[i] = 0.0;
                y[i] = 0.0;
                for q in self.col_ptr[i]..next[i] {
                    let r = li[q];
                    x[r] -= w * ux[q];
                    y[r] -= v * lx[q];
                }
                let di = d[i];
                dkk -= w * v / di;
                let q = next[i];
                li[q] = k;
                lx[q] = w / di;
                ux[q] = v / di;
                next[i] += 1;
            }
            if !(dkk.abs() > 1e-14 * scale) {
                return Err(SolverError::ZeroPivot { step: k, value: dkk });
            }
            d[k] = dkk;
        }
        Ok(LuFactors {
            col_ptr: self.col_ptr.clone(),
            li,
            lx,
            ux,
            d,
        })
    }
}

#[derive(Debug, Clone)]
pub struct LuFactors {
    col_ptr: Vec<usize>,
    li: Vec<usize>,
    lx: Vec<f64>,
    ux: Vec<f64>,
    d: Vec<f64>,
}

impl LuFactors {
    /// Solves in the permuted numbering, in place.
    pub fn solve_permuted(&self, b: &mut [f64]) {
        let n = self.d.len();
        for j in 0..n {
            let bj = b[j];
            if bj != 0.0 {
                for q in self.col_ptr[j]..self.col_ptr[j + 1] {
                    b[self.li[q]] -= self.lx[q] * bj;
                }
            }
        }
        for j in 0..n {
            b[j] /= self.d[j];
        }
        for i in (0..n).rev() {
            let mut s = b[i];
            for q in self.col_ptr[i]..self.col_ptr[i + 1] {
                s -= self.ux[q] * b[self.li[q]];
            }
            b[i] = s;
        }
    }

    /// Solves `A_rr x = b_r` where `r` are the retained dofs; full-length vectors,
    /// entries of other dofs are left zero in the result.
    pub fn solve(&self, sym: &SymbolicLu, b: &[f64]) -> Vec<f64> {
        let mut w: Vec<f64> = sym.order.iter().map(|&o| b[o]).collect();
        self.solve_permuted(&mut w);
        let mut x = vec![0.0; b.len()];
        for (k, &o) in sym.order.iter().enumerate() {
            x[o] = w[k];
        }
        x
    }
}

////////////////////////////////////////////////////////////////////////////////

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, DVector};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_fe_matrix(n: usize, seed: u64) -> CsrMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let elements: Vec<Vec<usize>> = (0..n)
            .map(|i| {
                let mut e = vec![i, (i + 1) % n, rng.random_range(0..n)];
                e.sort_unstable();
                e.dedup();
                e
            })
            .collect();
        let mut a = CsrMatrix::from_elements(n, elements.iter().map(|e| &e[..]));
        for i in 0..n {
            for p in a.row(i) {
                let j = a.col_idx[p];
                a.values[p] = if i == j { 10.0 } else { rng.random_range(-1.0..1.0) };
            }
        }
        a
    }

    #[test]
    fn matches_dense_solve_nonsymmetric() {
        let n = 60;
        let a = random_fe_matrix(n, 7);
        let order: Vec<usize> = (0..n).rev().collect();
        let sym = SymbolicLu::new(&a, order);
        let lu = sym.factor(&a).unwrap();
        let b: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let x = lu.solve(&sym, &b);
        let dense = DMatrix::from_fn(n, n, |i, j| a.get(i, j));
        let xd = dense.lu().solve(&DVector::from_vec(b.clone())).unwrap();
        for i in 0..n {
            assert!((x[i] - xd[i]).abs() < 1e-12, "{} {}", x[i], xd[i]);
        }
    }

    #[test]
    fn reduced_system_ignores_dropped_dofs() {
        let n = 30;
        let a = random_fe_matrix(n, 9);
        let keep: Vec<usize> = (0..n).filter(|i| i % 3 != 0).collect();
        let sym = SymbolicLu::new(&a, keep.clone());
        let lu = sym.factor(&a).unwrap();
        let b = vec![1.0; n];
        let x = lu.solve(&sym, &b);
        let m = keep.len();
        let dense = DMatrix::from_fn(m, m, |i, j| a.get(keep[i], keep[j]));
        let xd = dense.lu().solve(&DVector::from_element(m, 1.0)).unwrap();
        for (r, &i) in keep.iter().enumerate() {
            assert!((x[i] - xd[r]).abs() < 1e-12);
        }
        assert!(x.iter().step_by(3).all(|&v| v == 0.0));
    }

    #[test]
    fn zero_pivot_is_reported() {
        let e = [0usize, 1];
        let mut a = CsrMatrix::from_elements(2, [&e[..]]);
        a.values.copy_from_slice(&[0.0, 1.0, 1.0, 0.0]);
        let sym = SymbolicLu::new(&a, vec![0, 1]);
        assert!(matches!(sym.factor(&a), Err(SolverError::ZeroPivot { .. })));
    }
}
