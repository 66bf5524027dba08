//! Quadrature on triangles and intervals.
//!
//! Triangle rules are collapsed (Duffy) products of a Gauss-Jacobi rule with
//! weight `(1-u)` and a Gauss-Legendre rule, so that every rule has strictly
//! positive weights and interior points. Points are stored in barycentric
//! coordinates and weights are normalized to sum to one.

use nalgebra::{DMatrix, SymmetricEigen};

use super::FeError;

pub const MAX_DEGREE: usize = 20;

#[derive(Debug, Clone)]
pub struct QuadratureRule {
    pub degree: usize,
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Cartesian coordinates on the reference triangle (0,0),(1,0),(0,1).
    pub fn reference_point(&self, q: usize) -> [f64; 2] {
        let p = self.points[q];
        [p[1], p[2]]
    }
}

/// Gauss-Jacobi nodes and weights on [-1,1] for the weight (1-x)^a (1+x)^b,
/// computed by the Golub-Welsch eigenvalue method.
pub fn gauss_jacobi(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut jm = DMatrix::<f64>::zeros(n, n);
    for k in 0..n {
        let kf = k as f64;
        let s = 2.0 * kf + a + b;
        let diag = if k == 0 {
            (b - a) / (a + b + 2.0)
        } else {
            (b * b - a * a) / (s * (s + 2.0))
        };
        jm[(k, k)] = diag;
        if k + 1 < n {
            let k1 = kf + 1.0;
            let s1 = 2.0 * k1 + a + b;
            let num = 4.0 * k1 * (k1 + a) * (k1 + b) * (k1 + a + b);
            let den = s1 * s1 * (s1 + 1.0) * (s1 - 1.0);
            let off = (num / den).sqrt();
            jm[(k, k + 1)] = off;
            jm[(k + 1, k)] = off;
        }
    }
    let mu0 = 2f64.powf(a + b + 1.0) * gamma_ratio(a, b);
    let eig = SymmetricEigen::new(jm);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let v0 = eig.eigenvectors[(0, i)];
            (eig.eigenvalues[i], mu0 * v0 * v0)
        })
        .collect();
    pairs.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
    pairs.into_iter().unzip()
}

// Gamma(a+1)Gamma(b+1)/Gamma(a+b+2) for the small nonnegative integer
// exponents used here.
fn gamma_ratio(a: f64, b: f64) -> f64 {
    let fact = |x: f64| -> f64 { (1..=(x.round() as u64)).map(|i| i as f64).product() };
    fact(a) * fact(b) / fact(a + b + 1.0)
}

/// Gauss-Legendre rule on [0,1] with `n` points (exact to degree 2n-1).
pub fn gauss_legendre_unit(n: usize) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_jacobi(n, 0.0, 0.0);
    let pts = x.iter().map(|t| 0.5 * (t + 1.0)).collect();
    let wts = w.iter().map(|t| 0.5 * t).collect();
    (pts, wts)
}

/// Triangle rule exact for all polynomials of total degree `nu`.
pub fn make_quadrature(nu: usize) -> Result<QuadratureRule, FeError> {
    if nu == 0 || nu > MAX_DEGREE {
        return Err(FeError::UnsupportedDegree(nu));
    }
    let n = nu / 2 + 1;
    let (xj, wj) = gauss_jacobi(n, 1.0, 0.0);
    let (v, wv) = gauss_legendre_unit(n);
    let mut points = Vec::with_capacity(n * n);
    let mut weights = Vec::with_capacity(n * n);
    let total_j: f64 = wj.iter().sum();
    for (i, &x) in xj.iter().enumerate() {
        let u = 0.5 * (x + 1.0);
        let wu = wj[i] / total_j;
        for (j, &t) in v.iter().enumerate() {
            let px = u;
            let py = (1.0 - u) * t;
            points.push([1.0 - px - py, px, py]);
            weights.push(wu * wv[j]);
        }
    }
    let s: f64 = weights.iter().sum();
    for w in weights.iter_mut() {
        *w /= s;
    }
    Ok(QuadratureRule {
        degree: nu,
        points,
        weights,
    })
}

/// Sub-triangle rule obtained by splitting the reference triangle `levels`
/// times toward barycentric vertex `corner`; each piece uses `base`.
///
/// Level `l` keeps the corner triangle scaled by 1/2 and covers the
/// remaining trapezoid by three triangles of the midpoint subdivision.
pub fn graded_rule(base: &QuadratureRule, corner: usize, levels: usize) -> QuadratureRule {
    let mut points = Vec::new();
    let mut weights = Vec::new();
    // Current corner triangle in barycentric coordinates of the reference cell.
    let mut tri: [[f64; 3]; 3] = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    tri.rotate_left(corner);
    // tri[0] is the corner vertex.
    let mut scale = 1.0;
    let mid = |p: [f64; 3], q: [f64; 3]| [0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1]), 0.5 * (p[2] + q[2])];
    let push = |t: [[f64; 3]; 3], w: f64, points: &mut Vec<[f64; 3]>, weights: &mut Vec<f64>| {
        for (q, p) in base.points.iter().enumerate() {
            let mut b = [0.0; 3];
            for k in 0..3 {
                b[k] = p[0] * t[0][k] + p[1] * t[1][k] + p[2] * t[2][k];
            }
            points.push(b);
            weights.push(base.weights[q] * w);
        }
    };
    for _ in 0..levels {
        let m01 = mid(tri[0], tri[1]);
        let m02 = mid(tri[0], tri[2]);
        let m12 = mid(tri[1], tri[2]);
        let w = scale * 0.25;
        push([m01, tri[1], m12], w, &mut points, &mut weights);
        push([m02, m12, tri[2]], w, &mut points, &mut weights);
        push([m12, m02, m01], w, &mut points, &mut weights);
        tri = [tri[0], m01, m02];
        scale *= 0.25;
    }
    push(tri, scale, &mut points, &mut weights);
    QuadratureRule {
        degree: base.degree,
        points,
        weights,
    }
}

////////////////////////////////////////////////////////////////////////////////
