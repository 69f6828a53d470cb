//! Thin singular value decomposition of small dense complex matrices.
//!
//! nalgebra 0.35 returns inaccurate factors for some rank-deficient
//! triangular matrices (the recomposition error can be of order one), so the
//! solvers use faer and keep nalgebra only as a fallback when faer reports
//! non-convergence.

use nalgebra::DMatrix;
use num_complex::Complex64;

/// `a = u diag(s) v^H` with `s` sorted in non-increasing order.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: DMatrix<Complex64>,
    pub s: Vec<f64>,
    pub v: DMatrix<Complex64>,
}

pub fn svd(a: &DMatrix<Complex64>) -> Svd {
    let (m, n) = a.shape();
    let fa = faer::Mat::<Complex64>::from_fn(m, n, |i, j| a[(i, j)]);
    match fa.thin_svd() {
        Ok(f) => {
            let (u, v, s) = (f.U(), f.V(), f.S().column_vector());
            let k = s.nrows();
            Svd {
                u: DMatrix::from_fn(m, k, |i, j| u[(i, j)]),
                s: (0..k).map(|j| s[j].re).collect(),
                v: DMatrix::from_fn(n, k, |i, j| v[(i, j)]),
            }
        }
        Err(_) => fallback(a),
    }
}

fn fallback(a: &DMatrix<Complex64>) -> Svd {
    let f = a.clone().svd(true, true);
    let mut order: Vec<usize> = (0..f.singular_values.len()).collect();
    order.sort_by(|&x, &y| f.singular_values[y].total_cmp(&f.singular_values[x]));
    let (u, vt) = (f.u.unwrap(), f.v_t.unwrap());
    Svd {
        u: DMatrix::from_fn(u.nrows(), order.len(), |i, j| u[(i, order[j])]),
        s: order.iter().map(|&j| f.singular_values[j]).collect(),
        v: DMatrix::from_fn(vt.ncols(), order.len(), |i, j| vt[(order[j], i)].conj()),
    }
}

/// Singular values in non-increasing order.
pub fn singular_values(a: &DMatrix<Complex64>) -> Vec<f64> {
    svd(a).s
}
