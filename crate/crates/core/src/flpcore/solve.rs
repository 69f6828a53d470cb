use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::svd::svd;
use super::system::WindowSystem;

/// Relative singular-value cutoff of the pseudo-inverse.
pub const RCOND: f64 = 1e-10;
/// `|v_last|` below this makes the total least squares direction unusable.
const TLS_LAST_MIN: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolverMethod {
    LS,
    TLS,
    Exact,
}

/// Coefficients `a_1..a_n` of `G(z) = 1 + sum_k a_k z^k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlpCoefficients {
    pub a: Vec<Complex64>,
    pub method: SolverMethod,
    /// Set when singular values were cut or the TLS solve fell back to LS.
    #[serde(default)]
    pub degenerate: bool,
}

/// Triangular factor of `[y1 | y2]`. Short systems are returned as is.
fn triangular(sys: &WindowSystem) -> DMatrix<Complex64> {
    let n = sys.n;
    let rows = sys.y1.nrows();
    let mut a = DMatrix::zeros(rows, n + 1);
    a.view_mut((0, 0), (rows, n)).copy_from(&sys.y1);
    a.set_column(n, &sys.y2);
    if rows > n + 1 {
        a.qr().r()
    } else {
        a
    }
}

fn pinv_solve(r11: DMatrix<Complex64>, r12: DVector<Complex64>, floor: f64) -> (DVector<Complex64>, bool) {
    let n = r11.ncols();
    let f = svd(&r11);
    let smax = f.s.first().copied().unwrap_or(0.0);
    let cut = (RCOND * smax).max(floor);
    let mut a = DVector::zeros(n);
    let mut degenerate = f.s.len() < n;
    for (j, &s) in f.s.iter().enumerate() {
        if s <= cut {
            degenerate = true;
            continue;
        }
        let coef = f.u.column(j).dotc(&r12) / s;
        a -= f.v.column(j) * coef;
    }
    (a, degenerate)
}

/// Minimum-norm least squares solution of `y1 a = -y2`.
pub fn solve_ls(sys: &WindowSystem) -> FlpCoefficients {
    let n = sys.n;
    let r = triangular(sys);
    let p = r.nrows();
    let r11 = r.view((0, 0), (p, n)).into_owned();
    let r12 = r.column(n).into_owned();
    let (a, degenerate) = pinv_solve(r11, r12, sys.sv_floor);
    FlpCoefficients {
        a: a.iter().cloned().collect(),
        method: SolverMethod::LS,
        degenerate,
    }
}

/// Total least squares `[y1 | y2] [a; 1] = 0`.
///
/// The noise subspace is spanned by the right singular vectors whose singular
/// values are indistinguishable from the smallest one: exactly zero (below
/// the floor) when noiseless, otherwise within the spread `(1 + g) / (1 - g)`
/// with `g = 2 sqrt((n + 1) / rows)` that white noise shows in a tall matrix.
/// The solution is the minimum-norm vector of that subspace with last entry 1,
/// which is the plain smallest-direction solution when the subspace is one
/// dimensional and the minimum-norm LS solution in the noiseless case. Falls
/// back to LS when the subspace has no usable last entry.
pub fn solve_tls(sys: &WindowSystem) -> FlpCoefficients {
    let n = sys.n;
    let r = triangular(sys);
    let fallback = || FlpCoefficients {
        method: SolverMethod::TLS,
        degenerate: true,
        ..solve_ls(sys)
    };
    if r.nrows() < n + 1 {
        return fallback();
    }
    let f = svd(&r);
    let sv = &f.s;
    let smax = sv.first().copied().unwrap_or(0.0);
    if smax <= sys.sv_floor {
        return FlpCoefficients {
            a: vec![Complex64::new(0.0, 0.0); n],
            method: SolverMethod::TLS,
            degenerate: true,
        };
    }
    let smin = sv.last().copied().unwrap_or(0.0);
    let exact_null = smin <= sys.sv_floor;
    let g = 2.0 * ((n + 1) as f64 / sys.y1.nrows() as f64).sqrt();
    let noise: Vec<usize> = (0..sv.len())
        .filter(|&j| {
            if exact_null {
                sv[j] <= sys.sv_floor
            } else if g < 1.0 {
                sv[j] <= smin * (1.0 + g) / (1.0 - g)
            } else {
                sv[j] == smin
            }
        })
        .collect();
    let last: Vec<Complex64> = noise.iter().map(|&j| f.v[(n, j)]).collect();
    let weight = last.iter().map(|z| z.norm_sqr()).sum::<f64>();
    if weight.sqrt() < TLS_LAST_MIN {
        return fallback();
    }
    let a = (0..n)
        .map(|k| {
            noise
                .iter()
                .zip(&last)
                .map(|(&j, v)| f.v[(k, j)] * v.conj())
                .sum::<Complex64>()
                / weight
        })
        .collect();
    FlpCoefficients {
        a,
        method: SolverMethod::TLS,
        degenerate: exact_null && noise.len() > 1,
    }
}

/// Dispatches on `method`; `Exact` is not a data solver and maps to LS.
pub fn solve(sys: &WindowSystem, method: SolverMethod) -> FlpCoefficients {
    match method {
        SolverMethod::TLS => solve_tls(sys),
        _ => solve_ls(sys),
    }
}

fn residual_vec(sys: &WindowSystem, a: &[Complex64]) -> DVector<Complex64> {
    let av = DVector::from_column_slice(a);
    &sys.y1 * av + &sys.y2
}

/// `||y1 a + y2||`.
pub fn ls_residual(sys: &WindowSystem, a: &[Complex64]) -> f64 {
    residual_vec(sys, a).norm()
}

/// Orthogonal-distance residual `||y1 a + y2||^2 / (1 + ||a||^2)`.
pub fn tls_residual(sys: &WindowSystem, a: &[Complex64]) -> f64 {
    let na: f64 = a.iter().map(|z| z.norm_sqr()).sum();
    residual_vec(sys, a).norm_squared() / (1.0 + na)
}
