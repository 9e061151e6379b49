//! Thomas algorithm for constant-coefficient symmetric tridiagonal systems.

/// Solves `(diag·I + off·(S + Sᵀ)) x = rhs` where `S` is the shift matrix.
///
/// When `diag > 2|off|` and `off < 0` the matrix is an irreducible M-matrix and
/// every update below adds nonnegative quantities for a nonnegative `rhs`, so
/// the computed solution is nonnegative in floating point, and strictly
/// positive everywhere once `rhs` has a positive entry.
pub fn solve_symmetric_toeplitz(
    diag: f64,
    off: f64,
    rhs: &[f64],
    out: &mut [f64],
    scratch: &mut [f64],
) {
    let n = rhs.len();
    debug_assert_eq!(out.len(), n);
    debug_assert_eq!(scratch.len(), n);
    if n == 0 {
        return;
    }
    // scratch holds the modified super-diagonal, out the modified rhs
    let mut den = diag;
    scratch[0] = off / den;
    out[0] = rhs[0] / den;
    for i in 1..n {
        den = diag - off * scratch[i - 1];
        scratch[i] = off / den;
        out[i] = (rhs[i] - off * out[i - 1]) / den;
    }
    for i in (0..n - 1).rev() {
        out[i] -= scratch[i] * out[i + 1];
    }
}

/// General tridiagonal solve; `sub[0]` and `sup[n-1]` are ignored.
pub fn thomas_solve(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = rhs.len();
    assert!(n > 0 && sub.len() == n && diag.len() == n && sup.len() == n);
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    c[0] = sup[0] / diag[0];
    d[0] = rhs[0] / diag[0];
    for i in 1..n {
        let den = diag[i] - sub[i] * c[i - 1];
        c[i] = sup[i] / den;
        d[i] = (rhs[i] - sub[i] * d[i - 1]) / den;
    }
    for i in (0..n - 1).rev() {
        d[i] -= c[i] * d[i + 1];
    }
    d
}
