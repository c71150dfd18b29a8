use super::sparse::CsrMatrix;
use crate::netmodel::Admittance;

/// Triplets of `dH/dv` (2n x 2n) with respect to `(theta, |v|)`.
///
/// Every stored `Y` entry produces its four partials, so the pattern equals
/// the adjacency structure of `Y` in each quadrant.
pub fn jacobian_triplets(y: &Admittance, theta: &[f64], vmag: &[f64]) -> Vec<(usize, usize, f64)> {
    let n = y.n();
    let mut out = Vec::with_capacity(4 * y.nnz());
    for l in 0..n {
        let vl = vmag[l];
        let mut dp_dtl = 0.0;
        let mut dp_dvl = 0.0;
        let mut dq_dtl = 0.0;
        let mut dq_dvl = 0.0;
        let mut diag = num_complex::Complex64::default();
        for &(h, ylh) in y.row(l) {
            if h == l {
                diag = ylh;
                continue;
            }
            let (g, b) = (ylh.re, ylh.im);
            let (s, c) = (theta[l] - theta[h]).sin_cos();
            let vh = vmag[h];
            let gc_bs = g * c + b * s;
            let gs_bc = g * s - b * c;
            // off-diagonal partials
            out.push((l, h, vl * vh * gs_bc));
            out.push((l, n + h, vl * gc_bs));
            out.push((n + l, h, -vl * vh * gc_bs));
            out.push((n + l, n + h, vl * gs_bc));
            dp_dtl -= vl * vh * gs_bc;
            dp_dvl += vh * gc_bs;
            dq_dtl += vl * vh * gc_bs;
            dq_dvl += vh * gs_bc;
        }
        dp_dvl += 2.0 * diag.re * vl;
        dq_dvl -= 2.0 * diag.im * vl;
        out.push((l, l, dp_dtl));
        out.push((l, n + l, dp_dvl));
        out.push((n + l, l, dq_dtl));
        out.push((n + l, n + l, dq_dvl));
    }
    out
}

/// Analytic `dH/dv` at `(theta, |v|)`.
pub fn jacobian(y: &Admittance, theta: &[f64], vmag: &[f64]) -> CsrMatrix {
    let n = y.n();
    CsrMatrix::from_triplets(2 * n, 2 * n, jacobian_triplets(y, theta, vmag))
}
