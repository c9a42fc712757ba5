//! Jacobi-preconditioned conjugate gradients for the symmetric positive
//! definite systems assembled from [`Stiffness`](crate::grid::Stiffness)
//! plus a nonnegative diagonal.

use crate::error::{Error, Result};
use crate::grid::Stiffness;

/// `(S + diag(m)) x = b`.
pub(crate) struct ShiftedSystem<'a> {
    pub stiffness: &'a Stiffness,
    pub shift: &'a [f64],
}

/// Solves the system by PCG starting from `x`.
///
/// Convergence is measured as `√(Σ r_k² / w_k) ≤ tol · √(Σ b_k² / w_k)`,
/// i.e. the volume-weighted norm of the pointwise residual `r / w`. The
/// recursively updated residual is confirmed against `b − Ax` before
/// returning; on disagreement the iteration restarts from the current `x`.
pub(crate) fn pcg(
    sys: &ShiftedSystem<'_>,
    b: &[f64],
    x: &mut [f64],
    node_weight: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<()> {
    let n = b.len();
    let wnorm = |v: &[f64]| -> f64 {
        v.iter()
            .zip(node_weight)
            .map(|(a, w)| a * a / w)
            .sum::<f64>()
            .sqrt()
    };
    let b_norm = wnorm(b);
    if b_norm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(());
    }

    let mut diag = sys.stiffness.diagonal();
    for (d, m) in diag.iter_mut().zip(sys.shift) {
        *d += m;
    }

    let mut ax = vec![0.0; n];
    let mut r = vec![0.0; n];
    let mut z = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut ap = vec![0.0; n];
    let mut iterations = 0;
    let mut res;

    loop {
        apply(sys, x, &mut ax);
        for k in 0..n {
            r[k] = b[k] - ax[k];
        }
        res = wnorm(&r) / b_norm;
        if res <= tol {
            return Ok(());
        }
        if iterations >= max_iter {
            break;
        }
        for k in 0..n {
            z[k] = r[k] / diag[k];
        }
        p.copy_from_slice(&z);
        let mut rz = dot(&r, &z);

        while iterations < max_iter {
            iterations += 1;
            apply(sys, &p, &mut ap);
            let pap = dot(&p, &ap);
            if !(pap > 0.0) {
                return Err(Error::NoConvergence {
                    iterations,
                    residual: res,
                });
            }
            let alpha = rz / pap;
            for k in 0..n {
                x[k] += alpha * p[k];
                r[k] -= alpha * ap[k];
            }
            res = wnorm(&r) / b_norm;
            if res <= tol {
                break;
            }
            for k in 0..n {
                z[k] = r[k] / diag[k];
            }
            let rz_new = dot(&r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            for k in 0..n {
                p[k] = z[k] + beta * p[k];
            }
        }
    }
    Err(Error::NoConvergence {
        iterations,
        residual: res,
    })
}

fn apply(sys: &ShiftedSystem<'_>, x: &[f64], out: &mut [f64]) {
    sys.stiffness.apply_into(x, out);
    for ((o, m), xv) in out.iter_mut().zip(sys.shift).zip(x) {
        *o += m * xv;
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
