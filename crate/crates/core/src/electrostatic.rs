//! Unit-frequency electrostatic response `Φ_u`:
//! `−ΔΦ + q²u²Φ = qu²`, Neumann on the axis and Dirichlet at the outer faces.
//!
//! The discrete operator is a symmetric M-matrix, so the discrete maximum
//! principle gives `0 ≤ qΦ ≤ 1` exactly (up to the solve tolerance).

use crate::error::Result;
use crate::grid::{Bc, ScalarField, Stiffness};
use crate::linsolve::{pcg, ShiftedSystem};
use crate::par;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhiSolveOptions {
    /// Relative residual tolerance in the volume-weighted norm.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for PhiSolveOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 20_000,
        }
    }
}

/// Solves for `Φ_u` from a zero initial guess.
pub fn solve_phi(u: &ScalarField, q: f64, opts: &PhiSolveOptions) -> Result<ScalarField> {
    solve_phi_warm(u, q, opts, None)
}

/// Solves for `Φ_u`, starting the iteration from `warm` when given.
pub fn solve_phi_warm(
    u: &ScalarField,
    q: f64,
    opts: &PhiSolveOptions,
    warm: Option<&ScalarField>,
) -> Result<ScalarField> {
    let grid = u.grid();
    let mut phi = match warm {
        Some(w) if q > 0.0 => w.values().to_vec(),
        _ => vec![0.0; grid.len()],
    };
    if q == 0.0 {
        return ScalarField::from_values(grid, phi, Bc::Neumann0, Bc::Dirichlet0);
    }
    let w = grid.weights_field();
    let uv = u.values();
    let mut shift = vec![0.0; uv.len()];
    par::fill(&mut shift, |k| w[k] * q * q * uv[k] * uv[k]);
    let mut rhs = vec![0.0; uv.len()];
    par::fill(&mut rhs, |k| w[k] * q * uv[k] * uv[k]);
    let stiffness = Stiffness::scalar(grid, Bc::Dirichlet0);
    let sys = ShiftedSystem {
        stiffness: &stiffness,
        shift: &shift,
    };
    pcg(&sys, &rhs, &mut phi, &w, opts.tol, opts.max_iter)?;
    ScalarField::from_values(grid, phi, Bc::Neumann0, Bc::Dirichlet0)
}

/// `‖−ΔΦ + q²u²Φ − qu²‖ / ‖qu²‖` in the volume-weighted norm; 0 when `q = 0`
/// and `Φ ≡ 0`.
pub fn phi_relative_residual(u: &ScalarField, q: f64, phi: &ScalarField) -> f64 {
    let grid = u.grid();
    let stiffness = Stiffness::scalar(grid, Bc::Dirichlet0);
    let sp = stiffness.apply(phi.values());
    let uv = u.values();
    let mut res = vec![0.0; uv.len()];
    par::fill(&mut res, |k| {
        let w = grid.weight(k % grid.n_r());
        sp[k] / w + q * q * uv[k] * uv[k] * phi.values()[k] - q * uv[k] * uv[k]
    });
    let src: Vec<f64> = uv.iter().map(|v| q * v * v).collect();
    let scale = grid.norm(&src);
    let r = grid.norm(&res);
    if scale == 0.0 {
        r
    } else {
        r / scale
    }
}

/// `q ∫ Φ_u u²` for each `q`. Solves run concurrently.
pub fn smallq_coupling(
    u: &ScalarField,
    q_list: &[f64],
    opts: &PhiSolveOptions,
) -> Result<Vec<(f64, f64)>> {
    par::map_slice(q_list, |&q| {
        let phi = solve_phi(u, q, opts)?;
        let g = u.grid();
        let uv = u.values();
        let u2: Vec<f64> = uv.iter().map(|v| v * v).collect();
        Ok((q, q * g.inner(phi.values(), &u2)))
    })
    .into_iter()
    .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::AxiGrid;

    fn bump() -> ScalarField {
        let g = AxiGrid::shared(24, 24, 6.0, 6.0).unwrap();
        ScalarField::from_fn(&g, Bc::Neumann0, Bc::Dirichlet0, |r, z| {
            2.0 * (-(r * r + z * z) / 2.0).exp()
        })
    }

    #[test]
    fn zero_coupling_gives_zero_potential() {
        let phi = solve_phi(&bump(), 0.0, &PhiSolveOptions::default()).unwrap();
        assert!(phi.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn solution_meets_tolerance_and_bounds() {
        let u = bump();
        for q in [0.1, 1.0, 5.0] {
            let phi = solve_phi(&u, q, &PhiSolveOptions::default()).unwrap();
            assert!(phi_relative_residual(&u, q, &phi) <= 1e-10);
            for &v in phi.values() {
                assert!(q * v >= -1e-10 && q * v <= 1.0 + 1e-10, "qΦ = {}", q * v);
            }
        }
    }

    #[test]
    fn warm_start_reaches_the_same_solution() {
        let u = bump();
        let opts = PhiSolveOptions {
            tol: 1e-12,
            ..Default::default()
        };
        let cold = solve_phi(&u, 0.7, &opts).unwrap();
        let near = solve_phi(&u, 0.69, &opts).unwrap();
        let warm = solve_phi_warm(&u, 0.7, &opts, Some(&near)).unwrap();
        let diff = cold
            .values()
            .iter()
            .zip(warm.values())
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(diff < 1e-9 * cold.max_abs());
    }

    #[test]
    fn iteration_cap_is_reported() {
        let opts = PhiSolveOptions {
            tol: 1e-14,
            max_iter: 2,
        };
        let err = solve_phi(&bump(), 1.0, &opts).unwrap_err();
        assert!(matches!(
            err,
            crate::Error::NoConvergence { iterations: 2, .. }
        ));
    }

    #[test]
    fn coupling_is_nonnegative_and_quadratic() {
        let u = bump();
        let t = smallq_coupling(&u, &[0.0, 0.01, 0.02], &PhiSolveOptions::default()).unwrap();
        assert_eq!(t[0].1, 0.0);
        assert!(t[1].1 > 0.0);
        let ratio = t[2].1 / t[1].1;
        assert!((ratio - 4.0).abs() < 0.2, "ratio {ratio}");
    }
}
