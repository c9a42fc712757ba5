//! Torus trial functions and the energy/charge ratio scan.
//!
//! `T_{λ,μ}` is the solid torus `{(r, x₃) : dist((r, x₃), (λ, 0)) ≤ μ}`. The
//! trial profile is `s0` on `T_{λ,λ/2}`, zero outside `T_{λ,λ/2+1}`, and a
//! quintic smoothstep in the distance across the unit shell between them.

use std::sync::Arc;

use crate::electrostatic::PhiSolveOptions;
use crate::error::{Error, Result};
use crate::functionals::{e_sigma, VortexState};
use crate::grid::{AxiGrid, Bc, ScalarField};
use crate::par;
use crate::potentials::PotentialSpec;

/// `6t⁵ − 15t⁴ + 10t³` on `[0, 1]`, clamped outside. Max slope 15/8.
#[inline]
pub fn smoothstep(t: f64) -> f64 {
    let t = t.clamp(0.0, 1.0);
    t * t * t * (t * (6.0 * t - 15.0) + 10.0)
}

#[derive(Debug, Clone)]
pub struct TorusTrial {
    pub lambda: f64,
    pub s0: f64,
    pub field: ScalarField,
    /// `∫u_λ²`.
    pub sigma_lambda: f64,
}

impl TorusTrial {
    /// Inner (plateau) and outer (support) minor radii.
    pub fn radii(&self) -> (f64, f64) {
        (0.5 * self.lambda, 0.5 * self.lambda + 1.0)
    }

    /// Trial state with `a = 0` and `σ = σ_λ`.
    pub fn state(&self, ell: i32, q: f64) -> Result<VortexState> {
        VortexState::with_zero_potential(self.field.clone(), ell, q, self.sigma_lambda)
    }
}

/// Trial profile value at `(r, x₃)`.
pub fn torus_profile(lambda: f64, s0: f64, r: f64, z: f64) -> f64 {
    let d = ((r - lambda).powi(2) + z * z).sqrt();
    s0 * smoothstep(0.5 * lambda + 1.0 - d)
}

/// Builds `u_λ` on `grid`. The axis condition is Dirichlet, which the
/// profile satisfies because its support stays at `r ≥ λ/2 − 1 > 0`.
pub fn build_torus_trial(
    lambda: f64,
    s0: f64,
    grid: &Arc<AxiGrid>,
    potential: &PotentialSpec,
) -> Result<TorusTrial> {
    if !(lambda > 2.0) {
        return Err(Error::config(
            "lambda",
            format!("torus radius must exceed 2, got {lambda}"),
        ));
    }
    if !(potential.eval(s0).n < 0.0) {
        return Err(Error::config(
            "s0",
            format!("need N(s0) < 0, got N({s0}) = {}", potential.eval(s0).n),
        ));
    }
    let outer = 0.5 * lambda + 1.0;
    if lambda + outer > grid.r_max() - grid.dr() || outer > grid.z_half() - grid.dz() {
        return Err(Error::DomainTooSmall(format!(
            "torus (λ = {lambda}) needs R > {} and Z > {}, grid has R = {}, Z = {}",
            lambda + outer,
            outer,
            grid.r_max(),
            grid.z_half()
        )));
    }
    let field = ScalarField::from_fn(grid, Bc::Dirichlet0, Bc::Dirichlet0, |r, z| {
        torus_profile(lambda, s0, r, z)
    });
    let v = field.values();
    let sigma_lambda = grid.inner(v, v);
    Ok(TorusTrial {
        lambda,
        s0,
        field,
        sigma_lambda,
    })
}

/// One `(λ, q)` entry of the scan. The four terms add up to `Λ`:
/// `½ + σ_λ/(2K_q) + ∫(|∇u|² + ℓ²u²/r²)/(2∫u²) + ∫N(u)/∫u²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanRow {
    pub lambda: f64,
    pub q: f64,
    pub sigma: f64,
    /// `Λ_{σ_λ,q}(u_λ, 0)` computed from the full energy.
    pub ratio: f64,
    /// `∫u²/(2σ_λ)`, identically ½.
    pub mass_term: f64,
    pub charge_term: f64,
    pub gradient_term: f64,
    pub nonlinear_term: f64,
    pub k_q: f64,
}

impl ScanRow {
    pub fn terms_sum(&self) -> f64 {
        self.mass_term + self.charge_term + self.gradient_term + self.nonlinear_term
    }
}

/// Evaluates `Λ` and its decomposition for every `(λ, q)` pair.
pub fn lambda_scan(
    lambdas: &[f64],
    qs: &[f64],
    s0: f64,
    ell: i32,
    grid: &Arc<AxiGrid>,
    potential: &PotentialSpec,
    opts: &PhiSolveOptions,
) -> Result<Vec<ScanRow>> {
    let trials: Vec<TorusTrial> = lambdas
        .iter()
        .map(|&l| build_torus_trial(l, s0, grid, potential))
        .collect::<Result<_>>()?;
    let pairs: Vec<(usize, f64)> = (0..trials.len())
        .flat_map(|t| qs.iter().map(move |&q| (t, q)))
        .collect();
    par::map_slice(&pairs, |&(t, q)| {
        scan_row(&trials[t], q, ell, potential, opts)
    })
    .into_iter()
    .collect()
}

fn scan_row(
    trial: &TorusTrial,
    q: f64,
    ell: i32,
    potential: &PotentialSpec,
    opts: &PhiSolveOptions,
) -> Result<ScanRow> {
    let state = trial.state(ell, q)?;
    let phi = state.solve_phi(opts)?;
    let e = e_sigma(&state, potential, &phi)?;
    let grid = state.grid();
    let mass = state.mass();
    let n_integral = grid.integrate(
        &state
            .u
            .values()
            .iter()
            .map(|&s| potential.eval(s).n)
            .collect::<Vec<_>>(),
    );
    Ok(ScanRow {
        lambda: trial.lambda,
        q,
        sigma: e.sigma,
        ratio: e.lambda(),
        mass_term: mass / (2.0 * e.sigma),
        charge_term: e.sigma / (2.0 * e.k_q),
        gradient_term: (e.dirichlet_u + e.centrifugal) / mass,
        nonlinear_term: n_integral / mass,
        k_q: e.k_q,
    })
}

/// Ratios `gradient_term(λ_{k+1}) / gradient_term(λ_k)` at fixed `q`,
/// paired with the `λ_k/λ_{k+1}` a pure `1/λ` law predicts.
pub fn gradient_decay_ratios(rows: &[ScanRow], q: f64) -> Vec<(f64, f64)> {
    let mut at_q: Vec<&ScanRow> = rows.iter().filter(|r| r.q == q).collect();
    at_q.sort_by(|a, b| a.lambda.total_cmp(&b.lambda));
    at_q.windows(2)
        .map(|w| {
            (
                w[1].gradient_term / w[0].gradient_term,
                w[0].lambda / w[1].lambda,
            )
        })
        .collect()
}
