//! Projected, preconditioned gradient descent on `(u, a)` with Armijo
//! backtracking, and continuation in the coupling `q`.
//!
//! The search direction is `−P⁻¹g` with the block-diagonal preconditioner
//! `P_u = S + diag(w((ℓ−qa)²/r² + 1))`, `P_a = M + diag(w q²u²/r²)`, and the
//! first trial step of every line search is the Barzilai-Borwein step in the
//! `P` metric.

use crate::diagnostics::{residuals_of, PdeResiduals};
use crate::electrostatic::{solve_phi_warm, PhiSolveOptions};
use crate::error::{Error, Result};
use crate::functionals::{
    i_reduced, k_q, objective_gradient, objective_value, EnergyBreakdown, Gradient, Objective,
    VortexState,
};
use crate::grid::{recenter_z, Bc, ScalarField, Stiffness};
use crate::linsolve::{pcg, ShiftedSystem};
use crate::par;
use crate::potentials::PotentialSpec;

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub max_outer_iter: usize,
    /// Target for `‖g‖/‖g_ref‖`.
    pub grad_tol: f64,
    /// Armijo sufficient-decrease constant.
    pub armijo_c: f64,
    pub backtrack: f64,
    pub max_backtracks: usize,
    pub recenter_every: usize,
    pub q_steps: Vec<f64>,
    pub phi: PhiSolveOptions,
    /// `‖u‖` below this fraction of its initial value counts as collapse.
    pub collapse_ratio: f64,
    /// Gradient norm that `grad_tol` is measured against. Defaults to the
    /// gradient norm of the initial state.
    pub grad_reference: Option<f64>,
}

/// Relative tolerance of the inner preconditioner solves.
const PRECOND_TOL: f64 = 1e-6;

/// Default upper end of the continuation. On the default 128×128 problem
/// the last bound state (`Λ < 1`) found lies between 0.8 and 1.
pub const DEFAULT_Q_MAX: f64 = 0.8;

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_outer_iter: 20_000,
            grad_tol: 1e-6,
            armijo_c: 1e-4,
            backtrack: 0.5,
            max_backtracks: 60,
            recenter_every: 50,
            q_steps: geometric_q_steps(DEFAULT_Q_MAX, 8),
            phi: PhiSolveOptions {
                tol: 1e-11,
                max_iter: 20_000,
            },
            collapse_ratio: 1e-8,
            grad_reference: None,
        }
    }
}

/// `[0, q_max/2^(n−1), …, q_max/2, q_max]`.
pub fn geometric_q_steps(q_max: f64, n: usize) -> Vec<f64> {
    let mut steps = vec![0.0];
    steps.extend((0..n).map(|k| q_max / 2f64.powi((n - 1 - k) as i32)));
    steps
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("grad_tol", self.grad_tol),
            ("armijo_c", self.armijo_c),
            ("collapse_ratio", self.collapse_ratio),
            ("phi_tol", self.phi.tol),
        ];
        for (key, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config(key, format!("must be positive, got {v}")));
            }
        }
        if !(self.backtrack > 0.0 && self.backtrack < 1.0) {
            return Err(Error::config("backtrack", "must lie in (0, 1)"));
        }
        if self.armijo_c >= 1.0 {
            return Err(Error::config("armijo_c", "must be below 1"));
        }
        if self.max_outer_iter == 0 || self.recenter_every == 0 || self.max_backtracks == 0 {
            return Err(Error::config(
                "max_outer_iter",
                "iteration counts must be positive",
            ));
        }
        if self.q_steps.first() != Some(&0.0) {
            return Err(Error::config("q_steps", "must start at 0"));
        }
        if self
            .q_steps
            .windows(2)
            .any(|w| !(w[1] >= w[0]) || !w[1].is_finite())
        {
            return Err(Error::config("q_steps", "must be finite and nondecreasing"));
        }
        Ok(())
    }
}

/// A named invariant with its measured value.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub pass: bool,
}

impl Check {
    fn at_most(name: &str, value: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            value,
            threshold,
            pass: value <= threshold,
        }
    }

    fn above(name: &str, value: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            value,
            threshold,
            pass: value > threshold,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub state: VortexState,
    pub potential: PotentialSpec,
    pub objective: Objective,
    /// Unit-frequency response `Φ_u`.
    pub phi_unit: ScalarField,
    /// Electric potential `φ = ωΦ_u`.
    pub phi: ScalarField,
    pub omega: f64,
    /// Hylenic charge `ω K_q`. Equals the state's `σ` under the charge
    /// constraint.
    pub sigma: f64,
    pub k_q: f64,
    pub energy: EnergyBreakdown,
    pub objective_value: f64,
    pub residuals: PdeResiduals,
    pub iterations: usize,
    pub grad_norm: f64,
    pub grad_reference: f64,
    pub u_norm_initial: f64,
    pub u_norm: f64,
    /// Objective after every accepted step, starting with the initial value.
    pub energy_history: Vec<f64>,
    /// Sum of the recentering translations.
    pub total_shift: f64,
    pub checks: Vec<Check>,
    pub converged: bool,
    pub collapsed: bool,
}

impl SolveReport {
    pub fn all_checks_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// Largest relative increase between consecutive accepted energies.
    pub fn max_energy_increase(&self) -> f64 {
        self.energy_history
            .windows(2)
            .map(|w| (w[1] - w[0]) / w[0].abs().max(f64::MIN_POSITIVE))
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Minimizes `objective` from `initial`.
///
/// Fails with `ZeroMass` when `u` collapses, `EnergyNonFinite` on a
/// non-finite energy, and `MaxIterations` (carrying the last report) when
/// the iteration budget runs out or the line search stalls.
pub fn minimize(
    initial: &VortexState,
    potential: &PotentialSpec,
    objective: Objective,
    cfg: &SolverConfig,
) -> Result<SolveReport> {
    minimize_warm(initial, None, potential, objective, cfg)
}

/// [`minimize`] with a starting guess for the `Φ_u` iteration. A guess that
/// already meets the solve tolerance is used unchanged.
pub fn minimize_warm(
    initial: &VortexState,
    warm_phi: Option<&ScalarField>,
    potential: &PotentialSpec,
    objective: Objective,
    cfg: &SolverConfig,
) -> Result<SolveReport> {
    let report = descend(initial, warm_phi, potential, objective, cfg)?;
    if report.collapsed {
        return Err(Error::ZeroMass);
    }
    if !report.converged {
        return Err(Error::MaxIterations(Box::new(report)));
    }
    Ok(report)
}

/// Like [`minimize`], but a collapse of `u` is returned as a report with
/// `collapsed` set instead of an error.
pub fn minimize_allow_collapse(
    initial: &VortexState,
    potential: &PotentialSpec,
    objective: Objective,
    cfg: &SolverConfig,
) -> Result<SolveReport> {
    let report = descend(initial, None, potential, objective, cfg)?;
    if !report.converged && !report.collapsed {
        return Err(Error::MaxIterations(Box::new(report)));
    }
    Ok(report)
}

struct Point {
    state: VortexState,
    phi: ScalarField,
    value: f64,
    grad: Gradient,
}

impl Point {
    fn new(
        state: VortexState,
        phi: ScalarField,
        potential: &PotentialSpec,
        objective: Objective,
    ) -> Result<Self> {
        let (value, _) = objective_value(&state, potential, &phi, objective)?;
        if !value.is_finite() {
            return Err(Error::EnergyNonFinite);
        }
        let grad = objective_gradient(&state, potential, &phi, objective)?;
        Ok(Self {
            state,
            phi,
            value,
            grad,
        })
    }
}

/// Report for `initial` as given, without taking any step. `converged` is
/// set when the residuals already meet `10·grad_tol`.
pub fn evaluate(
    initial: &VortexState,
    warm_phi: Option<&ScalarField>,
    potential: &PotentialSpec,
    objective: Objective,
    cfg: &SolverConfig,
) -> Result<SolveReport> {
    cfg.validate()?;
    let phi = solve_phi_warm(&initial.u, initial.q, &cfg.phi, warm_phi)?;
    let x = Point::new(initial.clone(), phi, potential, objective)?;
    let omega = current_omega(&x, objective)?;
    let converged = residuals_of(&x.state, potential, &x.phi, omega).max() <= 10.0 * cfg.grad_tol;
    let progress = Progress {
        iterations: 0,
        grad_reference: cfg.grad_reference.unwrap_or_else(|| x.grad.norm()),
        u_norm_initial: initial.u.norm(),
        history: vec![x.value],
        total_shift: 0.0,
        collapsed: false,
        converged,
    };
    finish(x, potential, objective, cfg, progress)
}

fn descend(
    initial: &VortexState,
    warm_phi: Option<&ScalarField>,
    potential: &PotentialSpec,
    objective: Objective,
    cfg: &SolverConfig,
) -> Result<SolveReport> {
    cfg.validate()?;
    if objective == Objective::ChargeConstrained {
        let check = potential.validate(3.0, 3000);
        if !(check.w1_nonnegative && check.w2_unit_mass) {
            return Err(Error::IneligiblePotential(potential.id()));
        }
    }
    let g = initial.grid().clone();
    let u_norm_initial = initial.u.norm();
    if u_norm_initial == 0.0 {
        if objective == Objective::ChargeConstrained {
            return Err(Error::ZeroMass);
        }
        let phi = ScalarField::zeros(&g, Bc::Neumann0, Bc::Dirichlet0);
        let point = Point::new(initial.clone(), phi, potential, objective)?;
        return finish(
            point,
            potential,
            objective,
            cfg,
            Progress::collapsed_at_start(),
        );
    }

    let phi = solve_phi_warm(&initial.u, initial.q, &cfg.phi, warm_phi)?;
    let mut x = Point::new(initial.clone(), phi, potential, objective)?;
    let mut progress = Progress {
        iterations: 0,
        grad_reference: cfg.grad_reference.unwrap_or_else(|| x.grad.norm()),
        u_norm_initial,
        history: vec![x.value],
        total_shift: 0.0,
        collapsed: false,
        converged: false,
    };
    if progress.grad_reference == 0.0 {
        progress.grad_reference = f64::MIN_POSITIVE;
    }

    let mut bb: Option<(Vec<f64>, Vec<f64>, Gradient)> = None;
    let mut step = 1.0;
    let mut stalled = false;
    loop {
        // Converged once the residuals meet 10·grad_tol and either the
        // gradient has dropped by grad_tol or the residuals meet grad_tol.
        let pg = projected_gradient(&x);
        let omega = current_omega(&x, objective)?;
        let res = residuals_of(&x.state, potential, &x.phi, omega).max();
        let small_grad = pg.norm() <= cfg.grad_tol * progress.grad_reference;
        if res <= 10.0 * cfg.grad_tol && (small_grad || res <= cfg.grad_tol) {
            progress.converged = true;
            break;
        }
        if progress.iterations >= cfg.max_outer_iter || stalled {
            break;
        }
        progress.iterations += 1;

        let precond = Preconditioner::new(&x.state);
        let (du, da) = precond.direction(&x.grad)?;
        if let Some((su, sa, g_prev)) = bb.take() {
            let sy = g.inner(&su, &diff(x.grad.u.values(), g_prev.u.values()))
                + g.inner(&sa, &diff(x.grad.a.values(), g_prev.a.values()));
            let sps = precond.energy(&su, &sa);
            if sy > 0.0 && sps > 0.0 {
                step = (sps / sy).clamp(1e-6, 1e6);
            }
        }

        let mut accepted = None;
        let mut trial = step;
        for _ in 0..cfg.max_backtracks {
            let cand = trial_state(&x.state, &du, &da, trial)?;
            let phi = solve_phi_warm(&cand.u, cand.q, &cfg.phi, Some(&x.phi))?;
            let (value, _) = match objective_value(&cand, potential, &phi, objective) {
                Ok(v) => v,
                Err(Error::ZeroMass) => (f64::INFINITY, 0.0),
                Err(e) => return Err(e),
            };
            if value.is_nan() {
                return Err(Error::EnergyNonFinite);
            }
            let su = diff(cand.u.values(), x.state.u.values());
            let sa = diff(cand.a.values(), x.state.a.values());
            let slope = g.inner(x.grad.u.values(), &su) + g.inner(x.grad.a.values(), &sa);
            let slack = 1e-14 * x.value.abs();
            if value.is_finite() && value <= x.value + cfg.armijo_c * slope + slack {
                accepted = Some((cand, phi, su, sa));
                break;
            }
            trial *= cfg.backtrack;
        }
        let Some((cand, phi, su, sa)) = accepted else {
            if bb.is_none() && step == 1.0 {
                stalled = true;
            }
            step = 1.0;
            continue;
        };
        step = trial;
        let next = Point::new(cand, phi, potential, objective)?;
        let prev = std::mem::replace(&mut x, next);
        progress.history.push(x.value);
        bb = Some((su, sa, prev.grad));

        if x.state.u.norm() < cfg.collapse_ratio * u_norm_initial {
            progress.collapsed = true;
            break;
        }
        if progress.iterations.is_multiple_of(cfg.recenter_every)
            && x.state.u.outer_bc() == Bc::Dirichlet0
        {
            let moved = recenter_z(&x.state.u, &[&x.state.a, &x.phi])?;
            if moved.shift != 0.0 {
                progress.total_shift += moved.shift;
                let mut c = moved.companions.into_iter();
                let state = VortexState {
                    u: moved.u,
                    a: c.next().expect("a"),
                    ..x.state.clone()
                };
                let warm = c.next().expect("phi");
                let phi = solve_phi_warm(&state.u, state.q, &cfg.phi, Some(&warm))?;
                x = Point::new(state, phi, potential, objective)?;
                bb = None;
                step = 1.0;
            }
        }
    }
    finish(x, potential, objective, cfg, progress)
}

struct Progress {
    iterations: usize,
    grad_reference: f64,
    u_norm_initial: f64,
    history: Vec<f64>,
    total_shift: f64,
    collapsed: bool,
    converged: bool,
}

impl Progress {
    fn collapsed_at_start() -> Self {
        Self {
            iterations: 0,
            grad_reference: 0.0,
            u_norm_initial: 0.0,
            history: Vec::new(),
            total_shift: 0.0,
            collapsed: true,
            converged: false,
        }
    }
}

fn current_omega(x: &Point, objective: Objective) -> Result<f64> {
    match objective {
        Objective::ChargeConstrained => Ok(x.state.sigma / k_q(&x.state, &x.phi)?),
        Objective::FixedFrequency(w) => Ok(w),
    }
}

/// Zeroes the `u` components that the projection `u ≥ 0` blocks.
fn projected_gradient(x: &Point) -> Gradient {
    let u = x.state.u.values();
    let gu: Vec<f64> = x
        .grad
        .u
        .values()
        .iter()
        .zip(u)
        .map(|(&gv, &uv)| if uv <= 0.0 && gv > 0.0 { 0.0 } else { gv })
        .collect();
    Gradient {
        u: x.grad.u.with_values(gu),
        ..x.grad.clone()
    }
}

fn diff(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn trial_state(s: &VortexState, du: &[f64], da: &[f64], t: f64) -> Result<VortexState> {
    let mut u = vec![0.0; du.len()];
    let uv = s.u.values();
    par::fill(&mut u, |k| (uv[k] + t * du[k]).max(0.0));
    let av = s.a.values();
    let a: Vec<f64> = if s.q == 0.0 && av.iter().all(|&v| v == 0.0) {
        av.to_vec()
    } else {
        av.iter().zip(da).map(|(x, d)| x + t * d).collect()
    };
    let state = VortexState {
        u: s.u.with_values(u),
        a: s.a.with_values(a),
        ..s.clone()
    };
    if !state.u.is_finite() || !state.a.is_finite() {
        return Err(Error::EnergyNonFinite);
    }
    Ok(state)
}

struct Preconditioner<'s> {
    state: &'s VortexState,
    su: Stiffness,
    shift_u: Vec<f64>,
    ma: Stiffness,
    shift_a: Vec<f64>,
    weights: Vec<f64>,
}

impl<'s> Preconditioner<'s> {
    fn new(state: &'s VortexState) -> Self {
        let g = state.grid();
        let weights = g.weights_field();
        let (u, a) = (state.u.values(), state.a.values());
        let (ell, q) = (state.ell as f64, state.q);
        let n_r = g.n_r();
        let mut shift_u = vec![0.0; u.len()];
        let mut shift_a = vec![0.0; u.len()];
        par::fill(&mut shift_u, |k| {
            let r = g.r()[k % n_r];
            let kk = (ell - q * a[k]) / r;
            weights[k] * (kk * kk + 1.0)
        });
        par::fill(&mut shift_a, |k| {
            let r = g.r()[k % n_r];
            weights[k] * q * q * u[k] * u[k] / (r * r)
        });
        Self {
            state,
            su: Stiffness::scalar(g, state.u.outer_bc()),
            shift_u,
            ma: Stiffness::magnetic(g, state.a.outer_bc()),
            shift_a,
            weights,
        }
    }

    /// `−P⁻¹g`.
    fn direction(&self, grad: &Gradient) -> Result<(Vec<f64>, Vec<f64>)> {
        let solve = |s: &Stiffness, shift: &[f64], gv: &[f64]| -> Result<Vec<f64>> {
            let rhs: Vec<f64> = gv.iter().zip(&self.weights).map(|(g, w)| -g * w).collect();
            let mut d = vec![0.0; rhs.len()];
            let sys = ShiftedSystem {
                stiffness: s,
                shift,
            };
            pcg(&sys, &rhs, &mut d, &self.weights, PRECOND_TOL, 50_000)?;
            Ok(d)
        };
        let du = solve(&self.su, &self.shift_u, grad.u.values())?;
        let da = if self.state.q == 0.0 {
            vec![0.0; du.len()]
        } else {
            solve(&self.ma, &self.shift_a, grad.a.values())?
        };
        Ok((du, da))
    }

    /// `sᵀP s`.
    fn energy(&self, su: &[f64], sa: &[f64]) -> f64 {
        let quad = |shift: &[f64], v: &[f64]| -> f64 {
            shift.iter().zip(v).map(|(m, x)| m * x * x).sum::<f64>()
        };
        let mut e = 2.0 * self.su.energy(su) + quad(&self.shift_u, su);
        if self.state.q != 0.0 {
            e += 2.0 * self.ma.energy(sa) + quad(&self.shift_a, sa);
        }
        e
    }
}

fn breakdown(
    state: &VortexState,
    potential: &PotentialSpec,
    phi: &ScalarField,
    objective: Objective,
) -> (EnergyBreakdown, f64) {
    let parts = i_reduced(state, potential);
    let k = k_q(state, phi).unwrap_or(0.0);
    let (omega, sigma, charge_term) = match objective {
        Objective::ChargeConstrained => {
            let s = state.sigma;
            (s / k, s, s * s / (2.0 * k))
        }
        Objective::FixedFrequency(w) => (w, w * k, -0.5 * w * w * k),
    };
    let total = parts.total() + charge_term;
    (
        EnergyBreakdown {
            dirichlet_u: parts.dirichlet_u,
            magnetic: parts.magnetic,
            centrifugal: parts.centrifugal,
            potential: parts.potential,
            charge_term,
            total,
            omega,
            k_q: k,
            sigma,
            q: state.q,
        },
        total,
    )
}

fn finish(
    x: Point,
    potential: &PotentialSpec,
    objective: Objective,
    cfg: &SolverConfig,
    progress: Progress,
) -> Result<SolveReport> {
    let (energy, value) = breakdown(&x.state, potential, &x.phi, objective);
    let omega = energy.omega;
    let residuals = if energy.k_q > 0.0 {
        residuals_of(&x.state, potential, &x.phi, omega)
    } else {
        PdeResiduals::default()
    };
    let phi = x.phi.map(|v| omega * v);
    let grad_norm = projected_gradient(&x).norm();
    let mut report = SolveReport {
        potential: *potential,
        objective,
        phi_unit: x.phi,
        phi,
        omega,
        sigma: energy.sigma,
        k_q: energy.k_q,
        energy,
        objective_value: value,
        residuals,
        iterations: progress.iterations,
        grad_norm,
        grad_reference: progress.grad_reference,
        u_norm_initial: progress.u_norm_initial,
        u_norm: x.state.u.norm(),
        energy_history: progress.history,
        total_shift: progress.total_shift,
        checks: Vec::new(),
        converged: progress.converged,
        collapsed: progress.collapsed,
        state: x.state,
    };
    report.checks = invariant_checks(&report, cfg);
    Ok(report)
}

/// Maximum-principle bounds, the sign condition, the frequency interval,
/// feasibility, monotonicity and the residual tolerances.
pub fn invariant_checks(report: &SolveReport, cfg: &SolverConfig) -> Vec<Check> {
    let s = &report.state;
    let (ell, q, omega) = (s.ell as f64, s.q, report.omega);
    let (u, a, phi) = (s.u.values(), s.a.values(), report.phi.values());
    let mut checks = Vec::new();

    let u_min = u.iter().copied().fold(f64::INFINITY, f64::min);
    checks.push(Check::above("u_nonnegative", u_min, -f64::MIN_POSITIVE));
    checks.push(Check::at_most(
        "energy_monotone",
        report.max_energy_increase().max(0.0),
        1e-14,
    ));
    if report.collapsed {
        return checks;
    }

    let phi_excess = phi
        .iter()
        .map(|p| q * p - omega)
        .fold(f64::NEG_INFINITY, f64::max);
    checks.push(Check::at_most("max_principle_phi", phi_excess, 1e-8));
    if ell > 0.0 {
        let a_excess = a
            .iter()
            .map(|v| q * v - ell)
            .fold(f64::NEG_INFINITY, f64::max);
        checks.push(Check::at_most("max_principle_a", a_excess, 1e-8));
        let sign_min = u
            .iter()
            .zip(a)
            .zip(phi)
            .filter(|((uv, _), _)| **uv > 0.0)
            .map(|((_, av), pv)| (ell - q * av) * (omega - q * pv))
            .fold(f64::INFINITY, f64::min);
        checks.push(Check::above("sign_condition", sign_min, -1e-10));
    }
    if report.objective == Objective::ChargeConstrained {
        checks.push(Check {
            name: "omega_interval".into(),
            value: omega,
            threshold: 1e6,
            pass: (1e-6..=1e6).contains(&omega),
        });
    }
    let tol = 10.0 * cfg.grad_tol;
    let r = &report.residuals;
    checks.push(Check::at_most("residual_z1", r.z1, tol));
    checks.push(Check::at_most("residual_z3", r.z3, tol));
    checks.push(Check::at_most("residual_z4", r.z4, tol));
    checks.push(Check::at_most("residual_continuity", r.continuity, 1e-12));
    checks
}

/// Outcome of a continuation in `q`.
#[derive(Debug)]
pub struct Continuation {
    pub reports: Vec<SolveReport>,
    /// Steps that failed, with the error.
    pub failures: Vec<(f64, Error)>,
    /// The `q` at which a collapse ended the continuation.
    pub aborted_at: Option<f64>,
}

impl Continuation {
    /// Largest `q` with a converged step.
    pub fn q_reached(&self) -> f64 {
        self.reports
            .iter()
            .filter(|r| r.converged)
            .map(|r| r.state.q)
            .fold(0.0, f64::max)
    }
}

/// Solves at every `q` in `cfg.q_steps`, warm-starting each step from the
/// previous converged one.
pub fn continuation(
    initial: &VortexState,
    potential: &PotentialSpec,
    cfg: &SolverConfig,
) -> Result<Continuation> {
    cfg.validate()?;
    let mut out = Continuation {
        reports: Vec::new(),
        failures: Vec::new(),
        aborted_at: None,
    };
    let mut current = initial.clone();
    let mut current_phi: Option<ScalarField> = None;
    let mut step_cfg = cfg.clone();
    for &q in &cfg.q_steps {
        let start = if q == 0.0 {
            VortexState::with_zero_potential(current.u.clone(), current.ell, 0.0, current.sigma)?
        } else {
            VortexState {
                q,
                ..current.clone()
            }
        };
        let warm = current_phi.as_ref().filter(|_| q > 0.0);
        match minimize_warm(
            &start,
            warm,
            potential,
            Objective::ChargeConstrained,
            &step_cfg,
        ) {
            Ok(mut report) => {
                add_continuation_checks(&mut report);
                if step_cfg.grad_reference.is_none() {
                    step_cfg.grad_reference = Some(report.grad_reference);
                }
                current = report.state.clone();
                current_phi = Some(report.phi_unit.clone());
                out.reports.push(report);
            }
            Err(Error::ZeroMass) => {
                out.failures.push((q, Error::ZeroMass));
                out.aborted_at = Some(q);
                break;
            }
            Err(Error::MaxIterations(mut report)) => {
                add_continuation_checks(&mut report);
                out.reports.push((*report).clone());
                out.failures.push((q, Error::MaxIterations(report)));
            }
            Err(e) => out.failures.push((q, e)),
        }
    }
    Ok(out)
}

/// Potentials vanish at `q = 0`; at `q > 0`, `φ ≠ 0`, and `a ≠ 0` exactly
/// when `ℓ ≠ 0`.
pub fn add_continuation_checks(report: &mut SolveReport) {
    let s = &report.state;
    let a_norm = s.a.norm();
    let phi_norm = report.phi.norm();
    if s.q == 0.0 {
        report
            .checks
            .push(Check::at_most("q0_a_vanishes", a_norm, 0.0));
        report
            .checks
            .push(Check::at_most("q0_phi_vanishes", phi_norm, 0.0));
        return;
    }
    report
        .checks
        .push(Check::above("phi_nonzero", phi_norm, 0.0));
    if s.ell == 0 {
        report
            .checks
            .push(Check::at_most("a_vanishes_without_winding", a_norm, 1e-10));
    } else {
        report
            .checks
            .push(Check::above("a_nonzero_with_winding", a_norm, 0.0));
    }
}
