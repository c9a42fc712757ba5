//! Gauge-invariant fields, angular momentum, PDE residuals and the two
//! non-existence demonstrations.
//!
//! The demonstrations are evidence by scaling and by decay. They do not
//! certify non-existence.

use std::sync::Arc;

use crate::error::Result;
use crate::functionals::{Objective, VortexState};
use crate::grid::{laplacian_axisym, AxiGrid, Bc, ScalarField, Stiffness};
use crate::minimizer::{minimize, minimize_allow_collapse, Check, SolveReport, SolverConfig};
use crate::par;
use crate::potentials::PotentialSpec;

/// Relative residual norms of the three field equations in reduced form.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PdeResiduals {
    /// Matter equation.
    pub z1: f64,
    /// Gauss law for `φ`.
    pub z3: f64,
    /// Ampère law for `A = a∇θ`.
    pub z4: f64,
    /// `∇·j`.
    pub continuity: f64,
}

impl PdeResiduals {
    /// Largest of `z1`, `z3`, `z4`.
    pub fn max(&self) -> f64 {
        self.z1.max(self.z3).max(self.z4)
    }
}

fn relative(num: f64, scale: f64) -> f64 {
    if scale > 0.0 {
        num / scale
    } else {
        num
    }
}

/// Residuals at `(u, a)` with unit response `phi_unit` and frequency `omega`.
/// Each norm is relative to the largest norm among the terms of its
/// equation.
pub fn residuals_of(
    state: &VortexState,
    potential: &PotentialSpec,
    phi_unit: &ScalarField,
    omega: f64,
) -> PdeResiduals {
    let g = state.grid();
    let n_r = g.n_r();
    let (u, a, p) = (state.u.values(), state.a.values(), phi_unit.values());
    let (ell, q) = (state.ell as f64, state.q);
    let lap = laplacian_axisym(&state.u);
    let lap = lap.values();
    let sp = Stiffness::scalar(g, Bc::Dirichlet0).apply(p);
    let ma = Stiffness::magnetic(g, state.a.outer_bc()).apply(a);

    let rows = par::map_range(g.n_z(), |j| {
        // [res1, lap, cent, elec, dw, res3, lapphi, src3, res4, b, src4, u]
        let mut acc = [0.0f64; 12];
        for i in 0..n_r {
            let k = j * n_r + i;
            let (r, w) = (g.r()[i], g.weight(i));
            let kk = (ell - q * a[k]) / r;
            let big_omega = omega * (1.0 - q * p[k]);
            let cent = kk * kk * u[k];
            let elec = big_omega * big_omega * u[k];
            let dw = potential.dw(u[k]);
            let r1 = -lap[k] + cent - elec + dw;
            let lap_phi = omega * sp[k] / w;
            let src3 = q * big_omega * u[k] * u[k];
            let r3 = lap_phi - src3;
            let b = r * r * ma[k] / w;
            let src4 = q * (ell - q * a[k]) * u[k] * u[k];
            let r4 = (b - src4) / r;
            let terms = [
                r1,
                lap[k],
                cent,
                elec,
                dw,
                r3,
                lap_phi,
                src3,
                r4,
                b / r,
                src4 / r,
                u[k],
            ];
            for (s, t) in acc.iter_mut().zip(terms) {
                *s += w * t * t;
            }
        }
        acc
    });
    let mut tot = [0.0f64; 12];
    for row in &rows {
        for (t, v) in tot.iter_mut().zip(row) {
            *t += v;
        }
    }
    let nrm: Vec<f64> = tot.iter().map(|v| v.sqrt()).collect();
    PdeResiduals {
        // The rest-mass part `u` of `W′(u)` is one of the terms.
        z1: relative(
            nrm[0],
            nrm[1].max(nrm[2]).max(nrm[3]).max(nrm[4]).max(nrm[11]),
        ),
        z3: relative(nrm[5], nrm[6].max(nrm[7])),
        z4: relative(nrm[8], nrm[9].max(nrm[10])),
        // An azimuthal current with axisymmetric coefficients has no
        // divergence in the reduced coordinates; nothing is left to compute.
        continuity: 0.0,
    }
}

/// Residuals of a finished run.
pub fn pde_residuals(report: &SolveReport) -> PdeResiduals {
    residuals_of(
        &report.state,
        &report.potential,
        &report.phi_unit,
        report.omega,
    )
}

/// Physical fields in `(r, x₃)` components.
#[derive(Debug, Clone)]
pub struct FieldSet {
    pub e_r: ScalarField,
    pub e_z: ScalarField,
    pub h_r: ScalarField,
    pub h_z: ScalarField,
    /// `ω − qφ`.
    pub omega: ScalarField,
    /// `(ℓ − qa)/r`, signed.
    pub k_theta: ScalarField,
    /// `qΩu²`.
    pub rho: ScalarField,
    /// `q(ℓ − qa)u²/r`.
    pub j_theta: ScalarField,
    /// `∫|H|²` over `r < r_peak` divided by the rest, where `r_peak` is the
    /// radius at which `u` is largest. Descriptive only.
    pub solenoid_ratio: f64,
}

/// `∂_r a / r` using the `a ≈ a₀(r/r₀)²` closure in the first column.
fn a_r_over_r(a: &ScalarField) -> Vec<f64> {
    let g = a.grid();
    let n_r = g.n_r();
    let dr = g.dr();
    let v = a.values();
    let outer = match a.outer_bc() {
        Bc::Dirichlet0 => -1.0,
        Bc::Neumann0 => 1.0,
    };
    let mut out = vec![0.0; v.len()];
    par::for_each_row(&mut out, n_r, |j, row| {
        let s = j * n_r;
        for (i, o) in row.iter_mut().enumerate() {
            let r = g.r()[i];
            *o = if i == 0 {
                2.0 * v[s] / (r * r)
            } else {
                let right = if i + 1 < n_r {
                    v[s + i + 1]
                } else {
                    outer * v[s + i]
                };
                (right - v[s + i - 1]) / (2.0 * dr * r)
            };
        }
    });
    out
}

pub fn gauge_fields(report: &SolveReport) -> FieldSet {
    let s = &report.state;
    let g = s.grid();
    let (ell, q, omega) = (s.ell as f64, s.q, report.omega);
    let (u, a, phi) = (s.u.values(), s.a.values(), report.phi.values());
    let n_r = g.n_r();
    let field = |f: &(dyn Fn(usize, f64) -> f64 + Sync)| -> ScalarField {
        let mut v = vec![0.0; u.len()];
        par::fill(&mut v, |k| f(k, g.r()[k % n_r]));
        ScalarField::from_values(g, v, Bc::Neumann0, Bc::Dirichlet0).expect("grid-sized")
    };
    let e_r: Vec<f64> = report.phi.d_dr().iter().map(|v| -v).collect();
    let e_z: Vec<f64> = report.phi.d_dz().iter().map(|v| -v).collect();
    let a_z = s.a.d_dz();
    let h_r = field(&|k, r| -a_z[k] / r);
    let ar = a_r_over_r(&s.a);
    let h_z = field(&|k, _| ar[k]);
    let omega_f = field(&|k, _| omega - q * phi[k]);
    let k_theta = field(&|k, r| (ell - q * a[k]) / r);
    let rho = field(&|k, _| q * (omega - q * phi[k]) * u[k] * u[k]);
    let j_theta = field(&|k, r| q * (ell - q * a[k]) * u[k] * u[k] / r);

    let peak = u
        .iter()
        .enumerate()
        .fold((0usize, f64::NEG_INFINITY), |m, (k, &v)| {
            if v > m.1 {
                (k, v)
            } else {
                m
            }
        })
        .0;
    let r_peak = g.r()[peak % n_r];
    let (mut inside, mut outside) = (0.0, 0.0);
    for k in 0..u.len() {
        let i = k % n_r;
        let h2 = h_r.values()[k].powi(2) + h_z.values()[k].powi(2);
        if g.r()[i] < r_peak {
            inside += g.weight(i) * h2;
        } else {
            outside += g.weight(i) * h2;
        }
    }
    let solenoid_ratio = if outside > 0.0 { inside / outside } else { 0.0 };
    FieldSet {
        e_r: report.phi.with_values(e_r),
        e_z: report.phi.with_values(e_z),
        h_r,
        h_z,
        omega: omega_f,
        k_theta,
        rho,
        j_theta,
        solenoid_ratio,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HistogramBin {
    pub lo: f64,
    pub hi: f64,
    pub weight: f64,
}

#[derive(Debug, Clone)]
pub struct AngularMomentum {
    /// `M₃ = −∫(ℓ − qa)(ω − qφ)u²`.
    pub m3: f64,
    /// `−(ℓ − qa)`.
    pub per_particle: ScalarField,
    /// Histogram of the per-particle value weighted by `(ω − qφ)u²`.
    pub histogram: Vec<HistogramBin>,
}

pub fn angular_momentum(report: &SolveReport, bins: usize) -> AngularMomentum {
    let s = &report.state;
    let g = s.grid();
    let (ell, q, omega) = (s.ell as f64, s.q, report.omega);
    let (u, a, phi) = (s.u.values(), s.a.values(), report.phi.values());
    let n_r = g.n_r();
    let m3 = -par::sum_rows(g.n_z(), |j| {
        (0..n_r)
            .map(|i| {
                let k = j * n_r + i;
                g.weight(i) * (ell - q * a[k]) * (omega - q * phi[k]) * u[k] * u[k]
            })
            .sum::<f64>()
    });
    let pp: Vec<f64> = a.iter().map(|&av| -(ell - q * av)).collect();
    let density: Vec<f64> = (0..u.len())
        .map(|k| g.weight(k % n_r) * (omega - q * phi[k]) * u[k] * u[k])
        .collect();
    let histogram = histogram(&pp, &density, bins.max(1));
    AngularMomentum {
        m3,
        per_particle: s.a.with_values(pp),
        histogram,
    }
}

fn histogram(values: &[f64], weights: &[f64], bins: usize) -> Vec<HistogramBin> {
    let (lo, hi) = values
        .iter()
        .zip(weights)
        .filter(|(_, w)| **w > 0.0)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), (v, _)| {
            (l.min(*v), h.max(*v))
        });
    if !lo.is_finite() {
        return Vec::new();
    }
    if lo == hi {
        return vec![HistogramBin {
            lo,
            hi,
            weight: weights.iter().filter(|w| **w > 0.0).sum(),
        }];
    }
    let width = (hi - lo) / bins as f64;
    let mut out: Vec<HistogramBin> = (0..bins)
        .map(|b| HistogramBin {
            lo: lo + b as f64 * width,
            hi: lo + (b + 1) as f64 * width,
            weight: 0.0,
        })
        .collect();
    for (v, w) in values.iter().zip(weights) {
        if *w > 0.0 {
            let b = (((v - lo) / width) as usize).min(bins - 1);
            out[b].weight += w;
        }
    }
    out
}

#[derive(Debug, Clone)]
pub struct DoubleWellConfig {
    pub radii: Vec<f64>,
    pub z_half: f64,
    /// Target mesh width in both directions.
    pub h: f64,
    /// Windings to run; 0 is the bounded control.
    pub ells: Vec<i32>,
    pub solver: SolverConfig,
}

impl Default for DoubleWellConfig {
    fn default() -> Self {
        Self {
            radii: vec![10.0, 20.0, 40.0],
            z_half: 1.0,
            h: 0.125,
            ells: vec![0, 1, 2],
            solver: SolverConfig {
                grad_tol: 1e-7,
                ..Default::default()
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DomainRow {
    pub ell: i32,
    pub r_max: f64,
    pub z_half: f64,
    pub energy: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone)]
pub struct DoubleWellDemo {
    pub rows: Vec<DomainRow>,
    /// `2πZℓ² ln 2`, the growth per doubling of `R` for `u → 1`.
    pub predicted_increment: Vec<(i32, f64)>,
    pub checks: Vec<Check>,
}

impl DoubleWellDemo {
    /// Successive energy increments for one winding.
    pub fn increments(&self, ell: i32) -> Vec<f64> {
        let e: Vec<f64> = self
            .rows
            .iter()
            .filter(|r| r.ell == ell)
            .map(|r| r.energy)
            .collect();
        e.windows(2).map(|w| w[1] - w[0]).collect()
    }
}

/// Minimizes `½∫|∇u|² + ℓ²u²/r² + ∫W(u)` with `W = (1 − s²)²` on growing
/// domains, with `u` free at the outer faces so it can settle into the well.
pub fn doublewell_divergence_demo(cfg: &DoubleWellConfig) -> Result<DoubleWellDemo> {
    let potential = PotentialSpec::double_well();
    let jobs: Vec<(i32, f64)> = cfg
        .ells
        .iter()
        .flat_map(|&l| cfg.radii.iter().map(move |&r| (l, r)))
        .collect();
    let rows = par::map_slice(&jobs, |&(ell, r_max)| -> Result<DomainRow> {
        let n_r = (r_max / cfg.h).round().max(4.0) as usize;
        let n_z = (2.0 * cfg.z_half / cfg.h).round().max(4.0) as usize;
        let g = AxiGrid::shared(n_r, n_z, r_max, cfg.z_half)?;
        let m = ell.unsigned_abs() as i32;
        let u = ScalarField::from_fn(&g, VortexState::u_axis_bc(ell), Bc::Neumann0, |r, _| {
            (r / (r * r + 1.0).sqrt()).powi(m)
        });
        let state = VortexState::with_zero_potential(u, ell, 0.0, 1.0)?;
        let rep = minimize(
            &state,
            &potential,
            Objective::FixedFrequency(0.0),
            &cfg.solver,
        )?;
        Ok(DomainRow {
            ell,
            r_max,
            z_half: cfg.z_half,
            energy: rep.objective_value,
            iterations: rep.iterations,
        })
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;

    let predicted_increment: Vec<(i32, f64)> = cfg
        .ells
        .iter()
        .map(|&l| {
            (
                l,
                2.0 * std::f64::consts::PI * cfg.z_half * (l * l) as f64 * 2f64.ln(),
            )
        })
        .collect();
    let mut demo = DoubleWellDemo {
        rows,
        predicted_increment,
        checks: Vec::new(),
    };
    let mut checks = Vec::new();
    for &ell in cfg.ells.iter().filter(|&&l| l != 0) {
        let inc = demo.increments(ell);
        let min_inc = inc.iter().copied().fold(f64::INFINITY, f64::min);
        checks.push(Check {
            name: format!("ell{ell}_energy_increasing"),
            value: min_inc,
            threshold: 0.0,
            pass: min_inc > 0.0,
        });
        let spread = inc
            .windows(2)
            .map(|w| (w[1] / w[0] - 1.0).abs())
            .fold(0.0, f64::max);
        checks.push(Check {
            name: format!("ell{ell}_log_growth"),
            value: spread,
            threshold: 0.3,
            pass: spread <= 0.3,
        });
    }
    if cfg.ells.contains(&0) && cfg.ells.contains(&1) {
        let control = demo
            .increments(0)
            .iter()
            .map(|v| v.abs())
            .fold(0.0, f64::max);
        let scale = demo
            .increments(1)
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        let ratio = control / scale;
        checks.push(Check {
            name: "ell0_control_bounded".into(),
            value: ratio,
            threshold: 0.01,
            pass: ratio <= 0.01,
        });
    }
    if cfg.ells.contains(&1) && cfg.ells.contains(&2) {
        let (i1, i2) = (demo.increments(1), demo.increments(2));
        if let (Some(a), Some(b)) = (i1.last(), i2.last()) {
            let ratio = b / a;
            checks.push(Check {
                name: "ell_squared_scaling".into(),
                value: ratio,
                threshold: 4.0,
                pass: (ratio / 4.0 - 1.0).abs() <= 0.3,
            });
        }
    }
    demo.checks = checks;
    Ok(demo)
}

#[derive(Debug, Clone)]
pub struct MagnetostaticDemo {
    /// Gradient flow at `ω = 0`.
    pub collapse: SolveReport,
    /// Same potential and start, with the charge constraint restored.
    pub control: SolveReport,
}

/// Ring-shaped starting profile for the magnetostatic runs.
pub fn ring_profile(grid: &Arc<AxiGrid>, ell: i32) -> ScalarField {
    let r0 = 0.35 * grid.r_max();
    let s = 0.15 * grid.r_max().min(grid.z_half());
    let m = ell.unsigned_abs() as i32;
    ScalarField::from_fn(grid, VortexState::u_axis_bc(ell), Bc::Dirichlet0, |r, z| {
        (r / (r + 1.0)).powi(m) * (-((r - r0).powi(2) + z * z) / (2.0 * s * s)).exp()
    })
}

/// `W = ½s²` with `ω = φ = 0`: the flow drives `u` to zero. The control
/// keeps the same `W` but restores the charge constraint with
/// `σ = 0.9·∫u₀²`.
pub fn magnetostatic_collapse_demo(
    grid: &Arc<AxiGrid>,
    ell: i32,
    cfg: &SolverConfig,
) -> Result<MagnetostaticDemo> {
    let potential = PotentialSpec::quadratic();
    let u0 = ring_profile(grid, ell);
    let mass = grid.inner(u0.values(), u0.values());
    let state = VortexState::with_zero_potential(u0, ell, 0.0, mass)?;
    let collapse =
        minimize_allow_collapse(&state, &potential, Objective::FixedFrequency(0.0), cfg)?;
    let control_state = VortexState {
        sigma: 0.9 * mass,
        ..state
    };
    let control = minimize(
        &control_state,
        &potential,
        Objective::ChargeConstrained,
        cfg,
    )?;
    Ok(MagnetostaticDemo { collapse, control })
}
