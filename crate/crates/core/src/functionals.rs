//! Reduced energy functionals on the discrete grid and their exact gradients.
//!
//! With `A = a∇θ` and `Φ = Φ_u` the discrete energies are
//!
//! ```text
//! I(u, a)  = ½uᵀS u + ½aᵀM a + ½Σ w (ℓ − qa)² u²/r² + Σ w W(u)
//! K_q(u)   = Σ w (1 − qΦ) u²
//! E_σ(u,a) = I + σ²/(2K_q)
//! ```
//!
//! where `S` and `M` are the face-based stiffness forms of `∫|∇u|²` and
//! `∫|∇×A|²`. Gradients are taken of these discrete expressions and reported
//! in the volume-weighted inner product, so `⟨g, v⟩ = Σ w g v` is the exact
//! directional derivative.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::electrostatic::{solve_phi, PhiSolveOptions};
use crate::error::{Error, Result};
use crate::grid::{AxiGrid, Bc, ScalarField, Stiffness};
use crate::par;
use crate::potentials::PotentialSpec;

/// Minimization unknowns `(u, a)` with the parameters `(ℓ, q, σ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct VortexState {
    /// Matter amplitude, `u ≥ 0`.
    pub u: ScalarField,
    /// Azimuthal potential amplitude in `A = a∇θ`.
    pub a: ScalarField,
    pub ell: i32,
    pub q: f64,
    pub sigma: f64,
}

impl VortexState {
    pub fn new(u: ScalarField, a: ScalarField, ell: i32, q: f64, sigma: f64) -> Result<Self> {
        if !Arc::ptr_eq(u.grid(), a.grid()) && u.grid() != a.grid() {
            return Err(Error::InvalidGrid("u and a live on different grids".into()));
        }
        if !(q >= 0.0 && q.is_finite()) {
            return Err(Error::config(
                "q",
                format!("coupling must be finite and >= 0, got {q}"),
            ));
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::config(
                "sigma",
                format!("charge must be finite and > 0, got {sigma}"),
            ));
        }
        if !u.is_finite() || !a.is_finite() {
            return Err(Error::InvalidGrid("non-finite field values".into()));
        }
        if u.values().iter().any(|&v| v < 0.0) {
            return Err(Error::InvalidGrid("u must be nonnegative".into()));
        }
        Ok(Self {
            u,
            a,
            ell,
            q,
            sigma,
        })
    }

    pub fn grid(&self) -> &Arc<AxiGrid> {
        self.u.grid()
    }

    /// Axis condition for `u`: Dirichlet when the phase winds, Neumann otherwise.
    pub fn u_axis_bc(ell: i32) -> Bc {
        if ell == 0 {
            Bc::Neumann0
        } else {
            Bc::Dirichlet0
        }
    }

    /// A state with `a ≡ 0` and standard boundary conditions.
    pub fn with_zero_potential(u: ScalarField, ell: i32, q: f64, sigma: f64) -> Result<Self> {
        let a = ScalarField::zeros(u.grid(), Bc::Dirichlet0, Bc::Dirichlet0);
        Self::new(u, a, ell, q, sigma)
    }

    /// `∫u²`.
    pub fn mass(&self) -> f64 {
        let v = self.u.values();
        self.grid().inner(v, v)
    }

    pub fn solve_phi(&self, opts: &PhiSolveOptions) -> Result<ScalarField> {
        solve_phi(&self.u, self.q, opts)
    }
}

/// The parts of `E_σ`, plus the derived frequency and normalizer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyBreakdown {
    /// `½∫|∇u|²`
    pub dirichlet_u: f64,
    /// `½∫|∇×A|²`
    pub magnetic: f64,
    /// `½∫(ℓ − qa)²u²/r²`
    pub centrifugal: f64,
    /// `∫W(u)`
    pub potential: f64,
    /// `σ²/(2K_q)`
    pub charge_term: f64,
    pub total: f64,
    /// `σ/K_q`
    pub omega: f64,
    pub k_q: f64,
    pub sigma: f64,
    pub q: f64,
}

impl EnergyBreakdown {
    /// Energy per unit charge, `E_σ/σ`.
    pub fn lambda(&self) -> f64 {
        self.total / self.sigma
    }

    /// Electric charge `qσ`.
    pub fn electric_charge(&self) -> f64 {
        self.q * self.sigma
    }

    pub fn i_total(&self) -> f64 {
        self.dirichlet_u + self.magnetic + self.centrifugal + self.potential
    }
}

/// The four summands of `I`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IParts {
    pub dirichlet_u: f64,
    pub magnetic: f64,
    pub centrifugal: f64,
    pub potential: f64,
}

impl IParts {
    pub fn total(&self) -> f64 {
        self.dirichlet_u + self.magnetic + self.centrifugal + self.potential
    }
}

/// Which reduced functional is being minimized.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Objective {
    /// `E_σ = I + σ²/(2K_q)` with `ω = σ/K_q` dependent.
    ChargeConstrained,
    /// `I − ω²K_q/2` at a prescribed frequency (`ω = 0` gives `I` alone).
    FixedFrequency(f64),
}

/// `K_q(u) = ∫(1 − qΦ_u)u²`.
pub fn k_q(state: &VortexState, phi: &ScalarField) -> Result<f64> {
    let g = state.grid();
    let (u, p, q) = (state.u.values(), phi.values(), state.q);
    let n_r = g.n_r();
    let k = if q == 0.0 {
        g.inner(u, u)
    } else {
        par::sum_rows(g.n_z(), |j| {
            let s = j * n_r;
            (0..n_r)
                .map(|i| u[s + i] * u[s + i] * (1.0 - q * p[s + i]) * g.weight(i))
                .sum::<f64>()
        })
    };
    if !(k > 0.0) {
        return Err(Error::ZeroMass);
    }
    Ok(k)
}

/// `I(u, A)` in reduced coordinates.
pub fn i_reduced(state: &VortexState, potential: &PotentialSpec) -> IParts {
    let g = state.grid();
    let dirichlet_u = Stiffness::scalar(g, state.u.outer_bc()).energy(state.u.values());
    let magnetic = Stiffness::magnetic(g, state.a.outer_bc()).energy(state.a.values());
    let (u, a) = (state.u.values(), state.a.values());
    let (ell, q) = (state.ell as f64, state.q);
    let n_r = g.n_r();
    let local = par::map_range(g.n_z(), |j| {
        let s = j * n_r;
        let mut cent = 0.0;
        let mut pot = 0.0;
        for i in 0..n_r {
            let (r, w) = (g.r()[i], g.weight(i));
            let (uv, av) = (u[s + i], a[s + i]);
            let k = (ell - q * av) / r;
            cent += w * k * k * uv * uv;
            pot += w * potential.w(uv);
        }
        (cent, pot)
    });
    let centrifugal = 0.5 * local.iter().map(|t| t.0).sum::<f64>();
    let potential = local.iter().map(|t| t.1).sum::<f64>();
    IParts {
        dirichlet_u,
        magnetic,
        centrifugal,
        potential,
    }
}

/// `E_σ,q(u, A) = I + σ²/(2K_q)`.
pub fn e_sigma(
    state: &VortexState,
    potential: &PotentialSpec,
    phi: &ScalarField,
) -> Result<EnergyBreakdown> {
    let k = k_q(state, phi)?;
    let parts = i_reduced(state, potential);
    let charge_term = state.sigma * state.sigma / (2.0 * k);
    Ok(EnergyBreakdown {
        dirichlet_u: parts.dirichlet_u,
        magnetic: parts.magnetic,
        centrifugal: parts.centrifugal,
        potential: parts.potential,
        charge_term,
        total: parts.total() + charge_term,
        omega: state.sigma / k,
        k_q: k,
        sigma: state.sigma,
        q: state.q,
    })
}

/// Value of the selected objective and the frequency it implies.
pub fn objective_value(
    state: &VortexState,
    potential: &PotentialSpec,
    phi: &ScalarField,
    objective: Objective,
) -> Result<(f64, f64)> {
    match objective {
        Objective::ChargeConstrained => {
            let e = e_sigma(state, potential, phi)?;
            Ok((e.total, e.omega))
        }
        Objective::FixedFrequency(omega) => {
            let i = i_reduced(state, potential).total();
            if omega == 0.0 {
                return Ok((i, 0.0));
            }
            let k = k_q(state, phi)?;
            Ok((i - 0.5 * omega * omega * k, omega))
        }
    }
}

/// Field energy evaluated term by term with `φ = ωΦ_u`:
/// `½∫(|∇u|² + |∇φ|² + |∇×A|² + ((ℓ−qa)²/r² + (ω−qφ)²)u²) + ∫W(u)`.
pub fn total_energy_direct(
    state: &VortexState,
    potential: &PotentialSpec,
    phi: &ScalarField,
    omega: f64,
) -> f64 {
    let g = state.grid();
    let parts = i_reduced(state, potential);
    let grad_phi = omega * omega * Stiffness::scalar(g, Bc::Dirichlet0).energy(phi.values());
    let (u, p, q) = (state.u.values(), phi.values(), state.q);
    let n_r = g.n_r();
    let electric = 0.5
        * par::sum_rows(g.n_z(), |j| {
            let s = j * n_r;
            (0..n_r)
                .map(|i| {
                    let big_omega = omega - q * omega * p[s + i];
                    g.weight(i) * big_omega * big_omega * u[s + i] * u[s + i]
                })
                .sum::<f64>()
        });
    parts.total() + grad_phi + electric
}

/// Volume-metric gradient of an objective with respect to `(u, a)`.
#[derive(Debug, Clone)]
pub struct Gradient {
    pub u: ScalarField,
    pub a: ScalarField,
    /// Frequency used in the `K_q` derivative.
    pub omega: f64,
}

impl Gradient {
    /// `‖(g_u, g_a)‖` in the volume-weighted norm.
    pub fn norm(&self) -> f64 {
        let g = self.u.grid();
        (g.inner(self.u.values(), self.u.values()) + g.inner(self.a.values(), self.a.values()))
            .sqrt()
    }
}

/// Exact gradient of `E_σ`: `g_u = −Δu + (ℓ−qa)²u/r² + W′(u) − ω²u(1−qΦ)²`
/// and `g_a = (b − q(ℓ−qa)u²)/r²` with `b` the curl-curl operator.
pub fn grad_e(
    state: &VortexState,
    potential: &PotentialSpec,
    phi: &ScalarField,
) -> Result<Gradient> {
    let omega = state.sigma / k_q(state, phi)?;
    Ok(gradient_at_frequency(state, potential, phi, omega))
}

/// Gradient of the selected objective.
pub fn objective_gradient(
    state: &VortexState,
    potential: &PotentialSpec,
    phi: &ScalarField,
    objective: Objective,
) -> Result<Gradient> {
    match objective {
        Objective::ChargeConstrained => grad_e(state, potential, phi),
        Objective::FixedFrequency(omega) => Ok(gradient_at_frequency(state, potential, phi, omega)),
    }
}

/// Gradient of `I − ω²K_q/2` at fixed `ω`, which coincides with the
/// gradient of `E_σ` when `ω = σ/K_q`.
pub fn gradient_at_frequency(
    state: &VortexState,
    potential: &PotentialSpec,
    phi: &ScalarField,
    omega: f64,
) -> Gradient {
    let g = state.grid();
    let su = Stiffness::scalar(g, state.u.outer_bc()).apply(state.u.values());
    let ma = Stiffness::magnetic(g, state.a.outer_bc()).apply(state.a.values());
    let (u, a, p) = (state.u.values(), state.a.values(), phi.values());
    let (ell, q, w2) = (state.ell as f64, state.q, omega * omega);
    let n_r = g.n_r();
    let mut gu = vec![0.0; u.len()];
    let mut ga = vec![0.0; u.len()];
    par::for_each_row(&mut gu, n_r, |j, row| {
        let s = j * n_r;
        for (i, o) in row.iter_mut().enumerate() {
            let k = s + i;
            let (r, w) = (g.r()[i], g.weight(i));
            let kk = (ell - q * a[k]) / r;
            let screen = 1.0 - q * p[k];
            *o = su[k] / w + kk * kk * u[k] + potential.dw(u[k]) - w2 * u[k] * screen * screen;
        }
    });
    par::for_each_row(&mut ga, n_r, |j, row| {
        let s = j * n_r;
        for (i, o) in row.iter_mut().enumerate() {
            let k = s + i;
            let (r, w) = (g.r()[i], g.weight(i));
            *o = ma[k] / w - q * (ell - q * a[k]) * u[k] * u[k] / (r * r);
        }
    });
    Gradient {
        u: state.u.with_values(gu),
        a: state.a.with_values(ga),
        omega,
    }
}

/// Smooth nonnegative state built from a few seeded Gaussian blobs, with
/// `u ∝ r^|ℓ|` and `a ∝ r²` near the axis.
pub fn random_smooth_state(
    grid: &Arc<AxiGrid>,
    ell: i32,
    q: f64,
    sigma: f64,
    seed: u64,
) -> Result<VortexState> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (rm, zh) = (grid.r_max(), grid.z_half());
    let blobs: Vec<(f64, f64, f64, f64)> = (0..3)
        .map(|_| {
            (
                rng.gen_range(0.6..1.0),
                rng.gen_range(0.2..0.45) * rm,
                rng.gen_range(-0.25..0.25) * zh,
                rng.gen_range(0.12..0.2) * rm.min(zh),
            )
        })
        .collect();
    let a_blobs: Vec<(f64, f64, f64, f64)> = (0..2)
        .map(|_| {
            (
                rng.gen_range(-1.0..1.0) / (rm * rm),
                rng.gen_range(0.2..0.45) * rm,
                rng.gen_range(-0.25..0.25) * zh,
                rng.gen_range(0.15..0.25) * rm.min(zh),
            )
        })
        .collect();
    let m = ell.unsigned_abs() as i32;
    let u = ScalarField::from_fn(grid, VortexState::u_axis_bc(ell), Bc::Dirichlet0, |r, z| {
        let profile = (r / (r + 1.0)).powi(m);
        profile
            * blobs
                .iter()
                .map(|&(c, r0, z0, s)| c * gauss(r, z, r0, z0, s))
                .sum::<f64>()
    });
    let a = if q > 0.0 {
        ScalarField::from_fn(grid, Bc::Dirichlet0, Bc::Dirichlet0, |r, z| {
            r * r
                * a_blobs
                    .iter()
                    .map(|&(c, r0, z0, s)| c * gauss(r, z, r0, z0, s))
                    .sum::<f64>()
        })
    } else {
        ScalarField::zeros(grid, Bc::Dirichlet0, Bc::Dirichlet0)
    };
    VortexState::new(u, a, ell, q, sigma)
}

/// Seeded smooth signed direction `(w_u, w_a)` for derivative checks.
pub fn random_direction(state: &VortexState, seed: u64) -> (ScalarField, ScalarField) {
    let grid = state.grid();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let (rm, zh) = (grid.r_max(), grid.z_half());
    let mut blob = || {
        (
            rng.gen_range(-1.0..1.0),
            rng.gen_range(0.2..0.6) * rm,
            rng.gen_range(-0.3..0.3) * zh,
            rng.gen_range(0.1..0.2) * rm.min(zh),
        )
    };
    let bu: Vec<_> = (0..3).map(|_| blob()).collect();
    let ba: Vec<_> = (0..3).map(|_| blob()).collect();
    let wu = ScalarField::from_fn(grid, state.u.axis_bc(), state.u.outer_bc(), |r, z| {
        (r / (r + 1.0))
            * bu.iter()
                .map(|&(c, r0, z0, s)| c * gauss(r, z, r0, z0, s))
                .sum::<f64>()
    });
    let wa = if state.q > 0.0 {
        ScalarField::from_fn(grid, Bc::Dirichlet0, Bc::Dirichlet0, |r, z| {
            (r * r / (rm * rm))
                * ba.iter()
                    .map(|&(c, r0, z0, s)| c * gauss(r, z, r0, z0, s))
                    .sum::<f64>()
        })
    } else {
        ScalarField::zeros(grid, Bc::Dirichlet0, Bc::Dirichlet0)
    };
    (wu, wa)
}

#[inline]
fn gauss(r: f64, z: f64, r0: f64, z0: f64, s: f64) -> f64 {
    (-((r - r0).powi(2) + (z - z0).powi(2)) / (2.0 * s * s)).exp()
}

/// One directional derivative comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirectionalCheck {
    pub analytic: f64,
    pub finite_difference: f64,
    pub relative_error: f64,
}

/// Compares `⟨∇E_σ, w⟩` with `(E_σ(x+εw) − E_σ(x−εw))/2ε`, re-solving `Φ`
/// at each perturbed state.
pub fn directional_check(
    state: &VortexState,
    potential: &PotentialSpec,
    direction: (&ScalarField, &ScalarField),
    eps: f64,
    opts: &PhiSolveOptions,
) -> Result<DirectionalCheck> {
    let phi = state.solve_phi(opts)?;
    let grad = grad_e(state, potential, &phi)?;
    let g = state.grid();
    let analytic = g.inner(grad.u.values(), direction.0.values())
        + g.inner(grad.a.values(), direction.1.values());
    let energy_at = |t: f64| -> Result<f64> {
        let shifted = |f: &ScalarField, d: &ScalarField| {
            f.with_values(
                f.values()
                    .iter()
                    .zip(d.values())
                    .map(|(x, y)| x + t * y)
                    .collect(),
            )
        };
        let s = VortexState {
            u: shifted(&state.u, direction.0),
            a: shifted(&state.a, direction.1),
            ..state.clone()
        };
        let phi = s.solve_phi(opts)?;
        Ok(e_sigma(&s, potential, &phi)?.total)
    };
    let fd = (energy_at(eps)? - energy_at(-eps)?) / (2.0 * eps);
    Ok(DirectionalCheck {
        analytic,
        finite_difference: fd,
        relative_error: (analytic - fd).abs() / analytic.abs().max(fd.abs()).max(f64::MIN_POSITIVE),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Arc<AxiGrid> {
        AxiGrid::shared(24, 24, 8.0, 8.0).unwrap()
    }

    fn tight() -> PhiSolveOptions {
        PhiSolveOptions {
            tol: 1e-13,
            max_iter: 50_000,
        }
    }

    #[test]
    fn k_q_reduces_to_mass_at_zero_coupling() {
        let s = random_smooth_state(&grid(), 1, 0.0, 3.0, 1).unwrap();
        let phi = s.solve_phi(&tight()).unwrap();
        assert_eq!(k_q(&s, &phi).unwrap(), s.mass());
    }

    #[test]
    fn k_q_of_zero_field_is_zero_mass() {
        let g = grid();
        let u = ScalarField::zeros(&g, Bc::Dirichlet0, Bc::Dirichlet0);
        let s = VortexState::with_zero_potential(u, 1, 0.3, 1.0).unwrap();
        let phi = s.solve_phi(&tight()).unwrap();
        assert!(matches!(k_q(&s, &phi), Err(Error::ZeroMass)));
        assert!(matches!(
            e_sigma(&s, &PotentialSpec::default(), &phi),
            Err(Error::ZeroMass)
        ));
    }

    #[test]
    fn k_bounds_with_coupling() {
        let s = random_smooth_state(&grid(), 1, 0.3, 3.0, 2).unwrap();
        let phi = s.solve_phi(&tight()).unwrap();
        let k = k_q(&s, &phi).unwrap();
        assert!(k > 0.0 && k < s.mass());
    }

    #[test]
    fn i_reduced_vanishes_on_trivial_state() {
        let g = grid();
        let u = ScalarField::zeros(&g, Bc::Dirichlet0, Bc::Dirichlet0);
        let s = VortexState::with_zero_potential(u, 1, 0.3, 1.0).unwrap();
        assert_eq!(i_reduced(&s, &PotentialSpec::default()).total(), 0.0);
    }

    #[test]
    fn centrifugal_term_is_quadratic_in_winding() {
        let g = grid();
        let u = ScalarField::from_fn(&g, Bc::Dirichlet0, Bc::Dirichlet0, |r, z| {
            if (2.0..=3.0).contains(&r) && z.abs() < 1.0 {
                1.0
            } else {
                0.0
            }
        });
        let c = |ell| {
            let s = VortexState::with_zero_potential(u.clone(), ell, 0.0, 1.0).unwrap();
            i_reduced(&s, &PotentialSpec::default()).centrifugal
        };
        assert!((c(2) - 4.0 * c(1)).abs() < 1e-13 * c(2));
    }

    #[test]
    fn breakdown_sums_and_lambda_identity() {
        let s = random_smooth_state(&grid(), 1, 0.3, 10.0, 3).unwrap();
        let phi = s.solve_phi(&tight()).unwrap();
        let e = e_sigma(&s, &PotentialSpec::default(), &phi).unwrap();
        let parts = e.dirichlet_u + e.magnetic + e.centrifugal + e.potential + e.charge_term;
        assert!((e.total - parts).abs() <= 1e-12 * e.total);
        assert!((e.lambda() * e.sigma - e.total).abs() <= 1e-14 * e.total);
        assert!((e.omega * e.k_q - e.sigma).abs() <= 1e-14 * e.sigma);
        assert_eq!(e.electric_charge(), 0.3 * 10.0);
        for part in [
            e.dirichlet_u,
            e.magnetic,
            e.centrifugal,
            e.potential,
            e.charge_term,
        ] {
            assert!(part >= 0.0);
        }
    }

    #[test]
    fn static_energy_at_zero_frequency() {
        let s = random_smooth_state(&grid(), 1, 0.0, 10.0, 4).unwrap();
        let phi = s.solve_phi(&tight()).unwrap();
        let p = PotentialSpec::default();
        let parts = i_reduced(&s, &p);
        let direct = total_energy_direct(&s, &p, &phi, 0.0);
        assert_eq!(parts.magnetic, 0.0);
        assert!(
            (direct - (parts.dirichlet_u + parts.centrifugal + parts.potential)).abs()
                < 1e-13 * direct
        );
    }

    #[test]
    fn direct_energy_matches_reduced_identity() {
        let p = PotentialSpec::default();
        for seed in 0..4 {
            let s = random_smooth_state(&grid(), 1, 0.4, 10.0, seed).unwrap();
            let phi = s.solve_phi(&tight()).unwrap();
            let k = k_q(&s, &phi).unwrap();
            let direct = total_energy_direct(&s, &p, &phi, 1.0);
            let reduced = i_reduced(&s, &p).total() + 0.5 * k;
            assert!(direct >= 0.0);
            assert!(
                (direct - reduced).abs() <= 1e-8 * direct,
                "{direct} vs {reduced}"
            );
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let p = PotentialSpec::default();
        let s = random_smooth_state(&grid(), 1, 0.3, 10.0, 5).unwrap();
        for seed in 0..3 {
            let (wu, wa) = random_direction(&s, seed);
            let c = directional_check(&s, &p, (&wu, &wa), 1e-5, &tight()).unwrap();
            assert!(c.relative_error <= 1e-6, "{c:?}");
        }
    }

    #[test]
    fn linear_case_gradient_is_operator_application() {
        // Quadratic W, ω = 0, q = 0: g_u = (−Δ + ℓ²/r² + 1)u.
        let g = grid();
        let u = ScalarField::from_fn(&g, Bc::Dirichlet0, Bc::Dirichlet0, |r, z| {
            1e-3 * r * (-(r - 3.0).powi(2) - z * z).exp()
        });
        let s = VortexState::with_zero_potential(u.clone(), 1, 0.0, 1.0).unwrap();
        let phi = s.solve_phi(&tight()).unwrap();
        let grad = gradient_at_frequency(&s, &PotentialSpec::quadratic(), &phi, 0.0);
        let lap = crate::grid::laplacian_axisym(&u);
        for k in 0..g.len() {
            let r = g.r()[k % g.n_r()];
            let expect = -lap.values()[k] + u.values()[k] / (r * r) + u.values()[k];
            assert!((grad.u.values()[k] - expect).abs() <= 1e-12 * expect.abs().max(1e-12));
        }
    }

    #[test]
    fn no_winding_means_no_potential_force() {
        let s = random_smooth_state(&grid(), 0, 0.5, 10.0, 6).unwrap();
        let s = VortexState {
            a: ScalarField::zeros(s.grid(), Bc::Dirichlet0, Bc::Dirichlet0),
            ..s
        };
        let phi = s.solve_phi(&tight()).unwrap();
        let grad = grad_e(&s, &PotentialSpec::default(), &phi).unwrap();
        assert!(grad.a.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn rejects_invalid_states() {
        let g = grid();
        let u = ScalarField::from_fn(&g, Bc::Dirichlet0, Bc::Dirichlet0, |_, _| -1.0);
        assert!(VortexState::with_zero_potential(u.clone(), 1, 0.0, 1.0).is_err());
        let u = u.map(f64::abs);
        assert!(matches!(
            VortexState::with_zero_potential(u.clone(), 1, -0.1, 1.0),
            Err(Error::Config { ref key, .. }) if key == "q"
        ));
        assert!(VortexState::with_zero_potential(u, 1, 0.1, 0.0).is_err());
    }
}
