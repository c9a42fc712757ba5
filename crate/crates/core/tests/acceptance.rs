//! Acceptance run. Prints one `PASS`/`FAIL` line per criterion and exits
//! nonzero if any fails.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use kgm_vortex::diagnostics::{
    angular_momentum, doublewell_divergence_demo, magnetostatic_collapse_demo, DoubleWellConfig,
};
use kgm_vortex::electrostatic::{smallq_coupling, solve_phi, PhiSolveOptions};
use kgm_vortex::functionals::{
    directional_check, e_sigma, i_reduced, random_direction, random_smooth_state,
    total_energy_direct, Objective, VortexState,
};
use kgm_vortex::grid::{laplacian_axisym, magnetic_operator, AxiGrid, Bc, ScalarField};
use kgm_vortex::io::Checkpoint;
use kgm_vortex::minimizer::{
    continuation, geometric_q_steps, minimize, SolveReport, SolverConfig, DEFAULT_Q_MAX,
};
use kgm_vortex::potentials::PotentialSpec;
use kgm_vortex::trial::{build_torus_trial, gradient_decay_ratios, lambda_scan};

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: String) -> Self {
        Self { pass, detail }
    }

    fn error(e: impl std::fmt::Display) -> Self {
        Self::new(false, format!("error: {e}"))
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

fn order(coarse: f64, fine: f64) -> f64 {
    (coarse / fine).log2()
}

fn gradient_exactness() -> Outcome {
    let t0 = Instant::now();
    let g = AxiGrid::shared(32, 32, 8.0, 4.0).unwrap();
    let p = PotentialSpec::default();
    let opts = PhiSolveOptions {
        tol: 1e-13,
        max_iter: 20_000,
    };
    let mut worst: f64 = 0.0;
    for seed in 0..4 {
        let state = random_smooth_state(&g, 1, 0.3, 10.0, seed).unwrap();
        let (wu, wa) = random_direction(&state, seed);
        match directional_check(&state, &p, (&wu, &wa), 1e-5, &opts) {
            Ok(c) => worst = worst.max(c.relative_error),
            Err(e) => return Outcome::error(e),
        }
    }
    let secs = t0.elapsed().as_secs_f64();
    Outcome::new(
        worst <= 1e-6 && secs <= 30.0,
        format!("max relative error {worst:.2e} over 4 directions, {secs:.1} s"),
    )
}

/// Dense `(−Δ + q²u²)` assembled column by column from the discrete Laplacian.
fn dense_phi(u: &ScalarField, q: f64) -> DVector<f64> {
    let g = u.grid();
    let n = g.len();
    let mut m = DMatrix::<f64>::zeros(n, n);
    for k in 0..n {
        let mut e = vec![0.0; n];
        e[k] = 1.0;
        let col = laplacian_axisym(
            &ScalarField::from_values(g, e, Bc::Neumann0, Bc::Dirichlet0).unwrap(),
        );
        for (row, v) in col.values().iter().enumerate() {
            m[(row, k)] = -v;
        }
        let uk = u.values()[k];
        m[(k, k)] += q * q * uk * uk;
    }
    let rhs = DVector::from_iterator(n, u.values().iter().map(|v| q * v * v));
    m.lu().solve(&rhs).expect("nonsingular")
}

fn phi_oracle() -> Outcome {
    let g = AxiGrid::shared(16, 16, 4.0, 3.0).unwrap();
    let opts = PhiSolveOptions {
        tol: 1e-14,
        max_iter: 20_000,
    };
    let mut worst_oracle: f64 = 0.0;
    for (seed, q) in [(1, 0.3), (2, 1.0), (3, 4.0)] {
        let u = random_smooth_state(&g, 1, q, 1.0, seed).unwrap().u;
        let phi = solve_phi(&u, q, &opts).unwrap();
        let dense = dense_phi(&u, q);
        let diff = phi
            .values()
            .iter()
            .zip(dense.iter())
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        worst_oracle = worst_oracle.max(diff / dense.norm());
    }

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst_bound: f64 = 0.0;
    for _ in 0..100 {
        let q = 10f64.powf(rng.gen_range(-2.0..1.0));
        let amp = rng.gen_range(0.1..5.0);
        let u = ScalarField::from_values(
            &g,
            (0..g.len()).map(|_| amp * rng.gen::<f64>()).collect(),
            Bc::Dirichlet0,
            Bc::Dirichlet0,
        )
        .unwrap();
        let phi = solve_phi(&u, q, &PhiSolveOptions::default()).unwrap();
        for &v in phi.values() {
            let qp = q * v;
            worst_bound = worst_bound.max(-qp).max(qp - 1.0);
        }
    }
    Outcome::new(
        worst_oracle <= 1e-10 && worst_bound <= 1e-10,
        format!(
            "dense oracle relative difference {worst_oracle:.2e}, worst bound violation {worst_bound:.2e} over 100 inputs"
        ),
    )
}

fn energy_identity() -> Outcome {
    let g = AxiGrid::shared(32, 32, 10.0, 6.0).unwrap();
    let p = PotentialSpec::default();
    let opts = PhiSolveOptions {
        tol: 1e-12,
        max_iter: 20_000,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    for seed in 0..20 {
        let ell = rng.gen_range(0..3);
        let q = rng.gen_range(0.0..1.5);
        let sigma = rng.gen_range(1.0..50.0);
        let state = random_smooth_state(&g, ell, q, sigma, 100 + seed).unwrap();
        let phi = state.solve_phi(&opts).unwrap();
        let e = e_sigma(&state, &p, &phi).unwrap();
        let direct = total_energy_direct(&state, &p, &phi, e.omega);
        worst = worst.max(rel(direct, e.total));
    }
    Outcome::new(
        worst <= 1e-8,
        format!("max relative gap {worst:.2e} over 20 states"),
    )
}

/// `V = g(ρ², z)(−y, x, 0)`, i.e. `a∇θ` with `a = r²g(r², z)`.
struct Potential3d {
    blobs: Vec<(f64, f64, f64)>,
}

impl Potential3d {
    fn seeded(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let blobs = (0..3)
            .map(|_| {
                (
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(3.0..8.0),
                    rng.gen_range(-0.5..0.5),
                )
            })
            .collect();
        Self { blobs }
    }

    fn g(&self, s: f64, z: f64) -> f64 {
        self.blobs
            .iter()
            .map(|&(c, s0, z0)| c * (-(s - s0).powi(2) / 16.0 - (z - z0).powi(2) / 2.0).exp())
            .sum()
    }

    fn a(&self, r: f64, z: f64) -> f64 {
        r * r * self.g(r * r, z)
    }

    fn v(&self, p: [f64; 3]) -> [f64; 3] {
        let g = self.g(p[0] * p[0] + p[1] * p[1], p[2]);
        [-p[1] * g, p[0] * g, 0.0]
    }
}

fn shifted(p: [f64; 3], axis: usize, d: f64) -> [f64; 3] {
    let mut q = p;
    q[axis] += d;
    q
}

/// Central-difference partial derivative `∂_axis f_comp`.
fn partial(f: &dyn Fn([f64; 3]) -> [f64; 3], p: [f64; 3], axis: usize, comp: usize, h: f64) -> f64 {
    (f(shifted(p, axis, h))[comp] - f(shifted(p, axis, -h))[comp]) / (2.0 * h)
}

fn curl(f: &dyn Fn([f64; 3]) -> [f64; 3], p: [f64; 3], h: f64) -> [f64; 3] {
    [
        partial(f, p, 1, 2, h) - partial(f, p, 2, 1, h),
        partial(f, p, 2, 0, h) - partial(f, p, 0, 2, h),
        partial(f, p, 0, 1, h) - partial(f, p, 1, 0, h),
    ]
}

fn divergence(f: &dyn Fn([f64; 3]) -> [f64; 3], p: [f64; 3], h: f64) -> f64 {
    (0..3).map(|c| partial(f, p, c, c, h)).sum()
}

struct CurlErrors {
    operator: f64,
    energy: f64,
    divergence: f64,
    r2_max: f64,
    h: f64,
}

fn curl_errors(pot: &Potential3d, n: usize) -> CurlErrors {
    let (r_max, z_half) = (8.0, 6.0);
    let g = AxiGrid::shared(n, 3 * n / 2, r_max, z_half).unwrap();
    let h = g.dr();
    let a = ScalarField::from_fn(&g, Bc::Dirichlet0, Bc::Dirichlet0, |r, z| pot.a(r, z));
    let b = magnetic_operator(&a);
    let v = |p: [f64; 3]| pot.v(p);
    let c = |p: [f64; 3]| curl(&v, p, h);

    let mut operator: f64 = 0.0;
    for j in 0..g.n_z() {
        for i in 0..n {
            let (r, z) = (g.r()[i], g.z()[j]);
            // b = (∇×∇×V)·∇θ/|∇θ|² evaluated on the plane y = 0
            let cc = curl(&c, [r, 0.0, z], h);
            operator = operator.max((b.at(i, j) - cc[1] * r).abs());
        }
    }

    let u = ScalarField::zeros(&g, Bc::Dirichlet0, Bc::Dirichlet0);
    let state = VortexState::new(u, a, 1, 0.0, 1.0).unwrap();
    let reduced = i_reduced(&state, &PotentialSpec::default()).magnetic;
    let m = (2.0 * r_max / h).round() as usize;
    let mz = (2.0 * z_half / h).round() as usize;
    let mut cartesian = 0.0;
    for kz in 0..mz {
        let z = -z_half + (kz as f64 + 0.5) * h;
        for ky in 0..m {
            let y = -r_max + (ky as f64 + 0.5) * h;
            for kx in 0..m {
                let x = -r_max + (kx as f64 + 0.5) * h;
                let cv = c([x, y, z]);
                cartesian += cv.iter().map(|t| t * t).sum::<f64>();
            }
        }
    }
    cartesian *= 0.5 * h * h * h;

    let mut divergence_max: f64 = 0.0;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..200 {
        let p = [
            rng.gen_range(-3.0..3.0),
            rng.gen_range(-3.0..3.0),
            rng.gen_range(-3.0..3.0),
        ];
        divergence_max = divergence_max.max(divergence(&v, p, h).abs());
    }

    let r2 = magnetic_operator(&ScalarField::from_fn(
        &g,
        Bc::Dirichlet0,
        Bc::Dirichlet0,
        |r, _| r * r,
    ));
    let mut r2_max: f64 = 0.0;
    for j in 1..g.n_z() - 1 {
        for i in 0..n - 1 {
            r2_max = r2_max.max(r2.at(i, j).abs());
        }
    }
    CurlErrors {
        operator,
        energy: rel(reduced, cartesian),
        divergence: divergence_max,
        r2_max,
        h,
    }
}

fn curl_reduction() -> Outcome {
    let pot = Potential3d::seeded(11);
    let coarse = curl_errors(&pot, 64);
    let fine = curl_errors(&pot, 128);
    let (po, pe, pd) = (
        order(coarse.operator, fine.operator),
        order(coarse.energy, fine.energy),
        order(coarse.divergence, fine.divergence),
    );
    let r2_ok = coarse.r2_max <= coarse.h * coarse.h && fine.r2_max <= fine.h * fine.h;
    Outcome::new(
        po >= 1.8 && pe >= 1.8 && pd >= 1.8 && r2_ok,
        format!(
            "orders: operator {po:.2}, energy {pe:.2}, divergence {pd:.2}; max |b(r²)| {:.1e} (h² = {:.1e})",
            fine.r2_max,
            fine.h * fine.h
        ),
    )
}

fn trial_certificate() -> Outcome {
    let t0 = Instant::now();
    let g = AxiGrid::shared(208, 160, 52.0, 20.0).unwrap();
    let rows = match lambda_scan(
        &[8.0, 16.0, 32.0],
        &[0.0],
        1.0,
        1,
        &g,
        &PotentialSpec::default(),
        &PhiSolveOptions::default(),
    ) {
        Ok(r) => r,
        Err(e) => return Outcome::error(e),
    };
    let below = rows
        .iter()
        .filter(|r| r.lambda >= 16.0)
        .all(|r| r.ratio < 1.0);
    let monotone = rows.windows(2).all(|w| w[1].ratio < w[0].ratio);
    let half = rows.iter().all(|r| r.charge_term == 0.5);
    let decay = gradient_decay_ratios(&rows, 0.0);
    let worst_decay = decay
        .iter()
        .map(|(m, p)| (m / p - 1.0).abs())
        .fold(0.0f64, f64::max);
    let secs = t0.elapsed().as_secs_f64();
    let lambdas: Vec<String> = rows.iter().map(|r| format!("{:.4}", r.ratio)).collect();
    Outcome::new(
        below && monotone && half && worst_decay <= 0.25 && secs <= 60.0,
        format!(
            "Λ at λ = 8, 16, 32: [{}], charge term ½ exactly: {half}, worst 1/λ deviation {:.0}%, {secs:.1} s",
            lambdas.join(", "),
            100.0 * worst_decay
        ),
    )
}

fn small_q_slope() -> Outcome {
    let g = AxiGrid::shared(64, 64, 8.0, 8.0).unwrap();
    let u = random_smooth_state(&g, 1, 0.0, 1.0, 9).unwrap().u;
    let qs: Vec<f64> = (0..9).map(|k| 1e-3 * 10f64.powf(k as f64 / 4.0)).collect();
    let opts = PhiSolveOptions {
        tol: 1e-12,
        max_iter: 20_000,
    };
    let pts = match smallq_coupling(&u, &qs, &opts) {
        Ok(p) => p,
        Err(e) => return Outcome::error(e),
    };
    let xs: Vec<f64> = pts.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = pts.iter().map(|p| p.1.ln()).collect();
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let slope = sxy / sxx;
    Outcome::new(
        (slope - 2.0).abs() <= 0.1,
        format!("log-log slope {slope:.4} over q in [1e-3, 1e-1]"),
    )
}

fn end_to_end() -> (Outcome, Option<SolveReport>) {
    let t0 = Instant::now();
    let g = AxiGrid::shared(128, 128, 40.0, 40.0).unwrap();
    let p = PotentialSpec::default();
    let trial = build_torus_trial(12.0, 1.0, &g, &p).unwrap();
    let state = trial.state(1, 0.0).unwrap();
    let r = match minimize(
        &state,
        &p,
        Objective::ChargeConstrained,
        &SolverConfig::default(),
    ) {
        Ok(r) => r,
        Err(e) => return (Outcome::error(e), None),
    };
    let secs = t0.elapsed().as_secs_f64();
    let m3 = angular_momentum(&r, 16).m3;
    let m3_err = rel(m3, -r.sigma);
    let res = &r.residuals;
    let residuals_ok = res.z1 <= 1e-5 && res.z3 <= 1e-5 && res.z4 <= 1e-5;
    let lambda = r.energy.lambda();
    let pass = r.converged
        && r.u_norm > 0.0
        && residuals_ok
        && lambda < 1.0
        && m3_err <= 1e-8
        && secs <= 600.0;
    let detail = format!(
        "{} iterations, residuals ({:.1e}, {:.1e}, {:.1e}), Λ = {lambda:.4}, ω = {:.4}, M₃ relative error {m3_err:.1e}, {secs:.1} s",
        r.iterations, res.z1, res.z3, res.z4, r.omega
    );
    (Outcome::new(pass, detail), Some(r))
}

fn charge_continuation(start: Option<&SolveReport>) -> Outcome {
    let Some(start) = start else {
        return Outcome::new(false, "no solution from the end-to-end solve".into());
    };
    let t0 = Instant::now();
    let cfg = SolverConfig {
        q_steps: geometric_q_steps(DEFAULT_Q_MAX, 8),
        grad_reference: Some(start.grad_reference),
        ..Default::default()
    };
    let c = match continuation(&start.state, &start.potential, &cfg) {
        Ok(c) => c,
        Err(e) => return Outcome::error(e),
    };
    let charged: Vec<&SolveReport> = c.reports.iter().filter(|r| r.state.q > 0.0).collect();
    let failing: Vec<String> = charged
        .iter()
        .flat_map(|r| {
            r.checks
                .iter()
                .filter(|ch| !ch.pass)
                .map(move |ch| format!("q={:e}:{}", r.state.q, ch.name))
        })
        .collect();
    let all_converged = charged.len() == 8 && charged.iter().all(|r| r.converged);
    let last = charged.last();
    let secs = t0.elapsed().as_secs_f64();
    Outcome::new(
        all_converged && failing.is_empty() && c.failures.is_empty(),
        format!(
            "{} of 8 charged steps converged up to q = {:e} (ω = {:.4}, Λ = {:.4}), failing checks: {:?}, {secs:.0} s",
            charged.iter().filter(|r| r.converged).count(),
            c.q_reached(),
            last.map_or(f64::NAN, |r| r.omega),
            last.map_or(f64::NAN, |r| r.energy.lambda()),
            failing
        ),
    )
}

fn nonexistence() -> Outcome {
    let dw = match doublewell_divergence_demo(&DoubleWellConfig::default()) {
        Ok(d) => d,
        Err(e) => return Outcome::error(e),
    };
    let g = AxiGrid::shared(128, 128, 40.0, 40.0).unwrap();
    let ms = match magnetostatic_collapse_demo(&g, 1, &SolverConfig::default()) {
        Ok(d) => d,
        Err(e) => return Outcome::error(e),
    };
    let inc = dw.increments(1);
    let decay = ms.collapse.u_norm / ms.collapse.u_norm_initial;
    let dw_ok = dw.checks.iter().all(|c| c.pass);
    Outcome::new(
        dw_ok && ms.collapse.collapsed && decay < 1e-8,
        format!(
            "double well ℓ = 1 increments {:?}, checks pass: {dw_ok}; ω = 0 quadratic decay ratio {decay:.1e}",
            inc.iter().map(|v| format!("{v:.3}")).collect::<Vec<_>>()
        ),
    )
}

fn run_cli(args: &[&str]) -> std::io::Result<std::process::ExitStatus> {
    Command::new(env!("CARGO_BIN_EXE_kgm-vortex"))
        .args(args)
        .status()
}

fn gradcheck_report(dir: &Path, config: &Path) -> Option<Vec<u8>> {
    let status = run_cli(&[
        "gradcheck",
        "--config",
        config.to_str()?,
        "--output",
        dir.to_str()?,
        "--seed",
        "17",
    ])
    .ok()?;
    if !status.success() {
        return None;
    }
    std::fs::read(dir.join("report.txt")).ok()
}

fn persistence(solved: Option<&SolveReport>) -> Outcome {
    let Some(r) = solved else {
        return Outcome::new(false, "no solution from the end-to-end solve".into());
    };
    let cp = Checkpoint {
        state: r.state.clone(),
        phi_unit: r.phi_unit.clone(),
        omega: r.omega,
        potential: r.potential,
    };
    let back = match Checkpoint::parse(&cp.render()) {
        Ok(b) => b,
        Err(e) => return Outcome::error(e),
    };
    let pairs = [
        (&cp.state.u, &back.state.u),
        (&cp.state.a, &back.state.a),
        (&cp.phi_unit, &back.phi_unit),
    ];
    let worst = pairs
        .iter()
        .flat_map(|(x, y)| x.values().iter().zip(y.values()))
        .map(|(x, y)| if x == y { 0.0 } else { rel(*y, *x) })
        .fold(0.0f64, f64::max);
    let e0 = e_sigma(&cp.state, &cp.potential, &cp.phi_unit)
        .unwrap()
        .total;
    let e1 = e_sigma(&back.state, &back.potential, &back.phi_unit)
        .unwrap()
        .total;
    let energy_gap = rel(e1, e0);

    let tmp = tempfile::tempdir().unwrap();
    let config = tmp.path().join("gradcheck.toml");
    std::fs::write(
        &config,
        "[grid]\nn_r = 32\nn_z = 32\nr_max = 8.0\nz_half = 4.0\n\n[physics]\nq = 0.3\nsigma = 10.0\n",
    )
    .unwrap();
    let first = gradcheck_report(&tmp.path().join("a"), &config);
    let second = gradcheck_report(&tmp.path().join("b"), &config);
    let identical = first.is_some() && first == second;
    Outcome::new(
        worst <= 1e-15 && energy_gap <= 1e-14 && identical,
        format!(
            "max round-trip error {worst:.1e}, energy gap {energy_gap:.1e}, repeated seeded reports identical: {identical}"
        ),
    )
}

fn main() {
    let start = Instant::now();
    let mut results: Vec<(u32, &str, Outcome, Duration)> = Vec::new();
    let mut record = |n: u32, name: &'static str, f: &mut dyn FnMut() -> Outcome| {
        let t = Instant::now();
        let o = f();
        let line = format!(
            "criterion {n:>2} {} {name}: {}",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
        println!("{line}");
        results.push((n, name, o, t.elapsed()));
    };

    record(1, "gradient exactness", &mut gradient_exactness);
    record(2, "electrostatic solver oracle", &mut phi_oracle);
    record(3, "energy identity", &mut energy_identity);
    record(4, "curl-curl reduction", &mut curl_reduction);
    record(5, "trial-function certificate", &mut trial_certificate);
    record(6, "small-charge continuity", &mut small_q_slope);
    let mut solved = None;
    record(7, "end-to-end solve", &mut || {
        let (o, r) = end_to_end();
        solved = r;
        o
    });
    record(8, "charge continuation", &mut || {
        charge_continuation(solved.as_ref())
    });
    record(9, "non-existence demos", &mut nonexistence);
    record(10, "persistence", &mut || persistence(solved.as_ref()));

    let failed: Vec<u32> = results.iter().filter(|r| !r.2.pass).map(|r| r.0).collect();
    println!(
        "{} of {} criteria passed in {:.0} s",
        results.len() - failed.len(),
        results.len(),
        start.elapsed().as_secs_f64()
    );
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
