//! Command dispatch for the `kgm-vortex` binary.

use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Parser, ValueEnum};

use crate::diagnostics::{
    angular_momentum, doublewell_divergence_demo, gauge_fields, magnetostatic_collapse_demo,
    DoubleWellConfig,
};
use crate::error::{Error, Result};
use crate::functionals::VortexState;
use crate::functionals::{directional_check, random_direction, random_smooth_state, Objective};
use crate::io::{
    export_domain_csv, export_field_csv, export_histogram_csv, export_scan_csv, load_checkpoint,
    save_checkpoint, Checkpoint, Report, RunConfig,
};
use crate::minimizer::{continuation, evaluate, minimize, Check, SolveReport};
use crate::trial::{build_torus_trial, lambda_scan};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    Solve,
    Continuation,
    TrialScan,
    Gradcheck,
    Diagnose,
    NonexistDemo,
    Export,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::Continuation => "continuation",
            Command::TrialScan => "trial-scan",
            Command::Gradcheck => "gradcheck",
            Command::Diagnose => "diagnose",
            Command::NonexistDemo => "nonexist-demo",
            Command::Export => "export",
        }
    }
}

/// Vortex solver for the Klein-Gordon-Maxwell system.
#[derive(Debug, Parser)]
#[command(name = "kgm-vortex", version)]
pub struct Cli {
    pub command: Command,
    /// Run configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory; overrides `run.output_dir`.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Seed for randomized checks; overrides `run.seed`.
    #[arg(long)]
    pub seed: Option<u64>,
}

/// Runs the command and returns the process exit code: 0 iff every check in
/// the report passed.
pub fn run(cli: &Cli) -> i32 {
    let started = Instant::now();
    let cfg = match cli.config.as_deref().map(RunConfig::load) {
        None => Ok(RunConfig::default()),
        Some(r) => r,
    };
    let mut cfg = match cfg {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return e.exit_code();
        }
    };
    if let Some(o) = &cli.output {
        cfg.run.output_dir = o.clone();
    }
    if let Some(s) = cli.seed {
        cfg.run.seed = s;
    }
    let out = cfg.run.output_dir.clone();
    if let Err(e) = std::fs::create_dir_all(&out) {
        eprintln!("error: cannot create {}: {e}", out.display());
        return Error::from(e).exit_code();
    }

    let mut report = Report::new();
    report.text("command", cli.command.name());
    let result = execute(cli.command, &cfg, &out, &mut report);
    let code = match &result {
        Ok(()) => {
            let pass = report.all_checks_pass();
            report.text("status", if pass { "ok" } else { "checks-failed" });
            if pass {
                0
            } else {
                1
            }
        }
        Err(e) => {
            if let Error::MaxIterations(r) = e {
                report.solve("", r);
            }
            report
                .text("status", "error")
                .text("error", e.name())
                .text("message", e.to_string());
            e.exit_code()
        }
    };
    report.int("exit_code", code as i64);
    let meta = format!(
        "timestamp_unix = {}\nelapsed_seconds = {:e}\nversion = {}\nparallel = {}\n",
        SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
        started.elapsed().as_secs_f64(),
        env!("CARGO_PKG_VERSION"),
        crate::par::is_parallel(),
    );
    let written = report
        .write(&out.join("report.txt"))
        .and_then(|_| Ok(std::fs::write(out.join("report.meta"), meta)?));
    if let Err(e) = written {
        eprintln!("error: {e}");
        return e.exit_code();
    }
    if let Err(e) = &result {
        eprintln!("error: {e}");
    }
    code
}

/// Dispatches `command`, filling `report` and writing artifacts to `out`.
pub fn execute(command: Command, cfg: &RunConfig, out: &Path, report: &mut Report) -> Result<()> {
    match command {
        Command::Solve => solve(cfg, out, report),
        Command::Continuation => run_continuation(cfg, out, report),
        Command::TrialScan => trial_scan(cfg, out, report),
        Command::Gradcheck => gradcheck(cfg, report),
        Command::Diagnose => diagnose(cfg, out, report),
        Command::NonexistDemo => nonexist(cfg, out, report),
        Command::Export => export(cfg, out, report),
    }
}

/// Starting state: the checkpoint when configured, else the torus trial.
fn initial_state(cfg: &RunConfig, q: f64) -> Result<(VortexState, Option<Checkpoint>)> {
    let p = &cfg.physics;
    if let Some(path) = &cfg.run.checkpoint {
        let cp = load_checkpoint(path)?;
        let sigma = p.sigma.unwrap_or(cp.state.sigma);
        let state = VortexState {
            q,
            sigma,
            ..cp.state.clone()
        };
        let state = VortexState::new(state.u, state.a, state.ell, state.q, state.sigma)?;
        return Ok((state, Some(cp)));
    }
    let grid = cfg.grid()?;
    let trial = build_torus_trial(p.lambda, p.s0, &grid, &cfg.potential()?)?;
    let u = trial.field.clone();
    let sigma = p.sigma.unwrap_or(trial.sigma_lambda);
    Ok((VortexState::with_zero_potential(u, p.ell, q, sigma)?, None))
}

fn write_state(r: &SolveReport, path: &Path) -> Result<()> {
    save_checkpoint(
        &Checkpoint {
            state: r.state.clone(),
            phi_unit: r.phi_unit.clone(),
            omega: r.omega,
            potential: r.potential,
        },
        path,
    )
}

/// `M₃` and, at `q = 0`, the identity `M₃ = −ℓσ`.
fn momentum_entries(prefix: &str, r: &SolveReport, report: &mut Report) {
    let am = angular_momentum(r, 16);
    report.num(format!("{prefix}angular_momentum"), am.m3);
    let s = &r.state;
    let mut checks = Vec::new();
    if s.q == 0.0 {
        let target = -(s.ell as f64) * r.sigma;
        let err = (am.m3 - target).abs() / r.sigma;
        checks.push(Check {
            name: "angular_momentum_identity".into(),
            value: err,
            threshold: 1e-8,
            pass: err <= 1e-8,
        });
    } else if s.ell > 0 {
        checks.push(Check {
            name: "angular_momentum_negative".into(),
            value: am.m3,
            threshold: 0.0,
            pass: am.m3 < 0.0,
        });
    }
    report.checks(prefix, &checks);
}

fn solve(cfg: &RunConfig, out: &Path, report: &mut Report) -> Result<()> {
    let potential = cfg.potential()?;
    let (state, _) = initial_state(cfg, cfg.physics.q)?;
    let r = minimize(
        &state,
        &potential,
        Objective::ChargeConstrained,
        &cfg.solver_config(),
    )?;
    report.text("potential", potential.id()).solve("", &r);
    report.checks(
        "",
        &[Check {
            name: "Lambda_below_one".into(),
            value: r.energy.lambda(),
            threshold: 1.0,
            pass: r.energy.lambda() < 1.0,
        }],
    );
    momentum_entries("", &r, report);
    write_state(&r, &out.join("state.ckpt"))?;
    export_field_csv(&r.state.u, &out.join("u.csv"))?;
    export_field_csv(&r.state.a, &out.join("a.csv"))?;
    export_field_csv(&r.phi, &out.join("phi.csv"))?;
    Ok(())
}

fn run_continuation(cfg: &RunConfig, out: &Path, report: &mut Report) -> Result<()> {
    let potential = cfg.potential()?;
    let (state, _) = initial_state(cfg, 0.0)?;
    let c = continuation(&state, &potential, &cfg.solver_config())?;
    report
        .text("potential", potential.id())
        .int("steps", c.reports.len() as i64)
        .num("q_reached", c.q_reached());
    if let Some(q) = c.aborted_at {
        report.num("aborted_at", q);
    }
    for (k, r) in c.reports.iter().enumerate() {
        let prefix = format!("step.{k}.");
        report.solve(&prefix, r);
        momentum_entries(&prefix, r, report);
        write_state(r, &out.join(format!("step_{k}.ckpt")))?;
    }
    for (k, (q, e)) in c.failures.iter().enumerate() {
        report
            .num(format!("failure.{k}.q"), *q)
            .text(format!("failure.{k}.error"), e.name());
    }
    Ok(())
}

fn trial_scan(cfg: &RunConfig, out: &Path, report: &mut Report) -> Result<()> {
    let potential = cfg.potential()?;
    let rows = lambda_scan(
        &cfg.run.lambdas,
        &cfg.run.scan_q,
        cfg.physics.s0,
        cfg.physics.ell,
        &cfg.grid()?,
        &potential,
        &cfg.solver_config().phi,
    )?;
    let mut checks = Vec::new();
    for (k, r) in rows.iter().enumerate() {
        let p = format!("scan.{k}.");
        report
            .num(format!("{p}lambda"), r.lambda)
            .num(format!("{p}q"), r.q)
            .num(format!("{p}sigma"), r.sigma)
            .num(format!("{p}Lambda"), r.ratio)
            .num(format!("{p}term1"), r.mass_term)
            .num(format!("{p}term2"), r.charge_term)
            .num(format!("{p}term3"), r.gradient_term)
            .num(format!("{p}term4"), r.nonlinear_term);
        if r.q == 0.0 {
            let dev = (r.charge_term - 0.5).abs();
            checks.push(Check {
                name: format!("scan.{k}.charge_term_half"),
                value: dev,
                threshold: 0.0,
                pass: dev == 0.0,
            });
        }
    }
    report.checks("", &checks);
    export_scan_csv(&rows, &out.join("scan.csv"))
}

fn gradcheck(cfg: &RunConfig, report: &mut Report) -> Result<()> {
    let grid = cfg.grid()?;
    let potential = cfg.potential()?;
    let p = &cfg.physics;
    let sigma = p.sigma.unwrap_or(10.0);
    let opts = cfg.solver_config().phi;
    let mut worst: f64 = 0.0;
    for k in 0..cfg.run.gradcheck_states {
        let seed = cfg.run.seed.wrapping_add(k as u64);
        let state = random_smooth_state(&grid, p.ell, p.q, sigma, seed)?;
        let (wu, wa) = random_direction(&state, seed);
        let c = directional_check(&state, &potential, (&wu, &wa), cfg.run.gradcheck_eps, &opts)?;
        report
            .int(format!("gradcheck.{k}.seed"), seed as i64)
            .num(format!("gradcheck.{k}.analytic"), c.analytic)
            .num(
                format!("gradcheck.{k}.finite_difference"),
                c.finite_difference,
            )
            .num(format!("gradcheck.{k}.relative_error"), c.relative_error);
        worst = worst.max(c.relative_error);
    }
    report.checks(
        "",
        &[Check {
            name: "gradient_matches_difference".into(),
            value: worst,
            threshold: 1e-6,
            pass: worst <= 1e-6,
        }],
    );
    Ok(())
}

fn checkpoint_path(cfg: &RunConfig) -> Result<&Path> {
    cfg.run
        .checkpoint
        .as_deref()
        .ok_or_else(|| Error::config("checkpoint", "this command needs run.checkpoint"))
}

fn diagnose(cfg: &RunConfig, out: &Path, report: &mut Report) -> Result<()> {
    let cp = load_checkpoint(checkpoint_path(cfg)?)?;
    let r = evaluate(
        &cp.state,
        Some(&cp.phi_unit),
        &cp.potential,
        Objective::ChargeConstrained,
        &cfg.solver_config(),
    )?;
    report.text("potential", cp.potential.id()).solve("", &r);
    momentum_entries("", &r, report);
    let fs = gauge_fields(&r);
    report.num("solenoid_ratio", fs.solenoid_ratio);
    let am = angular_momentum(&r, 16);
    export_histogram_csv(&am.histogram, &out.join("per_particle_histogram.csv"))?;
    export_field_csv(&am.per_particle, &out.join("per_particle.csv"))?;
    for (name, f) in [
        ("e_r", &fs.e_r),
        ("e_z", &fs.e_z),
        ("h_r", &fs.h_r),
        ("h_z", &fs.h_z),
        ("omega", &fs.omega),
        ("k_theta", &fs.k_theta),
        ("rho", &fs.rho),
        ("j_theta", &fs.j_theta),
    ] {
        export_field_csv(f, &out.join(format!("{name}.csv")))?;
    }
    Ok(())
}

fn nonexist(cfg: &RunConfig, out: &Path, report: &mut Report) -> Result<()> {
    let dw_cfg = DoubleWellConfig {
        radii: cfg.run.demo_radii.clone(),
        z_half: cfg.run.demo_z_half,
        h: cfg.run.demo_h,
        ..Default::default()
    };
    let dw = doublewell_divergence_demo(&dw_cfg)?;
    report.text(
        "doublewell.note",
        "evidence by scaling of the minimized energy, not a proof",
    );
    for (k, row) in dw.rows.iter().enumerate() {
        report
            .int(format!("doublewell.{k}.ell"), row.ell as i64)
            .num(format!("doublewell.{k}.R"), row.r_max)
            .num(format!("doublewell.{k}.energy"), row.energy);
    }
    for (ell, inc) in &dw.predicted_increment {
        report.num(format!("doublewell.predicted_increment.ell{ell}"), *inc);
    }
    report.checks("doublewell.", &dw.checks);
    export_domain_csv(&dw.rows, &out.join("doublewell.csv"))?;

    let demo = magnetostatic_collapse_demo(&cfg.grid()?, cfg.physics.ell, &cfg.solver_config())?;
    let c = &demo.collapse;
    let decay = c.u_norm / c.u_norm_initial;
    report
        .num("magnetostatic.u_norm_ratio", decay)
        .int("magnetostatic.iterations", c.iterations as i64)
        .flag("magnetostatic.collapsed", c.collapsed)
        .num("magnetostatic.control.omega", demo.control.omega)
        .num("magnetostatic.control.u_norm", demo.control.u_norm)
        .flag("magnetostatic.control.converged", demo.control.converged);
    report.checks(
        "magnetostatic.",
        &[
            Check {
                name: "collapse".into(),
                value: decay,
                threshold: 1e-8,
                pass: c.collapsed && decay < 1e-8,
            },
            Check {
                name: "control_nontrivial".into(),
                value: demo.control.u_norm,
                threshold: 0.0,
                pass: demo.control.converged && !demo.control.collapsed,
            },
        ],
    );
    if c.collapsed {
        report.text(
            "magnetostatic.note",
            "collapsed, consistent with the decay result",
        );
    }
    Ok(())
}

fn export(cfg: &RunConfig, out: &Path, report: &mut Report) -> Result<()> {
    let cp = load_checkpoint(checkpoint_path(cfg)?)?;
    let phi = cp.phi_unit.map(|v| cp.omega * v);
    export_field_csv(&cp.state.u, &out.join("u.csv"))?;
    export_field_csv(&cp.state.a, &out.join("a.csv"))?;
    export_field_csv(&phi, &out.join("phi.csv"))?;
    report
        .int("n_r", cp.state.grid().n_r() as i64)
        .int("n_z", cp.state.grid().n_z() as i64)
        .text("files", "u.csv a.csv phi.csv");
    Ok(())
}
