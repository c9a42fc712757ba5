//! Run configuration: a sectioned key-value file (TOML syntax).
//!
//! ```text
//! [grid]
//! n_r = 128
//! n_z = 128
//! r_max = 40.0
//! z_half = 40.0
//!
//! [physics]
//! ell = 1
//! q = 0.0
//! lambda = 12.0
//! potential = "poly-double-zero"
//!
//! [solver]
//! grad_tol = 1e-6
//! ```
//!
//! Every key is optional; missing keys take the defaults below.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Deserialize;

use crate::electrostatic::PhiSolveOptions;
use crate::error::{Error, Result};
use crate::grid::AxiGrid;
use crate::minimizer::{geometric_q_steps, SolverConfig, DEFAULT_Q_MAX};
use crate::potentials::{Family, PotentialSpec};

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    pub n_r: usize,
    pub n_z: usize,
    pub r_max: f64,
    pub z_half: f64,
}

impl Default for GridSection {
    fn default() -> Self {
        Self {
            n_r: 128,
            n_z: 128,
            r_max: 40.0,
            z_half: 40.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhysicsSection {
    pub ell: i32,
    pub q: f64,
    /// Explicit continuation steps. Overrides `q_max`/`n_q_steps`.
    pub q_steps: Option<Vec<f64>>,
    pub q_max: f64,
    pub n_q_steps: usize,
    /// Charge. When absent, `σ_λ` of the torus trial is used.
    pub sigma: Option<f64>,
    /// Major radius of the torus trial used as the initial guess.
    pub lambda: f64,
    pub potential: String,
    pub s0: f64,
}

impl Default for PhysicsSection {
    fn default() -> Self {
        Self {
            ell: 1,
            q: 0.0,
            q_steps: None,
            q_max: DEFAULT_Q_MAX,
            n_q_steps: 8,
            sigma: None,
            lambda: 12.0,
            potential: "poly-double-zero".into(),
            s0: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    pub max_outer_iter: usize,
    pub grad_tol: f64,
    pub armijo_c: f64,
    pub backtrack: f64,
    pub recenter_every: usize,
    pub phi_tol: f64,
    pub phi_max_iter: usize,
}

impl Default for SolverSection {
    fn default() -> Self {
        let d = SolverConfig::default();
        Self {
            max_outer_iter: d.max_outer_iter,
            grad_tol: d.grad_tol,
            armijo_c: d.armijo_c,
            backtrack: d.backtrack,
            recenter_every: d.recenter_every,
            phi_tol: d.phi.tol,
            phi_max_iter: d.phi.max_iter,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub output_dir: PathBuf,
    pub seed: u64,
    /// Warm start / input state for `solve`, `diagnose` and `export`.
    pub checkpoint: Option<PathBuf>,
    /// Torus radii for `trial-scan`.
    pub lambdas: Vec<f64>,
    /// Couplings for `trial-scan`.
    pub scan_q: Vec<f64>,
    /// Number of seeded states for `gradcheck`.
    pub gradcheck_states: usize,
    pub gradcheck_eps: f64,
    /// Domain radii for the double-well demonstration.
    pub demo_radii: Vec<f64>,
    pub demo_z_half: f64,
    pub demo_h: f64,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            output_dir: PathBuf::from("out"),
            seed: 42,
            checkpoint: None,
            lambdas: vec![8.0, 16.0, 32.0],
            scan_q: vec![0.0],
            gradcheck_states: 4,
            gradcheck_eps: 1e-5,
            demo_radii: vec![10.0, 20.0, 40.0],
            demo_z_half: 1.0,
            demo_h: 0.125,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub grid: GridSection,
    pub physics: PhysicsSection,
    pub solver: SolverSection,
    pub run: RunSection,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| {
            let msg = e.message().to_string();
            let key = offending_key(&msg).unwrap_or_else(|| "config".to_string());
            Error::Config { key, message: msg }
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        let g = &self.grid;
        if g.n_r < 4 || g.n_z < 4 {
            return Err(Error::config(
                "n_r",
                "grid needs at least 4 nodes per direction",
            ));
        }
        for (key, v) in [("r_max", g.r_max), ("z_half", g.z_half)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config(key, format!("must be positive, got {v}")));
            }
        }
        let p = &self.physics;
        if !(p.q >= 0.0 && p.q.is_finite()) {
            return Err(Error::config(
                "q",
                format!("must be finite and >= 0, got {}", p.q),
            ));
        }
        if let Some(s) = p.sigma {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::config("sigma", format!("must be positive, got {s}")));
            }
        }
        if !(p.q_max >= 0.0 && p.q_max.is_finite()) {
            return Err(Error::config("q_max", "must be finite and >= 0"));
        }
        if !(p.lambda > 2.0) {
            return Err(Error::config("lambda", "must exceed 2"));
        }
        self.potential()?;
        self.solver_config().validate()
    }

    pub fn grid(&self) -> Result<Arc<AxiGrid>> {
        let g = &self.grid;
        AxiGrid::shared(g.n_r, g.n_z, g.r_max, g.z_half)
    }

    pub fn potential(&self) -> Result<PotentialSpec> {
        let family: Family = self.physics.potential.parse()?;
        Ok(PotentialSpec {
            family,
            s0: self.physics.s0,
        })
    }

    pub fn solver_config(&self) -> SolverConfig {
        let s = &self.solver;
        let q_steps = self
            .physics
            .q_steps
            .clone()
            .unwrap_or_else(|| geometric_q_steps(self.physics.q_max, self.physics.n_q_steps));
        SolverConfig {
            max_outer_iter: s.max_outer_iter,
            grad_tol: s.grad_tol,
            armijo_c: s.armijo_c,
            backtrack: s.backtrack,
            recenter_every: s.recenter_every,
            q_steps,
            phi: PhiSolveOptions {
                tol: s.phi_tol,
                max_iter: s.phi_max_iter,
            },
            ..SolverConfig::default()
        }
    }
}

/// Pulls a backquoted field name out of a deserializer message.
fn offending_key(msg: &str) -> Option<String> {
    let start = msg.find('`')? + 1;
    let len = msg[start..].find('`')?;
    Some(msg[start..start + len].to_string())
}
