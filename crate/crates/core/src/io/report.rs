//! Key-value run reports. Reports hold only deterministic content; wall
//! time and the timestamp go to a separate metadata file.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::Result;
use crate::minimizer::{Check, SolveReport};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    entries: Vec<(String, String)>,
}

impl Report {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn text(&mut self, key: impl Into<String>, value: impl Into<String>) -> &mut Self {
        self.entries.push((key.into(), value.into()));
        self
    }

    pub fn num(&mut self, key: impl Into<String>, value: f64) -> &mut Self {
        self.text(key, format!("{value:e}"))
    }

    pub fn int(&mut self, key: impl Into<String>, value: i64) -> &mut Self {
        self.text(key, value.to_string())
    }

    pub fn flag(&mut self, key: impl Into<String>, value: bool) -> &mut Self {
        self.text(key, value.to_string())
    }

    /// `check.<prefix><name>.{value,threshold,pass}` for each check.
    pub fn checks(&mut self, prefix: &str, checks: &[Check]) -> &mut Self {
        for c in checks {
            let base = format!("check.{prefix}{}", c.name);
            self.num(format!("{base}.value"), c.value);
            self.num(format!("{base}.threshold"), c.threshold);
            self.flag(format!("{base}.pass"), c.pass);
        }
        self
    }

    /// Scalars, residuals and checks of one solve under `prefix`.
    pub fn solve(&mut self, prefix: &str, r: &SolveReport) -> &mut Self {
        let e = &r.energy;
        self.num(format!("{prefix}q"), r.state.q)
            .int(format!("{prefix}ell"), r.state.ell as i64)
            .num(format!("{prefix}sigma"), r.sigma)
            .num(format!("{prefix}omega"), r.omega)
            .num(format!("{prefix}k_q"), r.k_q)
            .num(format!("{prefix}energy"), e.total)
            .num(format!("{prefix}Lambda"), e.lambda())
            .num(format!("{prefix}energy.dirichlet_u"), e.dirichlet_u)
            .num(format!("{prefix}energy.magnetic"), e.magnetic)
            .num(format!("{prefix}energy.centrifugal"), e.centrifugal)
            .num(format!("{prefix}energy.potential"), e.potential)
            .num(format!("{prefix}energy.charge_term"), e.charge_term)
            .num(format!("{prefix}residual.z1"), r.residuals.z1)
            .num(format!("{prefix}residual.z3"), r.residuals.z3)
            .num(format!("{prefix}residual.z4"), r.residuals.z4)
            .num(
                format!("{prefix}residual.continuity"),
                r.residuals.continuity,
            )
            .int(format!("{prefix}iterations"), r.iterations as i64)
            .num(format!("{prefix}grad_norm"), r.grad_norm)
            .num(format!("{prefix}grad_reference"), r.grad_reference)
            .num(format!("{prefix}u_norm"), r.u_norm)
            .num(format!("{prefix}u_norm_initial"), r.u_norm_initial)
            .num(format!("{prefix}a_norm"), r.state.a.norm())
            .num(format!("{prefix}phi_norm"), r.phi.norm())
            .flag(format!("{prefix}converged"), r.converged)
            .flag(format!("{prefix}collapsed"), r.collapsed)
            .checks(prefix, &r.checks)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    /// Whether every `check.*.pass` entry is `true`.
    pub fn all_checks_pass(&self) -> bool {
        self.entries
            .iter()
            .filter(|(k, _)| k.starts_with("check.") && k.ends_with(".pass"))
            .all(|(_, v)| v == "true")
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.entries {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.render())?;
        Ok(())
    }
}
