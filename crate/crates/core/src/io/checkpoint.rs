//! Text checkpoints: a self-describing header followed by the `u`, `a` and
//! `Φ_u` fields, one grid row per line. Values use the shortest
//! round-trip representation, so loading reproduces them exactly.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::functionals::VortexState;
use crate::grid::{AxiGrid, Bc, ScalarField};
use crate::potentials::{Family, PotentialSpec};

pub const FORMAT_VERSION: u32 = 1;
const MAGIC: &str = "kgm-vortex checkpoint";

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub state: VortexState,
    /// Unit-frequency response `Φ_u`.
    pub phi_unit: ScalarField,
    pub omega: f64,
    pub potential: PotentialSpec,
}

fn bc_name(bc: Bc) -> &'static str {
    match bc {
        Bc::Dirichlet0 => "dirichlet",
        Bc::Neumann0 => "neumann",
    }
}

fn parse_bc(s: &str) -> Result<Bc> {
    match s {
        "dirichlet" => Ok(Bc::Dirichlet0),
        "neumann" => Ok(Bc::Neumann0),
        _ => Err(Error::Format(format!("unknown boundary condition `{s}`"))),
    }
}

impl Checkpoint {
    pub fn render(&self) -> String {
        let s = &self.state;
        let g = s.grid();
        let mut out = String::new();
        let _ = writeln!(out, "{MAGIC}");
        let header: [(&str, String); 14] = [
            ("format_version", FORMAT_VERSION.to_string()),
            ("n_r", g.n_r().to_string()),
            ("n_z", g.n_z().to_string()),
            ("r_max", format!("{:e}", g.r_max())),
            ("z_half", format!("{:e}", g.z_half())),
            ("ell", s.ell.to_string()),
            ("q", format!("{:e}", s.q)),
            ("sigma", format!("{:e}", s.sigma)),
            ("omega", format!("{:e}", self.omega)),
            ("potential", self.potential.id()),
            ("s0", format!("{:e}", self.potential.s0)),
            ("u_axis_bc", bc_name(s.u.axis_bc()).into()),
            ("u_outer_bc", bc_name(s.u.outer_bc()).into()),
            ("a_outer_bc", bc_name(s.a.outer_bc()).into()),
        ];
        for (k, v) in header {
            let _ = writeln!(out, "{k} = {v}");
        }
        for (name, f) in [("u", &s.u), ("a", &s.a), ("phi", &self.phi_unit)] {
            let _ = writeln!(out, "[{name}]");
            for row in f.values().chunks(g.n_r()) {
                let line: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
                let _ = writeln!(out, "{}", line.join(" "));
            }
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        if lines.next().map(str::trim) != Some(MAGIC) {
            return Err(Error::Format("missing checkpoint header".into()));
        }
        let mut header = std::collections::HashMap::new();
        let mut section: Option<String> = None;
        let mut fields: Vec<(String, Vec<Vec<f64>>)> = Vec::new();
        for (lineno, line) in lines.enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                section = Some(name.to_string());
                fields.push((name.to_string(), Vec::new()));
                continue;
            }
            match section {
                None => {
                    let (k, v) = line.split_once('=').ok_or_else(|| {
                        Error::Format(format!("line {}: expected `key = value`", lineno + 2))
                    })?;
                    header.insert(k.trim().to_string(), v.trim().to_string());
                }
                Some(_) => {
                    let row = line
                        .split_whitespace()
                        .map(|t| t.parse::<f64>())
                        .collect::<std::result::Result<Vec<_>, _>>()
                        .map_err(|e| Error::Format(format!("line {}: {e}", lineno + 2)))?;
                    fields.last_mut().expect("section open").1.push(row);
                }
            }
        }

        let get = |k: &str| -> Result<&String> {
            header
                .get(k)
                .ok_or_else(|| Error::Format(format!("header lacks `{k}`")))
        };
        let num = |k: &str| -> Result<f64> {
            get(k)?
                .parse()
                .map_err(|_| Error::Format(format!("bad value for `{k}`")))
        };
        let int = |k: &str| -> Result<i64> {
            get(k)?
                .parse()
                .map_err(|_| Error::Format(format!("bad value for `{k}`")))
        };
        let version = int("format_version")?;
        if version != FORMAT_VERSION as i64 {
            return Err(Error::Format(format!(
                "format version {version}, expected {FORMAT_VERSION}"
            )));
        }
        let (n_r, n_z) = (int("n_r")?, int("n_z")?);
        if n_r <= 0 || n_z <= 0 {
            return Err(Error::Format("grid dimensions must be positive".into()));
        }
        let (n_r, n_z) = (n_r as usize, n_z as usize);
        let grid = AxiGrid::shared(n_r, n_z, num("r_max")?, num("z_half")?)
            .map_err(|e| Error::Format(e.to_string()))?;
        let family: Family = get("potential")?
            .parse()
            .map_err(|e: Error| Error::Format(e.to_string()))?;
        let potential = PotentialSpec {
            family,
            s0: num("s0")?,
        };

        let take = |name: &str| -> Result<Vec<f64>> {
            let rows = &fields
                .iter()
                .find(|(n, _)| n == name)
                .ok_or_else(|| Error::Format(format!("missing section [{name}]")))?
                .1;
            if rows.len() != n_z || rows.iter().any(|r| r.len() != n_r) {
                return Err(Error::Format(format!(
                    "section [{name}] does not match n_r = {n_r}, n_z = {n_z}"
                )));
            }
            Ok(rows.concat())
        };
        let u = ScalarField::from_values(
            &grid,
            take("u")?,
            parse_bc(get("u_axis_bc")?)?,
            parse_bc(get("u_outer_bc")?)?,
        )?;
        let a = ScalarField::from_values(
            &grid,
            take("a")?,
            Bc::Dirichlet0,
            parse_bc(get("a_outer_bc")?)?,
        )?;
        let phi_unit = ScalarField::from_values(&grid, take("phi")?, Bc::Neumann0, Bc::Dirichlet0)?;
        let ell =
            i32::try_from(int("ell")?).map_err(|_| Error::Format("ell out of range".into()))?;
        let state = VortexState::new(u, a, ell, num("q")?, num("sigma")?)
            .map_err(|e| Error::Format(e.to_string()))?;
        Ok(Self {
            state,
            phi_unit,
            omega: num("omega")?,
            potential,
        })
    }
}

pub fn save_checkpoint(cp: &Checkpoint, path: &Path) -> Result<()> {
    std::fs::write(path, cp.render())?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    Checkpoint::parse(&std::fs::read_to_string(path)?)
}
