//! Axisymmetric `(r, x₃)` grid with cylindrical measure and the discrete
//! operators built on it.
//!
//! Nodes are cell-centered in both directions: `r_i = (i + ½)Δr` and
//! `z_j = −Z + (j + ½)Δz`, so no node sits on the axis and every boundary is
//! a cell face. Values are stored row-major with one row per `x₃` level:
//! `values[j * n_r + i]`.
//!
//! Every second-order operator here is the gradient of a face-based quadratic
//! form, `½ uᵀ S u = ½ Σ_faces c_f (Δ_f u)² + boundary terms`, divided by the
//! node volume `w_i = 2π r_i Δr Δz`. This keeps the discrete operators exactly
//! symmetric with respect to the volume-weighted inner product, which the
//! minimizer relies on.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::par;

/// Boundary behavior of a field.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bc {
    /// Homogeneous Dirichlet: the field vanishes on the boundary face.
    Dirichlet0,
    /// Homogeneous Neumann: zero normal derivative on the boundary face.
    Neumann0,
}

impl Bc {
    /// Ghost value for a cell-centered node value `v` mirrored across a face.
    #[inline]
    fn ghost(self, v: f64) -> f64 {
        match self {
            Bc::Dirichlet0 => -v,
            Bc::Neumann0 => v,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AxiGrid {
    n_r: usize,
    n_z: usize,
    r_max: f64,
    z_half: f64,
    dr: f64,
    dz: f64,
    r: Vec<f64>,
    z: Vec<f64>,
    /// `2π r_i Δr Δz`, indexed by `i`.
    weight: Vec<f64>,
}

impl AxiGrid {
    /// Grid on `[0, r_max] × [−z_half, z_half]` with `n_r × n_z` nodes.
    pub fn new(n_r: usize, n_z: usize, r_max: f64, z_half: f64) -> Result<Self> {
        if n_r < 4 || n_z < 4 {
            return Err(Error::InvalidGrid(format!(
                "need n_r >= 4 and n_z >= 4, got {n_r} x {n_z}"
            )));
        }
        if !(r_max.is_finite() && r_max > 0.0 && z_half.is_finite() && z_half > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "extents must be positive and finite, got R = {r_max}, Z = {z_half}"
            )));
        }
        let dr = r_max / n_r as f64;
        let dz = 2.0 * z_half / n_z as f64;
        let r: Vec<f64> = (0..n_r).map(|i| (i as f64 + 0.5) * dr).collect();
        let z: Vec<f64> = (0..n_z).map(|j| -z_half + (j as f64 + 0.5) * dz).collect();
        let weight = r.iter().map(|&ri| 2.0 * PI * ri * dr * dz).collect();
        Ok(Self {
            n_r,
            n_z,
            r_max,
            z_half,
            dr,
            dz,
            r,
            z,
            weight,
        })
    }

    pub fn shared(n_r: usize, n_z: usize, r_max: f64, z_half: f64) -> Result<Arc<Self>> {
        Self::new(n_r, n_z, r_max, z_half).map(Arc::new)
    }

    pub fn n_r(&self) -> usize {
        self.n_r
    }
    pub fn n_z(&self) -> usize {
        self.n_z
    }
    pub fn r_max(&self) -> f64 {
        self.r_max
    }
    pub fn z_half(&self) -> f64 {
        self.z_half
    }
    pub fn dr(&self) -> f64 {
        self.dr
    }
    pub fn dz(&self) -> f64 {
        self.dz
    }
    pub fn len(&self) -> usize {
        self.n_r * self.n_z
    }
    pub fn is_empty(&self) -> bool {
        false
    }
    pub fn r(&self) -> &[f64] {
        &self.r
    }
    pub fn z(&self) -> &[f64] {
        &self.z
    }

    /// Volume of the ring cell around node column `i`.
    #[inline]
    pub fn weight(&self, i: usize) -> f64 {
        self.weight[i]
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        j * self.n_r + i
    }

    /// `(i, j)` of a flat index.
    #[inline]
    pub fn ij(&self, k: usize) -> (usize, usize) {
        (k % self.n_r, k / self.n_r)
    }

    /// Node volumes laid out like a field.
    pub fn weights_field(&self) -> Vec<f64> {
        let mut w = vec![0.0; self.len()];
        par::for_each_row(&mut w, self.n_r, |_, row| row.copy_from_slice(&self.weight));
        w
    }

    /// `2π Σ f r_i Δr Δz` for raw node values.
    pub fn integrate(&self, f: &[f64]) -> f64 {
        debug_assert_eq!(f.len(), self.len());
        let n_r = self.n_r;
        par::sum_rows(self.n_z, |j| {
            let row = &f[j * n_r..(j + 1) * n_r];
            row.iter()
                .zip(&self.weight)
                .map(|(v, w)| v * w)
                .sum::<f64>()
        })
    }

    /// `∫ f g dx`.
    pub fn inner(&self, f: &[f64], g: &[f64]) -> f64 {
        let n_r = self.n_r;
        par::sum_rows(self.n_z, |j| {
            let s = j * n_r;
            (0..n_r)
                .map(|i| f[s + i] * g[s + i] * self.weight[i])
                .sum::<f64>()
        })
    }

    /// Volume-weighted L² norm.
    pub fn norm(&self, f: &[f64]) -> f64 {
        self.inner(f, f).sqrt()
    }
}

/// Real node data on an [`AxiGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: Arc<AxiGrid>,
    values: Vec<f64>,
    axis_bc: Bc,
    outer_bc: Bc,
}

impl ScalarField {
    pub fn zeros(grid: &Arc<AxiGrid>, axis_bc: Bc, outer_bc: Bc) -> Self {
        Self {
            values: vec![0.0; grid.len()],
            grid: Arc::clone(grid),
            axis_bc,
            outer_bc,
        }
    }

    /// Samples `f(r, x₃)` at every node.
    pub fn from_fn<F>(grid: &Arc<AxiGrid>, axis_bc: Bc, outer_bc: Bc, f: F) -> Self
    where
        F: Fn(f64, f64) -> f64 + Sync + Send,
    {
        let mut values = vec![0.0; grid.len()];
        let (r, z) = (grid.r(), grid.z());
        par::for_each_row(&mut values, grid.n_r(), |j, row| {
            for (i, v) in row.iter_mut().enumerate() {
                *v = f(r[i], z[j]);
            }
        });
        Self {
            grid: Arc::clone(grid),
            values,
            axis_bc,
            outer_bc,
        }
    }

    pub fn from_values(
        grid: &Arc<AxiGrid>,
        values: Vec<f64>,
        axis_bc: Bc,
        outer_bc: Bc,
    ) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidGrid(format!(
                "field has {} values, grid has {} nodes",
                values.len(),
                grid.len()
            )));
        }
        Ok(Self {
            grid: Arc::clone(grid),
            values,
            axis_bc,
            outer_bc,
        })
    }

    /// A field on the same grid with the same boundary conditions.
    pub fn with_values(&self, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), self.values.len());
        Self {
            grid: Arc::clone(&self.grid),
            values,
            axis_bc: self.axis_bc,
            outer_bc: self.outer_bc,
        }
    }

    pub fn grid(&self) -> &Arc<AxiGrid> {
        &self.grid
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }
    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
    pub fn axis_bc(&self) -> Bc {
        self.axis_bc
    }
    pub fn outer_bc(&self) -> Bc {
        self.outer_bc
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.idx(i, j)]
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn map<F: Fn(f64) -> f64 + Sync + Send>(&self, f: F) -> Self {
        let mut out = vec![0.0; self.values.len()];
        par::fill(&mut out, |k| f(self.values[k]));
        self.with_values(out)
    }

    /// Volume-weighted L² norm.
    pub fn norm(&self) -> f64 {
        self.grid.norm(&self.values)
    }

    /// `∂_r` at nodes by central differences, with ghosts from the boundary conditions.
    pub fn d_dr(&self) -> Vec<f64> {
        let g = &*self.grid;
        let (n_r, dr) = (g.n_r(), g.dr());
        let v = &self.values;
        let mut out = vec![0.0; v.len()];
        par::for_each_row(&mut out, n_r, |j, row| {
            let s = j * n_r;
            for (i, o) in row.iter_mut().enumerate() {
                let left = if i == 0 {
                    self.axis_bc.ghost(v[s])
                } else {
                    v[s + i - 1]
                };
                let right = if i + 1 == n_r {
                    self.outer_bc.ghost(v[s + i])
                } else {
                    v[s + i + 1]
                };
                *o = (right - left) / (2.0 * dr);
            }
        });
        out
    }

    /// `∂_{x₃}` at nodes by central differences, with outer-boundary ghosts.
    pub fn d_dz(&self) -> Vec<f64> {
        let g = &*self.grid;
        let (n_r, n_z, dz) = (g.n_r(), g.n_z(), g.dz());
        let v = &self.values;
        let mut out = vec![0.0; v.len()];
        par::for_each_row(&mut out, n_r, |j, row| {
            for (i, o) in row.iter_mut().enumerate() {
                let c = v[j * n_r + i];
                let below = if j == 0 {
                    self.outer_bc.ghost(c)
                } else {
                    v[(j - 1) * n_r + i]
                };
                let above = if j + 1 == n_z {
                    self.outer_bc.ghost(c)
                } else {
                    v[(j + 1) * n_r + i]
                };
                *o = (above - below) / (2.0 * dz);
            }
        });
        out
    }
}

/// Symmetric face-based stiffness matrix `S` on a grid.
///
/// `(S u)_{ij} = Σ_nb c (u_ij − u_nb) + d_ij u_ij`, where `d` collects the
/// boundary-face contributions.
#[derive(Debug, Clone)]
pub(crate) struct Stiffness {
    n_r: usize,
    n_z: usize,
    /// Face between columns `i` and `i+1`.
    cr: Vec<f64>,
    /// Faces between rows `j` and `j+1` in column `i`.
    cz: Vec<f64>,
    axis_diag: f64,
    outer_r_diag: f64,
    /// Extra diagonal on the first and last row, per column.
    outer_z_diag: Vec<f64>,
}

impl Stiffness {
    /// `∫|∇u|²`-type form: face weights carry the cylindrical measure.
    pub fn scalar(grid: &AxiGrid, outer: Bc) -> Self {
        let (dr, dz) = (grid.dr(), grid.dz());
        let cr = (0..grid.n_r() - 1)
            .map(|i| 2.0 * PI * (i as f64 + 1.0) * dr * dz / dr)
            .collect();
        let cz: Vec<f64> = grid.r().iter().map(|&r| 2.0 * PI * r * dr / dz).collect();
        let (outer_r_diag, outer_z_diag) = match outer {
            Bc::Dirichlet0 => (
                2.0 * 2.0 * PI * grid.r_max() * dz / dr,
                cz.iter().map(|c| 2.0 * c).collect(),
            ),
            Bc::Neumann0 => (0.0, vec![0.0; grid.n_r()]),
        };
        Self {
            n_r: grid.n_r(),
            n_z: grid.n_z(),
            cr,
            cz,
            axis_diag: 0.0,
            outer_r_diag,
            outer_z_diag,
        }
    }

    /// `2π ∬ (a_r² + a_z²)/r dr dz`-type form for the azimuthal potential.
    ///
    /// The axis closure assumes `a ≈ a_0 (r/r_0)²` in the first cell, which
    /// makes `a = r²` an exact null vector of the interior operator.
    pub fn magnetic(grid: &AxiGrid, outer: Bc) -> Self {
        let (dr, dz) = (grid.dr(), grid.dz());
        let cr = (0..grid.n_r() - 1)
            .map(|i| 2.0 * PI * dz / (dr * (i as f64 + 1.0) * dr))
            .collect();
        let cz: Vec<f64> = grid.r().iter().map(|&r| 2.0 * PI * dr / (dz * r)).collect();
        let (outer_r_diag, outer_z_diag) = match outer {
            Bc::Dirichlet0 => (
                2.0 * 2.0 * PI * dz / (dr * grid.r_max()),
                cz.iter().map(|c| 2.0 * c).collect(),
            ),
            Bc::Neumann0 => (0.0, vec![0.0; grid.n_r()]),
        };
        Self {
            n_r: grid.n_r(),
            n_z: grid.n_z(),
            cr,
            cz,
            axis_diag: 16.0 * PI * dz / (dr * dr),
            outer_r_diag,
            outer_z_diag,
        }
    }

    /// Diagonal of `S`.
    pub fn diagonal(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.n_r * self.n_z];
        par::for_each_row(&mut d, self.n_r, |j, row| {
            for (i, o) in row.iter_mut().enumerate() {
                *o = self.diag_at(i, j);
            }
        });
        d
    }

    #[inline]
    fn diag_at(&self, i: usize, j: usize) -> f64 {
        let (n_r, n_z) = (self.n_r, self.n_z);
        let mut d = 0.0;
        if i > 0 {
            d += self.cr[i - 1];
        } else {
            d += self.axis_diag;
        }
        if i + 1 < n_r {
            d += self.cr[i];
        } else {
            d += self.outer_r_diag;
        }
        if j > 0 {
            d += self.cz[i];
        } else {
            d += self.outer_z_diag[i];
        }
        if j + 1 < n_z {
            d += self.cz[i];
        } else {
            d += self.outer_z_diag[i];
        }
        d
    }

    /// `out = S u`.
    pub fn apply_into(&self, u: &[f64], out: &mut [f64]) {
        let (n_r, n_z) = (self.n_r, self.n_z);
        par::for_each_row(out, n_r, |j, row| {
            let s = j * n_r;
            for (i, o) in row.iter_mut().enumerate() {
                let c = u[s + i];
                let mut acc = self.diag_at(i, j) * c;
                if i > 0 {
                    acc -= self.cr[i - 1] * u[s + i - 1];
                }
                if i + 1 < n_r {
                    acc -= self.cr[i] * u[s + i + 1];
                }
                if j > 0 {
                    acc -= self.cz[i] * u[s - n_r + i];
                }
                if j + 1 < n_z {
                    acc -= self.cz[i] * u[s + n_r + i];
                }
                *o = acc;
            }
        });
    }

    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; u.len()];
        self.apply_into(u, &mut out);
        out
    }

    /// `½ uᵀ S u`, summed face by face so it is nonnegative by construction.
    pub fn energy(&self, u: &[f64]) -> f64 {
        let (n_r, n_z) = (self.n_r, self.n_z);
        let twice = par::sum_rows(n_z, |j| {
            let s = j * n_r;
            let mut acc = 0.0;
            for i in 0..n_r {
                let c = u[s + i];
                if i + 1 < n_r {
                    let d = u[s + i + 1] - c;
                    acc += self.cr[i] * d * d;
                } else {
                    acc += self.outer_r_diag * c * c;
                }
                if i == 0 {
                    acc += self.axis_diag * c * c;
                }
                if j + 1 < n_z {
                    let d = u[s + n_r + i] - c;
                    acc += self.cz[i] * d * d;
                } else {
                    acc += self.outer_z_diag[i] * c * c;
                }
                if j == 0 {
                    acc += self.outer_z_diag[i] * c * c;
                }
            }
            acc
        });
        0.5 * twice
    }
}

/// `∫ f dx` over ℝ³ for an axisymmetric field: `2π Σ f r_i Δr Δz`.
pub fn integrate_volume(f: &ScalarField) -> f64 {
    f.grid().integrate(f.values())
}

/// `Δu = u_rr + u_r/r + u_zz` in conservative form.
pub fn laplacian_axisym(u: &ScalarField) -> ScalarField {
    let g = u.grid();
    let s = Stiffness::scalar(g, u.outer_bc());
    let su = s.apply(u.values());
    let mut out = vec![0.0; su.len()];
    par::fill(&mut out, |k| -su[k] / g.weight(k % g.n_r()));
    u.with_values(out)
}

/// `b = −a_rr + a_r/r − a_zz`, defined by `∇×(∇×(a∇θ)) = b∇θ`.
///
/// `a` must vanish on the axis.
pub fn magnetic_operator(a: &ScalarField) -> ScalarField {
    debug_assert_eq!(a.axis_bc(), Bc::Dirichlet0);
    let g = a.grid();
    let s = Stiffness::magnetic(g, a.outer_bc());
    let sa = s.apply(a.values());
    let mut out = vec![0.0; sa.len()];
    par::fill(&mut out, |k| {
        let i = k % g.n_r();
        let r = g.r()[i];
        r * r * sa[k] / g.weight(i)
    });
    a.with_values(out)
}

/// Result of [`recenter_z`].
#[derive(Debug, Clone)]
pub struct Recentered {
    /// Applied translation along `x₃` (a multiple of `Δz`).
    pub shift: f64,
    pub u: ScalarField,
    pub companions: Vec<ScalarField>,
}

/// `u²`-weighted centroid `∫x₃u² / ∫u²`.
pub fn z_centroid(u: &ScalarField) -> Result<f64> {
    let g = u.grid();
    let n_r = g.n_r();
    let v = u.values();
    let mass = g.inner(v, v);
    if !(mass > 0.0) {
        return Err(Error::ZeroMass);
    }
    let moment = par::sum_rows(g.n_z(), |j| {
        let s = j * n_r;
        g.z()[j]
            * (0..n_r)
                .map(|i| v[s + i] * v[s + i] * g.weight(i))
                .sum::<f64>()
    });
    Ok(moment / mass)
}

/// Translates `u` and its companions along `x₃` by the whole number of nodes
/// nearest to `−z̄`. Vacated rows are zero-filled.
pub fn recenter_z(u: &ScalarField, companions: &[&ScalarField]) -> Result<Recentered> {
    let g = u.grid();
    let zbar = z_centroid(u)?;
    let nodes = (-zbar / g.dz()).round() as i64;
    let shift_field = |f: &ScalarField| -> ScalarField {
        if nodes == 0 {
            return f.clone();
        }
        let (n_r, n_z) = (g.n_r(), g.n_z() as i64);
        let src = f.values();
        let mut out = vec![0.0; src.len()];
        par::for_each_row(&mut out, n_r, |j, row| {
            let from = j as i64 - nodes;
            if (0..n_z).contains(&from) {
                let s = from as usize * n_r;
                row.copy_from_slice(&src[s..s + n_r]);
            }
        });
        f.with_values(out)
    };
    Ok(Recentered {
        shift: nodes as f64 * g.dz(),
        u: shift_field(u),
        companions: companions.iter().map(|f| shift_field(f)).collect(),
    })
}
