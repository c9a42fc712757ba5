//! CSV export of fields and tables.

use std::path::Path;

use crate::diagnostics::{DomainRow, HistogramBin};
use crate::error::Result;
use crate::grid::ScalarField;
use crate::trial::ScanRow;

fn num(v: f64) -> String {
    format!("{v:e}")
}

/// Three columns `r, x3, value`, one row per node in storage order.
pub fn export_field_csv(field: &ScalarField, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["r", "x3", "value"])?;
    let g = field.grid();
    for (k, v) in field.values().iter().enumerate() {
        let (i, j) = g.ij(k);
        w.write_record([num(g.r()[i]), num(g.z()[j]), num(*v)])?;
    }
    w.flush()?;
    Ok(())
}

/// Columns `lambda, q, Lambda, term1..term4`.
pub fn export_scan_csv(rows: &[ScanRow], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["lambda", "q", "Lambda", "term1", "term2", "term3", "term4"])?;
    for r in rows {
        w.write_record([
            num(r.lambda),
            num(r.q),
            num(r.ratio),
            num(r.mass_term),
            num(r.charge_term),
            num(r.gradient_term),
            num(r.nonlinear_term),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Columns `ell, R, Z, energy, iterations`.
pub fn export_domain_csv(rows: &[DomainRow], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["ell", "R", "Z", "energy", "iterations"])?;
    for r in rows {
        w.write_record([
            r.ell.to_string(),
            num(r.r_max),
            num(r.z_half),
            num(r.energy),
            r.iterations.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Columns `lo, hi, weight`.
pub fn export_histogram_csv(bins: &[HistogramBin], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["lo", "hi", "weight"])?;
    for b in bins {
        w.write_record([num(b.lo), num(b.hi), num(b.weight)])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{integrate_volume, AxiGrid, Bc};

    #[test]
    fn field_csv_shape_and_quadrature() {
        let g = AxiGrid::shared(4, 4, 2.0, 1.0).unwrap();
        let f = ScalarField::from_fn(&g, Bc::Neumann0, Bc::Dirichlet0, |r, z| (1.0 + r * z).exp());
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.csv");
        export_field_csv(&f, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 17);
        assert_eq!(text.lines().next(), Some("r,x3,value"));

        let mut rd = csv::Reader::from_path(&path).unwrap();
        let (dr, dz) = (g.dr(), g.dz());
        let mut total = 0.0;
        for rec in rd.records() {
            let rec = rec.unwrap();
            let r: f64 = rec[0].parse().unwrap();
            let v: f64 = rec[2].parse().unwrap();
            total += 2.0 * std::f64::consts::PI * r * dr * dz * v;
        }
        let exact = integrate_volume(&f);
        assert!((total - exact).abs() <= 1e-12 * exact.abs());
    }
}
