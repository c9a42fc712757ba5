//! Lower-order terms `W(s) = ½s² + N(s)` (unit mass) and sampling-based
//! checks of the hypotheses the existence theory places on them.

use std::fmt;
use std::str::FromStr;

use crate::error::Error;

/// Potential families.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Family {
    /// `W(s) = ½s²(1−s)²`; the default.
    PolyDoubleZero,
    /// `W(s) = ½s² − |s|^p/p`.
    PowerDefocus { p: f64 },
    /// `W(s) = (1−s²)²`. Violates `W(0) = 0`; demonstration only.
    DoubleWell,
    /// `W(s) = ½s²`, so `N ≡ 0` and `W′(s)s ≥ 0`.
    Quadratic,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PotentialSpec {
    pub family: Family,
    /// A point with `N(s0) < 0` where the family has one.
    pub s0: f64,
}

/// `(W, W′, N)` at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PotentialValue {
    pub w: f64,
    pub dw: f64,
    pub n: f64,
}

impl Default for PotentialSpec {
    fn default() -> Self {
        Self::poly_double_zero()
    }
}

impl PotentialSpec {
    pub fn poly_double_zero() -> Self {
        Self {
            family: Family::PolyDoubleZero,
            s0: 1.0,
        }
    }

    pub fn power_defocus(p: f64) -> Self {
        Self {
            family: Family::PowerDefocus { p },
            s0: 1.0,
        }
    }

    pub fn double_well() -> Self {
        Self {
            family: Family::DoubleWell,
            s0: 1.0,
        }
    }

    pub fn quadratic() -> Self {
        Self {
            family: Family::Quadratic,
            s0: 1.0,
        }
    }

    /// `W`, `W′` and `N` at `s`, using the even extension `W(−s) = W(s)`.
    #[inline]
    pub fn eval(&self, s: f64) -> PotentialValue {
        let a = s.abs();
        let sign = if s < 0.0 { -1.0 } else { 1.0 };
        let (w, dw_pos) = match self.family {
            Family::PolyDoubleZero => {
                let t = 1.0 - a;
                (0.5 * a * a * t * t, a * t * (1.0 - 2.0 * a))
            }
            Family::PowerDefocus { p } => {
                let ap = a.powf(p);
                (0.5 * a * a - ap / p, a - if a > 0.0 { ap / a } else { 0.0 })
            }
            Family::DoubleWell => {
                let t = 1.0 - a * a;
                (t * t, -4.0 * a * t)
            }
            Family::Quadratic => (0.5 * a * a, a),
        };
        PotentialValue {
            w,
            dw: sign * dw_pos,
            n: w - 0.5 * s * s,
        }
    }

    #[inline]
    pub fn w(&self, s: f64) -> f64 {
        self.eval(s).w
    }

    #[inline]
    pub fn dw(&self, s: f64) -> f64 {
        self.eval(s).dw
    }

    /// Stable identifier used in configs and checkpoints.
    pub fn id(&self) -> String {
        match self.family {
            Family::PolyDoubleZero => "poly-double-zero".into(),
            Family::PowerDefocus { p } => format!("power-defocus:{p:e}"),
            Family::DoubleWell => "double-well".into(),
            Family::Quadratic => "quadratic".into(),
        }
    }

    /// Samples the hypotheses over `[0, s_max]`.
    pub fn validate(&self, s_max: f64, n_samples: usize) -> ValidationReport {
        validate_hypotheses(self, s_max, n_samples)
    }
}

impl fmt::Display for PotentialSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.id())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || Error::config("potential", format!("unknown potential family `{s}`"));
        match s {
            "poly-double-zero" => Ok(Family::PolyDoubleZero),
            "double-well" => Ok(Family::DoubleWell),
            "quadratic" => Ok(Family::Quadratic),
            _ => {
                let p = s.strip_prefix("power-defocus:").ok_or_else(bad)?;
                let p: f64 = p.parse().map_err(|_| bad())?;
                if !(p > 2.0) {
                    return Err(Error::config("potential", "power-defocus needs p > 2"));
                }
                Ok(Family::PowerDefocus { p })
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    /// Smallest sampled `W(s)`, `s ≥ 0`.
    pub min_w: f64,
    pub w1_nonnegative: bool,
    pub w_at_zero: f64,
    pub dw_at_zero: f64,
    /// Finite-difference `W″(0)`.
    pub w2_second_derivative: f64,
    pub w2_unit_mass: bool,
    /// `inf W(s)/(½s²)` over the sample and where it is attained.
    pub w3_ratio: f64,
    pub w3_argmin: f64,
    pub w3_subquadratic: bool,
    /// `|W′(s)|/s⁵` at `s_max/2` and `s_max`.
    pub growth_ratio: (f64, f64),
    pub growth_bounded: bool,
    pub solver_eligible: bool,
}

/// Sampling-based check of `W ≥ 0`, `W(0) = W′(0) = 0`, `W″(0) = 1`,
/// `inf W/(½s²) < 1` and at most quintic growth of `W′`.
pub fn validate_hypotheses(spec: &PotentialSpec, s_max: f64, n_samples: usize) -> ValidationReport {
    let n = n_samples.max(100);
    let s_max = if s_max > 0.0 { s_max } else { 1.0 };
    let samples = (1..=n).map(|k| s_max * k as f64 / n as f64);

    let mut min_w = spec.w(0.0);
    let mut w3_ratio = f64::INFINITY;
    let mut w3_argmin = f64::NAN;
    for s in samples {
        let w = spec.w(s);
        min_w = min_w.min(w);
        let ratio = w / (0.5 * s * s);
        if ratio < w3_ratio {
            w3_ratio = ratio;
            w3_argmin = s;
        }
    }

    let at0 = spec.eval(0.0);
    let h = 1e-7;
    let w2 = (spec.dw(h) - spec.dw(-h)) / (2.0 * h);
    let w2_unit_mass = at0.w == 0.0 && at0.dw == 0.0 && (w2 - 1.0).abs() <= 1e-6;

    let growth = |s: f64| spec.dw(s).abs() / s.powi(5);
    let growth_ratio = (growth(0.5 * s_max), growth(s_max));
    // Only meaningful once s is large enough for the leading power to dominate.
    let growth_bounded = s_max < 1.0 || growth_ratio.1 <= growth_ratio.0 * (1.0 + 1e-12);

    let w1 = min_w >= 0.0;
    let w3 = w3_ratio < 1.0;
    ValidationReport {
        min_w,
        w1_nonnegative: w1,
        w_at_zero: at0.w,
        dw_at_zero: at0.dw,
        w2_second_derivative: w2,
        w2_unit_mass,
        w3_ratio,
        w3_argmin,
        w3_subquadratic: w3,
        growth_ratio,
        growth_bounded,
        solver_eligible: w1 && w2_unit_mass && w3,
    }
}
