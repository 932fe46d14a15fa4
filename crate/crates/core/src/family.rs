//! Base density families for location-scale mixture components.
//!
//! Every family is symmetric about zero, strictly positive on the whole
//! line, continuous, and nonincreasing away from the mode, so each member
//! `f_{a,sigma}(x) = f((x - a)/sigma)/sigma` is a proper unimodal density.

use crate::error::{Error, Result};
use crate::normal;
use crate::normal::LN_SQRT_2PI;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Default bending constant for the least-favorable family.
pub const HUBER_DEFAULT_K: f64 = 1.345;

/// Component density family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Family {
    Normal,
    /// Student t with `nu` degrees of freedom (`nu >= 1`).
    StudentT { nu: f64 },
    /// Huber least-favorable density: Normal core, exponential tails
    /// bending at `|z| = k`.
    HuberLf { k: f64 },
}

impl Family {
    pub fn student_t(nu: f64) -> Result<Self> {
        if !nu.is_finite() || nu < 1.0 {
            return Err(Error::InvalidArgument(format!(
                "degrees of freedom must be >= 1, got {nu}"
            )));
        }
        Ok(Family::StudentT { nu })
    }

    pub fn huber(k: f64) -> Result<Self> {
        if !k.is_finite() || k <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "bending constant must be > 0, got {k}"
            )));
        }
        Ok(Family::HuberLf { k })
    }

    pub fn huber_default() -> Self {
        Family::HuberLf { k: HUBER_DEFAULT_K }
    }

    /// Log of the norming constant, i.e. `log f(0)` up to the kernel value at 0.
    ///
    /// Precompute once before tight loops; the Student t case costs two
    /// log-gamma evaluations.
    pub fn log_norm_const(self) -> f64 {
        match self {
            Family::Normal => -LN_SQRT_2PI,
            Family::StudentT { nu } => {
                ln_gamma(0.5 * (nu + 1.0)) - ln_gamma(0.5 * nu) - 0.5 * (nu * PI).ln()
            }
            Family::HuberLf { k } => {
                let core = (2.0 * PI).sqrt() * (2.0 * normal::cdf(k) - 1.0);
                let tails = 2.0 * (-0.5 * k * k).exp() / k;
                -(core + tails).ln()
            }
        }
    }

    #[inline]
    pub(crate) fn log_kernel(self, z: f64) -> f64 {
        match self {
            Family::Normal => -0.5 * z * z,
            Family::StudentT { nu } => -0.5 * (nu + 1.0) * (z * z / nu).ln_1p(),
            Family::HuberLf { k } => {
                let az = z.abs();
                if az <= k {
                    -0.5 * z * z
                } else {
                    0.5 * k * k - k * az
                }
            }
        }
    }

    /// Log of the standardized density `f(z)`.
    #[inline]
    pub fn log_density_std(self, z: f64) -> f64 {
        self.log_norm_const() + self.log_kernel(z)
    }

    /// Standardized density `f(z)`.
    pub fn density_std(self, z: f64) -> f64 {
        self.log_density_std(z).exp()
    }

    /// Density maximum of the standardized family, `f(0)`.
    pub fn f0(self) -> f64 {
        self.log_norm_const().exp()
    }

    /// Location-scale member density `f_{a,sigma}(x)`.
    pub fn density(self, x: f64, location: f64, scale: f64) -> Result<f64> {
        if scale.is_nan() || scale <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "scale must be > 0, got {scale}"
            )));
        }
        Ok(self.log_density_std((x - location) / scale).exp() / scale)
    }

    /// CDF of the standardized density. Closed form for the Normal,
    /// quadrature of the kernel otherwise.
    pub fn cdf_std(self, z: f64) -> f64 {
        if let Family::Normal = self {
            return normal::cdf(z);
        }
        if z == 0.0 {
            return 0.5;
        }
        let (lo, hi) = if z < 0.0 { (z, 0.0) } else { (0.0, z) };
        let mass = integrate_density(self, lo, hi);
        if z < 0.0 {
            0.5 - mass
        } else {
            0.5 + mass
        }
    }

    /// Quantile of the standardized density for `p` in (0, 1).
    pub fn quantile_std(self, p: f64) -> Result<f64> {
        if p.is_nan() || p <= 0.0 || p >= 1.0 {
            return Err(Error::InvalidArgument(format!(
                "probability must lie in (0, 1), got {p}"
            )));
        }
        if let Family::Normal = self {
            return Ok(normal::quantile(p));
        }
        // Symmetric case reduction, then bisection on the numeric CDF.
        if p == 0.5 {
            return Ok(0.0);
        }
        let target = p.min(1.0 - p);
        let mut lo = -1.0;
        while self.cdf_std(lo) > target {
            lo *= 2.0;
            if lo < -1e12 {
                return Err(Error::Internal("quantile bracket expansion failed".into()));
            }
        }
        let mut hi = 0.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.cdf_std(mid) > target {
                hi = mid;
            } else {
                lo = mid;
            }
            if hi - lo <= 1e-12 * (1.0 + hi.abs()) {
                break;
            }
        }
        let q = 0.5 * (lo + hi);
        Ok(if p < 0.5 { q } else { -q })
    }
}

/// Composite-Simpson integral of the standardized density over `[lo, hi]`,
/// panel count doubled until the estimate settles.
fn integrate_density(fam: Family, lo: f64, hi: f64) -> f64 {
    let mut panels = 64usize;
    let mut prev = simpson(fam, lo, hi, panels);
    loop {
        panels *= 2;
        let next = simpson(fam, lo, hi, panels);
        if (next - prev).abs() <= 1e-13 * (1.0 + next.abs()) || panels >= (1 << 21) {
            return next;
        }
        prev = next;
    }
}

fn simpson(fam: Family, lo: f64, hi: f64, panels: usize) -> f64 {
    let h = (hi - lo) / panels as f64;
    let mut acc = fam.density_std(lo) + fam.density_std(hi);
    for i in 1..panels {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * fam.density_std(lo + i as f64 * h);
    }
    acc * h / 3.0
}

/// Lanczos approximation (g = 7, 9 terms) of `ln Gamma(x)`.
fn ln_gamma(x: f64) -> f64 {
    // Coefficients quoted at published precision.
    #[allow(clippy::excessive_precision, clippy::inconsistent_digit_grouping)]
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_93,
        676.520_368_121_885_1,
        -1259.139_216_722_402_8,
        771.323_428_777_653_13,
        -176.615_029_162_140_59,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_571_6e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        return (PI / (PI * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = COEF[0];
    let t = x + 7.5;
    for (i, &c) in COEF.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}
