//! Benchmark data generation and tuning of the scale floor and the
//! improper noise level.
//!
//! The floor is calibrated on a benchmark sample: a standard Normal
//! quantile dataset with one outlier appended at the edge of its outlier
//! region. The ratio `c0` is chosen so the one- and two-component BIC
//! values tie on that benchmark; real applications then use
//! `sigma0 = c0 * sigma_max` with an application-chosen cluster scale
//! ceiling `sigma_max`.

use crate::data::Dataset;
use crate::em::{fit, FitConfig};
use crate::error::{Error, Result};
use crate::family::Family;
use crate::model::NoiseRegime;
use crate::normal;
use crate::select::{criterion_value, free_param_count, Criterion};
use serde::Serialize;

/// Calibrated tuning constants.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CalibrationResult {
    /// Scale ratio solving the benchmark criterion tie.
    pub c0: f64,
    /// `c0 * sigma_max`.
    pub sigma0: f64,
    /// Improper noise level: density of the scale-`sigma_max` member at
    /// its own 0.025-quantile.
    pub b: f64,
    /// Outlier-region mass used for the benchmark outlier.
    pub alpha_n: f64,
    /// Probability that an n-point sample from the reference model
    /// contains no outlier.
    pub p: f64,
    pub sigma_max: f64,
    pub n: usize,
}

/// Normal quantile dataset: the `i/(n+1)` quantiles of a Normal with the
/// given location and variance, `i = 1..=n`.
pub fn nsd(location: f64, variance: f64, n: usize) -> Result<Dataset> {
    if n < 1 {
        return Err(Error::InvalidArgument("n must be >= 1".into()));
    }
    if variance.is_nan() || variance <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "variance must be > 0, got {variance}"
        )));
    }
    let sd = variance.sqrt();
    let values = (1..=n)
        .map(|i| location + sd * normal::quantile(i as f64 / (n + 1) as f64))
        .collect();
    Dataset::new(values)
}

/// Outlier-region mass and boundary for an n-point sample: with
/// `alpha_n = 1 - (1-p)^(1/n)`, the probability that at least one of `n`
/// standard Normal draws lands outside `[-y, y]` equals `p`, where
/// `y = quantile(1 - alpha_n/2)`.
pub fn alpha_outlier_position(n: usize, p: f64) -> Result<(f64, f64)> {
    if n < 1 {
        return Err(Error::InvalidArgument("n must be >= 1".into()));
    }
    if p.is_nan() || p <= 0.0 || p >= 1.0 {
        return Err(Error::InvalidArgument(format!(
            "probability must lie in (0, 1), got {p}"
        )));
    }
    let alpha_n = 1.0 - (1.0 - p).powf(1.0 / n as f64);
    let y = normal::quantile(1.0 - alpha_n / 2.0);
    Ok((alpha_n, y))
}

/// Calibrates the scale ratio `c0` so that the one- and two-component BIC
/// values tie on the benchmark sample (an `n-1`-point standard Normal
/// quantile dataset plus one outlier at the boundary of the region a
/// clean n-sample avoids with probability `p`).
///
/// The one-component value does not depend on `c0` while the
/// two-component value grows as `c0` shrinks (the floor is what keeps the
/// outlier's own component from blowing up the likelihood), so the tie is
/// a proper bracket-and-bisect root find on `log c0`.
pub fn calibrate_c0(n: usize, p: f64, fam: Family, cfg: &FitConfig) -> Result<f64> {
    if n < 3 {
        return Err(Error::InvalidArgument("calibration needs n >= 3".into()));
    }
    cfg.validate()?;
    // Region boundary so that a clean n-sample stays inside with
    // probability p: the "at least one outlier" mass is 1 - p.
    let (_, outlier) = alpha_outlier_position(n, 1.0 - p)?;
    let base = nsd(0.0, 1.0, n - 1)?;
    let mut values = base.values().to_vec();
    values.push(outlier);
    let bench = Dataset::new(values)?;

    let diff = |c0: f64| -> Result<f64> {
        let mut local = *cfg;
        local.scale_floor = c0;
        let f1 = fit(&bench, 1, fam, &NoiseRegime::None, &local)?;
        let f2 = fit(&bench, 2, fam, &NoiseRegime::None, &local)?;
        let c1 = criterion_value(f1.loglik, free_param_count(1, &NoiseRegime::None), n, Criterion::Bic);
        let c2 = criterion_value(f2.loglik, free_param_count(2, &NoiseRegime::None), n, Criterion::Bic);
        Ok(c2 - c1)
    };

    let mut lo = 1e-6f64.ln();
    let mut hi = 1.0f64.ln();
    let f_lo = diff(lo.exp())?;
    let f_hi = diff(hi.exp())?;
    if !(f_lo > 0.0 && f_hi < 0.0) {
        return Err(Error::CalibrationFailed(format!(
            "no sign change on [1e-6, 1]: diff(1e-6) = {f_lo}, diff(1) = {f_hi}"
        )));
    }
    while hi - lo > 1e-3 {
        let mid = 0.5 * (lo + hi);
        if diff(mid.exp())? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((0.5 * (lo + hi)).exp())
}

/// Expands a calibrated ratio into application tuning: the scale floor
/// `sigma0 = c0 * sigma_max` and the improper noise level `b` (density of
/// the scale-`sigma_max` member at its own 0.025-quantile, so 95% of a
/// cluster's points are denser under their parent than under noise).
pub fn derive_tuning(sigma_max: f64, c0: f64, fam: Family) -> Result<(f64, f64)> {
    if sigma_max.is_nan() || sigma_max <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "sigma_max must be > 0, got {sigma_max}"
        )));
    }
    if c0.is_nan() || c0 <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "c0 must be > 0, got {c0}"
        )));
    }
    let sigma0 = c0 * sigma_max;
    let q = fam.quantile_std(0.025)?;
    let b = fam.density(sigma_max * q, 0.0, sigma_max)?;
    Ok((sigma0, b))
}

/// Full calibration pipeline for one application setting.
pub fn calibrate(
    n: usize,
    p: f64,
    sigma_max: f64,
    fam: Family,
    cfg: &FitConfig,
) -> Result<CalibrationResult> {
    let c0 = calibrate_c0(n, p, fam, cfg)?;
    let (sigma0, b) = derive_tuning(sigma_max, c0, fam)?;
    let (alpha_n, _) = alpha_outlier_position(n, 1.0 - p)?;
    Ok(CalibrationResult {
        c0,
        sigma0,
        b,
        alpha_n,
        p,
        sigma_max,
        n,
    })
}
