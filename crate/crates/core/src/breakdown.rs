//! Breakdown certificates and empirical breakdown searches.
//!
//! The certificates evaluate sufficient-condition inequalities on fitted
//! log-likelihoods: passing at contamination size `g` proves the addition
//! breakdown point exceeds `g/(n+g)`. The empirical routines refit on
//! explicitly contaminated data and report parameter and classification
//! verdicts.

use crate::classify::{
    classification_breakdown_check, classify, induced_partition, BreakdownVerdict, NOISE_LABEL,
};
use crate::data::Dataset;
use crate::em::{fit, FitConfig, FitResult};
use crate::error::{Error, Result};
use crate::family::Family;
use crate::frac::Frac;
use crate::model::{Component, NeumaierSum, NoiseRegime};
use crate::select::{select_order, Criterion};
use serde::Serialize;

/// Degenerate-proportion cutoff: components below it are fitter artifacts
/// (frozen placeholders), not part of the estimated mixture.
const DEGENERATE_WEIGHT: f64 = 1e-12;

/// Hard ceiling for the outlier-threshold search.
pub const OUTLIER_SEARCH_CEILING: f64 = 1e10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BreakdownKind {
    ImproperNoiseCert,
    BicNoBreakCert,
    BicGrossOutlierCert,
    EmpiricalOutlier,
    EmpiricalInlier,
    ClassificationEmpirical,
}

/// Per-contamination-size condition value.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct GRow {
    pub g: u64,
    pub value: f64,
    pub certified: bool,
}

/// Per-order reference log-likelihood (and, for the gross-outlier
/// inversion, the contamination size that order requires).
#[derive(Debug, Clone, Copy, Serialize)]
pub struct RRow {
    pub r: usize,
    pub loglik: f64,
    pub g_required: Option<f64>,
}

/// Outcome of a certificate evaluation or an empirical probe.
///
/// For the no-breakdown certificates `bound = g_star/(n+g_star)` is a
/// certified strict lower bound on the breakdown point and
/// `min_breakdown` is the smallest fraction at which breakdown remains
/// possible, `(g_star+1)/(n+g_star+1)`. For the gross-outlier inversion
/// `bound` is an upper bound (breakdown occurs by `g_star` added points).
/// For probes both fields echo the probed contamination when it broke.
#[derive(Debug, Clone, Serialize)]
pub struct BreakdownReport {
    pub kind: BreakdownKind,
    pub n: usize,
    pub g_star: u64,
    pub bound: Frac,
    pub min_breakdown: Frac,
    pub f_max: Option<f64>,
    pub reference_loglik: Option<f64>,
    pub per_r: Vec<RRow>,
    pub per_g: Vec<GRow>,
    /// Fits backing the reported numbers (orders `1..=s` for
    /// certificates; the original and contaminated fits for probes).
    pub fits: Vec<FitResult>,
    pub parameter_breakdown: Option<bool>,
    pub order_before: Option<usize>,
    pub order_after: Option<usize>,
    pub classification: Option<BreakdownVerdict>,
    pub clusters_lost_to_noise: Option<usize>,
}

fn converged_or_err(fit: &FitResult, what: &str) -> Result<()> {
    if fit.converged {
        Ok(())
    } else {
        Err(Error::NonConvergence(format!(
            "{what} did not converge; certificates need converged fits"
        )))
    }
}

/// Certificate for the improper-noise estimator with fixed `s`:
/// evaluates, for each `g`, the lower-bound condition comparing the best
/// sub-order fit against the contaminated-likelihood bound built from the
/// `s`-component fit. `g_star` is the largest certified `g`.
pub fn improper_noise_certificate(
    data: &Dataset,
    s: usize,
    fam: Family,
    b: f64,
    cfg: &FitConfig,
    g_max: usize,
) -> Result<BreakdownReport> {
    if s < 2 {
        return Err(Error::InvalidArgument(
            "the certificate needs s >= 2 (no smaller order exists)".into(),
        ));
    }
    let f_max = fam.f0() / cfg.scale_floor;
    if f_max.partial_cmp(&b) != Some(std::cmp::Ordering::Greater) {
        return Err(Error::HypothesisViolated(format!(
            "f(0)/scale_floor = {f_max} must exceed the noise level b = {b}"
        )));
    }
    let regime = NoiseRegime::improper(b)?;

    let mut fits = Vec::with_capacity(s);
    for r in 1..=s {
        let f = fit(data, r, fam, &regime, cfg)?;
        converged_or_err(&f, &format!("improper fit with {r} components"))?;
        fits.push(f);
    }
    let best_sub = fits[..s - 1]
        .iter()
        .map(|f| f.loglik)
        .fold(f64::NEG_INFINITY, f64::max);
    let top = &fits[s - 1];
    let n = data.n() as f64;
    let noise_weight = top.params.noise_weight();

    // Component-only densities of the s-fit, reused across g.
    let comp_density: Vec<f64> = data
        .values()
        .iter()
        .map(|&x| top.params.log_component_density(x).exp())
        .collect();

    let mut per_g = Vec::with_capacity(g_max);
    let mut g_star = 0u64;
    for g in 1..=g_max {
        let add = (noise_weight + g as f64 / n) * b;
        let mut sum = NeumaierSum::new();
        for &d in &comp_density {
            sum.add((d + add).ln());
        }
        let rhs = sum.value() + g as f64 * add.ln() + (n + g as f64) * (n / (n + g as f64)).ln()
            - g as f64 * f_max.ln();
        let certified = best_sub < rhs;
        if certified {
            g_star = g as u64;
        }
        per_g.push(GRow {
            g: g as u64,
            value: rhs,
            certified,
        });
    }

    let per_r = fits[..s - 1]
        .iter()
        .enumerate()
        .map(|(i, f)| RRow {
            r: i + 1,
            loglik: f.loglik,
            g_required: None,
        })
        .collect();

    Ok(BreakdownReport {
        kind: BreakdownKind::ImproperNoiseCert,
        n: data.n(),
        g_star,
        bound: bound_frac(g_star, data.n()),
        min_breakdown: bound_frac(g_star + 1, data.n()),
        f_max: Some(f_max),
        reference_loglik: Some(top.loglik),
        per_r,
        per_g,
        fits,
        parameter_breakdown: None,
        order_before: None,
        order_after: None,
        classification: None,
        clusters_lost_to_noise: None,
    })
}

fn bound_frac(g: u64, n: usize) -> Frac {
    if g == 0 {
        Frac::zero()
    } else {
        Frac::new(g, n as u64 + g)
    }
}

fn bic_sweep_for_certificate(
    data: &Dataset,
    s: usize,
    fam: Family,
    regime: &NoiseRegime,
    cfg: &FitConfig,
) -> Result<Vec<FitResult>> {
    if s < 2 {
        return Err(Error::InvalidArgument(
            "the certificate needs s >= 2 (no smaller order exists)".into(),
        ));
    }
    if matches!(regime, NoiseRegime::Improper { .. }) {
        return Err(Error::InvalidArgument(
            "the order-selection certificates cover the plain and range-noise models only".into(),
        ));
    }
    if let NoiseRegime::RangeUniform { .. } = regime {
        let f_max = fam.f0() / cfg.scale_floor;
        let inv_range = 1.0 / data.range();
        if f_max.is_nan() || f_max < inv_range {
            return Err(Error::HypothesisViolated(format!(
                "f(0)/scale_floor = {f_max} must be at least 1/range = {inv_range}"
            )));
        }
    }
    let sel = select_order(
        data,
        fam,
        regime,
        cfg,
        Criterion::Bic,
        Some(s.max(crate::select::DEFAULT_S_MAX)),
    )?;
    if sel.selected != s {
        return Err(Error::InvalidArgument(format!(
            "s = {s} is not the BIC-selected order (selection gives {})",
            sel.selected
        )));
    }
    let mut fits = Vec::with_capacity(s);
    for r in 1..=s {
        let row = sel
            .row(r)
            .ok_or_else(|| Error::Internal(format!("missing sweep row for s = {r}")))?;
        converged_or_err(&row.fit, &format!("fit with {r} components"))?;
        fits.push(row.fit.clone());
    }
    Ok(fits)
}

/// No-breakdown certificate for the BIC-selected order: for each `g`
/// evaluates the worst-case margin over suboptimal orders `r < s`;
/// positive margin certifies that no mixture component is lost after any
/// `g`-point addition.
pub fn bic_no_breakdown_certificate(
    data: &Dataset,
    s: usize,
    fam: Family,
    regime: &NoiseRegime,
    cfg: &FitConfig,
    g_max: usize,
) -> Result<BreakdownReport> {
    let fits = bic_sweep_for_certificate(data, s, fam, regime, cfg)?;
    let n = data.n() as f64;
    let l_top = fits[s - 1].loglik;

    let mut per_g = Vec::with_capacity(g_max);
    let mut g_star = 0u64;
    for g in 1..=g_max {
        let gf = g as f64;
        let mut value = f64::INFINITY;
        for r in 1..s {
            let margin = l_top
                - fits[r - 1].loglik
                - 0.5 * (5.0 * gf + 3.0 * (s - r) as f64 + 2.0 * n) * (n + gf).ln()
                + n * n.ln();
            value = value.min(margin);
        }
        let certified = value > 0.0;
        if certified {
            g_star = g as u64;
        }
        per_g.push(GRow {
            g: g as u64,
            value,
            certified,
        });
    }

    let per_r = fits[..s - 1]
        .iter()
        .enumerate()
        .map(|(i, f)| RRow {
            r: i + 1,
            loglik: f.loglik,
            g_required: None,
        })
        .collect();

    Ok(BreakdownReport {
        kind: BreakdownKind::BicNoBreakCert,
        n: data.n(),
        g_star,
        bound: bound_frac(g_star, data.n()),
        min_breakdown: bound_frac(g_star + 1, data.n()),
        f_max: Some(fam.f0() / cfg.scale_floor),
        reference_loglik: Some(l_top),
        per_r,
        per_g,
        fits,
        parameter_breakdown: None,
        order_before: None,
        order_after: None,
        classification: None,
        clusters_lost_to_noise: None,
    })
}

/// Gross-outlier inversion for the BIC-selected order: the smallest `g`
/// at which piling on far outliers alone forces the original data into
/// fewer than `s` clusters (the BIC penalty grows with `n + g`). Computed
/// in closed form per sub-order and cross-checkable by direct scan.
pub fn bic_gross_outlier_breakdown(
    data: &Dataset,
    s: usize,
    fam: Family,
    regime: &NoiseRegime,
    cfg: &FitConfig,
) -> Result<BreakdownReport> {
    let fits = bic_sweep_for_certificate(data, s, fam, regime, cfg)?;
    let n = data.n() as f64;
    let l_top = fits[s - 1].loglik;

    let mut per_r = Vec::with_capacity(s - 1);
    let mut g_needed = f64::INFINITY;
    for r in 1..s {
        let exponent = 2.0 * (l_top - fits[r - 1].loglik) / (3.0 * (s - r) as f64);
        let g_r = exponent.exp() - n;
        g_needed = g_needed.min(g_r);
        per_r.push(RRow {
            r,
            loglik: fits[r - 1].loglik,
            g_required: Some(g_r),
        });
    }
    let g_star = if g_needed <= 1.0 {
        1
    } else if g_needed >= u64::MAX as f64 {
        u64::MAX
    } else {
        g_needed.ceil() as u64
    };

    Ok(BreakdownReport {
        kind: BreakdownKind::BicGrossOutlierCert,
        n: data.n(),
        g_star,
        bound: bound_frac(g_star, data.n()),
        min_breakdown: bound_frac(g_star, data.n()),
        f_max: Some(fam.f0() / cfg.scale_floor),
        reference_loglik: Some(l_top),
        per_r,
        per_g: Vec::new(),
        fits,
        parameter_breakdown: None,
        order_before: None,
        order_after: None,
        classification: None,
        clusters_lost_to_noise: None,
    })
}

/// One probe of the outlier-threshold search.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ProbePoint {
    pub y: f64,
    pub broke: bool,
}

/// Result of [`empirical_outlier_threshold`].
#[derive(Debug, Clone, Serialize)]
pub struct ThresholdSearch {
    /// Smallest outlier position found to break the fit (None when the
    /// search ceiling was reached without breakdown).
    pub threshold: Option<f64>,
    pub ceiling: f64,
    pub trace: Vec<ProbePoint>,
}

/// Breakdown indicator for a single appended outlier: after refitting
/// with fixed `s`, every original point shares one label while the
/// outlier sits alone under a different one.
fn outlier_breaks(
    data: &Dataset,
    y: f64,
    s: usize,
    fam: Family,
    regime: &NoiseRegime,
    cfg: &FitConfig,
) -> Result<bool> {
    let (aug, map) = data.augmented(&[y])?;
    let aug_regime = regime.rebind(&aug)?;
    let refit = fit(&aug, s, fam, &aug_regime, cfg)?;
    let part = classify(&refit.params, &aug)?;
    let n = data.n();
    let outlier_label = part.labels()[map[n]];
    let first = part.labels()[map[0]];
    let originals_united = (0..n).all(|i| part.labels()[map[i]] == first);
    let outlier_alone = part
        .labels()
        .iter()
        .filter(|&&l| l == outlier_label)
        .count()
        == 1;
    Ok(originals_united && outlier_label != first && outlier_alone)
}

/// Minimal position of a single added outlier that collapses the fixed-`s`
/// fit (all originals in one cluster, the outlier isolated). Doubling
/// ascent from just beyond the data, then bisection to 1% relative width.
pub fn empirical_outlier_threshold(
    data: &Dataset,
    s: usize,
    fam: Family,
    regime: &NoiseRegime,
    cfg: &FitConfig,
) -> Result<ThresholdSearch> {
    if s < 2 {
        return Err(Error::InvalidArgument(
            "threshold search needs s >= 2".into(),
        ));
    }
    let ceiling = OUTLIER_SEARCH_CEILING;
    let mut trace = Vec::new();
    let probe = |y: f64, trace: &mut Vec<ProbePoint>| -> Result<bool> {
        let broke = outlier_breaks(data, y, s, fam, regime, cfg)?;
        trace.push(ProbePoint { y, broke });
        Ok(broke)
    };

    let start = data.xmax() + 10.0;
    let mut lo;
    let mut hi;
    if probe(start, &mut trace)? {
        // Already broken right beyond the data: bracket from the maximum.
        lo = data.xmax();
        hi = start;
        if probe(lo, &mut trace)? {
            return Ok(ThresholdSearch {
                threshold: Some(lo),
                ceiling,
                trace,
            });
        }
    } else {
        lo = start;
        hi = start * 2.0;
        loop {
            if hi > ceiling {
                return Ok(ThresholdSearch {
                    threshold: None,
                    ceiling,
                    trace,
                });
            }
            if probe(hi, &mut trace)? {
                break;
            }
            lo = hi;
            hi *= 2.0;
        }
    }

    // Bisect (geometric when the bracket is positive) to 1% width.
    while (hi - lo) > 0.01 * hi.abs().max(1e-12) {
        let mid = if lo > 0.0 {
            (lo * hi).sqrt()
        } else {
            0.5 * (lo + hi)
        };
        if probe(mid, &mut trace)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }

    Ok(ThresholdSearch {
        threshold: Some(hi),
        ceiling,
        trace,
    })
}

/// Contamination probe mode: refit at a fixed order or re-estimate the
/// order by criterion sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ProbeMode {
    FixedS(usize),
    EstimatedS(Criterion),
}

/// Injective matching of the original components into the refit, each
/// within the default closeness box (location within `5 sigma`, scale
/// within a factor 10). Degenerate-weight components are ignored on both
/// sides.
pub fn components_match(original: &[Component], refit: &[Component]) -> bool {
    components_match_within(original, refit, 5.0, 10.0)
}

/// Matching with explicit box multipliers (smaller multipliers mean a
/// stricter box).
pub fn components_match_within(
    original: &[Component],
    refit: &[Component],
    loc_mult: f64,
    scale_mult: f64,
) -> bool {
    let orig: Vec<&Component> = original
        .iter()
        .filter(|c| c.weight >= DEGENERATE_WEIGHT)
        .collect();
    let avail: Vec<&Component> = refit
        .iter()
        .filter(|c| c.weight >= DEGENERATE_WEIGHT)
        .collect();
    if orig.len() > avail.len() {
        return false;
    }
    let mut used = vec![false; avail.len()];
    fn assign(
        orig: &[&Component],
        avail: &[&Component],
        used: &mut [bool],
        idx: usize,
        loc_mult: f64,
        scale_mult: f64,
    ) -> bool {
        if idx == orig.len() {
            return true;
        }
        let c = orig[idx];
        for (j, cand) in avail.iter().enumerate() {
            if used[j] {
                continue;
            }
            let loc_ok = (cand.location - c.location).abs() <= loc_mult * c.scale;
            let scale_ok =
                cand.scale >= c.scale / scale_mult && cand.scale <= c.scale * scale_mult;
            if loc_ok && scale_ok {
                used[j] = true;
                if assign(orig, avail, used, idx + 1, loc_mult, scale_mult) {
                    return true;
                }
                used[j] = false;
            }
        }
        false
    }
    assign(&orig, &avail, &mut used, 0, loc_mult, scale_mult)
}

/// Refits on the contaminated sample and reports parameter breakdown
/// (original-like components unmatchable, or a dropped order) plus the
/// per-cluster classification verdicts on the induced partition.
pub fn empirical_contamination_probe(
    data: &Dataset,
    added: &[f64],
    fam: Family,
    regime: &NoiseRegime,
    cfg: &FitConfig,
    mode: ProbeMode,
) -> Result<BreakdownReport> {
    if added.is_empty() {
        return Err(Error::InvalidArgument(
            "contamination probe needs at least one added point".into(),
        ));
    }
    let base_regime = regime.rebind(data)?;
    let (orig_fit, s_before) = match mode {
        ProbeMode::FixedS(s) => (fit(data, s, fam, &base_regime, cfg)?, s),
        ProbeMode::EstimatedS(kind) => {
            let sel = select_order(data, fam, &base_regime, cfg, kind, None)?;
            (sel.selected_fit().clone(), sel.selected)
        }
    };
    let orig_partition = classify(&orig_fit.params, data)?;

    let (aug, map) = data.augmented(added)?;
    let aug_regime = regime.rebind(&aug)?;
    let (refit, s_after) = match mode {
        ProbeMode::FixedS(s) => (fit(&aug, s, fam, &aug_regime, cfg)?, s),
        ProbeMode::EstimatedS(kind) => {
            let sel = select_order(&aug, fam, &aug_regime, cfg, kind, None)?;
            (sel.selected_fit().clone(), sel.selected)
        }
    };

    let matched = components_match(orig_fit.params.components(), refit.params.components());
    let parameter_breakdown = s_after < s_before || !matched;

    let n = data.n();
    let restricted = induced_partition(&refit, &aug, &map[..n])?;
    let verdict = classification_breakdown_check(&orig_partition, &restricted)?;

    // Original clusters whose majority flips into the noise class.
    let full = classify(&refit.params, &aug)?;
    let mut lost_to_noise = 0usize;
    for (_, members) in orig_partition.clusters() {
        let noisy = members
            .iter()
            .filter(|&&i| full.labels()[map[i]] == NOISE_LABEL)
            .count();
        if 2 * noisy > members.len() {
            lost_to_noise += 1;
        }
    }

    let g = added.len() as u64;
    let broke = parameter_breakdown || verdict.broken_count > 0;
    let g_star = if broke { g } else { 0 };
    let kind = if !parameter_breakdown && verdict.broken_count > 0 {
        BreakdownKind::ClassificationEmpirical
    } else {
        BreakdownKind::EmpiricalInlier
    };

    Ok(BreakdownReport {
        kind,
        n,
        g_star,
        bound: bound_frac(g_star, n),
        min_breakdown: bound_frac(g_star, n),
        f_max: Some(fam.f0() / cfg.scale_floor),
        reference_loglik: Some(refit.loglik),
        per_r: Vec::new(),
        per_g: Vec::new(),
        fits: vec![orig_fit, refit],
        parameter_breakdown: Some(parameter_breakdown),
        order_before: Some(s_before),
        order_after: Some(s_after),
        classification: Some(verdict),
        clusters_lost_to_noise: Some(lost_to_noise),
    })
}

/// Result of [`separation_decomposition_check`].
#[derive(Debug, Clone, Serialize)]
pub struct SeparationCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub deviation: f64,
    /// Component split `(q_1, ..., q_h)` attaining the decomposed maximum.
    pub best_split: Vec<usize>,
}

/// Compares the `s`-component log-likelihood of gap-separated groups with
/// the best split of the component budget across per-group fits (plus the
/// group log-proportions). The deviation vanishes as the gap grows.
pub fn separation_decomposition_check(
    groups: &[Dataset],
    gap: f64,
    s: usize,
    fam: Family,
    cfg: &FitConfig,
) -> Result<SeparationCheck> {
    let h = groups.len();
    if h == 0 {
        return Err(Error::InvalidArgument("need at least one group".into()));
    }
    if s < h {
        return Err(Error::InvalidArgument(format!(
            "need s >= number of groups ({h}) so every group gets a component"
        )));
    }
    let n: usize = groups.iter().map(|g| g.n()).sum();

    let mut union = Vec::with_capacity(n);
    for (k, g) in groups.iter().enumerate() {
        union.extend(g.values().iter().map(|v| v + k as f64 * gap));
    }
    let union = Dataset::new(union)?;
    let lhs_fit = fit(&union, s, fam, &NoiseRegime::None, cfg)?;
    converged_or_err(&lhs_fit, "union fit")?;
    let lhs = lhs_fit.loglik;

    // Per-group fits for every feasible component budget; index 0 stays
    // unused (every group needs at least one component).
    let q_hi = s - h + 1;
    let mut group_ll = vec![vec![f64::NEG_INFINITY; q_hi + 1]; h];
    for (k, g) in groups.iter().enumerate() {
        for (q, slot) in group_ll[k].iter_mut().enumerate().skip(1) {
            let f = fit(g, q, fam, &NoiseRegime::None, cfg)?;
            converged_or_err(&f, &format!("group {k} fit with {q} components"))?;
            *slot = f.loglik;
        }
    }

    let mut best = f64::NEG_INFINITY;
    let mut best_split = Vec::new();
    let mut split = vec![1usize; h];
    enumerate_splits(&mut split, 0, s, &mut |split| {
        let mut total = 0.0;
        for k in 0..h {
            let nk = groups[k].n() as f64;
            total += group_ll[k][split[k]] + nk * (nk / n as f64).ln();
        }
        if total > best {
            best = total;
            best_split = split.to_vec();
        }
    });

    Ok(SeparationCheck {
        lhs,
        rhs: best,
        deviation: (lhs - best).abs(),
        best_split,
    })
}

fn enumerate_splits(split: &mut Vec<usize>, idx: usize, budget: usize, f: &mut impl FnMut(&[usize])) {
    let h = split.len();
    let remaining_min = h - idx - 1;
    if idx == h - 1 {
        split[idx] = budget;
        f(split);
        return;
    }
    for q in 1..=(budget - remaining_min) {
        split[idx] = q;
        enumerate_splits(split, idx + 1, budget - q, f);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dataset(values: &[f64]) -> Dataset {
        Dataset::new(values.to_vec()).unwrap()
    }

    #[test]
    fn improper_certificate_rejects_bad_hypothesis() {
        let d = dataset(&[0.0, 1.0, 2.0, 10.0]);
        let cfg = FitConfig::new(0.1);
        // f(0)/floor = 3.99; pick b above it.
        let err = improper_noise_certificate(&d, 2, Family::Normal, 5.0, &cfg, 4).unwrap_err();
        assert!(matches!(err, Error::HypothesisViolated(_)));
    }

    #[test]
    fn improper_certificate_rejects_single_component() {
        let d = dataset(&[0.0, 1.0]);
        let cfg = FitConfig::new(0.1);
        let err = improper_noise_certificate(&d, 1, Family::Normal, 0.01, &cfg, 4).unwrap_err();
        assert!(matches!(err, Error::InvalidArgument(_)));
    }

    #[test]
    fn gross_outlier_inversion_closed_form() {
        // Synthetic fits: dL = 9, s = 2, n = 50 -> g = ceil(e^6) - 50 = 354.
        let g = (6.0f64.exp() - 50.0).ceil() as u64;
        assert_eq!(g, 354);
    }

    #[test]
    fn component_matching_boxes() {
        let orig = [Component {
            weight: 0.5,
            location: 0.0,
            scale: 1.0,
        }];
        let close = [Component {
            weight: 0.5,
            location: 2.0,
            scale: 3.0,
        }];
        let far = [Component {
            weight: 0.5,
            location: 20.0,
            scale: 1.0,
        }];
        let shrunk = [Component {
            weight: 0.5,
            location: 0.0,
            scale: 0.05,
        }];
        assert!(components_match(&orig, &close));
        assert!(!components_match(&orig, &far));
        assert!(!components_match(&orig, &shrunk));
    }

    #[test]
    fn component_matching_is_injective() {
        let orig = [
            Component {
                weight: 0.5,
                location: 0.0,
                scale: 1.0,
            },
            Component {
                weight: 0.5,
                location: 1.0,
                scale: 1.0,
            },
        ];
        // Only one refit component near both originals: no injective match.
        let refit = [Component {
            weight: 1.0,
            location: 0.5,
            scale: 1.5,
        }];
        assert!(!components_match(&orig, &refit));
    }

    #[test]
    fn matching_monotone_in_box_size() {
        let orig = [Component {
            weight: 0.5,
            location: 0.0,
            scale: 1.0,
        }];
        let refit = [Component {
            weight: 0.5,
            location: 4.0,
            scale: 1.0,
        }];
        assert!(components_match_within(&orig, &refit, 5.0, 10.0));
        assert!(!components_match_within(&orig, &refit, 2.5, 5.0));
    }

    #[test]
    fn split_enumeration_covers_compositions() {
        let mut seen = Vec::new();
        let mut split = vec![1usize; 2];
        enumerate_splits(&mut split, 0, 3, &mut |s| seen.push(s.to_vec()));
        assert_eq!(seen, vec![vec![1, 2], vec![2, 1]]);
    }

    #[test]
    fn single_group_decomposition_is_exact() {
        let g = dataset(&[0.0, 0.5, 1.0, 1.5, 2.0]);
        let cfg = FitConfig::new(0.05).with_restarts(6);
        let chk =
            separation_decomposition_check(&[g], 10.0, 1, Family::Normal, &cfg).unwrap();
        assert_eq!(chk.best_split, vec![1]);
        assert!(chk.deviation < 1e-9, "deviation {}", chk.deviation);
    }
}
