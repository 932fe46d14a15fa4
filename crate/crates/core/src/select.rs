//! Component-count estimation by information-criterion sweep.

use crate::data::Dataset;
use crate::em::{fit_with_starts, FitConfig, FitResult};
use crate::error::{Error, Result};
use crate::family::Family;
use crate::model::{Component, MixtureParams, NoiseRegime};
use serde::{Deserialize, Serialize};

/// Default sweep ceiling; the distinct-value count is always a hard cap
/// on top of it.
pub const DEFAULT_S_MAX: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Criterion {
    Aic,
    Bic,
}

/// Criterion value `C(s)`: twice the log-likelihood minus the parameter
/// penalty (`2k` for AIC, `k log n` for BIC).
pub fn criterion_value(loglik: f64, k: usize, n: usize, kind: Criterion) -> f64 {
    debug_assert!(n >= 1 && k >= 1);
    match kind {
        Criterion::Aic => 2.0 * loglik - 2.0 * k as f64,
        Criterion::Bic => 2.0 * loglik - k as f64 * (n as f64).ln(),
    }
}

/// Free-parameter count of an `s`-component model: `3s - 1` without a
/// noise component, `3s` with one (the extra noise proportion).
pub fn free_param_count(s: usize, regime: &NoiseRegime) -> usize {
    if regime.has_noise() {
        3 * s
    } else {
        3 * s - 1
    }
}

/// One row of the order sweep.
#[derive(Debug, Clone, Serialize)]
pub struct OrderRow {
    pub s: usize,
    pub loglik: f64,
    pub k: usize,
    pub value: f64,
    pub fit: FitResult,
}

#[derive(Debug, Clone, Serialize)]
pub struct SelectionResult {
    pub criterion: Criterion,
    /// Chosen order (smallest argmax of the criterion).
    pub selected: usize,
    pub rows: Vec<OrderRow>,
    /// True when the sweep ceiling (not the distinct-value bound) cut the
    /// sweep short while the maximum sat on the boundary.
    pub capped: bool,
    pub all_converged: bool,
}

impl SelectionResult {
    pub fn row(&self, s: usize) -> Option<&OrderRow> {
        self.rows.iter().find(|r| r.s == s)
    }

    pub fn selected_fit(&self) -> &FitResult {
        &self.row(self.selected).unwrap().fit
    }
}

/// Sweeps `s = 1..=min(s_max, distinct values)` and returns every fit plus
/// the criterion argmax. Non-converged fits are kept (and flagged), they
/// do not abort the sweep.
///
/// The sweep runs the orders in ascending sequence: besides the standard
/// restart portfolio, each order is also started from the previous order's
/// best fit with one extra floor-scale component inserted at the point the
/// fit explains worst. Random restarts alone reliably miss maximizers that
/// isolate small point clumps as their own components, and those
/// maximizers are what makes the larger order win; the insertion start
/// also keeps the fitted log-likelihood nondecreasing in `s`.
pub fn select_order(
    data: &Dataset,
    fam: Family,
    regime: &NoiseRegime,
    cfg: &FitConfig,
    kind: Criterion,
    s_max: Option<usize>,
) -> Result<SelectionResult> {
    cfg.validate()?;
    let ceiling = s_max.unwrap_or(DEFAULT_S_MAX);
    if ceiling < 1 {
        return Err(Error::InvalidArgument("s_max must be >= 1".into()));
    }
    let sweep_max = ceiling.min(data.distinct());

    let n = data.n();
    let mut rows: Vec<OrderRow> = Vec::with_capacity(sweep_max);
    for s in 1..=sweep_max {
        let mut extra = Vec::new();
        if let Some(prev) = rows.last() {
            extra = insertion_starts(&prev.fit.params, data)?;
        }
        let fit = fit_with_starts(data, s, fam, regime, cfg, &extra)?;
        let k = free_param_count(s, regime);
        let value = criterion_value(fit.loglik, k, n, kind);
        rows.push(OrderRow {
            s,
            loglik: fit.loglik,
            k,
            value,
            fit,
        });
    }

    let mut selected = rows[0].s;
    let mut best = rows[0].value;
    for row in &rows[1..] {
        if row.value > best {
            best = row.value;
            selected = row.s;
        }
    }
    let all_converged = rows.iter().all(|r| r.fit.converged);
    let capped = sweep_max < data.distinct() && selected == sweep_max;

    Ok(SelectionResult {
        criterion: kind,
        selected,
        rows,
        capped,
        all_converged,
    })
}

/// Starting points for order `s` derived from the best `(s-1)`-fit: one
/// extra floor-scale component dropped on each insertion site, with the
/// other weights rescaled. Sites are the point the fit explains worst and
/// the most-duplicated values (tied points are exactly the clumps a new
/// floor-scale component can capture).
fn insertion_starts(prev: &MixtureParams, data: &Dataset) -> Result<Vec<MixtureParams>> {
    let mut sites = Vec::new();
    let worst = data
        .values()
        .iter()
        .copied()
        .min_by(|a, b| {
            prev.log_mixture_density(*a)
                .total_cmp(&prev.log_mixture_density(*b))
        })
        .unwrap();
    sites.push(worst);

    let mut ties: Vec<(usize, f64)> = Vec::new();
    let values = data.values();
    let mut i = 0;
    while i < values.len() {
        let mut j = i + 1;
        while j < values.len() && values[j] == values[i] {
            j += 1;
        }
        if j - i >= 2 {
            ties.push((j - i, values[i]));
        }
        i = j;
    }
    ties.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.total_cmp(&b.1)));
    sites.extend(ties.into_iter().take(3).map(|(_, v)| v));
    sites.dedup();

    let w_new = 1.0 / (data.n() as f64).max(2.0);
    let keep = 1.0 - w_new;
    sites
        .into_iter()
        .map(|site| {
            let mut components: Vec<Component> = prev
                .components()
                .iter()
                .map(|c| Component {
                    weight: c.weight * keep,
                    ..*c
                })
                .collect();
            components.push(Component {
                weight: w_new,
                location: site,
                scale: prev.scale_floor(),
            });
            MixtureParams::new(
                prev.family(),
                components,
                prev.noise_weight() * keep,
                *prev.regime(),
                prev.scale_floor(),
            )
        })
        .collect()
}
