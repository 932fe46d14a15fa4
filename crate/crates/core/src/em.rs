//! Constrained EM for the mixture objectives, with multi-start search.
//!
//! The M-step maximizes each component's weighted log-likelihood under the
//! scale floor. For the Normal family that update is closed-form; for the
//! heavy-tailed families it alternates a re-weighting location step with a
//! safeguarded 1-D root solve for the scale, falling back to a golden-section
//! location search whenever the accelerated step fails to improve.

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::family::Family;
use crate::model::{log_likelihood, Component, MixtureParams, NeumaierSum, NoiseRegime};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

/// Tuning knobs for [`fit`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FitConfig {
    /// Lower bound enforced on every component scale.
    pub scale_floor: f64,
    /// Number of EM starts (start 0 is deterministic, the rest seeded).
    pub restarts: usize,
    /// Iteration cap per start.
    pub max_iters: usize,
    /// Relative log-likelihood improvement below which a run stops.
    pub rel_tol: f64,
    /// Seed for the randomized starts.
    pub seed: u64,
}

impl FitConfig {
    pub fn new(scale_floor: f64) -> Self {
        FitConfig {
            scale_floor,
            restarts: 24,
            max_iters: 2000,
            rel_tol: 1e-10,
            seed: 1234,
        }
    }

    pub fn with_restarts(mut self, restarts: usize) -> Self {
        self.restarts = restarts;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !self.scale_floor.is_finite() || self.scale_floor <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "scale floor must be > 0, got {}",
                self.scale_floor
            )));
        }
        if self.restarts < 1 {
            return Err(Error::InvalidArgument("restarts must be >= 1".into()));
        }
        if self.max_iters < 1 {
            return Err(Error::InvalidArgument("max_iters must be >= 1".into()));
        }
        if self.rel_tol.is_nan() || self.rel_tol <= 0.0 {
            return Err(Error::InvalidArgument("rel_tol must be > 0".into()));
        }
        Ok(())
    }
}

/// Posterior weight matrix from the E-step. With a noise regime the matrix
/// has `s + 1` columns and column 0 belongs to the noise component.
#[derive(Debug, Clone)]
pub struct Responsibilities {
    p: Vec<f64>,
    rows: usize,
    cols: usize,
    has_noise: bool,
}

impl Responsibilities {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn has_noise_column(&self) -> bool {
        self.has_noise
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.p[i * self.cols..(i + 1) * self.cols]
    }

    /// Raw column index of mixture component `j` (0-based).
    pub fn component_column(&self, j: usize) -> usize {
        j + usize::from(self.has_noise)
    }

    pub fn column(&self, c: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.p[i * self.cols + c]).collect()
    }

    pub fn column_mean(&self, c: usize) -> f64 {
        let mut sum = NeumaierSum::new();
        for i in 0..self.rows {
            sum.add(self.p[i * self.cols + c]);
        }
        sum.value() / self.rows as f64
    }
}

/// Converged (or iteration-capped) EM solution.
#[derive(Debug, Clone, Serialize)]
pub struct FitResult {
    pub params: MixtureParams,
    pub loglik: f64,
    pub iterations: usize,
    pub converged: bool,
    pub restart_index: usize,
}

/// One EM run together with its accepted log-likelihood trace.
#[derive(Debug, Clone)]
pub struct EmRun {
    pub params: MixtureParams,
    pub loglik: f64,
    pub iterations: usize,
    pub converged: bool,
    pub trace: Vec<f64>,
}

/// Posterior component weights for every data point.
pub fn e_step(params: &MixtureParams, data: &Dataset) -> Result<Responsibilities> {
    let s = params.s();
    let has_noise = params.regime().has_noise();
    let cols = s + usize::from(has_noise);
    let rows = data.n();
    let ln_norm = params.family().log_norm_const();
    let fam = params.family();

    let comp_ln_w: Vec<f64> = params
        .components()
        .iter()
        .map(|c| {
            if c.weight > 0.0 {
                c.weight.ln() - c.scale.ln() + ln_norm
            } else {
                f64::NEG_INFINITY
            }
        })
        .collect();
    let noise_ln_w = if has_noise && params.noise_weight() > 0.0 {
        params.noise_weight().ln()
    } else {
        f64::NEG_INFINITY
    };

    let mut p = vec![0.0f64; rows * cols];
    for (i, &x) in data.values().iter().enumerate() {
        let row = &mut p[i * cols..(i + 1) * cols];
        let mut max = f64::NEG_INFINITY;
        if has_noise {
            row[0] = noise_ln_w + params.regime().log_noise_density(x);
            max = max.max(row[0]);
        }
        for (j, c) in params.components().iter().enumerate() {
            let col = j + usize::from(has_noise);
            row[col] = if c.weight > 0.0 {
                comp_ln_w[j] + fam.log_kernel((x - c.location) / c.scale)
            } else {
                f64::NEG_INFINITY
            };
            max = max.max(row[col]);
        }
        if max == f64::NEG_INFINITY {
            return Err(Error::Internal(format!(
                "all posterior weights vanish at x = {x}"
            )));
        }
        let mut total = 0.0;
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            total += *v;
        }
        for v in row.iter_mut() {
            *v /= total;
        }
    }
    Ok(Responsibilities {
        p,
        rows,
        cols,
        has_noise,
    })
}

/// Weighted component update: maximizes
/// `S(a, sigma) = sum_i w_i log( f((x_i - a)/sigma) / sigma )`
/// subject to `sigma >= scale_floor`. Returns `(location, scale)`.
pub fn weighted_ml(
    weights: &[f64],
    data: &Dataset,
    fam: Family,
    scale_floor: f64,
) -> Result<(f64, f64)> {
    weighted_ml_warm(weights, data, fam, scale_floor, None)
}

pub(crate) fn weighted_ml_warm(
    weights: &[f64],
    data: &Dataset,
    fam: Family,
    scale_floor: f64,
    warm: Option<(f64, f64)>,
) -> Result<(f64, f64)> {
    if weights.len() != data.n() {
        return Err(Error::InvalidArgument(
            "weight vector length must match the dataset".into(),
        ));
    }
    if scale_floor.is_nan() || scale_floor <= 0.0 {
        return Err(Error::InvalidArgument("scale floor must be > 0".into()));
    }
    let total: f64 = weights.iter().sum();
    if total.is_nan() || total <= 0.0 {
        return Err(Error::DegenerateComponent);
    }
    let xs = data.values();

    if fam == Family::Normal {
        // Closed form; the weighted mean stays optimal when the floor binds.
        let mean = dotw(weights, xs) / total;
        let var = weights
            .iter()
            .zip(xs)
            .map(|(w, x)| w * (x - mean) * (x - mean))
            .sum::<f64>()
            / total;
        return Ok((mean, var.sqrt().max(scale_floor)));
    }

    let solver = WeightedSolver {
        weights,
        xs,
        fam,
        floor: scale_floor,
        total,
    };
    let mean = dotw(weights, xs) / total;
    let sd = (weights
        .iter()
        .zip(xs)
        .map(|(w, x)| w * (x - mean) * (x - mean))
        .sum::<f64>()
        / total)
        .sqrt();
    let med = solver.weighted_median();
    let mad = weights
        .iter()
        .zip(xs)
        .map(|(w, x)| w * (x - med).abs())
        .sum::<f64>()
        / total;

    let mut candidates: Vec<(f64, f64)> = Vec::with_capacity(4);
    if let Some(w) = warm {
        candidates.push((w.0, w.1.max(scale_floor)));
    }
    candidates.push((med, (1.4826 * mad).max(scale_floor)));
    candidates.push((mean, sd.max(scale_floor)));

    let mut best: Option<(f64, f64, f64)> = None;
    for &(a0, s0) in &candidates {
        let (a, s) = solver.coordinate_ascent(a0, s0);
        let val = solver.objective(a, s);
        if best.is_none_or(|(bv, _, _)| val > bv) {
            best = Some((val, a, s));
        }
    }
    // A warm start must never be degraded (the EM caller relies on it).
    if let Some((a0, s0)) = warm {
        let s0 = s0.max(scale_floor);
        let val = solver.objective(a0, s0);
        if best.is_none_or(|(bv, _, _)| val > bv) {
            best = Some((val, a0, s0));
        }
    }
    let (_, a, s) = best.unwrap();
    Ok((a, s))
}

fn dotw(w: &[f64], x: &[f64]) -> f64 {
    w.iter().zip(x).map(|(w, x)| w * x).sum()
}

struct WeightedSolver<'a> {
    weights: &'a [f64],
    xs: &'a [f64],
    fam: Family,
    floor: f64,
    total: f64,
}

impl WeightedSolver<'_> {
    fn objective(&self, a: f64, sigma: f64) -> f64 {
        let mut acc = 0.0;
        for (w, x) in self.weights.iter().zip(self.xs) {
            if *w > 0.0 {
                acc += w * self.fam.log_kernel((x - a) / sigma);
            }
        }
        acc + self.total * (self.fam.log_norm_const() - sigma.ln())
    }

    fn weighted_median(&self) -> f64 {
        // xs is sorted, so a cumulative-weight scan suffices.
        let half = 0.5 * self.total;
        let mut acc = 0.0;
        for (w, x) in self.weights.iter().zip(self.xs) {
            acc += w;
            if acc >= half {
                return *x;
            }
        }
        *self.xs.last().unwrap()
    }

    /// Re-weighting location step (fixed point of the weighted score).
    fn irls_location(&self, a: f64, sigma: f64) -> f64 {
        let mut num = 0.0;
        let mut den = 0.0;
        for (w, x) in self.weights.iter().zip(self.xs) {
            if *w <= 0.0 {
                continue;
            }
            let z = (x - a) / sigma;
            let u = self.u_weight(z);
            num += w * u * x;
            den += w * u;
        }
        if den > 0.0 {
            num / den
        } else {
            a
        }
    }

    fn u_weight(&self, z: f64) -> f64 {
        match self.fam {
            Family::Normal => 1.0,
            Family::StudentT { nu } => (nu + 1.0) / (nu + z * z),
            Family::HuberLf { k } => {
                let az = z.abs();
                if az <= k {
                    1.0
                } else {
                    k / az
                }
            }
        }
    }

    /// Scale score `sum_i w_i (psi(z_i) z_i - 1)`; decreasing in sigma.
    fn scale_score(&self, a: f64, sigma: f64) -> f64 {
        let mut acc = 0.0;
        for (w, x) in self.weights.iter().zip(self.xs) {
            if *w <= 0.0 {
                continue;
            }
            let z = (x - a) / sigma;
            acc += w * (z * z * self.u_weight(z) - 1.0);
        }
        acc
    }

    /// Root of the scale score above the floor (floor itself when the
    /// constraint binds).
    fn solve_scale(&self, a: f64, sigma_hint: f64) -> f64 {
        if self.scale_score(a, self.floor) <= 0.0 {
            return self.floor;
        }
        let mut lo = self.floor;
        let mut hi = sigma_hint.max(2.0 * self.floor);
        let mut tries = 0;
        while self.scale_score(a, hi) > 0.0 {
            lo = hi;
            hi *= 2.0;
            tries += 1;
            if tries > 600 || !hi.is_finite() {
                return lo;
            }
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.scale_score(a, mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-13 * hi {
                break;
            }
        }
        0.5 * (lo + hi)
    }

    fn coordinate_ascent(&self, a0: f64, s0: f64) -> (f64, f64) {
        let mut a = a0;
        let mut sigma = s0.max(self.floor);
        let mut cur = self.objective(a, sigma);
        for _ in 0..200 {
            let a_new = self.irls_location(a, sigma);
            let sigma_new = self.solve_scale(a_new, sigma);
            let val = self.objective(a_new, sigma_new);
            if val < cur {
                // Accelerated step overshot: safeguarded golden-section
                // search on the location at the current scale.
                let a_gs = self.golden_location(sigma);
                let sigma_gs = self.solve_scale(a_gs, sigma);
                let val_gs = self.objective(a_gs, sigma_gs);
                if val_gs <= cur {
                    break;
                }
                a = a_gs;
                sigma = sigma_gs;
                cur = val_gs;
                continue;
            }
            let done = (a_new - a).abs() <= 1e-12 * (1.0 + a.abs())
                && (sigma_new - sigma).abs() <= 1e-12 * (1.0 + sigma);
            a = a_new;
            sigma = sigma_new;
            cur = val;
            if done {
                break;
            }
        }
        (a, sigma)
    }

    fn golden_location(&self, sigma: f64) -> f64 {
        const INV_PHI: f64 = 0.618_033_988_749_894_9;
        let mut lo = self.xs[0];
        let mut hi = *self.xs.last().unwrap();
        if hi <= lo {
            return lo;
        }
        let mut x1 = hi - INV_PHI * (hi - lo);
        let mut x2 = lo + INV_PHI * (hi - lo);
        let mut f1 = self.objective(x1, sigma);
        let mut f2 = self.objective(x2, sigma);
        for _ in 0..200 {
            if f1 >= f2 {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - INV_PHI * (hi - lo);
                f1 = self.objective(x1, sigma);
            } else {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + INV_PHI * (hi - lo);
                f2 = self.objective(x2, sigma);
            }
            if hi - lo <= 1e-12 * (1.0 + hi.abs()) {
                break;
            }
        }
        0.5 * (lo + hi)
    }
}

/// Full M-step: proportions from responsibility column means, component
/// parameters from [`weighted_ml`]. Components whose proportion vanishes
/// (below 1e-12) are frozen at `(xmin, scale_floor)` and reported with
/// their (numerically zero) weight; the component count never changes.
pub fn m_step(
    resp: &Responsibilities,
    data: &Dataset,
    fam: Family,
    regime: &NoiseRegime,
    scale_floor: f64,
) -> Result<MixtureParams> {
    m_step_warm(resp, data, fam, regime, scale_floor, None)
}

pub(crate) fn m_step_warm(
    resp: &Responsibilities,
    data: &Dataset,
    fam: Family,
    regime: &NoiseRegime,
    scale_floor: f64,
    warm: Option<&[Component]>,
) -> Result<MixtureParams> {
    if resp.rows() != data.n() {
        return Err(Error::InvalidArgument(
            "responsibility rows must match the dataset".into(),
        ));
    }
    if resp.has_noise_column() != regime.has_noise() {
        return Err(Error::InvalidArgument(
            "responsibility shape does not match the noise regime".into(),
        ));
    }
    let s = resp.cols() - usize::from(resp.has_noise_column());
    let mut noise_weight = if resp.has_noise_column() {
        resp.column_mean(0)
    } else {
        0.0
    };

    let mut components = Vec::with_capacity(s);
    let mut weight_total = noise_weight;
    for j in 0..s {
        let col = resp.component_column(j);
        let weight = resp.column_mean(col);
        weight_total += weight;
        if weight < 1e-12 {
            components.push(Component {
                weight,
                location: data.xmin(),
                scale: scale_floor,
            });
            continue;
        }
        let wcol = resp.column(col);
        let warm_j = warm.map(|w| (w[j].location, w[j].scale));
        let (location, scale) = match weighted_ml_warm(&wcol, data, fam, scale_floor, warm_j) {
            Ok(pair) => pair,
            Err(Error::DegenerateComponent) => (data.xmin(), scale_floor),
            Err(e) => return Err(e),
        };
        components.push(Component {
            weight,
            location,
            scale,
        });
    }
    // Column means already sum to one up to rounding; renormalize exactly.
    noise_weight /= weight_total;
    for c in &mut components {
        c.weight /= weight_total;
    }
    MixtureParams::new(fam, components, noise_weight, *regime, scale_floor)
}

/// Runs EM from an explicit starting point, recording the accepted
/// log-likelihood trace (nondecreasing by construction; a numerical
/// decrease reverts to the previous iterate and stops).
pub fn fit_from(start: MixtureParams, data: &Dataset, cfg: &FitConfig) -> Result<EmRun> {
    cfg.validate()?;
    let fam = start.family();
    let regime = *start.regime();
    let mut params = start;
    let mut ll = log_likelihood(&params, data)?;
    let mut trace = vec![ll];
    let mut converged = false;
    let mut iterations = 0;

    for _ in 0..cfg.max_iters {
        let resp = e_step(&params, data)?;
        let next = m_step_warm(
            &resp,
            data,
            fam,
            &regime,
            cfg.scale_floor,
            Some(params.components()),
        )?;
        let ll_next = log_likelihood(&next, data)?;
        debug_assert!(
            ll_next >= ll - 1e-9,
            "EM step decreased the log-likelihood: {ll} -> {ll_next}"
        );
        if ll_next < ll {
            // Inner-solver noise at stationarity; keep the better iterate.
            converged = true;
            break;
        }
        iterations += 1;
        params = next;
        trace.push(ll_next);
        if (ll_next - ll) / (ll.abs() + 1.0) < cfg.rel_tol {
            ll = ll_next;
            converged = true;
            break;
        }
        ll = ll_next;
    }

    Ok(EmRun {
        params,
        loglik: ll,
        iterations,
        converged,
        trace,
    })
}

/// Best-of-restarts constrained EM estimate with `s` components.
pub fn fit(
    data: &Dataset,
    s: usize,
    fam: Family,
    regime: &NoiseRegime,
    cfg: &FitConfig,
) -> Result<FitResult> {
    fit_with_starts(data, s, fam, regime, cfg, &[])
}

/// [`fit`] with additional caller-supplied starting points appended to
/// the standard portfolio (they get restart indices past `cfg.restarts`).
pub fn fit_with_starts(
    data: &Dataset,
    s: usize,
    fam: Family,
    regime: &NoiseRegime,
    cfg: &FitConfig,
    extra_starts: &[MixtureParams],
) -> Result<FitResult> {
    if s < 1 {
        return Err(Error::InvalidArgument(
            "component count must be >= 1".into(),
        ));
    }
    cfg.validate()?;
    if !regime.matches(data) {
        return Err(Error::InvalidArgument(
            "range-noise regime does not match the dataset extremes".into(),
        ));
    }
    for start in extra_starts {
        if start.s() != s || start.family() != fam || start.regime() != regime {
            return Err(Error::InvalidArgument(
                "extra starting point does not match the requested model".into(),
            ));
        }
    }

    let total = cfg.restarts + extra_starts.len();
    let runs: Result<Vec<(usize, EmRun)>> = (0..total)
        .into_par_iter()
        .map(|ridx| {
            let start = if ridx < cfg.restarts {
                initial_params(data, s, fam, regime, cfg, ridx)?
            } else {
                extra_starts[ridx - cfg.restarts].clone()
            };
            fit_from(start, data, cfg).map(|run| (ridx, run))
        })
        .collect();
    let runs = runs?;

    let mut best: Option<(usize, EmRun)> = None;
    for (ridx, run) in runs {
        let better = match &best {
            None => true,
            Some((_, b)) => run.loglik > b.loglik,
        };
        if better {
            best = Some((ridx, run));
        }
    }
    let (restart_index, run) = best.unwrap();
    Ok(FitResult {
        params: run.params,
        loglik: run.loglik,
        iterations: run.iterations,
        converged: run.converged,
        restart_index,
    })
}

fn initial_params(
    data: &Dataset,
    s: usize,
    fam: Family,
    regime: &NoiseRegime,
    cfg: &FitConfig,
    restart: usize,
) -> Result<MixtureParams> {
    let noise_weight = if regime.has_noise() { 0.05 } else { 0.0 };
    let weight = (1.0 - noise_weight) / s as f64;
    let sd = data.sd().max(cfg.scale_floor);

    let components: Vec<Component> = if restart == 0 {
        (0..s)
            .map(|j| Component {
                weight,
                location: data.quantile((j + 1) as f64 / (s + 1) as f64),
                scale: sd,
            })
            .collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(
            cfg.seed
                .wrapping_add((restart as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)),
        );
        let ln_lo = cfg.scale_floor.ln();
        let ln_hi = sd.max(cfg.scale_floor * 1.000_001).ln();
        (0..s)
            .map(|_| {
                let location = data.values()[rng.gen_range(0..data.n())];
                let scale = (ln_lo + rng.gen::<f64>() * (ln_hi - ln_lo)).exp();
                Component {
                    weight,
                    location,
                    scale: scale.max(cfg.scale_floor),
                }
            })
            .collect()
    };
    MixtureParams::new(fam, components, noise_weight, *regime, cfg.scale_floor)
}
