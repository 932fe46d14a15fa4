//! Shared fixtures and independent oracles for the integration suites.
//!
//! Oracles here deliberately re-derive densities and objectives from
//! first principles (plain formulas, brute-force grids, exhaustive
//! enumeration) so they stay independent of the library's own code paths.

#![allow(dead_code)]

use mixbreak::*;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const SIGMA0: f64 = 0.025;
pub const B_LEVEL: f64 = 0.0117;

/// 25-point standard Normal quantile set next to a shifted copy.
pub fn two_nsd(sep: f64) -> Dataset {
    let a = nsd(0.0, 1.0, 25).unwrap();
    let b = nsd(sep, 1.0, 25).unwrap();
    let mut v = a.values().to_vec();
    v.extend_from_slice(b.values());
    Dataset::new(v).unwrap()
}

/// 45-point set with a small 5-point satellite at 5.
pub fn big_small() -> Dataset {
    let a = nsd(0.0, 1.0, 45).unwrap();
    let b = nsd(5.0, 1.0, 5).unwrap();
    let mut v = a.values().to_vec();
    v.extend_from_slice(b.values());
    Dataset::new(v).unwrap()
}

pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}

pub fn with_added(data: &Dataset, added: &[f64]) -> Dataset {
    let mut v = data.values().to_vec();
    v.extend_from_slice(added);
    Dataset::new(v).unwrap()
}

// ---- independent density formulas ----

pub fn phi(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Student t density with 3 degrees of freedom, from the closed form
/// q = 2 / (pi sqrt(3)).
pub fn t3_density(z: f64) -> f64 {
    let q = 2.0 / (std::f64::consts::PI * 3.0f64.sqrt());
    q * (1.0 + z * z / 3.0).powi(-2)
}

// ---- grid oracles ----

/// Argmax of `S(a, sigma) = sum_i w_i log(f((x_i-a)/sigma)/sigma)` over a
/// rectangle, by staged grid refinement down to `step`.
pub fn grid_weighted_argmax(
    f: impl Fn(f64) -> f64,
    weights: &[f64],
    xs: &[f64],
    a_range: (f64, f64),
    sigma_range: (f64, f64),
    step: f64,
) -> (f64, f64, f64) {
    let objective = |a: f64, s: f64| -> f64 {
        weights
            .iter()
            .zip(xs)
            .map(|(w, x)| w * (f((x - a) / s) / s).ln())
            .sum()
    };
    let mut ca = 0.5 * (a_range.0 + a_range.1);
    let mut cs = 0.5 * (sigma_range.0 + sigma_range.1);
    let mut wa = 0.5 * (a_range.1 - a_range.0);
    let mut ws = 0.5 * (sigma_range.1 - sigma_range.0);
    let mut best = (f64::NEG_INFINITY, ca, cs);
    while wa > step / 4.0 || ws > step / 4.0 {
        for i in 0..=16 {
            let a = (ca - wa + 2.0 * wa * i as f64 / 16.0).clamp(a_range.0, a_range.1);
            for j in 0..=16 {
                let s = (cs - ws + 2.0 * ws * j as f64 / 16.0).clamp(sigma_range.0, sigma_range.1);
                let v = objective(a, s);
                if v > best.0 {
                    best = (v, a, s);
                }
            }
        }
        ca = best.1;
        cs = best.2;
        wa *= 0.2;
        ws *= 0.2;
    }
    best
}

/// Brute-force maximum of the two-component Normal mixture log-likelihood
/// over (a1, a2, log sigma1, log sigma2, pi1), refined in stages.
pub fn grid_two_component_loglik(xs: &[f64], floor: f64) -> f64 {
    let lo = xs.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let ll = |a1: f64, s1: f64, a2: f64, s2: f64, p: f64| -> f64 {
        xs.iter()
            .map(|&x| {
                (p * phi((x - a1) / s1) / s1 + (1.0 - p) * phi((x - a2) / s2) / s2).ln()
            })
            .sum()
    };
    let ls_lo = floor.ln();
    let ls_hi = (hi - lo).max(floor * 4.0).ln();

    let mut c = [
        0.25 * (3.0 * lo + hi),
        0.5 * (ls_lo + ls_hi),
        0.25 * (lo + 3.0 * hi),
        0.5 * (ls_lo + ls_hi),
        0.5,
    ];
    let mut w = [
        0.5 * (hi - lo),
        0.5 * (ls_hi - ls_lo),
        0.5 * (hi - lo),
        0.5 * (ls_hi - ls_lo),
        0.48,
    ];
    let clamp = |d: usize, v: f64| -> f64 {
        match d {
            0 | 2 => v.clamp(lo, hi),
            1 | 3 => v.clamp(ls_lo, ls_hi),
            _ => v.clamp(0.02, 0.98),
        }
    };
    let mut best = (f64::NEG_INFINITY, c);
    for _pass in 0..9 {
        let steps = 8usize;
        for i0 in 0..=steps {
            let a1 = clamp(0, c[0] - w[0] + 2.0 * w[0] * i0 as f64 / steps as f64);
            for i1 in 0..=steps {
                let s1 = clamp(1, c[1] - w[1] + 2.0 * w[1] * i1 as f64 / steps as f64).exp();
                for i2 in 0..=steps {
                    let a2 = clamp(2, c[2] - w[2] + 2.0 * w[2] * i2 as f64 / steps as f64);
                    for i3 in 0..=steps {
                        let s2 =
                            clamp(3, c[3] - w[3] + 2.0 * w[3] * i3 as f64 / steps as f64).exp();
                        for i4 in 0..=steps {
                            let p = clamp(4, c[4] - w[4] + 2.0 * w[4] * i4 as f64 / steps as f64);
                            let v = ll(a1, s1, a2, s2, p);
                            if v > best.0 {
                                best = (v, [a1, s1.ln(), a2, s2.ln(), p]);
                            }
                        }
                    }
                }
            }
        }
        c = best.1;
        for wd in w.iter_mut() {
            *wd *= 0.25;
        }
    }
    best.0
}

// ---- fit-quality checkers ----

/// Proportions match responsibility column means and each component sits
/// at a stationary point of its weighted objective (one-sided at the
/// scale floor).
pub fn check_stationarity(res: &FitResult, data: &Dataset) {
    assert!(res.converged, "stationarity check expects convergence");
    let params = &res.params;
    let fam = params.family();
    let resp = e_step(params, data).unwrap();

    if resp.has_noise_column() {
        let mean = resp.column_mean(0);
        assert!(
            (params.noise_weight() - mean).abs() < 1e-6,
            "noise weight {} vs column mean {}",
            params.noise_weight(),
            mean
        );
    }
    for (j, comp) in params.components().iter().enumerate() {
        let col = resp.component_column(j);
        let mean = resp.column_mean(col);
        assert!(
            (comp.weight - mean).abs() < 1e-6,
            "component {j}: weight {} vs column mean {}",
            comp.weight,
            mean
        );
        if comp.weight < 1e-12 {
            continue;
        }
        let w = resp.column(col);
        let obj = |a: f64, s: f64| -> f64 {
            w.iter()
                .zip(data.values())
                .map(|(w, x)| w * (fam.log_density_std((x - a) / s) - s.ln()))
                .sum()
        };
        let h = 1e-4 * comp.scale;
        let da = (obj(comp.location + h, comp.scale) - obj(comp.location - h, comp.scale))
            / (2.0 * h);
        assert!(da.abs() < 1e-4, "component {j}: location gradient {da}");
        let floor = params.scale_floor();
        if comp.scale > floor * (1.0 + 1e-9) {
            let ds =
                (obj(comp.location, comp.scale + h) - obj(comp.location, comp.scale - h))
                    / (2.0 * h);
            assert!(ds.abs() < 1e-4, "component {j}: scale gradient {ds}");
        } else {
            // Floor binds: objective must not improve for larger scales.
            let ds = (obj(comp.location, comp.scale + h) - obj(comp.location, comp.scale)) / h;
            assert!(ds < 1e-4, "component {j}: one-sided scale gradient {ds}");
        }
    }
}

/// Every positive-weight component lies in the location-scale box that
/// any global maximizer must occupy.
pub fn check_box(res: &FitResult, data: &Dataset) {
    let params = &res.params;
    let floor = params.scale_floor();
    let ln_hi = scale_box_upper_ln(data, params.family(), floor);
    for comp in params.components() {
        if comp.weight <= 1e-12 {
            continue;
        }
        assert!(
            comp.location >= data.xmin() - 1e-9 && comp.location <= data.xmax() + 1e-9,
            "location {} outside data range",
            comp.location
        );
        assert!(comp.scale >= floor, "scale {} below floor", comp.scale);
        assert!(
            comp.scale.ln() <= ln_hi + 1e-9,
            "scale {} above box bound",
            comp.scale
        );
    }
}

// ---- randomized instances ----

pub struct RandomInstance {
    pub data: Dataset,
    pub s: usize,
    pub fam: Family,
    pub regime: NoiseRegime,
    pub start: MixtureParams,
    pub floor: f64,
}

/// Seeded random fitting problem plus a valid random starting point.
pub fn random_instance(seed: u64) -> RandomInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(5..=30);
    let spread = rng.gen_range(1.0..8.0);
    let values: Vec<f64> = (0..n)
        .map(|_| {
            let center = if rng.gen_bool(0.5) { 0.0 } else { spread };
            center + rng.gen_range(-1.0..1.0)
        })
        .collect();
    let data = Dataset::new(values).unwrap();
    let s = rng.gen_range(1..=3);
    let fam = match rng.gen_range(0..3) {
        0 => Family::Normal,
        1 => Family::student_t(rng.gen_range(1.0..6.0)).unwrap(),
        _ => Family::huber(rng.gen_range(0.5..2.5)).unwrap(),
    };
    let regime = match rng.gen_range(0..3) {
        0 => NoiseRegime::None,
        1 => NoiseRegime::improper(rng.gen_range(0.001..0.05)).unwrap(),
        _ => NoiseRegime::range_for(&data).unwrap(),
    };
    let floor = rng.gen_range(0.005..0.2);

    let noise_weight = if regime.has_noise() { 0.05 } else { 0.0 };
    let weight = (1.0 - noise_weight) / s as f64;
    let components = (0..s)
        .map(|_| Component {
            weight,
            location: data.values()[rng.gen_range(0..data.n())],
            scale: (data.sd() * rng.gen_range(0.2..1.5)).max(floor),
        })
        .collect();
    let start = MixtureParams::new(fam, components, noise_weight, regime, floor).unwrap();
    RandomInstance {
        data,
        s,
        fam,
        regime,
        start,
        floor,
    }
}

// ---- partition enumeration ----

/// All set partitions of `0..n` as label vectors in restricted-growth
/// form.
pub fn all_partitions(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut labels = vec![0usize; n];
    fn rec(labels: &mut Vec<usize>, idx: usize, max_used: usize, out: &mut Vec<Vec<usize>>) {
        if idx == labels.len() {
            out.push(labels.clone());
            return;
        }
        for l in 0..=max_used + 1 {
            labels[idx] = l;
            rec(labels, idx + 1, max_used.max(l), out);
        }
    }
    if n == 0 {
        return out;
    }
    labels[0] = 0;
    rec(&mut labels, 1, 0, &mut out);
    out
}

/// Blocks of a label vector, each sorted ascending.
pub fn blocks(labels: &[usize]) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = Vec::new();
    for (i, &l) in labels.iter().enumerate() {
        if l >= out.len() {
            out.resize(l + 1, Vec::new());
        }
        out[l].push(i);
    }
    out.retain(|b| !b.is_empty());
    out
}
