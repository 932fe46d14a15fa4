//! Mixture parameter vectors and the log-likelihood objectives.
//!
//! Three objectives share one code path: the plain mixture, the mixture
//! with a uniform noise component on the data range, and the mixture with
//! an improper constant-density noise component. The regime only changes
//! the noise term added inside each point's log density.

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::family::Family;
use serde::{Deserialize, Serialize};

/// Noise-component variant of the model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseRegime {
    /// No noise component.
    None,
    /// Uniform density on the observed data range `[xmin, xmax]`.
    RangeUniform { xmin: f64, xmax: f64 },
    /// Improper uniform component with fixed density level `b` on the
    /// whole line.
    Improper { b: f64 },
}

impl NoiseRegime {
    /// Range-uniform regime bound to `data`'s extremes.
    pub fn range_for(data: &Dataset) -> Result<Self> {
        if data.xmax() <= data.xmin() {
            return Err(Error::InvalidArgument(
                "range noise needs xmax > xmin".into(),
            ));
        }
        Ok(NoiseRegime::RangeUniform {
            xmin: data.xmin(),
            xmax: data.xmax(),
        })
    }

    pub fn improper(b: f64) -> Result<Self> {
        if !b.is_finite() || b <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "improper noise level must be > 0, got {b}"
            )));
        }
        Ok(NoiseRegime::Improper { b })
    }

    pub fn has_noise(&self) -> bool {
        !matches!(self, NoiseRegime::None)
    }

    /// Rebinds a range regime to another dataset's extremes; other
    /// regimes pass through unchanged.
    pub fn rebind(&self, data: &Dataset) -> Result<Self> {
        match self {
            NoiseRegime::RangeUniform { .. } => NoiseRegime::range_for(data),
            other => Ok(*other),
        }
    }

    /// Whether this regime is valid for evaluating likelihoods on `data`.
    pub fn matches(&self, data: &Dataset) -> bool {
        match self {
            NoiseRegime::RangeUniform { xmin, xmax } => {
                *xmin == data.xmin() && *xmax == data.xmax()
            }
            _ => true,
        }
    }

    /// Log of the noise density at `x`; negative infinity where it is zero.
    pub fn log_noise_density(&self, x: f64) -> f64 {
        match self {
            NoiseRegime::None => f64::NEG_INFINITY,
            NoiseRegime::RangeUniform { xmin, xmax } => {
                if x >= *xmin && x <= *xmax {
                    -(xmax - xmin).ln()
                } else {
                    f64::NEG_INFINITY
                }
            }
            NoiseRegime::Improper { b } => b.ln(),
        }
    }
}

/// One mixture component.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Component {
    pub weight: f64,
    pub location: f64,
    pub scale: f64,
}

/// Full parameter vector of a fitted or candidate mixture: the component
/// triples in canonical order, the noise proportion, the noise regime,
/// and the scale floor the scales obey.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MixtureParams {
    family: Family,
    components: Vec<Component>,
    noise_weight: f64,
    regime: NoiseRegime,
    scale_floor: f64,
}

const WEIGHT_SUM_TOL: f64 = 1e-12;

impl MixtureParams {
    /// Validates and canonicalizes (components sorted by location, then
    /// scale, then weight, which pins down label switching).
    pub fn new(
        family: Family,
        mut components: Vec<Component>,
        noise_weight: f64,
        regime: NoiseRegime,
        scale_floor: f64,
    ) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidArgument(
                "at least one mixture component is required".into(),
            ));
        }
        if scale_floor.is_nan() || scale_floor <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "scale floor must be > 0, got {scale_floor}"
            )));
        }
        if !regime.has_noise() && noise_weight != 0.0 {
            return Err(Error::InvalidArgument(
                "noise weight must be 0 without a noise regime".into(),
            ));
        }
        if noise_weight < 0.0 {
            return Err(Error::InvalidArgument("proportions must be >= 0".into()));
        }
        let mut total = noise_weight;
        for c in &components {
            if c.weight < 0.0 {
                return Err(Error::InvalidArgument("proportions must be >= 0".into()));
            }
            if !c.location.is_finite() {
                return Err(Error::InvalidArgument("locations must be finite".into()));
            }
            if c.scale.is_nan() || c.scale < scale_floor {
                return Err(Error::InvalidArgument(format!(
                    "scale {} below floor {scale_floor}",
                    c.scale
                )));
            }
            total += c.weight;
        }
        if (total - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::InvalidArgument(format!(
                "proportions sum to {total}, expected 1"
            )));
        }
        components.sort_by(|a, b| {
            a.location
                .total_cmp(&b.location)
                .then(a.scale.total_cmp(&b.scale))
                .then(a.weight.total_cmp(&b.weight))
        });
        Ok(MixtureParams {
            family,
            components,
            noise_weight,
            regime,
            scale_floor,
        })
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn s(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    pub fn noise_weight(&self) -> f64 {
        self.noise_weight
    }

    pub fn regime(&self) -> &NoiseRegime {
        &self.regime
    }

    pub fn scale_floor(&self) -> f64 {
        self.scale_floor
    }

    /// Log of the full mixture density at `x`, noise term included.
    pub fn log_mixture_density(&self, x: f64) -> f64 {
        let ln_norm = self.family.log_norm_const();
        let mut acc = LogSumExp::new();
        if self.noise_weight > 0.0 {
            acc.push(self.noise_weight.ln() + self.regime.log_noise_density(x));
        }
        for c in &self.components {
            if c.weight > 0.0 {
                let z = (x - c.location) / c.scale;
                acc.push(c.weight.ln() + ln_norm + self.family.log_kernel(z) - c.scale.ln());
            }
        }
        acc.value()
    }

    /// Mixture density at `x` (components plus noise term).
    pub fn mixture_density(&self, x: f64) -> f64 {
        self.log_mixture_density(x).exp()
    }

    /// Log of the component-only part of the mixture density at `x`
    /// (noise term excluded).
    pub fn log_component_density(&self, x: f64) -> f64 {
        let ln_norm = self.family.log_norm_const();
        let mut acc = LogSumExp::new();
        for c in &self.components {
            if c.weight > 0.0 {
                let z = (x - c.location) / c.scale;
                acc.push(c.weight.ln() + ln_norm + self.family.log_kernel(z) - c.scale.ln());
            }
        }
        acc.value()
    }
}

/// Log-likelihood of `params` on `data`.
///
/// A range-uniform regime must be bound to `data`'s own extremes (the
/// noise density is defined through them), so evaluating range-noise
/// parameters on a different sample is rejected.
pub fn log_likelihood(params: &MixtureParams, data: &Dataset) -> Result<f64> {
    if !params.regime().matches(data) {
        return Err(Error::InvalidArgument(
            "range-noise regime does not match the dataset extremes".into(),
        ));
    }
    let mut sum = NeumaierSum::new();
    for &x in data.values() {
        let term = params.log_mixture_density(x);
        if term == f64::NEG_INFINITY {
            return Err(Error::Internal(format!(
                "zero mixture density at x = {x}"
            )));
        }
        sum.add(term);
    }
    Ok(sum.value())
}

/// Streaming log-sum-exp over a handful of terms.
pub(crate) struct LogSumExp {
    max: f64,
    acc: f64,
}

impl LogSumExp {
    pub fn new() -> Self {
        LogSumExp {
            max: f64::NEG_INFINITY,
            acc: 0.0,
        }
    }

    #[inline]
    pub fn push(&mut self, term: f64) {
        if term == f64::NEG_INFINITY {
            return;
        }
        if term > self.max {
            self.acc = self.acc * (self.max - term).exp() + 1.0;
            self.max = term;
        } else {
            self.acc += (term - self.max).exp();
        }
    }

    pub fn value(&self) -> f64 {
        if self.max == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            self.max + self.acc.ln()
        }
    }
}

/// Neumaier-compensated accumulator.
pub(crate) struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    pub fn new() -> Self {
        NeumaierSum { sum: 0.0, comp: 0.0 }
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Natural log of the scale bound every global maximizer obeys:
/// `sigma <= sigma0 f(0) / f(range / sigma0)` (kept in log form because
/// the right-hand side overflows for well-separated data).
pub fn scale_box_upper_ln(data: &Dataset, fam: Family, scale_floor: f64) -> f64 {
    let z = data.range() / scale_floor;
    scale_floor.ln() + fam.log_kernel(0.0) - fam.log_kernel(z)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single_normal() -> MixtureParams {
        MixtureParams::new(
            Family::Normal,
            vec![Component {
                weight: 1.0,
                location: 0.0,
                scale: 1.0,
            }],
            0.0,
            NoiseRegime::None,
            1e-3,
        )
        .unwrap()
    }

    #[test]
    fn single_point_log_likelihood() {
        let p = single_normal();
        let d = Dataset::new(vec![0.0]).unwrap();
        let ll = log_likelihood(&p, &d).unwrap();
        assert!((ll - 0.398_942_280_401_432_7f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn two_point_symmetric_mixture_matches_direct_sum() {
        let p = MixtureParams::new(
            Family::Normal,
            vec![
                Component {
                    weight: 0.5,
                    location: -1.0,
                    scale: 1.0,
                },
                Component {
                    weight: 0.5,
                    location: 1.0,
                    scale: 1.0,
                },
            ],
            0.0,
            NoiseRegime::None,
            1e-3,
        )
        .unwrap();
        let d = Dataset::new(vec![-1.0, 1.0]).unwrap();
        let ll = log_likelihood(&p, &d).unwrap();
        let phi = |z: f64| (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let direct = (0.5 * phi(0.0) + 0.5 * phi(2.0)).ln() * 2.0;
        assert!((ll - direct).abs() < 1e-12);
    }

    #[test]
    fn noise_only_densities() {
        let imp = MixtureParams::new(
            Family::Normal,
            vec![Component {
                weight: 0.0,
                location: 0.0,
                scale: 1.0,
            }],
            1.0,
            NoiseRegime::Improper { b: 0.0117 },
            1e-3,
        )
        .unwrap();
        assert!((imp.mixture_density(123.0) - 0.0117).abs() < 1e-15);

        let rng = MixtureParams::new(
            Family::Normal,
            vec![Component {
                weight: 0.0,
                location: 0.0,
                scale: 1.0,
            }],
            1.0,
            NoiseRegime::RangeUniform {
                xmin: 0.0,
                xmax: 2.0,
            },
            1e-3,
        )
        .unwrap();
        assert!((rng.mixture_density(1.0) - 0.5).abs() < 1e-15);
        assert_eq!(rng.mixture_density(3.0), 0.0);
    }

    #[test]
    fn weight_sum_and_floor_validation() {
        let c = |w: f64| Component {
            weight: w,
            location: 0.0,
            scale: 1.0,
        };
        assert!(
            MixtureParams::new(Family::Normal, vec![c(0.9)], 0.0, NoiseRegime::None, 1e-3).is_err()
        );
        assert!(MixtureParams::new(
            Family::Normal,
            vec![Component {
                weight: 1.0,
                location: 0.0,
                scale: 0.5e-3,
            }],
            0.0,
            NoiseRegime::None,
            1e-3
        )
        .is_err());
        assert!(
            MixtureParams::new(Family::Normal, vec![c(0.9)], 0.1, NoiseRegime::None, 1e-3).is_err()
        );
    }

    #[test]
    fn canonical_ordering_sorts_components() {
        let p = MixtureParams::new(
            Family::Normal,
            vec![
                Component {
                    weight: 0.5,
                    location: 2.0,
                    scale: 1.0,
                },
                Component {
                    weight: 0.5,
                    location: -2.0,
                    scale: 1.0,
                },
            ],
            0.0,
            NoiseRegime::None,
            1e-3,
        )
        .unwrap();
        assert!(p.components()[0].location < p.components()[1].location);
    }

    #[test]
    fn range_regime_must_match_dataset() {
        let d = Dataset::new(vec![0.0, 1.0, 2.0]).unwrap();
        let p = MixtureParams::new(
            Family::Normal,
            vec![Component {
                weight: 0.9,
                location: 1.0,
                scale: 1.0,
            }],
            0.1,
            NoiseRegime::RangeUniform {
                xmin: 0.0,
                xmax: 5.0,
            },
            1e-3,
        )
        .unwrap();
        assert!(log_likelihood(&p, &d).is_err());
    }
}
