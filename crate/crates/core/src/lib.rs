//! Maximum-likelihood estimation of one-dimensional location-scale
//! mixtures under a scale floor, with noise-component variants, AIC/BIC
//! order selection, posterior classification, and a breakdown-analysis
//! suite (certificates plus empirical contamination searches).

pub mod breakdown;
pub mod calibrate;
pub mod classify;
pub mod data;
pub mod em;
pub mod error;
pub mod family;
pub mod frac;
pub mod model;
pub mod normal;
pub mod select;

pub use breakdown::{
    bic_gross_outlier_breakdown, bic_no_breakdown_certificate, empirical_contamination_probe,
    components_match_within, empirical_outlier_threshold, improper_noise_certificate,
    separation_decomposition_check,
    BreakdownKind, BreakdownReport, ProbeMode, SeparationCheck, ThresholdSearch,
};
pub use calibrate::{alpha_outlier_position, calibrate, calibrate_c0, derive_tuning, nsd,
    CalibrationResult};
pub use classify::{
    classification_breakdown_check, classify, gamma, gamma_star, induced_partition,
    BreakdownVerdict, Partition, NOISE_LABEL,
};
pub use data::Dataset;
pub use em::{e_step, fit, fit_from, fit_with_starts, m_step, weighted_ml, EmRun, FitConfig,
    FitResult, Responsibilities};
pub use error::{Error, Result};
pub use family::Family;
pub use frac::Frac;
pub use model::{log_likelihood, scale_box_upper_ln, Component, MixtureParams, NoiseRegime};
pub use select::{criterion_value, free_param_count, select_order, Criterion, SelectionResult};
