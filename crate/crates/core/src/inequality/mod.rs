//! Moment, limit, tail and Hölder diagnostics for stationary random fields.

pub mod holder;
pub mod limit;
pub mod moment;
pub mod tail;
pub mod young;

pub use holder::{holder_check, holder_gamma_bound, holder_threshold, HolderReport, ModulusSummary, TightnessRow};
pub use limit::{
    covariance_structure_test, default_ks_threshold, gaussian_limit_test, ks_statistic, CovarianceReport, KsReport,
};
pub use moment::{moment_ratio, rademacher_sum_norm, MomentMethod, MomentRatioReport};
pub use tail::{tail_bound, tail_bound_check, TailReport, TailRow};
pub use young::{beta_exponent, luxemburg_norm, young_eval, BetaExponent, YoungFunctionSpec};
