//! Orthomartingale-coboundary decomposition of stationary random fields on the
//! linear innovation chaos, together with seeded Monte Carlo tools for checking
//! moment inequalities, invariance principles and entropy conditions.

pub mod chaos;
pub mod decomposition;
pub mod error;
pub mod inequality;
pub mod lattice;
pub mod law;
pub mod rng;
pub mod series;
pub mod simulation;
pub mod vc;

pub use chaos::{ChaosElement, LpNormEstimate, RosenthalBracket, SigmaAlgebraSpec};
pub use error::{Error, Result};
pub use lattice::{box_indices, cube_overlap_weight, HalfSpaceRegion, MultiIndex, Rect};
pub use law::{InnovationLaw, LawKind};
pub use rng::{substream, InnovationStream};
pub use decomposition::{decompose, decompose_generic, omd_verify, reconstruct, volny_step, Decomposition, OmdReport};
pub use series::{linear_condition, series_condition, SeriesKind, SeriesOptions, SeriesReport, SeriesStatus};
pub use simulation::{
    partial_sum, run_experiment, sample_innovations, sample_linear_field, sample_product_omd, EmpiricalSample,
    ExperimentSpec, FieldSpec, GridSample, Statistic,
};
pub use inequality::{
    beta_exponent, covariance_structure_test, gaussian_limit_test, holder_check, holder_threshold, luxemburg_norm,
    moment_ratio, tail_bound_check, young_eval, BetaExponent, CovarianceReport, HolderReport, KsReport,
    MomentMethod, MomentRatioReport, TailReport, YoungFunctionSpec,
};
pub use vc::{
    covering_number, entropy_integral, packing_lower_bound, picked_count, rho, shatters, vc_index, CoveringReport,
    EntropyOptions, SetClass, SetClassKind, VcResult, VcSearch,
};
