//! Censorship quantification: rates, lifetime summaries, creation-time
//! distributions, proportional-hazards survival regression, and
//! inter-annotator agreement.

mod cox;
mod kappa;
mod lifetime;
mod rates;
mod records;
pub mod report;

pub use cox::{CoxEstimate, CoxFit, CoxOptions, CoxProblem};
pub use kappa::{cohens_kappa, KappaResult};
pub use lifetime::{
    creation_time_distribution, lifetime_summary, CreationHistogram, LifetimeSummary,
};
pub use rates::{censorship_rate, rate_mismatches, RateRow};
pub use records::{
    build_survival_records, fit_cox, fit_cox_with, read_records_csv, write_records_csv,
    RecordBuild, SurvivalRecord, COVARIATE_NAMES,
};
