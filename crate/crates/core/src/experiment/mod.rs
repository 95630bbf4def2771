//! Experiment drivers: configuration, rate sweeps, identity checks,
//! entropy studies and byte-stable report output.

mod config;
mod emit;
mod entropy_study;
mod identity;
mod sweep;

pub use config::{
    ClassifierSpec, EntropySpec, ExperimentConfig, ExperimentKind, IdentitySpec, OutputSpec, SweepSpec, Target,
    SCHEMA_VERSION,
};
pub use emit::{
    fmt_float, load_json, load_rate_report, rate_csv, rate_json, rate_svg, to_canonical_json, write_text,
    RATE_CSV_HEADER,
};
pub use entropy_study::{
    cover_study, curve_csv, packing_study, CoverStudy, CoverStudyRow, PackingStudy, PackingStudyRow, ENTROPY_CSV_HEADER,
};
pub use identity::{
    instance_violations, random_identity_instances, run_default_identity_suite, run_identity_suite, IdentityInstance,
    IdentityRow, IdentityTable, HELLINGER_IDENTITY, KL_DOMINATES_HELLINGER, L2_L1_IDENTITY, LIFT_LIPSCHITZ,
    NORMALIZATION, TOLERANCES,
};
pub use sweep::{
    cell_seed, fit_loglog_slope, median_rows, report_from_records, run_rate_sweep, MedianRow, RateRecord, RateReport,
    Reference, SlopeFit, Windows, FLAG_DIVERGED, FLAG_FLOORED, FLAG_INSUFFICIENT,
};

/// Environment variable capping the number of worker threads.
pub const WORKERS_ENV: &str = "LAB_WORKERS";

/// Size the global thread pool from [`WORKERS_ENV`] when it is set.
/// Returns the requested count.
#[cfg(feature = "parallel")]
pub fn configure_workers() -> crate::Result<Option<usize>> {
    let Ok(raw) = std::env::var(WORKERS_ENV) else {
        return Ok(None);
    };
    let n: usize = raw
        .trim()
        .parse()
        .map_err(|_| crate::LabError::Config(format!("{WORKERS_ENV} must be a positive integer, got {raw:?}")))?;
    if n == 0 {
        return Err(crate::LabError::Config(format!("{WORKERS_ENV} must be positive")));
    }
    // A second call (e.g. in tests) finds the pool already built; that is fine.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(Some(n))
}

#[cfg(not(feature = "parallel"))]
pub fn configure_workers() -> crate::Result<Option<usize>> {
    Ok(None)
}
