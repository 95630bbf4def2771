//! Metric-entropy toolkit: packings and covers of finite function clouds,
//! a constructive covering net for weighted trigonometric series, separated
//! subset families and bump packing sets, and rate calculators.

mod cloud;
mod family;
mod fourier_net;
mod rates;

pub use cloud::{
    exhaustive_packing, greedy_cover, greedy_packing, min_external_cover, min_internal_cover, packing_entropy_curve,
    CloudMetric, CurvePoint, FunctionCloud,
};
pub use family::{bump_packing_set, separated_family, BumpPackingConfig, BumpPackingSet, SeparatedFamily};
pub use fourier_net::{
    class_coefficients, class_mass, cover_with_fourier_net, fourier_net_plan, fourier_net_plan_for_budget,
    grid_sup_norm, net_approximant, sample_fourier_class_member, CoverReport, CoverResult, FourierNetPlan,
};
pub use rates::{
    entropy_growth, kappa_bounds, kappa_bounds_with, nn_entropy_bound, rate_exponents, ratio_f64, solve_eps_n,
    EntropyRateParams, RateExponents,
};
