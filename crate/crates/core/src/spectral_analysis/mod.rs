//! Effective dimension, Lebesgue-constant bounds and grid estimates.

mod bounds;
mod dirichlet;
mod lebesgue;
mod report;

pub use bounds::{
    abel_bound_1d, abel_bound_multi, dirichlet_log_constant, effective_dimension,
    effective_dimension_kernel, ratio_sequence, sqrt_deff_bound, summation_by_parts,
    truncation_error_1d, AbelBound, DirichletGrowth, LebesgueGrowth, LogGrowth, MultiAbelBound,
    RatioSequence, UnitGrowth, MAX_MULTI_DIM,
};
pub use dirichlet::{
    dirichlet_kernel_l1, dirichlet_l1, dirichlet_l1_at, dirichlet_l1_estimate, partial_sum_series,
    prefill_odd, SUP_GRID,
};
pub use lebesgue::{
    adversarial_ratio_scan, default_x_grid, lebesgue_estimate, population_apply,
    regularized_series, LebesgueEstimate, RatioPoint,
};
pub use report::{
    read_reports_csv, spectral_scan, write_reports_csv, SandwichMargin, SpectralReport,
    DEFAULT_MULTI_TRUNCATION, REPORT_HEADER,
};
