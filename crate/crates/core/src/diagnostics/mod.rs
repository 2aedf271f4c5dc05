//! Measurements over finished runs.

mod modes;
mod normality;
mod run;
mod tables;

pub use modes::{hitting_time, mode_occupancy, mode_ratio, scaled_radius, Occupancy};
pub use normality::{gamma_statistic, normality_report, NormalityReport, KS_TOLERANCE, KURTOSIS_TOLERANCE, SKEWNESS_TOLERANCE};
pub use run::SampleRun;
pub use tables::{
    acceptance_and_step_stats, grid_cdf, ks_against_grid, ring_table, ring_table_from_counts,
    test_accuracy, RingTable, StepStats,
};
