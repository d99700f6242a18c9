//! Success tables, view generalization score, image quality metrics, feature
//! scatter and the benchmark driver that produces them.

mod bench;
mod image;
mod pca;
pub mod reports;
mod vgs;

pub use bench::{
    demo_seed, feature_scatter, nvs_comparison, run_benchmark, trial_seed, BenchConfig, BenchReport, NvsComparison,
    NvsRow, Setting,
};
pub use image::{co_visible, luma, psnr, ssim, MaskPolicy, NvsMetrics, CO_VISIBLE_TOLERANCE, PSNR_CAP_DB, SSIM_WINDOW};
pub use pca::{pca_scatter, FeatureScatter, ScatterPoint};
pub use reports::{read_success_csv, write_reports};
pub use vgs::{
    vgs, vgs_aggregate, vgs_angle_level, vgs_from_rates, vgs_report, vgs_task_level, Aggregation, Cell, SuccessTable,
    VgsReport,
};
