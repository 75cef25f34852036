//! Automatic disaggregation of tabular data with a binary outcome.
//!
//! For every ordered pair of numeric covariates `(x_j, x_c)` the detector
//! partitions the rows on `x_c` so that the outcome varies as little as
//! possible inside each bin, fits a logistic trend of the outcome on `x_j`
//! both in aggregate and inside every bin, tests both models against their
//! nested mean-only counterparts with deviance, flags trend reversals, and
//! ranks significant disaggregations by McFadden pseudo-R².
//!
//! ```no_run
//! use disagg_core::{load_csv, scan, ScanConfig, SchemaConfig};
//!
//! let dataset = load_csv("answers.csv", &SchemaConfig::new("accepted")).unwrap();
//! let report = scan(&dataset, &ScanConfig::default()).unwrap();
//! for result in &report.results {
//!     println!("{} | {} -> {:.4}", result.x_j, result.x_c, result.pseudo_r2);
//! }
//! ```

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod dataset;
pub mod detector;
mod error;
pub mod glm;
pub mod partition;
pub mod report;
pub mod special;
pub mod synth;

pub use dataset::{load_csv, pair_view, ColumnRole, ColumnSpec, Dataset, PairView, SchemaConfig};
pub use detector::{
    aggregate_trend, detect_reversal, disaggregated_trends, pseudo_r2, scan, DisaggregationResult,
    ReversalDenominator, ScanConfig, ScanReport, SkippedPair, SubgroupTest, SubgroupTrend, TrendSign,
};
pub use error::{Error, Result};
pub use glm::{
    deviance, fit_logistic, log_likelihood, null_loglik, wald_p, FitConfig, FitStatus, LogisticFit,
};
pub use partition::{
    best_split, build_partition, partition_r2, total_sum_of_squares, Bin, Partition,
    PartitionConfig,
};
pub use report::{emit_heatmap, emit_report, HeatmapGrid, ReportFormat};
pub use special::{chi2_sf, erfc};
pub use synth::{generate, reversal_planted, GroundTruth, GroupSpec, NoiseSpec, PlantedSpec};
