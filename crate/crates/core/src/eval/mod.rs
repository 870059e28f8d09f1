//! Point-to-point error, signed-rank tests with Holm correction, and the ablation report.

mod p2pe;
mod report;
mod stats;

pub use p2pe::{p2pe, P2peResult, Summary};
pub use report::{
    build_report, AblationReport, ArmOutcome, ArmSummary, Boxplot, BundleOutcome, BundleRow, CellTest,
    ComparisonRow, Quantiles, REFERENCE_ARM, STATISTICS, STRUCTURES,
};
pub use stats::{holm_bonferroni, median, population_std, wilcoxon_signed_rank, StatTestResult, TestMethod, EXACT_MAX_N};
