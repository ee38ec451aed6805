//! Descriptive and inferential statistics with in-house distribution functions.

pub mod anova;
pub mod descriptive;
pub mod dist;
pub mod report;
pub mod tables;
pub mod ttest;

pub use anova::{anova_oneway, tukey_hsd, AnovaResult, PairwiseResult};
pub use descriptive::{describe, mean_ci, DescriptiveStats, MeanCi};
pub use report::{analyze, AnalysisReport};
pub use tables::{country_summary, dominance_table, CountryGroup, DominanceRow, Measure};
pub use ttest::{two_group_t, TTestResult, TTestVariant};
