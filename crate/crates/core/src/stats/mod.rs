//! Quantitative analysis: blocking rates, significance testing with
//! multiple-comparison correction, and entropy/divergence measures.

pub mod analyze;
pub mod hypothesis;
pub mod info;
pub mod rates;

pub use analyze::{
    analyze_country, analyze_domains, analyze_resolvers, Axis, CountryAnalysis,
    CountryDomainReport, CountryFinding, CountryResolverReport, DiversityReport, DomainAnalysis,
    DomainDivergence, ResolverAnalysis, Stratum, TTestKind,
};
pub use hypothesis::{
    sidak_alpha, t_test_two_sample, t_test_two_sample_pooled, z_test_two_proportion, SidakMode,
    TTest, TestError, ZTest,
};
pub use info::{kl_divergence, shannon_entropy, InfoError};
pub use rates::{
    blocking_rates, blocking_rates_filtered, cell_index, diff_with_pct, per_pair_counts,
    CellCounts, CountryRates, PairCellCounts, PairFilter, RateError, RateTable, CELLS,
};
