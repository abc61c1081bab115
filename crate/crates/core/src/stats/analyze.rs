//! Country-, resolver-, and domain-level inconsistency analyses.
//!
//! All three share one shape: split each probe population along an axis
//! (A vs AAAA records, or IPv4 vs IPv6 interfaces), test whether the two
//! groups censor differently, and correct for multiple hypotheses with the
//! Šidák threshold. Differences are reported in the published orientation:
//! second group minus first (AAAA−A, V6−V4), so negative means the second
//! group is censored less.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::enrich::CategoryProvider;
use crate::model::{ConnType, Interface, PairId, ResolverPair, RrType};
use crate::stats::hypothesis::{
    sidak_alpha, t_test_two_sample, t_test_two_sample_pooled, SidakMode, TestError,
};
use crate::stats::info::{kl_divergence, shannon_entropy};
use crate::stats::rates::{diff_with_pct, per_pair_counts, PairCellCounts};
use crate::verdict::CensorVerdict;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    /// A vs AAAA record handling.
    RrType,
    /// IPv4 vs IPv6 interface handling.
    Interface,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stratum {
    V4Only,
    V6Only,
    AOnly,
    AaaaOnly,
    All,
}

impl Stratum {
    pub fn label(&self) -> &'static str {
        match self {
            Stratum::V4Only => "IPv4 resolvers",
            Stratum::V6Only => "IPv6 resolvers",
            Stratum::AOnly => "A queries",
            Stratum::AaaaOnly => "AAAA queries",
            Stratum::All => "All",
        }
    }
}

/// Cell masks for the two compared groups within a stratum.
#[derive(Debug, Clone, Copy)]
pub struct GroupMasks {
    pub first: (Option<Interface>, Option<RrType>),
    pub second: (Option<Interface>, Option<RrType>),
}

impl Axis {
    pub fn strata(self) -> [Stratum; 3] {
        match self {
            Axis::RrType => [Stratum::V4Only, Stratum::V6Only, Stratum::All],
            Axis::Interface => [Stratum::AOnly, Stratum::AaaaOnly, Stratum::All],
        }
    }

    pub fn masks(self, stratum: Stratum) -> GroupMasks {
        match (self, stratum) {
            (Axis::RrType, Stratum::V4Only) => GroupMasks {
                first: (Some(Interface::V4), Some(RrType::A)),
                second: (Some(Interface::V4), Some(RrType::Aaaa)),
            },
            (Axis::RrType, Stratum::V6Only) => GroupMasks {
                first: (Some(Interface::V6), Some(RrType::A)),
                second: (Some(Interface::V6), Some(RrType::Aaaa)),
            },
            (Axis::RrType, Stratum::All) => GroupMasks {
                first: (None, Some(RrType::A)),
                second: (None, Some(RrType::Aaaa)),
            },
            (Axis::Interface, Stratum::AOnly) => GroupMasks {
                first: (Some(Interface::V4), Some(RrType::A)),
                second: (Some(Interface::V6), Some(RrType::A)),
            },
            (Axis::Interface, Stratum::AaaaOnly) => GroupMasks {
                first: (Some(Interface::V4), Some(RrType::Aaaa)),
                second: (Some(Interface::V6), Some(RrType::Aaaa)),
            },
            (Axis::Interface, Stratum::All) => GroupMasks {
                first: (Some(Interface::V4), None),
                second: (Some(Interface::V6), None),
            },
            (axis, stratum) => panic!("stratum {stratum:?} does not belong to axis {axis:?}"),
        }
    }
}

/// Which t-test backs the per-country comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TTestKind {
    #[default]
    Welch,
    Pooled,
}

/// Significance result for one (country, stratum).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountryFinding {
    pub country: String,
    pub axis: Axis,
    pub stratum: Stratum,
    /// Pooled blocking rate of the first group (A records / IPv4), percent.
    pub rate_first: f64,
    /// Pooled blocking rate of the second group (AAAA records / IPv6).
    pub rate_second: f64,
    /// Percentage-point difference, second − first.
    pub pp: f64,
    /// Relative change in percent; None when the first rate is zero.
    pub pct: Option<f64>,
    pub t: f64,
    pub p_value: f64,
    pub significant: bool,
    pub resolvers: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedStratum {
    pub country: String,
    pub stratum: Stratum,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountryAnalysis {
    pub axis: Axis,
    pub alpha: f64,
    pub threshold: f64,
    pub n_countries: usize,
    pub findings: Vec<CountryFinding>,
    pub skipped: Vec<SkippedStratum>,
}

fn group_fraction(
    counts: &PairCellCounts,
    mask: (Option<Interface>, Option<RrType>),
) -> Option<f64> {
    let n = counts.conclusive_for(mask.0, mask.1);
    (n > 0).then(|| counts.censored_for(mask.0, mask.1) as f64 / n as f64)
}

fn pooled_rate(
    pair_ids: &[PairId],
    per_pair: &BTreeMap<PairId, PairCellCounts>,
    mask: (Option<Interface>, Option<RrType>),
) -> f64 {
    let mut censored = 0u64;
    let mut conclusive = 0u64;
    for id in pair_ids {
        if let Some(c) = per_pair.get(id) {
            censored += c.censored_for(mask.0, mask.1);
            conclusive += c.conclusive_for(mask.0, mask.1);
        }
    }
    if conclusive == 0 {
        0.0
    } else {
        100.0 * censored as f64 / conclusive as f64
    }
}

fn pairs_by_country(pairs: &[ResolverPair]) -> BTreeMap<&str, Vec<PairId>> {
    let mut map: BTreeMap<&str, Vec<PairId>> = BTreeMap::new();
    for (idx, pair) in pairs.iter().enumerate() {
        map.entry(&pair.country)
            .or_default()
            .push(PairId(idx as u32));
    }
    map
}

/// Per-country two-sample t-test over per-resolver censored fractions.
///
/// The Šidák family size is the number of countries in the dataset, and the
/// same threshold applies to every stratum.
pub fn analyze_country(
    verdicts: &[CensorVerdict],
    pairs: &[ResolverPair],
    axis: Axis,
    alpha: f64,
    sidak_mode: SidakMode,
    ttest: TTestKind,
) -> CountryAnalysis {
    let per_pair = per_pair_counts(verdicts);
    let by_country = pairs_by_country(pairs);
    let n_countries = by_country.len().max(1);
    let threshold = sidak_alpha(alpha, n_countries, sidak_mode);

    let mut findings = Vec::new();
    let mut skipped = Vec::new();

    for (country, ids) in &by_country {
        if ids.len() < 2 {
            skipped.push(SkippedStratum {
                country: country.to_string(),
                stratum: Stratum::All,
                reason: format!("only {} resolver(s)", ids.len()),
            });
            continue;
        }
        for stratum in axis.strata() {
            let masks = axis.masks(stratum);
            let mut first = Vec::new();
            let mut second = Vec::new();
            for id in ids {
                let Some(counts) = per_pair.get(id) else {
                    continue;
                };
                if let (Some(a), Some(b)) = (
                    group_fraction(counts, masks.first),
                    group_fraction(counts, masks.second),
                ) {
                    first.push(a);
                    second.push(b);
                }
            }
            if first.len() < 2 {
                skipped.push(SkippedStratum {
                    country: country.to_string(),
                    stratum,
                    reason: format!("{} resolver(s) with conclusive probes", first.len()),
                });
                continue;
            }
            let test = match ttest {
                TTestKind::Welch => t_test_two_sample(&first, &second),
                TTestKind::Pooled => t_test_two_sample_pooled(&first, &second),
            };
            let test = match test {
                Ok(t) => t,
                Err(TestError::TooFewSamples) => continue,
                Err(_) => continue,
            };
            let rate_first = pooled_rate(ids, &per_pair, masks.first);
            let rate_second = pooled_rate(ids, &per_pair, masks.second);
            let (pp, pct) = match diff_with_pct(rate_first, rate_second) {
                Ok((pp, pct)) => (pp, Some(pct)),
                Err(_) => (rate_second - rate_first, None),
            };
            findings.push(CountryFinding {
                country: country.to_string(),
                axis,
                stratum,
                rate_first,
                rate_second,
                pp,
                pct,
                t: test.t,
                p_value: test.p,
                significant: test.p <= threshold,
                resolvers: first.len(),
            });
        }
    }

    CountryAnalysis {
        axis,
        alpha,
        threshold,
        n_countries,
        findings,
        skipped,
    }
}

/// One resolver's axis comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolverTest {
    pub pair_id: PairId,
    pub censored_first: u64,
    pub conclusive_first: u64,
    pub censored_second: u64,
    pub conclusive_second: u64,
    pub z: Option<f64>,
    pub p_value: Option<f64>,
    pub significant: bool,
}

/// AS-diversity summary of a country's inconsistent resolvers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiversityReport {
    pub country: String,
    /// Entropy (bits) of the AS distribution of all resolvers.
    pub s_all: f64,
    /// Entropy of the AS distribution of the inconsistent subset.
    pub s_inconsistent: f64,
    /// KL(inconsistent ‖ all); None when no resolver is inconsistent.
    pub divergence: Option<f64>,
    /// (asn, name, inconsistent-pair count) of the AS with the most
    /// inconsistent pairs.
    pub most_inconsistent_as: Option<(u32, String, usize)>,
    pub most_inconsistent_conn_type: Option<(ConnType, usize)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountryResolverReport {
    pub country: String,
    pub total_pairs: usize,
    pub threshold: f64,
    pub inconsistent: Vec<PairId>,
    pub tests: Vec<ResolverTest>,
    pub diversity: DiversityReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolverAnalysis {
    pub axis: Axis,
    pub alpha: f64,
    pub per_country: Vec<CountryResolverReport>,
}

/// Per-resolver two-proportion z-tests plus the AS-diversity report.
///
/// The Šidák family size is the number of resolvers in the resolver's own
/// country. Resolvers whose z-test is not applicable count as consistent.
pub fn analyze_resolvers(
    verdicts: &[CensorVerdict],
    pairs: &[ResolverPair],
    axis: Axis,
    alpha: f64,
    sidak_mode: SidakMode,
    kl_epsilon: f64,
) -> ResolverAnalysis {
    let per_pair = per_pair_counts(verdicts);
    let by_country = pairs_by_country(pairs);
    let masks = axis.masks(match axis {
        Axis::RrType => Stratum::All,
        Axis::Interface => Stratum::All,
    });

    let mut per_country = Vec::new();
    for (country, ids) in &by_country {
        let threshold = sidak_alpha(alpha, ids.len().max(1), sidak_mode);
        let mut tests = Vec::new();
        let mut inconsistent = Vec::new();
        for id in ids {
            let counts = per_pair.get(id).cloned().unwrap_or_default();
            let x1 = counts.censored_for(masks.first.0, masks.first.1);
            let n1 = counts.conclusive_for(masks.first.0, masks.first.1);
            let x2 = counts.censored_for(masks.second.0, masks.second.1);
            let n2 = counts.conclusive_for(masks.second.0, masks.second.1);
            let (z, p, significant) =
                match crate::stats::hypothesis::z_test_two_proportion(x1, n1, x2, n2) {
                    Ok(t) => (Some(t.z), Some(t.p), t.p <= threshold),
                    Err(_) => (None, None, false),
                };
            if significant {
                inconsistent.push(*id);
            }
            tests.push(ResolverTest {
                pair_id: *id,
                censored_first: x1,
                conclusive_first: n1,
                censored_second: x2,
                conclusive_second: n2,
                z,
                p_value: p,
                significant,
            });
        }

        let mut all_as: BTreeMap<u32, u64> = BTreeMap::new();
        let mut as_names: BTreeMap<u32, String> = BTreeMap::new();
        for id in ids {
            let pair = &pairs[id.0 as usize];
            *all_as.entry(pair.asn).or_default() += 1;
            as_names
                .entry(pair.asn)
                .or_insert_with(|| pair.as_name.clone());
        }
        let mut inc_as: BTreeMap<u32, u64> = BTreeMap::new();
        let mut inc_conn: BTreeMap<ConnType, u64> = BTreeMap::new();
        for id in &inconsistent {
            let pair = &pairs[id.0 as usize];
            *inc_as.entry(pair.asn).or_default() += 1;
            *inc_conn.entry(pair.conn_type).or_default() += 1;
        }

        let divergence = if inconsistent.is_empty() {
            None
        } else {
            kl_divergence(&inc_as, &all_as, kl_epsilon).ok()
        };
        let most_inconsistent_as = inc_as
            .iter()
            .max_by_key(|(asn, count)| (**count, std::cmp::Reverse(**asn)))
            .map(|(asn, count)| (*asn, as_names[asn].clone(), *count as usize));
        let most_inconsistent_conn_type = inc_conn
            .iter()
            .max_by_key(|(_, count)| **count)
            .map(|(ct, count)| (*ct, *count as usize));

        per_country.push(CountryResolverReport {
            country: country.to_string(),
            total_pairs: ids.len(),
            threshold,
            diversity: DiversityReport {
                country: country.to_string(),
                s_all: shannon_entropy(&all_as),
                s_inconsistent: shannon_entropy(&inc_as),
                divergence,
                most_inconsistent_as,
                most_inconsistent_conn_type,
            },
            inconsistent,
            tests,
        });
    }
    ResolverAnalysis {
        axis,
        alpha,
        per_country,
    }
}

/// One domain's axis comparison within a country.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainTest {
    pub domain: String,
    pub censored_first: u64,
    pub conclusive_first: u64,
    pub censored_second: u64,
    pub conclusive_second: u64,
    pub p_value: Option<f64>,
    pub significant: bool,
}

/// Category-distribution comparison of inconsistently-treated domains
/// against all domains that saw any blocking.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainDivergence {
    pub country: String,
    pub d_any: BTreeMap<String, u64>,
    pub d_inconsistent: BTreeMap<String, u64>,
    /// KL(inconsistent ‖ any); None when either list is empty.
    pub divergence: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountryDomainReport {
    pub country: String,
    pub threshold: f64,
    pub any_blocked: Vec<String>,
    pub inconsistent: Vec<String>,
    pub tests: Vec<DomainTest>,
    pub divergence: DomainDivergence,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainAnalysis {
    pub axis: Axis,
    pub alpha: f64,
    pub n_domains: usize,
    pub per_country: Vec<CountryDomainReport>,
}

/// Per-domain z-tests pooled over a country's resolvers, plus the category
/// divergence of inconsistent domains. The Šidák family size is the number
/// of tested domains; uncategorized domains fall into "Uncategorized".
pub fn analyze_domains(
    verdicts: &[CensorVerdict],
    pairs: &[ResolverPair],
    categories: &dyn CategoryProvider,
    axis: Axis,
    alpha: f64,
    sidak_mode: SidakMode,
    kl_epsilon: f64,
) -> DomainAnalysis {
    let masks = axis.masks(Stratum::All);
    let domains: BTreeSet<&str> = verdicts.iter().map(|v| v.task.domain.as_str()).collect();
    let n_domains = domains.len().max(1);
    let threshold = sidak_alpha(alpha, n_domains, sidak_mode);

    // (country, domain) -> [censored_first, conclusive_first, censored_second, conclusive_second]
    let mut tally: BTreeMap<(&str, &str), [u64; 4]> = BTreeMap::new();
    for v in verdicts {
        let Some(pair) = pairs.get(v.task.pair_id.0 as usize) else {
            continue;
        };
        if !v.outcome.is_conclusive() {
            continue;
        }
        let in_first = masks.first.0.map(|i| i == v.task.interface).unwrap_or(true)
            && masks.first.1.map(|r| r == v.task.rrtype).unwrap_or(true);
        let in_second = masks
            .second
            .0
            .map(|i| i == v.task.interface)
            .unwrap_or(true)
            && masks.second.1.map(|r| r == v.task.rrtype).unwrap_or(true);
        if !in_first && !in_second {
            continue;
        }
        let slot = tally.entry((&pair.country, &v.task.domain)).or_default();
        let censored = v.outcome.is_censored() as u64;
        if in_first {
            slot[0] += censored;
            slot[1] += 1;
        }
        if in_second {
            slot[2] += censored;
            slot[3] += 1;
        }
    }

    let mut per_country_map: BTreeMap<&str, Vec<DomainTest>> = BTreeMap::new();
    for ((country, domain), [x1, n1, x2, n2]) in &tally {
        let (p, significant) =
            match crate::stats::hypothesis::z_test_two_proportion(*x1, *n1, *x2, *n2) {
                Ok(t) => (Some(t.p), t.p <= threshold),
                Err(_) => (None, false),
            };
        per_country_map
            .entry(country)
            .or_default()
            .push(DomainTest {
                domain: domain.to_string(),
                censored_first: *x1,
                conclusive_first: *n1,
                censored_second: *x2,
                conclusive_second: *n2,
                p_value: p,
                significant,
            });
    }

    let categorize = |domain: &str| -> String {
        categories
            .category(domain)
            .unwrap_or_else(|| "Uncategorized".to_string())
    };

    let mut per_country = Vec::new();
    for (country, tests) in per_country_map {
        let any_blocked: Vec<String> = tests
            .iter()
            .filter(|t| t.censored_first + t.censored_second > 0)
            .map(|t| t.domain.clone())
            .collect();
        let inconsistent: Vec<String> = tests
            .iter()
            .filter(|t| t.significant)
            .map(|t| t.domain.clone())
            .collect();

        let mut d_any: BTreeMap<String, u64> = BTreeMap::new();
        for d in &any_blocked {
            *d_any.entry(categorize(d)).or_default() += 1;
        }
        let mut d_inconsistent: BTreeMap<String, u64> = BTreeMap::new();
        for d in &inconsistent {
            *d_inconsistent.entry(categorize(d)).or_default() += 1;
        }
        let divergence = if inconsistent.is_empty() || any_blocked.is_empty() {
            None
        } else {
            kl_divergence(&d_inconsistent, &d_any, kl_epsilon).ok()
        };

        per_country.push(CountryDomainReport {
            country: country.to_string(),
            threshold,
            any_blocked,
            inconsistent,
            tests,
            divergence: DomainDivergence {
                country: country.to_string(),
                d_any,
                d_inconsistent,
                divergence,
            },
        });
    }

    DomainAnalysis {
        axis,
        alpha,
        n_domains,
        per_country,
    }
}
