//! Blocking-rate aggregation over the four transport × record-type cells.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{ConnType, Interface, Ipv6Kind, PairId, ResolverPair, RrType};
use crate::verdict::CensorVerdict;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RateError {
    /// Relative change is undefined against a zero base rate.
    #[error("percentage change undefined: base rate is zero")]
    PctUndefined,
}

/// The four matrix cells in table-column order.
pub const CELLS: [(Interface, RrType); 4] = [
    (Interface::V4, RrType::A),
    (Interface::V4, RrType::Aaaa),
    (Interface::V6, RrType::A),
    (Interface::V6, RrType::Aaaa),
];

pub fn cell_index(interface: Interface, rrtype: RrType) -> usize {
    match (interface, rrtype) {
        (Interface::V4, RrType::A) => 0,
        (Interface::V4, RrType::Aaaa) => 1,
        (Interface::V6, RrType::A) => 2,
        (Interface::V6, RrType::Aaaa) => 3,
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellCounts {
    pub censored: u64,
    pub accessible: u64,
}

impl CellCounts {
    pub fn conclusive(&self) -> u64 {
        self.censored + self.accessible
    }
    /// Percentage of censored queries among conclusive ones; None when the
    /// cell saw no conclusive probes (absent, not zero).
    pub fn rate(&self) -> Option<f64> {
        let n = self.conclusive();
        (n > 0).then(|| 100.0 * self.censored as f64 / n as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountryRates {
    pub country: String,
    pub pair_count: usize,
    /// Rates for V4·A, V4·AAAA, V6·A, V6·AAAA in that order.
    pub cells: [Option<f64>; 4],
    #[serde(default)]
    pub counts: [CellCounts; 4],
    /// Arithmetic mean of the present cells, computed before any display
    /// rounding.
    pub avg: Option<f64>,
}

impl CountryRates {
    pub fn from_cells(country: &str, pair_count: usize, cells: [Option<f64>; 4]) -> Self {
        let present: Vec<f64> = cells.iter().flatten().copied().collect();
        let avg = (!present.is_empty()).then(|| present.iter().sum::<f64>() / present.len() as f64);
        CountryRates {
            country: country.to_string(),
            pair_count,
            cells,
            counts: Default::default(),
            avg,
        }
    }
}

/// Per-country rates plus the global row of unweighted column means.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateTable {
    /// Rows sorted by average rate, highest first.
    pub rows: Vec<CountryRates>,
    pub global: CountryRates,
}

impl RateTable {
    /// Assemble a table from per-country rows: sorts by average descending
    /// and appends the global row, where each column is the unweighted mean
    /// over the countries that have that cell.
    pub fn from_country_rows(mut rows: Vec<CountryRates>) -> RateTable {
        rows.sort_by(|a, b| {
            b.avg
                .unwrap_or(f64::NEG_INFINITY)
                .partial_cmp(&a.avg.unwrap_or(f64::NEG_INFINITY))
                .unwrap()
                .then_with(|| a.country.cmp(&b.country))
        });
        let mut cells = [None; 4];
        for (i, cell) in cells.iter_mut().enumerate() {
            let vals: Vec<f64> = rows.iter().filter_map(|r| r.cells[i]).collect();
            if !vals.is_empty() {
                *cell = Some(vals.iter().sum::<f64>() / vals.len() as f64);
            }
        }
        let avgs: Vec<f64> = rows.iter().filter_map(|r| r.avg).collect();
        let avg = (!avgs.is_empty()).then(|| avgs.iter().sum::<f64>() / avgs.len() as f64);
        let global = CountryRates {
            country: "Global".to_string(),
            pair_count: rows.iter().map(|r| r.pair_count).sum(),
            cells,
            counts: Default::default(),
            avg,
        };
        RateTable { rows, global }
    }
}

/// Restrict a rate computation to a slice of the pair population.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairFilter {
    All,
    ConnType(ConnType),
    NotConnType(ConnType),
    NativeV6,
    SixToFour,
}

impl PairFilter {
    pub fn matches(&self, pair: &ResolverPair) -> bool {
        match self {
            PairFilter::All => true,
            PairFilter::ConnType(t) => pair.conn_type == *t,
            PairFilter::NotConnType(t) => pair.conn_type != *t,
            PairFilter::NativeV6 => pair.v6_kind == Ipv6Kind::Native,
            PairFilter::SixToFour => pair.v6_kind.is_six_to_four(),
        }
    }
}

/// Aggregate verdicts into per-country blocking rates.
///
/// Inconclusive verdicts are excluded from numerator and denominator alike;
/// verdicts referencing unknown pairs are skipped.
pub fn blocking_rates(verdicts: &[CensorVerdict], pairs: &[ResolverPair]) -> RateTable {
    blocking_rates_filtered(verdicts, pairs, PairFilter::All)
}

pub fn blocking_rates_filtered(
    verdicts: &[CensorVerdict],
    pairs: &[ResolverPair],
    filter: PairFilter,
) -> RateTable {
    let mut by_country: BTreeMap<&str, [CellCounts; 4]> = BTreeMap::new();
    let mut pair_counts: BTreeMap<&str, usize> = BTreeMap::new();
    for pair in pairs.iter().filter(|p| filter.matches(p)) {
        by_country.entry(&pair.country).or_default();
        *pair_counts.entry(&pair.country).or_default() += 1;
    }

    for v in verdicts {
        let Some(pair) = pairs.get(v.task.pair_id.0 as usize) else {
            continue;
        };
        if !filter.matches(pair) {
            continue;
        }
        let entry = by_country.entry(&pair.country).or_default();
        let cell = &mut entry[cell_index(v.task.interface, v.task.rrtype)];
        if v.outcome.is_censored() {
            cell.censored += 1;
        } else if v.outcome.is_accessible() {
            cell.accessible += 1;
        }
    }

    let rows = by_country
        .into_iter()
        .map(|(country, counts)| {
            let cells = [
                counts[0].rate(),
                counts[1].rate(),
                counts[2].rate(),
                counts[3].rate(),
            ];
            let mut row = CountryRates::from_cells(
                country,
                pair_counts.get(country).copied().unwrap_or(0),
                cells,
            );
            row.counts = counts;
            row
        })
        .collect();
    RateTable::from_country_rows(rows)
}

/// Per-pair conclusive/censored counts, the substrate for resolver-level
/// z-tests and per-resolver fraction samples.
#[derive(Debug, Clone, Default)]
pub struct PairCellCounts {
    pub cells: [CellCounts; 4],
}

impl PairCellCounts {
    pub fn censored_for(&self, iface: Option<Interface>, rrtype: Option<RrType>) -> u64 {
        self.sum(iface, rrtype, |c| c.censored)
    }
    pub fn conclusive_for(&self, iface: Option<Interface>, rrtype: Option<RrType>) -> u64 {
        self.sum(iface, rrtype, |c| c.conclusive())
    }
    fn sum(
        &self,
        iface: Option<Interface>,
        rrtype: Option<RrType>,
        f: impl Fn(&CellCounts) -> u64,
    ) -> u64 {
        CELLS
            .iter()
            .enumerate()
            .filter(|(_, (i, r))| {
                iface.map(|x| x == *i).unwrap_or(true) && rrtype.map(|x| x == *r).unwrap_or(true)
            })
            .map(|(idx, _)| f(&self.cells[idx]))
            .sum()
    }
}

/// Tally verdicts per pair.
pub fn per_pair_counts(verdicts: &[CensorVerdict]) -> BTreeMap<PairId, PairCellCounts> {
    let mut out: BTreeMap<PairId, PairCellCounts> = BTreeMap::new();
    for v in verdicts {
        let entry = out.entry(v.task.pair_id).or_default();
        let cell = &mut entry.cells[cell_index(v.task.interface, v.task.rrtype)];
        if v.outcome.is_censored() {
            cell.censored += 1;
        } else if v.outcome.is_accessible() {
            cell.accessible += 1;
        }
    }
    out
}

/// Percentage-point difference and relative percentage change from rate `a`
/// to rate `b` (both in percent).
pub fn diff_with_pct(rate_a: f64, rate_b: f64) -> Result<(f64, f64), RateError> {
    if rate_a == 0.0 {
        return Err(RateError::PctUndefined);
    }
    let pp = rate_b - rate_a;
    let pct = 100.0 * (rate_b - rate_a) / rate_a;
    Ok((pp, pct))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn diff_reference_rows() {
        // Highest-blocking country in the published data, v4 stratum.
        let (pp, pct) = diff_with_pct(8.25, 1.18).unwrap();
        assert_abs_diff_eq!(pp, -7.07, epsilon = 1e-9);
        assert_abs_diff_eq!(pct, -85.697, epsilon = 1e-2);

        let (pp, pct) = diff_with_pct(6.42, 1.28).unwrap();
        assert_abs_diff_eq!(pp, -5.14, epsilon = 1e-9);
        assert_abs_diff_eq!(pct, -80.06, epsilon = 1e-2);
    }

    #[test]
    fn diff_identity() {
        let (pp, pct) = diff_with_pct(3.3, 3.3).unwrap();
        assert_eq!((pp, pct), (0.0, 0.0));
    }

    #[test]
    fn diff_zero_base_undefined() {
        assert_eq!(diff_with_pct(0.0, 5.0), Err(RateError::PctUndefined));
    }

    #[test]
    fn cell_rate_absent_vs_zero() {
        assert_eq!(CellCounts::default().rate(), None);
        assert_eq!(
            CellCounts {
                censored: 0,
                accessible: 7
            }
            .rate(),
            Some(0.0)
        );
        assert_eq!(
            CellCounts {
                censored: 3,
                accessible: 7
            }
            .rate(),
            Some(30.0)
        );
    }

    #[test]
    fn global_row_is_unweighted_mean() {
        let rows = vec![
            CountryRates::from_cells("AA", 10, [Some(10.0), Some(2.0), Some(2.0), Some(2.0)]),
            CountryRates::from_cells("BB", 1000, [Some(0.0), Some(0.0), Some(0.0), Some(0.0)]),
        ];
        let table = RateTable::from_country_rows(rows);
        assert_eq!(table.global.cells[0], Some(5.0));
        assert_eq!(table.global.pair_count, 1010);
        // Sorted by avg descending.
        assert_eq!(table.rows[0].country, "AA");
        assert_abs_diff_eq!(table.rows[0].avg.unwrap(), 4.0, epsilon = 1e-12);
        assert_abs_diff_eq!(table.global.avg.unwrap(), 2.0, epsilon = 1e-12);
    }
}
