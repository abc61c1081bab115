//! Run manifests and table rendering.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::stats::analyze::{CountryFinding, Stratum};
use crate::stats::rates::RateTable;
use crate::stats::Axis;

/// Everything needed to re-run a stage and get identical output: input and
/// dataset checksums plus every tunable.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub created_unix: u64,
    pub seed: u64,
    /// sha256 per input file.
    pub inputs: BTreeMap<String, String>,
    /// sha256 per dataset (geo/asn/conn/category).
    pub datasets: BTreeMap<String, String>,
    pub tunables: BTreeMap<String, serde_json::Value>,
}

impl RunManifest {
    pub fn new(seed: u64) -> RunManifest {
        RunManifest {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            created_unix: std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            seed,
            ..Default::default()
        }
    }

    pub fn sha256_file(path: &Path) -> std::io::Result<String> {
        let bytes = std::fs::read(path)?;
        Ok(hex::encode(Sha256::digest(&bytes)))
    }

    pub fn add_input(&mut self, label: &str, path: &Path) -> std::io::Result<()> {
        self.inputs
            .insert(label.to_string(), Self::sha256_file(path)?);
        Ok(())
    }

    pub fn add_dataset(&mut self, label: &str, path: &Path) -> std::io::Result<()> {
        self.datasets
            .insert(label.to_string(), Self::sha256_file(path)?);
        Ok(())
    }

    pub fn set_tunable(&mut self, key: &str, value: impl Serialize) {
        self.tunables.insert(
            key.to_string(),
            serde_json::to_value(value).expect("serializable tunable"),
        );
    }

    /// Checksum over the manifest's canonical JSON form; embedded in every
    /// output file the run produces. The creation timestamp is excluded so
    /// re-runs with identical inputs stamp identically.
    pub fn checksum(&self) -> String {
        let mut copy = self.clone();
        copy.created_unix = 0;
        let canonical = serde_json::to_vec(&copy).expect("manifest serializes");
        hex::encode(Sha256::digest(&canonical))
    }

    pub fn stamp(&self) -> crate::jsonl::ManifestStamp {
        crate::jsonl::ManifestStamp {
            manifest_checksum: self.checksum(),
        }
    }

    pub fn save(&self, path: &Path) -> std::io::Result<()> {
        std::fs::write(path, serde_json::to_vec_pretty(self)?)
    }

    pub fn load(path: &Path) -> std::io::Result<RunManifest> {
        Ok(serde_json::from_slice(&std::fs::read(path)?)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableFormat {
    Csv,
    Markdown,
}

fn fmt_cell(cell: Option<f64>) -> String {
    cell.map(|v| format!("{v:.2}")).unwrap_or_default()
}

/// Render the per-country rate table, rows sorted by average descending
/// with the global mean row last. Markdown marks each row's highest cell.
pub fn render_rate_table(table: &RateTable, fmt: TableFormat) -> String {
    let mut out = String::new();
    match fmt {
        TableFormat::Csv => {
            out.push_str("country,pairs,v4_a,v4_aaaa,v6_a,v6_aaaa,avg\n");
            for row in table.rows.iter().chain(std::iter::once(&table.global)) {
                out.push_str(&format!(
                    "{},{},{},{},{},{},{}\n",
                    row.country,
                    row.pair_count,
                    fmt_cell(row.cells[0]),
                    fmt_cell(row.cells[1]),
                    fmt_cell(row.cells[2]),
                    fmt_cell(row.cells[3]),
                    fmt_cell(row.avg),
                ));
            }
        }
        TableFormat::Markdown => {
            out.push_str("| Country | Pairs | IPv4 A | IPv4 AAAA | IPv6 A | IPv6 AAAA | Avg. |\n");
            out.push_str("|---|---|---|---|---|---|---|\n");
            for row in table.rows.iter().chain(std::iter::once(&table.global)) {
                let max = row
                    .cells
                    .iter()
                    .flatten()
                    .copied()
                    .fold(f64::NEG_INFINITY, f64::max);
                let cells: Vec<String> = row
                    .cells
                    .iter()
                    .map(|c| match c {
                        Some(v) if *v == max => format!("**{v:.2}**"),
                        Some(v) => format!("{v:.2}"),
                        None => String::new(),
                    })
                    .collect();
                out.push_str(&format!(
                    "| {} | {} | {} | {} | {} | {} | {} |\n",
                    row.country,
                    row.pair_count,
                    cells[0],
                    cells[1],
                    cells[2],
                    cells[3],
                    fmt_cell(row.avg),
                ));
            }
        }
    }
    out
}

/// Parse a CSV produced by [`render_rate_table`] back into a [`RateTable`];
/// values round-trip exactly at the rendered two-decimal quantization.
pub fn parse_rate_table_csv(text: &str) -> Option<RateTable> {
    use crate::stats::rates::CountryRates;
    let mut rows = Vec::new();
    for line in text.lines().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 7 {
            return None;
        }
        let parse = |s: &str| -> Option<Option<f64>> {
            if s.is_empty() {
                Some(None)
            } else {
                s.parse::<f64>().ok().map(Some)
            }
        };
        let row = CountryRates {
            country: parts[0].to_string(),
            pair_count: parts[1].parse().ok()?,
            cells: [
                parse(parts[2])?,
                parse(parts[3])?,
                parse(parts[4])?,
                parse(parts[5])?,
            ],
            counts: Default::default(),
            avg: parse(parts[6])?,
        };
        rows.push(row);
    }
    // Last row is the global summary.
    let global = rows.pop()?;
    Some(RateTable { rows, global })
}

fn fmt_finding(f: &CountryFinding) -> String {
    if !f.significant {
        return "ns".to_string();
    }
    match f.pct {
        Some(pct) => format!("{:.1} pp ({pct:+.1}%)", f.pp),
        None => format!("{:.1} pp", f.pp),
    }
}

/// One row per country: per-stratum `±X.X pp (±YY.Y%)` or `ns`. Countries
/// with no significant stratum are omitted unless `include_ns` is set.
pub fn render_diff_table(
    findings: &[CountryFinding],
    axis: Axis,
    fmt: TableFormat,
    include_ns: bool,
) -> String {
    let strata = axis.strata();
    let mut by_country: BTreeMap<&str, BTreeMap<Stratum, &CountryFinding>> = BTreeMap::new();
    for f in findings.iter().filter(|f| f.axis == axis) {
        by_country
            .entry(&f.country)
            .or_default()
            .insert(f.stratum, f);
    }

    let header: Vec<&str> = strata.iter().map(|s| s.label()).collect();
    let mut out = String::new();
    match fmt {
        TableFormat::Csv => {
            out.push_str(&format!(
                "country,{},{},{}\n",
                header[0], header[1], header[2]
            ));
        }
        TableFormat::Markdown => {
            out.push_str(&format!(
                "| Country | {} | {} | {} |\n|---|---|---|---|\n",
                header[0], header[1], header[2]
            ));
        }
    }

    for (country, per_stratum) in by_country {
        let any_significant = per_stratum.values().any(|f| f.significant);
        if !any_significant && !include_ns {
            continue;
        }
        let cells: Vec<String> = strata
            .iter()
            .map(|s| {
                per_stratum
                    .get(s)
                    .map(|f| fmt_finding(f))
                    .unwrap_or_else(|| "ns".into())
            })
            .collect();
        match fmt {
            TableFormat::Csv => {
                out.push_str(&format!(
                    "{},{},{},{}\n",
                    country, cells[0], cells[1], cells[2]
                ));
            }
            TableFormat::Markdown => {
                out.push_str(&format!(
                    "| {} | {} | {} | {} |\n",
                    country, cells[0], cells[1], cells[2]
                ));
            }
        }
    }
    out
}
