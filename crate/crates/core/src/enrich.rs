//! File-backed lookup clients for geolocation, ASN, connection type, and
//! domain category.
//!
//! Each provider wraps a dataset snapshot loaded once at open time; lookups
//! are total (unknown keys yield None, never fabricated values) and safe to
//! call from any number of threads.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::net::IpAddr;
use std::path::Path;

use thiserror::Error;

use crate::model::ConnType;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("cannot open dataset {path}: {source}")]
    Unreadable {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot parse dataset {path}: {detail}")]
    Malformed { path: String, detail: String },
}

pub trait GeoProvider: Sync {
    /// ISO 3166 alpha-2 country code, or None when the address is unknown.
    fn country(&self, ip: IpAddr) -> Option<String>;
}

pub trait AsnProvider: Sync {
    fn asn(&self, ip: IpAddr) -> Option<(u32, String)>;
}

pub trait ConnTypeProvider: Sync {
    fn conn_type(&self, ip: IpAddr) -> ConnType;
}

pub trait CategoryProvider: Sync {
    fn category(&self, domain: &str) -> Option<String>;
}

// ---------------------------------------------------------------------------
// CSV fixtures: `key,value` (geo/conn), `key,asn,name` (asn),
// `domain,category` (categories).
// ---------------------------------------------------------------------------

fn read_csv_rows(path: &Path) -> Result<Vec<Vec<String>>, DatasetError> {
    let file = File::open(path).map_err(|source| DatasetError::Unreadable {
        path: path.display().to_string(),
        source,
    })?;
    let mut rows = Vec::new();
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|source| DatasetError::Unreadable {
            path: path.display().to_string(),
            source,
        })?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        rows.push(line.split(',').map(|s| s.trim().to_string()).collect());
    }
    Ok(rows)
}

/// Exact-key CSV fixture usable as any of the IP-keyed providers.
pub struct CsvIpFixture {
    countries: HashMap<IpAddr, String>,
    asns: HashMap<IpAddr, (u32, String)>,
    conn_types: HashMap<IpAddr, ConnType>,
}

impl CsvIpFixture {
    /// Load a `ip,country` fixture.
    pub fn open_geo(path: &Path) -> Result<Self, DatasetError> {
        let mut fixture = CsvIpFixture::empty();
        for row in read_csv_rows(path)? {
            let (ip, cc) = parse_two(path, &row)?;
            fixture.countries.insert(ip, cc);
        }
        Ok(fixture)
    }

    /// Load an `ip,asn,as_name` fixture.
    pub fn open_asn(path: &Path) -> Result<Self, DatasetError> {
        let mut fixture = CsvIpFixture::empty();
        for row in read_csv_rows(path)? {
            if row.len() < 3 {
                return Err(DatasetError::Malformed {
                    path: path.display().to_string(),
                    detail: format!("expected ip,asn,name: {row:?}"),
                });
            }
            let ip = parse_ip(path, &row[0])?;
            let asn = row[1].parse::<u32>().map_err(|_| DatasetError::Malformed {
                path: path.display().to_string(),
                detail: format!("bad asn {:?}", row[1]),
            })?;
            fixture.asns.insert(ip, (asn, row[2..].join(",")));
        }
        Ok(fixture)
    }

    /// Load an `ip,conn_type` fixture.
    pub fn open_conn_type(path: &Path) -> Result<Self, DatasetError> {
        let mut fixture = CsvIpFixture::empty();
        for row in read_csv_rows(path)? {
            let (ip, label) = parse_two(path, &row)?;
            fixture.conn_types.insert(ip, ConnType::from_label(&label));
        }
        Ok(fixture)
    }

    pub fn empty() -> Self {
        CsvIpFixture {
            countries: HashMap::new(),
            asns: HashMap::new(),
            conn_types: HashMap::new(),
        }
    }

    pub fn insert_country(&mut self, ip: IpAddr, cc: &str) {
        self.countries.insert(ip, cc.to_string());
    }
    pub fn insert_asn(&mut self, ip: IpAddr, asn: u32, name: &str) {
        self.asns.insert(ip, (asn, name.to_string()));
    }
    pub fn insert_conn_type(&mut self, ip: IpAddr, ct: ConnType) {
        self.conn_types.insert(ip, ct);
    }
}

fn parse_ip(path: &Path, s: &str) -> Result<IpAddr, DatasetError> {
    s.parse().map_err(|_| DatasetError::Malformed {
        path: path.display().to_string(),
        detail: format!("bad ip {s:?}"),
    })
}

fn parse_two(path: &Path, row: &[String]) -> Result<(IpAddr, String), DatasetError> {
    if row.len() < 2 {
        return Err(DatasetError::Malformed {
            path: path.display().to_string(),
            detail: format!("expected key,value: {row:?}"),
        });
    }
    Ok((parse_ip(path, &row[0])?, row[1].clone()))
}

impl GeoProvider for CsvIpFixture {
    fn country(&self, ip: IpAddr) -> Option<String> {
        self.countries.get(&ip).cloned()
    }
}

impl AsnProvider for CsvIpFixture {
    fn asn(&self, ip: IpAddr) -> Option<(u32, String)> {
        self.asns.get(&ip).cloned()
    }
}

impl ConnTypeProvider for CsvIpFixture {
    fn conn_type(&self, ip: IpAddr) -> ConnType {
        self.conn_types
            .get(&ip)
            .copied()
            .unwrap_or(ConnType::Unknown)
    }
}

/// `domain,category` fixture; free-form category labels.
pub struct CsvCategoryFixture {
    map: HashMap<String, String>,
}

impl CsvCategoryFixture {
    pub fn open(path: &Path) -> Result<Self, DatasetError> {
        let mut map = HashMap::new();
        for row in read_csv_rows(path)? {
            if row.len() < 2 {
                return Err(DatasetError::Malformed {
                    path: path.display().to_string(),
                    detail: format!("expected domain,category: {row:?}"),
                });
            }
            map.insert(row[0].to_ascii_lowercase(), row[1..].join(","));
        }
        Ok(CsvCategoryFixture { map })
    }

    pub fn from_pairs(pairs: &[(&str, &str)]) -> Self {
        CsvCategoryFixture {
            map: pairs
                .iter()
                .map(|(d, c)| (d.to_ascii_lowercase(), c.to_string()))
                .collect(),
        }
    }
}

impl CategoryProvider for CsvCategoryFixture {
    fn category(&self, domain: &str) -> Option<String> {
        self.map.get(&domain.to_ascii_lowercase()).cloned()
    }
}

// ---------------------------------------------------------------------------
// MMDB-backed providers (standard MaxMind binary format).
// ---------------------------------------------------------------------------

pub struct MmdbProvider {
    reader: maxminddb::Reader<Vec<u8>>,
}

impl MmdbProvider {
    pub fn open(path: &Path) -> Result<Self, DatasetError> {
        let reader = maxminddb::Reader::open_readfile(path).map_err(|e| match e {
            maxminddb::MaxMindDBError::IoError(detail) => DatasetError::Unreadable {
                path: path.display().to_string(),
                source: std::io::Error::other(detail),
            },
            other => DatasetError::Malformed {
                path: path.display().to_string(),
                detail: other.to_string(),
            },
        })?;
        Ok(MmdbProvider { reader })
    }
}

impl GeoProvider for MmdbProvider {
    fn country(&self, ip: IpAddr) -> Option<String> {
        let rec: maxminddb::geoip2::Country = self.reader.lookup(ip).ok()?;
        rec.country.and_then(|c| c.iso_code).map(str::to_string)
    }
}

impl AsnProvider for MmdbProvider {
    fn asn(&self, ip: IpAddr) -> Option<(u32, String)> {
        let rec: maxminddb::geoip2::Asn = self.reader.lookup(ip).ok()?;
        let number = rec.autonomous_system_number?;
        let name = rec.autonomous_system_organization.unwrap_or_default();
        Some((number, name.to_string()))
    }
}

impl ConnTypeProvider for MmdbProvider {
    fn conn_type(&self, ip: IpAddr) -> ConnType {
        self.reader
            .lookup::<maxminddb::geoip2::ConnectionType>(ip)
            .ok()
            .and_then(|rec| rec.connection_type)
            .map(ConnType::from_label)
            .unwrap_or(ConnType::Unknown)
    }
}

/// Open an IP-keyed dataset by extension: `.mmdb` binary databases or `.csv`
/// fixtures with the layouts above.
pub enum IpDataset {
    Mmdb(MmdbProvider),
    Csv(CsvIpFixture),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IpDatasetKind {
    Geo,
    Asn,
    ConnType,
}

impl IpDataset {
    pub fn open(path: &Path, kind: IpDatasetKind) -> Result<Self, DatasetError> {
        if path.extension().map(|e| e == "mmdb").unwrap_or(false) {
            Ok(IpDataset::Mmdb(MmdbProvider::open(path)?))
        } else {
            let fixture = match kind {
                IpDatasetKind::Geo => CsvIpFixture::open_geo(path)?,
                IpDatasetKind::Asn => CsvIpFixture::open_asn(path)?,
                IpDatasetKind::ConnType => CsvIpFixture::open_conn_type(path)?,
            };
            Ok(IpDataset::Csv(fixture))
        }
    }
}

impl GeoProvider for IpDataset {
    fn country(&self, ip: IpAddr) -> Option<String> {
        match self {
            IpDataset::Mmdb(m) => m.country(ip),
            IpDataset::Csv(c) => c.country(ip),
        }
    }
}

impl AsnProvider for IpDataset {
    fn asn(&self, ip: IpAddr) -> Option<(u32, String)> {
        match self {
            IpDataset::Mmdb(m) => m.asn(ip),
            IpDataset::Csv(c) => c.asn(ip),
        }
    }
}

impl ConnTypeProvider for IpDataset {
    fn conn_type(&self, ip: IpAddr) -> ConnType {
        match self {
            IpDataset::Mmdb(m) => m.conn_type(ip),
            IpDataset::Csv(c) => c.conn_type(ip),
        }
    }
}

/// The bundle the discovery pipeline consumes: geolocation for both
/// families plus ASN and connection-type enrichment.
pub struct Enrichment {
    pub geo: Box<dyn GeoProvider + Send>,
    pub asn: Box<dyn AsnProvider + Send>,
    pub conn: Box<dyn ConnTypeProvider + Send>,
}
