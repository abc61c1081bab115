//! Dual-stack resolver discovery: correlate v6-only nameserver sightings
//! with the IPv4 resolvers that triggered them, prune shared-backend
//! infrastructure, geo-filter the pairs, and health-check what remains.

use std::collections::BTreeMap;
use std::net::{IpAddr, Ipv4Addr, Ipv6Addr};
use std::time::Duration;

use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use crate::enrich::Enrichment;
use crate::model::{
    classify_v6_kind, decode_probe_label, is_global_v4, is_global_v6, Interface, PairId,
    ProbeStatus, ProbeTask, ResolverPair, RrType,
};
use crate::probe::{execute_query, QueryTransport};

pub mod pcap;

/// One sighting in the v6-only nameserver's query log.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NsLogEntry {
    /// The queried name; a probe label under the measurement zone.
    pub fqdn: String,
    /// IPv6 source that fetched it.
    pub src: Ipv6Addr,
    /// Seconds since the epoch.
    pub ts: u64,
}

/// A (v4, v6) matching before filtering.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairCandidate {
    pub v4: Ipv4Addr,
    pub v6: Ipv6Addr,
    pub first_seen: u64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorrelateStats {
    pub entries: u64,
    pub decode_failures: u64,
    pub duplicates: u64,
}

/// Collapse log entries into distinct (decoded v4, source v6) candidates,
/// keeping the earliest sighting. Entries whose name does not decode under
/// the zone are counted and skipped, never fatal.
pub fn correlate_pairs(
    log: impl IntoIterator<Item = NsLogEntry>,
    zone: &str,
) -> (Vec<PairCandidate>, CorrelateStats) {
    let mut stats = CorrelateStats::default();
    let mut seen: BTreeMap<(Ipv4Addr, Ipv6Addr), u64> = BTreeMap::new();
    for entry in log {
        stats.entries += 1;
        let Ok(v4) = decode_probe_label(&entry.fqdn, zone) else {
            stats.decode_failures += 1;
            continue;
        };
        match seen.entry((v4, entry.src)) {
            std::collections::btree_map::Entry::Vacant(slot) => {
                slot.insert(entry.ts);
            }
            std::collections::btree_map::Entry::Occupied(mut slot) => {
                stats.duplicates += 1;
                if entry.ts < *slot.get() {
                    slot.insert(entry.ts);
                }
            }
        }
    }
    let candidates = seen
        .into_iter()
        .map(|((v4, v6), first_seen)| PairCandidate { v4, v6, first_seen })
        .collect();
    (candidates, stats)
}

/// Remove candidates whose v6 address is shared by more than
/// `max_shared` distinct candidates. The default of 1 removes every
/// sharer: a v6 address fronting several v4 resolvers is dedicated
/// infrastructure, not a dual-stack resolver.
pub fn prune_infrastructure(
    candidates: Vec<PairCandidate>,
    max_shared: usize,
) -> Vec<PairCandidate> {
    let mut counts: BTreeMap<Ipv6Addr, usize> = BTreeMap::new();
    for c in &candidates {
        *counts.entry(c.v6).or_default() += 1;
    }
    candidates
        .into_iter()
        .filter(|c| counts[&c.v6] <= max_shared.max(1))
        .collect()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeoFilterStats {
    pub kept: u64,
    pub country_mismatch: u64,
    pub unknown_geo: u64,
    pub bogon: u64,
}

/// Keep candidates whose v4 and v6 sides geolocate to the same country and
/// attach country/ASN/connection-type enrichment. Candidates with unknown
/// geolocation on either side are dropped and counted, as are pairs with
/// non-routable addresses.
pub fn prune_geo_mismatch(
    candidates: Vec<PairCandidate>,
    enrichment: &Enrichment,
) -> (Vec<ResolverPair>, GeoFilterStats) {
    let mut stats = GeoFilterStats::default();
    let mut pairs = Vec::new();
    for c in candidates {
        if !is_global_v4(c.v4) || !is_global_v6(c.v6) {
            stats.bogon += 1;
            continue;
        }
        let v4_country = enrichment.geo.country(IpAddr::V4(c.v4));
        let v6_country = enrichment.geo.country(IpAddr::V6(c.v6));
        let (Some(v4_country), Some(v6_country)) = (v4_country, v6_country) else {
            stats.unknown_geo += 1;
            continue;
        };
        if v4_country != v6_country {
            stats.country_mismatch += 1;
            continue;
        }
        let (asn, as_name) = enrichment
            .asn
            .asn(IpAddr::V4(c.v4))
            .unwrap_or((0, String::new()));
        pairs.push(ResolverPair {
            v4: c.v4,
            v6: c.v6,
            v6_kind: classify_v6_kind(c.v6),
            country: v4_country,
            asn,
            as_name,
            conn_type: enrichment.conn.conn_type(IpAddr::V4(c.v4)),
        });
        stats.kept += 1;
    }
    (pairs, stats)
}

/// Validate raw IPv4 candidates with a control query before correlation:
/// a candidate stays only if it answers the control domain with one of the
/// expected addresses. This is the optional ingestion-side prober; the
/// wide scan that produced the list is out of scope.
pub fn probe_candidates(
    candidates: &[Ipv4Addr],
    control: &str,
    expected: &std::collections::BTreeSet<IpAddr>,
    transport: &dyn QueryTransport,
    window: Duration,
    seed: u64,
) -> Vec<Ipv4Addr> {
    use rand::Rng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut kept = Vec::new();
    for &candidate in candidates {
        let task = ProbeTask {
            pair_id: PairId(u32::MAX),
            interface: Interface::V4,
            rrtype: RrType::A,
            domain: control.to_string(),
            rd_flag: true,
            txid: rng.gen(),
        };
        let result = execute_query(&task, IpAddr::V4(candidate), transport, window);
        if result.status != ProbeStatus::Answered {
            continue;
        }
        let ips = crate::verdict::extract_answer_ips(&result).ips;
        if !ips.is_empty() && ips.iter().all(|ip| expected.contains(ip)) {
            kept.push(candidate);
        }
    }
    kept
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Health {
    Stable,
    Unstable(String),
}

/// Expected answers for the control checks, keyed by (domain, record type).
pub type ControlExpectations = BTreeMap<(String, RrType), std::collections::BTreeSet<IpAddr>>;

/// Query every control domain for A and AAAA on both interfaces of the
/// pair; Stable only when each answer is non-empty and within the expected
/// set. Control queries use fresh random transaction ids and get one retry
/// on timeout (measurement queries never do). Network failures count as
/// instability, not as operational errors.
pub fn verify_pair_health(
    pair: &ResolverPair,
    pair_id: PairId,
    controls: &[String],
    expected: &ControlExpectations,
    transport: &dyn QueryTransport,
    window: Duration,
    seed: u64,
) -> Health {
    use rand::Rng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    for control in controls {
        for interface in [Interface::V4, Interface::V6] {
            for rrtype in [RrType::A, RrType::Aaaa] {
                let dest = match interface {
                    Interface::V4 => IpAddr::V4(pair.v4),
                    Interface::V6 => IpAddr::V6(pair.v6),
                };
                let mut outcome = None;
                for _attempt in 0..2 {
                    let task = ProbeTask {
                        pair_id,
                        interface,
                        rrtype,
                        domain: control.clone(),
                        rd_flag: true,
                        txid: rng.gen(),
                    };
                    let result = execute_query(&task, dest, transport, window);
                    match result.status {
                        ProbeStatus::Answered => {
                            outcome = Some(result);
                            break;
                        }
                        ProbeStatus::Timeout | ProbeStatus::NetworkError => {
                            outcome = Some(result);
                            // retry once on no-answer
                        }
                    }
                }
                let result = outcome.expect("attempted at least once");
                if result.status != ProbeStatus::Answered {
                    return Health::Unstable(format!("{control}/{rrtype}/{interface} timeout"));
                }
                let ips = crate::verdict::extract_answer_ips(&result).ips;
                let Some(want) = expected.get(&(control.clone(), rrtype)) else {
                    continue;
                };
                if ips.is_empty() || !ips.iter().all(|ip| want.contains(ip)) {
                    return Health::Unstable(format!(
                        "{control}/{rrtype}/{interface} wrong answer"
                    ));
                }
            }
        }
    }
    Health::Stable
}
