//! Target-domain vetting: keep only domains with valid A and AAAA records
//! whose addresses present verifiable TLS certificates for the domain's own
//! name.

use std::collections::BTreeSet;
use std::net::IpAddr;
use std::time::Duration;

use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{is_global_v4, is_global_v6, Interface, PairId, ProbeStatus, ProbeTask, RrType};
use crate::probe::{execute_query, QueryTransport};
use crate::verdict::{TlsOutcome, TlsProber};

/// Public resolvers used to learn a domain's truthful records; overridable
/// for simulated runs.
pub fn default_trusted_resolvers() -> Vec<IpAddr> {
    vec![
        "8.8.8.8".parse().unwrap(),
        "8.8.4.4".parse().unwrap(),
        "1.1.1.1".parse().unwrap(),
        "1.0.0.1".parse().unwrap(),
    ]
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VettedDomain {
    pub name: String,
    pub a_ips: BTreeSet<std::net::Ipv4Addr>,
    pub aaaa_ips: BTreeSet<std::net::Ipv6Addr>,
    /// Seconds since the epoch.
    pub vetted_at: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub category: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rejection {
    /// No valid, globally-routable A record at any trusted resolver.
    NoA,
    /// No valid, globally-routable AAAA record.
    NoAaaa,
    /// Neither family produced a single TLS-verifiable address.
    TlsInvalid,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "outcome")]
pub enum VetOutcome {
    Vetted(VettedDomain),
    Rejected { name: String, reason: Rejection },
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum VetError {
    /// No trusted resolver answered at all; an operational failure distinct
    /// from any per-domain rejection.
    #[error("no trusted resolver reachable for {0}")]
    ResolverUnreachable(String),
}

#[derive(Debug, Clone)]
pub struct VetOptions {
    pub window: Duration,
    pub seed: u64,
    pub now: u64,
}

impl Default for VetOptions {
    fn default() -> Self {
        VetOptions {
            window: Duration::from_millis(2_000),
            seed: 0,
            now: std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
        }
    }
}

/// Resolve `name` at every trusted resolver, union the answers, filter
/// family-invalid and non-routable addresses, and TLS-verify what remains.
/// Each family needs at least one verified address.
pub fn vet_domain(
    name: &str,
    trusted: &[IpAddr],
    transport: &dyn QueryTransport,
    tls: &dyn TlsProber,
    opts: &VetOptions,
) -> Result<VetOutcome, VetError> {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(opts.seed);
    let mut answered = false;
    let mut a_union: BTreeSet<std::net::Ipv4Addr> = BTreeSet::new();
    let mut aaaa_union: BTreeSet<std::net::Ipv6Addr> = BTreeSet::new();

    for &resolver in trusted {
        let interface = if resolver.is_ipv4() {
            Interface::V4
        } else {
            Interface::V6
        };
        for rrtype in [RrType::A, RrType::Aaaa] {
            let task = ProbeTask {
                pair_id: PairId(u32::MAX),
                interface,
                rrtype,
                domain: name.to_string(),
                rd_flag: true,
                txid: rng.gen(),
            };
            let result = execute_query(&task, resolver, transport, opts.window);
            if result.status == ProbeStatus::Answered {
                answered = true;
            }
            for ip in crate::verdict::extract_answer_ips(&result).ips {
                match ip {
                    IpAddr::V4(v4) if rrtype == RrType::A && is_global_v4(v4) => {
                        a_union.insert(v4);
                    }
                    IpAddr::V6(v6) if rrtype == RrType::Aaaa && is_global_v6(v6) => {
                        aaaa_union.insert(v6);
                    }
                    _ => {}
                }
            }
        }
    }

    if !answered {
        return Err(VetError::ResolverUnreachable(name.to_string()));
    }
    if a_union.is_empty() {
        return Ok(VetOutcome::Rejected {
            name: name.into(),
            reason: Rejection::NoA,
        });
    }
    if aaaa_union.is_empty() {
        return Ok(VetOutcome::Rejected {
            name: name.into(),
            reason: Rejection::NoAaaa,
        });
    }

    let a_ok = a_union
        .iter()
        .any(|ip| tls.verify(IpAddr::V4(*ip), name) == TlsOutcome::Verified);
    let aaaa_ok = aaaa_union
        .iter()
        .any(|ip| tls.verify(IpAddr::V6(*ip), name) == TlsOutcome::Verified);
    if !a_ok || !aaaa_ok {
        return Ok(VetOutcome::Rejected {
            name: name.into(),
            reason: Rejection::TlsInvalid,
        });
    }

    Ok(VetOutcome::Vetted(VettedDomain {
        name: name.to_string(),
        a_ips: a_union,
        aaaa_ips: aaaa_union,
        vetted_at: opts.now,
        category: None,
    }))
}
