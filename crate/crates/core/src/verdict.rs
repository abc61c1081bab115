//! Censorship classification: answer-IP extraction, triple-round TLS
//! verification, and known-injector fingerprinting.
//!
//! TLS is the arbiter. A probe is Censored only when every returned IP
//! failed verification in every round; one verified IP makes it Accessible.
//! Probes that returned nothing are Inconclusive and never count toward
//! blocking rates. Fingerprints annotate but never decide.

use std::collections::BTreeSet;
use std::net::{IpAddr, Ipv4Addr, Ipv6Addr};

use serde::{Deserialize, Serialize};

use crate::model::{ProbeResult, ProbeStatus, ProbeTask, RrType};

/// Result of one TLS handshake + chain verification attempt.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TlsOutcome {
    /// Handshake completed and the chain verified for the SNI.
    Verified,
    /// Connection or verification failed; the reason is informational.
    Failed(String),
    /// The prober itself could not run (local/operational fault). Distinct
    /// from Failed so operational problems never masquerade as censorship.
    Unavailable(String),
}

/// Anything that can verify "does this IP serve a valid certificate for
/// this name". Production uses a real handshake; the simulator supplies an
/// oracle.
pub trait TlsProber: Sync {
    fn verify(&self, ip: IpAddr, sni: &str) -> TlsOutcome;
}

pub const IRAN_V4_ADDR: Ipv4Addr = Ipv4Addr::new(10, 10, 34, 35);
pub const IRAN_V6_ADDR: Ipv6Addr = Ipv6Addr::new(0x00d0, 0, 0, 0, 0, 0, 0, 0x11);

/// A custom fingerprint rule loaded from configuration.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CustomRule {
    pub label: String,
    /// Exact address to match.
    pub addr: IpAddr,
    /// Restrict the rule to probes of one record type, if set.
    #[serde(default)]
    pub rrtype: Option<RrType>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FingerprintName {
    IranV4,
    IranV6,
    GfwTeredo,
    Custom(String),
}

/// A known injector pattern matched against the answer IPs of one probe.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InjectorFingerprint {
    pub name: FingerprintName,
    /// The answer address that triggered the match.
    pub matched_on: IpAddr,
}

/// Extraction outcome: the IP set plus a malformed-RDATA tally.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ExtractedIps {
    pub ips: BTreeSet<IpAddr>,
    pub malformed: usize,
}

/// Union of all A/AAAA RDATA across every captured response, injected and
/// authentic alike. Timeouts and answerless responses contribute nothing;
/// RDATA of the wrong length is counted, not fatal.
pub fn extract_answer_ips(result: &ProbeResult) -> ExtractedIps {
    let mut out = ExtractedIps::default();
    for response in &result.responses {
        for record in &response.answers {
            if record.rtype != 1 && record.rtype != 28 {
                continue;
            }
            match record.ip() {
                Some(ip) => {
                    out.ips.insert(ip);
                }
                None => out.malformed += 1,
            }
        }
    }
    out
}

/// Match the extracted IP set against known injector patterns, in fixed
/// priority order: IranV4, IranV6, GfwTeredo, then custom rules.
pub fn fingerprint_injector(
    ips: &BTreeSet<IpAddr>,
    rrtype: RrType,
    custom: &[CustomRule],
) -> Option<InjectorFingerprint> {
    if ips.contains(&IpAddr::V4(IRAN_V4_ADDR)) {
        return Some(InjectorFingerprint {
            name: FingerprintName::IranV4,
            matched_on: IpAddr::V4(IRAN_V4_ADDR),
        });
    }
    if ips.contains(&IpAddr::V6(IRAN_V6_ADDR)) {
        return Some(InjectorFingerprint {
            name: FingerprintName::IranV6,
            matched_on: IpAddr::V6(IRAN_V6_ADDR),
        });
    }
    for ip in ips {
        if let IpAddr::V6(v6) = ip {
            let seg = v6.segments();
            if seg[0] == 0x2001 && seg[1] == 0x0000 {
                return Some(InjectorFingerprint {
                    name: FingerprintName::GfwTeredo,
                    matched_on: *ip,
                });
            }
        }
    }
    for rule in custom {
        if rule.rrtype.map(|r| r == rrtype).unwrap_or(true) && ips.contains(&rule.addr) {
            return Some(InjectorFingerprint {
                name: FingerprintName::Custom(rule.label.clone()),
                matched_on: rule.addr,
            });
        }
    }
    None
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Censored,
    Accessible,
    Inconclusive { reason: String },
}

impl Outcome {
    pub fn is_censored(&self) -> bool {
        matches!(self, Outcome::Censored)
    }
    pub fn is_accessible(&self) -> bool {
        matches!(self, Outcome::Accessible)
    }
    pub fn is_conclusive(&self) -> bool {
        !matches!(self, Outcome::Inconclusive { .. })
    }
}

/// One verification attempt in the audit trail.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TlsAttempt {
    pub round: u32,
    pub ip: IpAddr,
    pub outcome: TlsOutcome,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CensorVerdict {
    pub task: ProbeTask,
    pub outcome: Outcome,
    pub answer_ips: BTreeSet<IpAddr>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fingerprint: Option<InjectorFingerprint>,
    pub tls_attempts: Vec<TlsAttempt>,
}

/// Classify one probe's answer set.
///
/// Verification short-circuits to Accessible on the first success. Censored
/// requires a non-empty IP set where every (ip, round) attempt failed across
/// all `rounds` rounds. An empty set is Inconclusive("no-answer"); REFUSED
/// and friends surface as Inconclusive("rcode-N"). Operational prober
/// faults fold into Inconclusive("unverifiable").
pub fn classify_censorship(
    task: &ProbeTask,
    result: &ProbeResult,
    tls: &dyn TlsProber,
    rounds: u32,
    custom_rules: &[CustomRule],
) -> CensorVerdict {
    debug_assert!(rounds >= 1);
    let extracted = extract_answer_ips(result);
    let ips = extracted.ips;
    let fingerprint = fingerprint_injector(&ips, task.rrtype, custom_rules);

    if ips.is_empty() {
        let reason = match result.status {
            ProbeStatus::Timeout => "no-answer".to_string(),
            ProbeStatus::NetworkError => "network-error".to_string(),
            ProbeStatus::Answered => {
                // Answered but answerless: tally by the highest RCODE seen
                // so REFUSED/NXDOMAIN-style behavior stays inspectable.
                match result.responses.iter().map(|r| r.rcode).max() {
                    Some(0) | None => "no-answer".to_string(),
                    Some(rc) => format!("rcode-{rc}"),
                }
            }
        };
        return CensorVerdict {
            task: task.clone(),
            outcome: Outcome::Inconclusive { reason },
            answer_ips: ips,
            fingerprint,
            tls_attempts: Vec::new(),
        };
    }

    let mut attempts = Vec::with_capacity(rounds as usize * ips.len());
    let mut saw_unavailable = false;
    for round in 1..=rounds {
        for &ip in &ips {
            let outcome = tls.verify(ip, &task.domain);
            let verified = outcome == TlsOutcome::Verified;
            if matches!(outcome, TlsOutcome::Unavailable(_)) {
                saw_unavailable = true;
            }
            attempts.push(TlsAttempt { round, ip, outcome });
            if verified {
                return CensorVerdict {
                    task: task.clone(),
                    outcome: Outcome::Accessible,
                    answer_ips: ips,
                    fingerprint,
                    tls_attempts: attempts,
                };
            }
        }
    }

    let outcome = if saw_unavailable {
        Outcome::Inconclusive {
            reason: "unverifiable".to_string(),
        }
    } else {
        Outcome::Censored
    };
    CensorVerdict {
        task: task.clone(),
        outcome,
        answer_ips: ips,
        fingerprint,
        tls_attempts: attempts,
    }
}
