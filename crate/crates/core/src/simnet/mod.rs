//! Deterministic in-process network world: mock resolvers, 6to4 bridges,
//! and on-path censor models, so the full probe→classify→analyze pipeline
//! runs at desk scale with a known ground truth.
//!
//! Everything a world does is a pure function of (config, seed). Injection
//! coin flips are derived per network path by hashing, never drawn from
//! shared mutable RNG state, so concurrency and query order cannot change
//! an outcome and the ground-truth table is well defined.

use std::collections::BTreeMap;
use std::net::{IpAddr, Ipv4Addr, Ipv6Addr};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::model::{
    classify_v6_kind, six_to_four_prefix, ConnType, Interface, PairId, ResolverPair, RrType,
};
use crate::verdict::{TlsOutcome, TlsProber};

pub mod campaign;
pub mod presets;
pub mod transport;

pub use campaign::{run_campaign, CampaignOptions, CampaignOutput};
pub use transport::{InProcessTransport, SimRouter, UdpSimHarness};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("invalid world config: {0}")]
    Invalid(String),
}

/// Which questions a block rule matches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RrClass {
    A,
    Aaaa,
    Any,
}

impl RrClass {
    pub fn matches(self, rrtype: RrType) -> bool {
        match self {
            RrClass::A => rrtype == RrType::A,
            RrClass::Aaaa => rrtype == RrType::Aaaa,
            RrClass::Any => true,
        }
    }
}

/// How an injecting censor picks the forged record type.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum AnswerSelect {
    /// Forged record family follows the link the query was seen on: one
    /// fixed A answer on IPv4 links, one fixed AAAA answer on IPv6 links,
    /// independent of the question type.
    #[default]
    Transport,
    /// Forged record family follows the question type.
    Question,
}

/// What a censor does to a matched query.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    Inject {
        #[serde(default)]
        a_answer: Option<Ipv4Addr>,
        #[serde(default)]
        aaaa_answer: Option<Ipv6Addr>,
        #[serde(default)]
        select: AnswerSelect,
    },
    Drop,
    Pass,
}

/// One (domain, question-class) → action entry of a policy's block map.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockRule {
    pub domain: String,
    pub rrclass: RrClass,
    pub action: Action,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyScope {
    /// Applies to every resolver geolocated in the country.
    Centralized { country: String },
    /// Applies only to resolvers inside the listed ASes.
    PerAs { asns: Vec<u32> },
}

/// An on-path censor model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CensorPolicy {
    pub scope: PolicyScope,
    pub blocked: Vec<BlockRule>,
    /// Whether the censor monitors native IPv6 links at all.
    pub v6_capable: bool,
    /// Whether the censor parses IPv6 packets encapsulated for a 6to4
    /// bridge. When false those paths are invisible to it.
    pub parses_6to4: bool,
    /// Only act on queries with the recursion-desired flag set.
    pub requires_rd: bool,
    /// Probability that a matched path is actually acted on; resolved per
    /// (policy, resolver, domain, question, leg) with a seeded hash.
    pub injection_probability: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CacheBehavior {
    /// Always forwards upstream with RD set; relays whatever comes back.
    AlwaysRecurse,
    /// Always serves the truthful answer from cache, never recursing.
    AlwaysCached,
}

/// The network path a resolver's own upstream lookups take when a query
/// arrives on its IPv6 interface. (IPv4-interface lookups always recurse
/// over plain IPv4.)
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UpstreamPath {
    V4,
    NativeV6,
    /// Encapsulated 6to4: invisible to censors that do not parse 6to4.
    SixToFour,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum V6Flavor {
    Native,
    SixToFour,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimResolverConfig {
    pub country: String,
    pub asn: u32,
    #[serde(default)]
    pub as_name: Option<String>,
    pub conn_type: ConnType,
    pub v6_kind: V6Flavor,
    pub cache_behavior: CacheBehavior,
    /// Defaults: 6to4 resolvers forward over IPv4, native ones over native
    /// IPv6.
    #[serde(default)]
    pub v6_upstream: Option<UpstreamPath>,
    /// Explicit addresses; filled in deterministically when absent.
    #[serde(default)]
    pub v4: Option<Ipv4Addr>,
    #[serde(default)]
    pub v6: Option<Ipv6Addr>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimDomainConfig {
    pub name: String,
    pub a: Vec<Ipv4Addr>,
    pub aaaa: Vec<Ipv6Addr>,
    /// Whether the TLS oracle reports valid certificates for this domain's
    /// truthful addresses.
    pub tls_valid: bool,
    /// Control domains are excluded from measurement planning.
    #[serde(default)]
    pub control: bool,
}

impl SimDomainConfig {
    /// A truthful, TLS-valid domain with deterministically assigned
    /// addresses.
    pub fn assigned(name: &str, idx: u32) -> SimDomainConfig {
        SimDomainConfig {
            name: name.to_string(),
            a: vec![Ipv4Addr::new(203, 1, (idx >> 8) as u8, (idx & 0xff) as u8)],
            aaaa: vec![Ipv6Addr::new(
                0x2606,
                0x2800,
                0,
                0,
                0,
                0,
                (idx >> 16) as u16,
                idx as u16,
            )],
            tls_valid: true,
            control: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatencyModel {
    /// Authentic-answer base delay.
    pub base_delay_ms: u64,
    /// Seeded jitter added on top of the base delay.
    pub jitter_ms: u64,
    /// How far ahead of the authentic answer an injected one lands.
    pub injected_lead_ms: u64,
    /// Injected responses arrive first by default; flip to model a censor
    /// that loses the race.
    pub injected_first: bool,
}

impl Default for LatencyModel {
    fn default() -> Self {
        LatencyModel {
            base_delay_ms: 30,
            jitter_ms: 10,
            injected_lead_ms: 18,
            injected_first: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimWorldConfig {
    pub seed: u64,
    pub resolvers: Vec<SimResolverConfig>,
    pub policies: Vec<CensorPolicy>,
    pub domains: Vec<SimDomainConfig>,
    #[serde(default)]
    pub latency: LatencyModel,
}

/// A fully built resolver: addresses assigned, defaults resolved.
#[derive(Debug, Clone)]
pub struct SimResolver {
    pub pair: ResolverPair,
    pub cache_behavior: CacheBehavior,
    pub v6_upstream: UpstreamPath,
}

#[derive(Debug, Clone)]
struct DomainTruth {
    a: Vec<Ipv4Addr>,
    aaaa: Vec<Ipv6Addr>,
    tls_valid: bool,
}

/// A logical response as the client would capture it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimResponse {
    pub answers: Vec<IpAddr>,
    pub rcode: u8,
    pub offset_ms: u64,
    pub injected: bool,
}

/// The leg of the network a query (or upstream lookup) crosses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LegCtx {
    pub family: Interface,
    pub encapsulated_6to4: bool,
    pub rrtype: RrType,
    pub rd_flag: bool,
}

/// A resolved censor decision for one leg.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    Pass,
    Drop,
    InjectA(Ipv4Addr),
    InjectAaaa(Ipv6Addr),
}

/// Evaluate one policy against one leg: the block map is consulted for the
/// domain and question class; 6to4-encapsulated legs pass untouched unless
/// the censor parses the encapsulation; native-v6 legs pass when the censor
/// is not v6-capable; RD-gated censors ignore RD=0 queries. A surviving
/// Inject resolves its record type by transport family or question type.
/// `fire` applies the injection-probability draw for this path.
pub fn censor_decide(policy: &CensorPolicy, ctx: &LegCtx, domain: &str, fire: bool) -> Decision {
    let rule = policy
        .blocked
        .iter()
        .find(|r| r.rrclass.matches(ctx.rrtype) && r.domain.eq_ignore_ascii_case(domain));
    let Some(rule) = rule else {
        return Decision::Pass;
    };

    if ctx.encapsulated_6to4 && !policy.parses_6to4 {
        return Decision::Pass;
    }
    if ctx.family == Interface::V6 && !ctx.encapsulated_6to4 && !policy.v6_capable {
        return Decision::Pass;
    }
    if policy.requires_rd && !ctx.rd_flag {
        return Decision::Pass;
    }
    if !fire {
        return Decision::Pass;
    }

    match rule.action {
        Action::Pass => Decision::Pass,
        Action::Drop => Decision::Drop,
        Action::Inject {
            a_answer,
            aaaa_answer,
            select,
        } => {
            let want_v6 = match select {
                AnswerSelect::Transport => ctx.family == Interface::V6,
                AnswerSelect::Question => ctx.rrtype == RrType::Aaaa,
            };
            if want_v6 {
                aaaa_answer
                    .map(Decision::InjectAaaa)
                    .unwrap_or(Decision::Pass)
            } else {
                a_answer.map(Decision::InjectA).unwrap_or(Decision::Pass)
            }
        }
    }
}

/// Ground-truth verdict for one cell of the matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TruthOutcome {
    Censored,
    Accessible,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TruthRecord {
    pub pair_id: PairId,
    pub interface: Interface,
    pub rrtype: RrType,
    pub domain: String,
    pub outcome: TruthOutcome,
}

pub struct World {
    config: SimWorldConfig,
    resolvers: Vec<SimResolver>,
    domains: BTreeMap<String, DomainTruth>,
}

impl World {
    /// Validate the config and assign deterministic addresses.
    pub fn build(config: SimWorldConfig) -> Result<World, ConfigError> {
        for policy in &config.policies {
            if !(0.0..=1.0).contains(&policy.injection_probability) {
                return Err(ConfigError::Invalid(format!(
                    "injection_probability {} outside [0,1]",
                    policy.injection_probability
                )));
            }
            for rule in &policy.blocked {
                if let Action::Inject {
                    a_answer: None,
                    aaaa_answer: None,
                    ..
                } = rule.action
                {
                    return Err(ConfigError::Invalid(format!(
                        "inject rule for {:?} has no answer address",
                        rule.domain
                    )));
                }
            }
        }

        let mut domains = BTreeMap::new();
        for d in &config.domains {
            if d.a.is_empty() || d.aaaa.is_empty() {
                return Err(ConfigError::Invalid(format!(
                    "domain {:?} must have truthful A and AAAA answers",
                    d.name
                )));
            }
            let truth = DomainTruth {
                a: d.a.clone(),
                aaaa: d.aaaa.clone(),
                tls_valid: d.tls_valid,
            };
            if domains.insert(d.name.to_ascii_lowercase(), truth).is_some() {
                return Err(ConfigError::Invalid(format!(
                    "duplicate domain {:?}",
                    d.name
                )));
            }
        }

        let mut seen_v4 = std::collections::HashSet::new();
        let mut seen_v6 = std::collections::HashSet::new();
        let mut resolvers = Vec::with_capacity(config.resolvers.len());
        for (i, rc) in config.resolvers.iter().enumerate() {
            let idx = i as u32;
            let v4 = rc
                .v4
                .unwrap_or_else(|| Ipv4Addr::from(u32::from_be_bytes([89, 0, 0, 1]) + idx));
            let v6 = rc.v6.unwrap_or(match rc.v6_kind {
                V6Flavor::SixToFour => {
                    let mut seg = six_to_four_prefix(v4).segments();
                    seg[7] = 1;
                    Ipv6Addr::from(seg)
                }
                V6Flavor::Native => Ipv6Addr::new(
                    0x2a01,
                    0x7700,
                    0,
                    0,
                    0,
                    0,
                    (idx >> 16) as u16,
                    idx as u16 + 1,
                ),
            });
            if !seen_v4.insert(v4) || !seen_v6.insert(v6) {
                return Err(ConfigError::Invalid(format!(
                    "duplicate resolver address at index {i}"
                )));
            }
            let v6_kind = classify_v6_kind(v6);
            if matches!(rc.v6_kind, V6Flavor::SixToFour) && !v6_kind.is_six_to_four() {
                return Err(ConfigError::Invalid(format!(
                    "resolver {i} declared 6to4 but {v6} is not in 2002::/16"
                )));
            }
            let v6_upstream = rc.v6_upstream.unwrap_or(match rc.v6_kind {
                V6Flavor::SixToFour => UpstreamPath::V4,
                V6Flavor::Native => UpstreamPath::NativeV6,
            });
            resolvers.push(SimResolver {
                pair: ResolverPair {
                    v4,
                    v6,
                    v6_kind,
                    country: rc.country.clone(),
                    asn: rc.asn,
                    as_name: rc
                        .as_name
                        .clone()
                        .unwrap_or_else(|| format!("AS{} Network", rc.asn)),
                    conn_type: rc.conn_type,
                },
                cache_behavior: rc.cache_behavior,
                v6_upstream,
            });
        }

        Ok(World {
            config,
            resolvers,
            domains,
        })
    }

    pub fn config(&self) -> &SimWorldConfig {
        &self.config
    }

    pub fn resolvers(&self) -> &[SimResolver] {
        &self.resolvers
    }

    /// The resolver pairs exactly as a discovery run would emit them.
    pub fn pairs(&self) -> Vec<ResolverPair> {
        self.resolvers.iter().map(|r| r.pair.clone()).collect()
    }

    /// Names of measurement (non-control) domains, in config order.
    pub fn measurement_domains(&self) -> Vec<String> {
        self.config
            .domains
            .iter()
            .filter(|d| !d.control)
            .map(|d| d.name.clone())
            .collect()
    }

    pub fn control_domains(&self) -> Vec<String> {
        self.config
            .domains
            .iter()
            .filter(|d| d.control)
            .map(|d| d.name.clone())
            .collect()
    }

    /// Truthful answers for (domain, rrtype); None when the world does not
    /// know the domain.
    pub fn truthful_answers(&self, domain: &str, rrtype: RrType) -> Option<Vec<IpAddr>> {
        self.domains
            .get(&domain.to_ascii_lowercase())
            .map(|t| match rrtype {
                RrType::A => t.a.iter().copied().map(IpAddr::V4).collect(),
                RrType::Aaaa => t.aaaa.iter().copied().map(IpAddr::V6).collect(),
            })
    }

    /// The TLS oracle: success exactly for truthful answer IPs of TLS-valid
    /// domains.
    pub fn tls_oracle(&self) -> SimTlsOracle {
        let mut good: BTreeMap<String, Vec<IpAddr>> = BTreeMap::new();
        for (name, truth) in &self.domains {
            if truth.tls_valid {
                let mut ips: Vec<IpAddr> = truth.a.iter().copied().map(IpAddr::V4).collect();
                ips.extend(truth.aaaa.iter().copied().map(IpAddr::V6));
                good.insert(name.clone(), ips);
            }
        }
        SimTlsOracle { good }
    }

    /// Deterministic coin for "does this policy fire on this path".
    fn fires(&self, policy_idx: usize, resolver_idx: usize, leg: &LegCtx, domain: &str) -> bool {
        let p = self.config.policies[policy_idx].injection_probability;
        if p >= 1.0 {
            return true;
        }
        if p <= 0.0 {
            return false;
        }
        let mut h = Sha256::new();
        h.update(self.config.seed.to_be_bytes());
        h.update((policy_idx as u64).to_be_bytes());
        h.update((resolver_idx as u64).to_be_bytes());
        h.update([
            matches!(leg.family, Interface::V6) as u8,
            leg.encapsulated_6to4 as u8,
            matches!(leg.rrtype, RrType::Aaaa) as u8,
        ]);
        h.update(domain.as_bytes());
        let digest = h.finalize();
        let x = u64::from_be_bytes(digest[..8].try_into().unwrap());
        (x as f64 / u64::MAX as f64) < p
    }

    /// All policies whose scope covers this resolver, with their indices.
    fn applicable_policies(&self, resolver: &SimResolver) -> Vec<usize> {
        self.config
            .policies
            .iter()
            .enumerate()
            .filter(|(_, p)| match &p.scope {
                PolicyScope::Centralized { country } => *country == resolver.pair.country,
                PolicyScope::PerAs { asns } => asns.contains(&resolver.pair.asn),
            })
            .map(|(i, _)| i)
            .collect()
    }

    /// First non-Pass decision across applicable policies for one leg.
    fn decide_leg(&self, resolver_idx: usize, leg: &LegCtx, domain: &str) -> Decision {
        let resolver = &self.resolvers[resolver_idx];
        for policy_idx in self.applicable_policies(resolver) {
            let fire = self.fires(policy_idx, resolver_idx, leg, domain);
            let decision = censor_decide(&self.config.policies[policy_idx], leg, domain, fire);
            if decision != Decision::Pass {
                return decision;
            }
        }
        Decision::Pass
    }

    /// Seeded per-path jitter in [0, jitter_ms].
    fn jitter(&self, resolver_idx: usize, domain: &str, rrtype: RrType, iface: Interface) -> u64 {
        if self.config.latency.jitter_ms == 0 {
            return 0;
        }
        let mut h = Sha256::new();
        h.update(self.config.seed.to_be_bytes());
        h.update(b"jitter");
        h.update((resolver_idx as u64).to_be_bytes());
        h.update(domain.as_bytes());
        h.update([
            matches!(rrtype, RrType::Aaaa) as u8,
            matches!(iface, Interface::V6) as u8,
        ]);
        let digest = h.finalize();
        u64::from_be_bytes(digest[..8].try_into().unwrap()) % (self.config.latency.jitter_ms + 1)
    }

    /// The heart of the simulation: every response the client captures for
    /// one query, in arrival order. Pure in (config, seed, arguments).
    pub fn respond(
        &self,
        resolver_idx: usize,
        iface: Interface,
        rrtype: RrType,
        domain: &str,
        rd: bool,
    ) -> Vec<SimResponse> {
        let resolver = &self.resolvers[resolver_idx];
        let lat = &self.config.latency;
        let jitter = self.jitter(resolver_idx, domain, rrtype, iface);
        let authentic_at = lat.base_delay_ms + jitter;
        let injected_at = if lat.injected_first {
            authentic_at.saturating_sub(lat.injected_lead_ms)
        } else {
            authentic_at + lat.injected_lead_ms
        };

        let mut out = Vec::new();

        // Inbound leg: the client's own query crossing the censored border.
        let inbound = LegCtx {
            family: iface,
            encapsulated_6to4: iface == Interface::V6 && resolver.pair.v6_kind.is_six_to_four(),
            rrtype,
            rd_flag: rd,
        };
        let mut dropped = false;
        match self.decide_leg(resolver_idx, &inbound, domain) {
            Decision::Pass => {}
            Decision::Drop => dropped = true,
            Decision::InjectA(a) => out.push(SimResponse {
                answers: vec![IpAddr::V4(a)],
                rcode: 0,
                offset_ms: injected_at,
                injected: true,
            }),
            Decision::InjectAaaa(a) => out.push(SimResponse {
                answers: vec![IpAddr::V6(a)],
                rcode: 0,
                offset_ms: injected_at,
                injected: true,
            }),
        }

        // Resolver leg: what the resolver itself sends back.
        if !dropped {
            if let Some(resp) =
                self.resolver_answer(resolver_idx, iface, rrtype, domain, rd, authentic_at)
            {
                out.push(resp);
            }
        }

        out.sort_by_key(|r| r.offset_ms);
        out
    }

    /// The resolver's own response: cached truth, a relayed upstream
    /// answer (possibly poisoned), REFUSED for non-recursive queries it
    /// will not serve, or nothing when an upstream drop starves it.
    fn resolver_answer(
        &self,
        resolver_idx: usize,
        iface: Interface,
        rrtype: RrType,
        domain: &str,
        rd: bool,
        at_ms: u64,
    ) -> Option<SimResponse> {
        let resolver = &self.resolvers[resolver_idx];
        let truthful = || -> SimResponse {
            match self.truthful_answers(domain, rrtype) {
                Some(answers) => SimResponse {
                    answers,
                    rcode: 0,
                    offset_ms: at_ms,
                    injected: false,
                },
                None => SimResponse {
                    answers: vec![],
                    rcode: crate::dns::RCODE_NXDOMAIN,
                    offset_ms: at_ms,
                    injected: false,
                },
            }
        };

        if !rd || resolver.cache_behavior == CacheBehavior::AlwaysCached {
            return Some(match resolver.cache_behavior {
                CacheBehavior::AlwaysCached => truthful(),
                CacheBehavior::AlwaysRecurse => SimResponse {
                    // Will not serve non-recursive queries.
                    answers: vec![],
                    rcode: crate::dns::RCODE_REFUSED,
                    offset_ms: at_ms,
                    injected: false,
                },
            });
        }

        // Forward upstream; the upstream leg is itself censorable. The
        // forwarded query carries RD like the stub queries these devices
        // relay.
        let upstream_path = match iface {
            Interface::V4 => UpstreamPath::V4,
            Interface::V6 => resolver.v6_upstream,
        };
        let leg = LegCtx {
            family: match upstream_path {
                UpstreamPath::V4 => Interface::V4,
                UpstreamPath::NativeV6 | UpstreamPath::SixToFour => Interface::V6,
            },
            encapsulated_6to4: upstream_path == UpstreamPath::SixToFour,
            rrtype,
            rd_flag: true,
        };
        match self.decide_leg(resolver_idx, &leg, domain) {
            Decision::Pass => Some(truthful()),
            // Upstream starved: the resolver reports failure.
            Decision::Drop => Some(SimResponse {
                answers: vec![],
                rcode: 2, // SERVFAIL
                offset_ms: at_ms,
                injected: false,
            }),
            // The resolver believes and relays the forged upstream answer.
            Decision::InjectA(a) => Some(SimResponse {
                answers: vec![IpAddr::V4(a)],
                rcode: 0,
                offset_ms: at_ms,
                injected: false,
            }),
            Decision::InjectAaaa(a) => Some(SimResponse {
                answers: vec![IpAddr::V6(a)],
                rcode: 0,
                offset_ms: at_ms,
                injected: false,
            }),
        }
    }

    /// Enumerate the ground-truth table for the full matrix at the given RD
    /// flag: what a perfect classifier must conclude for every cell. This
    /// walks the world's own response logic directly, with no probe engine,
    /// wire codec, or verdict pipeline involved.
    pub fn ground_truth(&self, rd: bool) -> Vec<TruthRecord> {
        let oracle = self.tls_oracle();
        let mut out = Vec::new();
        for (idx, _) in self.resolvers.iter().enumerate() {
            for domain in self.measurement_domains() {
                for (iface, rrtype) in crate::stats::CELLS {
                    let responses = self.respond(idx, iface, rrtype, &domain, rd);
                    let mut ips: Vec<IpAddr> = Vec::new();
                    for r in &responses {
                        ips.extend(r.answers.iter().copied());
                    }
                    let outcome = if ips.is_empty() {
                        TruthOutcome::Inconclusive
                    } else if ips
                        .iter()
                        .any(|ip| oracle.verify(*ip, &domain) == TlsOutcome::Verified)
                    {
                        TruthOutcome::Accessible
                    } else {
                        TruthOutcome::Censored
                    };
                    out.push(TruthRecord {
                        pair_id: PairId(idx as u32),
                        interface: iface,
                        rrtype,
                        domain: domain.clone(),
                        outcome,
                    });
                }
            }
        }
        out
    }
}

/// TLS oracle over the world's truthful addresses.
pub struct SimTlsOracle {
    good: BTreeMap<String, Vec<IpAddr>>,
}

impl TlsProber for SimTlsOracle {
    fn verify(&self, ip: IpAddr, sni: &str) -> TlsOutcome {
        match self.good.get(&sni.to_ascii_lowercase()) {
            Some(ips) if ips.contains(&ip) => TlsOutcome::Verified,
            _ => TlsOutcome::Failed("certificate verification failed".into()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn iran_policy() -> CensorPolicy {
        CensorPolicy {
            scope: PolicyScope::Centralized {
                country: "IR".into(),
            },
            blocked: vec![BlockRule {
                domain: "blocked.example".into(),
                rrclass: RrClass::Any,
                action: Action::Inject {
                    a_answer: Some(crate::verdict::IRAN_V4_ADDR),
                    aaaa_answer: Some(crate::verdict::IRAN_V6_ADDR),
                    select: AnswerSelect::Transport,
                },
            }],
            v6_capable: true,
            parses_6to4: false,
            requires_rd: true,
            injection_probability: 1.0,
        }
    }

    fn leg(family: Interface, encaps: bool, rrtype: RrType, rd: bool) -> LegCtx {
        LegCtx {
            family,
            encapsulated_6to4: encaps,
            rrtype,
            rd_flag: rd,
        }
    }

    #[test]
    fn censor_injects_a_on_v4_transport() {
        let p = iran_policy();
        assert_eq!(
            censor_decide(
                &p,
                &leg(Interface::V4, false, RrType::A, true),
                "blocked.example",
                true
            ),
            Decision::InjectA(crate::verdict::IRAN_V4_ADDR)
        );
        // A record follows the transport even for AAAA questions.
        assert_eq!(
            censor_decide(
                &p,
                &leg(Interface::V4, false, RrType::Aaaa, true),
                "blocked.example",
                true
            ),
            Decision::InjectA(crate::verdict::IRAN_V4_ADDR)
        );
    }

    #[test]
    fn censor_injects_aaaa_on_native_v6() {
        let p = iran_policy();
        for rrtype in [RrType::A, RrType::Aaaa] {
            assert_eq!(
                censor_decide(
                    &p,
                    &leg(Interface::V6, false, rrtype, true),
                    "blocked.example",
                    true
                ),
                Decision::InjectAaaa(crate::verdict::IRAN_V6_ADDR)
            );
        }
    }

    #[test]
    fn censor_blind_to_unparsed_6to4() {
        let p = iran_policy();
        assert_eq!(
            censor_decide(
                &p,
                &leg(Interface::V6, true, RrType::A, true),
                "blocked.example",
                true
            ),
            Decision::Pass
        );
    }

    #[test]
    fn rd_gate_passes_unset_rd() {
        let p = iran_policy();
        assert_eq!(
            censor_decide(
                &p,
                &leg(Interface::V4, false, RrType::A, false),
                "blocked.example",
                true
            ),
            Decision::Pass
        );
    }

    #[test]
    fn unblocked_domain_passes() {
        let p = iran_policy();
        assert_eq!(
            censor_decide(
                &p,
                &leg(Interface::V4, false, RrType::A, true),
                "fine.example",
                true
            ),
            Decision::Pass
        );
    }

    #[test]
    fn question_select_follows_rrtype() {
        let mut p = iran_policy();
        p.blocked[0].action = Action::Inject {
            a_answer: None,
            aaaa_answer: Some("2001:0:1::2".parse().unwrap()),
            select: AnswerSelect::Question,
        };
        p.blocked[0].rrclass = RrClass::Aaaa;
        // AAAA question over v4 transport still gets the AAAA forgery.
        assert_eq!(
            censor_decide(
                &p,
                &leg(Interface::V4, false, RrType::Aaaa, true),
                "blocked.example",
                true
            ),
            Decision::InjectAaaa("2001:0:1::2".parse().unwrap())
        );
        // A question is outside the rule's class.
        assert_eq!(
            censor_decide(
                &p,
                &leg(Interface::V4, false, RrType::A, true),
                "blocked.example",
                true
            ),
            Decision::Pass
        );
    }
}
