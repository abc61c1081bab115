//! Built-in censor-model presets shaped after observed national behaviors:
//! a transport-keyed injector that cannot parse 6to4 and honors the RD
//! gate, an AAAA-preferring injector answering from the Teredo block, and a
//! centralized IPv4·A-heavy filter with weak IPv6 coverage.

use std::net::{Ipv4Addr, Ipv6Addr};

use crate::model::ConnType;
use crate::verdict::{IRAN_V4_ADDR, IRAN_V6_ADDR};

use super::{
    Action, AnswerSelect, BlockRule, CacheBehavior, CensorPolicy, LatencyModel, PolicyScope,
    RrClass, SimDomainConfig, SimResolverConfig, SimWorldConfig, UpstreamPath, V6Flavor,
};

fn domain_list(prefix: &str, n: usize) -> Vec<SimDomainConfig> {
    (0..n)
        .map(|i| SimDomainConfig::assigned(&format!("{prefix}-{i:03}.example"), i as u32 + 1))
        .collect()
}

fn conn_type_for(i: usize) -> ConnType {
    match i % 10 {
        0 | 1 => ConnType::Corporate,
        2 => ConnType::Cellular,
        _ => ConnType::CableDsl,
    }
}

/// Transport-keyed injection on IPv4 and native IPv6 paths, blind to 6to4
/// encapsulation, gated on the RD flag, with a single fixed forged address
/// per family. Resolver fleet is mostly 6to4 bridges; a fraction of them
/// recurse over their 6to4 uplink and therefore escape on the v6 side,
/// which is what separates the interfaces statistically.
pub fn iran_world(n_resolvers: usize, n_domains: usize, seed: u64) -> SimWorldConfig {
    let domains = domain_list("ir", n_domains);
    let blocked: Vec<BlockRule> = domains
        .iter()
        .take(n_domains / 4)
        .map(|d| BlockRule {
            domain: d.name.clone(),
            rrclass: RrClass::Any,
            action: Action::Inject {
                a_answer: Some(IRAN_V4_ADDR),
                aaaa_answer: Some(IRAN_V6_ADDR),
                select: AnswerSelect::Transport,
            },
        })
        .collect();

    let native_count = (n_resolvers / 10).max(1);
    let resolvers: Vec<SimResolverConfig> = (0..n_resolvers)
        .map(|i| {
            let native = i < native_count;
            // Every fifth bridge forwards v6-interface lookups through its
            // 6to4 uplink and escapes the censor there.
            let escapes = !native && i % 5 == 1;
            SimResolverConfig {
                country: "IR".into(),
                asn: 58_000 + (i % 12) as u32,
                as_name: None,
                conn_type: conn_type_for(i),
                v6_kind: if native {
                    V6Flavor::Native
                } else {
                    V6Flavor::SixToFour
                },
                cache_behavior: CacheBehavior::AlwaysRecurse,
                v6_upstream: if native {
                    Some(UpstreamPath::NativeV6)
                } else if escapes {
                    Some(UpstreamPath::SixToFour)
                } else {
                    Some(UpstreamPath::V4)
                },
                v4: None,
                v6: None,
            }
        })
        .collect();

    SimWorldConfig {
        seed,
        resolvers,
        policies: vec![CensorPolicy {
            scope: PolicyScope::Centralized {
                country: "IR".into(),
            },
            blocked,
            v6_capable: true,
            parses_6to4: false,
            requires_rd: true,
            injection_probability: 1.0,
        }],
        domains,
        latency: LatencyModel::default(),
    }
}

/// Question-keyed injection with an AAAA-exclusive block list on top of a
/// base list censored for both record types. Forged AAAA answers come from
/// the reserved Teredo block; forged A answers use a fixed bogus address.
/// `aaaa_only` of the domains get AAAA-exclusive treatment and `base` get
/// both-type blocking.
pub fn china_aaaa_world(
    n_resolvers: usize,
    n_domains: usize,
    aaaa_only: usize,
    base: usize,
    seed: u64,
) -> SimWorldConfig {
    assert!(aaaa_only + base <= n_domains);
    let domains = domain_list("cn", n_domains);
    let teredo: Ipv6Addr = "2001:0:2851:782d::1".parse().unwrap();
    let bogus_a: Ipv4Addr = Ipv4Addr::new(66, 254, 114, 41);

    let mut blocked = Vec::new();
    for d in domains.iter().take(aaaa_only) {
        blocked.push(BlockRule {
            domain: d.name.clone(),
            rrclass: RrClass::Aaaa,
            action: Action::Inject {
                a_answer: None,
                aaaa_answer: Some(teredo),
                select: AnswerSelect::Question,
            },
        });
    }
    for d in domains.iter().skip(aaaa_only).take(base) {
        blocked.push(BlockRule {
            domain: d.name.clone(),
            rrclass: RrClass::Any,
            action: Action::Inject {
                a_answer: Some(bogus_a),
                aaaa_answer: Some(teredo),
                select: AnswerSelect::Question,
            },
        });
    }

    let resolvers: Vec<SimResolverConfig> = (0..n_resolvers)
        .map(|i| {
            let native = i % 5 != 4; // mostly native v6
            SimResolverConfig {
                country: "CN".into(),
                asn: 4_500 + (i % 9) as u32,
                as_name: None,
                conn_type: conn_type_for(i),
                v6_kind: if native {
                    V6Flavor::Native
                } else {
                    V6Flavor::SixToFour
                },
                cache_behavior: CacheBehavior::AlwaysRecurse,
                v6_upstream: None,
                v4: None,
                v6: None,
            }
        })
        .collect();

    SimWorldConfig {
        seed,
        resolvers,
        policies: vec![CensorPolicy {
            scope: PolicyScope::Centralized {
                country: "CN".into(),
            },
            blocked,
            v6_capable: true,
            parses_6to4: true,
            requires_rd: true,
            injection_probability: 1.0,
        }],
        domains,
        latency: LatencyModel::default(),
    }
}

/// Centralized filter concentrated on A queries over IPv4, with a thin
/// secondary censor that covers every cell. 6to4 bridges recurse over
/// their own uplink, so the v6 side largely escapes.
pub fn thailand_central_world(n_resolvers: usize, n_domains: usize, seed: u64) -> SimWorldConfig {
    let domains = domain_list("th", n_domains);
    let blockpage_v4: Ipv4Addr = Ipv4Addr::new(125, 26, 170, 3);
    let blockpage_v6: Ipv6Addr = "2001:fb1::3".parse().unwrap();

    let main_count = (n_domains * 7) / 100;
    let base_count = (n_domains / 100).max(1);

    let main_rules: Vec<BlockRule> = domains
        .iter()
        .take(main_count)
        .map(|d| BlockRule {
            domain: d.name.clone(),
            rrclass: RrClass::A,
            action: Action::Inject {
                a_answer: Some(blockpage_v4),
                aaaa_answer: None,
                select: AnswerSelect::Transport,
            },
        })
        .collect();
    let base_rules: Vec<BlockRule> = domains
        .iter()
        .skip(main_count)
        .take(base_count)
        .map(|d| BlockRule {
            domain: d.name.clone(),
            rrclass: RrClass::Any,
            action: Action::Inject {
                a_answer: Some(blockpage_v4),
                aaaa_answer: Some(blockpage_v6),
                select: AnswerSelect::Question,
            },
        })
        .collect();

    let resolvers: Vec<SimResolverConfig> = (0..n_resolvers)
        .map(|i| {
            let bridge = i % 5 < 3; // 60% 6to4
            SimResolverConfig {
                country: "TH".into(),
                asn: 9_800 + (i % 14) as u32,
                as_name: None,
                conn_type: conn_type_for(i),
                v6_kind: if bridge {
                    V6Flavor::SixToFour
                } else {
                    V6Flavor::Native
                },
                cache_behavior: CacheBehavior::AlwaysRecurse,
                v6_upstream: Some(if bridge {
                    UpstreamPath::SixToFour
                } else {
                    UpstreamPath::NativeV6
                }),
                v4: None,
                v6: None,
            }
        })
        .collect();

    SimWorldConfig {
        seed,
        resolvers,
        policies: vec![
            // Main filter: IPv4 links only, A queries only.
            CensorPolicy {
                scope: PolicyScope::Centralized {
                    country: "TH".into(),
                },
                blocked: main_rules,
                v6_capable: false,
                parses_6to4: false,
                requires_rd: true,
                injection_probability: 1.0,
            },
            // Thin full-coverage censor.
            CensorPolicy {
                scope: PolicyScope::Centralized {
                    country: "TH".into(),
                },
                blocked: base_rules,
                v6_capable: true,
                parses_6to4: false,
                requires_rd: true,
                injection_probability: 1.0,
            },
        ],
        domains,
        latency: LatencyModel::default(),
    }
}

/// A censor-free world: every probe should verify.
pub fn clean_world(n_resolvers: usize, n_domains: usize, seed: u64) -> SimWorldConfig {
    SimWorldConfig {
        seed,
        resolvers: (0..n_resolvers)
            .map(|i| SimResolverConfig {
                country: "SE".into(),
                asn: 1_200 + i as u32,
                as_name: None,
                conn_type: conn_type_for(i),
                v6_kind: if i % 2 == 0 {
                    V6Flavor::Native
                } else {
                    V6Flavor::SixToFour
                },
                cache_behavior: if i % 3 == 0 {
                    CacheBehavior::AlwaysCached
                } else {
                    CacheBehavior::AlwaysRecurse
                },
                v6_upstream: None,
                v4: None,
                v6: None,
            })
            .collect(),
        policies: vec![],
        domains: domain_list("se", n_domains),
        latency: LatencyModel::default(),
    }
}

/// Look up a preset by CLI name.
pub fn by_name(name: &str, resolvers: usize, domains: usize, seed: u64) -> Option<SimWorldConfig> {
    match name {
        "iran" => Some(iran_world(resolvers, domains, seed)),
        "china-aaaa" => {
            let aaaa_only = (domains * 21 / 100).max(1);
            let base = domains * 29 / 100;
            Some(china_aaaa_world(resolvers, domains, aaaa_only, base, seed))
        }
        "thailand-central" => Some(thailand_central_world(resolvers, domains, seed)),
        "clean" => Some(clean_world(resolvers, domains, seed)),
        _ => None,
    }
}
