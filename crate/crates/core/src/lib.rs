//! Measurement toolkit for dual-stack DNS censorship: discover open
//! resolver pairs, vet target domains, probe the {A, AAAA} × {IPv4, IPv6}
//! matrix, classify censorship via TLS verification and injector
//! fingerprints, and analyze the outcome statistically. A deterministic
//! censor simulator makes the whole pipeline verifiable end to end without
//! touching the live Internet.

pub mod discovery;
pub mod dns;
pub mod domainvet;
pub mod enrich;
pub mod jsonl;
pub mod model;
pub mod probe;
pub mod report;
pub mod simnet;
pub mod stats;
pub mod tls;
pub mod verdict;

pub use model::{
    classify_v6_kind, decode_probe_label, encode_probe_label, six_to_four_prefix, AnswerRecord,
    CapturedResponse, ConnType, Interface, Ipv6Kind, PairId, ProbeResult, ProbeStatus, ProbeTask,
    ResolverPair, RrType,
};
pub use verdict::{CensorVerdict, InjectorFingerprint, Outcome, TlsOutcome, TlsProber};
