//! Shared domain types: resolver pairs, the probe task matrix, captured
//! responses, and IPv6 transition-address semantics.
//!
//! Everything here is immutable after construction and safe to share across
//! threads.

use std::fmt;
use std::net::{IpAddr, Ipv4Addr, Ipv6Addr};

use serde::{Deserialize, Serialize};

pub mod addr;
pub mod label;

pub use addr::{is_global_v4, is_global_v6};
pub use label::{decode_probe_label, encode_probe_label, LabelError};

/// How a resolver's IPv6 interface reaches the v6 Internet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ipv6Kind {
    /// Ordinary, natively routed IPv6 address.
    Native,
    /// 6to4 transition address from 2002::/16 with the tunnel endpoint's
    /// IPv4 address embedded in bits 16-47.
    SixToFour {
        embedded: Ipv4Addr,
        /// Set when the embedded IPv4 is not globally routable (0.0.0.0,
        /// private ranges). Such pairs are retained; downstream filters may
        /// drop them.
        invalid_embedded: bool,
    },
    /// Teredo address from the reserved 2001::/32 block.
    Teredo,
}

impl Ipv6Kind {
    pub fn is_six_to_four(&self) -> bool {
        matches!(self, Ipv6Kind::SixToFour { .. })
    }
}

/// Classify an IPv6 address as native, 6to4, or Teredo.
///
/// 6to4 membership is a /16 prefix match on 2002::/16; the embedded IPv4 is
/// bits 16-47. Teredo is an exact /32 match on 2001:0000::/32 (so e.g.
/// 2001:4860:: is native). Exactly one variant holds for any address.
pub fn classify_v6_kind(addr: Ipv6Addr) -> Ipv6Kind {
    let seg = addr.segments();
    if seg[0] == 0x2002 {
        let embedded = Ipv4Addr::new(
            (seg[1] >> 8) as u8,
            (seg[1] & 0xff) as u8,
            (seg[2] >> 8) as u8,
            (seg[2] & 0xff) as u8,
        );
        Ipv6Kind::SixToFour {
            embedded,
            invalid_embedded: !addr::is_global_v4(embedded),
        }
    } else if seg[0] == 0x2001 && seg[1] == 0x0000 {
        Ipv6Kind::Teredo
    } else {
        Ipv6Kind::Native
    }
}

/// Re-embed an IPv4 address into its 6to4 /48 prefix (2002:aabb:ccdd::/48).
pub fn six_to_four_prefix(v4: Ipv4Addr) -> Ipv6Addr {
    let o = v4.octets();
    Ipv6Addr::new(
        0x2002,
        u16::from_be_bytes([o[0], o[1]]),
        u16::from_be_bytes([o[2], o[3]]),
        0,
        0,
        0,
        0,
        0,
    )
}

/// Maxmind-style connection type of the network hosting a resolver.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConnType {
    Corporate,
    CableDsl,
    Cellular,
    Unknown,
}

impl fmt::Display for ConnType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ConnType::Corporate => "Corporate",
            ConnType::CableDsl => "Cable/DSL",
            ConnType::Cellular => "Cellular",
            ConnType::Unknown => "Unknown",
        };
        f.write_str(s)
    }
}

impl ConnType {
    /// Map a dataset label onto the known buckets; anything else is Unknown.
    pub fn from_label(label: &str) -> ConnType {
        match label {
            "Corporate" => ConnType::Corporate,
            "Cable/DSL" | "CableDSL" | "Cable" => ConnType::CableDsl,
            "Cellular" => ConnType::Cellular,
            _ => ConnType::Unknown,
        }
    }
}

/// One dual-stack vantage point: the IPv4 and IPv6 interfaces of (nominally)
/// one resolver, plus the enrichment attached during discovery.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResolverPair {
    pub v4: Ipv4Addr,
    pub v6: Ipv6Addr,
    pub v6_kind: Ipv6Kind,
    /// ISO 3166 alpha-2, assigned only when the v4 and v6 geolocations agree.
    pub country: String,
    pub asn: u32,
    pub as_name: String,
    pub conn_type: ConnType,
}

/// Index of a pair within a campaign's pair list.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PairId(pub u32);

impl fmt::Display for PairId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Which interface of the pair a query targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Interface {
    V4,
    V6,
}

impl fmt::Display for Interface {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Interface::V4 => "v4",
            Interface::V6 => "v6",
        })
    }
}

/// DNS record type under test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RrType {
    A,
    Aaaa,
}

impl RrType {
    pub fn wire_type(self) -> u16 {
        match self {
            RrType::A => 1,
            RrType::Aaaa => 28,
        }
    }
}

impl fmt::Display for RrType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RrType::A => "A",
            RrType::Aaaa => "AAAA",
        })
    }
}

/// One cell of the 4-way query matrix for one (pair, domain).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProbeTask {
    pub pair_id: PairId,
    pub interface: Interface,
    pub rrtype: RrType,
    pub domain: String,
    pub rd_flag: bool,
    pub txid: u16,
}

/// An answer record pulled out of a captured response.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnswerRecord {
    pub name: String,
    pub rtype: u16,
    /// Raw RDATA, hex-encoded in the JSONL form.
    #[serde(with = "hex::serde")]
    pub rdata: Vec<u8>,
}

impl AnswerRecord {
    /// Parse the RDATA as an address when the record is an A or AAAA.
    /// Malformed lengths yield None; callers count them.
    pub fn ip(&self) -> Option<IpAddr> {
        match self.rtype {
            1 => <[u8; 4]>::try_from(self.rdata.as_slice())
                .ok()
                .map(|b| IpAddr::V4(Ipv4Addr::from(b))),
            28 => <[u8; 16]>::try_from(self.rdata.as_slice())
                .ok()
                .map(|b| IpAddr::V6(Ipv6Addr::from(b))),
            _ => None,
        }
    }
}

/// One full DNS response captured during the listen window. A single query
/// may capture several of these; more than one is on-path injection
/// evidence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CapturedResponse {
    pub source: IpAddr,
    pub arrival_offset_ms: u64,
    pub rcode: u8,
    pub answers: Vec<AnswerRecord>,
    /// Raw answer-section RDATA could be reconstructed from `answers`; the
    /// whole message is kept for audit.
    #[serde(with = "hex::serde")]
    pub raw: Vec<u8>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeStatus {
    Answered,
    Timeout,
    NetworkError,
}

/// Everything observed for one probe task.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProbeResult {
    pub task: ProbeTask,
    pub status: ProbeStatus,
    /// All responses whose transaction id and question matched, in arrival
    /// order.
    pub responses: Vec<CapturedResponse>,
    /// Responses that matched the transaction id but carried a different
    /// question section. Kept for inspection rather than dropped.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub anomalies: Vec<CapturedResponse>,
}
