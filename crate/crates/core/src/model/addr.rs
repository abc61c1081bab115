//! Address-family helpers: global-routability checks used by the discovery
//! and vetting filters.

use std::net::{Ipv4Addr, Ipv6Addr};

/// True when `addr` is plausibly reachable on the public IPv4 Internet.
///
/// Rejects the RFC 1918 private blocks, loopback, link-local, CGNAT,
/// documentation, benchmarking, multicast, and the class-E reserved space.
pub fn is_global_v4(addr: Ipv4Addr) -> bool {
    let o = addr.octets();
    !(addr.is_private()
        || addr.is_loopback()
        || addr.is_link_local()
        || addr.is_broadcast()
        || addr.is_documentation()
        || addr.is_multicast()
        || addr.is_unspecified()
        || o[0] == 0
        || (o[0] == 100 && (o[1] & 0xc0) == 64) // 100.64.0.0/10 CGNAT
        || (o[0] == 192 && o[1] == 0 && o[2] == 0) // 192.0.0.0/24
        || (o[0] == 198 && (o[1] & 0xfe) == 18) // 198.18.0.0/15 benchmarking
        || o[0] >= 240)
}

/// True when `addr` is plausibly reachable on the public IPv6 Internet.
///
/// 6to4 (2002::/16) and Teredo (2001::/32) addresses are considered global:
/// they route via relays and occur throughout real resolver populations.
pub fn is_global_v6(addr: Ipv6Addr) -> bool {
    let seg = addr.segments();
    !(addr.is_loopback()
        || addr.is_unspecified()
        || (seg[0] & 0xffc0) == 0xfe80 // link-local fe80::/10
        || (seg[0] & 0xfe00) == 0xfc00 // unique-local fc00::/7
        || (seg[0] & 0xff00) == 0xff00 // multicast ff00::/8
        || (seg[0] == 0x2001 && seg[1] == 0x0db8) // documentation 2001:db8::/32
        || addr.to_ipv4_mapped().is_some())
}
