//! Extract v6-only nameserver sightings from a legacy pcap capture.
//!
//! Reads classic (non-ng) pcap files with Ethernet link type, picks out
//! IPv6/UDP packets destined to port 53, parses the DNS question, and
//! emits one [`NsLogEntry`] per query. Anything else in the capture is
//! skipped. This is the bundled alternative to line-delimited JSON logs.

use std::io::Read;

use thiserror::Error;

use crate::dns;

use super::NsLogEntry;

#[derive(Debug, Error)]
pub enum PcapError {
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("not a classic pcap file (magic {0:#010x})")]
    BadMagic(u32),
    #[error("unsupported link type {0}; expected Ethernet")]
    BadLinkType(u32),
}

const MAGIC_USEC: u32 = 0xa1b2_c3d4;
const MAGIC_NSEC: u32 = 0xa1b2_3c4d;
const LINKTYPE_ETHERNET: u32 = 1;
const ETHERTYPE_IPV6: u16 = 0x86dd;
const IPPROTO_UDP: u8 = 17;

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
    swapped: bool,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Option<&'a [u8]> {
        if self.pos + n > self.buf.len() {
            return None;
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Some(s)
    }
    fn u32(&mut self) -> Option<u32> {
        let b: [u8; 4] = self.take(4)?.try_into().ok()?;
        Some(if self.swapped {
            u32::from_le_bytes(b)
        } else {
            u32::from_be_bytes(b)
        })
    }
}

/// Parse a capture and return the query sightings plus a skipped-packet
/// count.
pub fn extract_ns_log(mut input: impl Read) -> Result<(Vec<NsLogEntry>, u64), PcapError> {
    let mut buf = Vec::new();
    input.read_to_end(&mut buf)?;
    if buf.len() < 24 {
        return Err(PcapError::BadMagic(0));
    }

    let magic_be = u32::from_be_bytes(buf[0..4].try_into().unwrap());
    let magic_le = u32::from_le_bytes(buf[0..4].try_into().unwrap());
    let swapped = if magic_be == MAGIC_USEC || magic_be == MAGIC_NSEC {
        false
    } else if magic_le == MAGIC_USEC || magic_le == MAGIC_NSEC {
        true
    } else {
        return Err(PcapError::BadMagic(magic_be));
    };

    let mut r = Reader {
        buf: &buf,
        pos: 16,
        swapped,
    }; // magic, version, thiszone, sigfigs
    let _snaplen = r.u32();
    let link_type = r.u32().ok_or(PcapError::BadMagic(magic_be))?;
    if link_type != LINKTYPE_ETHERNET {
        return Err(PcapError::BadLinkType(link_type));
    }

    let mut entries = Vec::new();
    let mut skipped = 0u64;
    while let Some(ts_sec) = r.u32() {
        let _ts_frac = match r.u32() {
            Some(v) => v,
            None => break,
        };
        let Some(cap_len) = r.u32() else { break };
        let _orig_len = match r.u32() {
            Some(v) => v,
            None => break,
        };
        let Some(frame) = r.take(cap_len as usize) else {
            break;
        };
        match parse_frame(frame, ts_sec as u64) {
            Some(entry) => entries.push(entry),
            None => skipped += 1,
        }
    }
    Ok((entries, skipped))
}

fn parse_frame(frame: &[u8], ts: u64) -> Option<NsLogEntry> {
    // Ethernet header.
    if frame.len() < 14 {
        return None;
    }
    let ethertype = u16::from_be_bytes([frame[12], frame[13]]);
    if ethertype != ETHERTYPE_IPV6 {
        return None;
    }
    let ip = &frame[14..];
    // Fixed 40-byte IPv6 header; no extension-header walking, captures at
    // an authoritative are plain UDP.
    if ip.len() < 40 || ip[0] >> 4 != 6 || ip[6] != IPPROTO_UDP {
        return None;
    }
    let src: [u8; 16] = ip[8..24].try_into().ok()?;
    let udp = &ip[40..];
    if udp.len() < 8 {
        return None;
    }
    let dst_port = u16::from_be_bytes([udp[2], udp[3]]);
    if dst_port != 53 {
        return None;
    }
    let payload = &udp[8..];
    let msg = dns::decode_message(payload).ok()?;
    if msg.is_response {
        return None;
    }
    let q = msg.questions.first()?;
    Some(NsLogEntry {
        fqdn: q.name.clone(),
        src: std::net::Ipv6Addr::from(src),
        ts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::RrType;
    use std::net::Ipv6Addr;

    fn build_capture(queries: &[(&str, Ipv6Addr)]) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(&MAGIC_USEC.to_be_bytes());
        out.extend_from_slice(&2u16.to_be_bytes()); // major
        out.extend_from_slice(&4u16.to_be_bytes()); // minor
        out.extend_from_slice(&0u32.to_be_bytes()); // thiszone
        out.extend_from_slice(&0u32.to_be_bytes()); // sigfigs
        out.extend_from_slice(&65535u32.to_be_bytes()); // snaplen
        out.extend_from_slice(&LINKTYPE_ETHERNET.to_be_bytes());

        for (i, (name, src)) in queries.iter().enumerate() {
            let dns = dns::encode_query(7, name, RrType::A, true).unwrap();
            let mut udp = Vec::new();
            udp.extend_from_slice(&4242u16.to_be_bytes());
            udp.extend_from_slice(&53u16.to_be_bytes());
            udp.extend_from_slice(&((8 + dns.len()) as u16).to_be_bytes());
            udp.extend_from_slice(&0u16.to_be_bytes());
            udp.extend_from_slice(&dns);

            let mut ip = Vec::new();
            ip.push(0x60);
            ip.extend_from_slice(&[0, 0, 0]);
            ip.extend_from_slice(&(udp.len() as u16).to_be_bytes());
            ip.push(IPPROTO_UDP);
            ip.push(64);
            ip.extend_from_slice(&src.octets());
            ip.extend_from_slice(&Ipv6Addr::new(0x2a01, 0x7700, 0, 0, 0, 0, 0, 0x53).octets());
            ip.extend_from_slice(&udp);

            let mut frame = vec![0u8; 12];
            frame.extend_from_slice(&ETHERTYPE_IPV6.to_be_bytes());
            frame.extend_from_slice(&ip);

            out.extend_from_slice(&(100 + i as u32).to_be_bytes()); // ts_sec
            out.extend_from_slice(&0u32.to_be_bytes());
            out.extend_from_slice(&(frame.len() as u32).to_be_bytes());
            out.extend_from_slice(&(frame.len() as u32).to_be_bytes());
            out.extend_from_slice(&frame);
        }
        out
    }

    #[test]
    fn extracts_queries_from_capture() {
        let src1: Ipv6Addr = "2a01:7700::5".parse().unwrap();
        let src2: Ipv6Addr = "2002:102:304::1".parse().unwrap();
        let capture = build_capture(&[("1-1-1-1.z.example", src1), ("9-8-7-6.z.example", src2)]);
        let (entries, skipped) = extract_ns_log(&capture[..]).unwrap();
        assert_eq!(skipped, 0);
        assert_eq!(entries.len(), 2);
        assert_eq!(entries[0].fqdn, "1-1-1-1.z.example");
        assert_eq!(entries[0].src, src1);
        assert_eq!(entries[0].ts, 100);
        assert_eq!(entries[1].src, src2);
    }

    #[test]
    fn rejects_garbage() {
        assert!(matches!(
            extract_ns_log(&b"not a pcap file at all"[..]),
            Err(PcapError::BadMagic(_))
        ));
    }

    #[test]
    fn skips_non_dns_frames() {
        let src: Ipv6Addr = "2a01:7700::5".parse().unwrap();
        let mut capture = build_capture(&[("1-1-1-1.z.example", src)]);
        // Append a bogus non-IPv6 frame record.
        let frame = vec![0u8; 20];
        capture.extend_from_slice(&1u32.to_be_bytes());
        capture.extend_from_slice(&0u32.to_be_bytes());
        capture.extend_from_slice(&(frame.len() as u32).to_be_bytes());
        capture.extend_from_slice(&(frame.len() as u32).to_be_bytes());
        capture.extend_from_slice(&frame);
        let (entries, skipped) = extract_ns_log(&capture[..]).unwrap();
        assert_eq!(entries.len(), 1);
        assert_eq!(skipped, 1);
    }
}
