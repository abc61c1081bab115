//! The probe-label codec.
//!
//! Discovery encodes the targeted resolver's IPv4 address into the query
//! name (`1.1.1.1` under zone `z.example` becomes `1-1-1-1.z.example`) so the
//! v6-only authoritative log pairs each fetching IPv6 source with the IPv4
//! resolver that was asked.

use std::net::Ipv4Addr;

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LabelError {
    /// Leading label is not four hyphen-separated integers in 0-255.
    #[error("malformed probe label: {0:?}")]
    MalformedLabel(String),
    /// The name does not fall under the configured zone.
    #[error("name {name:?} is not under zone {zone:?}")]
    ZoneMismatch { name: String, zone: String },
}

fn trim_root(name: &str) -> &str {
    name.strip_suffix('.').unwrap_or(name)
}

/// Encode `v4` as the leading label of a name under `zone`.
///
/// The dotted quad's dots become hyphens, so the label is at most 15 bytes
/// and every IPv4 address is encodable.
pub fn encode_probe_label(v4: Ipv4Addr, zone: &str) -> String {
    let o = v4.octets();
    format!("{}-{}-{}-{}.{}", o[0], o[1], o[2], o[3], trim_root(zone))
}

/// Invert [`encode_probe_label`]: recover the IPv4 address from `fqdn`'s
/// leading label, checking that the rest of the name equals `zone`
/// (case-insensitively, ignoring a trailing root dot).
pub fn decode_probe_label(fqdn: &str, zone: &str) -> Result<Ipv4Addr, LabelError> {
    let name = trim_root(fqdn);
    let zone = trim_root(zone);
    let label = match name.strip_suffix(zone) {
        Some(head) if head.len() > 1 && zone.len() + head.len() == name.len() => {
            match head.strip_suffix('.') {
                Some(l) if !l.is_empty() && !l.contains('.') => l,
                _ => {
                    return Err(LabelError::ZoneMismatch {
                        name: fqdn.into(),
                        zone: zone.into(),
                    })
                }
            }
        }
        _ => {
            // Retry case-insensitively before giving up.
            let lower_name = name.to_ascii_lowercase();
            let lower_zone = zone.to_ascii_lowercase();
            if lower_name != name || lower_zone != zone {
                return decode_probe_label(&lower_name, &lower_zone);
            }
            return Err(LabelError::ZoneMismatch {
                name: fqdn.into(),
                zone: zone.into(),
            });
        }
    };

    let mut octets = [0u8; 4];
    let mut parts = label.split('-');
    for slot in octets.iter_mut() {
        let part = parts
            .next()
            .ok_or_else(|| LabelError::MalformedLabel(label.into()))?;
        if part.is_empty() || part.len() > 3 || !part.bytes().all(|b| b.is_ascii_digit()) {
            return Err(LabelError::MalformedLabel(label.into()));
        }
        *slot = part
            .parse::<u8>()
            .map_err(|_| LabelError::MalformedLabel(label.into()))?;
    }
    if parts.next().is_some() {
        return Err(LabelError::MalformedLabel(label.into()));
    }
    Ok(Ipv4Addr::from(octets))
}
