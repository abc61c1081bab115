//! Minimal RFC 1035 wire codec.
//!
//! Queries are encoded exactly as the probe engine sends them: QR=0,
//! OPCODE=0, one question, QCLASS=IN, RD as configured, no EDNS0. Decoding
//! handles full messages including compression pointers in names, since
//! real resolver responses compress freely. Encoding never compresses.

use std::net::IpAddr;

use thiserror::Error;

use crate::model::{AnswerRecord, RrType};

pub const CLASS_IN: u16 = 1;
pub const RCODE_NOERROR: u8 = 0;
pub const RCODE_NXDOMAIN: u8 = 3;
pub const RCODE_REFUSED: u8 = 5;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DnsError {
    #[error("message truncated at offset {0}")]
    Truncated(usize),
    #[error("invalid domain name: {0}")]
    BadName(String),
    #[error("compression pointer loop")]
    PointerLoop,
    #[error("label exceeds 63 bytes")]
    LabelTooLong,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Question {
    pub name: String,
    pub qtype: u16,
    pub qclass: u16,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Record {
    pub name: String,
    pub rtype: u16,
    pub class: u16,
    pub ttl: u32,
    pub rdata: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Message {
    pub id: u16,
    pub is_response: bool,
    pub opcode: u8,
    pub recursion_desired: bool,
    pub recursion_available: bool,
    pub rcode: u8,
    pub questions: Vec<Question>,
    pub answers: Vec<Record>,
}

impl Message {
    /// The captured-response view of this message: answer records with raw
    /// RDATA, ready for IP extraction.
    pub fn answer_records(&self) -> Vec<AnswerRecord> {
        self.answers
            .iter()
            .map(|r| AnswerRecord {
                name: r.name.clone(),
                rtype: r.rtype,
                rdata: r.rdata.clone(),
            })
            .collect()
    }
}

fn push_name(buf: &mut Vec<u8>, name: &str) -> Result<(), DnsError> {
    let name = name.strip_suffix('.').unwrap_or(name);
    if !name.is_empty() {
        for label in name.split('.') {
            if label.is_empty() {
                return Err(DnsError::BadName(name.into()));
            }
            if label.len() > 63 {
                return Err(DnsError::LabelTooLong);
            }
            buf.push(label.len() as u8);
            buf.extend_from_slice(label.as_bytes());
        }
    }
    buf.push(0);
    Ok(())
}

/// Encode a plain one-question query.
pub fn encode_query(id: u16, name: &str, rrtype: RrType, rd: bool) -> Result<Vec<u8>, DnsError> {
    let mut buf = Vec::with_capacity(17 + name.len());
    buf.extend_from_slice(&id.to_be_bytes());
    let flags: u16 = if rd { 0x0100 } else { 0x0000 };
    buf.extend_from_slice(&flags.to_be_bytes());
    buf.extend_from_slice(&1u16.to_be_bytes()); // QDCOUNT
    buf.extend_from_slice(&[0; 6]); // AN/NS/AR counts
    push_name(&mut buf, name)?;
    buf.extend_from_slice(&rrtype.wire_type().to_be_bytes());
    buf.extend_from_slice(&CLASS_IN.to_be_bytes());
    Ok(buf)
}

/// A response answer: either an address record or nothing (rcode-only).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AnswerIp {
    pub ip: IpAddr,
    pub ttl: u32,
}

/// Encode a response to `question` echoing its name. Each answer record's
/// type follows the answer address family, which is not required to match
/// the question type (injectors routinely mismatch).
pub fn encode_response(
    id: u16,
    question: &Question,
    rd: bool,
    rcode: u8,
    answers: &[AnswerIp],
) -> Result<Vec<u8>, DnsError> {
    let mut buf = Vec::with_capacity(64);
    buf.extend_from_slice(&id.to_be_bytes());
    let mut flags: u16 = 0x8000 | 0x0080; // QR=1, RA=1
    if rd {
        flags |= 0x0100;
    }
    flags |= (rcode as u16) & 0x000f;
    buf.extend_from_slice(&flags.to_be_bytes());
    buf.extend_from_slice(&1u16.to_be_bytes());
    buf.extend_from_slice(&(answers.len() as u16).to_be_bytes());
    buf.extend_from_slice(&[0; 4]);
    push_name(&mut buf, &question.name)?;
    buf.extend_from_slice(&question.qtype.to_be_bytes());
    buf.extend_from_slice(&question.qclass.to_be_bytes());
    for ans in answers {
        push_name(&mut buf, &question.name)?;
        let (rtype, rdata): (u16, Vec<u8>) = match ans.ip {
            IpAddr::V4(a) => (1, a.octets().to_vec()),
            IpAddr::V6(a) => (28, a.octets().to_vec()),
        };
        buf.extend_from_slice(&rtype.to_be_bytes());
        buf.extend_from_slice(&CLASS_IN.to_be_bytes());
        buf.extend_from_slice(&ans.ttl.to_be_bytes());
        buf.extend_from_slice(&(rdata.len() as u16).to_be_bytes());
        buf.extend_from_slice(&rdata);
    }
    Ok(buf)
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], DnsError> {
        if self.pos + n > self.buf.len() {
            return Err(DnsError::Truncated(self.pos));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u16(&mut self) -> Result<u16, DnsError> {
        let s = self.take(2)?;
        Ok(u16::from_be_bytes([s[0], s[1]]))
    }

    fn u32(&mut self) -> Result<u32, DnsError> {
        let s = self.take(4)?;
        Ok(u32::from_be_bytes([s[0], s[1], s[2], s[3]]))
    }

    /// Read a possibly-compressed name starting at the cursor. Pointer hops
    /// are bounded by the message length, which rules out loops.
    fn name(&mut self) -> Result<String, DnsError> {
        let mut out = String::new();
        let mut pos = self.pos;
        let mut jumped = false;
        let mut hops = 0usize;
        loop {
            if pos >= self.buf.len() {
                return Err(DnsError::Truncated(pos));
            }
            let len = self.buf[pos];
            if len & 0xc0 == 0xc0 {
                if pos + 1 >= self.buf.len() {
                    return Err(DnsError::Truncated(pos));
                }
                let target = (((len & 0x3f) as usize) << 8) | self.buf[pos + 1] as usize;
                hops += 1;
                if hops > self.buf.len() {
                    return Err(DnsError::PointerLoop);
                }
                if !jumped {
                    self.pos = pos + 2;
                    jumped = true;
                }
                pos = target;
            } else if len == 0 {
                if !jumped {
                    self.pos = pos + 1;
                }
                return Ok(out);
            } else {
                let len = len as usize;
                if pos + 1 + len > self.buf.len() {
                    return Err(DnsError::Truncated(pos));
                }
                if !out.is_empty() {
                    out.push('.');
                }
                out.push_str(&String::from_utf8_lossy(&self.buf[pos + 1..pos + 1 + len]));
                pos += 1 + len;
            }
        }
    }
}

/// Decode a full message. Authority/additional records are parsed past but
/// not retained; only the question and answer sections matter here.
pub fn decode_message(buf: &[u8]) -> Result<Message, DnsError> {
    let mut cur = Cursor { buf, pos: 0 };
    let id = cur.u16()?;
    let flags = cur.u16()?;
    let qdcount = cur.u16()?;
    let ancount = cur.u16()?;
    let nscount = cur.u16()?;
    let arcount = cur.u16()?;

    let mut questions = Vec::with_capacity(qdcount as usize);
    for _ in 0..qdcount {
        let name = cur.name()?;
        let qtype = cur.u16()?;
        let qclass = cur.u16()?;
        questions.push(Question {
            name,
            qtype,
            qclass,
        });
    }

    let read_records = |cur: &mut Cursor, n: u16, keep: bool| -> Result<Vec<Record>, DnsError> {
        let mut out = Vec::new();
        for _ in 0..n {
            let name = cur.name()?;
            let rtype = cur.u16()?;
            let class = cur.u16()?;
            let ttl = cur.u32()?;
            let rdlen = cur.u16()? as usize;
            let rdata = cur.take(rdlen)?.to_vec();
            if keep {
                out.push(Record {
                    name,
                    rtype,
                    class,
                    ttl,
                    rdata,
                });
            }
        }
        Ok(out)
    };

    let answers = read_records(&mut cur, ancount, true)?;
    read_records(&mut cur, nscount, false)?;
    read_records(&mut cur, arcount, false)?;

    Ok(Message {
        id,
        is_response: flags & 0x8000 != 0,
        opcode: ((flags >> 11) & 0x0f) as u8,
        recursion_desired: flags & 0x0100 != 0,
        recursion_available: flags & 0x0080 != 0,
        rcode: (flags & 0x000f) as u8,
        questions,
        answers,
    })
}
