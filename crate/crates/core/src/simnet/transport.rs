//! Two ways to drive a world: a pure in-process transport for fast
//! deterministic tests, and a loopback UDP harness that stands up a real
//! responder socket per resolver interface so the production probe path
//! (sockets, receive loop, demultiplexer) is exercised unmodified.

use std::collections::HashMap;
use std::net::{IpAddr, Ipv4Addr, Ipv6Addr, SocketAddr, UdpSocket};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::time::Duration;

use crate::dns;
use crate::model::{Interface, RrType};
use crate::probe::transport::{Datagram, QueryTransport, Router, TransportError};

use super::World;

fn parse_query(payload: &[u8]) -> Option<(u16, String, RrType, bool)> {
    let msg = dns::decode_message(payload).ok()?;
    if msg.is_response || msg.opcode != 0 {
        return None;
    }
    let q = msg.questions.first()?;
    if q.qclass != dns::CLASS_IN {
        return None;
    }
    let rrtype = match q.qtype {
        1 => RrType::A,
        28 => RrType::Aaaa,
        _ => return None,
    };
    Some((msg.id, q.name.clone(), rrtype, msg.recursion_desired))
}

fn encode_sim_response(
    txid: u16,
    domain: &str,
    rrtype: RrType,
    rd: bool,
    resp: &super::SimResponse,
) -> Vec<u8> {
    let question = dns::Question {
        name: domain.to_string(),
        qtype: rrtype.wire_type(),
        qclass: dns::CLASS_IN,
    };
    let answers: Vec<dns::AnswerIp> = resp
        .answers
        .iter()
        .map(|ip| dns::AnswerIp { ip: *ip, ttl: 60 })
        .collect();
    dns::encode_response(txid, &question, rd, resp.rcode, &answers).expect("sim response encodes")
}

/// Direct dispatch into the world's response logic; arrival offsets are the
/// world's virtual latencies and no time passes for the caller.
pub struct InProcessTransport<'w> {
    world: &'w World,
    by_addr: HashMap<(Interface, IpAddr), usize>,
}

impl<'w> InProcessTransport<'w> {
    pub fn new(world: &'w World) -> Self {
        let mut by_addr = HashMap::new();
        for (idx, r) in world.resolvers().iter().enumerate() {
            by_addr.insert((Interface::V4, IpAddr::V4(r.pair.v4)), idx);
            by_addr.insert((Interface::V6, IpAddr::V6(r.pair.v6)), idx);
        }
        InProcessTransport { world, by_addr }
    }
}

impl QueryTransport for InProcessTransport<'_> {
    fn exchange(
        &self,
        interface: Interface,
        dest: IpAddr,
        payload: &[u8],
        window: Duration,
    ) -> Result<Vec<Datagram>, TransportError> {
        let Some(&resolver_idx) = self.by_addr.get(&(interface, dest)) else {
            // Unknown destination behaves like a silent host.
            return Ok(Vec::new());
        };
        let Some((txid, domain, rrtype, rd)) = parse_query(payload) else {
            return Ok(Vec::new());
        };
        let window_ms = window.as_millis() as u64;
        Ok(self
            .world
            .respond(resolver_idx, interface, rrtype, &domain, rd)
            .into_iter()
            .filter(|r| r.offset_ms < window_ms)
            .map(|r| Datagram {
                bytes: encode_sim_response(txid, &domain, rrtype, rd, &r),
                source: dest,
                offset: Duration::from_millis(r.offset_ms),
            })
            .collect())
    }
}

/// Routes each resolver interface address to its loopback responder socket.
pub struct SimRouter {
    map: HashMap<(Interface, IpAddr), SocketAddr>,
}

impl Router for SimRouter {
    fn route(&self, interface: Interface, dest: IpAddr) -> Option<SocketAddr> {
        self.map.get(&(interface, dest)).copied()
    }
}

/// Loopback UDP responders, one socket per resolver interface. Responses
/// are scheduled at the world's virtual offsets with real timers, so
/// multi-response capture and ordering behave as they would on the wire.
pub struct UdpSimHarness {
    router: Arc<SimRouter>,
    stop: Arc<AtomicBool>,
    threads: Vec<std::thread::JoinHandle<()>>,
}

impl UdpSimHarness {
    pub fn spawn(world: &Arc<World>) -> std::io::Result<UdpSimHarness> {
        let stop = Arc::new(AtomicBool::new(false));
        let mut map = HashMap::new();
        let mut threads = Vec::new();

        for (idx, resolver) in world.resolvers().iter().enumerate() {
            for (iface, key_ip, bind_ip) in [
                (
                    Interface::V4,
                    IpAddr::V4(resolver.pair.v4),
                    IpAddr::V4(Ipv4Addr::LOCALHOST),
                ),
                (
                    Interface::V6,
                    IpAddr::V6(resolver.pair.v6),
                    IpAddr::V6(Ipv6Addr::LOCALHOST),
                ),
            ] {
                // Environments without a v6 loopback fall back to v4; the
                // router hides the substitution.
                let socket = UdpSocket::bind(SocketAddr::new(bind_ip, 0)).or_else(|_| {
                    UdpSocket::bind(SocketAddr::new(IpAddr::V4(Ipv4Addr::LOCALHOST), 0))
                })?;
                socket.set_read_timeout(Some(Duration::from_millis(25)))?;
                map.insert((iface, key_ip), socket.local_addr()?);

                let world = Arc::clone(world);
                let stop = Arc::clone(&stop);
                let thread = std::thread::Builder::new()
                    .name(format!("sim-resolver-{idx}-{iface}"))
                    .spawn(move || {
                        let mut buf = [0u8; 1024];
                        while !stop.load(Ordering::Relaxed) {
                            let (n, from) = match socket.recv_from(&mut buf) {
                                Ok(x) => x,
                                Err(e)
                                    if e.kind() == std::io::ErrorKind::WouldBlock
                                        || e.kind() == std::io::ErrorKind::TimedOut =>
                                {
                                    continue
                                }
                                Err(_) => break,
                            };
                            let Some((txid, domain, rrtype, rd)) = parse_query(&buf[..n]) else {
                                continue;
                            };
                            let responses = world.respond(idx, iface, rrtype, &domain, rd);
                            // Each query's responses are scheduled on their
                            // own timer so a burst of queries to one
                            // resolver does not serialize into the next
                            // query's listen window.
                            let Ok(tx_socket) = socket.try_clone() else {
                                continue;
                            };
                            let received_at = std::time::Instant::now();
                            std::thread::spawn(move || {
                                for resp in &responses {
                                    let due = received_at + Duration::from_millis(resp.offset_ms);
                                    if let Some(wait) =
                                        due.checked_duration_since(std::time::Instant::now())
                                    {
                                        std::thread::sleep(wait);
                                    }
                                    let bytes =
                                        encode_sim_response(txid, &domain, rrtype, rd, resp);
                                    let _ = tx_socket.send_to(&bytes, from);
                                }
                            });
                        }
                    })?;
                threads.push(thread);
            }
        }

        Ok(UdpSimHarness {
            router: Arc::new(SimRouter { map }),
            stop,
            threads,
        })
    }

    pub fn router(&self) -> Arc<SimRouter> {
        Arc::clone(&self.router)
    }
}

impl Drop for UdpSimHarness {
    fn drop(&mut self) {
        self.stop.store(true, Ordering::Relaxed);
        for t in self.threads.drain(..) {
            let _ = t.join();
        }
    }
}
