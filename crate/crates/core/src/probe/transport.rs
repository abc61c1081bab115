//! Query transports: how an encoded DNS query reaches a resolver interface
//! and how every datagram that comes back within the listen window gets
//! collected.
//!
//! The production implementation drives real UDP sockets, one per address
//! family, with a receiver thread demultiplexing inbound datagrams by
//! (source, transaction id). Destination routing is pluggable so the
//! simulator can run the identical code path against loopback responders.

use std::collections::HashMap;
use std::net::{IpAddr, Ipv4Addr, Ipv6Addr, SocketAddr, UdpSocket};
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::mpsc;
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::model::Interface;

#[derive(Debug, Error)]
pub enum TransportError {
    #[error("socket failure: {0}")]
    Socket(String),
    #[error("no route to {0}")]
    NoRoute(IpAddr),
}

/// One inbound datagram attributed to a query exchange.
#[derive(Debug, Clone)]
pub struct Datagram {
    pub bytes: Vec<u8>,
    pub source: IpAddr,
    /// Arrival time relative to the query send.
    pub offset: Duration,
}

/// A bidirectional query primitive: send one datagram, collect everything
/// addressed back to it within the window.
pub trait QueryTransport: Sync {
    fn exchange(
        &self,
        interface: Interface,
        dest: IpAddr,
        payload: &[u8],
        window: Duration,
    ) -> Result<Vec<Datagram>, TransportError>;
}

/// Maps a resolver interface address to the socket address queries are sent
/// to. Production sends to port 53; the simulator substitutes its loopback
/// responder map.
pub trait Router: Send + Sync {
    fn route(&self, interface: Interface, dest: IpAddr) -> Option<SocketAddr>;
}

pub struct Port53Router;

impl Router for Port53Router {
    fn route(&self, _interface: Interface, dest: IpAddr) -> Option<SocketAddr> {
        Some(SocketAddr::new(dest, 53))
    }
}

type ListenerKey = (SocketAddr, u16);
type Inbound = (Vec<u8>, IpAddr, Instant);
type ListenerMap = HashMap<ListenerKey, Vec<(u64, mpsc::Sender<Inbound>)>>;

struct Pump {
    socket: UdpSocket,
    listeners: Arc<Mutex<ListenerMap>>,
    next_listener: AtomicU64,
    unmatched: Arc<AtomicU64>,
    stop: Arc<AtomicBool>,
    thread: Option<std::thread::JoinHandle<()>>,
}

impl Pump {
    fn new(bind: SocketAddr) -> std::io::Result<Pump> {
        let socket = UdpSocket::bind(bind)?;
        socket.set_read_timeout(Some(Duration::from_millis(25)))?;
        let listeners: Arc<Mutex<ListenerMap>> = Arc::new(Mutex::new(HashMap::new()));
        let stop = Arc::new(AtomicBool::new(false));
        let unmatched = Arc::new(AtomicU64::new(0));

        let rx_socket = socket.try_clone()?;
        let rx_listeners = Arc::clone(&listeners);
        let rx_stop = Arc::clone(&stop);
        let rx_unmatched = Arc::clone(&unmatched);
        let thread = std::thread::Builder::new()
            .name("udp-rx".into())
            .spawn(move || {
                let mut buf = [0u8; 4096];
                while !rx_stop.load(Ordering::Relaxed) {
                    match rx_socket.recv_from(&mut buf) {
                        Ok((n, from)) => {
                            if n < 2 {
                                continue;
                            }
                            let txid = u16::from_be_bytes([buf[0], buf[1]]);
                            let now = Instant::now();
                            let guard = rx_listeners.lock().unwrap();
                            match guard.get(&(from, txid)) {
                                Some(senders) => {
                                    for (_, tx) in senders {
                                        let _ = tx.send((buf[..n].to_vec(), from.ip(), now));
                                    }
                                }
                                None => {
                                    rx_unmatched.fetch_add(1, Ordering::Relaxed);
                                }
                            }
                        }
                        Err(e)
                            if e.kind() == std::io::ErrorKind::WouldBlock
                                || e.kind() == std::io::ErrorKind::TimedOut => {}
                        Err(_) => break,
                    }
                }
            })
            .expect("spawn receiver thread");

        Ok(Pump {
            socket,
            listeners,
            next_listener: AtomicU64::new(0),
            unmatched,
            stop,
            thread: Some(thread),
        })
    }

    fn exchange(
        &self,
        dest: SocketAddr,
        payload: &[u8],
        window: Duration,
    ) -> Result<Vec<Datagram>, TransportError> {
        let txid = u16::from_be_bytes([payload[0], payload[1]]);
        let key = (dest, txid);
        let listener_id = self.next_listener.fetch_add(1, Ordering::Relaxed);
        let (tx, rx) = mpsc::channel::<Inbound>();
        self.listeners
            .lock()
            .unwrap()
            .entry(key)
            .or_default()
            .push((listener_id, tx));

        let start = Instant::now();
        let send_result = self.socket.send_to(payload, dest);

        let mut out = Vec::new();
        if send_result.is_ok() {
            let deadline = start + window;
            let mut keep = |bytes: Vec<u8>, source: IpAddr, at: Instant| {
                // Admission is judged by the receive-loop timestamp, so a
                // late-waking caller never loses datagrams that actually
                // arrived inside the window.
                if at <= deadline {
                    out.push(Datagram {
                        bytes,
                        source,
                        offset: at.saturating_duration_since(start),
                    });
                }
            };
            loop {
                let now = Instant::now();
                if now >= deadline {
                    break;
                }
                match rx.recv_timeout(deadline - now) {
                    Ok((bytes, source, at)) => keep(bytes, source, at),
                    Err(mpsc::RecvTimeoutError::Timeout) => break,
                    Err(mpsc::RecvTimeoutError::Disconnected) => break,
                }
            }
            // Drain anything that arrived in-window while this thread was
            // waiting to be scheduled.
            while let Ok((bytes, source, at)) = rx.try_recv() {
                keep(bytes, source, at);
            }
        }

        // Deregister this listener; drop the whole key when it empties.
        {
            let mut guard = self.listeners.lock().unwrap();
            if let Some(senders) = guard.get_mut(&key) {
                senders.retain(|(id, _)| *id != listener_id);
                if senders.is_empty() {
                    guard.remove(&key);
                }
            }
        }

        send_result.map_err(|e| TransportError::Socket(e.to_string()))?;
        Ok(out)
    }
}

impl Drop for Pump {
    fn drop(&mut self) {
        self.stop.store(true, Ordering::Relaxed);
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

/// Production UDP transport: one socket per address family.
pub struct UdpTransport {
    v4: Option<Pump>,
    v6: Option<Pump>,
    router: Arc<dyn Router>,
}

impl UdpTransport {
    /// Bind ephemeral sockets on both families. Either family may fail to
    /// bind (no local v6, say); queries on that interface then error.
    pub fn bind(router: Arc<dyn Router>) -> std::io::Result<UdpTransport> {
        let v4 = Pump::new(SocketAddr::new(IpAddr::V4(Ipv4Addr::UNSPECIFIED), 0)).ok();
        let v6 = Pump::new(SocketAddr::new(IpAddr::V6(Ipv6Addr::UNSPECIFIED), 0)).ok();
        if v4.is_none() && v6.is_none() {
            return Err(std::io::Error::other("cannot bind UDP on either family"));
        }
        Ok(UdpTransport { v4, v6, router })
    }

    /// Loopback-only binding used by the simulator harness.
    pub fn bind_loopback(router: Arc<dyn Router>) -> std::io::Result<UdpTransport> {
        let v4 = Pump::new(SocketAddr::new(IpAddr::V4(Ipv4Addr::LOCALHOST), 0)).ok();
        let v6 = Pump::new(SocketAddr::new(IpAddr::V6(Ipv6Addr::LOCALHOST), 0)).ok();
        if v4.is_none() && v6.is_none() {
            return Err(std::io::Error::other("cannot bind loopback UDP"));
        }
        Ok(UdpTransport { v4, v6, router })
    }

    /// Datagrams that matched no in-flight exchange.
    pub fn unmatched_count(&self) -> u64 {
        self.v4
            .as_ref()
            .map(|p| p.unmatched.load(Ordering::Relaxed))
            .unwrap_or(0)
            + self
                .v6
                .as_ref()
                .map(|p| p.unmatched.load(Ordering::Relaxed))
                .unwrap_or(0)
    }

    fn pump_for(&self, addr: SocketAddr) -> Result<&Pump, TransportError> {
        let pump = if addr.is_ipv4() {
            self.v4.as_ref()
        } else {
            self.v6.as_ref()
        };
        pump.ok_or_else(|| TransportError::Socket(format!("no local socket for family of {addr}")))
    }
}

impl QueryTransport for UdpTransport {
    fn exchange(
        &self,
        interface: Interface,
        dest: IpAddr,
        payload: &[u8],
        window: Duration,
    ) -> Result<Vec<Datagram>, TransportError> {
        let addr = self
            .router
            .route(interface, dest)
            .ok_or(TransportError::NoRoute(dest))?;
        self.pump_for(addr)?.exchange(addr, payload, window)
    }
}
