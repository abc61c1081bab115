//! Live TLS verification: handshake with each answer IP on port 443, SNI
//! set to the domain under test, chain verified against a configurable
//! trust store.

use std::collections::HashMap;
use std::io::{Read, Write};
use std::net::{IpAddr, SocketAddr, TcpStream};
use std::path::Path;
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use rustls::pki_types::ServerName;
use rustls::{ClientConfig, ClientConnection, RootCertStore};
use thiserror::Error;

use crate::probe::RateLimiter;
use crate::verdict::{TlsOutcome, TlsProber};

#[derive(Debug, Error)]
pub enum TlsSetupError {
    #[error("cannot read trust bundle {path}: {source}")]
    BundleUnreadable {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("trust bundle {0} contains no certificates")]
    EmptyBundle(String),
}

pub struct HandshakeProber {
    config: Arc<ClientConfig>,
    timeout: Duration,
    limiter: Option<Arc<RateLimiter>>,
    /// Minimum spacing between handshakes to the same host.
    host_gap: Duration,
    last_contact: Mutex<HashMap<IpAddr, Instant>>,
}

fn client_config(roots: RootCertStore) -> Arc<ClientConfig> {
    let provider = Arc::new(rustls::crypto::ring::default_provider());
    Arc::new(
        ClientConfig::builder_with_provider(provider)
            .with_safe_default_protocol_versions()
            .expect("default protocol versions")
            .with_root_certificates(roots)
            .with_no_client_auth(),
    )
}

impl HandshakeProber {
    /// Verify against the bundled Mozilla root set.
    pub fn with_webpki_roots() -> HandshakeProber {
        let mut roots = RootCertStore::empty();
        roots.extend(webpki_roots::TLS_SERVER_ROOTS.iter().cloned());
        HandshakeProber::new(client_config(roots))
    }

    /// Verify against a PEM bundle (a test CA, say).
    pub fn with_pem_bundle(path: &Path) -> Result<HandshakeProber, TlsSetupError> {
        let pem = std::fs::read(path).map_err(|source| TlsSetupError::BundleUnreadable {
            path: path.display().to_string(),
            source,
        })?;
        let mut roots = RootCertStore::empty();
        let mut added = 0;
        for cert in rustls_pemfile::certs(&mut &pem[..]).flatten() {
            if roots.add(cert).is_ok() {
                added += 1;
            }
        }
        if added == 0 {
            return Err(TlsSetupError::EmptyBundle(path.display().to_string()));
        }
        Ok(HandshakeProber::new(client_config(roots)))
    }

    fn new(config: Arc<ClientConfig>) -> HandshakeProber {
        HandshakeProber {
            config,
            timeout: Duration::from_secs(10),
            limiter: None,
            host_gap: Duration::from_millis(50),
            last_contact: Mutex::new(HashMap::new()),
        }
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.timeout = timeout;
        self
    }

    /// Share a global handshake rate cap across probers.
    pub fn with_rate_limiter(mut self, limiter: Arc<RateLimiter>) -> Self {
        self.limiter = Some(limiter);
        self
    }

    fn respect_host_gap(&self, ip: IpAddr) {
        let wait = {
            let mut guard = self.last_contact.lock().unwrap();
            let now = Instant::now();
            let wait = guard
                .get(&ip)
                .and_then(|last| self.host_gap.checked_sub(now.duration_since(*last)))
                .unwrap_or(Duration::ZERO);
            guard.insert(ip, now + wait);
            wait
        };
        if !wait.is_zero() {
            std::thread::sleep(wait);
        }
    }

    fn handshake(&self, ip: IpAddr, sni: &str) -> Result<(), String> {
        let server_name = ServerName::try_from(sni.to_string())
            .map_err(|e| format!("invalid SNI {sni:?}: {e}"))?;
        let mut conn = ClientConnection::new(Arc::clone(&self.config), server_name)
            .map_err(|e| format!("client setup: {e}"))?;
        let mut stream = TcpStream::connect_timeout(&SocketAddr::new(ip, 443), self.timeout)
            .map_err(|e| format!("connect: {e}"))?;
        stream
            .set_read_timeout(Some(self.timeout))
            .and_then(|_| stream.set_write_timeout(Some(self.timeout)))
            .map_err(|e| format!("socket opts: {e}"))?;

        let deadline = Instant::now() + self.timeout;
        while conn.is_handshaking() {
            if Instant::now() > deadline {
                return Err("handshake timeout".into());
            }
            if conn.wants_write() {
                conn.write_tls(&mut WriteAdapter(&mut stream))
                    .map_err(|e| format!("write: {e}"))?;
            }
            if conn.wants_read() {
                if conn
                    .read_tls(&mut ReadAdapter(&mut stream))
                    .map_err(|e| format!("read: {e}"))?
                    == 0
                {
                    return Err("peer closed during handshake".into());
                }
                conn.process_new_packets()
                    .map_err(|e| format!("tls: {e}"))?;
            }
        }
        Ok(())
    }
}

struct ReadAdapter<'a>(&'a mut TcpStream);
impl Read for ReadAdapter<'_> {
    fn read(&mut self, buf: &mut [u8]) -> std::io::Result<usize> {
        self.0.read(buf)
    }
}
struct WriteAdapter<'a>(&'a mut TcpStream);
impl Write for WriteAdapter<'_> {
    fn write(&mut self, buf: &[u8]) -> std::io::Result<usize> {
        self.0.write(buf)
    }
    fn flush(&mut self) -> std::io::Result<()> {
        self.0.flush()
    }
}

impl TlsProber for HandshakeProber {
    fn verify(&self, ip: IpAddr, sni: &str) -> TlsOutcome {
        if let Some(limiter) = &self.limiter {
            limiter.acquire();
        }
        self.respect_host_gap(ip);
        match self.handshake(ip, sni) {
            Ok(()) => TlsOutcome::Verified,
            Err(reason) => TlsOutcome::Failed(reason),
        }
    }
}
