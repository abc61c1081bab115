//! Engine send pacing, measured through a recording transport. Lives in
//! its own test binary so no co-running CPU-bound test can smear the
//! observed send instants across a window boundary.

use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use dualprobe_core::model::Interface;
use dualprobe_core::probe::transport::{Datagram, QueryTransport, TransportError};
use dualprobe_core::probe::{plan_matrix, CampaignPlan, EngineConfig, ProbeEngine};
use dualprobe_core::simnet::presets::clean_world;
use dualprobe_core::simnet::World;

/// Records when each exchange was initiated; answers nothing.
struct RecordingTransport {
    sends: Mutex<Vec<Instant>>,
}

impl QueryTransport for RecordingTransport {
    fn exchange(
        &self,
        _interface: Interface,
        _dest: std::net::IpAddr,
        _payload: &[u8],
        _window: Duration,
    ) -> Result<Vec<Datagram>, TransportError> {
        self.sends.lock().unwrap().push(Instant::now());
        Ok(vec![])
    }
}

#[test]
fn engine_send_rate_never_exceeds_cap() {
    let world = Arc::new(World::build(clean_world(4, 4, 21)).unwrap());
    let pairs = world.pairs();
    let mut plan = CampaignPlan::new(pairs.len(), world.measurement_domains());
    plan.seed = 21;
    let rate = 10u32;
    let transport = RecordingTransport { sends: Mutex::new(Vec::new()) };
    let engine = ProbeEngine::new(
        &transport,
        EngineConfig { window: Duration::from_millis(1), rate, concurrency: 8 },
    );
    let mut results = 0usize;
    engine.run(plan_matrix(&plan).take(25), &pairs, |_| results += 1);
    assert_eq!(results, 25);

    let mut sends = transport.sends.into_inner().unwrap();
    sends.sort();
    assert_eq!(sends.len(), 25);
    let window = Duration::from_secs(1);
    for (i, start) in sends.iter().enumerate() {
        let in_window = sends[i..].iter().take_while(|t| t.duration_since(*start) < window).count();
        assert!(in_window <= rate as usize, "{in_window} sends in one second at index {i}");
    }
}
