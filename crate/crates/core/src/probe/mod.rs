//! Campaign planning and execution: the 4-way query matrix, round-robin
//! fairness, multi-response capture, and the rate-capped engine.

use std::sync::mpsc;
use std::sync::Mutex;
use std::time::Duration;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dns;
use crate::model::{
    CapturedResponse, Interface, PairId, ProbeResult, ProbeStatus, ProbeTask, ResolverPair, RrType,
};

pub mod rate;
pub mod transport;

pub use rate::RateLimiter;
pub use transport::{Datagram, Port53Router, QueryTransport, Router, TransportError, UdpTransport};

/// Everything a probing campaign needs to be planned and replayed.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CampaignPlan {
    pub pair_count: usize,
    pub domains: Vec<String>,
    pub controls: Vec<String>,
    pub window_ms: u64,
    /// Global queries-per-second cap.
    pub rate: u32,
    pub seed: u64,
    /// Recursion-desired flag applied to every measurement query.
    pub rd_flag: bool,
}

impl CampaignPlan {
    pub fn new(pair_count: usize, domains: Vec<String>) -> CampaignPlan {
        CampaignPlan {
            pair_count,
            domains,
            controls: Vec::new(),
            window_ms: 2_000,
            rate: 100,
            seed: 0,
            rd_flag: true,
        }
    }

    /// Size of the full task universe: |pairs| × |domains| × 4.
    pub fn total_tasks(&self) -> u64 {
        self.pair_count as u64 * self.domains.len() as u64 * 4
    }
}

/// Lazily yields the campaign's tasks in round-robin order: round `r` sends
/// one fixed (domain, record-type) combination to every endpoint, with the
/// endpoint order reshuffled each round from the seed. Every endpoint
/// therefore receives its first query before any endpoint receives its
/// second, and any prefix of the stream keeps per-endpoint counts within
/// one of each other.
pub struct PlanIter {
    combos: Vec<(u32, RrType)>,
    domains: Vec<String>,
    endpoint_count: u32,
    seed: u64,
    rd_flag: bool,
    round: usize,
    round_order: Vec<u32>,
    pos: usize,
    emitted: u64,
    total: u64,
}

/// Stream the full interface × record-type matrix for the plan.
pub fn plan_matrix(plan: &CampaignPlan) -> PlanIter {
    // Interleave A and AAAA per domain so both record types land close
    // together in time for a given domain.
    let mut combos = Vec::with_capacity(plan.domains.len() * 2);
    for idx in 0..plan.domains.len() as u32 {
        combos.push((idx, RrType::A));
        combos.push((idx, RrType::Aaaa));
    }
    PlanIter {
        combos,
        domains: plan.domains.clone(),
        endpoint_count: plan.pair_count as u32 * 2,
        seed: plan.seed,
        rd_flag: plan.rd_flag,
        round: 0,
        round_order: Vec::new(),
        pos: 0,
        emitted: 0,
        total: plan.total_tasks(),
    }
}

impl PlanIter {
    fn load_round(&mut self) {
        let mut order: Vec<u32> = (0..self.endpoint_count).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(
            self.seed ^ (self.round as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15),
        );
        order.shuffle(&mut rng);
        self.round_order = order;
        self.pos = 0;
    }
}

impl Iterator for PlanIter {
    type Item = ProbeTask;

    fn next(&mut self) -> Option<ProbeTask> {
        if self.emitted >= self.total || self.endpoint_count == 0 {
            return None;
        }
        if self.pos == 0 && self.round_order.is_empty() || self.pos >= self.round_order.len() {
            if self.pos >= self.round_order.len() && !self.round_order.is_empty() {
                self.round += 1;
            }
            if self.round >= self.combos.len() {
                return None;
            }
            self.load_round();
        }
        let endpoint = self.round_order[self.pos];
        self.pos += 1;
        self.emitted += 1;

        let (domain_idx, rrtype) = self.combos[self.round];
        let pair_id = PairId(endpoint / 2);
        let interface = if endpoint.is_multiple_of(2) {
            Interface::V4
        } else {
            Interface::V6
        };
        // Transaction ids are a pure function of (seed, task coordinates) so
        // plans replay identically.
        let mut txid_rng = ChaCha8Rng::seed_from_u64(
            self.seed
                ^ (endpoint as u64) << 32
                ^ (domain_idx as u64) << 2
                ^ match rrtype {
                    RrType::A => 0,
                    RrType::Aaaa => 1,
                },
        );
        ProbeTask {
            pair_id,
            interface,
            rrtype,
            domain: self.domains[domain_idx as usize].clone(),
            rd_flag: self.rd_flag,
            txid: txid_rng.gen(),
        }
        .into()
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = (self.total - self.emitted) as usize;
        (left, Some(left))
    }
}

impl ExactSizeIterator for PlanIter {}

/// Send one query and fold every response captured in the window into a
/// [`ProbeResult`].
///
/// Responses match on transaction id plus question section; txid matches
/// with a different question are kept as anomalies. No response at all is a
/// Timeout; local socket trouble is a NetworkError.
pub fn execute_query(
    task: &ProbeTask,
    dest: std::net::IpAddr,
    transport: &dyn QueryTransport,
    window: Duration,
) -> ProbeResult {
    let payload = match dns::encode_query(task.txid, &task.domain, task.rrtype, task.rd_flag) {
        Ok(p) => p,
        Err(_) => {
            return ProbeResult {
                task: task.clone(),
                status: ProbeStatus::NetworkError,
                responses: vec![],
                anomalies: vec![],
            }
        }
    };

    let datagrams = match transport.exchange(task.interface, dest, &payload, window) {
        Ok(d) => d,
        Err(_) => {
            return ProbeResult {
                task: task.clone(),
                status: ProbeStatus::NetworkError,
                responses: vec![],
                anomalies: vec![],
            }
        }
    };

    let mut responses = Vec::new();
    let mut anomalies = Vec::new();
    for dg in datagrams {
        let Ok(message) = dns::decode_message(&dg.bytes) else {
            log::debug!("undecodable datagram from {}", dg.source);
            continue;
        };
        if !message.is_response || message.id != task.txid {
            continue;
        }
        let captured = CapturedResponse {
            source: dg.source,
            arrival_offset_ms: dg.offset.as_millis() as u64,
            rcode: message.rcode,
            answers: message.answer_records(),
            raw: dg.bytes,
        };
        let question_matches = message.questions.first().is_some_and(|q| {
            q.name
                .eq_ignore_ascii_case(task.domain.trim_end_matches('.'))
                && q.qtype == task.rrtype.wire_type()
                && q.qclass == dns::CLASS_IN
        });
        if question_matches {
            responses.push(captured);
        } else {
            anomalies.push(captured);
        }
    }

    let status = if responses.is_empty() {
        ProbeStatus::Timeout
    } else {
        ProbeStatus::Answered
    };
    ProbeResult {
        task: task.clone(),
        status,
        responses,
        anomalies,
    }
}

#[derive(Debug, Clone)]
pub struct EngineConfig {
    pub window: Duration,
    pub rate: u32,
    pub concurrency: usize,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            window: Duration::from_millis(2_000),
            rate: 100,
            concurrency: 32,
        }
    }
}

/// Drives a task stream against a transport with many in-flight queries, a
/// global rate cap, and a single result appender in completion order.
pub struct ProbeEngine<'t> {
    transport: &'t dyn QueryTransport,
    config: EngineConfig,
}

impl<'t> ProbeEngine<'t> {
    pub fn new(transport: &'t dyn QueryTransport, config: EngineConfig) -> Self {
        ProbeEngine { transport, config }
    }

    /// Run every task, invoking `on_result` from the calling thread in
    /// completion order. Every planned task yields exactly one result.
    pub fn run<I>(&self, tasks: I, pairs: &[ResolverPair], mut on_result: impl FnMut(ProbeResult))
    where
        I: Iterator<Item = ProbeTask> + Send,
    {
        let limiter = RateLimiter::per_second(self.config.rate);
        let queue = Mutex::new(tasks);
        let (tx, rx) = mpsc::channel::<ProbeResult>();
        let window = self.config.window;

        std::thread::scope(|scope| {
            for _ in 0..self.config.concurrency.max(1) {
                let tx = tx.clone();
                let limiter = &limiter;
                let queue = &queue;
                scope.spawn(move || loop {
                    let task = { queue.lock().unwrap().next() };
                    let Some(task) = task else { break };
                    let Some(pair) = pairs.get(task.pair_id.0 as usize) else {
                        continue;
                    };
                    let dest = match task.interface {
                        Interface::V4 => std::net::IpAddr::V4(pair.v4),
                        Interface::V6 => std::net::IpAddr::V6(pair.v6),
                    };
                    limiter.acquire();
                    let result = execute_query(&task, dest, self.transport, window);
                    if tx.send(result).is_err() {
                        break;
                    }
                });
            }
            drop(tx);
            for result in rx {
                on_result(result);
            }
        });
    }
}

/// Draw a fresh random transaction id (health checks re-randomize per
/// query rather than reusing plan ids).
pub fn random_txid(rng: &mut impl Rng) -> u16 {
    rng.gen()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    fn plan(pairs: usize, domains: &[&str], seed: u64) -> CampaignPlan {
        let mut p = CampaignPlan::new(pairs, domains.iter().map(|s| s.to_string()).collect());
        p.seed = seed;
        p
    }

    #[test]
    fn single_pair_single_domain_enumerates_matrix() {
        let tasks: Vec<ProbeTask> = plan_matrix(&plan(1, &["a.example"], 7)).collect();
        assert_eq!(tasks.len(), 4);
        let mut cells: Vec<(Interface, RrType)> =
            tasks.iter().map(|t| (t.interface, t.rrtype)).collect();
        cells.sort();
        cells.dedup();
        assert_eq!(cells.len(), 4);
    }

    #[test]
    fn counter_matches_iterator_on_small_matrices() {
        for (pairs, domains) in [(1, 1), (2, 3), (5, 4), (13, 7)] {
            let names: Vec<String> = (0..domains).map(|i| format!("d{i}.example")).collect();
            let refs: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
            let p = plan(pairs, &refs, 3);
            assert_eq!(p.total_tasks(), (pairs * domains * 4) as u64);
            assert_eq!(plan_matrix(&p).count() as u64, p.total_tasks());
        }
    }

    #[test]
    fn fairness_every_prefix_within_one() {
        let p = plan(3, &["a.example", "b.example"], 11);
        let mut counts: HashMap<(PairId, Interface), usize> = HashMap::new();
        for (i, task) in plan_matrix(&p).enumerate() {
            *counts.entry((task.pair_id, task.interface)).or_default() += 1;
            let max = counts.values().max().unwrap();
            let endpoint_total = 3 * 2;
            // Endpoints we have not seen yet count as zero.
            let min = if counts.len() < endpoint_total {
                0
            } else {
                *counts.values().min().unwrap()
            };
            assert!(
                max - min <= 1,
                "prefix {} unbalanced: max {max} min {min}",
                i + 1
            );
        }
    }

    #[test]
    fn first_tasks_touch_distinct_endpoints_before_any_repeat() {
        let p = plan(2, &["a.example"], 5);
        let tasks: Vec<ProbeTask> = plan_matrix(&p).collect();
        assert_eq!(tasks.len(), 8);
        let first_four: std::collections::BTreeSet<(u32, Interface)> = tasks[..4]
            .iter()
            .map(|t| (t.pair_id.0, t.interface))
            .collect();
        assert_eq!(first_four.len(), 4);
    }

    #[test]
    fn identical_seed_identical_order() {
        let p = plan(4, &["a.example", "b.example", "c.example"], 99);
        let one: Vec<ProbeTask> = plan_matrix(&p).collect();
        let two: Vec<ProbeTask> = plan_matrix(&p).collect();
        assert_eq!(one, two);
        let mut other = p.clone();
        other.seed = 100;
        let three: Vec<ProbeTask> = plan_matrix(&other).collect();
        assert_ne!(one, three);
    }

    #[test]
    fn survey_scale_counter() {
        let names: Vec<String> = (0..714).map(|i| format!("d{i}.example")).collect();
        let p = CampaignPlan::new(7_843, names);
        assert_eq!(p.total_tasks(), 22_399_608);
    }

    #[test]
    fn rd_flag_propagates() {
        let mut p = plan(1, &["a.example"], 1);
        p.rd_flag = false;
        assert!(plan_matrix(&p).all(|t| !t.rd_flag));
    }
}
