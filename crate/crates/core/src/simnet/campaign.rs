//! End-to-end pipeline over a simulated world: plan the matrix, probe it,
//! classify every result, and hand back the verdicts next to the world's
//! own ground-truth table.

use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::model::ProbeResult;
use crate::probe::{plan_matrix, CampaignPlan, EngineConfig, ProbeEngine, UdpTransport};
use crate::verdict::{classify_censorship, CensorVerdict};

use super::transport::{InProcessTransport, UdpSimHarness};
use super::World;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CampaignOptions {
    pub window_ms: u64,
    pub rate: u32,
    pub concurrency: usize,
    pub seed: u64,
    pub rd_flag: bool,
    pub tls_rounds: u32,
    /// Run over loopback UDP sockets (the production probe path) instead of
    /// the in-process transport.
    pub udp: bool,
}

impl Default for CampaignOptions {
    fn default() -> Self {
        CampaignOptions {
            window_ms: 120,
            rate: 3_000,
            concurrency: 256,
            seed: 1,
            rd_flag: true,
            tls_rounds: 3,
            udp: false,
        }
    }
}

pub struct CampaignOutput {
    pub results: Vec<ProbeResult>,
    pub verdicts: Vec<CensorVerdict>,
    pub truth: Vec<super::TruthRecord>,
}

/// Probe the world's full matrix and classify every result.
///
/// Verdicts are sorted by (pair, domain, interface, record type) so two
/// runs of the same (world, seed) serialize byte-identically regardless of
/// completion order.
pub fn run_campaign(world: &Arc<World>, opts: &CampaignOptions) -> std::io::Result<CampaignOutput> {
    let pairs = world.pairs();
    let mut plan = CampaignPlan::new(pairs.len(), world.measurement_domains());
    plan.window_ms = opts.window_ms;
    plan.rate = opts.rate;
    plan.seed = opts.seed;
    plan.rd_flag = opts.rd_flag;
    plan.controls = world.control_domains();

    let engine_cfg = EngineConfig {
        window: Duration::from_millis(opts.window_ms),
        rate: opts.rate,
        concurrency: opts.concurrency,
    };

    let mut results = Vec::with_capacity(plan.total_tasks() as usize);
    if opts.udp {
        let harness = UdpSimHarness::spawn(world)?;
        let transport = UdpTransport::bind_loopback(harness.router())?;
        let engine = ProbeEngine::new(&transport, engine_cfg);
        engine.run(plan_matrix(&plan), &pairs, |r| results.push(r));
    } else {
        let transport = InProcessTransport::new(world);
        let engine = ProbeEngine::new(&transport, engine_cfg);
        engine.run(plan_matrix(&plan), &pairs, |r| results.push(r));
    }

    let oracle = world.tls_oracle();
    let mut verdicts: Vec<CensorVerdict> = results
        .iter()
        .map(|r| classify_censorship(&r.task, r, &oracle, opts.tls_rounds, &[]))
        .collect();
    verdicts.sort_by(|a, b| {
        (
            a.task.pair_id,
            &a.task.domain,
            a.task.interface,
            a.task.rrtype,
        )
            .cmp(&(
                b.task.pair_id,
                &b.task.domain,
                b.task.interface,
                b.task.rrtype,
            ))
    });

    Ok(CampaignOutput {
        results,
        verdicts,
        truth: world.ground_truth(opts.rd_flag),
    })
}
