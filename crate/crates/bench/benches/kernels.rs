use std::collections::BTreeMap;
use std::net::Ipv4Addr;

use criterion::{black_box, criterion_group, criterion_main, Criterion, Throughput};
use rand::{Rng, SeedableRng};

use dualprobe_core::dns;
use dualprobe_core::model::{classify_v6_kind, decode_probe_label, encode_probe_label, RrType};
use dualprobe_core::probe::{plan_matrix, CampaignPlan};
use dualprobe_core::stats::{
    kl_divergence, shannon_entropy, t_test_two_sample, z_test_two_proportion,
};

fn bench_label_codec(c: &mut Criterion) {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
    let addrs: Vec<Ipv4Addr> = (0..1024)
        .map(|_| Ipv4Addr::from(rng.gen::<u32>()))
        .collect();
    let mut group = c.benchmark_group("label_codec");
    group.throughput(Throughput::Elements(addrs.len() as u64));
    group.bench_function("encode", |b| {
        b.iter(|| {
            for a in &addrs {
                black_box(encode_probe_label(*a, "v6only.example"));
            }
        })
    });
    let encoded: Vec<String> = addrs
        .iter()
        .map(|a| encode_probe_label(*a, "v6only.example"))
        .collect();
    group.bench_function("decode", |b| {
        b.iter(|| {
            for e in &encoded {
                black_box(decode_probe_label(e, "v6only.example").unwrap());
            }
        })
    });
    group.finish();
}

fn bench_dns_codec(c: &mut Criterion) {
    let query = dns::encode_query(0x1234, "some.blocked.example", RrType::Aaaa, true).unwrap();
    let question = dns::Question {
        name: "some.blocked.example".into(),
        qtype: 28,
        qclass: dns::CLASS_IN,
    };
    let response = dns::encode_response(
        0x1234,
        &question,
        true,
        0,
        &[
            dns::AnswerIp {
                ip: "2606:2800::1".parse().unwrap(),
                ttl: 60,
            },
            dns::AnswerIp {
                ip: "93.184.216.34".parse().unwrap(),
                ttl: 60,
            },
        ],
    )
    .unwrap();

    let mut group = c.benchmark_group("dns_codec");
    group.bench_function("encode_query", |b| {
        b.iter(|| dns::encode_query(black_box(0x1234), "some.blocked.example", RrType::A, true))
    });
    group.bench_function("decode_query", |b| {
        b.iter(|| dns::decode_message(black_box(&query)))
    });
    group.bench_function("decode_response", |b| {
        b.iter(|| dns::decode_message(black_box(&response)))
    });
    group.finish();
}

fn bench_v6_classify(c: &mut Criterion) {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
    let addrs: Vec<std::net::Ipv6Addr> = (0..1024)
        .map(|_| std::net::Ipv6Addr::from(rng.gen::<u128>()))
        .collect();
    c.bench_function("classify_v6_kind_1k", |b| {
        b.iter(|| {
            for a in &addrs {
                black_box(classify_v6_kind(*a));
            }
        })
    });
}

fn bench_stats(c: &mut Criterion) {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
    let xs: Vec<f64> = (0..200).map(|_| rng.gen::<f64>()).collect();
    let ys: Vec<f64> = (0..180).map(|_| rng.gen::<f64>()).collect();
    let counts: BTreeMap<u32, u64> = (0..40).map(|k| (k, rng.gen_range(1..500))).collect();
    let other: BTreeMap<u32, u64> = (0..40).map(|k| (k, rng.gen_range(1..500))).collect();

    let mut group = c.benchmark_group("stats");
    group.bench_function("welch_t_200x180", |b| {
        b.iter(|| t_test_two_sample(black_box(&xs), black_box(&ys)))
    });
    group.bench_function("z_two_proportion", |b| {
        b.iter(|| z_test_two_proportion(black_box(240), 714, black_box(15), 714))
    });
    group.bench_function("entropy_40_keys", |b| {
        b.iter(|| shannon_entropy(black_box(&counts)))
    });
    group.bench_function("kl_40_keys", |b| {
        b.iter(|| kl_divergence(black_box(&counts), black_box(&other), 0.0))
    });
    group.finish();
}

fn bench_plan(c: &mut Criterion) {
    let domains: Vec<String> = (0..50).map(|i| format!("d{i:03}.example")).collect();
    let plan = CampaignPlan::new(100, domains);
    let mut group = c.benchmark_group("plan_matrix");
    group.throughput(Throughput::Elements(plan.total_tasks()));
    group.bench_function("stream_20k_tasks", |b| {
        b.iter(|| {
            let mut n = 0u64;
            for task in plan_matrix(&plan) {
                n += black_box(task.txid) as u64;
            }
            n
        })
    });
    group.finish();
}

criterion_group!(
    benches,
    bench_label_codec,
    bench_dns_codec,
    bench_v6_classify,
    bench_stats,
    bench_plan
);
criterion_main!(benches);
