//! Acceptance suite: one test per exit criterion, each printing a PASS line
//! with its measured evidence. Expected values are frozen from independent
//! oracles (quadrature, bisection, hand evaluation) or from the published
//! measurement tables; tolerances are pinned here, not tuned at runtime.

use std::collections::{BTreeMap, BTreeSet};
use std::net::{IpAddr, Ipv4Addr};
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use dualprobe_core::model::{
    classify_v6_kind, decode_probe_label, encode_probe_label, AnswerRecord, CapturedResponse,
    Interface, Ipv6Kind, PairId, ProbeResult, ProbeStatus, ProbeTask, RrType,
};
use dualprobe_core::probe::CampaignPlan;
use dualprobe_core::simnet::presets::{china_aaaa_world, iran_world};
use dualprobe_core::simnet::{run_campaign, CampaignOptions, TruthOutcome, World};
use dualprobe_core::stats::{
    analyze_country, analyze_domains, kl_divergence, shannon_entropy, sidak_alpha,
    t_test_two_sample, z_test_two_proportion, Axis, SidakMode, Stratum, TTestKind,
};
use dualprobe_core::verdict::{
    classify_censorship, FingerprintName, Outcome, TlsOutcome, TlsProber, IRAN_V4_ADDR,
    IRAN_V6_ADDR,
};

// ===========================================================================
// Independent reference oracles (no shared code with the implementation).
// ===========================================================================

/// Lanczos log-gamma (g = 7, 9 coefficients).
fn lgamma(x: f64) -> f64 {
    const COEFFS: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        // Reflection formula.
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - lgamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = COEFFS[0];
    let t = x + 7.5;
    for (i, c) in COEFFS.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

/// Simpson integration with n (even) intervals.
fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let n = if n.is_multiple_of(2) { n } else { n + 1 };
    let h = (b - a) / n as f64;
    let mut sum = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * f(a + i as f64 * h);
    }
    sum * h / 3.0
}

/// Two-sided normal p-value by direct quadrature of the density.
fn normal_p_oracle(z: f64) -> f64 {
    let z = z.abs();
    let phi = |t: f64| (-t * t / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let inner = simpson(phi, 0.0, z, 20_000);
    (1.0 - 2.0 * inner).max(0.0)
}

/// Continued-fraction evaluation of the regularized incomplete beta
/// function I_x(a, b) (Lentz's method).
fn beta_reg(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    // Use the symmetry transform for fast convergence.
    if x > (a + 1.0) / (a + b + 2.0) {
        return 1.0 - beta_reg(b, a, 1.0 - x);
    }
    let ln_front = lgamma(a + b) - lgamma(a) - lgamma(b) + a * x.ln() + b * (1.0 - x).ln();
    let tiny = 1e-300;
    let mut c = 1.0;
    let mut d = 1.0 - (a + b) * x / (a + 1.0);
    if d.abs() < tiny {
        d = tiny;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..400 {
        let m = m as f64;
        let m2 = 2.0 * m;
        // Even step.
        let num = m * (b - m) * x / ((a + m2 - 1.0) * (a + m2));
        d = 1.0 + num * d;
        if d.abs() < tiny {
            d = tiny;
        }
        d = 1.0 / d;
        c = 1.0 + num / c;
        if c.abs() < tiny {
            c = tiny;
        }
        h *= d * c;
        // Odd step.
        let num = -(a + m) * (a + b + m) * x / ((a + m2) * (a + m2 + 1.0));
        d = 1.0 + num * d;
        if d.abs() < tiny {
            d = tiny;
        }
        d = 1.0 / d;
        c = 1.0 + num / c;
        if c.abs() < tiny {
            c = tiny;
        }
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < 1e-15 {
            break;
        }
    }
    (ln_front.exp() * h / a).clamp(0.0, 1.0)
}

/// Two-sided Student-t p-value. Inside the bulk the density is integrated
/// directly (smooth integrand, no substitutions); in the far tail the
/// incomplete-beta route takes over. Where both apply they are
/// cross-checked, so the oracle validates itself.
fn t_p_oracle(t: f64, df: f64) -> f64 {
    let t = t.abs();
    let p_beta = beta_reg(df / 2.0, 0.5, df / (df + t * t));
    if t <= 30.0 {
        let log_norm =
            lgamma((df + 1.0) / 2.0) - lgamma(df / 2.0) - 0.5 * (df * std::f64::consts::PI).ln();
        let pdf = |x: f64| (log_norm - (df + 1.0) / 2.0 * (1.0 + x * x / df).ln()).exp();
        let p_quad = (1.0 - 2.0 * simpson(pdf, 0.0, t, 40_000)).clamp(0.0, 1.0);
        assert!(
            (p_quad - p_beta).abs() <= 1e-9,
            "oracle self-check failed: quadrature {p_quad} vs incomplete beta {p_beta} (t={t}, df={df})"
        );
        p_quad
    } else {
        p_beta
    }
}

/// Solve (1 - x)^n = target for x by bisection.
fn sidak_bisection(target: f64, n: u32) -> f64 {
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = (lo + hi) / 2.0;
        if (1.0 - mid).powi(n as i32) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo + hi) / 2.0
}

// ===========================================================================
// Fixture: published per-country rates (pairs, V4·A, V4·AAAA, V6·A,
// V6·AAAA, avg), one row per country plus arithmetic checked against the
// published global means.
// ===========================================================================

struct RateRow {
    country: String,
    cells: [f64; 4],
    avg: f64,
}

fn load_rate_fixture() -> Vec<RateRow> {
    let path = concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/tests/fixtures/country_rates.csv"
    );
    let mut rows = Vec::new();
    for line in std::fs::read_to_string(path).unwrap().lines().skip(1) {
        let parts: Vec<&str> = line.split(',').collect();
        rows.push(RateRow {
            country: parts[0].to_string(),
            cells: [
                parts[2].parse().unwrap(),
                parts[3].parse().unwrap(),
                parts[4].parse().unwrap(),
                parts[5].parse().unwrap(),
            ],
            avg: parts[6].parse().unwrap(),
        });
    }
    rows
}

// ===========================================================================
// Criterion 1: matrix cardinality.
// ===========================================================================

#[test]
fn criterion_01_matrix_cardinality() {
    let started = Instant::now();
    let domains: Vec<String> = (0..714).map(|i| format!("d{i}.example")).collect();
    let plan = CampaignPlan::new(7_843, domains);
    assert_eq!(plan.total_tasks(), 22_399_608);

    // The counter agrees with the materialized stream at small scale.
    for (pairs, domains) in [(3usize, 5usize), (11, 2), (1, 1)] {
        let names: Vec<String> = (0..domains).map(|i| format!("d{i}.example")).collect();
        let small = CampaignPlan::new(pairs, names);
        assert_eq!(
            dualprobe_core::probe::plan_matrix(&small).count() as u64,
            small.total_tasks()
        );
    }
    let elapsed = started.elapsed();
    assert!(elapsed < Duration::from_secs(1), "took {elapsed:?}");
    println!("criterion 1 PASS: 7,843 pairs x 714 domains -> 22,399,608 tasks ({elapsed:?})");
}

// ===========================================================================
// Criterion 2: reproduction of the published per-country difference tables
// from the rate fixture.
// ===========================================================================

/// Which pair of fixture cells a stratum compares (first, second), where a
/// stratum over "All" averages the two cells of each side.
fn stratum_rates(row: &RateRow, axis: Axis, stratum: Stratum) -> (f64, f64) {
    let [v4a, v4aaaa, v6a, v6aaaa] = row.cells;
    match (axis, stratum) {
        (Axis::RrType, Stratum::V4Only) => (v4a, v4aaaa),
        (Axis::RrType, Stratum::V6Only) => (v6a, v6aaaa),
        (Axis::RrType, Stratum::All) => ((v4a + v6a) / 2.0, (v4aaaa + v6aaaa) / 2.0),
        (Axis::Interface, Stratum::AOnly) => (v4a, v6a),
        (Axis::Interface, Stratum::AaaaOnly) => (v4aaaa, v6aaaa),
        (Axis::Interface, Stratum::All) => ((v4a + v4aaaa) / 2.0, (v6a + v6aaaa) / 2.0),
        _ => unreachable!(),
    }
}

#[test]
fn criterion_02_published_diff_tables_reproduce() {
    let started = Instant::now();
    let rows: BTreeMap<String, RateRow> = load_rate_fixture()
        .into_iter()
        .map(|r| (r.country.clone(), r))
        .collect();

    // (country, stratum, expected pp, expected pct). Record-type axis.
    let rrtype_expect: &[(&str, Stratum, f64, f64)] = &[
        ("TH", Stratum::V4Only, -7.1, -85.7),
        ("TH", Stratum::All, -3.7, -77.5),
        ("BD", Stratum::V4Only, -5.1, -80.0),
        ("BD", Stratum::All, -2.6, -71.3),
        ("PK", Stratum::V4Only, -2.1, -57.6),
        ("PK", Stratum::V6Only, -2.8, -59.8),
        ("PK", Stratum::All, -2.5, -58.9),
        ("CL", Stratum::V4Only, -2.0, -73.6),
        ("CL", Stratum::All, -1.1, -60.2),
        ("VN", Stratum::V6Only, -0.7, -52.5),
        ("VN", Stratum::All, -0.7, -47.1),
        ("KR", Stratum::V4Only, -1.3, -54.6),
        ("KR", Stratum::All, -0.6, -36.2),
        ("CN", Stratum::V4Only, 3.1, 10.4),
        ("CN", Stratum::V6Only, 3.7, 12.9),
        ("CN", Stratum::All, 3.4, 11.7),
        ("US", Stratum::V4Only, -0.5, -33.2),
        ("MY", Stratum::V4Only, -2.9, -58.9),
    ];
    // Interface axis.
    let interface_expect: &[(&str, Stratum, f64, f64)] = &[
        ("TH", Stratum::AOnly, -7.1, -86.3),
        ("TH", Stratum::All, -3.7, -78.1),
        ("IR", Stratum::AOnly, -3.2, -12.6),
        ("IR", Stratum::AaaaOnly, -3.0, -12.5),
        ("IR", Stratum::All, -3.1, -12.5),
        ("BD", Stratum::AOnly, -5.5, -86.1),
        ("BD", Stratum::All, -3.0, -77.9),
        ("MY", Stratum::AOnly, -3.6, -74.2),
        ("MY", Stratum::All, -2.1, -62.3),
        ("US", Stratum::AOnly, -0.9, -64.8),
        ("US", Stratum::All, -0.5, -42.6),
        ("KR", Stratum::AOnly, -1.1, -46.5),
        ("CL", Stratum::AOnly, -1.6, -58.7),
    ];

    let mut checked = 0;
    for (axis, table) in [
        (Axis::RrType, rrtype_expect),
        (Axis::Interface, interface_expect),
    ] {
        for (country, stratum, want_pp, want_pct) in table {
            let row = &rows[*country];
            let (a, b) = stratum_rates(row, axis, *stratum);
            let (pp, pct) = dualprobe_core::stats::diff_with_pct(a, b).unwrap();
            assert!(
                (pp - want_pp).abs() <= 0.1,
                "{country} {stratum:?}: pp {pp:.3} vs published {want_pp}"
            );
            assert!(
                (pct - want_pct).abs() <= 0.6,
                "{country} {stratum:?}: pct {pct:.2} vs published {want_pct}"
            );
            checked += 1;
        }
    }

    // US record-type axis, IPv6 stratum: the published +72.3% cannot be
    // pinned to ±0.6 from two-decimal inputs (0.49 and 0.85); verify the
    // published value and the recomputed one fall inside the exact interval
    // the displayed precision allows, and hold the pp to the usual bound.
    let us = &rows["US"];
    let (a, b) = stratum_rates(us, Axis::RrType, Stratum::V6Only);
    let (pp, pct) = dualprobe_core::stats::diff_with_pct(a, b).unwrap();
    assert!((pp - 0.4).abs() <= 0.1);
    let lo = 100.0 * ((b - 0.005) - (a + 0.005)) / (a + 0.005);
    let hi = 100.0 * ((b + 0.005) - (a - 0.005)) / (a - 0.005);
    assert!(
        (lo..=hi).contains(&72.3),
        "published 72.3 outside [{lo:.2},{hi:.2}]"
    );
    assert!((lo..=hi).contains(&pct));
    checked += 1;

    let elapsed = started.elapsed();
    assert!(elapsed < Duration::from_secs(1));
    println!(
        "criterion 2 PASS: {checked} published table entries reproduced within ±0.1 pp / ±0.6% ({elapsed:?})"
    );
}

// ===========================================================================
// Criterion 3: global row of unweighted column means.
// ===========================================================================

#[test]
fn criterion_03_global_row_reproduces() {
    let started = Instant::now();
    let rows = load_rate_fixture();
    let expected = [3.10, 1.83, 1.77, 1.60];
    for (i, want) in expected.iter().enumerate() {
        let mean = rows.iter().map(|r| r.cells[i]).sum::<f64>() / rows.len() as f64;
        assert!(
            (mean - want).abs() <= 0.01,
            "column {i}: mean {mean:.4} vs published {want}"
        );
    }
    let avg_mean = rows.iter().map(|r| r.avg).sum::<f64>() / rows.len() as f64;
    assert!(
        (avg_mean - 2.07).abs() <= 0.01,
        "avg column mean {avg_mean:.4}"
    );

    // The same numbers drop out of the RateTable aggregation path.
    let table = dualprobe_core::stats::RateTable::from_country_rows(
        rows.iter()
            .map(|r| {
                dualprobe_core::stats::CountryRates::from_cells(
                    &r.country,
                    0,
                    [
                        Some(r.cells[0]),
                        Some(r.cells[1]),
                        Some(r.cells[2]),
                        Some(r.cells[3]),
                    ],
                )
            })
            .collect(),
    );
    for (i, want) in expected.iter().enumerate() {
        assert!((table.global.cells[i].unwrap() - want).abs() <= 0.01);
    }
    let elapsed = started.elapsed();
    assert!(elapsed < Duration::from_secs(1));
    println!(
        "criterion 3 PASS: global row 3.10/1.83/1.77/1.60/2.07 reproduced within ±0.01 ({elapsed:?})"
    );
}

// ===========================================================================
// Criterion 4: Šidák thresholds against bisection oracles.
// ===========================================================================

#[test]
fn criterion_04_sidak_thresholds() {
    let standard = sidak_alpha(0.05, 106, SidakMode::Standard);
    let literal = sidak_alpha(0.05, 106, SidakMode::Literal);

    // Bisection oracles: (1-t)^106 = 0.95 and (1-t)^106 = 0.05.
    let standard_oracle = sidak_bisection(0.95, 106);
    let literal_oracle = sidak_bisection(0.05, 106);
    assert!((standard - standard_oracle).abs() <= 1e-6);
    assert!((literal - literal_oracle).abs() <= 1e-6);

    // Published constants at their displayed precision (4.838e-4 is a
    // rounded display; 2.786e-2 a truncated one).
    assert!((standard - 4.838e-4).abs() <= 1e-6);
    assert!((literal - 2.786e-2).abs() <= 1e-5);

    println!(
        "criterion 4 PASS: sidak standard={standard:.6e} literal={literal:.6e} match bisection oracles within 1e-6"
    );
}

// ===========================================================================
// Criterion 5: statistical oracle equivalence on randomized small inputs.
// ===========================================================================

#[test]
fn criterion_05_statistical_oracle_equivalence() {
    let mut rng = ChaCha8Rng::seed_from_u64(50_505);
    let mut t_checked = 0;
    let mut z_checked = 0;
    let mut degenerate = 0;

    while t_checked < 1_000 {
        let n1 = rng.gen_range(2..=12);
        let n2 = rng.gen_range(2..=12);
        // Censored-fraction-like samples on a coarse grid so degenerate
        // draws occur too.
        let xs: Vec<f64> = (0..n1)
            .map(|_| rng.gen_range(0..=10) as f64 / 10.0)
            .collect();
        let ys: Vec<f64> = (0..n2)
            .map(|_| rng.gen_range(0..=10) as f64 / 10.0)
            .collect();
        let fwd = t_test_two_sample(&xs, &ys).unwrap();
        let rev = t_test_two_sample(&ys, &xs).unwrap();
        // Antisymmetry under group swap is exact.
        assert_eq!(fwd.t, -rev.t);
        assert_eq!(fwd.p, rev.p);
        if fwd.degenerate {
            degenerate += 1;
            if fwd.t == 0.0 {
                assert_eq!(fwd.p, 1.0);
            } else {
                assert_eq!(fwd.p, 0.0);
            }
            continue;
        }
        let oracle = t_p_oracle(fwd.t, fwd.df);
        assert!(
            (fwd.p - oracle).abs() <= 1e-6,
            "welch p {} vs oracle {} (t={}, df={})",
            fwd.p,
            oracle,
            fwd.t,
            fwd.df
        );
        t_checked += 1;
    }

    while z_checked < 1_000 {
        let n1 = rng.gen_range(1..=20u64);
        let n2 = rng.gen_range(1..=20u64);
        let x1 = rng.gen_range(0..=n1);
        let x2 = rng.gen_range(0..=n2);
        let fwd = z_test_two_proportion(x1, n1, x2, n2);
        let rev = z_test_two_proportion(x2, n2, x1, n1);
        match (fwd, rev) {
            (Ok(f), Ok(r)) => {
                assert_eq!(f.z, -r.z);
                assert_eq!(f.p, r.p);
                let oracle = normal_p_oracle(f.z);
                assert!(
                    (f.p - oracle).abs() <= 1e-6,
                    "z p {} vs oracle {} (z={})",
                    f.p,
                    oracle,
                    f.z
                );
                z_checked += 1;
            }
            (Err(_), Err(_)) => {}
            other => panic!("swap changed applicability: {other:?}"),
        }
    }

    println!(
        "criterion 5 PASS: 1000 t and 1000 z p-values match quadrature oracles within 1e-6 ({degenerate} degenerate draws pinned)"
    );
}

// ===========================================================================
// Criterion 6: entropy/KL properties and hand-derived fixtures.
// ===========================================================================

#[test]
fn criterion_06_entropy_kl_properties() {
    let mut rng = ChaCha8Rng::seed_from_u64(60_606);
    for _ in 0..10_000 {
        let k = rng.gen_range(1..=12usize);
        let mut p: BTreeMap<u32, u64> = BTreeMap::new();
        let mut q: BTreeMap<u32, u64> = BTreeMap::new();
        for key in 0..k as u32 {
            let pc = rng.gen_range(0..=20u64);
            if pc > 0 {
                p.insert(key, pc);
            }
            // q keeps full support so KL(p ‖ q) is defined without
            // smoothing.
            q.insert(key, rng.gen_range(1..=20u64));
        }
        if p.is_empty() {
            p.insert(0, 1);
        }

        let s = shannon_entropy(&p);
        let distinct = p.len() as f64;
        assert!(s >= -1e-12, "entropy negative: {s}");
        assert!(
            s <= distinct.log2() + 1e-9,
            "entropy {s} above log2({distinct})"
        );

        let self_kl = kl_divergence(&p, &p, 0.0).unwrap();
        assert!(self_kl.abs() <= 1e-12);

        let kl = kl_divergence(&p, &q, 0.0).unwrap();
        assert!(kl >= 0.0);
    }

    // Hand-derived fixtures.
    let p31: BTreeMap<&str, u64> = BTreeMap::from([("a", 3), ("b", 1)]);
    assert!((shannon_entropy(&p31) - 0.8113).abs() <= 1e-4);
    let q11: BTreeMap<&str, u64> = BTreeMap::from([("a", 1), ("b", 1)]);
    assert!((kl_divergence(&p31, &q11, 0.0).unwrap() - 0.1887).abs() <= 1e-4);

    println!("criterion 6 PASS: 10,000 random count maps satisfy entropy/KL bounds; fixtures 0.8113 and 0.1887 within 1e-4");
}

// ===========================================================================
// Criterion 7: Iran-model world end-to-end over the production UDP path.
// ===========================================================================

#[test]
fn criterion_07_iran_world_end_to_end() {
    let started = Instant::now();
    // Quick response schedule: the verdicts are timing-independent, and a
    // short schedule keeps the responders far inside the listen window even
    // on small, heavily loaded CI hosts.
    let mut config = iran_world(50, 40, 777);
    config.latency = dualprobe_core::simnet::LatencyModel {
        base_delay_ms: 3,
        jitter_ms: 2,
        injected_lead_ms: 2,
        injected_first: true,
    };
    let world = Arc::new(World::build(config).unwrap());
    let pairs = world.pairs();
    assert_eq!(pairs.len(), 50);
    assert_eq!(world.measurement_domains().len(), 40);

    // Run the pipeline over loopback UDP (the production probe path).
    let udp_opts = CampaignOptions {
        udp: true,
        window_ms: 300,
        rate: 2_500,
        concurrency: 150,
        seed: 777,
        ..CampaignOptions::default()
    };
    let out = run_campaign(&world, &udp_opts).unwrap();
    assert_eq!(out.verdicts.len(), 50 * 40 * 4);

    // Exact ground-truth match, cell by cell.
    let truth: BTreeMap<_, _> = out
        .truth
        .iter()
        .map(|t| {
            (
                (t.pair_id, t.domain.clone(), t.interface, t.rrtype),
                t.outcome,
            )
        })
        .collect();
    let mut censored_cells = 0;
    for v in &out.verdicts {
        let key = (
            v.task.pair_id,
            v.task.domain.clone(),
            v.task.interface,
            v.task.rrtype,
        );
        let got = match &v.outcome {
            Outcome::Censored => TruthOutcome::Censored,
            Outcome::Accessible => TruthOutcome::Accessible,
            Outcome::Inconclusive { .. } => TruthOutcome::Inconclusive,
        };
        assert_eq!(
            got, truth[&key],
            "verdict disagrees with ground truth at {key:?}"
        );
        if got == TruthOutcome::Censored {
            censored_cells += 1;
        }
    }
    assert!(censored_cells > 0, "world produced no censorship");

    // Every verdict whose answers contain an injected address carries the
    // matching fingerprint, and every censored verdict is fingerprinted.
    for v in &out.verdicts {
        let has_iran_v4 = v.answer_ips.contains(&IpAddr::V4(IRAN_V4_ADDR));
        let has_iran_v6 = v.answer_ips.contains(&IpAddr::V6(IRAN_V6_ADDR));
        if has_iran_v4 {
            assert_eq!(
                v.fingerprint.as_ref().map(|f| &f.name),
                Some(&FingerprintName::IranV4)
            );
        } else if has_iran_v6 {
            assert_eq!(
                v.fingerprint.as_ref().map(|f| &f.name),
                Some(&FingerprintName::IranV6)
            );
        }
        if v.outcome.is_censored() {
            assert!(
                matches!(
                    v.fingerprint.as_ref().map(|f| &f.name),
                    Some(FingerprintName::IranV4) | Some(FingerprintName::IranV6)
                ),
                "censored verdict without injector fingerprint"
            );
        }
    }

    // Direct 6to4 probes with RD unset see zero censorship.
    let rd0_opts = CampaignOptions {
        rd_flag: false,
        seed: 778,
        ..CampaignOptions::default()
    };
    let rd0 = run_campaign(&world, &rd0_opts).unwrap();
    for v in &rd0.verdicts {
        let pair = &pairs[v.task.pair_id.0 as usize];
        if pair.v6_kind.is_six_to_four() && v.task.interface == Interface::V6 {
            assert!(
                !v.outcome.is_censored(),
                "RD=0 6to4 direct path censored at {:?}",
                v.task
            );
        }
    }

    // The interface-axis country analysis flags IR as significant, with
    // IPv6 censored less.
    let analysis = analyze_country(
        &out.verdicts,
        &pairs,
        Axis::Interface,
        0.05,
        SidakMode::Standard,
        TTestKind::Welch,
    );
    let all = analysis
        .findings
        .iter()
        .find(|f| f.country == "IR" && f.stratum == Stratum::All)
        .expect("IR finding");
    assert!(
        all.significant,
        "interface difference not significant (p={})",
        all.p_value
    );
    assert!(all.pp < 0.0, "expected IPv6 below IPv4, pp={}", all.pp);

    // Deterministic under a fixed seed: the in-process transport serializes
    // to the same bytes as the UDP run.
    let inproc = run_campaign(
        &world,
        &CampaignOptions {
            udp: false,
            ..udp_opts.clone()
        },
    )
    .unwrap();
    assert_eq!(
        serde_json::to_string(&out.verdicts).unwrap(),
        serde_json::to_string(&inproc.verdicts).unwrap()
    );

    let elapsed = started.elapsed();
    assert!(elapsed < Duration::from_secs(60), "took {elapsed:?}");
    println!(
        "criterion 7 PASS: 8,000-cell iran-model campaign matched ground truth exactly; {censored_cells} censored cells, fingerprints attached, RD=0 6to4 clean, interface gap significant (p={:.2e}) ({elapsed:?})",
        all.p_value
    );
}

// ===========================================================================
// Criterion 8: China-model AAAA preference and exact inconsistent-domain
// recovery.
// ===========================================================================

#[test]
fn criterion_08_china_world_aaaa_preference() {
    let started = Instant::now();
    let world = Arc::new(World::build(china_aaaa_world(40, 100, 21, 29, 888)).unwrap());
    let pairs = world.pairs();
    let out = run_campaign(
        &world,
        &CampaignOptions {
            seed: 888,
            ..CampaignOptions::default()
        },
    )
    .unwrap();

    let table = dualprobe_core::stats::blocking_rates(&out.verdicts, &pairs);
    let cn = table.rows.iter().find(|r| r.country == "CN").unwrap();
    assert!(
        cn.cells[1].unwrap() > cn.cells[0].unwrap(),
        "IPv4 AAAA rate {} not above A rate {}",
        cn.cells[1].unwrap(),
        cn.cells[0].unwrap()
    );
    assert!(
        cn.cells[3].unwrap() > cn.cells[2].unwrap(),
        "IPv6 AAAA rate {} not above A rate {}",
        cn.cells[3].unwrap(),
        cn.cells[2].unwrap()
    );

    let categories = dualprobe_core::enrich::CsvCategoryFixture::from_pairs(&[]);
    let analysis = analyze_domains(
        &out.verdicts,
        &pairs,
        &categories,
        Axis::RrType,
        0.05,
        SidakMode::Standard,
        0.0,
    );
    let cn_report = analysis
        .per_country
        .iter()
        .find(|r| r.country == "CN")
        .unwrap();
    let expected: BTreeSet<String> = world.measurement_domains()[..21].iter().cloned().collect();
    let got: BTreeSet<String> = cn_report.inconsistent.iter().cloned().collect();
    assert_eq!(got, expected, "inconsistent-domain set mismatch");

    let elapsed = started.elapsed();
    assert!(elapsed < Duration::from_secs(60), "took {elapsed:?}");
    println!(
        "criterion 8 PASS: AAAA rates strictly above A on both interfaces; exactly the 21 AAAA-only domains recovered ({elapsed:?})"
    );
}

// ===========================================================================
// Criterion 9: conservatism under fuzzed probe results.
// ===========================================================================

/// Deterministic per-IP prober with mixed outcomes.
struct HashProber {
    seed: u64,
}

impl TlsProber for HashProber {
    fn verify(&self, ip: IpAddr, sni: &str) -> TlsOutcome {
        use std::hash::{Hash, Hasher};
        let mut h = std::collections::hash_map::DefaultHasher::new();
        self.seed.hash(&mut h);
        ip.hash(&mut h);
        sni.hash(&mut h);
        match h.finish() % 10 {
            0 | 1 => TlsOutcome::Verified,
            2 => TlsOutcome::Unavailable("fuzz outage".into()),
            _ => TlsOutcome::Failed("fuzz failure".into()),
        }
    }
}

#[test]
fn criterion_09_conservatism_under_fuzz() {
    let mut rng = ChaCha8Rng::seed_from_u64(90_909);
    let rounds = 3;
    let mut censored_seen = 0;
    for case in 0..10_000 {
        let status = match rng.gen_range(0..5) {
            0 => ProbeStatus::Timeout,
            1 => ProbeStatus::NetworkError,
            _ => ProbeStatus::Answered,
        };
        let task = ProbeTask {
            pair_id: PairId(rng.gen_range(0..8)),
            interface: if rng.gen() {
                Interface::V4
            } else {
                Interface::V6
            },
            rrtype: if rng.gen() { RrType::A } else { RrType::Aaaa },
            domain: format!("fuzz-{}.example", rng.gen_range(0..50u32)),
            rd_flag: true,
            txid: rng.gen(),
        };
        let n_responses = if status == ProbeStatus::Answered {
            rng.gen_range(0..3)
        } else {
            0
        };
        let responses: Vec<CapturedResponse> = (0..n_responses)
            .map(|_| {
                let rcode = *[0u8, 0, 0, 2, 3, 5].get(rng.gen_range(0..6)).unwrap();
                let n_answers = rng.gen_range(0..4);
                let answers: Vec<AnswerRecord> = (0..n_answers)
                    .map(|_| {
                        let rtype = *[1u16, 28, 16].get(rng.gen_range(0..3)).unwrap();
                        let malformed = rng.gen_bool(0.2);
                        let rdata = if malformed {
                            (0..rng.gen_range(0..9)).map(|_| rng.gen()).collect()
                        } else {
                            match rtype {
                                1 => {
                                    let ip = Ipv4Addr::from(rng.gen::<u32>());
                                    ip.octets().to_vec()
                                }
                                28 => {
                                    let ip = std::net::Ipv6Addr::from(rng.gen::<u128>());
                                    ip.octets().to_vec()
                                }
                                _ => b"text".to_vec(),
                            }
                        };
                        AnswerRecord {
                            name: task.domain.clone(),
                            rtype,
                            rdata,
                        }
                    })
                    .collect();
                CapturedResponse {
                    source: IpAddr::V4(Ipv4Addr::new(192, 0, 2, 1)),
                    arrival_offset_ms: rng.gen_range(0..100),
                    rcode,
                    answers,
                    raw: vec![],
                }
            })
            .collect();
        let result = ProbeResult {
            task: task.clone(),
            status,
            responses,
            anomalies: vec![],
        };

        let prober = HashProber { seed: case };
        let verdict = classify_censorship(&task, &result, &prober, rounds, &[]);

        if verdict.outcome.is_censored() {
            censored_seen += 1;
            assert!(
                !verdict.answer_ips.is_empty(),
                "censored without any answered IP"
            );
            assert_eq!(
                verdict.tls_attempts.len(),
                rounds as usize * verdict.answer_ips.len(),
                "censored without full verification rounds"
            );
            assert!(
                verdict
                    .tls_attempts
                    .iter()
                    .all(|a| matches!(a.outcome, TlsOutcome::Failed(_))),
                "censored verdict with a non-failure attempt"
            );
        }
        if verdict.answer_ips.is_empty() {
            assert!(matches!(verdict.outcome, Outcome::Inconclusive { .. }));
        }
    }
    assert!(censored_seen > 0, "fuzz never exercised the censored path");
    println!(
        "criterion 9 PASS: 10,000 fuzzed probe results; every censored verdict had answered IPs failing all {rounds} rounds ({censored_seen} censored)"
    );
}

// ===========================================================================
// Criterion 10: probe-label codec round-trip and 6to4 extraction.
// ===========================================================================

#[test]
fn criterion_10_codec_and_6to4_invariants() {
    let mut rng = ChaCha8Rng::seed_from_u64(101_010);
    let zones = ["v6onlyNS.io", "probe.example", "a.b.c.example"];
    for _ in 0..10_000 {
        let addr = Ipv4Addr::from(rng.gen::<u32>());
        let zone = zones[rng.gen_range(0..zones.len())];
        let encoded = encode_probe_label(addr, zone);
        assert!(encoded.split('.').next().unwrap().len() <= 63);
        assert_eq!(decode_probe_label(&encoded, zone), Ok(addr));
    }

    assert_eq!(
        classify_v6_kind("2002:102:304::".parse().unwrap()),
        Ipv6Kind::SixToFour {
            embedded: Ipv4Addr::new(1, 2, 3, 4),
            invalid_embedded: false
        }
    );
    println!(
        "criterion 10 PASS: 10,000 random addresses round-trip the label codec; 2002:102:304:: embeds 1.2.3.4"
    );
}
