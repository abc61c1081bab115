//! `dualprobe`: pipeline driver for dual-stack DNS censorship measurement.
//!
//! Subcommands mirror the measurement pipeline: discover resolver pairs,
//! vet target domains, probe the query matrix, classify censorship,
//! analyze the verdicts, render report tables, and simulate a censored
//! network end to end.

use std::collections::BTreeSet;
use std::net::IpAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use dualprobe_core::discovery::{self, pcap, NsLogEntry};
use dualprobe_core::domainvet::{self, VetOptions, VetOutcome};
use dualprobe_core::enrich::{CsvCategoryFixture, Enrichment, IpDataset, IpDatasetKind};
use dualprobe_core::jsonl::{read_jsonl, write_jsonl};
use dualprobe_core::model::{ProbeResult, ResolverPair};
use dualprobe_core::probe::{
    plan_matrix, CampaignPlan, EngineConfig, Port53Router, ProbeEngine, UdpTransport,
};
use dualprobe_core::report::{render_diff_table, render_rate_table, RunManifest, TableFormat};
use dualprobe_core::simnet::{self, presets, CampaignOptions, World};
use dualprobe_core::stats::{
    analyze_country, analyze_domains, analyze_resolvers, blocking_rates, blocking_rates_filtered,
    Axis, PairFilter, SidakMode, TTestKind,
};
use dualprobe_core::tls::HandshakeProber;
use dualprobe_core::verdict::{classify_censorship, CensorVerdict, TlsProber};

/// Exit codes: 0 success, 1 operational error, 2 invalid input.
enum AppError {
    Invalid(String),
    Operational(anyhow::Error),
}

impl From<anyhow::Error> for AppError {
    fn from(e: anyhow::Error) -> Self {
        AppError::Operational(e)
    }
}

fn invalid(msg: impl Into<String>) -> AppError {
    AppError::Invalid(msg.into())
}

#[derive(Parser)]
#[command(
    name = "dualprobe",
    version,
    about = "Dual-stack DNS censorship measurement pipeline"
)]
struct Cli {
    /// Write the run manifest (input checksums + tunables) to this file.
    #[arg(long, global = true)]
    manifest: Option<PathBuf>,

    /// Seed for every random choice in the stage.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// error | warn | info | debug | trace
    #[arg(long, global = true, default_value = "info")]
    log_level: String,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Correlate nameserver sightings into filtered dual-stack resolver pairs.
    Discover(DiscoverArgs),
    /// Select target domains with valid A+AAAA records and verifiable TLS.
    Vet(VetArgs),
    /// Execute the {A,AAAA} x {IPv4,IPv6} query matrix against resolver pairs.
    Probe(ProbeArgs),
    /// Classify probe results into censorship verdicts via TLS verification.
    Classify(ClassifyArgs),
    /// Run the statistical analyses over a verdict set.
    Analyze(AnalyzeArgs),
    /// Render rate and difference tables from verdicts and findings.
    Report(ReportArgs),
    /// Build a simulated censored network and run the full pipeline in it.
    Simulate(SimulateArgs),
}

#[derive(Args)]
struct DiscoverArgs {
    /// Measurement zone the probe labels were encoded under.
    #[arg(long)]
    zone: String,
    /// Optional IPv4 candidate list (one address per line); sightings whose
    /// decoded v4 is not in the list are dropped.
    #[arg(long)]
    candidates: Option<PathBuf>,
    /// Nameserver sightings: JSONL (fqdn, src, ts) or a legacy pcap capture.
    #[arg(long)]
    nslog: PathBuf,
    /// Geolocation dataset (.mmdb or .csv). Env: DUALPROBE_GEO_DB.
    #[arg(long, env = "DUALPROBE_GEO_DB")]
    geo: PathBuf,
    /// ASN dataset (.mmdb or .csv). Env: DUALPROBE_ASN_DB.
    #[arg(long, env = "DUALPROBE_ASN_DB")]
    asn: Option<PathBuf>,
    /// Connection-type dataset (.mmdb or .csv). Env: DUALPROBE_CONN_DB.
    #[arg(long, env = "DUALPROBE_CONN_DB")]
    conn: Option<PathBuf>,
    /// Candidates sharing one v6 address beyond this count are pruned as
    /// infrastructure.
    #[arg(long, default_value_t = 1)]
    max_shared_v6: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct VetArgs {
    /// Candidate domain list, one FQDN per line.
    #[arg(long)]
    domains: PathBuf,
    /// Comma-separated trusted resolver addresses.
    #[arg(long, default_value = "8.8.8.8,8.8.4.4,1.1.1.1,1.0.0.1")]
    resolvers: String,
    /// TLS trust store: "system" or a PEM bundle path.
    #[arg(long, default_value = "system")]
    trust: String,
    /// DNS listen window per query.
    #[arg(long, default_value_t = 2_000)]
    window_ms: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ProbeArgs {
    #[arg(long)]
    pairs: PathBuf,
    /// Vetted domain JSONL (or a plain list, one FQDN per line).
    #[arg(long)]
    domains: PathBuf,
    /// Global queries-per-second cap.
    #[arg(long, default_value_t = 100)]
    rate: u32,
    #[arg(long, default_value_t = 2_000)]
    window_ms: u64,
    #[arg(long, default_value_t = 64)]
    concurrency: usize,
    /// Clear the recursion-desired flag on measurement queries.
    #[arg(long)]
    no_rd: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ClassifyArgs {
    #[arg(long)]
    results: PathBuf,
    #[arg(long, default_value_t = 3)]
    rounds: u32,
    /// TLS trust store: "system" or a PEM bundle path.
    #[arg(long, default_value = "system")]
    trust: String,
    /// Global TLS handshake rate cap per second.
    #[arg(long, default_value_t = 50)]
    tls_rate: u32,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum AxisArg {
    Rrtype,
    Interface,
}

#[derive(Clone, Copy, ValueEnum)]
enum SidakArg {
    Standard,
    Paper,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[arg(long)]
    verdicts: PathBuf,
    #[arg(long)]
    pairs: PathBuf,
    #[arg(long, value_enum)]
    axis: AxisArg,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, value_enum, default_value = "standard")]
    sidak: SidakArg,
    /// Use the pooled-variance t-test instead of Welch's.
    #[arg(long)]
    pooled: bool,
    /// Additive smoothing for KL divergences (0 = strict support check).
    #[arg(long, default_value_t = 0.0)]
    epsilon: f64,
    /// Domain category dataset (domain,category CSV). Env: DUALPROBE_CATEGORY_DB.
    #[arg(long, env = "DUALPROBE_CATEGORY_DB")]
    categories: Option<PathBuf>,
    /// Output directory for findings JSONL files.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Markdown,
}

#[derive(Clone, Copy, ValueEnum)]
enum BreakdownArg {
    ConnType,
    V6Kind,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long)]
    verdicts: PathBuf,
    #[arg(long)]
    pairs: PathBuf,
    /// Country findings JSONL produced by `analyze` (enables the diff table).
    #[arg(long)]
    findings: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: FormatArg,
    /// Include all-ns countries in the diff table.
    #[arg(long)]
    include_ns: bool,
    /// Also render per-population rate tables.
    #[arg(long, value_enum)]
    breakdown: Option<BreakdownArg>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SimulateArgs {
    /// World config JSON; mutually exclusive with --preset.
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Built-in censor model: iran | china-aaaa | thailand-central | clean.
    #[arg(long)]
    preset: Option<String>,
    #[arg(long, default_value_t = 50)]
    resolvers: usize,
    #[arg(long, default_value_t = 40)]
    domains: usize,
    /// Drive the campaign over loopback UDP sockets instead of in-process.
    #[arg(long)]
    udp: bool,
    #[arg(long, default_value_t = 400)]
    window_ms: u64,
    #[arg(long, default_value_t = 2_000)]
    rate: u32,
    #[arg(long, default_value_t = 128)]
    concurrency: usize,
    /// Write the effective world config here (useful with --preset).
    #[arg(long)]
    emit_config: Option<PathBuf>,
    /// Also write resolver pairs for downstream analyze/report runs.
    #[arg(long)]
    pairs_out: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    /// Ground-truth table destination.
    #[arg(long)]
    truth: PathBuf,
}

fn main() {
    let cli = Cli::parse();
    env_logger::Builder::new()
        .parse_filters(&cli.log_level)
        .init();

    let code = match run(cli) {
        Ok(()) => 0,
        Err(AppError::Invalid(msg)) => {
            eprintln!("error: {msg}");
            2
        }
        Err(AppError::Operational(err)) => {
            eprintln!("error: {err:#}");
            1
        }
    };
    std::process::exit(code);
}

fn run(cli: Cli) -> Result<(), AppError> {
    let mut manifest = RunManifest::new(cli.seed);
    match cli.command {
        Command::Discover(args) => discover(args, cli.seed, &mut manifest)?,
        Command::Vet(args) => vet(args, cli.seed, &mut manifest)?,
        Command::Probe(args) => probe(args, cli.seed, &mut manifest)?,
        Command::Classify(args) => classify(args, cli.seed, &mut manifest)?,
        Command::Analyze(args) => analyze(args, cli.seed, &mut manifest)?,
        Command::Report(args) => report(args, cli.seed, &mut manifest)?,
        Command::Simulate(args) => simulate(args, cli.seed, &mut manifest)?,
    }
    if let Some(path) = cli.manifest {
        manifest
            .save(&path)
            .context("writing manifest")
            .map_err(AppError::Operational)?;
    }
    Ok(())
}

fn read_lines(path: &Path) -> Result<Vec<String>, AppError> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(AppError::Operational)?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_string)
        .collect())
}

fn load_pairs(path: &Path) -> Result<Vec<ResolverPair>, AppError> {
    let (_, pairs) =
        read_jsonl::<ResolverPair>(path).map_err(|e| invalid(format!("pairs file: {e}")))?;
    Ok(pairs)
}

fn load_verdicts(path: &Path) -> Result<Vec<CensorVerdict>, AppError> {
    let (_, verdicts) =
        read_jsonl::<CensorVerdict>(path).map_err(|e| invalid(format!("verdicts file: {e}")))?;
    Ok(verdicts)
}

fn tls_prober(trust: &str, rate: u32) -> Result<HandshakeProber, AppError> {
    let prober = if trust == "system" {
        HandshakeProber::with_webpki_roots()
    } else {
        HandshakeProber::with_pem_bundle(Path::new(trust)).map_err(|e| invalid(e.to_string()))?
    };
    Ok(
        prober.with_rate_limiter(Arc::new(dualprobe_core::probe::RateLimiter::per_second(
            rate,
        ))),
    )
}

fn discover(args: DiscoverArgs, seed: u64, manifest: &mut RunManifest) -> Result<(), AppError> {
    manifest.set_tunable("zone", &args.zone);
    manifest.set_tunable("max_shared_v6", args.max_shared_v6);
    manifest
        .add_dataset("geo", &args.geo)
        .context("hashing geo dataset")?;
    manifest
        .add_input("nslog", &args.nslog)
        .context("hashing nslog")?;

    let entries: Vec<NsLogEntry> = if args.nslog.extension().map(|e| e == "pcap").unwrap_or(false) {
        let file = std::fs::File::open(&args.nslog).context("opening capture")?;
        let (entries, skipped) =
            pcap::extract_ns_log(file).map_err(|e| invalid(format!("capture: {e}")))?;
        log::info!(
            "capture: {} sightings, {} non-DNS packets skipped",
            entries.len(),
            skipped
        );
        entries
    } else {
        let (_, entries) =
            read_jsonl::<NsLogEntry>(&args.nslog).map_err(|e| invalid(format!("nslog: {e}")))?;
        entries
    };

    let (mut candidates, stats) = discovery::correlate_pairs(entries, &args.zone);
    log::info!(
        "correlated {} candidates ({} entries, {} decode failures, {} duplicates)",
        candidates.len(),
        stats.entries,
        stats.decode_failures,
        stats.duplicates
    );

    if let Some(list) = &args.candidates {
        manifest
            .add_input("candidates", list)
            .context("hashing candidates")?;
        let allowed: BTreeSet<std::net::Ipv4Addr> = read_lines(list)?
            .iter()
            .map(|l| {
                l.parse()
                    .map_err(|_| invalid(format!("bad candidate address {l:?}")))
            })
            .collect::<Result<_, _>>()?;
        candidates.retain(|c| allowed.contains(&c.v4));
        log::info!("{} candidates remain after list filter", candidates.len());
    }

    let candidates = discovery::prune_infrastructure(candidates, args.max_shared_v6);
    log::info!(
        "{} candidates after infrastructure pruning",
        candidates.len()
    );

    let enrichment = Enrichment {
        geo: Box::new(
            IpDataset::open(&args.geo, IpDatasetKind::Geo).map_err(|e| invalid(e.to_string()))?,
        ),
        asn: match &args.asn {
            Some(path) => {
                manifest
                    .add_dataset("asn", path)
                    .context("hashing asn dataset")?;
                Box::new(
                    IpDataset::open(path, IpDatasetKind::Asn)
                        .map_err(|e| invalid(e.to_string()))?,
                )
            }
            None => Box::new(dualprobe_core::enrich::CsvIpFixture::empty()),
        },
        conn: match &args.conn {
            Some(path) => {
                manifest
                    .add_dataset("conn", path)
                    .context("hashing conn dataset")?;
                Box::new(
                    IpDataset::open(path, IpDatasetKind::ConnType)
                        .map_err(|e| invalid(e.to_string()))?,
                )
            }
            None => Box::new(dualprobe_core::enrich::CsvIpFixture::empty()),
        },
    };

    let (pairs, geo_stats) = discovery::prune_geo_mismatch(candidates, &enrichment);
    log::info!(
        "{} pairs kept ({} country mismatches, {} unknown geo, {} bogons dropped)",
        pairs.len(),
        geo_stats.country_mismatch,
        geo_stats.unknown_geo,
        geo_stats.bogon
    );

    manifest.set_tunable("seed", seed);
    write_jsonl(&args.out, Some(&manifest.stamp()), pairs.iter())
        .map_err(|e| AppError::Operational(anyhow!("{e}")))?;
    println!(
        "wrote {} resolver pairs to {}",
        pairs.len(),
        args.out.display()
    );
    Ok(())
}

fn vet(args: VetArgs, seed: u64, manifest: &mut RunManifest) -> Result<(), AppError> {
    manifest
        .add_input("domains", &args.domains)
        .context("hashing domain list")?;
    manifest.set_tunable("resolvers", &args.resolvers);
    manifest.set_tunable("window_ms", args.window_ms);

    let domains = read_lines(&args.domains)?;
    let trusted: Vec<IpAddr> = args
        .resolvers
        .split(',')
        .map(|s| {
            s.trim()
                .parse()
                .map_err(|_| invalid(format!("bad resolver address {s:?}")))
        })
        .collect::<Result<_, _>>()?;
    if trusted.is_empty() {
        return Err(invalid("no trusted resolvers given"));
    }

    let transport = UdpTransport::bind(Arc::new(Port53Router))
        .context("binding UDP sockets")
        .map_err(AppError::Operational)?;
    let prober = tls_prober(&args.trust, 50)?;
    let opts = VetOptions {
        window: Duration::from_millis(args.window_ms),
        seed,
        ..Default::default()
    };

    // Domains are vetted concurrently; per-domain steps stay sequential.
    let outcomes: Vec<Result<VetOutcome, domainvet::VetError>> = {
        let next = std::sync::atomic::AtomicUsize::new(0);
        let slots: Vec<std::sync::Mutex<Option<Result<VetOutcome, domainvet::VetError>>>> = domains
            .iter()
            .map(|_| std::sync::Mutex::new(None))
            .collect();
        std::thread::scope(|scope| {
            for _ in 0..16.min(domains.len().max(1)) {
                scope.spawn(|| loop {
                    let i = next.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                    if i >= domains.len() {
                        break;
                    }
                    let outcome =
                        domainvet::vet_domain(&domains[i], &trusted, &transport, &prober, &opts);
                    *slots[i].lock().unwrap() = Some(outcome);
                });
            }
        });
        slots
            .into_iter()
            .map(|s| s.into_inner().unwrap().unwrap())
            .collect()
    };

    let mut vetted = Vec::new();
    let mut rejected = 0usize;
    let mut errors = 0usize;
    for outcome in outcomes {
        match outcome {
            Ok(VetOutcome::Vetted(v)) => vetted.push(v),
            Ok(VetOutcome::Rejected { name, reason }) => {
                rejected += 1;
                log::info!("rejected {name}: {reason:?}");
            }
            Err(e) => {
                errors += 1;
                log::warn!("{e}");
            }
        }
    }
    write_jsonl(&args.out, Some(&manifest.stamp()), vetted.iter())
        .map_err(|e| AppError::Operational(anyhow!("{e}")))?;
    println!(
        "vetted {} of {} domains ({rejected} rejected, {errors} unreachable) -> {}",
        vetted.len(),
        domains.len(),
        args.out.display()
    );
    Ok(())
}

fn load_domains(path: &Path) -> Result<Vec<String>, AppError> {
    // Vetted JSONL or a plain one-per-line list.
    if let Ok((_, vetted)) = read_jsonl::<domainvet::VettedDomain>(path) {
        if !vetted.is_empty() {
            return Ok(vetted.into_iter().map(|v| v.name).collect());
        }
    }
    read_lines(path)
}

fn probe(args: ProbeArgs, seed: u64, manifest: &mut RunManifest) -> Result<(), AppError> {
    manifest
        .add_input("pairs", &args.pairs)
        .context("hashing pairs")?;
    manifest
        .add_input("domains", &args.domains)
        .context("hashing domains")?;
    manifest.set_tunable("rate", args.rate);
    manifest.set_tunable("window_ms", args.window_ms);
    manifest.set_tunable("rd_flag", !args.no_rd);

    let pairs = load_pairs(&args.pairs)?;
    let domains = load_domains(&args.domains)?;
    if pairs.is_empty() || domains.is_empty() {
        return Err(invalid("need at least one pair and one domain"));
    }

    let mut plan = CampaignPlan::new(pairs.len(), domains);
    plan.rate = args.rate;
    plan.window_ms = args.window_ms;
    plan.seed = seed;
    plan.rd_flag = !args.no_rd;
    log::info!("planned {} tasks", plan.total_tasks());

    let transport = UdpTransport::bind(Arc::new(Port53Router))
        .context("binding UDP sockets")
        .map_err(AppError::Operational)?;
    let engine = ProbeEngine::new(
        &transport,
        EngineConfig {
            window: Duration::from_millis(args.window_ms),
            rate: args.rate,
            concurrency: args.concurrency,
        },
    );

    let file = std::fs::File::create(&args.out).context("creating output")?;
    let mut writer = std::io::BufWriter::new(file);
    use std::io::Write;
    serde_json::to_writer(&mut writer, &manifest.stamp()).context("writing stamp")?;
    writer.write_all(b"\n").context("writing stamp")?;
    let mut count = 0u64;
    engine.run(plan_matrix(&plan), &pairs, |result: ProbeResult| {
        if serde_json::to_writer(&mut writer, &result).is_ok() {
            let _ = writer.write_all(b"\n");
            count += 1;
        }
    });
    writer.flush().context("flushing output")?;
    println!("wrote {count} probe results to {}", args.out.display());
    Ok(())
}

fn classify(args: ClassifyArgs, _seed: u64, manifest: &mut RunManifest) -> Result<(), AppError> {
    if args.rounds == 0 {
        return Err(invalid("--rounds must be at least 1"));
    }
    manifest
        .add_input("results", &args.results)
        .context("hashing results")?;
    manifest.set_tunable("rounds", args.rounds);
    manifest.set_tunable("trust", &args.trust);

    let (_, results) = read_jsonl::<ProbeResult>(&args.results)
        .map_err(|e| invalid(format!("results file: {e}")))?;
    let prober = tls_prober(&args.trust, args.tls_rate)?;

    let verdicts: Vec<CensorVerdict> = results
        .iter()
        .map(|r| classify_censorship(&r.task, r, &prober as &dyn TlsProber, args.rounds, &[]))
        .collect();
    write_jsonl(&args.out, Some(&manifest.stamp()), verdicts.iter())
        .map_err(|e| AppError::Operational(anyhow!("{e}")))?;
    let censored = verdicts.iter().filter(|v| v.outcome.is_censored()).count();
    println!(
        "classified {} results ({censored} censored) -> {}",
        verdicts.len(),
        args.out.display()
    );
    Ok(())
}

fn analyze(args: AnalyzeArgs, _seed: u64, manifest: &mut RunManifest) -> Result<(), AppError> {
    if args.alpha <= 0.0 || args.alpha >= 1.0 {
        return Err(invalid("--alpha must be in (0,1)"));
    }
    manifest
        .add_input("verdicts", &args.verdicts)
        .context("hashing verdicts")?;
    manifest
        .add_input("pairs", &args.pairs)
        .context("hashing pairs")?;
    manifest.set_tunable("alpha", args.alpha);
    manifest.set_tunable("epsilon", args.epsilon);

    let axis = match args.axis {
        AxisArg::Rrtype => Axis::RrType,
        AxisArg::Interface => Axis::Interface,
    };
    let sidak = match args.sidak {
        SidakArg::Standard => SidakMode::Standard,
        SidakArg::Paper => SidakMode::Literal,
    };
    manifest.set_tunable(
        "sidak",
        match sidak {
            SidakMode::Standard => "standard",
            SidakMode::Literal => "paper",
        },
    );
    let ttest = if args.pooled {
        TTestKind::Pooled
    } else {
        TTestKind::Welch
    };

    let verdicts = load_verdicts(&args.verdicts)?;
    let pairs = load_pairs(&args.pairs)?;
    let categories = match &args.categories {
        Some(path) => {
            manifest
                .add_dataset("categories", path)
                .context("hashing categories")?;
            CsvCategoryFixture::open(path).map_err(|e| invalid(e.to_string()))?
        }
        None => CsvCategoryFixture::from_pairs(&[]),
    };

    std::fs::create_dir_all(&args.out).context("creating output directory")?;
    let stamp = manifest.stamp();

    let countries = analyze_country(&verdicts, &pairs, axis, args.alpha, sidak, ttest);
    write_jsonl(
        &args.out.join("country_findings.jsonl"),
        Some(&stamp),
        countries.findings.iter(),
    )
    .map_err(|e| AppError::Operational(anyhow!("{e}")))?;

    let resolvers = analyze_resolvers(&verdicts, &pairs, axis, args.alpha, sidak, args.epsilon);
    write_jsonl(
        &args.out.join("resolver_reports.jsonl"),
        Some(&stamp),
        resolvers.per_country.iter(),
    )
    .map_err(|e| AppError::Operational(anyhow!("{e}")))?;

    let domains = analyze_domains(
        &verdicts,
        &pairs,
        &categories,
        axis,
        args.alpha,
        sidak,
        args.epsilon,
    );
    write_jsonl(
        &args.out.join("domain_reports.jsonl"),
        Some(&stamp),
        domains.per_country.iter(),
    )
    .map_err(|e| AppError::Operational(anyhow!("{e}")))?;

    let significant = countries.findings.iter().filter(|f| f.significant).count();
    println!(
        "analyzed {} verdicts across {} countries: {significant} significant strata (threshold {:.3e}) -> {}",
        verdicts.len(),
        countries.n_countries,
        countries.threshold,
        args.out.display()
    );
    Ok(())
}

fn report(args: ReportArgs, _seed: u64, manifest: &mut RunManifest) -> Result<(), AppError> {
    manifest
        .add_input("verdicts", &args.verdicts)
        .context("hashing verdicts")?;
    manifest
        .add_input("pairs", &args.pairs)
        .context("hashing pairs")?;

    let verdicts = load_verdicts(&args.verdicts)?;
    let pairs = load_pairs(&args.pairs)?;
    let format = match args.format {
        FormatArg::Csv => TableFormat::Csv,
        FormatArg::Markdown => TableFormat::Markdown,
    };
    let ext = match args.format {
        FormatArg::Csv => "csv",
        FormatArg::Markdown => "md",
    };
    std::fs::create_dir_all(&args.out).context("creating output directory")?;

    let table = blocking_rates(&verdicts, &pairs);
    let rate_path = args.out.join(format!("rate_table.{ext}"));
    std::fs::write(&rate_path, render_rate_table(&table, format)).context("writing rate table")?;
    let mut written = vec![rate_path.display().to_string()];

    if let Some(breakdown) = args.breakdown {
        let populations: Vec<(&str, PairFilter)> = match breakdown {
            BreakdownArg::ConnType => vec![
                (
                    "corporate",
                    PairFilter::ConnType(dualprobe_core::ConnType::Corporate),
                ),
                (
                    "non_corporate",
                    PairFilter::NotConnType(dualprobe_core::ConnType::Corporate),
                ),
            ],
            BreakdownArg::V6Kind => vec![
                ("native_v6", PairFilter::NativeV6),
                ("six_to_four", PairFilter::SixToFour),
            ],
        };
        for (label, filter) in populations {
            let table = blocking_rates_filtered(&verdicts, &pairs, filter);
            let path = args.out.join(format!("rate_table_{label}.{ext}"));
            std::fs::write(&path, render_rate_table(&table, format))
                .context("writing breakdown table")?;
            written.push(path.display().to_string());
        }
    }

    if let Some(findings_path) = &args.findings {
        manifest
            .add_input("findings", findings_path)
            .context("hashing findings")?;
        let (_, findings): (_, Vec<dualprobe_core::stats::CountryFinding>) =
            read_jsonl(findings_path).map_err(|e| invalid(format!("findings file: {e}")))?;
        for axis in [Axis::RrType, Axis::Interface] {
            if findings.iter().any(|f| f.axis == axis) {
                let name = match axis {
                    Axis::RrType => "diff_table_rrtype",
                    Axis::Interface => "diff_table_interface",
                };
                let path = args.out.join(format!("{name}.{ext}"));
                std::fs::write(
                    &path,
                    render_diff_table(&findings, axis, format, args.include_ns),
                )
                .context("writing diff table")?;
                written.push(path.display().to_string());
            }
        }
    }

    println!("wrote {}", written.join(", "));
    Ok(())
}

fn simulate(args: SimulateArgs, seed: u64, manifest: &mut RunManifest) -> Result<(), AppError> {
    let config = match (&args.config, &args.preset) {
        (Some(path), None) => {
            manifest
                .add_input("config", path)
                .context("hashing config")?;
            let bytes = std::fs::read(path).context("reading config")?;
            serde_json::from_slice::<simnet::SimWorldConfig>(&bytes)
                .map_err(|e| invalid(format!("world config: {e}")))?
        }
        (None, Some(name)) => presets::by_name(name, args.resolvers, args.domains, seed)
            .ok_or_else(|| invalid(format!("unknown preset {name:?}")))?,
        _ => return Err(invalid("exactly one of --config or --preset is required")),
    };
    manifest.set_tunable("udp", args.udp);
    manifest.set_tunable("window_ms", args.window_ms);
    manifest.set_tunable("rate", args.rate);

    if let Some(path) = &args.emit_config {
        std::fs::write(path, serde_json::to_vec_pretty(&config).unwrap())
            .context("writing config")?;
    }

    let world = Arc::new(World::build(config).map_err(|e| invalid(e.to_string()))?);
    let opts = CampaignOptions {
        window_ms: args.window_ms,
        rate: args.rate,
        concurrency: args.concurrency,
        seed,
        rd_flag: true,
        tls_rounds: 3,
        udp: args.udp,
    };
    let out = simnet::run_campaign(&world, &opts)
        .context("running campaign")
        .map_err(AppError::Operational)?;

    let stamp = manifest.stamp();
    write_jsonl(&args.out, Some(&stamp), out.verdicts.iter())
        .map_err(|e| AppError::Operational(anyhow!("{e}")))?;
    write_jsonl(&args.truth, Some(&stamp), out.truth.iter())
        .map_err(|e| AppError::Operational(anyhow!("{e}")))?;
    if let Some(path) = &args.pairs_out {
        write_jsonl(path, Some(&stamp), world.pairs().iter())
            .map_err(|e| AppError::Operational(anyhow!("{e}")))?;
    }

    let censored = out
        .verdicts
        .iter()
        .filter(|v| v.outcome.is_censored())
        .count();
    println!(
        "simulated {} probes ({censored} censored) -> {} (truth: {})",
        out.verdicts.len(),
        args.out.display(),
        args.truth.display()
    );
    Ok(())
}
