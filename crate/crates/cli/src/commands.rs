use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::Args;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use seqae_core::automorphism::{affine_profile, format_ensemble, load_ensemble, sample_ensemble, AffinePerm, BltaProfile};
use seqae_core::code::{format_info_set, load_info_set, CodeSpec};
use seqae_core::ensemble::{fo_complexity, histogram_to_distribution, ro_complexity, SigmaParams};
use seqae_core::sc::CheckNode;
use seqae_core::sim::{
    find_snr_at_bler, five_number_summary, n_dec_histogram, observe_ensemble, run_trials, ChannelConfig,
    DecoderKind, DecoderSetup, SimStats, SnrConvention, SnrSearch, StopRule,
};
use seqae_core::threshold::{collect_dataset, optimize_sigma, Dataset};

use crate::output::{short_digest, sidecar_path, write_atomic, Sink};
use crate::{config, Cli, Command, GlobalArgs, UsageError};

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

fn existing(path: &Path) -> anyhow::Result<&Path> {
    if path.exists() {
        Ok(path)
    } else {
        Err(usage(format!("{} does not exist", path.display())))
    }
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
pub struct CodeArgs {
    /// Code family: rm or polar
    #[arg(long)]
    pub family: Option<String>,
    /// Code length N
    #[arg(long)]
    pub length: Option<usize>,
    /// Reed-Muller order r
    #[arg(long)]
    pub order: Option<usize>,
    /// Polar code dimension K
    #[arg(long)]
    pub dimension: Option<usize>,
    /// Polar design SNR (Eb/N0, dB) [default: 4]
    #[arg(long)]
    pub design_snr: Option<f64>,
    /// Information-set file; replaces the family flags
    #[arg(long)]
    pub info_set: Option<PathBuf>,
}

impl CodeArgs {
    fn resolve(&self) -> anyhow::Result<CodeSpec> {
        if let Some(path) = &self.info_set {
            return Ok(load_info_set(existing(path)?)?);
        }
        let family = self.family.as_deref().ok_or_else(|| usage("--family or --info-set is required"))?;
        let len = self.length.ok_or_else(|| usage("--length is required"))?;
        if !len.is_power_of_two() || len < 2 {
            return Err(usage(format!("--length {len} is not a power of two >= 2")));
        }
        let n = len.trailing_zeros() as usize;
        match family.to_ascii_lowercase().as_str() {
            "rm" => {
                let r = self.order.ok_or_else(|| usage("--order is required for rm"))?;
                CodeSpec::reed_muller(n, r).map_err(|e| usage(e.to_string()))
            }
            "polar" => {
                let k = self.dimension.ok_or_else(|| usage("--dimension is required for polar"))?;
                if k > len {
                    return Err(usage(format!("--dimension {k} exceeds N = {len}")));
                }
                Ok(CodeSpec::polar(n, k, self.design_snr.unwrap_or(4.0))?)
            }
            other => Err(usage(format!("unknown code family `{other}` (expected rm or polar)"))),
        }
    }
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
pub struct EnsembleArgs {
    /// Ensemble file written by sample-autos
    #[arg(long)]
    pub ensemble: Option<PathBuf>,
    /// Ensemble size M when sampling on the fly
    #[arg(long)]
    pub m: Option<usize>,
    /// BLTA block sizes from the least significant bit, e.g. 3,4 [default: detected from the code]
    #[arg(long)]
    pub profile: Option<String>,
}

struct Ensemble {
    perms: Vec<AffinePerm>,
    id: String,
    source: String,
}

fn profile_for(code: &CodeSpec, text: Option<&str>) -> anyhow::Result<BltaProfile> {
    match text {
        Some(t) => t.parse::<BltaProfile>().map_err(|e| usage(format!("--profile: {e}"))),
        None => affine_profile(code)
            .ok_or_else(|| usage(format!("{code} is not LTA-invariant; pass --profile explicitly"))),
    }
}

fn ensemble_id(perms: &[AffinePerm]) -> String {
    short_digest(format_ensemble(perms, "").as_bytes())
}

impl EnsembleArgs {
    fn resolve(&self, code: &CodeSpec, seed: u64) -> anyhow::Result<Option<Ensemble>> {
        let perms = if let Some(path) = &self.ensemble {
            let perms = load_ensemble(existing(path)?)?;
            if perms[0].num_bits() != code.log_length() {
                return Err(usage(format!(
                    "ensemble acts on {} bits, code has n = {}",
                    perms[0].num_bits(),
                    code.log_length()
                )));
            }
            if let Some(m) = self.m {
                if m != perms.len() {
                    return Err(usage(format!("--m {m} but {} lists {} permutations", path.display(), perms.len())));
                }
            }
            return Ok(Some(Ensemble {
                id: ensemble_id(&perms),
                perms,
                source: path.display().to_string(),
            }));
        } else if let Some(m) = self.m {
            let profile = profile_for(code, self.profile.as_deref())?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            sample_ensemble(m, &profile, code, &mut rng)?
        } else {
            return Ok(None);
        };
        Ok(Some(Ensemble { id: ensemble_id(&perms), perms, source: "sampled".into() }))
    }
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
pub struct ChannelArgs {
    /// Comma-separated SNR points in dB
    #[arg(long)]
    pub snr: Option<String>,
    /// Use the SNR where the full ensemble (SC without one) reaches this BLER
    #[arg(long)]
    pub target_bler: Option<f64>,
    /// Relative BLER tolerance of the SNR search [default: 0.1]
    #[arg(long)]
    pub tolerance: Option<f64>,
    /// SNR search bracket `lo,hi` in dB [default: -2,10]
    #[arg(long)]
    pub bracket: Option<String>,
    /// SNR convention: ebn0 or esn0 [default: ebn0]
    #[arg(long)]
    pub convention: Option<String>,
}

fn parse_list(text: &str, flag: &str) -> anyhow::Result<Vec<f64>> {
    text.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| usage(format!("{flag}: `{t}` is not a number"))))
        .collect()
}

struct Channel {
    snrs: Vec<f64>,
    convention: SnrConvention,
    search: Option<Value>,
}

impl ChannelArgs {
    fn convention(&self) -> anyhow::Result<SnrConvention> {
        match self.convention.as_deref().map(str::to_ascii_lowercase).as_deref() {
            None | Some("ebn0") => Ok(SnrConvention::EbN0),
            Some("esn0") => Ok(SnrConvention::EsN0),
            Some(other) => Err(usage(format!("unknown SNR convention `{other}`"))),
        }
    }

    fn resolve(&self, code: &CodeSpec, ensemble: Option<&Ensemble>, seed: u64) -> anyhow::Result<Channel> {
        let convention = self.convention()?;
        match (&self.snr, self.target_bler) {
            (Some(_), Some(_)) => Err(usage("--snr and --target-bler are mutually exclusive")),
            (None, None) => Err(usage("one of --snr or --target-bler is required")),
            (Some(list), None) => Ok(Channel { snrs: parse_list(list, "--snr")?, convention, search: None }),
            (None, Some(target)) => {
                if !(target > 0.0 && target < 1.0) {
                    return Err(usage(format!("--target-bler {target} outside (0, 1)")));
                }
                let mut search = SnrSearch::new(target, self.tolerance.unwrap_or(0.1), seed);
                search.convention = convention;
                if let Some(b) = &self.bracket {
                    let v = parse_list(b, "--bracket")?;
                    let [lo, hi] = v[..] else {
                        return Err(usage("--bracket expects `lo,hi`"));
                    };
                    search.bracket = (lo, hi);
                }
                let (perms, kind) = match ensemble {
                    Some(e) => (e.perms.as_slice(), DecoderKind::Ae),
                    None => (&[][..], DecoderKind::Sc),
                };
                let point = find_snr_at_bler(&DecoderSetup::new(code, perms, kind), &search)?;
                eprintln!(
                    "{kind} reaches BLER {:.3e} at {:.4} dB ({} errors in {} trials)",
                    point.stats.bler, point.snr_db, point.stats.block_errors, point.stats.trials
                );
                Ok(Channel {
                    snrs: vec![point.snr_db],
                    convention,
                    search: Some(json!({
                        "decoder": kind.to_string(),
                        "target_bler": target,
                        "snr_db": point.snr_db,
                        "bler": point.stats.bler,
                        "trials": point.stats.trials,
                    })),
                })
            }
        }
    }

    fn single(&self, code: &CodeSpec, ensemble: Option<&Ensemble>, seed: u64) -> anyhow::Result<Channel> {
        let ch = self.resolve(code, ensemble, seed)?;
        if ch.snrs.len() != 1 {
            return Err(usage("this command takes a single SNR"));
        }
        Ok(ch)
    }
}

fn channel_meta(code: &CodeSpec, ch: &Channel) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("code".into(), json!(code.label()));
    m.insert("snr_db".into(), json!(ch.snrs));
    m.insert("snr_convention".into(), json!(ch.convention.to_string()));
    if let Some(s) = &ch.search {
        m.insert("snr_search".into(), s.clone());
    }
    m
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
pub struct ConstructArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub code: CodeArgs,
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
pub struct SampleArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub code: CodeArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub ensemble: EnsembleArgs,
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
pub struct CollectArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub code: CodeArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub ensemble: EnsembleArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub channel: ChannelArgs,
    /// Number of simulated blocks [default: 500000]
    #[arg(long)]
    pub vectors: Option<usize>,
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
pub struct OptimizeArgs {
    /// Dataset written by collect-dataset; collected on the fly when omitted
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// Also save the collected dataset here
    #[arg(long)]
    pub dataset_out: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    pub collect: CollectArgs,
    /// Training BLER ξ; sets the collection SNR and ε = ξ/10 [default: measured on the dataset]
    #[arg(long)]
    pub xi: Option<f64>,
    /// Permitted BLER degradation ε (overrides ξ/10)
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Allocation quantum κ [default: 5]
    #[arg(long)]
    pub kappa: Option<u64>,
    /// Iteration cap [default: 100]
    #[arg(long)]
    pub max_iterations: Option<usize>,
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
pub struct SimulateArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub code: CodeArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub ensemble: EnsembleArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub channel: ChannelArgs,
    /// sc, ae, dae or pdae
    #[arg(long)]
    pub decoder: Option<String>,
    /// Threshold file from optimize-sigma (dae, pdae)
    #[arg(long)]
    pub sigma: Option<PathBuf>,
    /// Stop after this many block errors [default: 200]
    #[arg(long)]
    pub min_errors: Option<u64>,
    /// Stop after this many trials [default: 2000000]
    #[arg(long)]
    pub max_trials: Option<u64>,
    /// minsum or exact [default: minsum]
    #[arg(long)]
    pub check_node: Option<String>,
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
pub struct OracleArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub code: CodeArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub ensemble: EnsembleArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub channel: ChannelArgs,
    /// Number of simulated blocks [default: 100000]
    #[arg(long)]
    pub trials: Option<u64>,
}

pub type BoxplotArgs = OracleArgs;

pub fn run(cli: Cli) -> anyhow::Result<()> {
    let cfg = match &cli.global.config {
        Some(path) => config::load(existing(path)?)?,
        None => Map::new(),
    };
    let global: GlobalArgs = config::merge(&cli.global, &cfg)?;
    if let Some(w) = global.workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build_global()
            .context("configuring the worker pool")?;
    }
    let seed = global.seed.unwrap_or(1);
    let sink = |command: &'static str, args: Value| {
        let mut config = args;
        config["seed"] = json!(seed);
        eprintln!("seqae {command}: {config}");
        Sink { command, out: global.out.clone(), seed, config }
    };
    match cli.command {
        Command::Construct(a) => {
            let a = config::merge(&a, &cfg)?;
            construct(&a, sink("construct", serde_json::to_value(&a)?))
        }
        Command::SampleAutos(a) => {
            let a = config::merge(&a, &cfg)?;
            sample_autos(&a, sink("sample-autos", serde_json::to_value(&a)?))
        }
        Command::CollectDataset(a) => {
            let a = config::merge(&a, &cfg)?;
            collect(&a, sink("collect-dataset", serde_json::to_value(&a)?))
        }
        Command::OptimizeSigma(a) => {
            let a = config::merge(&a, &cfg)?;
            optimize(&a, sink("optimize-sigma", serde_json::to_value(&a)?))
        }
        Command::Simulate(a) => {
            let a = config::merge(&a, &cfg)?;
            simulate(&a, sink("simulate", serde_json::to_value(&a)?))
        }
        Command::OracleStats(a) => {
            let a = config::merge(&a, &cfg)?;
            oracle_stats(&a, sink("oracle-stats", serde_json::to_value(&a)?))
        }
        Command::MetricBoxplot(a) => {
            let a = config::merge(&a, &cfg)?;
            metric_boxplot(&a, sink("metric-boxplot", serde_json::to_value(&a)?))
        }
    }
}

fn construct(a: &ConstructArgs, sink: Sink) -> anyhow::Result<()> {
    let code = a.code.resolve()?;
    let profile = affine_profile(&code).map_or("none".to_string(), |p| p.to_string());
    let text = format!("# {code}\n# profile: {profile}\n{}", format_info_set(&code));
    let mut meta = Map::new();
    meta.insert("code".into(), json!(code.label()));
    meta.insert("profile".into(), json!(profile));
    sink.emit(text.as_bytes(), meta)
}

fn sample_autos(a: &SampleArgs, sink: Sink) -> anyhow::Result<()> {
    let code = a.code.resolve()?;
    if a.ensemble.ensemble.is_some() {
        return Err(usage("sample-autos samples a new ensemble; drop --ensemble"));
    }
    let m = a.ensemble.m.ok_or_else(|| usage("--m is required"))?;
    let profile = profile_for(&code, a.ensemble.profile.as_deref())?;
    let mut rng = ChaCha8Rng::seed_from_u64(sink.seed);
    let perms = sample_ensemble(m, &profile, &code, &mut rng)?;
    let header = format!("code: {code}\nprofile: {profile}\nM: {m}\nseed: {}", sink.seed);
    let mut meta = Map::new();
    meta.insert("code".into(), json!(code.label()));
    meta.insert("profile".into(), json!(profile.to_string()));
    meta.insert("ensemble_id".into(), json!(ensemble_id(&perms)));
    sink.emit(format_ensemble(&perms, &header).as_bytes(), meta)
}

fn collect_for(a: &CollectArgs, seed: u64, default_target: Option<f64>) -> anyhow::Result<(Dataset, Map<String, Value>)> {
    let code = a.code.resolve()?;
    let ens = a
        .ensemble
        .resolve(&code, seed)?
        .ok_or_else(|| usage("an ensemble is required (--ensemble or --m)"))?;
    let mut channel_args = a.channel.clone();
    if channel_args.snr.is_none() && channel_args.target_bler.is_none() {
        channel_args.target_bler = default_target;
    }
    let ch = channel_args.single(&code, Some(&ens), seed)?;
    let vectors = a.vectors.unwrap_or(500_000);
    let cfg = ChannelConfig::for_code(&code, ch.snrs[0]).with_convention(ch.convention);
    let mut ds = collect_dataset(&code, &ens.perms, &cfg, vectors, seed)?;
    ds.header.ensemble_id = ens.id.clone();
    eprintln!(
        "{} blocks at {:.4} dB: ensemble BLER {:.4e}, |B_S| = {}, ML-selection errors {:.3e}",
        ds.len(),
        cfg.snr_db,
        ds.ensemble_bler(),
        ds.num_successful(),
        ds.ml_error_rate()
    );
    let mut meta = channel_meta(&code, &ch);
    meta.insert("ensemble".into(), json!(ens.source));
    meta.insert("ensemble_id".into(), json!(ens.id));
    meta.insert("records".into(), json!(ds.len()));
    meta.insert("ensemble_bler".into(), json!(ds.ensemble_bler()));
    meta.insert("successful".into(), json!(ds.num_successful()));
    Ok((ds, meta))
}

fn collect(a: &CollectArgs, sink: Sink) -> anyhow::Result<()> {
    let Some(out) = sink.out.clone() else {
        return Err(usage("collect-dataset writes a binary file; --out is required"));
    };
    let (ds, meta) = collect_for(a, sink.seed, None)?;
    let mut buf = Vec::new();
    ds.write_to(&mut buf)?;
    write_atomic(&out, &buf)?;
    write_atomic(
        &sidecar_path(&out, ".meta.json"),
        serde_json::to_string_pretty(&sink.metadata(meta))?.as_bytes(),
    )?;
    eprintln!("wrote {}", out.display());
    Ok(())
}

fn optimize(a: &OptimizeArgs, sink: Sink) -> anyhow::Result<()> {
    let (ds, mut meta) = match &a.dataset {
        Some(path) => {
            let ds = Dataset::load(existing(path)?)
                .with_context(|| format!("reading dataset {}", path.display()))?;
            let mut meta = Map::new();
            meta.insert("dataset".into(), json!(path.display().to_string()));
            (ds, meta)
        }
        None => {
            let (ds, meta) = collect_for(&a.collect, sink.seed, Some(a.xi.unwrap_or(1e-2)))?;
            if let Some(p) = &a.dataset_out {
                let mut buf = Vec::new();
                ds.write_to(&mut buf)?;
                write_atomic(p, &buf)?;
            }
            (ds, meta)
        }
    };
    let xi = a.xi.unwrap_or_else(|| ds.ensemble_bler());
    let epsilon = a.epsilon.unwrap_or(xi / 10.0);
    let kappa = a.kappa.unwrap_or(5);
    let max_iterations = a.max_iterations.unwrap_or(100);
    let (sigma, result) = optimize_sigma(&ds, epsilon, kappa, max_iterations)?;
    if result.initial_clamped {
        eprintln!("warning: initial allocation overshot the budget and was clamped");
    }
    eprintln!("initial e = {:?}, mean invoked {:.4}", result.initial.e, result.initial_mean_invoked);
    for s in &result.log {
        eprintln!(
            "T = {:3}: +κ at {}, −κ at {}, e = {:?}, mean invoked {:.4}",
            s.iteration,
            s.added_at + 1,
            s.removed_at + 1,
            s.allocation,
            s.mean_invoked
        );
    }
    meta.insert("epsilon".into(), json!(epsilon));
    meta.insert("kappa".into(), json!(kappa));
    meta.insert("budget".into(), json!(result.initial.total()));
    meta.insert("initial_allocation".into(), json!(result.initial.e));
    meta.insert("initial_mean_invoked".into(), json!(result.initial_mean_invoked));
    meta.insert("initial_clamped".into(), json!(result.initial_clamped));
    meta.insert("allocation".into(), json!(result.allocation.e));
    meta.insert("mean_invoked".into(), json!(result.mean_invoked));
    meta.insert("iterations".into(), json!(result.iterations));
    meta.insert("log".into(), serde_json::to_value(&result.log)?);
    sink.emit(sigma.to_json().as_bytes(), meta)
}

fn simulate(a: &SimulateArgs, sink: Sink) -> anyhow::Result<()> {
    let name = a.decoder.as_deref().ok_or_else(|| usage("--decoder is required"))?;
    let kind: DecoderKind = name.parse().map_err(|e: seqae_core::Error| usage(e.to_string()))?;
    let check = match a.check_node.as_deref() {
        None | Some("minsum") => CheckNode::MinSum,
        Some("exact") => CheckNode::Exact,
        Some(other) => return Err(usage(format!("unknown check node `{other}`"))),
    };
    let code = a.code.resolve()?;
    let ens = a.ensemble.resolve(&code, sink.seed)?;
    if kind != DecoderKind::Sc && ens.is_none() {
        return Err(usage(format!("decoder {kind} needs --ensemble or --m")));
    }
    let sigma = match (&a.sigma, kind) {
        (Some(path), DecoderKind::Dae | DecoderKind::Pdae) => {
            let text = std::fs::read_to_string(existing(path)?)?;
            Some(SigmaParams::from_json(&text).with_context(|| format!("reading {}", path.display()))?)
        }
        (None, DecoderKind::Dae | DecoderKind::Pdae) => return Err(usage(format!("decoder {kind} needs --sigma"))),
        _ => None,
    };
    if let (Some(s), Some(e)) = (&sigma, &ens) {
        if s.len() != e.perms.len() {
            return Err(usage(format!("sigma file has M = {}, ensemble has {}", s.len(), e.perms.len())));
        }
        if !s.provenance.ensemble_id.is_empty() && s.provenance.ensemble_id != e.id {
            eprintln!("warning: sigma was trained on ensemble {}, simulating {}", s.provenance.ensemble_id, e.id);
        }
    }
    let ch = a.channel.resolve(&code, ens.as_ref(), sink.seed)?;
    let stop = StopRule {
        min_errors: a.min_errors.unwrap_or(200),
        max_trials: a.max_trials.unwrap_or(2_000_000),
    };
    let perms = ens.as_ref().map_or(&[][..], |e| e.perms.as_slice());
    let mut setup = DecoderSetup::new(&code, perms, kind);
    setup.check = check;
    if let Some(s) = &sigma {
        setup = setup.with_sigma(s);
    }
    let mut csv = String::from(SimStats::CSV_HEADER);
    csv.push('\n');
    for &snr in &ch.snrs {
        let cfg = ChannelConfig::for_code(&code, snr).with_convention(ch.convention);
        let stats = run_trials(&setup, &cfg, stop, sink.seed)?;
        eprintln!(
            "{snr:.3} dB: BLER {:.3e} ({} / {}), mean invoked {:.4}, SC-equivalent {:.4}",
            stats.bler, stats.block_errors, stats.trials, stats.mean_invoked, stats.mean_sc_equiv
        );
        writeln!(csv, "{}", stats.csv_row(snr))?;
    }
    let mut meta = channel_meta(&code, &ch);
    meta.insert("decoder".into(), json!(kind.to_string()));
    meta.insert("ensemble".into(), json!(ens.as_ref().map(|e| e.source.clone())));
    meta.insert("ensemble_id".into(), json!(ens.as_ref().map(|e| e.id.clone())));
    meta.insert("sigma".into(), json!(a.sigma.as_ref().map(|p| p.display().to_string())));
    meta.insert("min_errors".into(), json!(stop.min_errors));
    meta.insert("max_trials".into(), json!(stop.max_trials));
    sink.emit(csv.as_bytes(), meta)
}

fn observe(a: &OracleArgs, seed: u64) -> anyhow::Result<(CodeSpec, usize, Vec<seqae_core::sim::EnsembleObservation>, Map<String, Value>)> {
    let code = a.code.resolve()?;
    let ens = a
        .ensemble
        .resolve(&code, seed)?
        .ok_or_else(|| usage("an ensemble is required (--ensemble or --m)"))?;
    let ch = a.channel.single(&code, Some(&ens), seed)?;
    let trials = a.trials.unwrap_or(100_000);
    if trials == 0 {
        bail!(usage("--trials must be positive"));
    }
    let cfg = ChannelConfig::for_code(&code, ch.snrs[0]).with_convention(ch.convention);
    let obs = observe_ensemble(&code, &ens.perms, &cfg, trials, seed)?;
    let mut meta = channel_meta(&code, &ch);
    meta.insert("ensemble".into(), json!(ens.source));
    meta.insert("ensemble_id".into(), json!(ens.id));
    meta.insert("trials".into(), json!(trials));
    Ok((code, ens.perms.len(), obs, meta))
}

fn oracle_stats(a: &OracleArgs, sink: Sink) -> anyhow::Result<()> {
    let (code, m, obs, meta) = observe(a, sink.seed)?;
    let counts = n_dec_histogram(&obs, m);
    let dist = histogram_to_distribution(&counts);
    let ro = ro_complexity(&dist)?;
    let fo = fo_complexity(&dist, m)?;
    let errors = obs.iter().filter(|o| !o.correct).count();
    eprintln!("P(n_dec = 1) = {:.4}, RO = {ro:.4}, FO = {fo:.4}", dist[0]);
    let report = json!({
        "code": code.label(),
        "M": m,
        "snr_db": meta["snr_db"][0],
        "trials": obs.len(),
        "block_errors": errors,
        "bler": errors as f64 / obs.len() as f64,
        "n_dec_counts": counts,
        "n_dec_distribution": dist,
        "ro": ro,
        "fo": fo,
    });
    sink.emit(serde_json::to_string_pretty(&report)?.as_bytes(), meta)
}

fn metric_boxplot(a: &BoxplotArgs, sink: Sink) -> anyhow::Result<()> {
    let (_, _, obs, meta) = observe(a, sink.seed)?;
    let mut rows = String::from("trial,correct,pm,lsm,lsm_llr\n");
    for (t, o) in obs.iter().enumerate() {
        writeln!(rows, "{t},{},{},{},{}", o.correct as u8, o.pm, o.lsm, o.lsm_llr)?;
    }
    let mut summary = String::from("metric,outcome,count,min,q1,median,q3,max\n");
    let metrics: [(&str, fn(&seqae_core::sim::EnsembleObservation) -> f64); 3] =
        [("pm", |o| o.pm), ("lsm", |o| o.lsm), ("lsm_llr", |o| o.lsm_llr)];
    for (name, get) in metrics {
        for (outcome, want) in [("correct", true), ("wrong", false)] {
            let values: Vec<f64> = obs.iter().filter(|o| o.correct == want).map(get).collect();
            match five_number_summary(&values) {
                Some(f) => writeln!(
                    summary,
                    "{name},{outcome},{},{},{},{},{},{}",
                    f.count, f.min, f.q1, f.median, f.q3, f.max
                )?,
                None => writeln!(summary, "{name},{outcome},0,,,,,")?,
            }
        }
    }
    sink.emit(rows.as_bytes(), meta)?;
    match &sink.out {
        Some(out) => write_atomic(&sidecar_path(out, ".summary.csv"), summary.as_bytes()),
        None => {
            eprint!("{summary}");
            Ok(())
        }
    }
}
