//! AWGN/BPSK channel and seeded Monte-Carlo estimation.
//!
//! Trial `t` under master seed `s` draws its message and noise from a ChaCha8
//! stream keyed by `(s, t)`, so results do not depend on how trials are
//! scheduled across worker threads. Trials are processed in fixed-size
//! batches and reduced in index order.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::automorphism::AffinePerm;
use crate::code::CodeSpec;
use crate::ensemble::{EnsembleDecoder, SigmaParams};
use crate::sc::{CheckNode, ScDecoder};
use crate::{Bit, Error, Result};

/// Trials per reduction batch. Fixed so that stop decisions are independent
/// of the worker count.
const BATCH: u64 = 2048;
const CHUNK: u64 = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum SnrConvention {
    /// Eb/N0 with the code-rate adjustment.
    #[default]
    EbN0,
    EsN0,
}

impl fmt::Display for SnrConvention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SnrConvention::EbN0 => "EbN0",
            SnrConvention::EsN0 => "EsN0",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelConfig {
    pub snr_db: f64,
    pub rate: f64,
    pub convention: SnrConvention,
}

impl ChannelConfig {
    pub fn new(snr_db: f64, rate: f64) -> Self {
        Self { snr_db, rate, convention: SnrConvention::EbN0 }
    }

    pub fn for_code(code: &CodeSpec, snr_db: f64) -> Self {
        Self::new(snr_db, code.rate())
    }

    pub fn with_convention(mut self, convention: SnrConvention) -> Self {
        self.convention = convention;
        self
    }

    /// Per-dimension noise variance for unit-energy BPSK.
    pub fn noise_variance(&self) -> f64 {
        let snr = 10f64.powf(self.snr_db / 10.0);
        match self.convention {
            SnrConvention::EbN0 => 1.0 / (2.0 * self.rate * snr),
            SnrConvention::EsN0 => 1.0 / (2.0 * snr),
        }
    }
}

/// `y = bpsk(x) + n` and the matching LLRs `2y/σ²`.
pub fn transmit<R: Rng + ?Sized>(x: &[Bit], cfg: &ChannelConfig, rng: &mut R) -> (Vec<f64>, Vec<f64>) {
    let mut y = vec![0.0; x.len()];
    let mut llr = vec![0.0; x.len()];
    transmit_into(x, cfg.noise_variance(), rng, &mut y, &mut llr);
    (y, llr)
}

pub fn transmit_into<R: Rng + ?Sized>(
    x: &[Bit],
    noise_variance: f64,
    rng: &mut R,
    y_soft: &mut [f64],
    llr: &mut [f64],
) {
    let sd = noise_variance.sqrt();
    let scale = 2.0 / noise_variance;
    for ((&b, y), l) in x.iter().zip(y_soft.iter_mut()).zip(llr.iter_mut()) {
        let n: f64 = rng.sample(StandardNormal);
        *y = (1.0 - 2.0 * b as f64) + sd * n;
        *l = scale * *y;
    }
}

/// RNG stream of trial `index` under `seed`.
pub fn trial_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// One transmitted block: codeword, channel output and LLRs.
#[derive(Debug, Clone)]
pub struct Transmission {
    pub x: Vec<Bit>,
    pub y_soft: Vec<f64>,
    pub llr: Vec<f64>,
}

/// Random message, encode, transmit; all randomness from `trial_rng(seed, index)`.
pub fn draw_transmission(code: &CodeSpec, noise_variance: f64, seed: u64, index: u64) -> Transmission {
    let mut rng = trial_rng(seed, index);
    let msg: Vec<Bit> = (0..code.dimension()).map(|_| rng.random::<bool>() as Bit).collect();
    let x = code.encode_message(&msg).expect("message length matches");
    let mut y_soft = vec![0.0; x.len()];
    let mut llr = vec![0.0; x.len()];
    transmit_into(&x, noise_variance, &mut rng, &mut y_soft, &mut llr);
    Transmission { x, y_soft, llr }
}

/// Maps `f` over trials `start..start + count` in parallel; results come back
/// in trial order. `init` builds per-task scratch state.
pub fn map_trials<S, T, I, F>(start: u64, count: u64, init: I, f: F) -> Vec<T>
where
    T: Send,
    I: Fn() -> S + Sync + Send,
    F: Fn(&mut S, u64) -> T + Sync + Send,
{
    let chunks = count.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .flat_map_iter(|c| {
            let lo = start + c * CHUNK;
            let hi = (lo + CHUNK).min(start + count);
            let mut state = init();
            (lo..hi).map(|t| f(&mut state, t)).collect::<Vec<_>>()
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum DecoderKind {
    Sc,
    #[default]
    Ae,
    Dae,
    Pdae,
}

impl fmt::Display for DecoderKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DecoderKind::Sc => "sc",
            DecoderKind::Ae => "ae",
            DecoderKind::Dae => "dae",
            DecoderKind::Pdae => "pdae",
        })
    }
}

impl FromStr for DecoderKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sc" => Ok(DecoderKind::Sc),
            "ae" => Ok(DecoderKind::Ae),
            "dae" => Ok(DecoderKind::Dae),
            "pdae" => Ok(DecoderKind::Pdae),
            other => Err(Error::InvalidParameter(format!("unknown decoder `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StopRule {
    pub min_errors: u64,
    pub max_trials: u64,
}

impl Default for StopRule {
    fn default() -> Self {
        Self { min_errors: 200, max_trials: 2_000_000 }
    }
}

impl StopRule {
    pub fn fixed(trials: u64) -> Self {
        Self { min_errors: u64::MAX, max_trials: trials }
    }
}

/// What one decoded block contributes to the statistics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialOutcome {
    pub error: bool,
    pub invoked: usize,
    pub sc_equiv: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SimStats {
    pub trials: u64,
    pub block_errors: u64,
    pub bler: f64,
    pub mean_invoked: f64,
    pub mean_sc_equiv: f64,
    pub stderr_bler: f64,
    pub stderr_invoked: f64,
    pub stderr_sc_equiv: f64,
}

#[derive(Debug, Clone, Copy, Default)]
struct Accumulator {
    trials: u64,
    errors: u64,
    invoked: f64,
    invoked_sq: f64,
    sc: f64,
    sc_sq: f64,
}

impl Accumulator {
    fn push(&mut self, t: &TrialOutcome) {
        self.trials += 1;
        self.errors += t.error as u64;
        let u = t.invoked as f64;
        self.invoked += u;
        self.invoked_sq += u * u;
        self.sc += t.sc_equiv;
        self.sc_sq += t.sc_equiv * t.sc_equiv;
    }

    fn finish(&self) -> SimStats {
        let n = self.trials.max(1) as f64;
        let bler = self.errors as f64 / n;
        let mean_u = self.invoked / n;
        let mean_sc = self.sc / n;
        let sem = |sum_sq: f64, mean: f64| ((sum_sq / n - mean * mean).max(0.0) / n).sqrt();
        SimStats {
            trials: self.trials,
            block_errors: self.errors,
            bler,
            mean_invoked: mean_u,
            mean_sc_equiv: mean_sc,
            stderr_bler: (bler * (1.0 - bler) / n).sqrt(),
            stderr_invoked: sem(self.invoked_sq, mean_u),
            stderr_sc_equiv: sem(self.sc_sq, mean_sc),
        }
    }
}

impl SimStats {
    pub const CSV_HEADER: &'static str =
        "snr_db,trials,block_errors,bler,mean_invoked,mean_sc_equiv,stderr_bler,stderr_invoked,stderr_sc_equiv";

    pub fn csv_row(&self, snr_db: f64) -> String {
        format!(
            "{},{},{},{:e},{},{},{:e},{:e},{:e}",
            snr_db,
            self.trials,
            self.block_errors,
            self.bler,
            self.mean_invoked,
            self.mean_sc_equiv,
            self.stderr_bler,
            self.stderr_invoked,
            self.stderr_sc_equiv
        )
    }
}

/// Decoder selection for [`run_trials`].
#[derive(Debug, Clone)]
pub struct DecoderSetup<'a> {
    pub code: &'a CodeSpec,
    pub perms: &'a [AffinePerm],
    pub kind: DecoderKind,
    pub sigma: Option<&'a SigmaParams>,
    pub check: CheckNode,
}

impl<'a> DecoderSetup<'a> {
    pub fn new(code: &'a CodeSpec, perms: &'a [AffinePerm], kind: DecoderKind) -> Self {
        Self { code, perms, kind, sigma: None, check: CheckNode::MinSum }
    }

    pub fn with_sigma(mut self, sigma: &'a SigmaParams) -> Self {
        self.sigma = Some(sigma);
        self
    }

    fn validate(&self) -> Result<()> {
        match self.kind {
            DecoderKind::Sc => Ok(()),
            DecoderKind::Ae if self.perms.is_empty() => {
                Err(Error::InvalidParameter("AE decoding needs an ensemble".into()))
            }
            DecoderKind::Ae => Ok(()),
            DecoderKind::Dae | DecoderKind::Pdae => match self.sigma {
                None => Err(Error::InvalidParameter(format!("{} decoding needs sigma", self.kind))),
                Some(s) if s.len() != self.perms.len() => Err(Error::InvalidParameter(format!(
                    "sigma has {} entries, ensemble has {}",
                    s.len(),
                    self.perms.len()
                ))),
                Some(_) => Ok(()),
            },
        }
    }
}

enum Worker {
    Sc(ScDecoder),
    Ensemble(EnsembleDecoder),
}

fn decode_trial(worker: &mut Worker, setup: &DecoderSetup<'_>, tx: &Transmission) -> TrialOutcome {
    match worker {
        Worker::Sc(dec) => {
            let out = dec.decode(&tx.llr, None).expect("length checked");
            TrialOutcome { error: out.x_hat != tx.x, invoked: 1, sc_equiv: 1.0 }
        }
        Worker::Ensemble(dec) => {
            let out = match setup.kind {
                DecoderKind::Ae => dec.ae_decode(&tx.llr),
                DecoderKind::Dae => dec.dae_decode(&tx.llr, setup.sigma.expect("validated")),
                DecoderKind::Pdae => dec.pdae_decode(&tx.llr, setup.sigma.expect("validated")),
                DecoderKind::Sc => unreachable!(),
            }
            .expect("inputs validated");
            TrialOutcome {
                error: out.x_hat != tx.x,
                invoked: out.num_invoked,
                sc_equiv: out.complexity_sc_equiv,
            }
        }
    }
}

/// Decodes trials `0..` until the stop rule fires and returns the statistics.
pub fn run_trials(setup: &DecoderSetup<'_>, cfg: &ChannelConfig, stop: StopRule, seed: u64) -> Result<SimStats> {
    run_until(setup, cfg, seed, stop.max_trials, |errors, _| errors >= stop.min_errors)
}

/// Decodes trials in order until `done(errors, trials)` holds or `max_trials`
/// is reached. `done` is checked after every trial.
fn run_until(
    setup: &DecoderSetup<'_>,
    cfg: &ChannelConfig,
    seed: u64,
    max_trials: u64,
    done: impl Fn(u64, u64) -> bool,
) -> Result<SimStats> {
    setup.validate()?;
    let noise_var = cfg.noise_variance();
    let make_worker = || match setup.kind {
        DecoderKind::Sc => Worker::Sc(ScDecoder::with_check_node(setup.code, setup.check)),
        _ => Worker::Ensemble(
            EnsembleDecoder::with_check_node(setup.code, setup.perms, setup.check).expect("validated"),
        ),
    };
    let mut acc = Accumulator::default();
    let mut next = 0u64;
    'outer: while next < max_trials {
        let count = BATCH.min(max_trials - next);
        let outcomes = map_trials(next, count, make_worker, |w, t| {
            let tx = draw_transmission(setup.code, noise_var, seed, t);
            decode_trial(w, setup, &tx)
        });
        for o in &outcomes {
            acc.push(o);
            if done(acc.errors, acc.trials) {
                break 'outer;
            }
        }
        next += count;
    }
    Ok(acc.finish())
}

/// Result of [`find_snr_at_bler`].
#[derive(Debug, Clone, Copy)]
pub struct SnrPoint {
    pub snr_db: f64,
    pub stats: SimStats,
}

#[derive(Debug, Clone, Copy)]
pub struct SnrSearch {
    pub target_bler: f64,
    /// Relative tolerance on the measured BLER.
    pub tolerance: f64,
    pub bracket: (f64, f64),
    pub convention: SnrConvention,
    pub seed: u64,
    pub max_evaluations: usize,
}

impl SnrSearch {
    pub fn new(target_bler: f64, tolerance: f64, seed: u64) -> Self {
        Self {
            target_bler,
            tolerance,
            bracket: (-2.0, 10.0),
            convention: SnrConvention::EbN0,
            seed,
            max_evaluations: 40,
        }
    }
}

/// Finds an SNR whose measured BLER lies within `target·(1 ± tolerance)` with
/// at least 100 block errors. Interpolates `ln BLER` linearly inside a
/// shrinking bracket, falling back to bisection.
pub fn find_snr_at_bler(setup: &DecoderSetup<'_>, search: &SnrSearch) -> Result<SnrPoint> {
    let target = search.target_bler;
    if !(target > 0.0 && target < 1.0) {
        return Err(Error::InvalidParameter(format!("target BLER {target} outside (0, 1)")));
    }
    setup.validate()?;
    // Points that are clearly on one side of the window only move the
    // bracket, so their evaluation ends once a 4-sigma Poisson test decides.
    let tol = search.tolerance;
    let done = |errors: u64, trials: u64| {
        let e = errors as f64;
        let below = target * (1.0 - tol) * trials as f64;
        let above = target * (1.0 + tol) * trials as f64;
        errors >= 300 || (below >= 25.0 && e <= below - 4.0 * below.sqrt()) || (e >= 50.0 && e >= above + 4.0 * above.sqrt())
    };
    let max_trials = (400.0 / target).ceil() as u64;
    let eval = |snr: f64| -> Result<SimStats> {
        let cfg = ChannelConfig::for_code(setup.code, snr).with_convention(search.convention);
        run_until(setup, &cfg, search.seed, max_trials, done)
    };
    // Early evaluations must land in the inner half of the window; this keeps
    // repeated searches from stopping at opposite edges.
    let accept = |s: &SimStats, evaluations: usize| {
        let tol = if evaluations < 5 { 0.5 * search.tolerance } else { search.tolerance };
        s.block_errors >= 100 && (s.bler / target - 1.0).abs() <= tol
    };

    let (mut lo, mut hi) = search.bracket;
    let mut b_lo = eval(lo)?;
    let mut b_hi = eval(hi)?;
    if accept(&b_lo, 1) {
        return Ok(SnrPoint { snr_db: lo, stats: b_lo });
    }
    if accept(&b_hi, 2) {
        return Ok(SnrPoint { snr_db: hi, stats: b_hi });
    }
    if b_lo.bler < target || b_hi.bler > target {
        return Err(Error::SearchFailure(format!(
            "bracket [{lo}, {hi}] dB does not straddle BLER {target}: got {} and {}",
            b_lo.bler, b_hi.bler
        )));
    }
    for evaluations in 3..search.max_evaluations + 3 {
        let width = hi - lo;
        let mut snr = 0.5 * (lo + hi);
        if b_hi.bler > 0.0 && b_lo.bler > b_hi.bler {
            let (l0, l1) = (b_lo.bler.ln(), b_hi.bler.ln());
            let guess = lo + width * (l0 - target.ln()) / (l0 - l1);
            snr = guess.clamp(lo + 0.1 * width, hi - 0.1 * width);
        }
        let s = eval(snr)?;
        if accept(&s, evaluations) {
            return Ok(SnrPoint { snr_db: snr, stats: s });
        }
        if s.bler > target {
            lo = snr;
            b_lo = s;
        } else {
            hi = snr;
            b_hi = s;
        }
        if hi - lo < 1e-4 {
            break;
        }
    }
    Err(Error::SearchFailure(format!(
        "no SNR in [{lo:.4}, {hi:.4}] dB reached BLER {target} ± {:.0}% (bracket BLERs {:.3e}, {:.3e})",
        100.0 * search.tolerance,
        b_lo.bler,
        b_hi.bler
    )))
}

/// Per-block observations of a full (non-stopping) ensemble run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleObservation {
    pub n_dec: usize,
    pub correct: bool,
    /// Path metric of the selected attempt.
    pub pm: f64,
    /// `‖y − bpsk(x̂)‖²` on the channel output.
    pub lsm: f64,
    /// The same distance measured on the LLR vector.
    pub lsm_llr: f64,
}

/// Runs all `M` attempts on `trials` blocks and records the oracle and
/// metric observations.
pub fn observe_ensemble(
    code: &CodeSpec,
    perms: &[AffinePerm],
    cfg: &ChannelConfig,
    trials: u64,
    seed: u64,
) -> Result<Vec<EnsembleObservation>> {
    EnsembleDecoder::new(code, perms)?;
    let noise_var = cfg.noise_variance();
    Ok(map_trials(
        0,
        trials,
        || EnsembleDecoder::new(code, perms).expect("validated"),
        |dec, t| {
            let tx = draw_transmission(code, noise_var, seed, t);
            let outcomes = dec.run_all(&tx.llr).expect("length matches");
            let w = crate::ensemble::select_min_pm(&outcomes).expect("no attempt aborts");
            let x_hat = &outcomes[w].x_hat;
            EnsembleObservation {
                n_dec: crate::ensemble::n_dec(&outcomes).expect("non-empty"),
                correct: *x_hat == tx.x,
                pm: outcomes[w].pm,
                lsm: crate::ensemble::lsm(&tx.y_soft, x_hat).expect("length matches"),
                lsm_llr: crate::ensemble::lsm(&tx.llr, x_hat).expect("length matches"),
            }
        },
    ))
}

/// `n_dec` counts; entry `k − 1` counts blocks with `n_dec = k`.
pub fn n_dec_histogram(obs: &[EnsembleObservation], m: usize) -> Vec<u64> {
    let mut counts = vec![0u64; m];
    for o in obs {
        counts[o.n_dec - 1] += 1;
    }
    counts
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiveNumber {
    pub count: usize,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

/// Quartiles by linear interpolation between order statistics.
pub fn five_number_summary(values: &[f64]) -> Option<FiveNumber> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let q = |p: f64| {
        let pos = p * (v.len() - 1) as f64;
        let lo = pos.floor() as usize;
        let hi = pos.ceil() as usize;
        v[lo] + (pos - lo as f64) * (v[hi] - v[lo])
    };
    Some(FiveNumber {
        count: v.len(),
        min: v[0],
        q1: q(0.25),
        median: q(0.5),
        q3: q(0.75),
        max: v[v.len() - 1],
    })
}
