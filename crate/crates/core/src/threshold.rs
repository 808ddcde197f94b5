//! Offline optimisation of the DAE stopping thresholds.
//!
//! A dataset stores, for every simulated block, the running minima
//! `d⁽¹⁾..d⁽ᴹ⁾` of the attempt path metrics, whether the selection after each
//! step is correct, and whether the full ensemble is correct. An error
//! allocation `e` assigns each step a number of additional errors it may
//! introduce on the blocks the full ensemble gets right; `σ_i` is then the
//! largest threshold that keeps step `i` within `e_i`. A hill-climbing search
//! moves allocation quanta between steps to reduce the mean number of
//! invoked decoders.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use serde::{Deserialize, Serialize};

use crate::automorphism::AffinePerm;
use crate::code::CodeSpec;
use crate::ensemble::{EnsembleDecoder, SigmaParams, SigmaProvenance};
use crate::sim::{draw_transmission, map_trials, ChannelConfig};
use crate::{Error, Result};

const MAGIC: &[u8; 8] = b"SQAEDS01";
/// Step masks are stored in a `u64`.
pub const MAX_ENSEMBLE: usize = 64;

/// One block of the dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    /// Running minimum of the path metrics after each step.
    pub d: Vec<f64>,
    /// Bit `i` set iff the selection after step `i + 1` equals the codeword.
    pub step_correct: u64,
    pub final_correct: bool,
    /// Some attempt produced the codeword but the minimum-metric rule did not pick it.
    pub ml_error: bool,
}

impl TraceRecord {
    pub fn step_ok(&self, i: usize) -> bool {
        self.step_correct >> i & 1 == 1
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DatasetHeader {
    pub code: String,
    pub ensemble_id: String,
    pub snr_db: f64,
    pub seed: u64,
    #[serde(rename = "M")]
    pub m: usize,
    pub records: usize,
}

/// Column-oriented collection of [`TraceRecord`]s.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub header: DatasetHeader,
    d: Vec<f64>,
    step_correct: Vec<u64>,
    final_correct: Vec<bool>,
    ml_error: Vec<bool>,
}

impl Dataset {
    pub fn new(m: usize) -> Result<Self> {
        if m == 0 || m > MAX_ENSEMBLE {
            return Err(Error::InvalidParameter(format!("ensemble size {m} outside 1..={MAX_ENSEMBLE}")));
        }
        Ok(Self {
            header: DatasetHeader { m, ..Default::default() },
            d: Vec::new(),
            step_correct: Vec::new(),
            final_correct: Vec::new(),
            ml_error: Vec::new(),
        })
    }

    pub fn ensemble_size(&self) -> usize {
        self.header.m
    }

    pub fn len(&self) -> usize {
        self.final_correct.len()
    }

    pub fn is_empty(&self) -> bool {
        self.final_correct.is_empty()
    }

    pub fn push(&mut self, r: &TraceRecord) -> Result<()> {
        let m = self.header.m;
        if r.d.len() != m {
            return Err(Error::InvalidInput(format!("record has {} steps, dataset M = {m}", r.d.len())));
        }
        if r.d.iter().any(|v| v.is_nan()) || r.d.windows(2).any(|w| w[1] > w[0]) {
            return Err(Error::InvalidInput("running minima must be non-increasing".into()));
        }
        if r.final_correct != r.step_ok(m - 1) {
            return Err(Error::InvalidInput("final flag disagrees with last step".into()));
        }
        self.d.extend_from_slice(&r.d);
        self.step_correct.push(r.step_correct);
        self.final_correct.push(r.final_correct);
        self.ml_error.push(r.ml_error);
        self.header.records = self.len();
        Ok(())
    }

    pub fn record(&self, idx: usize) -> TraceRecord {
        TraceRecord {
            d: self.d_row(idx).to_vec(),
            step_correct: self.step_correct[idx],
            final_correct: self.final_correct[idx],
            ml_error: self.ml_error[idx],
        }
    }

    #[inline]
    fn d_row(&self, idx: usize) -> &[f64] {
        let m = self.header.m;
        &self.d[idx * m..(idx + 1) * m]
    }

    #[inline]
    fn step_ok(&self, idx: usize, i: usize) -> bool {
        self.step_correct[idx] >> i & 1 == 1
    }

    /// Number of records the full ensemble decodes correctly (`|B_S|`).
    pub fn num_successful(&self) -> usize {
        self.final_correct.iter().filter(|&&c| c).count()
    }

    /// Block error rate of the full ensemble on this dataset (`ξ`).
    pub fn ensemble_bler(&self) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        1.0 - self.num_successful() as f64 / self.len() as f64
    }

    pub fn ml_error_rate(&self) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        self.ml_error.iter().filter(|&&c| c).count() as f64 / self.len() as f64
    }

    /// Records where the full ensemble succeeds.
    pub fn successful(&self) -> Dataset {
        let mut out = Dataset::new(self.header.m).expect("same M");
        out.header = self.header.clone();
        for idx in (0..self.len()).filter(|&i| self.final_correct[i]) {
            out.d.extend_from_slice(self.d_row(idx));
            out.step_correct.push(self.step_correct[idx]);
            out.final_correct.push(true);
            out.ml_error.push(self.ml_error[idx]);
        }
        out.header.records = out.len();
        out
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        let header = serde_json::to_vec(&self.header)?;
        w.write_all(MAGIC)?;
        w.write_u32::<LittleEndian>(header.len() as u32)?;
        w.write_all(&header)?;
        for idx in 0..self.len() {
            for &v in self.d_row(idx) {
                w.write_f64::<LittleEndian>(v)?;
            }
            w.write_u64::<LittleEndian>(self.step_correct[idx])?;
            w.write_u8(self.final_correct[idx] as u8 | (self.ml_error[idx] as u8) << 1)?;
        }
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Malformed("not a dataset file".into()));
        }
        let hlen = r.read_u32::<LittleEndian>()? as usize;
        let mut hbuf = vec![0u8; hlen];
        r.read_exact(&mut hbuf)?;
        let header: DatasetHeader = serde_json::from_slice(&hbuf)?;
        let mut out = Dataset::new(header.m)?;
        let records = header.records;
        out.header = header;
        let mut d = vec![0.0; out.header.m];
        for _ in 0..records {
            for v in d.iter_mut() {
                *v = r.read_f64::<LittleEndian>()?;
            }
            let step_correct = r.read_u64::<LittleEndian>()?;
            let flags = r.read_u8()?;
            out.push(&TraceRecord {
                d: d.clone(),
                step_correct,
                final_correct: flags & 1 == 1,
                ml_error: flags & 2 == 2,
            })
            .map_err(|e| Error::Malformed(format!("record {}: {e}", out.len())))?;
        }
        Ok(out)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut buf = Vec::new();
        self.write_to(&mut buf)?;
        fs::write(path, buf)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path)?;
        Self::read_from(bytes.as_slice())
    }
}

/// Builds a [`TraceRecord`] from the full set of attempt metrics and the
/// correctness of each attempt.
pub fn trace_from_attempts(pm: &[f64], correct: &[bool]) -> TraceRecord {
    let mut d = Vec::with_capacity(pm.len());
    let mut step_correct = 0u64;
    let mut best = 0usize;
    for (i, &m) in pm.iter().enumerate() {
        if m < pm[best] {
            best = i;
        }
        d.push(pm[best]);
        if correct[best] {
            step_correct |= 1 << i;
        }
    }
    let final_correct = correct[best];
    TraceRecord {
        d,
        step_correct,
        final_correct,
        ml_error: !final_correct && correct.iter().any(|&c| c),
    }
}

/// Simulates `count` blocks at the given channel and records their traces.
/// Block `t` uses `sim::trial_rng(seed, t)`.
pub fn collect_dataset(
    code: &CodeSpec,
    perms: &[AffinePerm],
    channel: &ChannelConfig,
    count: usize,
    seed: u64,
) -> Result<Dataset> {
    let mut out = Dataset::new(perms.len())?;
    EnsembleDecoder::new(code, perms)?;
    let noise_var = channel.noise_variance();
    let records = map_trials(
        0,
        count as u64,
        || EnsembleDecoder::new(code, perms).expect("validated"),
        |dec, t| {
            let tx = draw_transmission(code, noise_var, seed, t);
            let attempts = dec.run_all(&tx.llr).expect("length matches");
            let pm: Vec<f64> = attempts.iter().map(|a| a.pm).collect();
            let correct: Vec<bool> = attempts.iter().map(|a| a.x_hat == tx.x).collect();
            trace_from_attempts(&pm, &correct)
        },
    );
    for r in &records {
        out.push(r)?;
    }
    out.header.code = code.label();
    out.header.snr_db = channel.snr_db;
    out.header.seed = seed;
    Ok(out)
}

/// Error budget per step; the last entry is always zero.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorAllocation {
    pub e: Vec<i64>,
}

impl ErrorAllocation {
    /// Even split of `budget` over steps `1..M−1` with the remainder on
    /// step `M−1`. If the rounding overshoots, the deficit is taken back from
    /// the latest steps and `clamped` is set.
    pub fn initial(m: usize, budget: u64) -> (Self, bool) {
        let mut e = vec![0i64; m];
        if m < 2 {
            return (Self { e }, false);
        }
        let budget = budget as i64;
        let share = (budget + m as i64 - 2) / (m as i64 - 1);
        for v in e.iter_mut().take(m - 2) {
            *v = share;
        }
        e[m - 2] = budget - share * (m as i64 - 2);
        let mut clamped = false;
        if e[m - 2] < 0 {
            clamped = true;
            let mut deficit = -e[m - 2];
            e[m - 2] = 0;
            for v in e[..m - 2].iter_mut().rev() {
                let take = deficit.min(*v);
                *v -= take;
                deficit -= take;
            }
        }
        (Self { e }, clamped)
    }

    pub fn total(&self) -> i64 {
        self.e.iter().sum()
    }
}

/// Thresholds for an allocation. Steps are processed in order; at step `i`
/// the blocks still running whose step-`i` selection is wrong but whose final
/// selection is right are sorted by `d⁽ⁱ⁾`, and `σ_i` is the `(e_i+1)`-th
/// smallest value (`+∞` if there are at most `e_i` of them). Blocks with
/// `d⁽ⁱ⁾ < σ_i` then stop.
pub fn sigma_from_allocation(dataset: &Dataset, alloc: &ErrorAllocation) -> Result<Vec<f64>> {
    let m = dataset.ensemble_size();
    if alloc.e.len() != m {
        return Err(Error::InvalidParameter(format!(
            "allocation has {} entries, dataset M = {m}",
            alloc.e.len()
        )));
    }
    if let Some(v) = alloc.e.iter().find(|&&v| v < 0) {
        return Err(Error::InvalidParameter(format!("negative allocation entry {v}")));
    }
    let mut active: Vec<usize> = (0..dataset.len()).collect();
    let mut sigma = vec![f64::INFINITY; m];
    let mut harmful = Vec::new();
    for i in 0..m - 1 {
        harmful.clear();
        harmful.extend(
            active
                .iter()
                .filter(|&&r| dataset.final_correct[r] && !dataset.step_ok(r, i))
                .map(|&r| dataset.d_row(r)[i]),
        );
        let e = alloc.e[i] as usize;
        if harmful.len() > e {
            let (_, nth, _) = harmful.select_nth_unstable_by(e, f64::total_cmp);
            sigma[i] = *nth;
        }
        let s = sigma[i];
        active.retain(|&r| dataset.d_row(r)[i] >= s);
    }
    Ok(sigma)
}

/// Outcome of replaying fixed thresholds over a dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct Replay {
    /// Mean number of invoked decoders.
    pub mean_invoked: f64,
    /// Net errors introduced by stopping at each step relative to the full
    /// ensemble (wrong-but-final-right minus right-but-final-wrong).
    pub added_errors: Vec<i64>,
    /// Block errors of the early-stopped decoder.
    pub errors: u64,
}

/// 0-based step after which the decoder with thresholds `sigma` stops.
#[inline]
fn stopping_step(d: &[f64], sigma: &[f64]) -> usize {
    (0..d.len()).find(|&i| d[i] < sigma[i]).unwrap_or(d.len() - 1)
}

/// Number of decoders each record would invoke under `sigma`.
pub fn replay_invocations(dataset: &Dataset, sigma: &[f64]) -> Result<Vec<usize>> {
    let m = dataset.ensemble_size();
    if sigma.len() != m {
        return Err(Error::InvalidParameter(format!("sigma has {} entries, dataset M = {m}", sigma.len())));
    }
    Ok((0..dataset.len()).map(|r| stopping_step(dataset.d_row(r), sigma) + 1).collect())
}

pub fn replay_complexity(dataset: &Dataset, sigma: &[f64]) -> Result<Replay> {
    let m = dataset.ensemble_size();
    if sigma.len() != m {
        return Err(Error::InvalidParameter(format!("sigma has {} entries, dataset M = {m}", sigma.len())));
    }
    let mut added = vec![0i64; m];
    let mut invoked = 0u64;
    let mut errors = 0u64;
    for r in 0..dataset.len() {
        let stop = stopping_step(dataset.d_row(r), sigma);
        invoked += stop as u64 + 1;
        let ok = dataset.step_ok(r, stop);
        let fin = dataset.final_correct[r];
        if !ok {
            errors += 1;
        }
        if !ok && fin {
            added[stop] += 1;
        } else if ok && !fin {
            added[stop] -= 1;
        }
    }
    let mean_invoked = if dataset.is_empty() { 0.0 } else { invoked as f64 / dataset.len() as f64 };
    Ok(Replay { mean_invoked, added_errors: added, errors })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchParams {
    /// Total budget `E`.
    pub budget: u64,
    pub kappa: u64,
    pub max_iterations: usize,
}

/// One hill-climbing iteration: where a quantum was added and removed, and
/// the mean complexity afterwards.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchStep {
    pub iteration: usize,
    /// 0-based step that received `κ`.
    pub added_at: usize,
    /// 0-based step that gave up `κ`.
    pub removed_at: usize,
    pub mean_invoked: f64,
    pub allocation: Vec<i64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchResult {
    pub allocation: ErrorAllocation,
    pub sigma: Vec<f64>,
    pub mean_invoked: f64,
    pub initial: ErrorAllocation,
    pub initial_mean_invoked: f64,
    pub initial_clamped: bool,
    pub iterations: usize,
    pub log: Vec<SearchStep>,
}

fn evaluate(dataset: &Dataset, alloc: &ErrorAllocation) -> Result<f64> {
    let sigma = sigma_from_allocation(dataset, alloc)?;
    Ok(replay_complexity(dataset, &sigma)?.mean_invoked)
}

/// Greedy allocation search. `dataset` should contain only blocks the full
/// ensemble decodes correctly (see [`Dataset::successful`]).
///
/// Each iteration first adds `κ` to the step whose increase lowers the mean
/// complexity most, then removes `κ` from the step whose decrease hurts
/// least. Steps holding less than `κ` cannot give up a quantum. The search
/// stops when both choices coincide or after `max_iterations`.
pub fn error_allocation_search(dataset: &Dataset, params: &SearchParams) -> Result<SearchResult> {
    let m = dataset.ensemble_size();
    if params.kappa == 0 {
        return Err(Error::InvalidParameter("kappa must be positive".into()));
    }
    let kappa = params.kappa as i64;
    let (initial, clamped) = ErrorAllocation::initial(m, params.budget);
    let initial_mean = evaluate(dataset, &initial)?;
    let mut best = initial.clone();
    let mut best_mean = initial_mean;
    let mut log = Vec::new();
    let mut t = 0;

    while m >= 2 && t < params.max_iterations {
        let mut i_min = 0;
        let mut m_min = f64::INFINITY;
        for i in 0..m - 1 {
            let mut cand = best.clone();
            cand.e[i] += kappa;
            let v = evaluate(dataset, &cand)?;
            if v < m_min {
                m_min = v;
                i_min = i;
            }
        }
        let mut grown = best.clone();
        grown.e[i_min] += kappa;

        let mut j_min = i_min;
        let mut m_min = f64::INFINITY;
        for j in 0..m - 1 {
            if grown.e[j] < kappa {
                continue;
            }
            let mut cand = grown.clone();
            cand.e[j] -= kappa;
            let v = evaluate(dataset, &cand)?;
            if v < m_min {
                m_min = v;
                j_min = j;
            }
        }
        t += 1;
        if i_min == j_min {
            log.push(SearchStep {
                iteration: t,
                added_at: i_min,
                removed_at: j_min,
                mean_invoked: best_mean,
                allocation: best.e.clone(),
            });
            break;
        }
        grown.e[j_min] -= kappa;
        best = grown;
        best_mean = m_min;
        log.push(SearchStep {
            iteration: t,
            added_at: i_min,
            removed_at: j_min,
            mean_invoked: best_mean,
            allocation: best.e.clone(),
        });
    }

    let sigma = sigma_from_allocation(dataset, &best)?;
    Ok(SearchResult {
        allocation: best,
        sigma,
        mean_invoked: best_mean,
        initial,
        initial_mean_invoked: initial_mean,
        initial_clamped: clamped,
        iterations: t,
        log,
    })
}

/// Budget `E = ⌊ε·|B_S|⌋`.
pub fn error_budget(epsilon: f64, successful: usize) -> u64 {
    (epsilon * successful as f64).floor() as u64
}

/// Full pipeline: restrict to successful blocks, search, and package the
/// thresholds with their provenance.
pub fn optimize_sigma(
    dataset: &Dataset,
    epsilon: f64,
    kappa: u64,
    max_iterations: usize,
) -> Result<(SigmaParams, SearchResult)> {
    if !(0.0..1.0).contains(&epsilon) {
        return Err(Error::InvalidParameter(format!("epsilon {epsilon} outside [0, 1)")));
    }
    let bs = dataset.successful();
    let params = SearchParams {
        budget: error_budget(epsilon, bs.len()),
        kappa,
        max_iterations,
    };
    let result = error_allocation_search(&bs, &params)?;
    let sigma = SigmaParams::with_provenance(
        result.sigma.clone(),
        SigmaProvenance {
            code: dataset.header.code.clone(),
            ensemble_id: dataset.header.ensemble_id.clone(),
            xi: dataset.ensemble_bler(),
            epsilon,
            dataset_size: dataset.len(),
            seed: dataset.header.seed,
        },
    )?;
    Ok((sigma, result))
}
