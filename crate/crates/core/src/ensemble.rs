//! Automorphism-ensemble decoders and their complexity baselines.
//!
//! An attempt `j` decodes `π_j⁻¹(SC(π_j(y)))`. The plain ensemble runs all `M`
//! attempts and keeps the one with the smallest path metric. The dynamic
//! variant runs attempts in order and stops after attempt `i` once the running
//! minimum `d⁽ⁱ⁾ = min_{j≤i} m_j` falls below `σ_i`. The partial variant also
//! aborts attempt `i ≥ 2` as soon as its metric reaches `d⁽ⁱ⁻¹⁾`.

use serde::{Deserialize, Serialize};

use crate::automorphism::AffinePerm;
use crate::code::CodeSpec;
use crate::sc::{CheckNode, ScDecoder, ScOutcome};
use crate::{Bit, Error, Result};

/// Per-attempt summary kept in an [`EnsembleOutcome`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttemptMetric {
    pub pm: f64,
    pub aborted: bool,
    pub complexity_fraction: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleOutcome {
    pub x_hat: Vec<Bit>,
    /// 0-based index of the selected attempt.
    pub selected: usize,
    /// Number of attempts started (`U`).
    pub num_invoked: usize,
    pub attempts: Vec<AttemptMetric>,
    /// Sum of per-attempt complexity fractions, in SC-decoder units.
    pub complexity_sc_equiv: f64,
}

impl EnsembleOutcome {
    /// Final path metric of the selected attempt.
    pub fn selected_pm(&self) -> f64 {
        self.attempts[self.selected].pm
    }
}

/// Stopping thresholds `σ_1..σ_M` with `σ_M = +∞`, plus where they came from.
#[derive(Debug, Clone, PartialEq)]
pub struct SigmaParams {
    sigma: Vec<f64>,
    pub provenance: SigmaProvenance,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SigmaProvenance {
    pub code: String,
    pub ensemble_id: String,
    pub xi: f64,
    pub epsilon: f64,
    pub dataset_size: usize,
    pub seed: u64,
}

impl SigmaParams {
    pub fn new(sigma: Vec<f64>) -> Result<Self> {
        Self::with_provenance(sigma, SigmaProvenance::default())
    }

    pub fn with_provenance(sigma: Vec<f64>, provenance: SigmaProvenance) -> Result<Self> {
        if sigma.is_empty() {
            return Err(Error::InvalidParameter("sigma must have at least one entry".into()));
        }
        if sigma.iter().any(|s| s.is_nan() || *s < 0.0) {
            return Err(Error::InvalidParameter(format!("sigma entries must be >= 0: {sigma:?}")));
        }
        if *sigma.last().expect("nonempty") != f64::INFINITY {
            return Err(Error::InvariantViolation("last sigma entry must be +inf".into()));
        }
        Ok(Self { sigma, provenance })
    }

    /// `σ = [0, …, 0, ∞]`: never stops early.
    pub fn never_stop(m: usize) -> Self {
        let mut sigma = vec![0.0; m];
        sigma[m - 1] = f64::INFINITY;
        Self::new(sigma).expect("valid")
    }

    /// `σ = [∞, …, ∞]`: always stops after the first attempt.
    pub fn always_stop(m: usize) -> Self {
        Self::new(vec![f64::INFINITY; m]).expect("valid")
    }

    pub fn values(&self) -> &[f64] {
        &self.sigma
    }

    pub fn len(&self) -> usize {
        self.sigma.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sigma.is_empty()
    }

    /// JSON with `+∞` written as the string `"inf"`.
    pub fn to_json(&self) -> String {
        let file = SigmaFile {
            code: self.provenance.code.clone(),
            ensemble_id: self.provenance.ensemble_id.clone(),
            m: self.sigma.len(),
            sigma: self.sigma.iter().map(|&s| SigmaValue::from(s)).collect(),
            xi: self.provenance.xi,
            epsilon: self.provenance.epsilon,
            dataset_size: self.provenance.dataset_size,
            seed: self.provenance.seed,
        };
        serde_json::to_string_pretty(&file).expect("plain data serialises")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: SigmaFile = serde_json::from_str(text)?;
        let sigma = file
            .sigma
            .into_iter()
            .map(f64::try_from)
            .collect::<Result<Vec<f64>>>()?;
        if sigma.len() != file.m {
            return Err(Error::Malformed(format!(
                "M = {} but {} sigma entries",
                file.m,
                sigma.len()
            )));
        }
        Self::with_provenance(
            sigma,
            SigmaProvenance {
                code: file.code,
                ensemble_id: file.ensemble_id,
                xi: file.xi,
                epsilon: file.epsilon,
                dataset_size: file.dataset_size,
                seed: file.seed,
            },
        )
    }
}

#[derive(Serialize, Deserialize)]
struct SigmaFile {
    code: String,
    ensemble_id: String,
    #[serde(rename = "M")]
    m: usize,
    sigma: Vec<SigmaValue>,
    xi: f64,
    epsilon: f64,
    dataset_size: usize,
    seed: u64,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum SigmaValue {
    Finite(f64),
    Text(String),
}

impl From<f64> for SigmaValue {
    fn from(v: f64) -> Self {
        if v == f64::INFINITY {
            SigmaValue::Text("inf".into())
        } else {
            SigmaValue::Finite(v)
        }
    }
}

impl TryFrom<SigmaValue> for f64 {
    type Error = Error;

    fn try_from(v: SigmaValue) -> Result<f64> {
        match v {
            SigmaValue::Finite(x) => Ok(x),
            SigmaValue::Text(s) if s == "inf" => Ok(f64::INFINITY),
            SigmaValue::Text(s) => Err(Error::Malformed(format!("sigma entry `{s}`"))),
        }
    }
}

/// An ensemble of automorphism decoders over one code, with scratch space.
#[derive(Debug, Clone)]
pub struct EnsembleDecoder {
    code: CodeSpec,
    perms: Vec<AffinePerm>,
    sc: ScDecoder,
    permuted: Vec<f64>,
}

impl EnsembleDecoder {
    pub fn new(code: &CodeSpec, perms: &[AffinePerm]) -> Result<Self> {
        Self::with_check_node(code, perms, CheckNode::MinSum)
    }

    pub fn with_check_node(code: &CodeSpec, perms: &[AffinePerm], check: CheckNode) -> Result<Self> {
        if perms.is_empty() {
            return Err(Error::InvalidParameter("ensemble needs at least one permutation".into()));
        }
        if let Some(p) = perms.iter().find(|p| p.len() != code.length()) {
            return Err(Error::InvalidParameter(format!(
                "permutation of length {} for code of length {}",
                p.len(),
                code.length()
            )));
        }
        Ok(Self {
            code: code.clone(),
            perms: perms.to_vec(),
            sc: ScDecoder::with_check_node(code, check),
            permuted: vec![0.0; code.length()],
        })
    }

    pub fn code(&self) -> &CodeSpec {
        &self.code
    }

    pub fn perms(&self) -> &[AffinePerm] {
        &self.perms
    }

    pub fn size(&self) -> usize {
        self.perms.len()
    }

    /// Attempt `j`: permute, decode, un-permute. Path metric and abort status
    /// pass through unchanged.
    pub fn adec(&mut self, llr: &[f64], j: usize, abort_threshold: Option<f64>) -> Result<ScOutcome> {
        let perm = &self.perms[j];
        perm.apply_into(llr, &mut self.permuted)?;
        let mut out = self.sc.decode(&self.permuted, abort_threshold)?;
        if !out.aborted {
            let mut x = vec![0; out.x_hat.len()];
            perm.apply_inverse_into(&out.x_hat, &mut x)?;
            out.x_hat = x;
        }
        Ok(out)
    }

    /// Runs every attempt without stopping.
    pub fn run_all(&mut self, llr: &[f64]) -> Result<Vec<ScOutcome>> {
        (0..self.size()).map(|j| self.adec(llr, j, None)).collect()
    }

    /// Plain AE-M-SC: all attempts, minimum path metric wins.
    pub fn ae_decode(&mut self, llr: &[f64]) -> Result<EnsembleOutcome> {
        let outcomes = self.run_all(llr)?;
        let selected = select_min_pm(&outcomes).expect("no attempt aborted");
        Ok(EnsembleOutcome {
            x_hat: outcomes[selected].x_hat.clone(),
            selected,
            num_invoked: outcomes.len(),
            attempts: outcomes.iter().map(metric_of).collect(),
            complexity_sc_equiv: outcomes.len() as f64,
        })
    }

    /// Sequential decoding with the `d⁽ⁱ⁾ < σ_i` stopping rule.
    pub fn dae_decode(&mut self, llr: &[f64], sigma: &SigmaParams) -> Result<EnsembleOutcome> {
        self.sequential(llr, sigma, false)
    }

    /// [`Self::dae_decode`] plus aborting attempts that can no longer win.
    pub fn pdae_decode(&mut self, llr: &[f64], sigma: &SigmaParams) -> Result<EnsembleOutcome> {
        self.sequential(llr, sigma, true)
    }

    fn sequential(&mut self, llr: &[f64], sigma: &SigmaParams, partial: bool) -> Result<EnsembleOutcome> {
        let m = self.size();
        if sigma.len() != m {
            return Err(Error::InvalidParameter(format!(
                "sigma has {} entries for an ensemble of {m}",
                sigma.len()
            )));
        }
        let mut attempts = Vec::with_capacity(m);
        let mut best: Option<(usize, ScOutcome)> = None;
        let mut d = f64::INFINITY;
        let mut complexity = 0.0;
        for i in 0..m {
            let threshold = if partial && i > 0 { Some(d) } else { None };
            let out = self.adec(llr, i, threshold)?;
            complexity += out.complexity_fraction;
            attempts.push(metric_of(&out));
            if !out.aborted && out.pm < d {
                d = out.pm;
                best = Some((i, out));
            }
            if d < sigma.values()[i] {
                break;
            }
        }
        let (selected, winner) = best.expect("first attempt is never aborted");
        Ok(EnsembleOutcome {
            x_hat: winner.x_hat,
            selected,
            num_invoked: attempts.len(),
            attempts,
            complexity_sc_equiv: complexity,
        })
    }
}

fn metric_of(out: &ScOutcome) -> AttemptMetric {
    AttemptMetric {
        pm: out.pm,
        aborted: out.aborted,
        complexity_fraction: out.complexity_fraction,
    }
}

/// Index of the completed attempt with the smallest path metric, lowest
/// index on ties.
pub fn select_min_pm(outcomes: &[ScOutcome]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (j, o) in outcomes.iter().enumerate() {
        if o.aborted {
            continue;
        }
        if best.is_none_or(|b| o.pm < outcomes[b].pm) {
            best = Some(j);
        }
    }
    best
}

pub fn adec(llr: &[f64], perm: &AffinePerm, code: &CodeSpec, abort_threshold: Option<f64>) -> Result<ScOutcome> {
    EnsembleDecoder::new(code, std::slice::from_ref(perm))?.adec(llr, 0, abort_threshold)
}

pub fn ae_decode(llr: &[f64], perms: &[AffinePerm], code: &CodeSpec) -> Result<EnsembleOutcome> {
    EnsembleDecoder::new(code, perms)?.ae_decode(llr)
}

pub fn dae_decode(
    llr: &[f64],
    perms: &[AffinePerm],
    code: &CodeSpec,
    sigma: &SigmaParams,
) -> Result<EnsembleOutcome> {
    EnsembleDecoder::new(code, perms)?.dae_decode(llr, sigma)
}

pub fn pdae_decode(
    llr: &[f64],
    perms: &[AffinePerm],
    code: &CodeSpec,
    sigma: &SigmaParams,
) -> Result<EnsembleOutcome> {
    EnsembleDecoder::new(code, perms)?.pdae_decode(llr, sigma)
}

/// Least-squares metric `‖y − bpsk(x̂)‖²` with `0 ↦ +1`, `1 ↦ −1`.
pub fn lsm(y_soft: &[f64], x_hat: &[Bit]) -> Result<f64> {
    if y_soft.len() != x_hat.len() {
        return Err(Error::InvalidInput(format!(
            "received vector has length {}, estimate {}",
            y_soft.len(),
            x_hat.len()
        )));
    }
    Ok(y_soft
        .iter()
        .zip(x_hat)
        .map(|(&y, &b)| {
            let s = 1.0 - 2.0 * b as f64;
            (y - s) * (y - s)
        })
        .sum())
}

/// Smallest subset size that is guaranteed to contain the ensemble winner:
/// `M − c + 1` where `c` attempts returned the winning codeword.
pub fn n_dec(outcomes: &[ScOutcome]) -> Result<usize> {
    let winner = select_min_pm(outcomes)
        .ok_or_else(|| Error::InvalidInput("n_dec needs at least one completed attempt".into()))?;
    let x = &outcomes[winner].x_hat;
    let copies = outcomes.iter().filter(|o| !o.aborted && &o.x_hat == x).count();
    Ok(outcomes.len() - copies + 1)
}

fn check_distribution(dist: &[f64]) -> Result<()> {
    if dist.is_empty() {
        return Err(Error::InvalidInput("empty distribution".into()));
    }
    if dist.iter().any(|p| !p.is_finite() || *p < 0.0) {
        return Err(Error::InvalidInput(format!("distribution has invalid entries: {dist:?}")));
    }
    let total: f64 = dist.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidInput(format!("distribution sums to {total}, not 1")));
    }
    Ok(())
}

/// Fixed-order oracle complexity `Σ_k (M+1)/(M−k+2)·P(n_dec = k)`;
/// `dist[k − 1] = P(n_dec = k)`.
pub fn fo_complexity(dist: &[f64], m: usize) -> Result<f64> {
    check_distribution(dist)?;
    if dist.len() != m {
        return Err(Error::InvalidInput(format!(
            "distribution over {} values for M = {m}",
            dist.len()
        )));
    }
    Ok(dist
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let k = (i + 1) as f64;
            (m as f64 + 1.0) / (m as f64 - k + 2.0) * p
        })
        .sum())
}

/// Redundancy oracle complexity `E[n_dec]`.
pub fn ro_complexity(dist: &[f64]) -> Result<f64> {
    check_distribution(dist)?;
    Ok(dist.iter().enumerate().map(|(i, p)| (i + 1) as f64 * p).sum())
}

/// Normalises a histogram of `n_dec` counts (`counts[k − 1]`).
pub fn histogram_to_distribution(counts: &[u64]) -> Vec<f64> {
    let total: u64 = counts.iter().sum();
    counts.iter().map(|&c| c as f64 / total.max(1) as f64).collect()
}

/// Empirical equivalence screen: both permutations give the same estimate on
/// every supplied LLR vector.
pub fn empirically_equivalent(
    p1: &AffinePerm,
    p2: &AffinePerm,
    code: &CodeSpec,
    llrs: &[Vec<f64>],
) -> Result<bool> {
    let mut dec = EnsembleDecoder::new(code, &[p1.clone(), p2.clone()])?;
    for llr in llrs {
        let a = dec.adec(llr, 0, None)?;
        let b = dec.adec(llr, 1, None)?;
        if a.x_hat != b.x_hat {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automorphism::{sample_blta, sample_ensemble, BltaProfile};
    use crate::sc::sc_decode;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn noisy_llr(code: &CodeSpec, rng: &mut ChaCha8Rng, noise: f64) -> (Vec<Bit>, Vec<f64>) {
        let msg: Vec<Bit> = (0..code.dimension()).map(|_| rng.random::<bool>() as Bit).collect();
        let x = code.encode_message(&msg).unwrap();
        let var = noise * noise;
        let llr = x
            .iter()
            .map(|&b| {
                let n: f64 = rng.sample(StandardNormal);
                2.0 * ((1.0 - 2.0 * b as f64) + noise * n) / var
            })
            .collect();
        (x, llr)
    }

    fn setup(seed: u64, m: usize) -> (CodeSpec, Vec<AffinePerm>, ChaCha8Rng) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let code = CodeSpec::reed_muller(7, 3).unwrap();
        let perms = sample_ensemble(m, &BltaProfile::full(7), &code, &mut rng).unwrap();
        (code, perms, rng)
    }

    #[test]
    fn identity_adec_is_plain_sc() {
        let (code, _, mut rng) = setup(1, 1);
        let id = AffinePerm::identity(7);
        for _ in 0..50 {
            let (_, llr) = noisy_llr(&code, &mut rng, 0.8);
            assert_eq!(adec(&llr, &id, &code, None).unwrap(), sc_decode(&llr, &code, None).unwrap());
        }
    }

    #[test]
    fn noiseless_input_returns_transmitted_codeword() {
        let (code, perms, mut rng) = setup(2, 4);
        let msg: Vec<Bit> = (0..code.dimension()).map(|_| rng.random::<bool>() as Bit).collect();
        let x = code.encode_message(&msg).unwrap();
        let llr: Vec<f64> = x.iter().map(|&b| if b == 0 { 5.0 } else { -5.0 }).collect();
        for p in &perms {
            let out = adec(&llr, p, &code, None).unwrap();
            assert_eq!(out.x_hat, x);
            assert_eq!(out.pm, 0.0);
        }
    }

    #[test]
    fn adec_matches_explicit_pipeline() {
        let (code, perms, mut rng) = setup(3, 4);
        for _ in 0..100 {
            let (_, llr) = noisy_llr(&code, &mut rng, 0.9);
            for p in &perms {
                let permuted = p.apply(&llr).unwrap();
                let sc = sc_decode(&permuted, &code, None).unwrap();
                let back = p.inverse().apply(&sc.x_hat).unwrap();
                let out = adec(&llr, p, &code, None).unwrap();
                assert_eq!(out.x_hat, back);
                assert_eq!(out.pm, sc.pm);
                assert!(code.is_codeword(&out.x_hat));
            }
        }
    }

    #[test]
    fn ae_single_and_brute_force_min() {
        let (code, perms, mut rng) = setup(4, 8);
        for _ in 0..100 {
            let (_, llr) = noisy_llr(&code, &mut rng, 0.9);
            let single = ae_decode(&llr, &perms[..1], &code).unwrap();
            assert_eq!(single.x_hat, adec(&llr, &perms[0], &code, None).unwrap().x_hat);

            let out = ae_decode(&llr, &perms, &code).unwrap();
            let pms: Vec<f64> = perms.iter().map(|p| adec(&llr, p, &code, None).unwrap().pm).collect();
            let min = pms.iter().cloned().fold(f64::INFINITY, f64::min);
            let first = pms.iter().position(|&v| v == min).unwrap();
            assert_eq!(out.selected, first);
            assert_eq!(out.x_hat, adec(&llr, &perms[first], &code, None).unwrap().x_hat);
            assert_eq!(out.num_invoked, 8);
            assert_eq!(out.complexity_sc_equiv, 8.0);
        }
    }

    #[test]
    fn ties_select_first_attempt() {
        let (code, perms, _) = setup(5, 3);
        let llr = vec![4.0; 128];
        let out = ae_decode(&llr, &perms, &code).unwrap();
        assert_eq!(out.selected, 0);
    }

    #[test]
    fn trivial_sigma_settings() {
        let (code, perms, mut rng) = setup(6, 8);
        let mut dec = EnsembleDecoder::new(&code, &perms).unwrap();
        for _ in 0..100 {
            let (_, llr) = noisy_llr(&code, &mut rng, 0.9);
            let first = dec.dae_decode(&llr, &SigmaParams::always_stop(8)).unwrap();
            assert_eq!(first.num_invoked, 1);
            let full = dec.dae_decode(&llr, &SigmaParams::never_stop(8)).unwrap();
            let ae = dec.ae_decode(&llr).unwrap();
            assert_eq!(full, ae);
        }
    }

    #[test]
    fn pdae_matches_dae_and_is_cheaper() {
        let (code, perms, mut rng) = setup(7, 8);
        let mut dec = EnsembleDecoder::new(&code, &perms).unwrap();
        let sigma = SigmaParams::new(vec![2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, f64::INFINITY]).unwrap();
        let mut aborted = 0;
        for _ in 0..500 {
            let (_, llr) = noisy_llr(&code, &mut rng, 1.0);
            for s in [&sigma, &SigmaParams::never_stop(8)] {
                let d = dec.dae_decode(&llr, s).unwrap();
                let p = dec.pdae_decode(&llr, s).unwrap();
                assert_eq!(d.x_hat, p.x_hat);
                assert_eq!(d.selected, p.selected);
                assert_eq!(d.num_invoked, p.num_invoked);
                assert!(p.complexity_sc_equiv <= d.complexity_sc_equiv);
                assert_eq!(d.complexity_sc_equiv, d.num_invoked as f64);
                for a in &p.attempts {
                    if a.aborted {
                        aborted += 1;
                        assert!(a.complexity_fraction < 1.0);
                    }
                }
            }
        }
        assert!(aborted > 0);
    }

    #[test]
    fn sigma_validation_and_json() {
        assert!(SigmaParams::new(vec![]).is_err());
        assert!(SigmaParams::new(vec![1.0, 2.0]).is_err());
        assert!(SigmaParams::new(vec![-1.0, f64::INFINITY]).is_err());
        let s = SigmaParams::with_provenance(
            vec![1.5, 0.25, f64::INFINITY],
            SigmaProvenance {
                code: "RM(3,7)".into(),
                ensemble_id: "abc".into(),
                xi: 0.01,
                epsilon: 0.001,
                dataset_size: 10,
                seed: 7,
            },
        )
        .unwrap();
        let json = s.to_json();
        assert!(json.contains("\"inf\""));
        assert!(json.contains("\"M\": 3"));
        assert_eq!(SigmaParams::from_json(&json).unwrap(), s);
        assert!(SigmaParams::from_json(&json.replace("\"inf\"", "\"huge\"")).is_err());
    }

    #[test]
    fn lsm_examples() {
        let x = vec![0, 1, 1, 0];
        let y = vec![1.0, -1.0, -1.0, 1.0];
        assert_eq!(lsm(&y, &x).unwrap(), 0.0);
        let mut flipped = y.clone();
        flipped[2] = 1.0;
        assert_eq!(lsm(&flipped, &x).unwrap(), 4.0);
        assert!(lsm(&y, &x[..3]).is_err());

        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let y: Vec<f64> = (0..64).map(|_| rng.random_range(-3.0..3.0)).collect();
        let x: Vec<Bit> = (0..64).map(|_| rng.random::<bool>() as Bit).collect();
        let mut naive = 0.0;
        for i in 0..64 {
            let s = if x[i] == 1 { -1.0 } else { 1.0 };
            naive += (y[i] - s) * (y[i] - s);
        }
        assert!((lsm(&y, &x).unwrap() - naive).abs() < 1e-9);
    }

    fn fake(x: &[Bit], pm: f64) -> ScOutcome {
        ScOutcome {
            u_hat: vec![],
            x_hat: x.to_vec(),
            pm,
            aborted: false,
            abort_leaf: None,
            complexity_fraction: 1.0,
        }
    }

    #[test]
    fn n_dec_examples() {
        let a = [0u8, 0];
        let b = [1u8, 1];
        let same: Vec<ScOutcome> = (0..8).map(|_| fake(&a, 1.0)).collect();
        assert_eq!(n_dec(&same).unwrap(), 1);

        let mut one: Vec<ScOutcome> = (0..8).map(|_| fake(&b, 5.0)).collect();
        one[3] = fake(&a, 0.5);
        assert_eq!(n_dec(&one).unwrap(), 8);

        let mut three: Vec<ScOutcome> = (0..8).map(|_| fake(&b, 5.0)).collect();
        for j in [1, 4, 6] {
            three[j] = fake(&a, 0.5);
        }
        let k = n_dec(&three).unwrap();
        assert_eq!(k, 6);
        // subset enumeration: smallest size whose every subset hits a winner copy
        let winners = [1usize, 4, 6];
        let covers = |size: usize| {
            (0u32..256)
                .filter(|s| s.count_ones() as usize == size)
                .all(|s| winners.iter().any(|&w| (s >> w) & 1 == 1))
        };
        let minimal = (1..=8).find(|&s| covers(s)).unwrap();
        assert_eq!(minimal, k);
    }

    #[test]
    fn oracle_formulas() {
        let mut point = vec![0.0; 8];
        point[0] = 1.0;
        assert_eq!(fo_complexity(&point, 8).unwrap(), 1.0);
        assert_eq!(ro_complexity(&point).unwrap(), 1.0);
        let mut last = vec![0.0; 8];
        last[7] = 1.0;
        assert_eq!(fo_complexity(&last, 8).unwrap(), 4.5);
        let uniform = vec![0.125; 8];
        assert_eq!(ro_complexity(&uniform).unwrap(), 4.5);
        assert!(fo_complexity(&[0.5, 0.4], 2).is_err());
        assert!(fo_complexity(&uniform, 4).is_err());
    }

    #[test]
    fn published_rm_histogram_reproduces_legend() {
        // n_dec bars for RM(128,64), M = 8, BLER 1e-3, renormalised.
        let bars = [0.6832, 0.155, 0.07619, 0.04188, 0.02222, 0.01218, 0.006383, 0.002909];
        let total: f64 = bars.iter().sum();
        let dist: Vec<f64> = bars.iter().map(|b| b / total).collect();
        assert!((ro_complexity(&dist).unwrap() - 1.643).abs() < 0.005);
        assert!((fo_complexity(&dist, 8).unwrap() - 1.118).abs() < 0.005);
    }

    #[test]
    fn lta_composition_is_absorbed_by_sc() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let code = CodeSpec::reed_muller(7, 3).unwrap();
        let llrs: Vec<Vec<f64>> = (0..200).map(|_| noisy_llr(&code, &mut rng, 0.95).1).collect();
        let ga = BltaProfile::full(7);
        let lta = BltaProfile::lower_triangular(7);
        for _ in 0..10 {
            let p = sample_blta(&ga, &mut rng);
            let l = sample_blta(&lta, &mut rng);
            let q = l.compose(&p);
            assert!(crate::automorphism::equivalent(&q, &p));
            assert!(empirically_equivalent(&q, &p, &code, &llrs).unwrap());
        }
        // distinct classes disagree somewhere
        let ens = sample_ensemble(2, &ga, &code, &mut rng).unwrap();
        assert!(!empirically_equivalent(&ens[0], &ens[1], &code, &llrs).unwrap());
    }
}
