//! Polar and Reed-Muller codes in the polar formalism.
//!
//! A code of length `N = 2^n` is fixed by its information set; the remaining
//! indices are frozen to zero. Encoding is `x = u·G_N` with
//! `G_N = [[1,0],[1,1]]^{⊗n}`, i.e. `G_N[i][z] = 1` iff the bits of `z` are a
//! subset of the bits of `i`.

use std::fmt;
use std::fs;
use std::path::Path;

use crate::{Bit, Error, Result};

/// Largest supported `n` (codes up to length 2^16).
pub const MAX_LOG_LENGTH: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub enum CodeFamily {
    ReedMuller { r: usize },
    Polar { design_snr_db: f64 },
    /// Information set supplied from a file.
    Explicit,
}

/// An immutable code description shared by encoders and decoders.
#[derive(Debug, Clone, PartialEq)]
pub struct CodeSpec {
    n: usize,
    info_set: Vec<usize>,
    frozen: Vec<bool>,
    family: CodeFamily,
}

impl CodeSpec {
    /// Validates and builds a code. `info_set` may be in any order but must not
    /// contain duplicates or out-of-range indices.
    pub fn new(n: usize, info_set: Vec<usize>, family: CodeFamily) -> Result<Self> {
        if n == 0 || n > MAX_LOG_LENGTH {
            return Err(Error::InvalidParameter(format!(
                "log2 length n = {n} outside 1..={MAX_LOG_LENGTH}"
            )));
        }
        let len = 1usize << n;
        let mut frozen = vec![true; len];
        for &i in &info_set {
            if i >= len {
                return Err(Error::InvariantViolation(format!(
                    "information index {i} out of range for N = {len}"
                )));
            }
            if !frozen[i] {
                return Err(Error::InvariantViolation(format!(
                    "duplicate information index {i}"
                )));
            }
            frozen[i] = false;
        }
        let mut info_set = info_set;
        info_set.sort_unstable();
        Ok(Self { n, info_set, frozen, family })
    }

    /// The Reed-Muller code RM(r, n).
    pub fn reed_muller(n: usize, r: usize) -> Result<Self> {
        Self::new(n, rm_info_set(n, r)?, CodeFamily::ReedMuller { r })
    }

    /// A polar code built by Gaussian-approximation density evolution.
    pub fn polar(n: usize, k: usize, design_snr_db: f64) -> Result<Self> {
        Self::new(n, polar_info_set(n, k, design_snr_db)?, CodeFamily::Polar { design_snr_db })
    }

    pub fn log_length(&self) -> usize {
        self.n
    }

    pub fn length(&self) -> usize {
        1 << self.n
    }

    pub fn dimension(&self) -> usize {
        self.info_set.len()
    }

    pub fn rate(&self) -> f64 {
        self.dimension() as f64 / self.length() as f64
    }

    /// Information indices in increasing order.
    pub fn info_set(&self) -> &[usize] {
        &self.info_set
    }

    pub fn frozen_set(&self) -> Vec<usize> {
        (0..self.length()).filter(|&i| self.frozen[i]).collect()
    }

    /// Per-index frozen flags.
    pub fn frozen_mask(&self) -> &[bool] {
        &self.frozen
    }

    #[inline]
    pub fn is_frozen(&self, index: usize) -> bool {
        self.frozen[index]
    }

    pub fn family(&self) -> &CodeFamily {
        &self.family
    }

    /// `x = u·G_N`. Fails if `u` has the wrong length or a nonzero frozen bit.
    pub fn encode(&self, u: &[Bit]) -> Result<Vec<Bit>> {
        if u.len() != self.length() {
            return Err(Error::InvalidInput(format!(
                "input vector has length {}, expected {}",
                u.len(),
                self.length()
            )));
        }
        if let Some(i) = (0..u.len()).find(|&i| self.frozen[i] && u[i] != 0) {
            return Err(Error::InvalidInput(format!("frozen position {i} is nonzero")));
        }
        let mut x = u.to_vec();
        polar_transform(&mut x);
        Ok(x)
    }

    /// Places a K-bit message on the information set and encodes it.
    pub fn encode_message(&self, message: &[Bit]) -> Result<Vec<Bit>> {
        if message.len() != self.dimension() {
            return Err(Error::InvalidInput(format!(
                "message has length {}, expected {}",
                message.len(),
                self.dimension()
            )));
        }
        let mut x = vec![0; self.length()];
        for (&pos, &bit) in self.info_set.iter().zip(message) {
            x[pos] = bit & 1;
        }
        polar_transform(&mut x);
        Ok(x)
    }

    /// Membership test by re-encoding (`G_N` is an involution).
    pub fn is_codeword(&self, x: &[Bit]) -> bool {
        if x.len() != self.length() {
            return false;
        }
        let mut u = x.to_vec();
        polar_transform(&mut u);
        u.iter().zip(&self.frozen).all(|(&b, &f)| !f || b == 0)
    }

    /// True when the information set is closed under bitwise dominance.
    pub fn respects_dominance_order(&self) -> bool {
        is_dominance_closed(&self.info_set, self.length())
    }

    /// Short human-readable identifier such as `RM(2,4)` or `polar(128,60)`.
    pub fn label(&self) -> String {
        match self.family {
            CodeFamily::ReedMuller { r } => format!("RM({r},{})", self.n),
            CodeFamily::Polar { .. } => format!("polar({},{})", self.length(), self.dimension()),
            CodeFamily::Explicit => format!("code({},{})", self.length(), self.dimension()),
        }
    }
}

impl fmt::Display for CodeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// In-place `v ← v·G_N` over GF(2). Also its own inverse.
pub fn polar_transform(v: &mut [Bit]) {
    let len = v.len();
    debug_assert!(len.is_power_of_two());
    let mut half = 1;
    while half < len {
        for block in (0..len).step_by(2 * half) {
            for z in block..block + half {
                v[z] ^= v[z + half];
            }
        }
        half <<= 1;
    }
}

/// Indices of RM(r, n): all `k < 2^n` with at least `n - r` ones.
pub fn rm_info_set(n: usize, r: usize) -> Result<Vec<usize>> {
    if n < 1 || n > MAX_LOG_LENGTH {
        return Err(Error::InvalidParameter(format!("n = {n} outside 1..={MAX_LOG_LENGTH}")));
    }
    if r > n {
        return Err(Error::InvalidParameter(format!("order r = {r} exceeds n = {n}")));
    }
    let min_weight = (n - r) as u32;
    Ok((0..1usize << n)
        .filter(|k| k.count_ones() >= min_weight)
        .collect())
}

/// The `k` most reliable synthetic channels under Gaussian-approximation
/// density evolution for BPSK over AWGN at `design_snr_db` (Eb/N0 with rate
/// `k / 2^n`). The result is checked against the dominance order.
pub fn polar_info_set(n: usize, k: usize, design_snr_db: f64) -> Result<Vec<usize>> {
    if n < 1 || n > MAX_LOG_LENGTH {
        return Err(Error::InvalidParameter(format!("n = {n} outside 1..={MAX_LOG_LENGTH}")));
    }
    let len = 1usize << n;
    if k > len {
        return Err(Error::InvalidParameter(format!("K = {k} exceeds N = {len}")));
    }
    if k == 0 {
        return Ok(Vec::new());
    }
    if !design_snr_db.is_finite() {
        return Err(Error::InvalidParameter("design SNR must be finite".into()));
    }
    let rate = k as f64 / len as f64;
    let noise_var = 1.0 / (2.0 * rate * 10f64.powf(design_snr_db / 10.0));
    let means = ga_llr_means(n, 2.0 / noise_var);

    let mut order: Vec<usize> = (0..len).collect();
    order.sort_by(|&a, &b| means[b].total_cmp(&means[a]).then(b.cmp(&a)));
    let mut info: Vec<usize> = order[..k].to_vec();
    info.sort_unstable();
    if !is_dominance_closed(&info, len) {
        return Err(Error::ConstructionFailure(format!(
            "GA construction (n = {n}, K = {k}, design SNR {design_snr_db} dB) violates the dominance order"
        )));
    }
    Ok(info)
}

/// Mean LLR of every synthetic channel under the Gaussian approximation.
///
/// The root of the SC tree splits on the most significant bit, so bits are
/// consumed MSB first: a 0 bit is a check-node (f) step, a 1 bit a
/// variable-node (g) step.
pub fn ga_llr_means(n: usize, channel_mean: f64) -> Vec<f64> {
    let len = 1usize << n;
    let mut means = vec![channel_mean; 1];
    // Level by level: at each level every mean splits into (f, g) children.
    for _ in 0..n {
        let mut next = Vec::with_capacity(means.len() * 2);
        for &m in &means {
            next.push(ga_check_node(m));
            next.push(2.0 * m);
        }
        means = next;
    }
    // `means` is now ordered with the first split as the most significant bit.
    debug_assert_eq!(means.len(), len);
    means
}

/// `ln φ(x)` for Chung's approximation of the GA φ-function.
fn ln_phi(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x < 10.0 {
        -0.4527 * x.powf(0.86) + 0.0218
    } else {
        0.5 * (std::f64::consts::PI / x).ln() - x / 4.0 + (1.0 - 10.0 / (7.0 * x)).ln()
    }
}

/// Check-node update `φ⁻¹(1 − (1 − φ(m))²)`, evaluated in the log domain.
fn ga_check_node(m: f64) -> f64 {
    if m <= 0.0 {
        return 0.0;
    }
    let lp = ln_phi(m);
    let phi = lp.exp().min(1.0);
    // 1 - (1 - φ)² = φ (2 - φ)
    let target = lp + (2.0 - phi).ln();
    if target >= 0.0 {
        return 0.0;
    }
    // ln φ is decreasing; bisect on [0, m].
    let (mut lo, mut hi) = (0.0f64, m);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if ln_phi(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-12 * hi.max(1.0) {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Bitwise-dominance closure: if `k` is in the set then so is every `k' ⊇ k`.
pub fn is_dominance_closed(info_set: &[usize], len: usize) -> bool {
    let mut member = vec![false; len];
    for &i in info_set {
        member[i] = true;
    }
    // Closure under adding single bits implies closure under all supersets.
    info_set.iter().all(|&i| {
        (0..len.trailing_zeros())
            .map(|b| i | (1 << b))
            .all(|sup| member[sup])
    })
}

/// Parses the info-set text format: line 1 `N K`, line 2 the K indices.
pub fn parse_info_set(text: &str) -> Result<CodeSpec> {
    let mut lines = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'));
    let header = lines
        .next()
        .ok_or_else(|| Error::Malformed("missing `N K` header".into()))?;
    let nums = parse_usizes(header)?;
    let [len, k] = nums[..] else {
        return Err(Error::Malformed(format!("header `{header}` is not `N K`")));
    };
    if !len.is_power_of_two() || len < 2 {
        return Err(Error::Malformed(format!("N = {len} is not a power of two >= 2")));
    }
    let indices = match lines.next() {
        Some(line) => parse_usizes(line)?,
        None => Vec::new(),
    };
    if lines.next().is_some() {
        return Err(Error::Malformed("unexpected trailing lines".into()));
    }
    if indices.len() != k {
        return Err(Error::InvariantViolation(format!(
            "header declares K = {k} but {} indices were listed",
            indices.len()
        )));
    }
    let n = len.trailing_zeros() as usize;
    let code = CodeSpec::new(n, indices, CodeFamily::Explicit)?;
    // Recognise Reed-Muller sets so labels survive a round trip through a file.
    for r in 0..=n {
        if rm_info_set(n, r)? == code.info_set() {
            return CodeSpec::reed_muller(n, r);
        }
    }
    Ok(code)
}

fn parse_usizes(line: &str) -> Result<Vec<usize>> {
    line.split_whitespace()
        .map(|t| {
            t.parse::<usize>()
                .map_err(|_| Error::Malformed(format!("`{t}` is not a nonnegative integer")))
        })
        .collect()
}

pub fn load_info_set(path: impl AsRef<Path>) -> Result<CodeSpec> {
    parse_info_set(&fs::read_to_string(path)?)
}

/// Renders a code in the info-set text format.
pub fn format_info_set(code: &CodeSpec) -> String {
    let indices: Vec<String> = code.info_set().iter().map(usize::to_string).collect();
    format!("{} {}\n{}\n", code.length(), code.dimension(), indices.join(" "))
}
