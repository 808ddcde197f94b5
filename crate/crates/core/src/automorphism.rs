//! Affine permutations `z ↦ A·z ⊕ b` of the bit-index space.
//!
//! A permutation acts on a length-`N` vector by moving coordinate `z` to
//! `table[z]`. Block-lower-triangular affine (BLTA) maps are sampled per
//! block profile; the lower-triangular affine (LTA) subgroup is absorbed by
//! SC decoding, which is what [`equivalent`] tests against.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rand::Rng;

use crate::code::{polar_transform, CodeSpec};
use crate::gf2::{BitMatrix, MAX_DIM};
use crate::{Bit, Error, Result};

/// Block sizes of a BLTA group, listed from the least significant bit up.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BltaProfile {
    block_sizes: Vec<usize>,
}

impl BltaProfile {
    pub fn new(block_sizes: Vec<usize>) -> Result<Self> {
        if block_sizes.is_empty() || block_sizes.iter().any(|&s| s == 0) {
            return Err(Error::InvalidParameter(format!(
                "block sizes {block_sizes:?} must be nonempty and positive"
            )));
        }
        let n: usize = block_sizes.iter().sum();
        if n > MAX_DIM {
            return Err(Error::InvalidParameter(format!("profile covers {n} > {MAX_DIM} bits")));
        }
        Ok(Self { block_sizes })
    }

    /// A single block: the full affine group.
    pub fn full(n: usize) -> Self {
        Self { block_sizes: vec![n] }
    }

    /// All-ones profile: the lower-triangular affine group.
    pub fn lower_triangular(n: usize) -> Self {
        Self { block_sizes: vec![1; n] }
    }

    pub fn block_sizes(&self) -> &[usize] {
        &self.block_sizes
    }

    pub fn num_bits(&self) -> usize {
        self.block_sizes.iter().sum()
    }

    /// Block index of every bit position.
    fn block_of_bits(&self) -> Vec<usize> {
        self.block_sizes
            .iter()
            .enumerate()
            .flat_map(|(b, &s)| std::iter::repeat_n(b, s))
            .collect()
    }

    /// Whether `a` has zeros above the block diagonal of this profile.
    pub fn admits(&self, a: &BitMatrix) -> bool {
        if a.dim() != self.num_bits() {
            return false;
        }
        let block = self.block_of_bits();
        (0..a.dim()).all(|j| (0..a.dim()).all(|k| block[k] <= block[j] || !a.get(j, k)))
    }
}

impl fmt::Display for BltaProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.block_sizes.iter().map(usize::to_string).collect();
        f.write_str(&parts.join(","))
    }
}

impl FromStr for BltaProfile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let sizes = s
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<usize>()
                    .map_err(|_| Error::InvalidParameter(format!("bad block size `{t}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(sizes)
    }
}

/// An invertible affine map on `n`-bit indices with its materialised table.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct AffinePerm {
    a: BitMatrix,
    b: u32,
    table: Vec<u32>,
}

impl fmt::Debug for AffinePerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "AffinePerm({})", format_perm(self))
    }
}

impl AffinePerm {
    pub fn new(a: BitMatrix, b: u32) -> Result<Self> {
        let n = a.dim();
        if n == 0 {
            return Err(Error::InvalidParameter("affine map needs n >= 1".into()));
        }
        if b >> n != 0 {
            return Err(Error::InvalidParameter(format!("offset {b:#x} exceeds {n} bits")));
        }
        if !a.is_invertible() {
            return Err(Error::InvalidParameter("linear part is singular".into()));
        }
        let table = (0..1u32 << n).map(|z| a.mul_vec(z) ^ b).collect();
        Ok(Self { a, b, table })
    }

    pub fn identity(n: usize) -> Self {
        Self::new(BitMatrix::identity(n), 0).expect("identity is invertible")
    }

    pub fn translation(n: usize, b: u32) -> Result<Self> {
        Self::new(BitMatrix::identity(n), b)
    }

    pub fn num_bits(&self) -> usize {
        self.a.dim()
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    pub fn matrix(&self) -> &BitMatrix {
        &self.a
    }

    pub fn offset(&self) -> u32 {
        self.b
    }

    /// `table[z] = A·z ⊕ b`.
    pub fn table(&self) -> &[u32] {
        &self.table
    }

    /// Coordinate permutation: `out[table[z]] = v[z]`.
    pub fn apply<T: Copy + Default>(&self, v: &[T]) -> Result<Vec<T>> {
        let mut out = vec![T::default(); self.len()];
        self.apply_into(v, &mut out)?;
        Ok(out)
    }

    pub fn apply_into<T: Copy>(&self, v: &[T], out: &mut [T]) -> Result<()> {
        if v.len() != self.len() || out.len() != self.len() {
            return Err(Error::InvalidInput(format!(
                "vector length {} / {} does not match permutation length {}",
                v.len(),
                out.len(),
                self.len()
            )));
        }
        for (&t, &x) in self.table.iter().zip(v) {
            out[t as usize] = x;
        }
        Ok(())
    }

    /// Inverse coordinate permutation: `out[z] = v[table[z]]`.
    pub fn apply_inverse_into<T: Copy>(&self, v: &[T], out: &mut [T]) -> Result<()> {
        if v.len() != self.len() || out.len() != self.len() {
            return Err(Error::InvalidInput(format!(
                "vector length {} / {} does not match permutation length {}",
                v.len(),
                out.len(),
                self.len()
            )));
        }
        for (o, &t) in out.iter_mut().zip(&self.table) {
            *o = v[t as usize];
        }
        Ok(())
    }

    /// `(A⁻¹, A⁻¹·b)`.
    pub fn inverse(&self) -> AffinePerm {
        let inv = self.a.inverse().expect("invariant: A invertible");
        let b = inv.mul_vec(self.b);
        AffinePerm::new(inv, b).expect("inverse of an invertible map")
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &AffinePerm) -> AffinePerm {
        assert_eq!(self.num_bits(), other.num_bits());
        let a = self.a.mul(&other.a);
        let b = self.a.mul_vec(other.b) ^ self.b;
        AffinePerm::new(a, b).expect("product of invertible maps")
    }

    /// Member of the lower-triangular affine group.
    pub fn is_lta(&self) -> bool {
        self.a.is_lower_triangular()
    }
}

/// `out[table[z]] = v[z]`.
pub fn apply_perm<T: Copy + Default>(perm: &AffinePerm, v: &[T]) -> Result<Vec<T>> {
    perm.apply(v)
}

pub fn inverse(perm: &AffinePerm) -> AffinePerm {
    perm.inverse()
}

fn random_invertible<R: Rng + ?Sized>(size: usize, rng: &mut R) -> Vec<u32> {
    let mask = (1u32 << size) - 1;
    loop {
        let rows: Vec<u32> = (0..size).map(|_| rng.random::<u32>() & mask).collect();
        if BitMatrix::from_rows(size, rows.clone())
            .expect("rows masked to size")
            .is_invertible()
        {
            return rows;
        }
    }
}

/// Draws a uniform element of the BLTA group with the given profile.
pub fn sample_blta<R: Rng + ?Sized>(profile: &BltaProfile, rng: &mut R) -> AffinePerm {
    let n = profile.num_bits();
    let mut rows = vec![0u32; n];
    let mut start = 0;
    for &size in profile.block_sizes() {
        let diag = random_invertible(size, rng);
        for (i, d) in diag.into_iter().enumerate() {
            let below = if start == 0 { 0 } else { rng.random::<u32>() & ((1u32 << start) - 1) };
            rows[start + i] = below | (d << start);
        }
        start += size;
    }
    let a = BitMatrix::from_rows(n, rows).expect("rows within n bits");
    let b = rng.random::<u32>() & ((1u32 << n) - 1);
    AffinePerm::new(a, b).expect("block-triangular with invertible diagonal blocks")
}

/// Randomised membership test: `trials` random codewords must map to codewords.
pub fn is_automorphism<R: Rng + ?Sized>(
    perm: &AffinePerm,
    code: &CodeSpec,
    trials: usize,
    rng: &mut R,
) -> bool {
    if perm.len() != code.length() {
        return false;
    }
    let mut image = vec![0; code.length()];
    for _ in 0..trials.max(1) {
        let msg: Vec<Bit> = (0..code.dimension()).map(|_| rng.random::<bool>() as Bit).collect();
        let x = code.encode_message(&msg).expect("message length matches");
        perm.apply_into(&x, &mut image).expect("lengths match");
        if !code.is_codeword(&image) {
            return false;
        }
    }
    true
}

/// Exact membership test: every generator row `i ∈ I` must map into the code.
pub fn preserves_code(perm: &AffinePerm, code: &CodeSpec) -> bool {
    if perm.len() != code.length() {
        return false;
    }
    let len = code.length();
    let mut row = vec![0; len];
    let mut image = vec![0; len];
    for &i in code.info_set() {
        row.fill(0);
        row[i] = 1;
        polar_transform(&mut row);
        perm.apply_into(&row, &mut image).expect("lengths match");
        if !code.is_codeword(&image) {
            return false;
        }
    }
    true
}

/// SC-equivalence screen: `p1 ∘ p2⁻¹` lies in the LTA subgroup.
pub fn equivalent(p1: &AffinePerm, p2: &AffinePerm) -> bool {
    assert_eq!(p1.num_bits(), p2.num_bits());
    let inv = p2.matrix().inverse().expect("invariant: A invertible");
    p1.matrix().mul(&inv).is_lower_triangular()
}

/// Draws `m` automorphisms from pairwise distinct SC-equivalence classes.
pub fn sample_ensemble<R: Rng + ?Sized>(
    m: usize,
    profile: &BltaProfile,
    code: &CodeSpec,
    rng: &mut R,
) -> Result<Vec<AffinePerm>> {
    if m == 0 {
        return Err(Error::InvalidParameter("ensemble size must be >= 1".into()));
    }
    if profile.num_bits() != code.log_length() {
        return Err(Error::InvalidParameter(format!(
            "profile {profile} covers {} bits, code has n = {}",
            profile.num_bits(),
            code.log_length()
        )));
    }
    let budget = 2000 + 200 * m;
    let mut chosen: Vec<AffinePerm> = Vec::with_capacity(m);
    let mut draws = 0;
    while chosen.len() < m {
        if draws == budget {
            return Err(Error::SamplingFailure(format!(
                "found only {} of {m} inequivalent automorphisms of {code} with profile {profile} after {budget} draws",
                chosen.len()
            )));
        }
        draws += 1;
        let candidate = sample_blta(profile, rng);
        if chosen.iter().any(|p| equivalent(&candidate, p)) {
            continue;
        }
        if !preserves_code(&candidate, code) {
            continue;
        }
        chosen.push(candidate);
    }
    Ok(chosen)
}

/// Swaps bits `j` and `j + 1` of every index.
fn adjacent_swap(n: usize, j: usize) -> AffinePerm {
    let mut a = BitMatrix::identity(n);
    a.set(j, j, false);
    a.set(j + 1, j + 1, false);
    a.set(j, j + 1, true);
    a.set(j + 1, j, true);
    AffinePerm::new(a, 0).expect("permutation matrix")
}

/// Coarsest BLTA profile contained in the code's automorphism group, found by
/// checking LTA generators and adjacent bit swaps. `None` when the code is not
/// even LTA-invariant.
pub fn affine_profile(code: &CodeSpec) -> Option<BltaProfile> {
    let n = code.log_length();
    // Transvections z_j += z_k (k < j) generate the linear part of LTA.
    for j in 1..n {
        for k in 0..j {
            let mut a = BitMatrix::identity(n);
            a.set(j, k, true);
            let t = AffinePerm::new(a, 0).expect("unit lower-triangular");
            if !preserves_code(&t, code) {
                return None;
            }
        }
    }
    let mut sizes = vec![1usize];
    for j in 0..n - 1 {
        if preserves_code(&adjacent_swap(n, j), code) {
            *sizes.last_mut().expect("nonempty") += 1;
        } else {
            sizes.push(1);
        }
    }
    Some(BltaProfile { block_sizes: sizes })
}

/// One permutation per line: `A-rows-as-hex b-as-hex`, rows comma-separated.
pub fn format_perm(perm: &AffinePerm) -> String {
    let rows: Vec<String> = perm.matrix().rows().iter().map(|r| format!("{r:x}")).collect();
    format!("{} {:x}", rows.join(","), perm.offset())
}

pub fn parse_perm(line: &str) -> Result<AffinePerm> {
    let mut parts = line.split_whitespace();
    let (Some(rows), Some(b), None) = (parts.next(), parts.next(), parts.next()) else {
        return Err(Error::Malformed(format!("expected `rows b`, got `{line}`")));
    };
    let hex = |t: &str| {
        u32::from_str_radix(t, 16).map_err(|_| Error::Malformed(format!("`{t}` is not hex")))
    };
    let rows = rows.split(',').map(hex).collect::<Result<Vec<u32>>>()?;
    let n = rows.len();
    let a = BitMatrix::from_rows(n, rows)
        .ok_or_else(|| Error::Malformed(format!("matrix rows do not fit {n} bits")))?;
    AffinePerm::new(a, hex(b)?).map_err(|e| Error::Malformed(e.to_string()))
}

pub fn format_ensemble(perms: &[AffinePerm], header: &str) -> String {
    let mut out = String::new();
    for line in header.lines() {
        out.push_str("# ");
        out.push_str(line);
        out.push('\n');
    }
    for p in perms {
        out.push_str(&format_perm(p));
        out.push('\n');
    }
    out
}

pub fn parse_ensemble(text: &str) -> Result<Vec<AffinePerm>> {
    let perms = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(parse_perm)
        .collect::<Result<Vec<_>>>()?;
    if perms.is_empty() {
        return Err(Error::Malformed("ensemble file lists no permutations".into()));
    }
    let n = perms[0].num_bits();
    if perms.iter().any(|p| p.num_bits() != n) {
        return Err(Error::Malformed("permutations disagree on n".into()));
    }
    Ok(perms)
}

pub fn load_ensemble(path: impl AsRef<Path>) -> Result<Vec<AffinePerm>> {
    parse_ensemble(&fs::read_to_string(path)?)
}
