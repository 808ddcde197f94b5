//! Successive-cancellation decoding with path-metric tracking.
//!
//! The decoder walks the SC tree depth first. At stage `s` a node holds `2^s`
//! LLRs; its left child receives `f(a, b)` and its right child
//! `g(a, b, û) = b + (1 − 2û)·a`, where `a`/`b` are the upper/lower halves.
//! At leaf `k` the path metric grows by `|L_k|` if `k` is frozen and the hard
//! decision disagrees with the known zero.

use crate::code::CodeSpec;
use crate::{Bit, Error, Result};

/// Check-node (f) rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CheckNode {
    /// `sign(a)·sign(b)·min(|a|, |b|)`
    #[default]
    MinSum,
    /// `2·atanh(tanh(a/2)·tanh(b/2))`, evaluated in its Jacobian-log form.
    Exact,
}

#[inline(always)]
fn f_min_sum(a: f64, b: f64) -> f64 {
    let m = a.abs().min(b.abs());
    f64::from_bits(m.to_bits() | ((a.to_bits() ^ b.to_bits()) & SIGN))
}

const SIGN: u64 = 1 << 63;

/// `b + (1 − 2u)·a` by flipping the sign bit of `a`.
#[inline(always)]
fn g(a: f64, b: f64, u: Bit) -> f64 {
    b + f64::from_bits(a.to_bits() ^ ((u as u64) << 63))
}

#[inline]
fn f_exact(a: f64, b: f64) -> f64 {
    f_min_sum(a, b) + (-(a + b).abs()).exp().ln_1p() - (-(a - b).abs()).exp().ln_1p()
}

/// Result of one SC attempt.
#[derive(Debug, Clone, PartialEq)]
pub struct ScOutcome {
    /// Estimated input vector (valid up to `abort_leaf` when aborted).
    pub u_hat: Vec<Bit>,
    /// Re-encoded estimate; empty when the attempt was aborted.
    pub x_hat: Vec<Bit>,
    /// Path metric at the end of the attempt (or at the abort point).
    pub pm: f64,
    pub aborted: bool,
    pub abort_leaf: Option<usize>,
    /// Share of the full f/g workload that was executed.
    pub complexity_fraction: f64,
}

/// Fraction of f/g evaluations performed by an SC decoder that stops right
/// after leaf `k`, relative to a full decode of length `2^n`.
pub fn lfg(k: usize, n: usize) -> f64 {
    assert!(n >= 1, "lfg requires n >= 1");
    let len = 1usize << n;
    assert!(k < len, "leaf {k} out of range for N = {len}");
    let evaluations: usize = (0..n)
        .map(|s| (k + 1).div_ceil(1 << s) << s)
        .sum();
    evaluations as f64 / (n * len) as f64
}

/// Reusable SC decoder with its own scratch buffers.
///
/// Buffers for stage `s` live at offset `2^s − 1` of the flat `alpha`/`beta`
/// arrays, so stage `s − 1` sits immediately below stage `s`.
#[derive(Debug, Clone)]
pub struct ScDecoder {
    n: usize,
    frozen: Vec<bool>,
    check: CheckNode,
    alpha: Vec<f64>,
    beta: Vec<Bit>,
    u_hat: Vec<Bit>,
    pm: f64,
    threshold: f64,
    abort_leaf: Option<usize>,
    fg_evaluations: usize,
}

impl ScDecoder {
    pub fn new(code: &CodeSpec) -> Self {
        Self::with_check_node(code, CheckNode::MinSum)
    }

    pub fn with_check_node(code: &CodeSpec, check: CheckNode) -> Self {
        let len = code.length();
        Self {
            n: code.log_length(),
            frozen: code.frozen_mask().to_vec(),
            check,
            alpha: vec![0.0; 2 * len - 1],
            beta: vec![0; 2 * len - 1],
            u_hat: vec![0; len],
            pm: 0.0,
            threshold: f64::INFINITY,
            abort_leaf: None,
            fg_evaluations: 0,
        }
    }

    pub fn length(&self) -> usize {
        1 << self.n
    }

    pub fn check_node(&self) -> CheckNode {
        self.check
    }

    /// Number of scalar f and g evaluations in the most recent decode.
    pub fn fg_evaluations(&self) -> usize {
        self.fg_evaluations
    }

    /// Decodes `llr`. With `abort_threshold = Some(t)` the attempt stops at
    /// the first penalised frozen leaf after which the path metric is `>= t`.
    pub fn decode(&mut self, llr: &[f64], abort_threshold: Option<f64>) -> Result<ScOutcome> {
        let len = self.length();
        if llr.len() != len {
            return Err(Error::InvalidInput(format!(
                "LLR vector has length {}, expected {len}",
                llr.len()
            )));
        }
        if let Some(t) = abort_threshold {
            if t.is_nan() || t < 0.0 {
                return Err(Error::InvalidInput(format!("abort threshold {t} must be >= 0")));
            }
        }
        self.alpha[len - 1..].copy_from_slice(llr);
        self.pm = 0.0;
        self.threshold = abort_threshold.unwrap_or(f64::INFINITY);
        self.abort_leaf = None;
        self.fg_evaluations = 0;

        let aborted = match self.check {
            CheckNode::MinSum => self.node::<false>(self.n, 0),
            CheckNode::Exact => self.node::<true>(self.n, 0),
        };

        if aborted {
            let leaf = self.abort_leaf.expect("abort leaf recorded");
            let mut u_hat = self.u_hat.clone();
            u_hat[leaf + 1..].fill(0);
            Ok(ScOutcome {
                u_hat,
                x_hat: Vec::new(),
                pm: self.pm,
                aborted: true,
                abort_leaf: Some(leaf),
                complexity_fraction: lfg(leaf, self.n),
            })
        } else {
            Ok(ScOutcome {
                u_hat: self.u_hat.clone(),
                x_hat: self.beta[len - 1..].to_vec(),
                pm: self.pm,
                aborted: false,
                abort_leaf: None,
                complexity_fraction: 1.0,
            })
        }
    }

    /// Returns `true` if the decode was aborted inside this subtree.
    fn node<const EXACT: bool>(&mut self, stage: usize, first_leaf: usize) -> bool {
        if stage == 1 {
            return self.leaf_pair::<EXACT>(first_leaf);
        }
        if stage == 0 {
            return self.leaf(first_leaf);
        }
        let half = 1usize << (stage - 1);
        let child = half - 1;
        let parent = 2 * half - 1;

        {
            let (low, high) = self.alpha.split_at_mut(parent);
            let (a, b) = high[..2 * half].split_at(half);
            for ((out, &x), &y) in low[child..].iter_mut().zip(a).zip(b) {
                *out = if EXACT { f_exact(x, y) } else { f_min_sum(x, y) };
            }
        }
        self.fg_evaluations += half;
        if self.node::<EXACT>(stage - 1, first_leaf) {
            return true;
        }

        self.beta.copy_within(child..child + half, parent);
        {
            let (low, high) = self.alpha.split_at_mut(parent);
            let (a, b) = high[..2 * half].split_at(half);
            let left = &self.beta[parent..parent + half];
            for (((out, &x), &y), &u) in low[child..].iter_mut().zip(a).zip(b).zip(left) {
                *out = g(x, y, u);
            }
        }
        self.fg_evaluations += half;
        if self.node::<EXACT>(stage - 1, first_leaf + half) {
            return true;
        }

        let (low, high) = self.beta.split_at_mut(parent);
        let right = &low[child..child + half];
        let (top, bottom) = high[..2 * half].split_at_mut(half);
        for ((t, bo), &r) in top.iter_mut().zip(bottom.iter_mut()).zip(right) {
            *t ^= r;
            *bo = r;
        }
        false
    }

    /// Stage-1 node with its two leaves, without the generic buffer shuffling.
    #[inline(always)]
    fn leaf_pair<const EXACT: bool>(&mut self, k: usize) -> bool {
        let (a, b) = (self.alpha[1], self.alpha[2]);
        self.alpha[0] = if EXACT { f_exact(a, b) } else { f_min_sum(a, b) };
        self.fg_evaluations += 1;
        if self.leaf(k) {
            return true;
        }
        let u0 = self.beta[0];
        self.alpha[0] = g(a, b, u0);
        self.fg_evaluations += 1;
        if self.leaf(k + 1) {
            return true;
        }
        let u1 = self.beta[0];
        self.beta[1] = u0 ^ u1;
        self.beta[2] = u1;
        false
    }

    #[inline(always)]
    fn leaf(&mut self, k: usize) -> bool {
        let l = self.alpha[0];
        let u = if self.frozen[k] {
            if l < 0.0 {
                self.pm -= l;
                if self.pm >= self.threshold {
                    self.u_hat[k] = 0;
                    self.abort_leaf = Some(k);
                    return true;
                }
            }
            0
        } else {
            (l < 0.0) as Bit
        };
        self.u_hat[k] = u;
        self.beta[0] = u;
        false
    }
}

/// One-shot convenience wrapper around [`ScDecoder`].
pub fn sc_decode(llr: &[f64], code: &CodeSpec, abort_threshold: Option<f64>) -> Result<ScOutcome> {
    ScDecoder::new(code).decode(llr, abort_threshold)
}
