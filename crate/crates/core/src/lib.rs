//! Sequential automorphism-ensemble decoding of polar and Reed-Muller codes.
//!
//! The crate is organised bottom-up:
//!
//! - [`code`]: information sets (Reed-Muller, Gaussian-approximation polar,
//!   file-supplied) and the `x = u·G_N` butterfly encoder.
//! - [`sc`]: successive-cancellation decoding with path-metric tracking and
//!   optional mid-decode abort, plus the f/g complexity fraction.
//! - [`gf2`] and [`automorphism`]: affine permutations `z ↦ A·z ⊕ b` of the
//!   bit-index space, block-lower-triangular sampling and ensemble selection.
//! - [`ensemble`]: AE, DAE and PDAE decoders, oracle complexity baselines and
//!   the least-squares metric.
//! - [`threshold`]: trace datasets, the allocation-to-threshold map, replay and
//!   the error-allocation hill climbing search.
//! - [`sim`]: AWGN/BPSK channel, seeded Monte-Carlo loops and SNR search.
//!
//! Bit indices are LSB-first throughout: bit `j` of an index `z` is
//! `(z >> j) & 1`.

pub mod automorphism;
pub mod code;
pub mod ensemble;
pub mod error;
pub mod gf2;
pub mod sc;
pub mod sim;
pub mod threshold;

pub use error::{Error, Result};

/// A hard bit, always 0 or 1.
pub type Bit = u8;
