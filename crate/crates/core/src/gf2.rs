//! Square binary matrices over GF(2) acting on LSB-first bit vectors.
//!
//! Row `j` is stored as an integer whose bit `k` is the entry `A[j][k]`, so
//! `A·z` has output bit `j` equal to `parity(row_j & z)`.

use std::fmt;

/// Largest supported dimension (code length up to 2^16).
pub const MAX_DIM: usize = 16;

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitMatrix {
    dim: usize,
    rows: Vec<u32>,
}

impl BitMatrix {
    pub fn zeros(dim: usize) -> Self {
        assert!(dim <= MAX_DIM, "dimension {dim} exceeds {MAX_DIM}");
        Self { dim, rows: vec![0; dim] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for j in 0..dim {
            m.rows[j] = 1 << j;
        }
        m
    }

    /// Builds a matrix from row words; bits at or above `dim` must be clear.
    pub fn from_rows(dim: usize, rows: Vec<u32>) -> Option<Self> {
        if dim > MAX_DIM || rows.len() != dim {
            return None;
        }
        let mask = Self::row_mask(dim);
        if rows.iter().any(|r| r & !mask != 0) {
            return None;
        }
        Some(Self { dim, rows })
    }

    fn row_mask(dim: usize) -> u32 {
        if dim == 32 {
            u32::MAX
        } else {
            (1u32 << dim) - 1
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rows(&self) -> &[u32] {
        &self.rows
    }

    pub fn get(&self, row: usize, col: usize) -> bool {
        (self.rows[row] >> col) & 1 == 1
    }

    pub fn set(&mut self, row: usize, col: usize, value: bool) {
        if value {
            self.rows[row] |= 1 << col;
        } else {
            self.rows[row] &= !(1 << col);
        }
    }

    /// `A·z` over GF(2).
    #[inline]
    pub fn mul_vec(&self, z: u32) -> u32 {
        let mut out = 0u32;
        for (j, row) in self.rows.iter().enumerate() {
            out |= ((row & z).count_ones() & 1) << j;
        }
        out
    }

    /// Matrix product `self · rhs`.
    pub fn mul(&self, rhs: &BitMatrix) -> BitMatrix {
        assert_eq!(self.dim, rhs.dim);
        // Row j of the product is the XOR of the rows of rhs selected by row j of self.
        let rows = self
            .rows
            .iter()
            .map(|&r| {
                (0..self.dim)
                    .filter(|&k| (r >> k) & 1 == 1)
                    .fold(0u32, |acc, k| acc ^ rhs.rows[k])
            })
            .collect();
        BitMatrix { dim: self.dim, rows }
    }

    pub fn rank(&self) -> usize {
        let mut rows = self.rows.clone();
        let mut rank = 0;
        for col in 0..self.dim {
            let Some(pivot) = (rank..self.dim).find(|&r| (rows[r] >> col) & 1 == 1) else {
                continue;
            };
            rows.swap(rank, pivot);
            for r in 0..self.dim {
                if r != rank && (rows[r] >> col) & 1 == 1 {
                    rows[r] ^= rows[rank];
                }
            }
            rank += 1;
        }
        rank
    }

    pub fn is_invertible(&self) -> bool {
        self.rank() == self.dim
    }

    /// Gauss-Jordan inverse, `None` when singular.
    pub fn inverse(&self) -> Option<BitMatrix> {
        let mut a = self.rows.clone();
        let mut inv = Self::identity(self.dim).rows;
        for col in 0..self.dim {
            let pivot = (col..self.dim).find(|&r| (a[r] >> col) & 1 == 1)?;
            a.swap(col, pivot);
            inv.swap(col, pivot);
            for r in 0..self.dim {
                if r != col && (a[r] >> col) & 1 == 1 {
                    a[r] ^= a[col];
                    inv[r] ^= inv[col];
                }
            }
        }
        Some(BitMatrix { dim: self.dim, rows: inv })
    }

    /// True when every entry strictly above the diagonal (`col > row`) is zero.
    pub fn is_lower_triangular(&self) -> bool {
        self.rows
            .iter()
            .enumerate()
            .all(|(j, &r)| r >> (j + 1) == 0)
    }
}

impl fmt::Debug for BitMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "BitMatrix({})", self.dim)?;
        for j in 0..self.dim {
            let line: String = (0..self.dim)
                .map(|k| if self.get(j, k) { '1' } else { '0' })
                .collect();
            writeln!(f, "  {line}")?;
        }
        Ok(())
    }
}
