//! Bit-packed vectors over GF(2) and Gaussian elimination.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A fixed-dimension vector over GF(2), packed 64 bits per word.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BitVector {
    dim: usize,
    words: Vec<u64>,
}

impl BitVector {
    pub const MAX_DIM: usize = 4096;

    pub fn zeros(dim: usize) -> Self {
        assert!(dim <= Self::MAX_DIM, "dimension {dim} exceeds {}", Self::MAX_DIM);
        BitVector { dim, words: vec![0; dim.div_ceil(64)] }
    }

    /// Bit `i` of the vector is bit `i` of `index`.
    pub fn from_index(dim: usize, index: u64) -> Self {
        let mut v = Self::zeros(dim);
        if dim > 0 {
            v.words[0] = if dim >= 64 { index } else { index & ((1u64 << dim) - 1) };
        }
        v
    }

    pub fn from_bits(bits: &[bool]) -> Self {
        let mut v = Self::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            v.set(i, b);
        }
        v
    }

    /// Parses a string of `0`/`1` characters, first character is bit 0.
    pub fn parse(s: &str) -> Result<Self> {
        let bits = s
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::InvalidParameter(format!("invalid bit character {other:?}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        if bits.len() > Self::MAX_DIM {
            return Err(Error::InvalidParameter(format!("bit string longer than {}", Self::MAX_DIM)));
        }
        Ok(Self::from_bits(&bits))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize) -> bool {
        (self.words[i / 64] >> (i % 64)) & 1 == 1
    }

    pub fn set(&mut self, i: usize, value: bool) {
        let mask = 1u64 << (i % 64);
        if value {
            self.words[i / 64] |= mask;
        } else {
            self.words[i / 64] &= !mask;
        }
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn xor_assign(&mut self, other: &BitVector) {
        debug_assert_eq!(self.dim, other.dim);
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= b;
        }
    }

    pub fn xor(&self, other: &BitVector) -> BitVector {
        let mut out = self.clone();
        out.xor_assign(other);
        out
    }

    /// Inner product over GF(2).
    pub fn dot(&self, other: &BitVector) -> bool {
        debug_assert_eq!(self.dim, other.dim);
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a & b).count_ones())
            .sum::<u32>()
            % 2
            == 1
    }

    pub fn leading_one(&self) -> Option<usize> {
        self.words
            .iter()
            .enumerate()
            .find(|(_, &w)| w != 0)
            .map(|(i, w)| i * 64 + w.trailing_zeros() as usize)
    }

    /// Index of the point in the full cube, for `dim <= 64`.
    pub fn to_index(&self) -> u64 {
        self.words.first().copied().unwrap_or(0)
    }
}

impl fmt::Debug for BitVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitVector({self})")
    }
}

impl fmt::Display for BitVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.dim {
            f.write_str(if self.get(i) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

/// Reduced row-echelon basis of a subspace of `{0,1}^d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gf2Basis {
    dim: usize,
    rows: Vec<BitVector>,
    pivots: Vec<usize>,
}

impl Gf2Basis {
    pub fn empty(dim: usize) -> Self {
        Gf2Basis { dim, rows: Vec::new(), pivots: Vec::new() }
    }

    pub fn span_of<'a>(dim: usize, vectors: impl IntoIterator<Item = &'a BitVector>) -> Result<Self> {
        let mut basis = Self::empty(dim);
        for v in vectors {
            basis.insert(v)?;
        }
        Ok(basis)
    }

    /// Adds `v` to the spanning set; returns whether the rank grew.
    pub fn insert(&mut self, v: &BitVector) -> Result<bool> {
        self.check_dim(v)?;
        let mut r = v.clone();
        self.reduce(&mut r);
        let Some(pivot) = r.leading_one() else {
            return Ok(false);
        };
        for row in &mut self.rows {
            if row.get(pivot) {
                row.xor_assign(&r);
            }
        }
        let at = self.pivots.partition_point(|&p| p < pivot);
        self.rows.insert(at, r);
        self.pivots.insert(at, pivot);
        Ok(true)
    }

    fn reduce(&self, v: &mut BitVector) {
        for (row, &p) in self.rows.iter().zip(&self.pivots) {
            if v.get(p) {
                v.xor_assign(row);
            }
        }
    }

    fn check_dim(&self, v: &BitVector) -> Result<()> {
        if v.dim() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: v.dim() });
        }
        Ok(())
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rows(&self) -> &[BitVector] {
        &self.rows
    }

    pub fn pivots(&self) -> &[usize] {
        &self.pivots
    }

    /// Every vector of the span, in no particular order. Only sensible for
    /// small ranks.
    pub fn elements(&self) -> Vec<BitVector> {
        let mut out = vec![BitVector::zeros(self.dim)];
        for row in &self.rows {
            let more: Vec<_> = out.iter().map(|v| v.xor(row)).collect();
            out.extend(more);
        }
        out
    }
}

/// True iff `x` lies in the span of `basis`.
pub fn span_membership(basis: &Gf2Basis, x: &BitVector) -> Result<bool> {
    basis.check_dim(x)?;
    let mut r = x.clone();
    basis.reduce(&mut r);
    Ok(r.is_zero())
}

/// Finds a weight vector `w` with `w·x = y` for every sample.
///
/// Elimination takes the leftmost available pivot and sets every free
/// variable to zero, so the result is deterministic.
pub fn gf2_solve(dim: usize, samples: &[(BitVector, bool)]) -> Result<BitVector> {
    // Augmented rows carry the label in the extra column `dim`.
    let mut basis = Gf2Basis::empty(dim + 1);
    for (x, y) in samples {
        if x.dim() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: x.dim() });
        }
        let mut row = BitVector::zeros(dim + 1);
        for i in 0..dim {
            if x.get(i) {
                row.set(i, true);
            }
        }
        row.set(dim, *y);
        basis.insert(&row)?;
    }
    if basis.pivots.contains(&dim) {
        return Err(Error::NoConsistentParity);
    }
    let mut w = BitVector::zeros(dim);
    for (row, &p) in basis.rows.iter().zip(&basis.pivots) {
        w.set(p, row.get(dim));
    }
    Ok(w)
}
