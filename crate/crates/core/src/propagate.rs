//! Forward-checking feasibility masks over the pair space.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::grid::{GridShape, PairIndex, PartialAssignment};

/// How much of the Latin structure the propagator knows about.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum KnowledgeLevel {
    /// Nothing is pruned.
    None,
    /// Filled cells and values already present in the same row.
    Rows,
    /// `Rows` plus values already present in the same column.
    RowsCols,
}

impl KnowledgeLevel {
    pub const ALL: [KnowledgeLevel; 3] = [KnowledgeLevel::None, KnowledgeLevel::Rows, KnowledgeLevel::RowsCols];

    pub fn as_str(self) -> &'static str {
        match self {
            KnowledgeLevel::None => "none",
            KnowledgeLevel::Rows => "rows",
            KnowledgeLevel::RowsCols => "rowscols",
        }
    }

    pub fn code(self) -> u8 {
        match self {
            KnowledgeLevel::None => 0,
            KnowledgeLevel::Rows => 1,
            KnowledgeLevel::RowsCols => 2,
        }
    }

    pub fn from_code(code: u8) -> Result<Self> {
        match code {
            0 => Ok(KnowledgeLevel::None),
            1 => Ok(KnowledgeLevel::Rows),
            2 => Ok(KnowledgeLevel::RowsCols),
            other => Err(Error::Format(format!("unknown knowledge level code {other}"))),
        }
    }
}

impl fmt::Display for KnowledgeLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for KnowledgeLevel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "none" => Ok(KnowledgeLevel::None),
            "rows" | "row" => Ok(KnowledgeLevel::Rows),
            "rowscols" | "full" => Ok(KnowledgeLevel::RowsCols),
            _ => Err(Error::Range(format!("unknown knowledge level {s:?}"))),
        }
    }
}

/// Bit `j` is set iff pair `j` has not been marked infeasible.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FeasibilityMask {
    shape: GridShape,
    words: Vec<u64>,
}

impl FeasibilityMask {
    pub fn all_ones(shape: GridShape) -> Self {
        let m = shape.m();
        let mut words = vec![u64::MAX; m.div_ceil(64)];
        if m % 64 != 0 {
            *words.last_mut().unwrap() = (1u64 << (m % 64)) - 1;
        }
        Self { shape, words }
    }

    pub fn all_zeros(shape: GridShape) -> Self {
        Self {
            shape,
            words: vec![0; shape.m().div_ceil(64)],
        }
    }

    /// Build from a dense 0/1 vector.
    pub fn from_bits(shape: GridShape, bits: &[u8]) -> Result<Self> {
        if bits.len() != shape.m() {
            return Err(Error::Shape {
                expected: shape.m(),
                actual: bits.len(),
            });
        }
        let mut mask = Self::all_zeros(shape);
        for (j, &b) in bits.iter().enumerate() {
            if b != 0 {
                mask.set(j);
            }
        }
        Ok(mask)
    }

    #[inline]
    pub fn shape(&self) -> GridShape {
        self.shape
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.shape.m()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    #[inline]
    pub fn get(&self, j: usize) -> bool {
        self.words[j / 64] >> (j % 64) & 1 == 1
    }

    #[inline]
    fn set(&mut self, j: usize) {
        self.words[j / 64] |= 1 << (j % 64);
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn iter_ones(&self) -> impl Iterator<Item = PairIndex> + '_ {
        (0..self.len()).filter(|&j| self.get(j)).map(PairIndex::new)
    }

    pub fn to_bits(&self) -> Vec<u8> {
        (0..self.len()).map(|j| u8::from(self.get(j))).collect()
    }

    /// Component-wise `self <= other`.
    pub fn is_subset_of(&self, other: &FeasibilityMask) -> bool {
        self.shape == other.shape && self.words.iter().zip(&other.words).all(|(a, b)| a & !b == 0)
    }
}

/// One-shot forward checking of `x` at the given knowledge level.
///
/// A pair is pruned when its cell is already filled (`Rows` and up, the
/// asserted pair included), its value already occurs in its row (`Rows` and
/// up), or its value already occurs in its column (`RowsCols`).
pub fn forward_check(x: &PartialAssignment, level: KnowledgeLevel) -> Result<FeasibilityMask> {
    let shape = x.shape();
    if level == KnowledgeLevel::None {
        if !x.is_cell_consistent() {
            return Err(Error::Precondition("assignment is not cell consistent".into()));
        }
        return Ok(FeasibilityMask::all_ones(shape));
    }

    let n = shape.n();
    let mut filled = vec![false; shape.cells()];
    let mut row_values = vec![0u64; n];
    let mut col_values = vec![0u64; n];
    for p in x.iter_ones() {
        let pair = shape.decode_unchecked(p.index());
        let cell = pair.cell(shape);
        if std::mem::replace(&mut filled[cell], true) {
            return Err(Error::Precondition(format!(
                "cell ({}, {}) assigned twice",
                pair.row, pair.col
            )));
        }
        let bit = 1u64 << (pair.value - 1);
        row_values[pair.row] |= bit;
        col_values[pair.col] |= bit;
    }

    let all_values = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    let mut mask = FeasibilityMask::all_zeros(shape);
    for r in 0..n {
        for c in 0..n {
            if filled[r * n + c] {
                continue;
            }
            let mut allowed = all_values & !row_values[r];
            if level == KnowledgeLevel::RowsCols {
                allowed &= !col_values[c];
            }
            while allowed != 0 {
                let v = allowed.trailing_zeros() as usize;
                allowed &= allowed - 1;
                mask.set((r * n + c) * n + v);
            }
        }
    }
    Ok(mask)
}
