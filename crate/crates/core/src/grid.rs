//! Latin square domain types and the flat variable-value pair encoding.
//!
//! A square of order `n` has `n * n` cells, each taking a value in `1..=n`.
//! Every (row, column, value) triple maps to one slot of a pair space of size
//! `m = n^3`, laid out row-major by cell and then by value:
//! `index = (row * n + col) * n + (value - 1)`.

use std::fmt;

use crate::error::{Error, Result};

/// Largest supported square order. Values per cell fit a `u64` bitmask.
pub const MAX_ORDER: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct GridShape {
    n: usize,
}

impl GridShape {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 || n > MAX_ORDER {
            return Err(Error::Range(format!("square order {n} not in 1..={MAX_ORDER}")));
        }
        Ok(Self { n })
    }

    /// Side length.
    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    /// Size of the pair space, `n^3`.
    #[inline]
    pub fn m(&self) -> usize {
        self.n * self.n * self.n
    }

    /// Number of cells, `n^2`.
    #[inline]
    pub fn cells(&self) -> usize {
        self.n * self.n
    }

    pub fn encode(&self, row: usize, col: usize, value: usize) -> Result<PairIndex> {
        encode_pair(*self, row, col, value)
    }

    pub fn decode(&self, pair: PairIndex) -> Result<Pair> {
        let j = pair.index();
        if j >= self.m() {
            return Err(Error::Range(format!("pair index {j} >= m = {}", self.m())));
        }
        Ok(self.decode_unchecked(j))
    }

    #[inline]
    pub(crate) fn decode_unchecked(&self, j: usize) -> Pair {
        let n = self.n;
        let value = j % n + 1;
        let cell = j / n;
        Pair {
            row: cell / n,
            col: cell % n,
            value,
        }
    }

    #[inline]
    pub(crate) fn index_unchecked(&self, row: usize, col: usize, value: usize) -> usize {
        (row * self.n + col) * self.n + (value - 1)
    }
}

/// Position of a variable-value pair in the flat encoding.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PairIndex(usize);

impl PairIndex {
    #[inline]
    pub fn new(index: usize) -> Self {
        Self(index)
    }

    #[inline]
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for PairIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Decoded view of a [`PairIndex`]. Rows and columns are 0-based, values 1-based.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Pair {
    pub row: usize,
    pub col: usize,
    pub value: usize,
}

impl Pair {
    #[inline]
    pub fn cell(&self, shape: GridShape) -> usize {
        self.row * shape.n() + self.col
    }
}

pub fn encode_pair(shape: GridShape, row: usize, col: usize, value: usize) -> Result<PairIndex> {
    let n = shape.n();
    if row >= n || col >= n || value == 0 || value > n {
        return Err(Error::Range(format!(
            "pair (row {row}, col {col}, value {value}) outside order {n}"
        )));
    }
    Ok(PairIndex(shape.index_unchecked(row, col, value)))
}

/// Binary vector over the pair space; bit `j` set means pair `j` is asserted.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PartialAssignment {
    shape: GridShape,
    words: Vec<u64>,
}

impl PartialAssignment {
    pub fn empty(shape: GridShape) -> Self {
        Self {
            shape,
            words: vec![0; shape.m().div_ceil(64)],
        }
    }

    pub fn from_pairs(shape: GridShape, pairs: impl IntoIterator<Item = PairIndex>) -> Result<Self> {
        let mut x = Self::empty(shape);
        for p in pairs {
            if p.index() >= shape.m() {
                return Err(Error::Range(format!("pair index {p} >= m = {}", shape.m())));
            }
            x.set(p);
        }
        Ok(x)
    }

    /// Build from a dense 0/1 vector of length `m`.
    pub fn from_bits(shape: GridShape, bits: &[u8]) -> Result<Self> {
        if bits.len() != shape.m() {
            return Err(Error::Shape {
                expected: shape.m(),
                actual: bits.len(),
            });
        }
        let mut x = Self::empty(shape);
        for (j, &b) in bits.iter().enumerate() {
            match b {
                0 => {}
                1 => x.set(PairIndex(j)),
                other => return Err(Error::Encoding(format!("bit {j} has value {other}"))),
            }
        }
        Ok(x)
    }

    #[inline]
    pub fn shape(&self) -> GridShape {
        self.shape
    }

    #[inline]
    pub fn get(&self, p: PairIndex) -> bool {
        let j = p.index();
        self.words[j / 64] >> (j % 64) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, p: PairIndex) {
        let j = p.index();
        self.words[j / 64] |= 1 << (j % 64);
    }

    #[inline]
    pub fn clear(&mut self, p: PairIndex) {
        let j = p.index();
        self.words[j / 64] &= !(1 << (j % 64));
    }

    /// Number of asserted pairs, `||x||_1`.
    pub fn fill_level(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    /// Asserted pairs in ascending index order.
    pub fn iter_ones(&self) -> impl Iterator<Item = PairIndex> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut rest = w;
            std::iter::from_fn(move || {
                if rest == 0 {
                    return None;
                }
                let bit = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                Some(PairIndex(wi * 64 + bit))
            })
        })
    }

    pub fn to_bits(&self) -> Vec<u8> {
        (0..self.shape.m())
            .map(|j| u8::from(self.get(PairIndex(j))))
            .collect()
    }

    /// True iff every asserted pair is a subset of `other`'s asserted pairs.
    pub fn is_subset_of(&self, other: &PartialAssignment) -> bool {
        self.shape == other.shape
            && self.words.iter().zip(&other.words).all(|(a, b)| a & !b == 0)
    }

    /// No two asserted pairs share a cell.
    pub fn is_cell_consistent(&self) -> bool {
        let n = self.shape.n();
        let mut seen = vec![false; self.shape.cells()];
        for p in self.iter_ones() {
            let cell = p.index() / n;
            if std::mem::replace(&mut seen[cell], true) {
                return false;
            }
        }
        true
    }

    /// Returns the value assigned to `cell`, if any. Assumes cell consistency.
    pub fn cell_value(&self, row: usize, col: usize) -> Option<usize> {
        let n = self.shape.n();
        (1..=n).find(|&v| self.get(PairIndex(self.shape.index_unchecked(row, col, v))))
    }
}

/// Direct violation test: cell consistent and no value repeated in a row or
/// column. Performs no lookahead.
pub fn is_latin_consistent(x: &PartialAssignment) -> bool {
    let shape = x.shape();
    let n = shape.n();
    let mut cell_seen = vec![false; n * n];
    let mut row_seen = vec![false; n * n];
    let mut col_seen = vec![false; n * n];
    for p in x.iter_ones() {
        let Pair { row, col, value } = shape.decode_unchecked(p.index());
        let v = value - 1;
        if std::mem::replace(&mut cell_seen[row * n + col], true)
            || std::mem::replace(&mut row_seen[row * n + v], true)
            || std::mem::replace(&mut col_seen[col * n + v], true)
        {
            return false;
        }
    }
    true
}

/// Cell grid, `0` marks an empty cell.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Grid {
    shape: GridShape,
    cells: Vec<u8>,
}

impl Grid {
    pub fn empty(shape: GridShape) -> Self {
        Self {
            shape,
            cells: vec![0; shape.cells()],
        }
    }

    /// Build from row-major cell values, `0` for empty.
    pub fn from_cells(shape: GridShape, cells: Vec<u8>) -> Result<Self> {
        if cells.len() != shape.cells() {
            return Err(Error::Shape {
                expected: shape.cells(),
                actual: cells.len(),
            });
        }
        if let Some(&bad) = cells.iter().find(|&&v| v as usize > shape.n()) {
            return Err(Error::Range(format!("cell value {bad} exceeds order {}", shape.n())));
        }
        Ok(Self { shape, cells })
    }

    pub fn from_rows(rows: &[Vec<u8>]) -> Result<Self> {
        let shape = GridShape::new(rows.len())?;
        if rows.iter().any(|r| r.len() != shape.n()) {
            return Err(Error::Encoding("ragged rows".into()));
        }
        Self::from_cells(shape, rows.concat())
    }

    #[inline]
    pub fn shape(&self) -> GridShape {
        self.shape
    }

    pub fn cells(&self) -> &[u8] {
        &self.cells
    }

    pub fn get(&self, row: usize, col: usize) -> Option<usize> {
        match self.cells[row * self.shape.n() + col] {
            0 => None,
            v => Some(v as usize),
        }
    }

    pub fn set(&mut self, row: usize, col: usize, value: Option<usize>) -> Result<()> {
        let n = self.shape.n();
        if row >= n || col >= n || value.is_some_and(|v| v == 0 || v > n) {
            return Err(Error::Range(format!("cannot set ({row}, {col}) to {value:?}")));
        }
        self.cells[row * n + col] = value.unwrap_or(0) as u8;
        Ok(())
    }

    pub fn filled(&self) -> usize {
        self.cells.iter().filter(|&&v| v != 0).count()
    }

    pub fn is_complete(&self) -> bool {
        self.cells.iter().all(|&v| v != 0)
    }

    /// Complete and Latin consistent.
    pub fn is_latin_square(&self) -> bool {
        self.is_complete() && is_latin_consistent(&from_grid(self))
    }

    /// Text form used by pool files: `n^2` space-separated values, row-major.
    pub fn to_line(&self) -> String {
        let mut s = String::with_capacity(self.cells.len() * 3);
        for (i, v) in self.cells.iter().enumerate() {
            if i > 0 {
                s.push(' ');
            }
            s.push_str(&v.to_string());
        }
        s
    }

    pub fn parse_line(shape: GridShape, line: &str) -> Result<Self> {
        let cells = line
            .split_whitespace()
            .map(|tok| {
                tok.parse::<u8>()
                    .map_err(|e| Error::Encoding(format!("bad cell value {tok:?}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        if cells.iter().any(|&v| v == 0) {
            return Err(Error::Encoding("solution lines must be complete".into()));
        }
        Self::from_cells(shape, cells)
    }
}

impl fmt::Display for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = self.shape.n();
        for r in 0..n {
            let row: Vec<String> = self.cells[r * n..(r + 1) * n]
                .iter()
                .map(|&v| if v == 0 { ".".to_string() } else { v.to_string() })
                .collect();
            writeln!(f, "{}", row.join(" "))?;
        }
        Ok(())
    }
}

pub fn to_grid(x: &PartialAssignment) -> Result<Grid> {
    let shape = x.shape();
    let mut grid = Grid::empty(shape);
    for p in x.iter_ones() {
        let pair = shape.decode_unchecked(p.index());
        let cell = pair.cell(shape);
        if grid.cells[cell] != 0 {
            return Err(Error::Encoding(format!(
                "cell ({}, {}) assigned twice",
                pair.row, pair.col
            )));
        }
        grid.cells[cell] = pair.value as u8;
    }
    Ok(grid)
}

pub fn from_grid(grid: &Grid) -> PartialAssignment {
    let shape = grid.shape();
    let n = shape.n();
    let mut x = PartialAssignment::empty(shape);
    for (cell, &v) in grid.cells.iter().enumerate() {
        if v != 0 {
            x.set(PairIndex(shape.index_unchecked(cell / n, cell % n, v as usize)));
        }
    }
    x
}

/// A partial assignment together with the pair that extends it.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Example {
    pub x: PartialAssignment,
    pub y: PairIndex,
}

impl Example {
    pub fn new(x: PartialAssignment, y: PairIndex) -> Result<Self> {
        if y.index() >= x.shape().m() {
            return Err(Error::Range(format!("target {y} >= m = {}", x.shape().m())));
        }
        if x.get(y) {
            return Err(Error::Precondition(format!("target pair {y} already asserted")));
        }
        Ok(Self { x, y })
    }

    pub fn fill_level(&self) -> usize {
        self.x.fill_level()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn shape(n: usize) -> GridShape {
        GridShape::new(n).unwrap()
    }

    #[test]
    fn shape_sizes() {
        assert_eq!(shape(10).m(), 1000);
        assert_eq!(shape(1).m(), 1);
        assert!(GridShape::new(0).is_err());
        assert!(GridShape::new(MAX_ORDER + 1).is_err());
    }

    #[test]
    fn encode_examples() {
        let s = shape(10);
        assert_eq!(encode_pair(s, 0, 0, 1).unwrap().index(), 0);
        assert_eq!(encode_pair(s, 9, 9, 10).unwrap().index(), 999);
        assert_eq!(encode_pair(s, 1, 2, 3).unwrap().index(), 122);
    }

    #[test]
    fn encode_rejects_out_of_range() {
        let s = shape(10);
        assert!(matches!(encode_pair(s, 10, 0, 1), Err(Error::Range(_))));
        assert!(matches!(encode_pair(s, 0, 10, 1), Err(Error::Range(_))));
        assert!(matches!(encode_pair(s, 0, 0, 0), Err(Error::Range(_))));
        assert!(matches!(encode_pair(s, 0, 0, 11), Err(Error::Range(_))));
        assert!(s.decode(PairIndex::new(1000)).is_err());
    }

    #[test]
    fn encode_decode_bijection_exhaustive() {
        for n in 1..=10 {
            let s = shape(n);
            for j in 0..s.m() {
                let p = s.decode(PairIndex::new(j)).unwrap();
                assert_eq!(encode_pair(s, p.row, p.col, p.value).unwrap().index(), j);
            }
            for r in 0..n {
                for c in 0..n {
                    for v in 1..=n {
                        let j = encode_pair(s, r, c, v).unwrap();
                        assert_eq!(s.decode(j).unwrap(), Pair { row: r, col: c, value: v });
                    }
                }
            }
        }
    }

    fn assignment(n: usize, triples: &[(usize, usize, usize)]) -> PartialAssignment {
        let s = shape(n);
        PartialAssignment::from_pairs(s, triples.iter().map(|&(r, c, v)| encode_pair(s, r, c, v).unwrap()))
            .unwrap()
    }

    #[test]
    fn latin_consistency_examples() {
        for n in 1..=5 {
            assert!(is_latin_consistent(&PartialAssignment::empty(shape(n))));
        }
        assert!(!is_latin_consistent(&assignment(2, &[(0, 0, 1), (0, 1, 1)])));
        assert!(is_latin_consistent(&assignment(2, &[(0, 0, 1), (1, 1, 1)])));
        assert!(!is_latin_consistent(&assignment(2, &[(0, 0, 1), (1, 0, 1)])));
        assert!(!is_latin_consistent(&assignment(2, &[(0, 0, 1), (0, 0, 2)])));
    }

    #[test]
    fn grid_round_trips() {
        let s = shape(3);
        let empty = PartialAssignment::empty(s);
        let g = to_grid(&empty).unwrap();
        assert_eq!(g, Grid::empty(s));
        assert_eq!(from_grid(&g), empty);

        let one = assignment(1, &[(0, 0, 1)]);
        let g1 = to_grid(&one).unwrap();
        assert_eq!(g1, Grid::from_rows(&[vec![1]]).unwrap());
        assert_eq!(from_grid(&g1), one);

        let full = Grid::from_rows(&[vec![1, 2, 3], vec![2, 3, 1], vec![3, 1, 2]]).unwrap();
        let x = from_grid(&full);
        assert_eq!(x.fill_level(), 9);
        assert!(is_latin_consistent(&x));
        assert_eq!(to_grid(&x).unwrap(), full);
        assert!(full.is_latin_square());
    }

    #[test]
    fn to_grid_rejects_cell_conflict() {
        let x = assignment(2, &[(0, 0, 1), (0, 0, 2)]);
        assert!(matches!(to_grid(&x), Err(Error::Encoding(_))));
        assert!(!x.is_cell_consistent());
    }

    #[test]
    fn example_rejects_asserted_target() {
        let s = shape(2);
        let x = assignment(2, &[(0, 0, 1)]);
        assert!(Example::new(x.clone(), encode_pair(s, 0, 0, 1).unwrap()).is_err());
        assert!(Example::new(x, encode_pair(s, 1, 1, 1).unwrap()).is_ok());
    }

    #[test]
    fn line_format() {
        let g = Grid::from_rows(&[vec![1, 2], vec![2, 1]]).unwrap();
        assert_eq!(g.to_line(), "1 2 2 1");
        assert_eq!(Grid::parse_line(shape(2), "1 2 2 1").unwrap(), g);
        assert!(Grid::parse_line(shape(2), "1 2 2").is_err());
        assert!(Grid::parse_line(shape(2), "1 2 3 1").is_err());
    }

    #[test]
    fn bits_round_trip() {
        let x = assignment(3, &[(0, 1, 2), (2, 2, 3)]);
        let bits = x.to_bits();
        assert_eq!(bits.iter().filter(|&&b| b == 1).count(), 2);
        assert_eq!(PartialAssignment::from_bits(shape(3), &bits).unwrap(), x);
        assert!(PartialAssignment::from_bits(shape(3), &bits[1..]).is_err());
    }
}
