//! Exact completability check used where the verdict matters but the search
//! order does not.
//!
//! Domains are kept per cell. Propagation removes placed values from their
//! row and column, places cells with one remaining value, and places values
//! that fit in only one cell of a row or column, until nothing changes.
//! Branching picks the cell with the fewest remaining values.

use crate::error::{Error, Result};
use crate::grid::PartialAssignment;

#[derive(Clone)]
struct State {
    n: usize,
    domains: Vec<u64>,
    placed: Vec<bool>,
}

impl State {
    fn place(&mut self, cell: usize, value: usize) {
        self.domains[cell] = 1 << value;
        self.placed[cell] = true;
        let (r, c) = (cell / self.n, cell % self.n);
        let bit = !(1u64 << value);
        for k in 0..self.n {
            let in_row = r * self.n + k;
            let in_col = k * self.n + c;
            if in_row != cell {
                self.domains[in_row] &= bit;
            }
            if in_col != cell {
                self.domains[in_col] &= bit;
            }
        }
    }

    /// Returns `false` on a contradiction.
    fn propagate(&mut self) -> bool {
        let n = self.n;
        loop {
            let mut changed = false;
            for cell in 0..n * n {
                let d = self.domains[cell];
                if d == 0 {
                    return false;
                }
                if !self.placed[cell] && d.count_ones() == 1 {
                    self.place(cell, d.trailing_zeros() as usize);
                    changed = true;
                }
            }
            // A value missing from a row (or column) must fit in exactly one
            // of its cells to be forced, and in at least one to be possible.
            for line in 0..2 * n {
                for v in 0..n {
                    let mut spot = None;
                    let mut count = 0;
                    for k in 0..n {
                        let cell = if line < n { line * n + k } else { k * n + (line - n) };
                        if self.domains[cell] >> v & 1 == 1 {
                            count += 1;
                            spot = Some(cell);
                        }
                    }
                    match (count, spot) {
                        (0, _) => return false,
                        (1, Some(cell)) if !self.placed[cell] => {
                            self.place(cell, v);
                            changed = true;
                        }
                        _ => {}
                    }
                }
            }
            if !changed {
                return true;
            }
        }
    }

    fn search(mut self) -> bool {
        if !self.propagate() {
            return false;
        }
        let branch = (0..self.domains.len())
            .filter(|&c| !self.placed[c])
            .min_by_key(|&c| self.domains[c].count_ones());
        let Some(cell) = branch else {
            return true;
        };
        let mut d = self.domains[cell];
        while d != 0 {
            let v = d.trailing_zeros() as usize;
            d &= d - 1;
            let mut child = self.clone();
            child.place(cell, v);
            if child.search() {
                return true;
            }
        }
        false
    }
}

/// Whether `x` extends to a full Latin square.
pub fn is_completable(x: &PartialAssignment) -> Result<bool> {
    let shape = x.shape();
    let n = shape.n();
    let all = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    let mut state = State {
        n,
        domains: vec![all; n * n],
        placed: vec![false; n * n],
    };
    let mut givens = Vec::new();
    for p in x.iter_ones() {
        let pair = shape.decode_unchecked(p.index());
        let cell = pair.cell(shape);
        if givens.iter().any(|&(c, _)| c == cell) {
            return Err(Error::Precondition(format!(
                "cell ({}, {}) assigned twice",
                pair.row, pair.col
            )));
        }
        givens.push((cell, pair.value - 1));
    }
    for (cell, v) in givens {
        if state.domains[cell] >> v & 1 == 0 {
            return Ok(false);
        }
        state.place(cell, v);
    }
    Ok(state.search())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{encode_pair, GridShape};

    fn partial(n: usize, cells: &[(usize, usize, usize)]) -> PartialAssignment {
        let s = GridShape::new(n).unwrap();
        PartialAssignment::from_pairs(s, cells.iter().map(|&(r, c, v)| encode_pair(s, r, c, v).unwrap())).unwrap()
    }

    #[test]
    fn small_cases() {
        assert!(is_completable(&partial(1, &[])).unwrap());
        assert!(is_completable(&partial(3, &[])).unwrap());
        assert!(!is_completable(&partial(2, &[(0, 0, 1), (1, 1, 2)])).unwrap());
        assert!(!is_completable(&partial(3, &[(0, 0, 1), (0, 1, 1)])).unwrap());
        assert!(is_completable(&partial(2, &[(0, 0, 1), (1, 1, 1)])).unwrap());
        assert!(is_completable(&partial(10, &[])).unwrap());
    }
}
