//! Exhaustive reference implementations for small orders. Deliberately naive
//! and independent of the library's search and propagation code.

#![allow(dead_code)]

/// Every Latin square of order `n`, as row-major cells holding `1..=n`.
pub fn all_latin_squares(n: usize) -> Vec<Vec<u8>> {
    fn fill(n: usize, cell: usize, cells: &mut Vec<u8>, out: &mut Vec<Vec<u8>>) {
        if cell == n * n {
            out.push(cells.clone());
            return;
        }
        let (r, c) = (cell / n, cell % n);
        for v in 1..=n as u8 {
            let row_ok = (0..c).all(|cc| cells[r * n + cc] != v);
            let col_ok = (0..r).all(|rr| cells[rr * n + c] != v);
            if row_ok && col_ok {
                cells[cell] = v;
                fill(n, cell + 1, cells, out);
                cells[cell] = 0;
            }
        }
    }
    let mut out = Vec::new();
    fill(n, 0, &mut vec![0; n * n], &mut out);
    out
}

/// Whether the partial grid (0 = empty) agrees with some square in `squares`.
pub fn completable(partial: &[u8], squares: &[Vec<u8>]) -> bool {
    squares
        .iter()
        .any(|s| partial.iter().zip(s).all(|(&p, &v)| p == 0 || p == v))
}

/// Whether writing `v` at `(r, c)` of `partial` immediately breaks a rule:
/// the cell is taken, or `v` already sits in that row or column.
pub fn direct_violation(partial: &[u8], n: usize, r: usize, c: usize, v: u8) -> bool {
    partial[r * n + c] != 0
        || (0..n).any(|cc| partial[r * n + cc] == v)
        || (0..n).any(|rr| partial[rr * n + c] == v)
}

/// Same, checking only the cell and the row.
pub fn direct_row_violation(partial: &[u8], n: usize, r: usize, c: usize, v: u8) -> bool {
    partial[r * n + c] != 0 || (0..n).any(|cc| partial[r * n + cc] == v)
}

/// All sub-grids of `square`, one per subset of its cells.
pub fn sub_grids(square: &[u8]) -> impl Iterator<Item = Vec<u8>> + '_ {
    let cells = square.len();
    (0u64..1 << cells).map(move |subset| {
        (0..cells)
            .map(|i| if subset >> i & 1 == 1 { square[i] } else { 0 })
            .collect()
    })
}
