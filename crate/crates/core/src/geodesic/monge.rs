//! Monotone row minima and Monge-condition checks.
//!
//! A matrix is Monge when `A[i][j] + A[i'][j'] <= A[i][j'] + A[i'][j]` for all
//! `i < i'`, `j < j'`; its row argmins are then nondecreasing, which lets the
//! divide-and-conquer search below find every row minimum with
//! `O((rows + cols) log rows)` evaluations.

use std::cmp::Ordering;

/// Entry key: accumulated value, then tie-break rank. Smaller is better.
pub(crate) type Key = (f64, u32);

#[inline]
pub(crate) fn key_less(a: Key, b: Key) -> bool {
    a.0 < b.0 || (a.0 == b.0 && a.1 < b.1)
}

/// Row minima of an implicitly given matrix whose argmins are nondecreasing.
/// `out[r]` receives `(key, column)` of the best entry in row `r`.
pub(crate) fn monotone_minima<F>(rows: usize, cols: usize, entry: &F, out: &mut [(Key, usize)])
where
    F: Fn(usize, usize) -> Key,
{
    debug_assert_eq!(out.len(), rows);
    if rows == 0 || cols == 0 {
        return;
    }
    recurse(0, rows, 0, cols, entry, out);
}

fn recurse<F>(row_lo: usize, row_hi: usize, col_lo: usize, col_hi: usize, entry: &F, out: &mut [(Key, usize)])
where
    F: Fn(usize, usize) -> Key,
{
    if row_lo >= row_hi {
        return;
    }
    let mid = (row_lo + row_hi) / 2;
    let mut best_col = col_lo;
    let mut best = entry(mid, col_lo);
    for col in col_lo + 1..col_hi {
        let k = entry(mid, col);
        if key_less(k, best) {
            best = k;
            best_col = col;
        }
    }
    out[mid] = (best, best_col);
    recurse(row_lo, mid, col_lo, best_col + 1, entry, out);
    recurse(mid + 1, row_hi, best_col, col_hi, entry, out);
}

/// Checks the Monge inequality on every adjacent 2x2 minor, allowing an
/// absolute slack for rounding.
pub fn is_monge(matrix: &[Vec<f64>], slack: f64) -> bool {
    adjacent_minors(matrix).all(|(tl, tr, bl, br)| tl + br <= tr + bl + slack)
}

/// Checks the reversed inequality `A[i][j'] + A[i'][j] <= A[i][j] + A[i'][j']`.
pub fn is_inverse_monge(matrix: &[Vec<f64>], slack: f64) -> bool {
    adjacent_minors(matrix).all(|(tl, tr, bl, br)| tr + bl <= tl + br + slack)
}

fn adjacent_minors(matrix: &[Vec<f64>]) -> impl Iterator<Item = (f64, f64, f64, f64)> + '_ {
    matrix.windows(2).flat_map(|pair| {
        let (top, bot) = (&pair[0], &pair[1]);
        (0..top.len().saturating_sub(1)).map(move |j| (top[j], top[j + 1], bot[j], bot[j + 1]))
    })
}

/// Row argmins by exhaustive scan, leftmost on ties. Test helper.
pub fn row_argmins(matrix: &[Vec<f64>]) -> Vec<usize> {
    matrix
        .iter()
        .map(|row| {
            row.iter()
                .enumerate()
                .min_by(|a, b| a.1.partial_cmp(b.1).unwrap_or(Ordering::Equal).then(a.0.cmp(&b.0)))
                .map(|(j, _)| j)
                .unwrap_or(0)
        })
        .collect()
}
