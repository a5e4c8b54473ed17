//! Single-layer relaxation: given the values of every point of layer `k - 1`,
//! compute for every point of layer `k` the best predecessor.
//!
//! All kernels evaluate candidates as `value[i] + cost(dist(i, j))` in the
//! same floating-point order and compare `(value, rank)` keys, so whenever they
//! examine the optimal candidate they return bit-identical results.

use super::monge::{self, key_less, Key};
use super::JumpCost;
use crate::env::distance;

pub(crate) const NO_PRED: u32 = u32::MAX;

/// Previous layer view.
pub(crate) struct Prev<'a> {
    pub coords: &'a [f64],
    pub values: &'a [f64],
    pub ranks: &'a [u32],
}

/// Output slots for the next layer.
pub(crate) struct Next<'a> {
    pub coords: &'a [f64],
    pub values: &'a mut [f64],
    pub preds: &'a mut [u32],
}

#[inline]
fn within(dist: f64, cap: Option<f64>) -> bool {
    match cap {
        Some(c) => dist <= c,
        None => true,
    }
}

/// Every pair, no pruning.
pub(crate) fn relax_naive(prev: &Prev, next: &mut Next, dim: usize, cost: &JumpCost, cap: Option<f64>) {
    let m_prev = prev.values.len();
    for (j, x) in next.coords.chunks_exact(dim).enumerate() {
        let mut best: Key = (f64::INFINITY, u32::MAX);
        let mut pred = NO_PRED;
        for i in 0..m_prev {
            let v = prev.values[i];
            if v == f64::INFINITY {
                continue;
            }
            let dist = distance(&prev.coords[i * dim..(i + 1) * dim], x);
            if !within(dist, cap) {
                continue;
            }
            let k = (v + cost.of(dist), prev.ranks[i]);
            if key_less(k, best) {
                best = k;
                pred = i as u32;
            }
        }
        next.values[j] = best.0;
        next.preds[j] = pred;
    }
}

/// Candidates are visited in ascending `(value, rank)`; the scan for a target
/// stops once the candidate's own value can no longer beat the incumbent,
/// which is sound because jump costs are nonnegative.
pub(crate) fn relax_pruned(prev: &Prev, next: &mut Next, dim: usize, cost: &JumpCost, cap: Option<f64>) {
    let mut order: Vec<u32> = (0..prev.values.len() as u32)
        .filter(|&i| prev.values[i as usize] < f64::INFINITY)
        .collect();
    order.sort_unstable_by(|&a, &b| {
        let (a, b) = (a as usize, b as usize);
        prev.values[a]
            .total_cmp(&prev.values[b])
            .then(prev.ranks[a].cmp(&prev.ranks[b]))
    });
    for (j, x) in next.coords.chunks_exact(dim).enumerate() {
        let mut best: Key = (f64::INFINITY, u32::MAX);
        let mut pred = NO_PRED;
        for &i in &order {
            let i = i as usize;
            let v = prev.values[i];
            let r = prev.ranks[i];
            if v > best.0 || (v == best.0 && r >= best.1) {
                break;
            }
            let dist = distance(&prev.coords[i * dim..(i + 1) * dim], x);
            if !within(dist, cap) {
                continue;
            }
            let k = (v + cost.of(dist), r);
            if key_less(k, best) {
                best = k;
                pred = i as u32;
            }
        }
        next.values[j] = best.0;
        next.preds[j] = pred;
    }
}

/// One-dimensional, uncapped, `alpha >= 1`: the matrix
/// `value[i] + |x_j - y_i|^alpha` is Monge, so row argmins are monotone.
/// All previous values must be finite.
pub(crate) fn relax_convex_1d(prev: &Prev, next: &mut Next, cost: &JumpCost) {
    let ys = prev.coords;
    let xs = next.coords;
    let entry = |r: usize, c: usize| -> Key { (prev.values[c] + cost.of((xs[r] - ys[c]).abs()), prev.ranks[c]) };
    let mut out = vec![((f64::INFINITY, u32::MAX), 0usize); xs.len()];
    monge::monotone_minima(xs.len(), ys.len(), &entry, &mut out);
    for (j, ((v, _), c)) in out.into_iter().enumerate() {
        next.values[j] = v;
        next.preds[j] = c as u32;
    }
}

const STAIRCASE_LEAF: usize = 24;

/// One-dimensional, uncapped, `0 < alpha < 1`. The cost is concave on each
/// half-line but not globally, so the full matrix has no monotone structure.
/// Splitting the merged coordinate order in half, the pairs with the
/// predecessor left of the split and the target right of it (and vice versa)
/// form inverse-Monge blocks; those are solved by monotone minima with the
/// columns reversed, and each half is handled recursively.
pub(crate) fn relax_concave_1d(prev: &Prev, next: &mut Next, cost: &JumpCost) {
    let ys = prev.coords;
    let xs = next.coords;
    let total = ys.len() + xs.len();
    // prefix counts of previous-layer points in the merged order
    let mut prev_before = Vec::with_capacity(total + 1);
    prev_before.push(0usize);
    let (mut i, mut j) = (0, 0);
    while i < ys.len() || j < xs.len() {
        if j == xs.len() || (i < ys.len() && ys[i] <= xs[j]) {
            i += 1;
        } else {
            j += 1;
        }
        prev_before.push(i);
    }
    let mut best: Vec<(Key, u32)> = vec![((f64::INFINITY, u32::MAX), NO_PRED); xs.len()];
    let mut scratch = Vec::new();
    staircase(0, total, &prev_before, prev, xs, cost, &mut best, &mut scratch);
    for (j, ((v, _), p)) in best.into_iter().enumerate() {
        next.values[j] = v;
        next.preds[j] = p;
    }
}

#[allow(clippy::too_many_arguments)]
fn staircase(
    lo: usize,
    hi: usize,
    prev_before: &[usize],
    prev: &Prev,
    xs: &[f64],
    cost: &JumpCost,
    best: &mut [(Key, u32)],
    scratch: &mut Vec<(Key, usize)>,
) {
    let ys = prev.coords;
    let (p_lo, p_hi) = (prev_before[lo], prev_before[hi]);
    let (n_lo, n_hi) = (lo - p_lo, hi - p_hi);
    if p_lo == p_hi || n_lo == n_hi {
        return;
    }
    if hi - lo <= STAIRCASE_LEAF {
        for j in n_lo..n_hi {
            for i in p_lo..p_hi {
                let k = (prev.values[i] + cost.of((xs[j] - ys[i]).abs()), prev.ranks[i]);
                if key_less(k, best[j].0) {
                    best[j] = (k, i as u32);
                }
            }
        }
        return;
    }
    let mid = (lo + hi) / 2;
    let (p_mid, n_mid) = (prev_before[mid], mid - prev_before[mid]);

    // predecessors left of the split, targets right of it
    cross_block(p_lo, p_mid, n_mid, n_hi, prev, xs, cost, best, scratch);
    // predecessors right of the split, targets left of it
    cross_block(p_mid, p_hi, n_lo, n_mid, prev, xs, cost, best, scratch);

    staircase(lo, mid, prev_before, prev, xs, cost, best, scratch);
    staircase(mid, hi, prev_before, prev, xs, cost, best, scratch);
}

/// Inverse-Monge block: argmins are nonincreasing in the target, i.e.
/// monotone once the predecessor columns are reversed.
#[allow(clippy::too_many_arguments)]
fn cross_block(
    p_lo: usize,
    p_hi: usize,
    n_lo: usize,
    n_hi: usize,
    prev: &Prev,
    xs: &[f64],
    cost: &JumpCost,
    best: &mut [(Key, u32)],
    scratch: &mut Vec<(Key, usize)>,
) {
    if p_lo == p_hi || n_lo == n_hi {
        return;
    }
    let ys = prev.coords;
    let entry = |r: usize, c: usize| -> Key {
        let i = p_hi - 1 - c;
        (prev.values[i] + cost.of((xs[n_lo + r] - ys[i]).abs()), prev.ranks[i])
    };
    scratch.clear();
    scratch.resize(n_hi - n_lo, ((f64::INFINITY, u32::MAX), 0));
    monge::monotone_minima(n_hi - n_lo, p_hi - p_lo, &entry, scratch);
    for (r, &(k, c)) in scratch.iter().enumerate() {
        let j = n_lo + r;
        if key_less(k, best[j].0) {
            best[j] = (k, (p_hi - 1 - c) as u32);
        }
    }
}

/// Spot-checks the structural precondition of the one-dimensional fast path
/// on actual coordinates: the jump-cost matrix must be Monge (`alpha >= 1`)
/// or inverse-Monge on the half-line blocks (`alpha < 1`).
pub(crate) fn probe_monotone_precondition(ys: &[f64], xs: &[f64], cost: &JumpCost) -> bool {
    const PROBE: usize = 12;
    let sample = |v: &[f64]| -> Vec<f64> {
        if v.len() <= PROBE {
            v.to_vec()
        } else {
            (0..PROBE).map(|t| v[t * (v.len() - 1) / (PROBE - 1)]).collect()
        }
    };
    let ys = sample(ys);
    let xs = sample(xs);
    if ys.is_empty() || xs.is_empty() {
        return true;
    }
    let slack = |m: &[Vec<f64>]| {
        let scale = m.iter().flatten().fold(0.0f64, |a, &b| a.max(b.abs()));
        64.0 * f64::EPSILON * scale.max(1.0)
    };
    if cost.alpha() >= 1.0 {
        let m: Vec<Vec<f64>> = xs
            .iter()
            .map(|x| ys.iter().map(|y| cost.of((x - y).abs())).collect())
            .collect();
        monge::is_monge(&m, slack(&m))
    } else {
        // use the split at the median target; both half-line blocks
        let pivot = xs[xs.len() / 2];
        let left: Vec<f64> = ys.iter().copied().filter(|&y| y <= pivot).collect();
        let right: Vec<f64> = ys.iter().copied().filter(|&y| y >= pivot).collect();
        let hi_x: Vec<f64> = xs.iter().copied().filter(|&x| x >= pivot).collect();
        let lo_x: Vec<f64> = xs.iter().copied().filter(|&x| x <= pivot).collect();
        let block = |rows: &[f64], cols: &[f64]| -> Vec<Vec<f64>> {
            rows.iter()
                .map(|x| cols.iter().map(|y| cost.of((x - y).abs())).collect())
                .collect()
        };
        let a = block(&hi_x, &left);
        let b = block(&lo_x, &right);
        monge::is_inverse_monge(&a, slack(&a)) && monge::is_inverse_monge(&b, slack(&b))
    }
}
