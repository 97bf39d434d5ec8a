use rand::seq::index::sample;
use rand::Rng;

use crate::scalar::Scalar;

/// Indices of the `k` largest sums, largest first. Ties go to the lower
/// index.
pub fn select_top_k<T: Scalar>(sums: &[T], k: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..sums.len()).collect();
    order.sort_by(|&a, &b| {
        sums[b]
            .partial_cmp(&sums[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    order.truncate(k);
    order
}

/// Leader and the gap `S_{m(1)} − S_{m(2)}` between the two largest sums.
pub fn leader_gap<T: Scalar>(sums: &[T]) -> (usize, T) {
    let mut first = 0;
    for (i, s) in sums.iter().enumerate().skip(1) {
        if *s > sums[first] {
            first = i;
        }
    }
    let runner_up = sums
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != first)
        .map(|(_, s)| *s)
        .fold(T::neg_infinity(), T::max);
    (first, sums[first] - runner_up)
}

/// `Some(leader)` once the gap reaches `threshold = −ln c`.
pub fn stopping_decision<T: Scalar>(sums: &[T], threshold: T) -> Option<usize> {
    let (leader, gap) = leader_gap(sums);
    (gap >= threshold).then_some(leader)
}

/// Randomized selection: the leader plus `k − 1` other cells uniformly
/// without replacement. With `k = 1` the leader is replaced by a uniformly
/// chosen other cell with probability `explore`.
pub fn randomized_select<T: Scalar, R: Rng + ?Sized>(
    sums: &[T],
    k: usize,
    explore: T,
    rng: &mut R,
) -> Vec<usize> {
    let cells = sums.len();
    let (leader, _) = leader_gap(sums);
    let others: Vec<usize> = (0..cells).filter(|&m| m != leader).collect();
    if k == 1 {
        if explore > T::zero() && T::open01(rng) < explore {
            return vec![others[rng.random_range(0..others.len())]];
        }
        return vec![leader];
    }
    let mut picked: Vec<usize> = sample(rng, others.len(), k - 1)
        .into_iter()
        .map(|i| others[i])
        .collect();
    picked.sort_unstable();
    let mut out = Vec::with_capacity(k);
    out.push(leader);
    out.extend(picked);
    out
}
