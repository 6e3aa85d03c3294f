//! Angle-estimation error metrics.

/// Largest set size handled by the exact matcher.
pub const MAX_MATCH_SIZE: usize = 20;

/// Optimal one-to-one pairing of estimates to truths: the minimum total
/// squared error and the `(truth, estimate)` index pairs. Pairs
/// `min(|truth|, |estimates|)` entries. `None` when either set is empty.
///
/// Exact, by dynamic programming over subsets of the larger set.
///
/// # Panics
/// If both sets exceed [`MAX_MATCH_SIZE`] entries.
pub fn match_estimates(truth: &[f64], estimates: &[f64]) -> Option<(f64, Vec<(usize, usize)>)> {
    let swapped = estimates.len() > truth.len();
    let (small, large) = if swapped {
        (truth, estimates)
    } else {
        (estimates, truth)
    };
    if small.is_empty() {
        return None;
    }
    assert!(
        large.len() <= MAX_MATCH_SIZE,
        "matching limited to {MAX_MATCH_SIZE} entries"
    );
    let n = large.len();
    let mut cost = vec![f64::INFINITY; 1 << n];
    let mut choice = vec![usize::MAX; 1 << n];
    cost[0] = 0.0;
    let mut best = (f64::INFINITY, 0usize);
    for mask in 0usize..1 << n {
        let c = cost[mask];
        if !c.is_finite() {
            continue;
        }
        let i = mask.count_ones() as usize;
        if i == small.len() {
            if c < best.0 {
                best = (c, mask);
            }
            continue;
        }
        for (j, &l) in large.iter().enumerate() {
            let next = mask | (1 << j);
            let v = c + (small[i] - l).powi(2);
            if next != mask && v < cost[next] {
                cost[next] = v;
                choice[next] = j;
            }
        }
    }
    let mut pairs = Vec::with_capacity(small.len());
    let mut mask = best.1;
    while mask != 0 {
        let j = choice[mask];
        let i = mask.count_ones() as usize - 1;
        pairs.push(if swapped { (i, j) } else { (j, i) });
        mask ^= 1 << j;
    }
    pairs.sort_unstable();
    Some((best.0, pairs))
}

/// Minimum total squared error of the optimal pairing and the pair count.
pub fn matched_squared_error(truth: &[f64], estimates: &[f64]) -> Option<(f64, usize)> {
    match_estimates(truth, estimates).map(|(sq, pairs)| (sq, pairs.len()))
}

/// Root-mean-square angle error over the optimal pairing of estimates to
/// truths. `None` when there are no estimates.
pub fn aoa_rmse(truth: &[f64], estimates: &[f64]) -> Option<f64> {
    matched_squared_error(truth, estimates).map(|(sq, n)| (sq / n as f64).sqrt())
}

/// Mean shortfall of detected against true targets, `(1/Q) sum (|S_i| - |S^_i|)`.
/// Zero for an empty run list.
pub fn average_missing_shots(runs: &[(usize, usize)]) -> f64 {
    if runs.is_empty() {
        return 0.0;
    }
    let deficit: f64 = runs
        .iter()
        .map(|&(truth, est)| truth as f64 - est as f64)
        .sum();
    deficit / runs.len() as f64
}
