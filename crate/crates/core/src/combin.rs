//! Binomial coefficients and the colexicographic combinatorial number system.
//!
//! A sorted k-subset `c_0 < c_1 < ... < c_{k-1}` has colex rank
//! `sum_i C(c_i, i + 1)`. Ranks enumerate all k-subsets of `0..n` as
//! `0..C(n, k)`, ordered by largest element first.

/// Exact binomial coefficient, `None` on overflow.
pub fn binomial(n: u64, k: u64) -> Option<u64> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * u128::from(n - i) / u128::from(i + 1);
        if acc > u128::from(u64::MAX) {
            return None;
        }
    }
    Some(acc as u64)
}

/// Binomial coefficient as a float; exact below 2^53, relative error ~1e-16 above.
pub fn binomial_f64(n: u64, k: u64) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0f64;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    // intermediate products are integers while they stay below 2^53
    if acc < 9.0e15 {
        acc.round()
    } else {
        acc
    }
}

/// Table of `C(n, k)` for `n <= n_max`, `k <= k_max`.
#[derive(Debug, Clone)]
pub struct BinomialTable {
    k_max: usize,
    table: Vec<u64>,
}

impl BinomialTable {
    pub fn new(n_max: usize, k_max: usize) -> Self {
        let width = k_max + 1;
        let mut table = vec![0u64; (n_max + 1) * width];
        for n in 0..=n_max {
            table[n * width] = 1;
            for k in 1..=k_max.min(n) {
                let a = table[(n - 1) * width + k - 1];
                let b = if k < n { table[(n - 1) * width + k] } else { 0 };
                table[n * width + k] = a.saturating_add(b);
            }
        }
        Self { k_max, table }
    }

    #[inline]
    pub fn get(&self, n: usize, k: usize) -> u64 {
        debug_assert!(k <= self.k_max);
        self.table[n * (self.k_max + 1) + k]
    }

    /// Colex rank of a strictly increasing subset.
    #[inline]
    pub fn rank(&self, subset: &[u32]) -> u64 {
        subset
            .iter()
            .enumerate()
            .map(|(i, &c)| self.get(c as usize, i + 1))
            .sum()
    }

    /// Inverse of [`BinomialTable::rank`]; writes the k-subset into `out`.
    pub fn unrank(&self, mut rank: u64, out: &mut [u32]) {
        let k = out.len();
        let rows = self.table.len() / (self.k_max + 1);
        for i in (0..k).rev() {
            // largest c with C(c, i + 1) <= rank; C(i, i + 1) = 0 bounds it below
            let mut lo = i;
            let mut hi = rows;
            while hi > lo + 1 {
                let mid = lo + (hi - lo) / 2;
                if self.get(mid, i + 1) <= rank {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            out[i] = lo as u32;
            rank -= self.get(lo, i + 1);
        }
    }
}

/// Advance a strictly increasing k-subset of `0..n` to its colex successor.
/// Returns `false` when `subset` was the last one.
#[inline]
pub fn next_colex(subset: &mut [u32], n: u32) -> bool {
    let k = subset.len();
    if k == 0 {
        return false;
    }
    for i in 0..k {
        let limit = if i + 1 < k { subset[i + 1] } else { n };
        if subset[i] + 1 < limit {
            subset[i] += 1;
            for (j, s) in subset.iter_mut().enumerate().take(i) {
                *s = j as u32;
            }
            return true;
        }
    }
    false
}
