//! Permanent upper bounds for 0-1 matrices given only their row sums.
//!
//! All bounds are returned as natural logarithms. A row sum of zero yields
//! `-inf` (the permanent is zero).

use std::sync::OnceLock;

const TABLE_MAX: usize = 4096;

fn ln_factorial_table() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut t = Vec::with_capacity(TABLE_MAX + 1);
        t.push(0.0);
        let mut acc = 0.0;
        for k in 1..=TABLE_MAX {
            acc += (k as f64).ln();
            t.push(acc);
        }
        t
    })
}

/// `ln(n!)`.
pub fn ln_factorial(n: usize) -> f64 {
    if n <= TABLE_MAX {
        ln_factorial_table()[n]
    } else {
        statrs::function::gamma::ln_gamma(n as f64 + 1.0)
    }
}

/// Precomputed Brégman-Minc and Liang-Bai factors.
///
/// `log_bm(r) = ln((r!)^(1/r))` and `lb(r, i) = q (r - q + 1)` with
/// `q = min(ceil((r+1)/2), ceil(i/2))`.
#[derive(Debug, Clone)]
pub struct BoundFactors {
    log_bm: Vec<f64>,
}

impl BoundFactors {
    pub fn new(n_max: usize) -> Self {
        let log_bm = (0..=n_max)
            .map(|r| if r == 0 { 0.0 } else { ln_factorial(r) / r as f64 })
            .collect();
        BoundFactors { log_bm }
    }

    /// `ln BMfactors[r]`; row sums beyond the table are computed on the fly.
    #[inline]
    pub fn log_bm(&self, r: usize) -> f64 {
        match self.log_bm.get(r) {
            Some(&x) => x,
            None => ln_factorial(r) / r as f64,
        }
    }

    /// `LBfactors[r][i]` for a row with sum `r` at (1-based) position `i`.
    #[inline]
    pub fn lb(r: usize, i: usize) -> u64 {
        let q = (r + 1).div_ceil(2).min(i.div_ceil(2)) as u64;
        q * (r as u64 + 1 - q)
    }
}

fn global_factors() -> &'static BoundFactors {
    static F: OnceLock<BoundFactors> = OnceLock::new();
    F.get_or_init(|| BoundFactors::new(TABLE_MAX))
}

#[inline]
pub fn log_bm_factor(r: usize) -> f64 {
    global_factors().log_bm(r)
}

/// Brégman-Minc bound: `sum_i ln (r_i!)^(1/r_i)`.
pub fn bm_bound(rows: &[usize]) -> f64 {
    if rows.contains(&0) {
        return f64::NEG_INFINITY;
    }
    rows.iter().map(|&r| log_bm_factor(r)).sum()
}

/// Liang-Bai bound with rows taken in the given order.
pub fn lb_bound(rows: &[usize]) -> f64 {
    if rows.contains(&0) {
        return f64::NEG_INFINITY;
    }
    0.5 * rows
        .iter()
        .enumerate()
        .map(|(i, &r)| (BoundFactors::lb(r, i + 1) as f64).ln())
        .sum::<f64>()
}

/// Liang-Bai bound with rows sorted by ascending sum.
pub fn lb_bound_ascending(rows: &[usize]) -> f64 {
    let mut sorted = rows.to_vec();
    sorted.sort_unstable();
    lb_bound(&sorted)
}

/// Liang-Bai bound from a histogram of row sums (`hist[r]` rows of sum `r`),
/// rows taken in ascending order.
pub fn lb_from_histogram(hist: &[usize]) -> f64 {
    if hist.first().is_some_and(|&h| h > 0) {
        return f64::NEG_INFINITY;
    }
    let mut pos = 0;
    let mut acc = 0.0;
    for (r, &count) in hist.iter().enumerate() {
        for _ in 0..count {
            pos += 1;
            acc += (BoundFactors::lb(r, pos) as f64).ln();
        }
    }
    0.5 * acc
}

/// Both bounds for a matrix made of `rows` plus `pad_rows` extra rows of sum
/// `pad_degree` (not divided by `pad_rows!`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairBound {
    pub log_bm: f64,
    pub log_lb: f64,
}

impl PairBound {
    pub fn min(&self) -> f64 {
        self.log_bm.min(self.log_lb)
    }
}

pub fn padded_bound(rows: &[usize], pad_rows: usize, pad_degree: usize) -> PairBound {
    let mut all = rows.to_vec();
    all.extend(std::iter::repeat_n(pad_degree, pad_rows));
    PairBound {
        log_bm: bm_bound(&all),
        log_lb: lb_bound_ascending(&all),
    }
}

/// Friedland's bound on the number of perfect matchings of a general graph
/// with the given vertex degrees: `sum_v ln(deg(v)!) / (2 deg(v))`.
pub fn matching_bound(degrees: &[usize]) -> f64 {
    if degrees.is_empty() {
        return 0.0;
    }
    if degrees.len() % 2 == 1 || degrees.contains(&0) {
        return f64::NEG_INFINITY;
    }
    degrees.iter().map(|&d| 0.5 * log_bm_factor(d)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bm_factors_shape() {
        let f = BoundFactors::new(20);
        assert_eq!(f.log_bm(1), 0.0);
        for r in 1..20 {
            assert!(f.log_bm(r + 1) >= f.log_bm(r));
        }
        assert!((f.log_bm(3).exp() - 6f64.powf(1.0 / 3.0)).abs() < 1e-12);
    }

    #[test]
    fn lb_factors_at_least_one() {
        for r in 1..30 {
            for i in 1..30 {
                assert!(BoundFactors::lb(r, i) >= 1);
            }
        }
        // q = min(ceil((r+1)/2), ceil(i/2))
        assert_eq!(BoundFactors::lb(3, 1), 3);
        assert_eq!(BoundFactors::lb(3, 3), 4);
        assert_eq!(BoundFactors::lb(5, 5), 9);
        assert_eq!(BoundFactors::lb(4, 6), 6);
        assert_eq!(BoundFactors::lb(1, 9), 1);
    }

    #[test]
    fn all_ones_three_by_three() {
        assert!((bm_bound(&[3, 3, 3]).exp() - 6.0).abs() < 1e-9);
        // sqrt(3 * 3 * 4) = 6
        assert!((lb_bound_ascending(&[3, 3, 3]).exp() - 6.0).abs() < 1e-9);
    }

    #[test]
    fn forced_rows_give_one() {
        assert_eq!(bm_bound(&[1; 7]), 0.0);
        assert_eq!(lb_bound(&[1; 7]), 0.0);
    }

    #[test]
    fn zero_row_is_empty() {
        assert_eq!(bm_bound(&[2, 0]), f64::NEG_INFINITY);
        assert_eq!(lb_bound(&[0, 2]), f64::NEG_INFINITY);
        assert_eq!(matching_bound(&[1, 0]), f64::NEG_INFINITY);
        assert_eq!(matching_bound(&[1, 1, 1]), f64::NEG_INFINITY);
    }

    #[test]
    fn histogram_matches_sorted() {
        let rows = [4, 2, 5, 5, 1, 3, 3];
        let mut hist = vec![0; 6];
        for &r in &rows {
            hist[r] += 1;
        }
        assert!((lb_from_histogram(&hist) - lb_bound_ascending(&rows)).abs() < 1e-12);
    }

    #[test]
    fn large_factorials_stay_finite() {
        let b = bm_bound(&vec![900; 900]);
        assert!(b.is_finite() && b > 700.0);
        assert!(ln_factorial(5000).is_finite());
    }
}
