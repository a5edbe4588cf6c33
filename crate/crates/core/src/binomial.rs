//! Exact binomial coefficients and their inverse.
//!
//! All arithmetic is exact integer arithmetic. The multiplicative formula
//! interleaves multiplication and division so every intermediate value is
//! itself a binomial coefficient times a partial numerator, which keeps the
//! products as small as possible before checking for overflow.

use num_bigint::BigUint;
use num_traits::One;

use crate::{Error, Result};

/// C(n, k) in u128, or `None` if an intermediate product overflows.
///
/// Exact for every representable result: after the i-th step the
/// accumulator equals C(n-k+i, i), so the division is always exact.
pub fn binomial(n: u64, k: u64) -> Option<u128> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 1..=k {
        acc = acc.checked_mul((n - k + i) as u128)? / i as u128;
    }
    Some(acc)
}

/// C(n, k) in arbitrary precision, for universe sizes where u128 overflows.
pub fn binomial_big(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::ZERO;
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 1..=k {
        acc = acc * (n - k + i) / i;
    }
    acc
}

/// Compares C(m, k) against j, treating overflow as "greater".
fn cmp_binomial(m: u64, k: u64, j: u128) -> std::cmp::Ordering {
    match binomial(m, k) {
        Some(v) => v.cmp(&j),
        None => std::cmp::Ordering::Greater,
    }
}

/// The inverse binomial: the unique m >= k with C(m, k) = j.
///
/// m -> C(m, k) is strictly increasing for m >= k, so a binary search over
/// exact integers recovers m. j = 0 maps to 0 by convention (an empty hash
/// intersection means fewer than k shared references). When no integer m
/// satisfies the equation exactly the intersection count cannot have come
/// from collision-free subset hashes, and the error says so.
pub fn inverse_binomial(j: u128, k: usize) -> Result<u64> {
    if k == 0 {
        return Err(Error::InvalidParameter("subset size k must be >= 1".into()));
    }
    if j == 0 {
        return Ok(0);
    }
    let m = inverse_binomial_floor(j, k);
    if binomial(m, k as u64) == Some(j) {
        Ok(m)
    } else {
        Err(Error::NotABinomial { j, k: k as u32 })
    }
}

/// The largest m with C(m, k) <= j (tolerant mode). Requires j >= 1.
pub fn inverse_binomial_floor(j: u128, k: usize) -> u64 {
    let k = k as u64;
    debug_assert!(j >= 1);
    // Exponential search for an upper bound, then bisect.
    let mut hi = k;
    while cmp_binomial(hi, k, j).is_lt() {
        hi = hi.saturating_mul(2);
    }
    let mut lo = k; // C(k, k) = 1 <= j
    while lo < hi {
        let mid = lo + (hi - lo).div_ceil(2);
        if cmp_binomial(mid, k, j).is_gt() {
            hi = mid - 1;
        } else {
            lo = mid;
        }
    }
    lo
}

/// Closed-form inverse for k = 2: (1 + sqrt(8j + 1)) / 2, evaluated with an
/// integer square root. Used as a cross-check against the binary search.
pub fn inverse_pairs_closed_form(j: u128) -> u64 {
    if j == 0 {
        return 0;
    }
    ((1 + (8 * j + 1).isqrt()) / 2) as u64
}
