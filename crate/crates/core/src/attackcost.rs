//! Cost model for preimage attacks against disclosed subset hashes.
//!
//! An attacker who can enumerate the universe of n candidate references
//! must compute C(n, k) combined hashes to test every k-subset. The
//! combinatorics are exact integers; floating point only enters when the
//! count is multiplied by the per-hash time.

use num_bigint::BigUint;
use num_traits::ToPrimitive;
use serde::Serialize;

use crate::binomial::binomial_big;
use crate::{Error, Result};

/// Seconds per Julian year, used for the human-readable rendering.
pub const SECONDS_PER_YEAR: f64 = 31_557_600.0;
pub const SECONDS_PER_HOUR: f64 = 3_600.0;

/// Single-threaded cost of enumerating all k-subsets of an n-reference
/// universe.
#[derive(Debug, Clone, Serialize)]
pub struct AttackEstimate {
    pub n_refs: u64,
    pub k: u64,
    pub per_hash_seconds: f64,
    #[serde(serialize_with = "serialize_biguint")]
    pub n_hashes: BigUint,
    pub runtime_seconds: f64,
    pub runtime_human: String,
}

fn serialize_biguint<S: serde::Serializer>(v: &BigUint, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&v.to_string())
}

pub fn estimate(n_refs: u64, k: u64, per_hash_seconds: f64) -> Result<AttackEstimate> {
    if k < 1 || n_refs < k {
        return Err(Error::InvalidParameter(format!(
            "need n_refs >= k >= 1, got n_refs={n_refs}, k={k}"
        )));
    }
    if !(per_hash_seconds > 0.0) {
        return Err(Error::InvalidParameter(
            "per-hash time must be positive".into(),
        ));
    }
    let n_hashes = binomial_big(n_refs, k);
    let runtime_seconds = n_hashes.to_f64().unwrap_or(f64::INFINITY) * per_hash_seconds;
    Ok(AttackEstimate {
        n_refs,
        k,
        per_hash_seconds,
        runtime_human: render_duration(runtime_seconds),
        n_hashes,
        runtime_seconds,
    })
}

/// Renders seconds on the scale an analyst reads: seconds, hours, or
/// years, switching to scientific notation for geological spans.
pub fn render_duration(seconds: f64) -> String {
    if seconds < SECONDS_PER_HOUR {
        format!("{seconds:.2} s")
    } else if seconds < SECONDS_PER_YEAR {
        format!("{:.2} h", seconds / SECONDS_PER_HOUR)
    } else {
        let years = seconds / SECONDS_PER_YEAR;
        if years < 1e4 {
            format!("{years:.1} years")
        } else {
            format!("{years:.2e} years")
        }
    }
}

/// Smallest universe size n such that a full enumeration exceeds the given
/// time budget: C(n-1, k) * t <= budget < C(n, k) * t.
pub fn min_universe_for_budget(k: u64, per_hash_seconds: f64, budget_seconds: f64) -> Result<u64> {
    if k < 1 {
        return Err(Error::InvalidParameter("k must be >= 1".into()));
    }
    if !(per_hash_seconds > 0.0) || !(budget_seconds > 0.0) {
        return Err(Error::InvalidParameter(
            "per-hash time and budget must be positive".into(),
        ));
    }
    let over_budget = |n: u64| -> bool {
        binomial_big(n, k).to_f64().unwrap_or(f64::INFINITY) * per_hash_seconds > budget_seconds
    };
    let mut hi = k;
    while !over_budget(hi) {
        hi = hi.saturating_mul(2);
    }
    let mut lo = k; // C(k, k) * t = t; may already exceed the budget
    if over_budget(lo) {
        return Ok(lo);
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if over_budget(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Cartesian product of universe sizes and subset sizes.
pub fn sweep(k_values: &[u64], n_values: &[u64], per_hash_seconds: f64) -> Result<Vec<AttackEstimate>> {
    let mut out = Vec::with_capacity(k_values.len() * n_values.len());
    for &n in n_values {
        for &k in k_values {
            out.push(estimate(n, k, per_hash_seconds)?);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::binomial::binomial;

    const DBLP: u64 = 5_050_000;
    const MS: f64 = 0.001;

    #[test]
    fn dblp_k1() {
        let e = estimate(DBLP, 1, MS).unwrap();
        assert_eq!(e.n_hashes, BigUint::from(5_050_000u64));
        assert!((e.runtime_seconds - 5.05e3).abs() < 1e-6);
        assert_eq!(e.runtime_human, "1.40 h");
    }

    #[test]
    fn dblp_k2_exceeds_404_years() {
        let e = estimate(DBLP, 2, MS).unwrap();
        let years = e.runtime_seconds / SECONDS_PER_YEAR;
        assert!(years > 404.0, "{years}");
        assert!((years - 404.0) / 404.0 < 0.01, "{years}");
    }

    #[test]
    fn dblp_k3_exceeds_680_million_years() {
        let e = estimate(DBLP, 3, MS).unwrap();
        let years = e.runtime_seconds / SECONDS_PER_YEAR;
        assert!(years > 6.8e8, "{years}");
        assert!((years - 6.8e8) / 6.8e8 < 0.01, "{years}");
    }

    #[test]
    fn narrow_field_k2() {
        let e = estimate(30_000, 2, MS).unwrap();
        let hours = e.runtime_seconds / SECONDS_PER_HOUR;
        assert!((hours - 125.0).abs() / 125.0 < 0.01, "{hours}");
    }

    #[test]
    fn n_hashes_matches_u128_route() {
        for (n, k) in [(10u64, 2u64), (150, 3), (30_000, 2), (5_050_000, 2)] {
            let e = estimate(n, k, 1.0).unwrap();
            assert_eq!(e.n_hashes, BigUint::from(binomial(n, k).unwrap()));
        }
    }

    #[test]
    fn runtime_scales_linearly_in_per_hash_time() {
        let a = estimate(1000, 2, 0.5).unwrap();
        let b = estimate(1000, 2, 1.0).unwrap();
        assert_eq!(b.runtime_seconds, 2.0 * a.runtime_seconds);
    }

    #[test]
    fn budget_crossovers() {
        // k=1, 1 s/hash, 10 s budget: C(11,1) = 11 > 10 >= C(10,1).
        assert_eq!(min_universe_for_budget(1, 1.0, 10.0).unwrap(), 11);
        // k=3 threshold lands near n = 1,300 for a 100 h budget.
        let n = min_universe_for_budget(3, MS, 100.0 * SECONDS_PER_HOUR).unwrap();
        assert!((1_250..=1_350).contains(&n), "{n}");
        // And the argmin property holds exactly.
        assert!(binomial(n - 1, 3).unwrap() as f64 * MS <= 360_000.0);
        assert!(binomial(n, 3).unwrap() as f64 * MS > 360_000.0);
        // Inverting the 125 h estimate recovers the 30,000-title universe.
        let n = min_universe_for_budget(2, MS, 125.0 * SECONDS_PER_HOUR).unwrap();
        assert!((29_900..=30_100).contains(&n), "{n}");
    }

    #[test]
    fn invalid_parameters() {
        assert!(estimate(1, 2, MS).is_err());
        assert!(estimate(10, 0, MS).is_err());
        assert!(estimate(10, 2, 0.0).is_err());
        assert!(min_universe_for_budget(2, MS, -1.0).is_err());
    }

    #[test]
    fn sweep_shapes() {
        let rows = sweep(&[1, 2, 3], &[DBLP], MS).unwrap();
        assert_eq!(rows.len(), 3);
        assert!(sweep(&[1, 2], &[], MS).unwrap().is_empty());
        let one = sweep(&[2], &[100], MS).unwrap();
        assert_eq!(one[0].n_hashes, BigUint::from(4950u64));
    }
}
