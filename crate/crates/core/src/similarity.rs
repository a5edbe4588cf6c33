//! Bibliographic coupling strength, its private variant over hash sets,
//! and the inverse-binomial recovery that makes both paths agree exactly.
//!
//! Scores are exact rationals; decimals only appear when a report is
//! rendered. That is what lets the recovery path be compared to the
//! cleartext path with equality instead of a tolerance.

use std::collections::BTreeSet;
use std::io::Write;

use num_rational::Ratio;
use serde::Serialize;

use crate::binomial::{inverse_binomial, inverse_binomial_floor};
use crate::psihash::DocHashSet;
use crate::{Error, Result};

/// Exact similarity score in [0, 1].
pub type Score = Ratio<u64>;

/// Strict mode rejects intersection counts that are not binomial numbers
/// (the signature of a hash collision); tolerant mode rounds them down to
/// the nearest binomial number instead.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RecoveryMode {
    #[default]
    Strict,
    Tolerant,
}

fn invert(j: u64, k: usize, mode: RecoveryMode) -> Result<u64> {
    match mode {
        RecoveryMode::Strict => inverse_binomial(j as u128, k),
        RecoveryMode::Tolerant => Ok(if j == 0 {
            0
        } else {
            inverse_binomial_floor(j as u128, k)
        }),
    }
}

/// Classical bibliographic coupling strength: |A ∩ B| / |A ∪ B| over
/// cleartext reference keys.
pub fn bc_strength(a: &BTreeSet<&str>, b: &BTreeSet<&str>) -> Result<Score> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySet);
    }
    let inter = a.intersection(b).count() as u64;
    let union = a.len() as u64 + b.len() as u64 - inter;
    Ok(Ratio::new(inter, union))
}

/// Private bibliographic coupling strength: the same Jaccard form, but
/// over the disclosed subset-hash sets.
pub fn pbc_strength(a: &DocHashSet, b: &DocHashSet) -> Result<Score> {
    if a.k != b.k {
        return Err(Error::MismatchedK {
            left: a.k,
            right: b.k,
        });
    }
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySet);
    }
    let inter = a.intersection_count(b);
    let union = a.len() as u64 + b.len() as u64 - inter;
    Ok(Ratio::new(inter, union))
}

/// Recovers the cleartext coupling strength from hash sets alone: the
/// inverse binomial turns each hash count back into a reference count,
/// then the Jaccard form applies. Exact whenever no collision occurred
/// and the documents share either zero or at least k references.
pub fn recovered_bc(a: &DocHashSet, b: &DocHashSet, mode: RecoveryMode) -> Result<Score> {
    if a.k != b.k {
        return Err(Error::MismatchedK {
            left: a.k,
            right: b.k,
        });
    }
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySet);
    }
    let inter = a.intersection_count(b);
    recovered_bc_from_counts(inter, a.len() as u64, b.len() as u64, a.k, mode)
}

/// The recovery computation on raw counts (|H_a ∩ H_b|, |H_a|, |H_b|).
pub fn recovered_bc_from_counts(
    intersection: u64,
    len_a: u64,
    len_b: u64,
    k: usize,
    mode: RecoveryMode,
) -> Result<Score> {
    let i = invert(intersection, k, mode)?;
    if i == 0 {
        return Ok(Ratio::new(0, 1));
    }
    let a = invert(len_a, k, mode)?;
    let b = invert(len_b, k, mode)?;
    Ok(Ratio::new(i, a + b - i))
}

/// How the cleartext score came back out of the hash sets, or why it
/// could not.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Recovered {
    Score(Score),
    /// The intersection count was not a binomial number: a combined-hash
    /// collision contaminated it.
    CollisionSuspected,
}

/// One ranked candidate pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairResult {
    pub doc_id_a: String,
    pub doc_id_b: String,
    pub intersection_hashes: u64,
    pub s_pbc: Score,
    pub s_bc_recovered: Recovered,
}

/// Ranks candidate sources for a query hash set given per-document
/// intersection counts from a single index pass. Zero-overlap candidates
/// are omitted; order is s_PBC descending, ties by doc_id ascending.
pub fn rank_candidates(
    query: &DocHashSet,
    per_doc: &[(String, u64, u64)],
    mode: RecoveryMode,
) -> Vec<PairResult> {
    let q_len = query.len() as u64;
    let mut out: Vec<PairResult> = per_doc
        .iter()
        .filter(|(_, inter, _)| *inter > 0)
        .map(|(doc_id, inter, d_len)| {
            let s_pbc = Ratio::new(*inter, q_len + d_len - inter);
            let s_bc_recovered = match recovered_bc_from_counts(*inter, q_len, *d_len, query.k, mode)
            {
                Ok(s) => Recovered::Score(s),
                Err(_) => Recovered::CollisionSuspected,
            };
            PairResult {
                doc_id_a: query.doc_id.clone(),
                doc_id_b: doc_id.clone(),
                intersection_hashes: *inter,
                s_pbc,
                s_bc_recovered,
            }
        })
        .collect();
    out.sort_by(|x, y| {
        y.s_pbc
            .cmp(&x.s_pbc)
            .then_with(|| x.doc_id_b.cmp(&y.doc_id_b))
    });
    out
}

/// Counts only those matched hashes whose corpus-wide posting list
/// involves no document outside the given pair. Each slice is the posting
/// list of one matched hash.
pub fn pair_exclusive_count<S: AsRef<str>>(
    posting_lists: &[Vec<S>],
    doc_a: &str,
    doc_b: &str,
) -> u64 {
    posting_lists
        .iter()
        .filter(|list| {
            list.iter()
                .all(|d| d.as_ref() == doc_a || d.as_ref() == doc_b)
        })
        .count() as u64
}

/// Renders an exact rational in [0, 1] as a decimal with `sig`
/// significant digits (long division, round half up).
pub fn format_score(score: Score, sig: usize) -> String {
    let num = *score.numer() as u128;
    let den = *score.denom() as u128;
    if num == 0 {
        return "0".into();
    }
    if num == den {
        return "1".into();
    }
    debug_assert!(num < den);
    let mut digits: Vec<u8> = Vec::new();
    let mut leading_zeros = 0usize;
    let mut significant = 0usize;
    let mut rem = num;
    while significant < sig {
        rem *= 10;
        let d = (rem / den) as u8;
        rem %= den;
        if d == 0 && significant == 0 {
            leading_zeros += 1;
        } else {
            significant += 1;
            digits.push(d);
        }
    }
    // One more digit decides rounding.
    rem *= 10;
    if rem / den >= 5 {
        let mut i = digits.len();
        loop {
            if i == 0 {
                // Carry past the first significant digit: 0.0999.. -> 0.100..
                digits.insert(0, 1);
                if leading_zeros > 0 {
                    leading_zeros -= 1;
                } else {
                    // 0.999.. rounds to 1
                    return "1".into();
                }
                digits.truncate(sig);
                break;
            }
            i -= 1;
            if digits[i] == 9 {
                digits[i] = 0;
            } else {
                digits[i] += 1;
                break;
            }
        }
    }
    let mut s = String::with_capacity(2 + leading_zeros + digits.len());
    s.push_str("0.");
    for _ in 0..leading_zeros {
        s.push('0');
    }
    for d in digits {
        s.push((b'0' + d) as char);
    }
    s
}

#[derive(Serialize)]
struct ReportRecord<'a> {
    doc_id_a: &'a str,
    doc_id_b: &'a str,
    intersection_hashes: u64,
    s_pbc: String,
    s_pbc_num: u64,
    s_pbc_den: u64,
    s_bc_recovered: Option<String>,
    s_bc_num: Option<u64>,
    s_bc_den: Option<u64>,
    collision_suspected: bool,
}

/// Writes ranked results as newline-delimited records. JSON mode emits one
/// JSON object per line; text mode emits tab-separated columns.
pub fn write_match_report(
    results: &[PairResult],
    json: bool,
    w: &mut impl Write,
) -> Result<()> {
    for r in results {
        let (bc_dec, bc_num, bc_den, collided) = match &r.s_bc_recovered {
            Recovered::Score(s) => (
                Some(format_score(*s, 12)),
                Some(*s.numer()),
                Some(*s.denom()),
                false,
            ),
            Recovered::CollisionSuspected => (None, None, None, true),
        };
        if json {
            let rec = ReportRecord {
                doc_id_a: &r.doc_id_a,
                doc_id_b: &r.doc_id_b,
                intersection_hashes: r.intersection_hashes,
                s_pbc: format_score(r.s_pbc, 12),
                s_pbc_num: *r.s_pbc.numer(),
                s_pbc_den: *r.s_pbc.denom(),
                s_bc_recovered: bc_dec,
                s_bc_num: bc_num,
                s_bc_den: bc_den,
                collision_suspected: collided,
            };
            serde_json::to_writer(&mut *w, &rec).map_err(|e| Error::Json { line: 0, source: e })?;
            writeln!(w)?;
        } else {
            writeln!(
                w,
                "{}\t{}\t{}\t{}\t{}/{}\t{}",
                r.doc_id_a,
                r.doc_id_b,
                r.intersection_hashes,
                format_score(r.s_pbc, 12),
                r.s_pbc.numer(),
                r.s_pbc.denom(),
                bc_dec.unwrap_or_else(|| "collision-suspected".into()),
            )?;
        }
    }
    Ok(())
}
