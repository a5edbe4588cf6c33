//! Domain types for references and documents, and the normalization rules
//! that turn raw reference metadata into canonical hash inputs.

use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

use crate::{Error, Result};

/// One bibliographic entry. `norm_key` is the canonical hash input derived
/// from the raw title; two references are the same reference iff their
/// norm_keys are equal.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Reference {
    pub raw_title: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub authors: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub year: Option<i32>,
    pub norm_key: String,
}

impl Reference {
    pub fn new(raw_title: impl Into<String>) -> Result<Self> {
        Self::with_meta(raw_title, Vec::new(), None)
    }

    pub fn with_meta(
        raw_title: impl Into<String>,
        authors: Vec<String>,
        year: Option<i32>,
    ) -> Result<Self> {
        let raw_title = raw_title.into();
        let norm_key = normalize_title(&raw_title)?;
        Ok(Reference {
            raw_title,
            authors,
            year,
            norm_key,
        })
    }
}

/// Canonicalizes a raw title into the key that gets hashed:
/// Unicode compatibility normalization, lowercasing, every
/// non-alphanumeric character replaced by a space, whitespace runs
/// collapsed, and the result trimmed.
///
/// Rejects titles that normalize to nothing, so every accepted reference
/// has a non-empty deterministic key.
pub fn normalize_title(raw: &str) -> Result<String> {
    let mapped: String = raw
        .nfkc()
        .flat_map(|c| c.to_lowercase())
        .map(|c| if c.is_alphanumeric() { c } else { ' ' })
        .collect();
    let key = mapped.split_whitespace().collect::<Vec<_>>().join(" ");
    if key.is_empty() {
        Err(Error::EmptyKey { raw: raw.into() })
    } else {
        Ok(key)
    }
}

/// A document: identifier plus its deduplicated reference set.
///
/// References are stored in first-occurrence order but downstream results
/// only ever depend on the set of norm_keys.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub doc_id: String,
    pub refs: Vec<Reference>,
}

impl Document {
    /// Builds a document, eliminating duplicate references by norm_key.
    pub fn new(doc_id: impl Into<String>, refs: Vec<Reference>) -> Self {
        Document {
            doc_id: doc_id.into(),
            refs: dedup_references(refs),
        }
    }

    /// The norm_keys of this document, sorted. This is the canonical view
    /// all hashing and similarity computations operate on.
    pub fn sorted_keys(&self) -> Vec<&str> {
        let mut keys: Vec<&str> = self.refs.iter().map(|r| r.norm_key.as_str()).collect();
        keys.sort_unstable();
        keys
    }

    pub fn n_refs(&self) -> usize {
        self.refs.len()
    }
}

/// Keeps exactly one reference per distinct norm_key, retaining the first
/// occurrence in input order.
pub fn dedup_references(refs: Vec<Reference>) -> Vec<Reference> {
    let mut seen = std::collections::HashSet::new();
    refs.into_iter()
        .filter(|r| seen.insert(r.norm_key.clone()))
        .collect()
}

/// Eligibility rule: a document enters the similarity computation iff
/// k <= |refs| <= max_refs.
pub fn eligible(doc: &Document, k: usize, max_refs: usize) -> bool {
    let n = doc.refs.len();
    k <= n && n <= max_refs
}

/// Default cap on reference-list size.
pub const DEFAULT_MAX_REFS: usize = 150;

/// A loaded collection of eligible documents for a fixed subset size.
#[derive(Debug, Clone)]
pub struct Corpus {
    pub documents: Vec<Document>,
    pub k: usize,
    pub max_refs: usize,
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn normalize_identity() {
        assert_eq!(normalize_title("abc").unwrap(), "abc");
    }

    #[test]
    fn normalize_pipeline() {
        assert_eq!(
            normalize_title("  The Quick\u{2014}Brown Fox! ").unwrap(),
            "the quick brown fox"
        );
    }

    #[test]
    fn normalize_empty_is_error() {
        assert!(matches!(normalize_title(""), Err(Error::EmptyKey { .. })));
        assert!(matches!(
            normalize_title("  --- !!! "),
            Err(Error::EmptyKey { .. })
        ));
    }

    #[test]
    fn normalize_compatibility_forms() {
        // Ligature and fullwidth forms decompose under NFKC.
        assert_eq!(normalize_title("ﬁle").unwrap(), "file");
        assert_eq!(normalize_title("ＡＢＣ").unwrap(), "abc");
    }

    #[test]
    fn dedup_keeps_first_occurrence() {
        let a = Reference::new("A Study").unwrap();
        let b = Reference::new("Other Work").unwrap();
        let a2 = Reference::new("a\u{2014}study").unwrap();
        assert_eq!(a.norm_key, a2.norm_key);
        let out = dedup_references(vec![a.clone(), b.clone(), a2]);
        assert_eq!(out.len(), 2);
        assert_eq!(out[0].raw_title, "A Study");
        assert_eq!(out[1].norm_key, b.norm_key);
    }

    #[test]
    fn dedup_singleton() {
        let a = Reference::new("only one").unwrap();
        assert_eq!(dedup_references(vec![a]).len(), 1);
    }

    #[test]
    fn eligibility_bounds() {
        let mk = |n: usize| {
            Document::new(
                "d",
                (0..n)
                    .map(|i| Reference::new(format!("title {i}")).unwrap())
                    .collect(),
            )
        };
        assert!(!eligible(&mk(1), 2, 150));
        assert!(eligible(&mk(2), 2, 150));
        assert!(eligible(&mk(150), 2, 150));
        assert!(!eligible(&mk(151), 2, 150));
    }

    proptest! {
        #[test]
        fn normalize_is_idempotent(s in "\\PC{0,40}") {
            if let Ok(once) = normalize_title(&s) {
                prop_assert_eq!(normalize_title(&once).unwrap(), once);
            }
        }

        #[test]
        fn dedup_is_order_insensitive_as_a_set(perm in proptest::sample::subsequence(
            vec!["a b", "c", "a b", "d e f", "c", "g"], 0..6)) {
            let fwd: Vec<Reference> = perm.iter().map(|t| Reference::new(*t).unwrap()).collect();
            let mut rev = fwd.clone();
            rev.reverse();
            let keys = |v: Vec<Reference>| {
                let mut ks: Vec<String> = dedup_references(v).into_iter().map(|r| r.norm_key).collect();
                ks.sort();
                ks
            };
            prop_assert_eq!(keys(fwd), keys(rev));
        }
    }
}
