//! Deterministic synthetic corpus generator for tests and benchmarks:
//! documents drawing references from a shared key pool, with optional
//! planted source/copy pairs that share a controlled number of references.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ingest::{RawRecord, RawRef};
use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct GenConfig {
    pub n_docs: usize,
    pub refs_min: usize,
    pub refs_max: usize,
    pub pool_size: usize,
    /// Number of planted source/copy pairs (each consumes two documents
    /// of the n_docs budget).
    pub planted_pairs: usize,
    /// References shared by each planted pair.
    pub planted_overlap: usize,
    pub seed: u64,
}

impl Default for GenConfig {
    fn default() -> Self {
        // Desk-scale defaults: large enough to show the resource trends,
        // small enough that k=3 finishes in minutes.
        GenConfig {
            n_docs: 1_000,
            refs_min: 10,
            refs_max: 50,
            pool_size: 20_000,
            planted_pairs: 0,
            planted_overlap: 5,
            seed: 42,
        }
    }
}

fn pool_title(i: usize) -> String {
    format!("synthetic reference title {i:06}")
}

/// Doc ids of the planted pairs as (source, copy), matching the records
/// [`generate`] emits.
pub fn planted_pair_ids(cfg: &GenConfig) -> Vec<(String, String)> {
    (0..cfg.planted_pairs)
        .map(|j| (format!("src{j:04}"), format!("plg{j:04}")))
        .collect()
}

/// Generates the corpus records. Deterministic for a fixed config.
pub fn generate(cfg: &GenConfig) -> Result<Vec<RawRecord>> {
    if cfg.refs_min < 1 || cfg.refs_min > cfg.refs_max {
        return Err(Error::InvalidParameter(
            "need 1 <= refs_min <= refs_max".into(),
        ));
    }
    if cfg.refs_max > cfg.pool_size {
        return Err(Error::InvalidParameter(
            "pool must be at least refs_max keys".into(),
        ));
    }
    if cfg.planted_pairs > 0 && cfg.planted_overlap > cfg.refs_min {
        return Err(Error::InvalidParameter(
            "planted overlap cannot exceed refs_min".into(),
        ));
    }
    if 2 * cfg.planted_pairs > cfg.n_docs {
        return Err(Error::InvalidParameter(
            "planted pairs exceed the document budget".into(),
        ));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut records = Vec::with_capacity(cfg.n_docs);

    let draw = |rng: &mut ChaCha8Rng, n: usize| -> Vec<usize> {
        sample(rng, cfg.pool_size, n).into_vec()
    };
    let to_refs = |keys: &[usize]| -> Vec<RawRef> {
        keys.iter()
            .map(|&i| RawRef {
                title: pool_title(i),
                authors: Vec::new(),
                year: None,
            })
            .collect()
    };

    for j in 0..cfg.planted_pairs {
        let n_src = rng.gen_range(cfg.refs_min..=cfg.refs_max);
        let src_keys = draw(&mut rng, n_src);
        records.push(RawRecord {
            id: format!("src{j:04}"),
            refs: to_refs(&src_keys),
        });

        let n_plg = rng.gen_range(cfg.refs_min..=cfg.refs_max);
        let shared = sample(&mut rng, n_src, cfg.planted_overlap)
            .into_iter()
            .map(|i| src_keys[i])
            .collect::<Vec<_>>();
        let mut plg_keys = shared;
        let src_set: std::collections::HashSet<usize> = src_keys.iter().copied().collect();
        while plg_keys.len() < n_plg {
            let cand = rng.gen_range(0..cfg.pool_size);
            if !src_set.contains(&cand) && !plg_keys.contains(&cand) {
                plg_keys.push(cand);
            }
        }
        records.push(RawRecord {
            id: format!("plg{j:04}"),
            refs: to_refs(&plg_keys),
        });
    }

    for d in 0..cfg.n_docs - 2 * cfg.planted_pairs {
        let n = rng.gen_range(cfg.refs_min..=cfg.refs_max);
        records.push(RawRecord {
            id: format!("doc{d:05}"),
            refs: to_refs(&draw(&mut rng, n)),
        });
    }

    Ok(records)
}
