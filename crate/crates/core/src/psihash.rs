//! Masking of reference subsets: SHA-1 digests of normalized titles,
//! enumeration of k-combinations, and the combined subset hashes that are
//! the only thing a document ever discloses.

use std::collections::{HashMap, HashSet as StdHashSet};
use std::fmt;
use std::io::{Read, Write};

use sha1::{Digest as _, Sha1};

use crate::binomial::binomial;
use crate::refmodel::{Corpus, Document, Reference};
use crate::{Error, Result};

/// Identifier of the default masking scheme: SHA-1 digests combined by
/// addition modulo 2^160.
pub const HASH_FN_SHA1_SUM: &str = "sha1-sum";
/// Alternative scheme: SHA-1 digest of the sorted concatenation of the
/// member digests. Kept for sensitivity experiments.
pub const HASH_FN_SHA1_CAT: &str = "sha1-cat";

/// How the k member digests of a subset are combined into one value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CombineMode {
    /// Sum of the digests read as big-endian 160-bit integers, mod 2^160.
    #[default]
    ModularSum,
    /// Digest of the concatenation of the member digests in ascending order.
    DigestOfSorted,
}

impl CombineMode {
    pub fn hash_fn_id(self) -> &'static str {
        match self {
            CombineMode::ModularSum => HASH_FN_SHA1_SUM,
            CombineMode::DigestOfSorted => HASH_FN_SHA1_CAT,
        }
    }
}

/// A 160-bit digest of a single reference, interpreted big-endian.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RefDigest(pub [u8; 20]);

/// The combined hash of one k-subset of references. Same width as
/// [`RefDigest`]; big-endian byte order makes the derived `Ord` numeric.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SubsetHash(pub [u8; 20]);

impl fmt::Debug for SubsetHash {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SubsetHash({})", self.to_hex())
    }
}

impl SubsetHash {
    pub fn to_hex(self) -> String {
        let mut s = String::with_capacity(40);
        for b in self.0 {
            s.push_str(&format!("{b:02x}"));
        }
        s
    }

    pub fn from_hex(hex: &str) -> Result<Self> {
        let bytes = hex.as_bytes();
        if bytes.len() != 40 {
            return Err(Error::MalformedHex(hex.into()));
        }
        let mut out = [0u8; 20];
        for (i, chunk) in bytes.chunks_exact(2).enumerate() {
            let s = std::str::from_utf8(chunk).map_err(|_| Error::MalformedHex(hex.into()))?;
            out[i] = u8::from_str_radix(s, 16).map_err(|_| Error::MalformedHex(hex.into()))?;
        }
        Ok(SubsetHash(out))
    }
}

/// Big-endian addition modulo 2^160.
fn add_mod_2_160(acc: &mut [u8; 20], rhs: &[u8; 20]) {
    let mut carry = 0u16;
    for i in (0..20).rev() {
        let sum = acc[i] as u16 + rhs[i] as u16 + carry;
        acc[i] = sum as u8;
        carry = sum >> 8;
    }
    // carry out of the top byte is the reduction mod 2^160
}

/// SHA-1 digest of the UTF-8 bytes of a normalized reference key.
pub fn digest_reference(norm_key: &str) -> Result<RefDigest> {
    if norm_key.is_empty() {
        return Err(Error::EmptyKey { raw: String::new() });
    }
    let out = Sha1::digest(norm_key.as_bytes());
    Ok(RefDigest(out.into()))
}

/// Combines exactly `k` member digests into the subset hash. Order of the
/// members never matters: modular addition is commutative, and the
/// concatenation mode sorts first.
pub fn combine(digests: &[RefDigest], k: usize, mode: CombineMode) -> Result<SubsetHash> {
    if digests.len() != k {
        return Err(Error::WrongArity {
            expected: k,
            got: digests.len(),
        });
    }
    match mode {
        CombineMode::ModularSum => {
            let mut acc = [0u8; 20];
            for d in digests {
                add_mod_2_160(&mut acc, &d.0);
            }
            Ok(SubsetHash(acc))
        }
        CombineMode::DigestOfSorted => {
            let mut sorted: Vec<&RefDigest> = digests.iter().collect();
            sorted.sort_unstable();
            let mut hasher = Sha1::new();
            for d in sorted {
                hasher.update(d.0);
            }
            Ok(SubsetHash(hasher.finalize().into()))
        }
    }
}

/// Lexicographic iterator over index k-combinations of 0..n.
pub struct Combinations {
    n: usize,
    k: usize,
    indices: Vec<usize>,
    started: bool,
    done: bool,
}

impl Combinations {
    pub fn new(n: usize, k: usize) -> Self {
        Combinations {
            n,
            k,
            indices: (0..k).collect(),
            started: false,
            done: k > n,
        }
    }

    fn advance(&mut self) -> bool {
        // Find the rightmost index that can still move.
        let mut i = self.k;
        loop {
            if i == 0 {
                return false;
            }
            i -= 1;
            if self.indices[i] < self.n - self.k + i {
                break;
            }
        }
        self.indices[i] += 1;
        for j in i + 1..self.k {
            self.indices[j] = self.indices[j - 1] + 1;
        }
        true
    }

    /// Visits every combination without allocating per item.
    pub fn for_each(mut self, mut f: impl FnMut(&[usize])) {
        if self.done {
            return;
        }
        f(&self.indices);
        while self.advance() {
            f(&self.indices);
        }
    }
}

impl Iterator for Combinations {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        if !self.started {
            self.started = true;
            return Some(self.indices.clone());
        }
        if self.advance() {
            Some(self.indices.clone())
        } else {
            self.done = true;
            None
        }
    }
}

/// Yields every k-subset of the document's references in lexicographic
/// order over sorted norm_keys.
pub fn enumerate_subsets(
    refs: &[Reference],
    k: usize,
) -> Result<impl Iterator<Item = Vec<&Reference>> + '_> {
    if refs.len() < k {
        return Err(Error::TooFewRefs {
            have: refs.len(),
            k,
        });
    }
    let mut sorted: Vec<&Reference> = refs.iter().collect();
    sorted.sort_unstable_by(|a, b| a.norm_key.cmp(&b.norm_key));
    Ok(Combinations::new(sorted.len(), k)
        .map(move |idx| idx.into_iter().map(|i| sorted[i]).collect()))
}

/// The masked hash set a document discloses: H_d for one subset size.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DocHashSet {
    pub doc_id: String,
    pub k: usize,
    /// Sorted ascending, duplicates removed.
    pub hashes: Vec<SubsetHash>,
    /// Number of subsets enumerated, C(|refs|, k). When this exceeds
    /// `hashes.len()` a combined-digest collision occurred inside the
    /// document; callers surface it as a diagnostic.
    pub enumerated: u128,
}

impl DocHashSet {
    pub fn len(&self) -> usize {
        self.hashes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hashes.is_empty()
    }

    /// How many enumerated subsets were lost to within-document collisions.
    pub fn collision_deficit(&self) -> u128 {
        self.enumerated - self.hashes.len() as u128
    }

    pub fn from_hashes(doc_id: impl Into<String>, k: usize, mut hashes: Vec<SubsetHash>) -> Self {
        hashes.sort_unstable();
        hashes.dedup();
        let enumerated = hashes.len() as u128;
        DocHashSet {
            doc_id: doc_id.into(),
            k,
            hashes,
            enumerated,
        }
    }

    /// Exact count of hashes shared with another set (sorted-merge join).
    pub fn intersection_count(&self, other: &DocHashSet) -> u64 {
        let (mut i, mut j, mut n) = (0usize, 0usize, 0u64);
        while i < self.hashes.len() && j < other.hashes.len() {
            match self.hashes[i].cmp(&other.hashes[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    n += 1;
                    i += 1;
                    j += 1;
                }
            }
        }
        n
    }
}

/// Computes H_d: the set of combined hashes of every k-subset of the
/// document's references.
pub fn hash_document(doc: &Document, k: usize, mode: CombineMode) -> Result<DocHashSet> {
    if doc.refs.len() < k {
        return Err(Error::TooFewRefs {
            have: doc.refs.len(),
            k,
        });
    }
    let mut keys = doc.sorted_keys();
    keys.sort_unstable();
    let digests: Vec<RefDigest> = keys
        .iter()
        .map(|key| digest_reference(key))
        .collect::<Result<_>>()?;

    let enumerated = binomial(digests.len() as u64, k as u64)
        .expect("C(n, k) fits u128 for any real reference list");
    let mut hashes: Vec<SubsetHash> = Vec::with_capacity(enumerated.min(1 << 24) as usize);
    let mut members: Vec<RefDigest> = Vec::with_capacity(k);
    Combinations::new(digests.len(), k).for_each(|idx| {
        members.clear();
        members.extend(idx.iter().map(|&i| digests[i]));
        let h = combine(&members, k, mode).expect("arity matches k");
        hashes.push(h);
    });
    hashes.sort_unstable();
    hashes.dedup();
    Ok(DocHashSet {
        doc_id: doc.doc_id.clone(),
        k,
        hashes,
        enumerated,
    })
}

/// Digest width for the collision study. 32-bit keeps only the low 32
/// bits of each reference digest before combination, emulating a short
/// checksum-style hash.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DigestWidth {
    Bits32,
    Bits160,
}

/// Counts unordered pairs of *distinct* reference subsets across the whole
/// corpus whose combined hashes collide. Identical subsets appearing in
/// several documents are the same hash input and never count.
pub fn count_collisions(corpus: &Corpus, k: usize, width: DigestWidth) -> Result<u64> {
    // Subset identity is the digest of the sorted member keys with a
    // separator, which is collision-free for our purposes and independent
    // of the additive combination under test.
    fn subset_identity(keys: &[&str], idx: &[usize]) -> [u8; 20] {
        let mut hasher = Sha1::new();
        for &i in idx {
            hasher.update(keys[i].as_bytes());
            hasher.update([0x1f]);
        }
        hasher.finalize().into()
    }

    let mut pairs = 0u64;
    match width {
        DigestWidth::Bits32 => {
            let mut buckets: HashMap<u32, StdHashSet<[u8; 20]>> = HashMap::new();
            for doc in &corpus.documents {
                let keys = doc.sorted_keys();
                let digests: Vec<u32> = keys
                    .iter()
                    .map(|key| {
                        let d = digest_reference(key)?;
                        Ok(u32::from_be_bytes(d.0[16..20].try_into().unwrap()))
                    })
                    .collect::<Result<_>>()?;
                Combinations::new(keys.len(), k).for_each(|idx| {
                    let combined = idx
                        .iter()
                        .fold(0u32, |acc, &i| acc.wrapping_add(digests[i]));
                    buckets
                        .entry(combined)
                        .or_default()
                        .insert(subset_identity(&keys, idx));
                });
            }
            for set in buckets.values() {
                let m = set.len() as u64;
                pairs += m * (m - 1) / 2;
            }
        }
        DigestWidth::Bits160 => {
            let mut buckets: HashMap<SubsetHash, StdHashSet<[u8; 20]>> = HashMap::new();
            for doc in &corpus.documents {
                let keys = doc.sorted_keys();
                let digests: Vec<RefDigest> = keys
                    .iter()
                    .map(|key| digest_reference(key))
                    .collect::<Result<_>>()?;
                let mut members: Vec<RefDigest> = Vec::with_capacity(k);
                Combinations::new(keys.len(), k).for_each(|idx| {
                    members.clear();
                    members.extend(idx.iter().map(|&i| digests[i]));
                    let h = combine(&members, k, CombineMode::ModularSum).unwrap();
                    buckets
                        .entry(h)
                        .or_default()
                        .insert(subset_identity(&keys, idx));
                });
            }
            for set in buckets.values() {
                let m = set.len() as u64;
                pairs += m * (m - 1) / 2;
            }
        }
    }
    Ok(pairs)
}

const HASHSET_MAGIC: &[u8; 8] = b"PBCHSET\x01";

/// Writes the binary hash-set export: 8 magic bytes, k as big-endian u32,
/// count as big-endian u64, then the 20-byte values sorted ascending.
pub fn write_hashset_binary(set: &DocHashSet, w: &mut impl Write) -> Result<()> {
    w.write_all(HASHSET_MAGIC)?;
    w.write_all(&(set.k as u32).to_be_bytes())?;
    w.write_all(&(set.hashes.len() as u64).to_be_bytes())?;
    for h in &set.hashes {
        w.write_all(&h.0)?;
    }
    Ok(())
}

pub fn read_hashset_binary(doc_id: &str, r: &mut impl Read) -> Result<DocHashSet> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)
        .map_err(|_| Error::CorruptFile("truncated hash-set header".into()))?;
    if &magic != HASHSET_MAGIC {
        return Err(Error::CorruptFile("bad hash-set magic".into()));
    }
    let mut k4 = [0u8; 4];
    let mut c8 = [0u8; 8];
    r.read_exact(&mut k4)
        .map_err(|_| Error::CorruptFile("truncated hash-set header".into()))?;
    r.read_exact(&mut c8)
        .map_err(|_| Error::CorruptFile("truncated hash-set header".into()))?;
    let k = u32::from_be_bytes(k4) as usize;
    let count = u64::from_be_bytes(c8);
    let mut hashes = Vec::with_capacity(count as usize);
    let mut buf = [0u8; 20];
    let mut prev: Option<SubsetHash> = None;
    for _ in 0..count {
        r.read_exact(&mut buf)
            .map_err(|_| Error::CorruptFile("truncated hash-set body".into()))?;
        let h = SubsetHash(buf);
        if let Some(p) = prev {
            if p >= h {
                return Err(Error::CorruptFile("hash values not strictly ascending".into()));
            }
        }
        prev = Some(h);
        hashes.push(h);
    }
    let enumerated = hashes.len() as u128;
    Ok(DocHashSet {
        doc_id: doc_id.into(),
        k,
        hashes,
        enumerated,
    })
}

/// Debug export: one 40-hex-char value per line, sorted ascending.
pub fn write_hashset_hex(set: &DocHashSet, w: &mut impl Write) -> Result<()> {
    for h in &set.hashes {
        writeln!(w, "{}", h.to_hex())?;
    }
    Ok(())
}
