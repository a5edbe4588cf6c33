//! Corpus-side inverted index: subset hash -> posting list of documents,
//! with intersection counting, occurrence histograms, and a durable
//! on-disk format.

use std::collections::HashMap;
use std::hash::{BuildHasher, Hasher};
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;
use sha1::{Digest as _, Sha1};

use crate::psihash::{hash_document, CombineMode, DocHashSet, SubsetHash};
use crate::refmodel::Corpus;
use crate::{Error, Result};

/// Subset hashes are uniformly distributed digests, so the map key hash
/// is just the leading eight bytes.
#[derive(Debug, Clone, Copy, Default)]
pub struct DigestKeyState;

pub struct DigestKeyHasher(u64);

impl Hasher for DigestKeyHasher {
    fn finish(&self) -> u64 {
        self.0
    }

    fn write(&mut self, bytes: &[u8]) {
        let mut buf = [0u8; 8];
        let n = bytes.len().min(8);
        buf[..n].copy_from_slice(&bytes[..n]);
        self.0 = u64::from_be_bytes(buf);
    }
}

impl BuildHasher for DigestKeyState {
    type Hasher = DigestKeyHasher;

    fn build_hasher(&self) -> DigestKeyHasher {
        DigestKeyHasher(0)
    }
}

/// Fractions of distinct hashes whose posting list has length 1, 2, 3.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OccurrenceHistogram {
    pub total_hashes: u64,
    pub in_1: u64,
    pub in_2: u64,
    pub in_3: u64,
    pub ratio_in_1: f64,
    pub ratio_in_2: f64,
    pub ratio_in_3: f64,
}

/// Mapping from subset hash to the sorted list of documents containing it.
/// Stores |H_d| per document; never any cleartext-derived metadata.
pub struct InvertedIndex {
    k: usize,
    hash_fn_id: String,
    /// Postings are document ordinals, kept sorted by doc_id.
    entries: HashMap<SubsetHash, Vec<u32>, DigestKeyState>,
    doc_ids: Vec<String>,
    doc_sizes: Vec<u64>,
    id_lookup: HashMap<String, u32>,
    n_postings: u64,
}

impl InvertedIndex {
    pub fn new(k: usize, hash_fn_id: impl Into<String>) -> Self {
        InvertedIndex {
            k,
            hash_fn_id: hash_fn_id.into(),
            entries: HashMap::with_hasher(DigestKeyState),
            doc_ids: Vec::new(),
            doc_sizes: Vec::new(),
            id_lookup: HashMap::new(),
            n_postings: 0,
        }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn hash_fn_id(&self) -> &str {
        &self.hash_fn_id
    }

    pub fn n_docs(&self) -> usize {
        self.id_lookup.len()
    }

    pub fn n_entries(&self) -> usize {
        self.entries.len()
    }

    pub fn n_postings(&self) -> u64 {
        self.n_postings
    }

    pub fn doc_size(&self, doc_id: &str) -> Option<u64> {
        self.id_lookup.get(doc_id).map(|&o| self.doc_sizes[o as usize])
    }

    fn check_compatible(&self, set: &DocHashSet, hash_fn_id: Option<&str>) -> Result<()> {
        if set.k != self.k {
            return Err(Error::MismatchedK {
                left: set.k,
                right: self.k,
            });
        }
        if let Some(id) = hash_fn_id {
            if id != self.hash_fn_id {
                return Err(Error::MismatchedHashFn {
                    left: id.into(),
                    right: self.hash_fn_id.clone(),
                });
            }
        }
        Ok(())
    }

    /// Adds a document's hash set. Resubmitting a doc_id replaces its
    /// previous set.
    pub fn insert_doc(&mut self, set: &DocHashSet) -> Result<()> {
        self.check_compatible(set, None)?;
        if self.id_lookup.contains_key(&set.doc_id) {
            self.remove_doc(&set.doc_id);
        }
        let ord = self.doc_ids.len() as u32;
        self.doc_ids.push(set.doc_id.clone());
        self.doc_sizes.push(set.hashes.len() as u64);
        self.id_lookup.insert(set.doc_id.clone(), ord);
        for &h in &set.hashes {
            let list = self.entries.entry(h).or_default();
            let pos = list
                .binary_search_by(|&o| self.doc_ids[o as usize].cmp(&set.doc_id))
                .unwrap_or_else(|p| p);
            list.insert(pos, ord);
        }
        self.n_postings += set.hashes.len() as u64;
        Ok(())
    }

    /// Removes a document. Returns whether it was present.
    pub fn remove_doc(&mut self, doc_id: &str) -> bool {
        let Some(ord) = self.id_lookup.remove(doc_id) else {
            return false;
        };
        let doc_ids = &self.doc_ids;
        let mut removed_postings = 0u64;
        self.entries.retain(|_, list| {
            if let Ok(pos) =
                list.binary_search_by(|&o| doc_ids[o as usize].as_str().cmp(doc_id))
            {
                list.remove(pos);
                removed_postings += 1;
            }
            !list.is_empty()
        });
        self.n_postings -= removed_postings;
        self.doc_sizes[ord as usize] = 0;
        true
    }

    /// Builds the index for a whole corpus: per-document hashing runs in
    /// parallel, the merge is sequential in document order so the result
    /// is independent of scheduling.
    pub fn build(corpus: &Corpus, k: usize, mode: CombineMode) -> Result<InvertedIndex> {
        let sets: Vec<DocHashSet> = corpus
            .documents
            .par_iter()
            .map(|doc| hash_document(doc, k, mode))
            .collect::<Result<_>>()?;
        let mut index = InvertedIndex::new(k, mode.hash_fn_id());
        for set in &sets {
            index.insert_doc(set)?;
        }
        Ok(index)
    }

    /// For every indexed document sharing at least one hash with the
    /// query: (doc_id, shared-hash count, |H_d|). Sorted by doc_id.
    pub fn intersect(&self, query: &DocHashSet) -> Result<Vec<(String, u64, u64)>> {
        self.check_compatible(query, None)?;
        let mut counts: HashMap<u32, u64> = HashMap::new();
        for h in &query.hashes {
            if let Some(list) = self.entries.get(h) {
                for &ord in list {
                    *counts.entry(ord).or_insert(0) += 1;
                }
            }
        }
        let mut out: Vec<(String, u64, u64)> = counts
            .into_iter()
            .map(|(ord, n)| {
                (
                    self.doc_ids[ord as usize].clone(),
                    n,
                    self.doc_sizes[ord as usize],
                )
            })
            .collect();
        out.sort_unstable_by(|a, b| a.0.cmp(&b.0));
        Ok(out)
    }

    /// Posting lists (as doc_ids) for each of the given hashes, in input
    /// order. Hashes absent from the index yield empty lists.
    pub fn posting_lists(&self, hashes: &[SubsetHash]) -> Vec<Vec<String>> {
        hashes
            .iter()
            .map(|h| {
                self.entries
                    .get(h)
                    .map(|list| {
                        list.iter()
                            .map(|&o| self.doc_ids[o as usize].clone())
                            .collect()
                    })
                    .unwrap_or_default()
            })
            .collect()
    }

    pub fn occurrence_histogram(&self) -> Result<OccurrenceHistogram> {
        if self.entries.is_empty() {
            return Err(Error::EmptyIndex);
        }
        let total = self.entries.len() as u64;
        let mut in_n = [0u64; 3];
        for list in self.entries.values() {
            if (1..=3).contains(&list.len()) {
                in_n[list.len() - 1] += 1;
            }
        }
        Ok(OccurrenceHistogram {
            total_hashes: total,
            in_1: in_n[0],
            in_2: in_n[1],
            in_3: in_n[2],
            ratio_in_1: in_n[0] as f64 / total as f64,
            ratio_in_2: in_n[1] as f64 / total as f64,
            ratio_in_3: in_n[2] as f64 / total as f64,
        })
    }

    /// Canonical view for structural comparison: live documents sorted by
    /// id, entries sorted by hash with doc_id posting lists.
    pub fn canonical(&self) -> (Vec<(String, u64)>, Vec<(SubsetHash, Vec<String>)>) {
        let mut docs: Vec<(String, u64)> = self
            .id_lookup
            .iter()
            .map(|(id, &o)| (id.clone(), self.doc_sizes[o as usize]))
            .collect();
        docs.sort();
        let mut entries: Vec<(SubsetHash, Vec<String>)> = self
            .entries
            .iter()
            .map(|(&h, list)| {
                (
                    h,
                    list.iter().map(|&o| self.doc_ids[o as usize].clone()).collect(),
                )
            })
            .collect();
        entries.sort_by_key(|(h, _)| *h);
        (docs, entries)
    }

    /// Human-readable statistics dump.
    pub fn stats_text(&self, file_bytes: Option<u64>) -> String {
        let mut s = String::new();
        s.push_str(&format!("k:              {}\n", self.k));
        s.push_str(&format!("hash_fn:        {}\n", self.hash_fn_id));
        s.push_str(&format!("documents:      {}\n", self.n_docs()));
        s.push_str(&format!("distinct hashes: {}\n", self.n_entries()));
        s.push_str(&format!("postings:       {}\n", self.n_postings));
        if let Ok(h) = self.occurrence_histogram() {
            s.push_str(&format!(
                "ratio in 1/2/3 docs: {:.3}/{:.3}/{:.3}\n",
                h.ratio_in_1, h.ratio_in_2, h.ratio_in_3
            ));
        }
        if let Some(b) = file_bytes {
            s.push_str(&format!("bytes on disk:  {b}\n"));
        }
        s
    }

    pub fn persist(&self, path: impl AsRef<Path>) -> Result<u64> {
        let file = std::fs::File::create(path)?;
        let mut w = BufWriter::new(file);
        let bytes = self.write_to(&mut w)?;
        w.flush()?;
        Ok(bytes)
    }

    /// Serialized layout (all integers big-endian):
    /// magic "PBCINDEX", version u32, k u32, hash_fn_id (u16 length +
    /// bytes), doc count u64, entry count u64, posting count u64;
    /// doc table sorted by id (u16 length + bytes, |H_d| u64);
    /// entries sorted by hash (20-byte hash, varint posting count,
    /// varint-delta doc ordinals into the sorted table);
    /// SHA-1 checksum of everything before it.
    pub fn write_to(&self, w: &mut impl Write) -> Result<u64> {
        let (docs, entries) = self.canonical();
        let ord_of: HashMap<&str, u64> = docs
            .iter()
            .enumerate()
            .map(|(i, (id, _))| (id.as_str(), i as u64))
            .collect();

        let mut body: Vec<u8> = Vec::new();
        body.extend_from_slice(&1u32.to_be_bytes()); // version
        body.extend_from_slice(&(self.k as u32).to_be_bytes());
        body.extend_from_slice(&(self.hash_fn_id.len() as u16).to_be_bytes());
        body.extend_from_slice(self.hash_fn_id.as_bytes());
        body.extend_from_slice(&(docs.len() as u64).to_be_bytes());
        body.extend_from_slice(&(entries.len() as u64).to_be_bytes());
        body.extend_from_slice(&self.n_postings.to_be_bytes());
        for (id, size) in &docs {
            body.extend_from_slice(&(id.len() as u16).to_be_bytes());
            body.extend_from_slice(id.as_bytes());
            body.extend_from_slice(&size.to_be_bytes());
        }
        for (hash, list) in &entries {
            body.extend_from_slice(&hash.0);
            write_varint(&mut body, list.len() as u64);
            let mut prev = 0u64;
            for id in list {
                let ord = ord_of[id.as_str()];
                write_varint(&mut body, ord - prev);
                prev = ord;
            }
        }

        w.write_all(INDEX_MAGIC)?;
        w.write_all(&body)?;
        let checksum: [u8; 20] = Sha1::digest(&body).into();
        w.write_all(&checksum)?;
        Ok((INDEX_MAGIC.len() + body.len() + 20) as u64)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<InvertedIndex> {
        let file = std::fs::File::open(path)?;
        Self::read_from(&mut BufReader::new(file))
    }

    pub fn read_from(r: &mut impl Read) -> Result<InvertedIndex> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)
            .map_err(|_| Error::CorruptFile("truncated header".into()))?;
        if &magic != INDEX_MAGIC {
            return Err(Error::CorruptFile("bad magic".into()));
        }
        let mut body = Vec::new();
        r.read_to_end(&mut body)?;
        if body.len() < 20 {
            return Err(Error::CorruptFile("truncated checksum".into()));
        }
        let (body, stored_sum) = body.split_at(body.len() - 20);
        let computed: [u8; 20] = Sha1::digest(body).into();
        if computed != stored_sum {
            return Err(Error::CorruptFile("checksum mismatch".into()));
        }

        let mut c = Cursor::new(body);
        let version = c.u32()?;
        if version != 1 {
            return Err(Error::CorruptFile(format!("unsupported version {version}")));
        }
        let k = c.u32()? as usize;
        let id_len = c.u16()? as usize;
        let hash_fn_id = String::from_utf8(c.bytes(id_len)?.to_vec())
            .map_err(|_| Error::CorruptFile("hash_fn_id not utf-8".into()))?;
        let n_docs = c.u64()? as usize;
        let n_entries = c.u64()? as usize;
        let n_postings = c.u64()?;

        let mut index = InvertedIndex::new(k, hash_fn_id);
        for _ in 0..n_docs {
            let len = c.u16()? as usize;
            let id = String::from_utf8(c.bytes(len)?.to_vec())
                .map_err(|_| Error::CorruptFile("doc_id not utf-8".into()))?;
            let size = c.u64()?;
            let ord = index.doc_ids.len() as u32;
            index.doc_ids.push(id.clone());
            index.doc_sizes.push(size);
            index.id_lookup.insert(id, ord);
        }
        let mut total_postings = 0u64;
        for _ in 0..n_entries {
            let hash = SubsetHash(
                c.bytes(20)?
                    .try_into()
                    .expect("cursor returned exactly 20 bytes"),
            );
            let count = c.varint()?;
            let mut list = Vec::with_capacity(count as usize);
            let mut ord = 0u64;
            for i in 0..count {
                let delta = c.varint()?;
                ord = if i == 0 { delta } else { ord + delta };
                if ord >= n_docs as u64 {
                    return Err(Error::CorruptFile("posting ordinal out of range".into()));
                }
                list.push(ord as u32);
            }
            total_postings += count;
            index.entries.insert(hash, list);
        }
        if total_postings != n_postings {
            return Err(Error::CorruptFile("posting count mismatch".into()));
        }
        index.n_postings = n_postings;
        Ok(index)
    }
}

const INDEX_MAGIC: &[u8; 8] = b"PBCINDEX";

fn write_varint(out: &mut Vec<u8>, mut v: u64) {
    loop {
        let byte = (v & 0x7f) as u8;
        v >>= 7;
        if v == 0 {
            out.push(byte);
            return;
        }
        out.push(byte | 0x80);
    }
}

struct Cursor<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn new(data: &'a [u8]) -> Self {
        Cursor { data, pos: 0 }
    }

    fn bytes(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.data.len() {
            return Err(Error::CorruptFile("truncated body".into()));
        }
        let out = &self.data[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_be_bytes(self.bytes(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_be_bytes(self.bytes(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_be_bytes(self.bytes(8)?.try_into().unwrap()))
    }

    fn varint(&mut self) -> Result<u64> {
        let mut v = 0u64;
        let mut shift = 0u32;
        loop {
            let byte = self.bytes(1)?[0];
            v |= ((byte & 0x7f) as u64) << shift;
            if byte & 0x80 == 0 {
                return Ok(v);
            }
            shift += 7;
            if shift >= 64 {
                return Err(Error::CorruptFile("varint overflow".into()));
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::psihash::hash_document;
    use crate::refmodel::{Document, Reference};

    fn doc(id: &str, titles: &[&str]) -> Document {
        Document::new(
            id,
            titles.iter().map(|t| Reference::new(*t).unwrap()).collect(),
        )
    }

    fn corpus(docs: Vec<Document>, k: usize) -> Corpus {
        Corpus {
            documents: docs,
            k,
            max_refs: 150,
        }
    }

    #[test]
    fn single_doc_index() {
        let c = corpus(vec![doc("d1", &["a", "b", "c"])], 2);
        let idx = InvertedIndex::build(&c, 2, CombineMode::ModularSum).unwrap();
        assert_eq!(idx.n_entries(), 3);
        assert_eq!(idx.n_postings(), 3);
        let (_, entries) = idx.canonical();
        assert!(entries.iter().all(|(_, list)| list == &["d1".to_string()]));
    }

    #[test]
    fn identical_docs_share_every_entry() {
        let c = corpus(vec![doc("d1", &["a", "b", "c"]), doc("d2", &["c", "a", "b"])], 2);
        let idx = InvertedIndex::build(&c, 2, CombineMode::ModularSum).unwrap();
        assert_eq!(idx.n_entries(), 3);
        let (_, entries) = idx.canonical();
        assert!(entries.iter().all(|(_, list)| list.len() == 2));
    }

    #[test]
    fn postings_total_is_binomial_sum() {
        let c = corpus(
            vec![
                doc("d1", &["a", "b", "c", "d"]),
                doc("d2", &["a", "e", "f"]),
                doc("d3", &["g", "h", "i", "j", "k"]),
            ],
            2,
        );
        let idx = InvertedIndex::build(&c, 2, CombineMode::ModularSum).unwrap();
        // C(4,2) + C(3,2) + C(5,2) = 6 + 3 + 10
        assert_eq!(idx.n_postings(), 19);
    }

    #[test]
    fn intersect_counts() {
        let c = corpus(vec![doc("abd", &["a", "b", "d"]), doc("cde", &["c", "d", "e"])], 2);
        let idx = InvertedIndex::build(&c, 2, CombineMode::ModularSum).unwrap();
        let q = hash_document(&doc("q", &["a", "b", "c"]), 2, CombineMode::ModularSum).unwrap();
        let hits = idx.intersect(&q).unwrap();
        // Shares {a,b} with abd; nothing with cde.
        assert_eq!(hits, vec![("abd".to_string(), 1, 3)]);

        let self_q =
            hash_document(&doc("abd", &["a", "b", "d"]), 2, CombineMode::ModularSum).unwrap();
        let hits = idx.intersect(&self_q).unwrap();
        assert_eq!(hits, vec![("abd".to_string(), 3, 3)]);

        let far = hash_document(&doc("f", &["x", "y", "z"]), 2, CombineMode::ModularSum).unwrap();
        assert!(idx.intersect(&far).unwrap().is_empty());
    }

    #[test]
    fn intersect_rejects_mismatched_k() {
        let c = corpus(vec![doc("d", &["a", "b", "c"])], 2);
        let idx = InvertedIndex::build(&c, 2, CombineMode::ModularSum).unwrap();
        let q = hash_document(&doc("q", &["a", "b", "c"]), 3, CombineMode::ModularSum).unwrap();
        assert!(matches!(idx.intersect(&q), Err(Error::MismatchedK { .. })));
    }

    #[test]
    fn histogram_counts() {
        let c = corpus(vec![doc("d", &["a", "b", "c"])], 2);
        let idx = InvertedIndex::build(&c, 2, CombineMode::ModularSum).unwrap();
        let h = idx.occurrence_histogram().unwrap();
        assert_eq!(h.ratio_in_1, 1.0);

        // Two docs sharing exactly one 2-subset: {a,b}. 3 + 3 - 1 = 5 hashes.
        let c = corpus(vec![doc("x", &["a", "b", "p"]), doc("y", &["a", "b", "q"])], 2);
        let idx = InvertedIndex::build(&c, 2, CombineMode::ModularSum).unwrap();
        let h = idx.occurrence_histogram().unwrap();
        assert_eq!(h.total_hashes, 5);
        assert_eq!(h.in_2, 1);
        assert!((h.ratio_in_2 - 0.2).abs() < 1e-12);

        let empty = InvertedIndex::new(2, "sha1-sum");
        assert!(matches!(
            empty.occurrence_histogram(),
            Err(Error::EmptyIndex)
        ));
    }

    #[test]
    fn replace_semantics() {
        let mut idx = InvertedIndex::new(2, "sha1-sum");
        let v1 = hash_document(&doc("d", &["a", "b", "c"]), 2, CombineMode::ModularSum).unwrap();
        idx.insert_doc(&v1).unwrap();
        assert_eq!(idx.n_postings(), 3);
        let v2 = hash_document(&doc("d", &["x", "y"]), 2, CombineMode::ModularSum).unwrap();
        idx.insert_doc(&v2).unwrap();
        assert_eq!(idx.n_docs(), 1);
        assert_eq!(idx.n_postings(), 1);
        assert_eq!(idx.doc_size("d"), Some(1));
    }

    #[test]
    fn persist_round_trip() {
        let c = corpus(
            vec![
                doc("d1", &["a", "b", "c", "d"]),
                doc("d2", &["a", "b", "x"]),
                doc("d3", &["y", "z", "w"]),
            ],
            2,
        );
        let idx = InvertedIndex::build(&c, 2, CombineMode::ModularSum).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("test.idx");
        let bytes = idx.persist(&path).unwrap();
        assert_eq!(bytes, std::fs::metadata(&path).unwrap().len());
        let back = InvertedIndex::load(&path).unwrap();
        assert_eq!(back.canonical(), idx.canonical());
        assert_eq!(back.n_postings(), idx.n_postings());
        assert_eq!(back.hash_fn_id(), idx.hash_fn_id());
    }

    #[test]
    fn persist_empty_round_trip() {
        let idx = InvertedIndex::new(3, "sha1-sum");
        let mut buf = Vec::new();
        idx.write_to(&mut buf).unwrap();
        let back = InvertedIndex::read_from(&mut buf.as_slice()).unwrap();
        assert_eq!(back.canonical(), idx.canonical());
        assert_eq!(back.k(), 3);
    }

    #[test]
    fn corrupt_files_are_rejected() {
        let c = corpus(vec![doc("d1", &["a", "b", "c"])], 2);
        let idx = InvertedIndex::build(&c, 2, CombineMode::ModularSum).unwrap();
        let mut buf = Vec::new();
        idx.write_to(&mut buf).unwrap();

        let truncated = &buf[..buf.len() - 5];
        assert!(matches!(
            InvertedIndex::read_from(&mut &truncated[..]),
            Err(Error::CorruptFile(_))
        ));

        let mut flipped = buf.clone();
        let mid = flipped.len() / 2;
        flipped[mid] ^= 0xff;
        assert!(matches!(
            InvertedIndex::read_from(&mut flipped.as_slice()),
            Err(Error::CorruptFile(_))
        ));

        let mut bad_magic = buf.clone();
        bad_magic[0] = b'X';
        assert!(matches!(
            InvertedIndex::read_from(&mut bad_magic.as_slice()),
            Err(Error::CorruptFile(_))
        ));
    }

    #[test]
    fn rebuild_is_byte_identical() {
        let c = corpus(
            vec![doc("d1", &["a", "b", "c"]), doc("d2", &["b", "c", "d"])],
            2,
        );
        let a = InvertedIndex::build(&c, 2, CombineMode::ModularSum).unwrap();
        let b = InvertedIndex::build(&c, 2, CombineMode::ModularSum).unwrap();
        let mut ba = Vec::new();
        let mut bb = Vec::new();
        a.write_to(&mut ba).unwrap();
        b.write_to(&mut bb).unwrap();
        assert_eq!(ba, bb);
    }
}
