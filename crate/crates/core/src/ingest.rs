//! Corpus loading: newline-delimited JSON records in, normalized and
//! deduplicated [`Document`]s out, with eligibility filtering and
//! corpus-level statistics.

use std::collections::HashSet;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::refmodel::{eligible, Corpus, Document, Reference};
use crate::{Error, Result};

/// One reference as it appears on disk.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RawRef {
    pub title: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub authors: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub year: Option<i32>,
}

/// One corpus record: `{"id": ..., "refs": [{"title": ...}, ...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RawRecord {
    pub id: String,
    pub refs: Vec<RawRef>,
}

/// Corpus-level counts reported after loading.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct CorpusStats {
    pub n_docs_loaded: usize,
    pub n_docs_excluded: usize,
    /// Distinct norm_keys across the loaded documents.
    pub n_unique_refs: usize,
}

/// Turns a parsed record into a normalized, deduplicated document.
pub fn parse_document(record: RawRecord, line: usize) -> Result<Document> {
    if record.id.is_empty() {
        return Err(Error::MalformedRecord {
            line,
            reason: "record has no doc_id".into(),
        });
    }
    if record.refs.is_empty() {
        return Err(Error::MalformedRecord {
            line,
            reason: "record has an empty reference array".into(),
        });
    }
    let refs = record
        .refs
        .into_iter()
        .map(|r| Reference::with_meta(r.title, r.authors, r.year))
        .collect::<Result<Vec<_>>>()?;
    Ok(Document::new(record.id, refs))
}

fn parse_line(line: &str, line_no: usize) -> Result<RawRecord> {
    serde_json::from_str(line).map_err(|e| Error::Json {
        line: line_no,
        source: e,
    })
}

/// Loads a corpus file, keeping only documents eligible for subset size k.
pub fn load_corpus(path: impl AsRef<Path>, k: usize, max_refs: usize) -> Result<(Corpus, CorpusStats)> {
    let file = std::fs::File::open(path)?;
    load_corpus_from_reader(BufReader::new(file), k, max_refs)
}

pub fn load_corpus_from_reader(
    reader: impl BufRead,
    k: usize,
    max_refs: usize,
) -> Result<(Corpus, CorpusStats)> {
    if k < 1 {
        return Err(Error::InvalidParameter("subset size k must be >= 1".into()));
    }
    let mut documents = Vec::new();
    let mut stats = CorpusStats::default();
    let mut unique: HashSet<String> = HashSet::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let line_no = idx + 1;
        let record = parse_line(&line, line_no)?;
        let doc = parse_document(record, line_no)?;
        if eligible(&doc, k, max_refs) {
            for r in &doc.refs {
                unique.insert(r.norm_key.clone());
            }
            documents.push(doc);
            stats.n_docs_loaded += 1;
        } else {
            stats.n_docs_excluded += 1;
        }
    }
    stats.n_unique_refs = unique.len();
    Ok((
        Corpus {
            documents,
            k,
            max_refs,
        },
        stats,
    ))
}

/// Serializes records back to the newline-delimited corpus format.
pub fn write_records(records: &[RawRecord], w: &mut impl std::io::Write) -> Result<()> {
    for rec in records {
        serde_json::to_writer(&mut *w, rec).map_err(|e| Error::Json { line: 0, source: e })?;
        writeln!(w)?;
    }
    Ok(())
}
