//! `pbc` — operator-facing pipeline: generate or ingest a corpus, hash and
//! index it, query for candidate sources, benchmark, serve, and model
//! preimage-attack costs.

use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use pbc_core::attackcost;
use pbc_core::indexstore::InvertedIndex;
use pbc_core::ingest::{load_corpus, write_records, RawRecord};
use pbc_core::psihash::{count_collisions, hash_document, CombineMode, DigestWidth, DocHashSet};
use pbc_core::refmodel::DEFAULT_MAX_REFS;
use pbc_core::similarity::{
    pair_exclusive_count, rank_candidates, write_match_report, PairResult, RecoveryMode,
};
use pbc_core::synth::{generate, GenConfig};
use pbc_core::tei;

#[derive(Parser)]
#[command(name = "pbc", version, about = "Private bibliographic coupling toolkit")]
struct Cli {
    /// Worker threads for parallel sections (default: machine parallelism).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum InputFormat {
    /// Newline-delimited JSON records.
    Jsonl,
    /// Directory of TEI-style XML files, one document per file.
    Tei,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum HashMode {
    /// SHA-1 digests combined by addition modulo 2^160.
    Sum,
    /// SHA-1 digest of the sorted concatenation of member digests.
    Cat,
}

impl From<HashMode> for CombineMode {
    fn from(m: HashMode) -> CombineMode {
        match m {
            HashMode::Sum => CombineMode::ModularSum,
            HashMode::Cat => CombineMode::DigestOfSorted,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum QueryMode {
    /// Rank by raw private coupling strength.
    Raw,
    /// Count only matches occurring in no document outside the pair.
    PairExclusive,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a corpus (JSONL or TEI directory), report statistics, and
    /// optionally write the normalized corpus file.
    Ingest {
        /// Input corpus file or TEI directory.
        input: PathBuf,
        #[arg(long, value_enum, default_value = "jsonl")]
        format: InputFormat,
        #[arg(long, default_value_t = 2)]
        k: usize,
        #[arg(long, default_value_t = DEFAULT_MAX_REFS)]
        max_refs: usize,
        /// Where to write the corpus in the native JSONL format.
        #[arg(long)]
        out: Option<PathBuf>,
    },

    /// Generate a deterministic synthetic corpus.
    Gen {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1_000)]
        docs: usize,
        #[arg(long, default_value_t = 10)]
        refs_min: usize,
        #[arg(long, default_value_t = 50)]
        refs_max: usize,
        #[arg(long, default_value_t = 20_000)]
        pool: usize,
        /// Number of planted source/copy pairs.
        #[arg(long, default_value_t = 0)]
        planted: usize,
        /// References shared by each planted pair.
        #[arg(long, default_value_t = 5)]
        overlap: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },

    /// Hash every document and build the inverted index.
    Build {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, default_value_t = 2)]
        k: usize,
        #[arg(long, default_value_t = DEFAULT_MAX_REFS)]
        max_refs: usize,
        #[arg(long, value_enum, default_value = "sum")]
        mode: HashMode,
        #[arg(long)]
        out: PathBuf,
    },

    /// Query an index with one document record and print the match report.
    Query {
        #[arg(long)]
        index: PathBuf,
        /// JSONL file whose first record is the query document.
        #[arg(long)]
        query: PathBuf,
        #[arg(long, value_enum, default_value = "raw")]
        mode: QueryMode,
        #[arg(long, value_enum, default_value = "sum")]
        hash_mode: HashMode,
        /// Tolerate non-binomial intersection counts instead of flagging.
        #[arg(long)]
        tolerant: bool,
        #[arg(long)]
        json: bool,
    },

    /// Benchmark hash generation, index size, and query latency per k.
    Bench {
        #[arg(long)]
        corpus: PathBuf,
        /// Subset sizes, comma separated.
        #[arg(long, default_value = "1,2,3", value_delimiter = ',')]
        ks: Vec<usize>,
        /// Number of query documents for the latency median.
        #[arg(long, default_value_t = 100)]
        queries: usize,
        #[arg(long)]
        json: bool,
    },

    /// Run the detection service.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8391")]
        listen: std::net::SocketAddr,
        #[arg(long, default_value_t = 2)]
        k: usize,
        #[arg(long, value_enum, default_value = "sum")]
        mode: HashMode,
        /// Index file to preload.
        #[arg(long)]
        index: Option<PathBuf>,
    },

    /// Preimage-attack cost estimates.
    Attack {
        /// Universe sizes (candidate reference counts), comma separated.
        #[arg(long, value_delimiter = ',')]
        n: Vec<u64>,
        #[arg(long, default_value = "1,2,3", value_delimiter = ',')]
        ks: Vec<u64>,
        #[arg(long, default_value_t = 1.0)]
        per_hash_ms: f64,
        /// With --budget-hours: print the smallest universe whose full
        /// enumeration exceeds the budget, for each k.
        #[arg(long)]
        budget_hours: Option<f64>,
        /// Reproduce the three dblp rows (n = 5.05e6, k = 1, 2, 3).
        #[arg(long)]
        dblp_preset: bool,
        #[arg(long)]
        csv: bool,
        #[arg(long)]
        json: bool,
    },

    /// Count combined-hash collisions over a corpus at a digest width.
    Collisions {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, default_value_t = 3)]
        k: usize,
        #[arg(long, default_value_t = DEFAULT_MAX_REFS)]
        max_refs: usize,
        /// Digest width in bits: 32 or 160.
        #[arg(long, default_value_t = 160)]
        width: u32,
    },
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("thread pool init")?;
    }
    match cli.command {
        Command::Ingest {
            input,
            format,
            k,
            max_refs,
            out,
        } => cmd_ingest(input, format, k, max_refs, out),
        Command::Gen {
            out,
            docs,
            refs_min,
            refs_max,
            pool,
            planted,
            overlap,
            seed,
        } => cmd_gen(out, docs, refs_min, refs_max, pool, planted, overlap, seed),
        Command::Build {
            corpus,
            k,
            max_refs,
            mode,
            out,
        } => cmd_build(corpus, k, max_refs, mode.into(), out),
        Command::Query {
            index,
            query,
            mode,
            hash_mode,
            tolerant,
            json,
        } => cmd_query(index, query, mode, hash_mode.into(), tolerant, json),
        Command::Bench {
            corpus,
            ks,
            queries,
            json,
        } => cmd_bench(corpus, ks, queries, json),
        Command::Serve {
            listen,
            k,
            mode,
            index,
        } => cmd_serve(listen, k, mode.into(), index),
        Command::Attack {
            n,
            ks,
            per_hash_ms,
            budget_hours,
            dblp_preset,
            csv,
            json,
        } => cmd_attack(n, ks, per_hash_ms, budget_hours, dblp_preset, csv, json),
        Command::Collisions {
            corpus,
            k,
            max_refs,
            width,
        } => cmd_collisions(corpus, k, max_refs, width),
    }
}

fn cmd_ingest(
    input: PathBuf,
    format: InputFormat,
    k: usize,
    max_refs: usize,
    out: Option<PathBuf>,
) -> Result<()> {
    let records: Vec<RawRecord> = match format {
        InputFormat::Tei => {
            let (records, skipped) =
                tei::convert_dir(&input).with_context(|| format!("reading {input:?}"))?;
            if skipped > 0 {
                eprintln!("warning: skipped {skipped} bibliography entries without a title");
            }
            records
        }
        InputFormat::Jsonl => {
            let text = std::fs::read_to_string(&input)
                .with_context(|| format!("reading {input:?}"))?;
            text.lines()
                .filter(|l| !l.trim().is_empty())
                .map(|l| serde_json::from_str(l).map_err(anyhow::Error::from))
                .collect::<Result<_>>()?
        }
    };

    let mut jsonl = Vec::new();
    write_records(&records, &mut jsonl)?;
    let (_, stats) =
        pbc_core::ingest::load_corpus_from_reader(jsonl.as_slice(), k, max_refs)?;
    if let Some(out) = out {
        std::fs::write(&out, &jsonl).with_context(|| format!("writing {out:?}"))?;
    }
    println!("documents loaded:   {}", stats.n_docs_loaded);
    println!("documents excluded: {}", stats.n_docs_excluded);
    println!("unique references:  {}", stats.n_unique_refs);
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_gen(
    out: PathBuf,
    docs: usize,
    refs_min: usize,
    refs_max: usize,
    pool: usize,
    planted: usize,
    overlap: usize,
    seed: u64,
) -> Result<()> {
    let cfg = GenConfig {
        n_docs: docs,
        refs_min,
        refs_max,
        pool_size: pool,
        planted_pairs: planted,
        planted_overlap: overlap,
        seed,
    };
    let records = generate(&cfg)?;
    let file = std::fs::File::create(&out).with_context(|| format!("writing {out:?}"))?;
    let mut w = std::io::BufWriter::new(file);
    write_records(&records, &mut w)?;
    w.flush()?;
    eprintln!("wrote {} documents to {}", records.len(), out.display());
    Ok(())
}

fn cmd_build(
    corpus_path: PathBuf,
    k: usize,
    max_refs: usize,
    mode: CombineMode,
    out: PathBuf,
) -> Result<()> {
    let (corpus, stats) = load_corpus(&corpus_path, k, max_refs)
        .with_context(|| format!("loading {corpus_path:?}"))?;
    if corpus.documents.is_empty() {
        eprintln!(
            "warning: no document is eligible for k={k} (excluded {})",
            stats.n_docs_excluded
        );
    }
    let index = InvertedIndex::build(&corpus, k, mode)?;
    let bytes = index.persist(&out)?;
    print!("{}", index.stats_text(Some(bytes)));
    Ok(())
}

fn read_query_doc(path: &PathBuf) -> Result<pbc_core::refmodel::Document> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {path:?}"))?;
    let line = text
        .lines()
        .find(|l| !l.trim().is_empty())
        .context("query file is empty")?;
    let record: RawRecord = serde_json::from_str(line)?;
    Ok(pbc_core::ingest::parse_document(record, 1)?)
}

/// The full query pipeline against a loaded index; shared with `bench`.
fn run_query(
    index: &InvertedIndex,
    query: &DocHashSet,
    mode: QueryMode,
    recovery: RecoveryMode,
) -> Result<Vec<PairResult>> {
    let per_doc = index.intersect(query)?;
    let ranked = rank_candidates(query, &per_doc, recovery);
    match mode {
        QueryMode::Raw => Ok(ranked),
        QueryMode::PairExclusive => {
            // Re-count each candidate using only hashes that occur in no
            // document outside the pair, then re-rank.
            let postings = index.posting_lists(&query.hashes);
            let filtered: Vec<(String, u64, u64)> = ranked
                .iter()
                .map(|r| {
                    let lists: Vec<Vec<String>> = postings
                        .iter()
                        .filter(|list| list.iter().any(|d| d == &r.doc_id_b))
                        .cloned()
                        .collect();
                    let count = pair_exclusive_count(&lists, &r.doc_id_a, &r.doc_id_b);
                    let size = index.doc_size(&r.doc_id_b).unwrap_or(0);
                    (r.doc_id_b.clone(), count, size)
                })
                .collect();
            Ok(rank_candidates(query, &filtered, recovery))
        }
    }
}

fn cmd_query(
    index_path: PathBuf,
    query_path: PathBuf,
    mode: QueryMode,
    hash_mode: CombineMode,
    tolerant: bool,
    json: bool,
) -> Result<()> {
    let index = InvertedIndex::load(&index_path)
        .with_context(|| format!("loading {index_path:?}"))?;
    let doc = read_query_doc(&query_path)?;
    let query = hash_document(&doc, index.k(), hash_mode)?;
    if hash_mode.hash_fn_id() != index.hash_fn_id() {
        bail!(
            "index was built with hash_fn_id {:?}, query uses {:?}",
            index.hash_fn_id(),
            hash_mode.hash_fn_id()
        );
    }
    let recovery = if tolerant {
        RecoveryMode::Tolerant
    } else {
        RecoveryMode::Strict
    };
    let results = run_query(&index, &query, mode, recovery)?;
    let stdout = std::io::stdout();
    let mut w = stdout.lock();
    write_match_report(&results, json, &mut w)?;
    Ok(())
}

#[derive(serde::Serialize)]
struct BenchReport {
    k: usize,
    n_docs: usize,
    n_hashes: u64,
    gen_seconds: f64,
    index_bytes: u64,
    query_millis_median: f64,
}

fn cmd_bench(corpus_path: PathBuf, ks: Vec<usize>, queries: usize, json: bool) -> Result<()> {
    let mut reports = Vec::new();
    for &k in &ks {
        let (corpus, _) = load_corpus(&corpus_path, k, DEFAULT_MAX_REFS)?;
        let start = Instant::now();
        let index = InvertedIndex::build(&corpus, k, CombineMode::ModularSum)?;
        let gen_seconds = start.elapsed().as_secs_f64();

        let tmp = tempfile_path(&corpus_path, k);
        let index_bytes = index.persist(&tmp)?;
        let _ = std::fs::remove_file(&tmp);

        let n_queries = queries.min(corpus.documents.len()).max(1);
        let mut millis: Vec<f64> = Vec::with_capacity(n_queries);
        let mut sink = Vec::new();
        for doc in corpus.documents.iter().take(n_queries) {
            let query = hash_document(doc, k, CombineMode::ModularSum)?;
            let t = Instant::now();
            let results = run_query(&index, &query, QueryMode::Raw, RecoveryMode::Strict)?;
            sink.clear();
            write_match_report(&results, false, &mut sink)?;
            millis.push(t.elapsed().as_secs_f64() * 1e3);
        }
        millis.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let median = millis[millis.len() / 2];

        reports.push(BenchReport {
            k,
            n_docs: corpus.documents.len(),
            n_hashes: index.n_postings(),
            gen_seconds,
            index_bytes,
            query_millis_median: median,
        });
    }

    if json {
        println!("{}", serde_json::to_string_pretty(&reports)?);
    } else {
        println!(
            "{:>3} {:>8} {:>14} {:>12} {:>14} {:>16}",
            "k", "docs", "hashes", "gen (s)", "index (bytes)", "query med (ms)"
        );
        for r in &reports {
            println!(
                "{:>3} {:>8} {:>14} {:>12.3} {:>14} {:>16.3}",
                r.k, r.n_docs, r.n_hashes, r.gen_seconds, r.index_bytes, r.query_millis_median
            );
        }
    }
    Ok(())
}

fn tempfile_path(base: &std::path::Path, k: usize) -> PathBuf {
    let mut p = base.to_path_buf();
    p.set_extension(format!("bench.k{k}.idx.tmp"));
    p
}

fn cmd_serve(
    listen: std::net::SocketAddr,
    k: usize,
    mode: CombineMode,
    index_path: Option<PathBuf>,
) -> Result<()> {
    let index = match index_path {
        Some(p) => {
            let idx = InvertedIndex::load(&p).with_context(|| format!("loading {p:?}"))?;
            if idx.k() != k {
                bail!("index at {p:?} was built for k={}, not k={k}", idx.k());
            }
            idx
        }
        None => InvertedIndex::new(k, mode.hash_fn_id()),
    };
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(pbc_service::serve(index, listen))?;
    Ok(())
}

fn cmd_attack(
    n: Vec<u64>,
    ks: Vec<u64>,
    per_hash_ms: f64,
    budget_hours: Option<f64>,
    dblp_preset: bool,
    csv: bool,
    json: bool,
) -> Result<()> {
    let per_hash_seconds = per_hash_ms / 1e3;

    if let Some(hours) = budget_hours {
        let budget = hours * attackcost::SECONDS_PER_HOUR;
        for &k in &ks {
            let n = attackcost::min_universe_for_budget(k, per_hash_seconds, budget)?;
            println!("k={k}: enumeration exceeds {hours} h for universes of {n} or more references");
        }
        return Ok(());
    }

    let n_values = if dblp_preset { vec![5_050_000u64] } else { n };
    if n_values.is_empty() {
        bail!("provide --n, --dblp-preset, or --budget-hours");
    }
    let rows = attackcost::sweep(&ks, &n_values, per_hash_seconds)?;

    if json {
        println!("{}", serde_json::to_string_pretty(&rows)?);
    } else if csv {
        println!("n_refs,k,per_hash_seconds,n_hashes,runtime_seconds,runtime_human");
        for r in &rows {
            println!(
                "{},{},{},{},{:e},{}",
                r.n_refs, r.k, r.per_hash_seconds, r.n_hashes, r.runtime_seconds, r.runtime_human
            );
        }
    } else {
        println!(
            "{:>12} {:>3} {:>24} {:>16} {:>18}",
            "n_refs", "k", "hashes", "runtime (s)", "runtime"
        );
        for r in &rows {
            println!(
                "{:>12} {:>3} {:>24} {:>16.3e} {:>18}",
                r.n_refs, r.k, r.n_hashes.to_string(), r.runtime_seconds, r.runtime_human
            );
        }
    }
    Ok(())
}

fn cmd_collisions(corpus_path: PathBuf, k: usize, max_refs: usize, width: u32) -> Result<()> {
    let width = match width {
        32 => DigestWidth::Bits32,
        160 => DigestWidth::Bits160,
        other => bail!("unsupported digest width {other}; use 32 or 160"),
    };
    let (corpus, _) = load_corpus(&corpus_path, k, max_refs)?;
    let collisions = count_collisions(&corpus, k, width)?;
    println!("{collisions}");
    Ok(())
}
