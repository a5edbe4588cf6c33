//! Privacy-preserving bibliographic coupling (PBC).
//!
//! Bibliographic coupling scores two documents by the references they share.
//! This crate computes that score without exposing cleartext references:
//! each document discloses only the hashes of the k-combinations of its
//! normalized references, and similarity is computed by intersecting hash
//! sets. The inverse-binomial recovery turns hash-overlap counts back into
//! reference-overlap counts, so the private score equals the cleartext score
//! exactly whenever no digest collision occurred.
//!
//! Pipeline: [`ingest`] parses reference lists into [`refmodel::Document`]s,
//! [`psihash`] enumerates k-subsets and produces masked hash sets,
//! [`indexstore`] holds the corpus-side inverted index, and [`similarity`]
//! ranks candidate sources. [`attackcost`] models the cost of a preimage
//! attack against the disclosed hashes.

pub mod attackcost;
pub mod binomial;
pub mod error;
pub mod indexstore;
pub mod ingest;
pub mod psihash;
pub mod refmodel;
pub mod similarity;
pub mod synth;
pub mod tei;

pub use error::Error;

pub type Result<T> = std::result::Result<T, Error>;
