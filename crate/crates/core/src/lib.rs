//! Retrieval of individual records from very large CSV credential dumps.
//!
//! The crate implements the usual ways of finding one row in a multi-GB
//! delimited file and measures them against each other:
//!
//! * raw-line substring search (Boyer–Moore, grep style),
//! * full-row field scans with optional early exit,
//! * chunked scans that project a single column,
//! * persistent row-offset and key-hash indexes.
//!
//! [`datagen`] writes reproducible synthetic corpora with probe rows planted
//! at the quartiles, [`bench`] times every strategy on those probes and
//! [`estimator`] extrapolates sample measurements to full-size corpora.
//!
//! ```no_run
//! use brix::planner::{execute, Query};
//! use brix::index_store::IndexSet;
//! use brix::{normalize_email, CsvDialect, DatasetDescriptor};
//!
//! let corpus = DatasetDescriptor::open("dump.csv", CsvDialect::default())?;
//! let query = Query::by_key(5, normalize_email("Someone@Example.com"));
//! let result = execute(&query, &corpus, &IndexSet::empty())?;
//! for record in result.records() {
//!     println!("{}: {:?}", record.row_number, record.fields);
//! }
//! # Ok::<(), brix::Error>(())
//! ```

pub mod bench;
pub mod csv_engine;
pub mod datagen;
mod error;
pub mod estimator;
pub mod index_store;
mod model;
pub mod planner;
pub mod scan_search;

pub use error::{Error, Result};
pub use model::{
    fingerprint_dataset, normalize_email, normalize_integer, normalize_phone, parse_u64,
    CsvDialect, DatasetDescriptor, Encoding, EscapeMode, Fingerprint, KeyKind, NormalizedKey,
    RawRecord, FINGERPRINT_HEAD_BYTES,
};
pub use scan_search::Strategy;
