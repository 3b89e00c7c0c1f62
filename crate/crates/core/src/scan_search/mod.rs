//! Unindexed retrieval: raw-line substring search, full-row field scans and
//! chunked column scans.

mod boyer_moore;
mod scan;

pub use boyer_moore::{bm_find, Matcher};
pub use scan::{
    chunked_scan, chunked_scan_with, field_scan, line_scan, line_scan_exact, ChunkStats,
    LineScanMode, MatchResult, ScanOutcome, Strategy,
};

pub(crate) use scan::{FieldCheck, KeyTest};
