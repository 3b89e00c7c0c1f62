//! Persistent on-disk indexes: a row-offset index for positional access and
//! sorted hash indexes over a normalized key column.
//!
//! Indexes are immutable once published (temp file + rename) and are tied
//! to the exact source file by its [`Fingerprint`](crate::Fingerprint). A
//! stale index is reported, never silently rebuilt.

mod build;
mod format;
mod handle;
mod sort;

use std::path::{Path, PathBuf};

pub use build::{build_key_index, build_row_offset_index, BuildOptions, BuildReport};
pub use format::{
    key_hash, IndexHeader, IndexKind, HEADER_LEN, KEY_ENTRY_LEN, MAGIC, ROW_ENTRY_LEN, VERSION,
};
pub use handle::{load_index, read_header, Index, KeyIndex, RowOffsetIndex};
pub use sort::{ExternalSorter, DEFAULT_MEMORY_BUDGET};

use crate::error::{Error, Result};
use crate::model::{DatasetDescriptor, KeyKind};

pub const INDEX_EXTENSION: &str = "brix";

/// Default index directory for a corpus: `<corpus>.brix.d`.
pub fn default_index_dir(corpus: &Path) -> PathBuf {
    let mut name = corpus.as_os_str().to_owned();
    name.push(".brix.d");
    PathBuf::from(name)
}

pub fn row_index_file(dir: &Path) -> PathBuf {
    dir.join("rows.brix")
}

pub fn key_index_file(dir: &Path, kind: KeyKind, column: usize) -> PathBuf {
    dir.join(format!("{kind}-c{column}.brix"))
}

/// Every index available for one corpus.
#[derive(Debug, Default)]
pub struct IndexSet {
    pub rows: Option<RowOffsetIndex>,
    pub keys: Vec<KeyIndex>,
}

impl IndexSet {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn key_index(&self, column: usize, kind: KeyKind) -> Option<&KeyIndex> {
        self.keys
            .iter()
            .find(|k| k.column() == column && k.key_kind() == kind)
    }

    /// Loads every `*.brix` file in `dir`. Files that fail validation are
    /// returned alongside instead of aborting the whole load, so callers
    /// can decide what a stale index means for them.
    pub fn open_dir(
        dir: &Path,
        dataset: &DatasetDescriptor,
    ) -> Result<(Self, Vec<(PathBuf, Error)>)> {
        let mut set = IndexSet::default();
        let mut problems = Vec::new();
        if !dir.is_dir() {
            return Ok((set, problems));
        }
        let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|e| e == INDEX_EXTENSION))
            .collect();
        paths.sort();
        for path in paths {
            match load_index(&path, dataset) {
                Ok(Index::RowOffset(i)) => set.rows = Some(i),
                Ok(Index::Key(i)) => set.keys.push(i),
                Err(e) => problems.push((path, e)),
            }
        }
        Ok((set, problems))
    }
}
