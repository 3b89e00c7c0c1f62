use std::io::{BufWriter, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use tempfile::NamedTempFile;

use super::format::{key_hash, IndexHeader, IndexKind, HEADER_LEN, VERSION};
use super::sort::{ExternalSorter, DEFAULT_MEMORY_BUDGET};
use crate::csv_engine::{parse_into, project_field, FieldBuf, LineReader};
use crate::error::{Error, Result};
use crate::model::{fingerprint_dataset, DatasetDescriptor, KeyKind};

#[derive(Debug, Clone, Copy)]
pub struct BuildOptions {
    /// In-memory budget for key sorting before spilling runs to disk.
    pub memory_budget: usize,
    /// Hash applied to normalized key bytes. Anything but [`key_hash`]
    /// produces files other implementations cannot read; tests use it to
    /// force collisions.
    pub hasher: fn(&[u8]) -> u64,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions {
            memory_budget: DEFAULT_MEMORY_BUDGET,
            hasher: key_hash,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BuildReport {
    pub path: PathBuf,
    pub kind: IndexKind,
    pub entries: u64,
    pub rows_scanned: u64,
    pub malformed_rows: u64,
    /// Rows without a usable key (empty after normalization, or not an
    /// integer under the integer kind, or too few columns).
    pub skipped_rows: u64,
}

fn temp_beside(out: &Path) -> Result<NamedTempFile> {
    let dir = match out.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    Ok(NamedTempFile::new_in(dir)?)
}

fn publish(tmp: NamedTempFile, out: &Path) -> Result<()> {
    tmp.as_file().sync_all()?;
    tmp.persist(out).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

/// One pass over the corpus recording the byte offset of every data row.
///
/// Malformed rows keep their entry so that entry `k` is always data row
/// `k + 1`; they are counted in the report.
pub fn build_row_offset_index(dataset: &DatasetDescriptor, out: &Path) -> Result<BuildReport> {
    let fingerprint = fingerprint_dataset(&dataset.path)?;
    let dialect = &dataset.dialect;
    let mut reader = LineReader::open(&dataset.path, dialect)?;
    let mut w = BufWriter::with_capacity(1 << 20, temp_beside(out)?);
    w.write_all(&[0u8; HEADER_LEN])?;

    let mut entries = 0u64;
    let mut malformed = 0u64;
    let mut fields = FieldBuf::new();
    while let Some(line) = reader.next_line()? {
        if line.row_number == 0 {
            continue;
        }
        w.write_all(&line.byte_offset.to_le_bytes())?;
        entries += 1;
        if memchr::memchr(dialect.quote, line.bytes).is_some()
            && parse_into(line.bytes, dialect, &mut fields).is_err()
        {
            malformed += 1;
        }
    }

    let header = IndexHeader {
        version: VERSION,
        kind: IndexKind::RowOffset,
        key_kind: None,
        column: 0,
        entry_count: entries,
        fingerprint,
    };
    let mut tmp = w.into_inner().map_err(|e| e.into_error())?;
    tmp.seek(SeekFrom::Start(0))?;
    tmp.write_all(&header.encode())?;
    publish(tmp, out)?;

    Ok(BuildReport {
        path: out.to_path_buf(),
        kind: IndexKind::RowOffset,
        entries,
        rows_scanned: entries,
        malformed_rows: malformed,
        skipped_rows: 0,
    })
}

/// One scan collecting `(hash(normalized key), offset)` for every row with a
/// usable key in `column`, then a budgeted sort and an atomic write.
pub fn build_key_index(
    dataset: &DatasetDescriptor,
    column: usize,
    key_kind: KeyKind,
    out: &Path,
    options: &BuildOptions,
) -> Result<BuildReport> {
    let column_code = u16::try_from(column)
        .map_err(|_| Error::InvalidArgument(format!("column {column} exceeds the format limit")))?;
    if column >= dataset.column_count {
        return Err(Error::InvalidArgument(format!(
            "column {column} out of range, dataset has {} columns",
            dataset.column_count
        )));
    }
    let fingerprint = fingerprint_dataset(&dataset.path)?;
    let dialect = &dataset.dialect;
    let spill_dir = out
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let mut sorter = ExternalSorter::new(options.memory_budget, spill_dir);
    let mut reader = LineReader::open(&dataset.path, dialect)?;
    let mut scratch = FieldBuf::new();
    let (mut rows, mut malformed, mut skipped) = (0u64, 0u64, 0u64);

    while let Some(line) = reader.next_line()? {
        if line.row_number == 0 {
            continue;
        }
        rows += 1;
        let field = match project_field(line.bytes, dialect, column, &mut scratch) {
            Ok(Some(f)) => f,
            Ok(None) => {
                skipped += 1;
                continue;
            }
            Err(_) => {
                malformed += 1;
                continue;
            }
        };
        match key_kind.normalize_bytes(&field) {
            Some(key) if !key.is_empty() => {
                sorter.push(((options.hasher)(key.value.as_bytes()), line.byte_offset))?;
            }
            _ => skipped += 1,
        }
    }

    let header = IndexHeader {
        version: VERSION,
        kind: IndexKind::Key,
        key_kind: Some(key_kind),
        column: column_code,
        entry_count: sorter.len(),
        fingerprint,
    };
    let entries = sorter.len();
    let mut w = BufWriter::with_capacity(1 << 20, temp_beside(out)?);
    w.write_all(&header.encode())?;
    sorter.finish(&mut w)?;
    let tmp = w.into_inner().map_err(|e| e.into_error())?;
    publish(tmp, out)?;

    Ok(BuildReport {
        path: out.to_path_buf(),
        kind: IndexKind::Key,
        entries,
        rows_scanned: rows,
        malformed_rows: malformed,
        skipped_rows: skipped,
    })
}
