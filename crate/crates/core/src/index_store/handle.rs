use std::fs::File;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};

use super::format::{key_hash, IndexHeader, IndexKind, HEADER_LEN, KEY_ENTRY_LEN, ROW_ENTRY_LEN};
use crate::csv_engine::{parse_into, read_exact_at, FieldBuf, RecordReader};
use crate::error::{Error, Result};
use crate::model::{fingerprint_dataset, DatasetDescriptor, KeyKind, NormalizedKey};
use crate::scan_search::{FieldCheck, KeyTest};

/// Validated, read-only view of an index file. Entries stay on disk and are
/// fetched with positional reads; each fetch counts as one index read.
#[derive(Debug)]
struct IndexFile {
    path: PathBuf,
    header: IndexHeader,
    file: File,
    reads: AtomicU64,
}

impl IndexFile {
    fn open(path: &Path, dataset: &DatasetDescriptor) -> Result<Self> {
        let file = File::open(path)?;
        let len = file.metadata()?.len();
        let mut head = vec![0u8; HEADER_LEN.min(len as usize)];
        read_exact_at(&file, &mut head, 0)?;
        let header = IndexHeader::decode(&head, path)?;
        if header.expected_file_len() != Some(len) {
            return Err(Error::CorruptIndex {
                path: path.to_path_buf(),
                reason: format!(
                    "{} entries declared but file is {len} bytes",
                    header.entry_count
                ),
            });
        }
        if header.fingerprint != fingerprint_dataset(&dataset.path)? {
            return Err(Error::StaleIndex {
                path: path.to_path_buf(),
            });
        }
        Ok(IndexFile {
            path: path.to_path_buf(),
            header,
            file,
            reads: AtomicU64::new(0),
        })
    }

    fn read_entry<const N: usize>(&self, i: u64) -> Result<[u8; N]> {
        let mut buf = [0u8; N];
        let pos = HEADER_LEN as u64 + i * N as u64;
        read_exact_at(&self.file, &mut buf, pos)?;
        self.reads.fetch_add(1, Ordering::Relaxed);
        Ok(buf)
    }

    fn read_all(&self) -> Result<Vec<u8>> {
        let len = self.header.entry_count * self.header.kind.entry_len();
        let mut buf = vec![0u8; len as usize];
        read_exact_at(&self.file, &mut buf, HEADER_LEN as u64)?;
        Ok(buf)
    }
}

/// Row ordinal → byte offset.
#[derive(Debug)]
pub struct RowOffsetIndex {
    inner: IndexFile,
}

impl RowOffsetIndex {
    pub fn load(path: &Path, dataset: &DatasetDescriptor) -> Result<Self> {
        match load_index(path, dataset)? {
            Index::RowOffset(i) => Ok(i),
            Index::Key(_) => Err(Error::WrongIndexKind(format!(
                "{} is a key index, expected a row-offset index",
                path.display()
            ))),
        }
    }

    pub fn path(&self) -> &Path {
        &self.inner.path
    }

    pub fn header(&self) -> &IndexHeader {
        &self.inner.header
    }

    pub fn entry_count(&self) -> u64 {
        self.inner.header.entry_count
    }

    pub fn index_reads(&self) -> u64 {
        self.inner.reads.load(Ordering::Relaxed)
    }

    fn offset_at(&self, i: u64) -> Result<u64> {
        Ok(u64::from_le_bytes(self.inner.read_entry::<8>(i)?))
    }

    /// Byte offset of data row `row_number` (1-based). One index read.
    pub fn lookup_row(&self, row_number: u64) -> Result<u64> {
        if row_number == 0 || row_number > self.entry_count() {
            return Err(Error::OutOfRange {
                row: row_number,
                count: self.entry_count(),
            });
        }
        self.offset_at(row_number - 1)
    }

    /// Inverse of [`RowOffsetIndex::lookup_row`] by binary search over the
    /// (strictly increasing) offsets.
    pub fn row_number_of(&self, byte_offset: u64) -> Result<Option<u64>> {
        let (mut lo, mut hi) = (0u64, self.entry_count());
        while lo < hi {
            let mid = lo + (hi - lo) / 2;
            let at = self.offset_at(mid)?;
            if at == byte_offset {
                return Ok(Some(mid + 1));
            }
            if at < byte_offset {
                lo = mid + 1;
            } else {
                hi = mid;
            }
        }
        Ok(None)
    }

    pub fn offsets(&self) -> Result<Vec<u64>> {
        Ok(self
            .inner
            .read_all()?
            .chunks_exact(ROW_ENTRY_LEN as usize)
            .map(|c| u64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }
}

/// Sorted `(hash, offset)` pairs over one normalized column.
#[derive(Debug)]
pub struct KeyIndex {
    inner: IndexFile,
    key_kind: KeyKind,
}

impl KeyIndex {
    pub fn load(path: &Path, dataset: &DatasetDescriptor) -> Result<Self> {
        match load_index(path, dataset)? {
            Index::Key(i) => Ok(i),
            Index::RowOffset(_) => Err(Error::WrongIndexKind(format!(
                "{} is a row-offset index, expected a key index",
                path.display()
            ))),
        }
    }

    pub fn path(&self) -> &Path {
        &self.inner.path
    }

    pub fn header(&self) -> &IndexHeader {
        &self.inner.header
    }

    pub fn key_kind(&self) -> KeyKind {
        self.key_kind
    }

    pub fn column(&self) -> usize {
        usize::from(self.inner.header.column)
    }

    pub fn entry_count(&self) -> u64 {
        self.inner.header.entry_count
    }

    pub fn index_reads(&self) -> u64 {
        self.inner.reads.load(Ordering::Relaxed)
    }

    fn entry_at(&self, i: u64) -> Result<(u64, u64)> {
        let raw = self.inner.read_entry::<16>(i)?;
        Ok((
            u64::from_le_bytes(raw[..8].try_into().unwrap()),
            u64::from_le_bytes(raw[8..].try_into().unwrap()),
        ))
    }

    pub fn entries(&self) -> Result<Vec<(u64, u64)>> {
        Ok(self
            .inner
            .read_all()?
            .chunks_exact(KEY_ENTRY_LEN as usize)
            .map(|c| {
                (
                    u64::from_le_bytes(c[..8].try_into().unwrap()),
                    u64::from_le_bytes(c[8..].try_into().unwrap()),
                )
            })
            .collect())
    }

    /// Offsets of the records whose normalized field equals `key`, ascending.
    /// Candidates sharing the key's hash are read back from `records` and
    /// compared, so hash collisions never leak into the result.
    pub fn lookup_key(&self, key: &NormalizedKey, records: &RecordReader) -> Result<Vec<u64>> {
        self.lookup_hashed(key, key_hash(key.value.as_bytes()), records)
    }

    /// [`KeyIndex::lookup_key`] with the hash supplied by the caller, for
    /// indexes built with a non-default hasher.
    pub fn lookup_hashed(
        &self,
        key: &NormalizedKey,
        hash: u64,
        records: &RecordReader,
    ) -> Result<Vec<u64>> {
        if key.kind != self.key_kind {
            return Err(Error::WrongIndexKind(format!(
                "{} key against a {} index",
                key.kind, self.key_kind
            )));
        }
        if key.is_empty() {
            return Ok(Vec::new());
        }
        let test = KeyTest::new(key)?;

        let n = self.entry_count();
        let (mut lo, mut hi) = (0u64, n);
        while lo < hi {
            let mid = lo + (hi - lo) / 2;
            if self.entry_at(mid)?.0 < hash {
                lo = mid + 1;
            } else {
                hi = mid;
            }
        }

        let mut found = Vec::new();
        let mut fields = FieldBuf::new();
        let column = self.column();
        for i in lo..n {
            let (h, offset) = self.entry_at(i)?;
            if h != hash {
                break;
            }
            let line = records.read_line_at(offset)?;
            parse_into(&line, records.dialect(), &mut fields).map_err(|d| d.at(offset))?;
            if fields
                .get(column)
                .is_some_and(|f| test.check(f) == FieldCheck::Match)
            {
                found.push(offset);
            }
        }
        Ok(found)
    }
}

#[derive(Debug)]
pub enum Index {
    RowOffset(RowOffsetIndex),
    Key(KeyIndex),
}

impl Index {
    pub fn header(&self) -> &IndexHeader {
        match self {
            Index::RowOffset(i) => i.header(),
            Index::Key(i) => i.header(),
        }
    }
}

/// Opens an index file, checking magic, version, length and that it was
/// built from the current contents of `dataset`.
pub fn load_index(path: &Path, dataset: &DatasetDescriptor) -> Result<Index> {
    let inner = IndexFile::open(path, dataset)?;
    Ok(match inner.header.kind {
        IndexKind::RowOffset => Index::RowOffset(RowOffsetIndex { inner }),
        IndexKind::Key => {
            let key_kind = inner.header.key_kind.expect("decode guarantees a key kind");
            Index::Key(KeyIndex { inner, key_kind })
        }
    })
}

/// Reads only the header of an index file, with no staleness check.
pub fn read_header(path: &Path) -> Result<IndexHeader> {
    let file = File::open(path)?;
    let len = file.metadata()?.len();
    let mut head = vec![0u8; HEADER_LEN.min(len as usize)];
    read_exact_at(&file, &mut head, 0)?;
    IndexHeader::decode(&head, path)
}
