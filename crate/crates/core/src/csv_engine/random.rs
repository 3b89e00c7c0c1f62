use std::fs::File;
use std::io;
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};

use super::parse::{parse_into, FieldBuf};
use crate::error::{Error, Result};
use crate::model::{CsvDialect, RawRecord};

const READ_BLOCK: usize = 4096;

#[cfg(unix)]
pub(crate) fn read_at(file: &File, buf: &mut [u8], offset: u64) -> io::Result<usize> {
    std::os::unix::fs::FileExt::read_at(file, buf, offset)
}

#[cfg(windows)]
pub(crate) fn read_at(file: &File, buf: &mut [u8], offset: u64) -> io::Result<usize> {
    std::os::windows::fs::FileExt::seek_read(file, buf, offset)
}

pub(crate) fn read_exact_at(file: &File, mut buf: &mut [u8], mut offset: u64) -> io::Result<()> {
    while !buf.is_empty() {
        match read_at(file, buf, offset) {
            Ok(0) => return Err(io::ErrorKind::UnexpectedEof.into()),
            Ok(n) => {
                buf = &mut buf[n..];
                offset += n as u64;
            }
            Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e),
        }
    }
    Ok(())
}

/// Offset-addressed access to single records of a corpus. Every call to
/// [`RecordReader::read_line_at`] counts as one record read.
#[derive(Debug)]
pub struct RecordReader {
    file: File,
    size: u64,
    dialect: CsvDialect,
    record_reads: AtomicU64,
    bytes_read: AtomicU64,
}

impl RecordReader {
    pub fn open(path: &Path, dialect: &CsvDialect) -> Result<Self> {
        let file = File::open(path)?;
        let size = file.metadata()?.len();
        Ok(RecordReader {
            file,
            size,
            dialect: *dialect,
            record_reads: AtomicU64::new(0),
            bytes_read: AtomicU64::new(0),
        })
    }

    pub fn dialect(&self) -> &CsvDialect {
        &self.dialect
    }

    pub fn size(&self) -> u64 {
        self.size
    }

    pub fn record_reads(&self) -> u64 {
        self.record_reads.load(Ordering::Relaxed)
    }

    pub fn bytes_read(&self) -> u64 {
        self.bytes_read.load(Ordering::Relaxed)
    }

    /// Returns the line starting at `offset`, without its terminator.
    pub fn read_line_at(&self, offset: u64) -> Result<Vec<u8>> {
        if offset >= self.size {
            return Err(Error::OffsetBeyondEof {
                offset,
                size: self.size,
            });
        }
        self.record_reads.fetch_add(1, Ordering::Relaxed);
        let mut line = Vec::new();
        let mut block = [0u8; READ_BLOCK];
        let mut pos = offset;
        loop {
            let want = (self.size - pos).min(READ_BLOCK as u64) as usize;
            if want == 0 {
                break;
            }
            let n = read_at(&self.file, &mut block[..want], pos)?;
            if n == 0 {
                break;
            }
            self.bytes_read.fetch_add(n as u64, Ordering::Relaxed);
            if let Some(i) = memchr::memchr(b'\n', &block[..n]) {
                line.extend_from_slice(&block[..i]);
                if line.last() == Some(&b'\r') {
                    line.pop();
                }
                return Ok(line);
            }
            line.extend_from_slice(&block[..n]);
            pos += n as u64;
        }
        Ok(line)
    }

    /// Parses the record at `offset`. The returned row number is 0: an
    /// offset alone does not determine the ordinal.
    pub fn record_at(&self, offset: u64) -> Result<RawRecord> {
        let line = self.read_line_at(offset)?;
        let mut buf = FieldBuf::new();
        parse_into(&line, &self.dialect, &mut buf).map_err(|d| d.at(offset))?;
        Ok(RawRecord {
            row_number: 0,
            byte_offset: offset,
            fields: buf.to_strings(),
        })
    }
}

/// Reads and parses exactly one record starting at `byte_offset`.
pub fn row_at_offset(path: &Path, byte_offset: u64, dialect: &CsvDialect) -> Result<RawRecord> {
    RecordReader::open(path, dialect)?.record_at(byte_offset)
}
