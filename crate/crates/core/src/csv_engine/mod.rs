//! Streaming, bounded-memory CSV access.
//!
//! Records are framed by line: a quoted field may not contain a line break.
//! Such rows surface as [`Error::MalformedRow`](crate::Error::MalformedRow)
//! (the opening quote is left unbalanced on its line). Bulk operations skip
//! and count malformed rows, single-record operations return the error.

mod chunks;
mod lines;
mod parse;
mod random;

use std::fs::File;
use std::io::Read;
use std::path::Path;

pub use chunks::{read_chunks, BufferGauge, ChunkReader, RecordChunk};
pub use lines::{scan_lines, Line, LineReader, LineRef, Lines};
pub use parse::{format_row, parse_into, parse_row, project_field, FieldBuf, RowDefect};
pub use random::{row_at_offset, RecordReader};

pub(crate) use random::read_exact_at;

use crate::error::Result;
use crate::model::CsvDialect;

/// Counts data records, excluding the header line when the dialect has one.
pub fn count_rows(path: &Path, dialect: &CsvDialect) -> Result<u64> {
    let mut file = File::open(path)?;
    let mut buf = vec![0u8; 1 << 20];
    let mut lines = 0u64;
    let mut last = None;
    loop {
        let n = match file.read(&mut buf) {
            Ok(0) => break,
            Ok(n) => n,
            Err(e) if e.kind() == std::io::ErrorKind::Interrupted => continue,
            Err(e) => return Err(e.into()),
        };
        lines += memchr::memchr_iter(b'\n', &buf[..n]).count() as u64;
        last = Some(buf[n - 1]);
    }
    if last.is_some_and(|b| b != b'\n') {
        lines += 1;
    }
    Ok(if dialect.has_header {
        lines.saturating_sub(1)
    } else {
        lines
    })
}

/// Field count of the first line (header or first data row); 0 for an
/// empty file.
pub fn first_line_field_count(path: &Path, dialect: &CsvDialect) -> Result<usize> {
    let mut reader = LineReader::open(path, dialect)?;
    let Some(line) = reader.next_line()? else {
        return Ok(0);
    };
    let mut buf = FieldBuf::new();
    let offset = line.byte_offset;
    parse_into(line.bytes, dialect, &mut buf).map_err(|d| d.at(offset))?;
    Ok(buf.len())
}
