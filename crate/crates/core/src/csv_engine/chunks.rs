use std::borrow::Cow;
use std::fs::File;
use std::io::Read;
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use super::parse::{parse_into, project_field, project_unquoted, FieldBuf, RowDefect};
use crate::error::{Error, Result};
use crate::model::{CsvDialect, RawRecord};

/// Instrumented count of records (and their bytes) currently held by
/// chunks, with high-water marks. Shared between a reader and the chunks it
/// hands out; a chunk releases its share when dropped.
#[derive(Debug, Default)]
pub struct BufferGauge {
    records: AtomicU64,
    bytes: AtomicU64,
    peak_records: AtomicU64,
    peak_bytes: AtomicU64,
}

impl BufferGauge {
    pub fn current_records(&self) -> u64 {
        self.records.load(Ordering::Relaxed)
    }

    pub fn peak_records(&self) -> u64 {
        self.peak_records.load(Ordering::Relaxed)
    }

    pub fn peak_bytes(&self) -> u64 {
        self.peak_bytes.load(Ordering::Relaxed)
    }

    fn acquire(&self, records: u64, bytes: u64) {
        let r = self.records.fetch_add(records, Ordering::Relaxed) + records;
        let b = self.bytes.fetch_add(bytes, Ordering::Relaxed) + bytes;
        self.peak_records.fetch_max(r, Ordering::Relaxed);
        self.peak_bytes.fetch_max(b, Ordering::Relaxed);
    }

    fn release(&self, records: u64, bytes: u64) {
        self.records.fetch_sub(records, Ordering::Relaxed);
        self.bytes.fetch_sub(bytes, Ordering::Relaxed);
    }
}

#[derive(Debug)]
struct Lease {
    gauge: Arc<BufferGauge>,
    records: u64,
    bytes: u64,
}

impl Drop for Lease {
    fn drop(&mut self) {
        self.gauge.release(self.records, self.bytes);
    }
}

const READ_BLOCK: usize = 256 * 1024;

#[derive(Debug, Clone, Copy)]
struct Span {
    row_number: u64,
    byte_offset: u64,
    start: usize,
    end: usize,
}

#[derive(Debug, Clone, Copy)]
enum Cell {
    Field(usize, usize),
    Missing,
    Defect(RowDefect),
}

#[derive(Debug)]
struct ProjectedColumn {
    column: usize,
    bytes: Vec<u8>,
    cells: Vec<Cell>,
}

impl ProjectedColumn {
    fn push(&mut self, field: Option<&[u8]>) -> Cell {
        match field {
            Some(f) => {
                let start = self.bytes.len();
                self.bytes.extend_from_slice(f);
                Cell::Field(start, self.bytes.len())
            }
            None => Cell::Missing,
        }
    }
}

/// A batch of consecutive data rows, held as raw line bytes and decoded on
/// demand, either whole ([`RecordChunk::records`]) or one column at a time
/// ([`RecordChunk::project`]).
#[derive(Debug)]
pub struct RecordChunk {
    pub first_row_number: u64,
    /// Bytes of the file covered by this chunk, terminators included.
    pub bytes_spanned: u64,
    data: Vec<u8>,
    spans: Vec<Span>,
    /// Whether any line in the chunk contains a quote character.
    quoted: bool,
    column: Option<ProjectedColumn>,
    dialect: CsvDialect,
    _lease: Lease,
}

impl RecordChunk {
    pub fn len(&self) -> usize {
        self.spans.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spans.is_empty()
    }

    /// Raw bytes of the `i`th line in the chunk.
    pub fn line(&self, i: usize) -> &[u8] {
        let s = self.spans[i];
        &self.data[s.start..s.end]
    }

    pub fn row_number(&self, i: usize) -> u64 {
        self.spans[i].row_number
    }

    pub fn byte_offset(&self, i: usize) -> u64 {
        self.spans[i].byte_offset
    }

    pub fn record(&self, i: usize) -> Result<RawRecord> {
        let mut buf = FieldBuf::new();
        self.record_with(i, &mut buf)
    }

    fn record_with(&self, i: usize, buf: &mut FieldBuf) -> Result<RawRecord> {
        let span = self.spans[i];
        parse_into(self.line(i), &self.dialect, buf).map_err(|d| d.at(span.byte_offset))?;
        Ok(RawRecord {
            row_number: span.row_number,
            byte_offset: span.byte_offset,
            fields: buf.to_strings(),
        })
    }

    /// Fully parses every row. Malformed rows come through as errors.
    pub fn records(&self) -> impl Iterator<Item = Result<RawRecord>> + '_ {
        let mut buf = FieldBuf::new();
        (0..self.len()).map(move |i| self.record_with(i, &mut buf))
    }

    /// Extracts `column` from row `i` without decoding the other fields.
    pub fn project<'a>(
        &'a self,
        i: usize,
        column: usize,
        scratch: &mut FieldBuf,
    ) -> Result<Option<Cow<'a, [u8]>>, RowDefect> {
        if let Some(col) = self.column.as_ref().filter(|c| c.column == column) {
            return match col.cells[i] {
                Cell::Field(start, end) => Ok(Some(Cow::Borrowed(&col.bytes[start..end]))),
                Cell::Missing => Ok(None),
                Cell::Defect(defect) => Err(defect),
            };
        }
        if !self.quoted {
            return Ok(
                project_unquoted(self.line(i), self.dialect.delimiter, column).map(Cow::Borrowed),
            );
        }
        project_field(self.line(i), &self.dialect, column, scratch)
    }
}

/// Streams a file as [`RecordChunk`]s of at most `chunk_rows` data rows.
///
/// File blocks are read straight into the chunk's buffer and framed in
/// place; only the partial line at the end of a chunk is carried over.
pub struct ChunkReader {
    file: File,
    dialect: CsvDialect,
    chunk_rows: usize,
    limit: Option<u64>,
    gauge: Arc<BufferGauge>,
    done: bool,
    eof: bool,
    chunks_read: u64,
    /// Bytes read past the last framed line.
    carry: Vec<u8>,
    /// File offset of `carry[0]`.
    offset: u64,
    next_row: u64,
    capacity_hint: usize,
    block: usize,
    projection: Option<usize>,
}

impl ChunkReader {
    pub fn gauge(&self) -> Arc<BufferGauge> {
        Arc::clone(&self.gauge)
    }

    /// File bytes consumed so far, header included.
    pub fn bytes_consumed(&self) -> u64 {
        self.offset
    }

    pub fn chunks_read(&self) -> u64 {
        self.chunks_read
    }

    /// Stops after the line that crosses byte `limit`; used for sampling
    /// a prefix of the file at a line boundary.
    pub fn with_byte_limit(mut self, limit: u64) -> Self {
        self.limit = Some(limit);
        self
    }

    /// Extracts `column` of every row into a compact buffer while framing,
    /// so [`RecordChunk::project`] on that column is a slice lookup.
    pub fn with_projection(mut self, column: usize) -> Self {
        self.projection = Some(column);
        self
    }

    #[cfg(test)]
    fn with_block(mut self, block: usize) -> Self {
        self.block = block;
        self
    }

    fn read_block(&mut self, data: &mut Vec<u8>) -> Result<()> {
        let n = (&mut self.file).take(self.block as u64).read_to_end(data)?;
        if n == 0 {
            self.eof = true;
        }
        Ok(())
    }

    fn next_chunk(&mut self) -> Result<Option<RecordChunk>> {
        let mut data = std::mem::take(&mut self.carry);
        data.reserve(self.capacity_hint.saturating_sub(data.len()));
        let mut spans = Vec::with_capacity(self.chunk_rows.min(1 << 16));
        let mut bytes_spanned = 0u64;
        let mut pos = 0;
        let mut searched = 0;
        let quote = self.dialect.quote;
        let mut quoted = false;
        // Position of the first quote at or after the current line, valid
        // for `data[..quote_known_to]` (usize::MAX when there is none).
        let mut next_quote = usize::MAX;
        let mut quote_known_to = 0;
        let mut column = self.projection.map(|c| ProjectedColumn {
            column: c,
            bytes: Vec::new(),
            cells: Vec::with_capacity(self.chunk_rows.min(1 << 16)),
        });
        let mut scratch = FieldBuf::new();
        while spans.len() < self.chunk_rows {
            if self.limit.is_some_and(|l| self.offset >= l) {
                self.done = true;
                break;
            }
            let newline = loop {
                if let Some(i) = memchr::memchr(b'\n', &data[searched..]) {
                    break Some(searched + i);
                }
                if self.eof {
                    break None;
                }
                searched = data.len();
                self.read_block(&mut data)?;
            };
            let (mut content_end, next) = match newline {
                Some(nl) => (nl, nl + 1),
                None if pos == data.len() => {
                    self.done = true;
                    break;
                }
                None => (data.len(), data.len()),
            };
            if newline.is_some() && content_end > pos && data[content_end - 1] == b'\r' {
                content_end -= 1;
            }
            let len = (next - pos) as u64;
            if next_quote < pos {
                next_quote = memchr::memchr(quote, &data[pos..]).map_or(usize::MAX, |i| pos + i);
                quote_known_to = data.len();
            }
            if next_quote == usize::MAX && quote_known_to < content_end {
                next_quote = memchr::memchr(quote, &data[quote_known_to..])
                    .map_or(usize::MAX, |i| quote_known_to + i);
                quote_known_to = data.len();
            }
            let line_quoted = next_quote < content_end;
            if self.next_row != 0 {
                if let Some(col) = column.as_mut() {
                    let line = &data[pos..content_end];
                    let cell = if line_quoted {
                        match project_field(line, &self.dialect, col.column, &mut scratch) {
                            Ok(field) => col.push(field.as_deref()),
                            Err(defect) => Cell::Defect(defect),
                        }
                    } else {
                        col.push(project_unquoted(line, self.dialect.delimiter, col.column))
                    };
                    col.cells.push(cell);
                }
                quoted |= line_quoted;
                spans.push(Span {
                    row_number: self.next_row,
                    byte_offset: self.offset,
                    start: pos,
                    end: content_end,
                });
                bytes_spanned += len;
            }
            self.next_row += 1;
            self.offset += len;
            pos = next;
            searched = pos;
        }
        self.carry = data[pos..].to_vec();
        data.truncate(pos);
        if spans.is_empty() {
            return Ok(None);
        }
        self.capacity_hint = self.capacity_hint.max(data.len() + self.block);
        let records = spans.len() as u64;
        let held = (data.len() + column.as_ref().map_or(0, |c| c.bytes.len())) as u64;
        self.gauge.acquire(records, held);
        self.chunks_read += 1;
        Ok(Some(RecordChunk {
            first_row_number: spans[0].row_number,
            bytes_spanned,
            data,
            spans,
            quoted,
            column,
            dialect: self.dialect,
            _lease: Lease {
                gauge: Arc::clone(&self.gauge),
                records,
                bytes: held,
            },
        }))
    }
}

impl Iterator for ChunkReader {
    type Item = Result<RecordChunk>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        match self.next_chunk() {
            Ok(Some(chunk)) => Some(Ok(chunk)),
            Ok(None) => None,
            Err(e) => {
                self.done = true;
                Some(Err(e))
            }
        }
    }
}

/// Streams the data rows of `path` in chunks of `chunk_rows`.
pub fn read_chunks(path: &Path, dialect: &CsvDialect, chunk_rows: usize) -> Result<ChunkReader> {
    if chunk_rows == 0 {
        return Err(Error::InvalidArgument(
            "chunk_rows must be at least 1".into(),
        ));
    }
    Ok(ChunkReader {
        file: File::open(path)?,
        dialect: *dialect,
        chunk_rows,
        limit: None,
        gauge: Arc::default(),
        done: false,
        eof: false,
        chunks_read: 0,
        carry: Vec::new(),
        offset: 0,
        next_row: if dialect.has_header { 0 } else { 1 },
        capacity_hint: 0,
        block: READ_BLOCK,
        projection: None,
    })
}
