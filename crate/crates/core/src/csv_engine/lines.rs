use std::fs::File;
use std::io::{self, Read};
use std::path::Path;

use crate::error::Result;
use crate::model::CsvDialect;

const DEFAULT_BUFFER: usize = 1 << 20;

/// One physical line with its position in the file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Line {
    /// 0 for the header line, 1.. for data rows.
    pub row_number: u64,
    pub byte_offset: u64,
    /// Line content without its terminator.
    pub bytes: Vec<u8>,
    /// 0 (last line, no newline), 1 (LF) or 2 (CRLF).
    pub terminator_len: u8,
}

impl Line {
    pub fn is_header(&self) -> bool {
        self.row_number == 0
    }

    pub fn total_len(&self) -> u64 {
        self.bytes.len() as u64 + u64::from(self.terminator_len)
    }
}

/// Borrowed view of a line inside a [`LineReader`]'s buffer.
#[derive(Debug, Clone, Copy)]
pub struct LineRef<'a> {
    pub row_number: u64,
    pub byte_offset: u64,
    pub bytes: &'a [u8],
    pub terminator_len: u8,
}

impl LineRef<'_> {
    pub fn total_len(&self) -> u64 {
        self.bytes.len() as u64 + u64::from(self.terminator_len)
    }

    pub fn to_owned_line(&self) -> Line {
        Line {
            row_number: self.row_number,
            byte_offset: self.byte_offset,
            bytes: self.bytes.to_vec(),
            terminator_len: self.terminator_len,
        }
    }
}

/// Zero-copy line framer over any reader. Lines are handed out as slices of
/// an internal buffer that grows only when a single line outgrows it.
pub struct LineReader<R> {
    inner: R,
    buf: Vec<u8>,
    start: usize,
    end: usize,
    eof: bool,
    /// File offset of `buf[start]`.
    offset: u64,
    next_row: u64,
}

impl LineReader<File> {
    pub fn open(path: &Path, dialect: &CsvDialect) -> Result<Self> {
        Ok(LineReader::new(File::open(path)?, dialect.has_header))
    }
}

impl<R: Read> LineReader<R> {
    pub fn new(inner: R, has_header: bool) -> Self {
        Self::with_capacity(inner, has_header, DEFAULT_BUFFER)
    }

    pub fn with_capacity(inner: R, has_header: bool, capacity: usize) -> Self {
        LineReader {
            inner,
            buf: vec![0; capacity.max(16)],
            start: 0,
            end: 0,
            eof: false,
            offset: 0,
            next_row: if has_header { 0 } else { 1 },
        }
    }

    /// Bytes handed out so far, terminators included.
    pub fn bytes_consumed(&self) -> u64 {
        self.offset
    }

    pub fn next_line(&mut self) -> io::Result<Option<LineRef<'_>>> {
        let mut searched = self.start;
        let newline = loop {
            if let Some(i) = memchr::memchr(b'\n', &self.buf[searched..self.end]) {
                break Some(searched + i);
            }
            if self.eof {
                break None;
            }
            searched = self.end;
            let shift = self.start;
            self.fill()?;
            searched -= shift;
        };

        let (content_end, next_start, mut terminator_len) = match newline {
            Some(nl) => (nl, nl + 1, 1u8),
            None if self.start == self.end => return Ok(None),
            None => (self.end, self.end, 0u8),
        };
        let mut content_end = content_end;
        if terminator_len == 1 && content_end > self.start && self.buf[content_end - 1] == b'\r' {
            content_end -= 1;
            terminator_len = 2;
        }

        let line = LineRef {
            row_number: self.next_row,
            byte_offset: self.offset,
            bytes: &self.buf[self.start..content_end],
            terminator_len,
        };
        self.offset += (next_start - self.start) as u64;
        self.start = next_start;
        self.next_row += 1;
        Ok(Some(line))
    }

    /// Compacts the unread tail to the front and reads more input.
    fn fill(&mut self) -> io::Result<()> {
        if self.start > 0 {
            self.buf.copy_within(self.start..self.end, 0);
            self.end -= self.start;
            self.start = 0;
        }
        if self.end == self.buf.len() {
            let grown = self.buf.len() * 2;
            self.buf.resize(grown, 0);
        }
        loop {
            match self.inner.read(&mut self.buf[self.end..]) {
                Ok(0) => {
                    self.eof = true;
                    return Ok(());
                }
                Ok(n) => {
                    self.end += n;
                    return Ok(());
                }
                Err(e) if e.kind() == io::ErrorKind::Interrupted => continue,
                Err(e) => return Err(e),
            }
        }
    }
}

/// Owning iterator over every physical line of a file, header included.
pub struct Lines {
    reader: LineReader<File>,
    failed: bool,
}

impl Iterator for Lines {
    type Item = Result<Line>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.failed {
            return None;
        }
        match self.reader.next_line() {
            Ok(line) => line.map(|l| Ok(l.to_owned_line())),
            Err(e) => {
                self.failed = true;
                Some(Err(e.into()))
            }
        }
    }
}

/// Streams `(row_number, byte_offset, line_bytes)` for every line of `path`.
/// An I/O error ends the stream after being yielded once.
pub fn scan_lines(path: &Path, dialect: &CsvDialect) -> Result<Lines> {
    Ok(Lines {
        reader: LineReader::open(path, dialect)?,
        failed: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn collect(data: &[u8], has_header: bool, cap: usize) -> Vec<Line> {
        let mut r = LineReader::with_capacity(data, has_header, cap);
        let mut out = Vec::new();
        while let Some(l) = r.next_line().unwrap() {
            out.push(l.to_owned_line());
        }
        out
    }

    #[test]
    fn offsets_of_single_byte_lines() {
        let lines = collect(b"a\nb\nc\n", false, 64);
        let offsets: Vec<u64> = lines.iter().map(|l| l.byte_offset).collect();
        assert_eq!(offsets, [0, 2, 4]);
        assert_eq!(lines[2].row_number, 3);
    }

    #[test]
    fn empty_input_yields_nothing() {
        assert!(collect(b"", false, 64).is_empty());
    }

    #[test]
    fn missing_trailing_newline() {
        let lines = collect(b"a\nb", false, 64);
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[1].byte_offset, 2);
        assert_eq!(lines[1].bytes, b"b");
        assert_eq!(lines[1].terminator_len, 0);
    }

    #[test]
    fn crlf_terminators_are_measured() {
        let lines = collect(b"h\r\nab\r\nc\n", true, 64);
        assert_eq!(lines[0].row_number, 0);
        assert_eq!(lines[1].bytes, b"ab");
        assert_eq!(lines[1].terminator_len, 2);
        assert_eq!(lines[1].byte_offset, 3);
        assert_eq!(lines[2].byte_offset, 7);
    }

    #[test]
    fn lines_longer_than_the_buffer() {
        let long = vec![b'x'; 100];
        let mut data = long.clone();
        data.push(b'\n');
        data.extend_from_slice(b"y\n");
        let lines = collect(&data, false, 16);
        assert_eq!(lines[0].bytes, long);
        assert_eq!(lines[1].byte_offset, 101);
    }

    proptest! {
        #[test]
        fn lengths_sum_to_input_size(
            data in proptest::collection::vec(prop_oneof![Just(b'\n'), Just(b'\r'), Just(b'a'), Just(b',')], 0..200),
            cap in 16usize..64,
        ) {
            let lines = collect(&data, false, cap);
            let total: u64 = lines.iter().map(Line::total_len).sum();
            prop_assert_eq!(total, data.len() as u64);
            let mut expected = 0;
            for l in &lines {
                prop_assert_eq!(l.byte_offset, expected);
                expected += l.total_len();
            }
        }
    }
}
