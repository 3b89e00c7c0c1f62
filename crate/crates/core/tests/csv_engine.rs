mod common;

use brix::csv_engine::{
    count_rows, format_row, parse_row, read_chunks, row_at_offset, scan_lines, RecordReader,
};
use brix::{CsvDialect, Error};
use common::{naive_rows, no_header, write};
use proptest::prelude::*;
use tempfile::TempDir;

fn offsets(path: &std::path::Path, dialect: &CsvDialect) -> Vec<u64> {
    scan_lines(path, dialect)
        .unwrap()
        .map(|l| l.unwrap().byte_offset)
        .collect()
}

#[test]
fn line_offsets() {
    let dir = TempDir::new().unwrap();
    let d = no_header();
    assert_eq!(offsets(&write(dir.path(), "a", "a\nb\nc\n"), &d), [0, 2, 4]);
    assert!(offsets(&write(dir.path(), "b", ""), &d).is_empty());
    assert_eq!(offsets(&write(dir.path(), "c", "a\nb"), &d), [0, 2]);
    assert_eq!(
        offsets(&write(dir.path(), "d", "a\r\nbb\r\nc"), &d),
        [0, 3, 7]
    );

    let lines: Vec<_> = scan_lines(&write(dir.path(), "e", "h\nx\ny\n"), &CsvDialect::default())
        .unwrap()
        .map(Result::unwrap)
        .collect();
    assert_eq!(
        lines.iter().map(|l| l.row_number).collect::<Vec<_>>(),
        [0, 1, 2]
    );
    assert!(lines[0].is_header());
}

#[test]
fn field_parsing() {
    let d = CsvDialect::default();
    assert_eq!(parse_row(b"a,b,c", &d).unwrap(), ["a", "b", "c"]);
    assert_eq!(parse_row(b"a,\"b,c\",d", &d).unwrap(), ["a", "b,c", "d"]);
    assert_eq!(parse_row(b"a,\"b\"\"c\"", &d).unwrap(), ["a", "b\"c"]);
    assert_eq!(parse_row(b"", &d).unwrap(), [""]);
    assert_eq!(parse_row(b",,", &d).unwrap(), ["", "", ""]);
    assert!(parse_row(b"a,\"open", &d).is_err());

    let tabs = CsvDialect {
        delimiter: b'\t',
        ..d
    };
    assert_eq!(parse_row(b"a\tb,c", &tabs).unwrap(), ["a", "b,c"]);
}

fn chunk_sizes(path: &std::path::Path, dialect: &CsvDialect, chunk_rows: usize) -> Vec<usize> {
    read_chunks(path, dialect, chunk_rows)
        .unwrap()
        .map(|c| c.unwrap().len())
        .collect()
}

#[test]
fn chunk_sizes_follow_chunk_rows() {
    let dir = TempDir::new().unwrap();
    let text: String = (0..10).map(|i| format!("r{i},x\n")).collect();
    let path = write(dir.path(), "ten", &text);
    let d = no_header();
    assert_eq!(chunk_sizes(&path, &d, 4), [4, 4, 2]);
    assert_eq!(chunk_sizes(&path, &d, 1), [1; 10]);
    assert_eq!(chunk_sizes(&path, &d, 10), [10]);
    assert_eq!(chunk_sizes(&path, &d, 1000), [10]);
    assert!(matches!(
        read_chunks(&path, &d, 0),
        Err(Error::InvalidArgument(_))
    ));
}

#[test]
fn chunks_concatenate_to_the_file() {
    let dir = TempDir::new().unwrap();
    let corpus = common::generated(dir.path(), 1000, 3, Vec::new());
    let expected = naive_rows(&corpus.path);
    for chunk_rows in [1, 7, 64, 999, 1000, 5000] {
        let mut got = Vec::new();
        for chunk in read_chunks(&corpus.path, &corpus.dialect, chunk_rows).unwrap() {
            let chunk = chunk.unwrap();
            assert!(chunk.len() <= chunk_rows);
            for i in 0..chunk.len() {
                got.push((
                    chunk.row_number(i),
                    chunk.byte_offset(i),
                    chunk.record(i).unwrap().fields,
                ));
            }
        }
        assert_eq!(got, expected, "chunk_rows {chunk_rows}");
    }
}

#[test]
fn row_counts() {
    let dir = TempDir::new().unwrap();
    let corpus = common::generated(dir.path(), 1000, 5, Vec::new());
    assert_eq!(count_rows(&corpus.path, &corpus.dialect).unwrap(), 1000);
    let empty = write(dir.path(), "empty", "");
    assert_eq!(count_rows(&empty, &CsvDialect::default()).unwrap(), 0);
    assert_eq!(count_rows(&empty, &no_header()).unwrap(), 0);
    let header_only = write(dir.path(), "h", "a,b,c\n");
    assert_eq!(count_rows(&header_only, &CsvDialect::default()).unwrap(), 0);
    assert_eq!(count_rows(&header_only, &no_header()).unwrap(), 1);
    let unterminated = write(dir.path(), "u", "h\n1\n2");
    assert_eq!(
        count_rows(&unterminated, &CsvDialect::default()).unwrap(),
        2
    );
}

#[test]
fn random_access_matches_sequential_parse() {
    let dir = TempDir::new().unwrap();
    let corpus = common::generated(dir.path(), 300, 11, Vec::new());
    let reader = RecordReader::open(&corpus.path, &corpus.dialect).unwrap();
    for (row, offset, fields) in naive_rows(&corpus.path) {
        let record = reader.record_at(offset).unwrap();
        assert_eq!(record.fields, fields, "row {row}");
        assert_eq!(record.byte_offset, offset);
    }

    let first = row_at_offset(&corpus.path, 0, &corpus.dialect).unwrap();
    assert_eq!(first.fields[..2], ["f0", "f1"]);
    assert_eq!(first.fields[5], "email");
    let size = corpus.size_bytes;
    assert!(matches!(
        row_at_offset(&corpus.path, size, &corpus.dialect),
        Err(Error::OffsetBeyondEof { offset, size: s }) if offset == size && s == size
    ));
}

proptest! {
    #[test]
    fn formatted_rows_parse_back(fields in prop::collection::vec("[a-z,\" ]{0,6}", 1..8)) {
        let d = CsvDialect::default();
        let line = format_row(&fields, &d);
        prop_assert_eq!(parse_row(line.as_bytes(), &d).unwrap(), fields);
    }
}
