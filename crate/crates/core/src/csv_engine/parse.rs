use std::borrow::Cow;
use std::ops::Range;

use crate::error::{Error, Result};
use crate::model::CsvDialect;

/// Why a line failed to parse. Offsets are attached by the caller, which
/// knows where the line sits in the file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowDefect {
    UnbalancedQuote,
    TrailingAfterQuote,
}

impl RowDefect {
    pub fn reason(self) -> &'static str {
        match self {
            RowDefect::UnbalancedQuote => "unbalanced quote",
            RowDefect::TrailingAfterQuote => "unexpected byte after closing quote",
        }
    }

    pub fn at(self, offset: u64) -> Error {
        Error::MalformedRow {
            offset,
            reason: self.reason(),
        }
    }
}

/// Reusable field storage: unescaped bytes of every field laid end to end.
#[derive(Debug, Default, Clone)]
pub struct FieldBuf {
    bytes: Vec<u8>,
    ends: Vec<usize>,
}

impl FieldBuf {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.ends.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ends.is_empty()
    }

    pub fn get(&self, i: usize) -> Option<&[u8]> {
        let end = *self.ends.get(i)?;
        let start = if i == 0 { 0 } else { self.ends[i - 1] };
        Some(&self.bytes[start..end])
    }

    pub fn iter(&self) -> impl Iterator<Item = &[u8]> + '_ {
        (0..self.len()).map(move |i| self.get(i).unwrap())
    }

    pub fn to_strings(&self) -> Vec<String> {
        self.iter()
            .map(|f| String::from_utf8_lossy(f).into_owned())
            .collect()
    }

    fn clear(&mut self) {
        self.bytes.clear();
        self.ends.clear();
    }
}

/// Splits one line into fields, honoring doubled-quote escapes. An empty
/// line is a single empty field.
pub fn parse_into(line: &[u8], dialect: &CsvDialect, out: &mut FieldBuf) -> Result<(), RowDefect> {
    out.clear();
    let (delim, quote) = (dialect.delimiter, dialect.quote);
    let mut i = 0;
    let n = line.len();
    loop {
        if i < n && line[i] == quote {
            i += 1;
            loop {
                if i >= n {
                    return Err(RowDefect::UnbalancedQuote);
                }
                let b = line[i];
                if b == quote {
                    if i + 1 < n && line[i + 1] == quote {
                        out.bytes.push(quote);
                        i += 2;
                        continue;
                    }
                    i += 1;
                    break;
                }
                out.bytes.push(b);
                i += 1;
            }
            if i < n && line[i] != delim {
                return Err(RowDefect::TrailingAfterQuote);
            }
        } else {
            while i < n && line[i] != delim {
                out.bytes.push(line[i]);
                i += 1;
            }
        }
        out.ends.push(out.bytes.len());
        if i >= n {
            return Ok(());
        }
        // Skip the delimiter; a trailing delimiter yields a final empty field.
        i += 1;
    }
}

/// Parses one line into owned, lossily decoded fields.
pub fn parse_row(line: &[u8], dialect: &CsvDialect) -> Result<Vec<String>, RowDefect> {
    let mut buf = FieldBuf::new();
    parse_into(line, dialect, &mut buf)?;
    Ok(buf.to_strings())
}

/// Returns the unescaped value of `column` without materializing the other
/// fields, or `None` if the row has fewer columns.
///
/// Agrees with [`parse_into`] on every input, including which rows are
/// malformed: the unquoted fast path is only taken when the whole line is
/// free of quote bytes.
pub fn project_field<'a>(
    line: &'a [u8],
    dialect: &CsvDialect,
    column: usize,
    scratch: &mut FieldBuf,
) -> Result<Option<Cow<'a, [u8]>>, RowDefect> {
    if memchr::memchr(dialect.quote, line).is_some() {
        parse_into(line, dialect, scratch)?;
        return Ok(scratch.get(column).map(|f| Cow::Owned(f.to_vec())));
    }
    Ok(project_unquoted(line, dialect.delimiter, column).map(Cow::Borrowed))
}

/// Field `column` of a line known to contain no quote characters.
pub(crate) fn project_unquoted(line: &[u8], delim: u8, column: usize) -> Option<&[u8]> {
    unquoted_field_range(line, delim, column).map(|r| &line[r])
}

fn unquoted_field_range(line: &[u8], delim: u8, column: usize) -> Option<Range<usize>> {
    let start = match column {
        0 => 0,
        n => nth_byte(line, delim, n)? + 1,
    };
    let end = nth_byte(&line[start..], delim, 1).map_or(line.len(), |i| start + i);
    Some(start..end)
}

/// Index of the `n`th (1-based) occurrence of `needle`, examining eight
/// bytes per step. CSV fields are short, where this beats calling memchr
/// once per delimiter.
fn nth_byte(hay: &[u8], needle: u8, n: usize) -> Option<usize> {
    const LOW7: u64 = 0x7f7f_7f7f_7f7f_7f7f;
    let pattern = u64::from_ne_bytes([needle; 8]);
    let mut remaining = n;
    let mut words = hay.chunks_exact(8);
    let mut base = 0;
    for word in words.by_ref() {
        let x = u64::from_le_bytes(word.try_into().unwrap()) ^ pattern;
        // High bit set in exactly the bytes of `x` that are zero.
        let mut hits = !(((x & LOW7) + LOW7) | x | LOW7);
        while hits != 0 {
            remaining -= 1;
            if remaining == 0 {
                return Some(base + hits.trailing_zeros() as usize / 8);
            }
            hits &= hits - 1;
        }
        base += 8;
    }
    for (i, &b) in words.remainder().iter().enumerate() {
        if b == needle {
            remaining -= 1;
            if remaining == 0 {
                return Some(base + i);
            }
        }
    }
    None
}

/// Renders fields as one CSV line (no terminator), quoting where needed.
pub fn format_row<S: AsRef<str>>(fields: &[S], dialect: &CsvDialect) -> String {
    let delim = char::from(dialect.delimiter);
    let quote = char::from(dialect.quote);
    let mut out = String::new();
    for (i, field) in fields.iter().enumerate() {
        if i > 0 {
            out.push(delim);
        }
        let field = field.as_ref();
        let needs_quotes = field
            .bytes()
            .any(|b| b == dialect.delimiter || b == dialect.quote || b == b'\n' || b == b'\r');
        if needs_quotes {
            out.push(quote);
            for c in field.chars() {
                if c == quote {
                    out.push(quote);
                }
                out.push(c);
            }
            out.push(quote);
        } else {
            out.push_str(field);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    proptest::proptest! {
        #[test]
        fn nth_byte_agrees_with_naive(hay in proptest::collection::vec(0u8..4, 0..70), n in 1usize..20) {
            let naive = hay.iter().enumerate().filter(|(_, &b)| b == 1).map(|(i, _)| i).nth(n - 1);
            proptest::prop_assert_eq!(nth_byte(&hay, 1, n), naive);
        }
    }
    use proptest::prelude::*;

    fn d() -> CsvDialect {
        CsvDialect::default()
    }

    #[test]
    fn plain_fields() {
        assert_eq!(parse_row(b"a,b,c", &d()).unwrap(), ["a", "b", "c"]);
    }

    #[test]
    fn quoted_delimiter() {
        assert_eq!(parse_row(br#"a,"b,c",d"#, &d()).unwrap(), ["a", "b,c", "d"]);
    }

    #[test]
    fn doubled_quote_escape() {
        assert_eq!(parse_row(br#"a,"b""c""#, &d()).unwrap(), ["a", "b\"c"]);
    }

    #[test]
    fn empty_and_trailing_fields() {
        assert_eq!(parse_row(b"", &d()).unwrap(), [""]);
        assert_eq!(parse_row(b"a,", &d()).unwrap(), ["a", ""]);
        assert_eq!(parse_row(b",,", &d()).unwrap(), ["", "", ""]);
        assert_eq!(parse_row(br#""""#, &d()).unwrap(), [""]);
    }

    #[test]
    fn malformed_rows() {
        assert_eq!(
            parse_row(br#"a,"bc"#, &d()),
            Err(RowDefect::UnbalancedQuote)
        );
        assert_eq!(
            parse_row(br#"a,"b"c"#, &d()),
            Err(RowDefect::TrailingAfterQuote)
        );
    }

    #[test]
    fn quote_inside_unquoted_field_is_literal() {
        assert_eq!(parse_row(br#"ab"c,d"#, &d()).unwrap(), ["ab\"c", "d"]);
    }

    #[test]
    fn other_dialects() {
        let tsv = CsvDialect {
            delimiter: b'\t',
            quote: b'\'',
            ..d()
        };
        assert_eq!(
            parse_row(b"a\t'b\tc'\t'it''s'", &tsv).unwrap(),
            ["a", "b\tc", "it's"]
        );
    }

    #[test]
    fn invalid_utf8_is_replaced() {
        assert_eq!(parse_row(b"a,\xff", &d()).unwrap(), ["a", "\u{fffd}"]);
    }

    #[test]
    fn project_matches_examples() {
        let mut scratch = FieldBuf::new();
        let line = br#"a,"b,c",d"#;
        let f = project_field(line, &d(), 1, &mut scratch).unwrap().unwrap();
        assert_eq!(&*f, b"b,c");
        assert_eq!(project_field(b"a,b", &d(), 2, &mut scratch).unwrap(), None);
        assert_eq!(
            &*project_field(b"a,b", &d(), 1, &mut scratch)
                .unwrap()
                .unwrap(),
            b"b"
        );
    }

    #[test]
    fn format_round_trips_awkward_fields() {
        let fields = ["plain", "with,comma", "with\"quote", ""];
        let line = format_row(&fields, &d());
        assert_eq!(line, r#"plain,"with,comma","with""quote","#);
        assert_eq!(parse_row(line.as_bytes(), &d()).unwrap(), fields);
    }

    proptest! {
        #[test]
        fn projection_agrees_with_full_parse(
            line in proptest::collection::vec(prop_oneof![Just(b'"'), Just(b','), Just(b'a'), Just(b'b')], 0..24),
            column in 0usize..6,
        ) {
            let mut buf = FieldBuf::new();
            let full = parse_into(&line, &d(), &mut buf).map(|_| buf.get(column).map(<[u8]>::to_vec));
            let mut scratch = FieldBuf::new();
            let projected = project_field(&line, &d(), column, &mut scratch)
                .map(|f| f.map(|c| c.into_owned()));
            prop_assert_eq!(full, projected);
        }

        #[test]
        fn format_then_parse_is_identity(fields in proptest::collection::vec("[a-z,\"\\t ]{0,6}", 1..6)) {
            let line = format_row(&fields, &d());
            prop_assert_eq!(parse_row(line.as_bytes(), &d()).unwrap(), fields);
        }
    }
}
