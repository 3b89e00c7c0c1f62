//! Shared domain types: CSV dialect, source fingerprints, parsed records and
//! normalized lookup keys.

use std::fmt;
use std::fs::File;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::time::UNIX_EPOCH;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::csv_engine;
use crate::error::{Error, Result};

/// Number of leading bytes hashed into a [`Fingerprint`].
pub const FINGERPRINT_HEAD_BYTES: usize = 64 * 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EscapeMode {
    /// `""` inside a quoted field stands for one literal quote.
    DoubledQuote,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Encoding {
    /// Invalid UTF-8 sequences are replaced with U+FFFD when fields are decoded.
    Utf8Lossy,
}

/// How a corpus file is framed.
///
/// `has_header` lives here rather than on the descriptor alone so that every
/// line-level operation numbers data rows the same way: the header, when
/// present, is row 0 and data rows start at 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CsvDialect {
    pub delimiter: u8,
    pub quote: u8,
    pub escape_mode: EscapeMode,
    pub encoding: Encoding,
    pub has_header: bool,
}

impl Default for CsvDialect {
    fn default() -> Self {
        CsvDialect {
            delimiter: b',',
            quote: b'"',
            escape_mode: EscapeMode::DoubledQuote,
            encoding: Encoding::Utf8Lossy,
            has_header: true,
        }
    }
}

impl CsvDialect {
    pub fn with_header(mut self, has_header: bool) -> Self {
        self.has_header = has_header;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.delimiter == self.quote {
            return Err(Error::InvalidArgument(
                "delimiter and quote must differ".into(),
            ));
        }
        if matches!(self.delimiter, b'\n' | b'\r') || matches!(self.quote, b'\n' | b'\r') {
            return Err(Error::InvalidArgument(
                "delimiter and quote cannot be line terminators".into(),
            ));
        }
        Ok(())
    }
}

/// Compact identity of a source file, used to detect stale indexes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Fingerprint {
    pub size_bytes: u64,
    /// Seconds since the Unix epoch; 0 for timestamps before it.
    pub modified_time: u64,
    #[serde(with = "hex_digest")]
    pub head_digest: [u8; 32],
}

impl Fingerprint {
    pub fn digest_hex(&self) -> String {
        hex_digest::encode(&self.head_digest)
    }
}

mod hex_digest {
    use serde::{de::Error as _, Deserialize, Deserializer, Serializer};

    pub fn encode(bytes: &[u8; 32]) -> String {
        bytes.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn serialize<S: Serializer>(bytes: &[u8; 32], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&encode(bytes))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<[u8; 32], D::Error> {
        let text = String::deserialize(d)?;
        if text.len() != 64 {
            return Err(D::Error::custom("digest must be 64 hex characters"));
        }
        let mut out = [0u8; 32];
        for (i, slot) in out.iter_mut().enumerate() {
            *slot = u8::from_str_radix(&text[2 * i..2 * i + 2], 16).map_err(D::Error::custom)?;
        }
        Ok(out)
    }
}

/// Fingerprints `path` from its size, modification time and a SHA-256 of
/// the first 64 KiB.
pub fn fingerprint_dataset(path: &Path) -> Result<Fingerprint> {
    let mut file = File::open(path)?;
    let meta = file.metadata()?;
    let modified_time = meta
        .modified()
        .ok()
        .and_then(|t| t.duration_since(UNIX_EPOCH).ok())
        .map(|d| d.as_secs())
        .unwrap_or(0);

    let mut head = Vec::with_capacity(FINGERPRINT_HEAD_BYTES);
    (&mut file)
        .take(FINGERPRINT_HEAD_BYTES as u64)
        .read_to_end(&mut head)?;
    let head_digest: [u8; 32] = Sha256::digest(&head).into();

    Ok(Fingerprint {
        size_bytes: meta.len(),
        modified_time,
        head_digest,
    })
}

/// One parsed row of the corpus.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawRecord {
    /// 1-based data-row ordinal; 0 when the record was read by offset alone
    /// and its ordinal has not been resolved.
    pub row_number: u64,
    pub byte_offset: u64,
    pub fields: Vec<String>,
}

impl RawRecord {
    pub fn field(&self, column: usize) -> Option<&str> {
        self.fields.get(column).map(String::as_str)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KeyKind {
    Email,
    Phone,
    Integer,
    Verbatim,
}

impl KeyKind {
    pub const ALL: [KeyKind; 4] = [
        KeyKind::Email,
        KeyKind::Phone,
        KeyKind::Integer,
        KeyKind::Verbatim,
    ];

    /// On-disk code stored in index headers. 0 is reserved for "no key".
    pub fn code(self) -> u8 {
        match self {
            KeyKind::Email => 1,
            KeyKind::Phone => 2,
            KeyKind::Integer => 3,
            KeyKind::Verbatim => 4,
        }
    }

    pub fn from_code(code: u8) -> Option<KeyKind> {
        KeyKind::ALL.into_iter().find(|k| k.code() == code)
    }

    pub fn name(self) -> &'static str {
        match self {
            KeyKind::Email => "email",
            KeyKind::Phone => "phone",
            KeyKind::Integer => "integer",
            KeyKind::Verbatim => "verbatim",
        }
    }

    /// Normalizes a raw field under this kind. `None` means the field has no
    /// representation under the kind (only possible for integers).
    pub fn normalize(self, raw: &str) -> Option<NormalizedKey> {
        match self {
            KeyKind::Email => Some(normalize_email(raw)),
            KeyKind::Phone => Some(normalize_phone(raw)),
            KeyKind::Integer => normalize_integer(raw),
            KeyKind::Verbatim => Some(NormalizedKey {
                kind: KeyKind::Verbatim,
                value: raw.to_owned(),
            }),
        }
    }

    /// Byte-level variant of [`KeyKind::normalize`] for scan loops.
    pub fn normalize_bytes(self, raw: &[u8]) -> Option<NormalizedKey> {
        self.normalize(&String::from_utf8_lossy(raw))
    }
}

impl fmt::Display for KeyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for KeyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        KeyKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown key kind `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NormalizedKey {
    pub kind: KeyKind,
    pub value: String,
}

impl NormalizedKey {
    pub fn is_empty(&self) -> bool {
        self.value.is_empty()
    }
}

impl fmt::Display for NormalizedKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.kind, self.value)
    }
}

/// Trims surrounding whitespace and lowercases ASCII letters. No plus-tag
/// or dot folding: distinct breach records must stay distinct.
pub fn normalize_email(raw: &str) -> NormalizedKey {
    NormalizedKey {
        kind: KeyKind::Email,
        value: raw.trim().to_ascii_lowercase(),
    }
}

/// Keeps ASCII digits only; country codes are left as written.
pub fn normalize_phone(raw: &str) -> NormalizedKey {
    NormalizedKey {
        kind: KeyKind::Phone,
        value: raw
            .bytes()
            .filter(u8::is_ascii_digit)
            .map(char::from)
            .collect(),
    }
}

/// Parses a trimmed base-10 unsigned integer and renders it canonically
/// (no leading zeros). Returns `None` for anything else.
pub fn normalize_integer(raw: &str) -> Option<NormalizedKey> {
    parse_u64(raw.trim().as_bytes()).map(|n| NormalizedKey {
        kind: KeyKind::Integer,
        value: n.to_string(),
    })
}

/// Strict ASCII-decimal parse without allocation: no sign, no whitespace,
/// no overflow.
pub fn parse_u64(digits: &[u8]) -> Option<u64> {
    if digits.is_empty() {
        return None;
    }
    let mut n: u64 = 0;
    for &b in digits {
        let d = b.wrapping_sub(b'0');
        if d > 9 {
            return None;
        }
        n = n.checked_mul(10)?.checked_add(u64::from(d))?;
    }
    Some(n)
}

/// Path, shape, dialect and fingerprint of one CSV corpus.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetDescriptor {
    pub path: PathBuf,
    pub size_bytes: u64,
    /// Data rows, excluding the header line when there is one.
    pub row_count: u64,
    pub column_count: usize,
    pub dialect: CsvDialect,
    pub fingerprint: Fingerprint,
}

impl DatasetDescriptor {
    /// Describes `path` by counting its rows and the fields of its first line.
    pub fn open(path: impl AsRef<Path>, dialect: CsvDialect) -> Result<Self> {
        let path = path.as_ref();
        let row_count = csv_engine::count_rows(path, &dialect)?;
        Self::with_row_count(path, dialect, row_count)
    }

    /// Builds a descriptor when the row count is already known (for example
    /// from a validated row-offset index), skipping the counting pass.
    pub fn with_row_count(
        path: impl AsRef<Path>,
        dialect: CsvDialect,
        row_count: u64,
    ) -> Result<Self> {
        dialect.validate()?;
        let path = path.as_ref();
        let fingerprint = fingerprint_dataset(path)?;
        let column_count = csv_engine::first_line_field_count(path, &dialect)?.max(1);
        Ok(DatasetDescriptor {
            path: path.to_path_buf(),
            size_bytes: fingerprint.size_bytes,
            row_count,
            column_count,
            dialect,
            fingerprint,
        })
    }

    pub fn has_header(&self) -> bool {
        self.dialect.has_header
    }
}
