//! Index file layout. All integers little-endian.
//!
//! ```text
//! offset size field
//!      0    4 magic "BRIX"
//!      4    2 version
//!      6    1 kind (1 = row offset, 2 = key)
//!      7    1 key kind (0 for row offset, else KeyKind::code)
//!      8    2 column
//!     10    2 reserved, zero
//!     12    8 entry count
//!     20    8 source size in bytes
//!     28    8 source mtime, seconds since epoch
//!     36   32 SHA-256 of the first 64 KiB of the source
//!     68    - entries: u64 offset (row index) or u64 hash, u64 offset (key index)
//! ```

use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{Fingerprint, KeyKind};

pub const MAGIC: [u8; 4] = *b"BRIX";
pub const VERSION: u16 = 1;
pub const HEADER_LEN: usize = 68;

pub const ROW_ENTRY_LEN: u64 = 8;
pub const KEY_ENTRY_LEN: u64 = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum IndexKind {
    RowOffset,
    Key,
}

impl IndexKind {
    pub fn code(self) -> u8 {
        match self {
            IndexKind::RowOffset => 1,
            IndexKind::Key => 2,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            1 => Some(IndexKind::RowOffset),
            2 => Some(IndexKind::Key),
            _ => None,
        }
    }

    pub fn entry_len(self) -> u64 {
        match self {
            IndexKind::RowOffset => ROW_ENTRY_LEN,
            IndexKind::Key => KEY_ENTRY_LEN,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub struct IndexHeader {
    pub version: u16,
    pub kind: IndexKind,
    /// `None` for row-offset indexes.
    pub key_kind: Option<KeyKind>,
    pub column: u16,
    pub entry_count: u64,
    pub fingerprint: Fingerprint,
}

impl IndexHeader {
    pub fn encode(&self) -> [u8; HEADER_LEN] {
        let mut out = [0u8; HEADER_LEN];
        out[0..4].copy_from_slice(&MAGIC);
        out[4..6].copy_from_slice(&self.version.to_le_bytes());
        out[6] = self.kind.code();
        out[7] = self.key_kind.map_or(0, KeyKind::code);
        out[8..10].copy_from_slice(&self.column.to_le_bytes());
        out[12..20].copy_from_slice(&self.entry_count.to_le_bytes());
        out[20..28].copy_from_slice(&self.fingerprint.size_bytes.to_le_bytes());
        out[28..36].copy_from_slice(&self.fingerprint.modified_time.to_le_bytes());
        out[36..68].copy_from_slice(&self.fingerprint.head_digest);
        out
    }

    /// Decodes and validates magic, version and kind codes. `path` is only
    /// used in error messages.
    pub fn decode(bytes: &[u8], path: &Path) -> Result<Self> {
        if bytes.len() < MAGIC.len() || bytes[0..4] != MAGIC {
            return Err(Error::BadMagic {
                path: path.to_path_buf(),
            });
        }
        let corrupt = |reason: String| Error::CorruptIndex {
            path: path.to_path_buf(),
            reason,
        };
        if bytes.len() < HEADER_LEN {
            return Err(corrupt(format!(
                "header is {} bytes, need {HEADER_LEN}",
                bytes.len()
            )));
        }
        let u16_at = |i: usize| u16::from_le_bytes([bytes[i], bytes[i + 1]]);
        let u64_at = |i: usize| u64::from_le_bytes(bytes[i..i + 8].try_into().unwrap());

        let version = u16_at(4);
        if version != VERSION {
            return Err(Error::VersionMismatch {
                path: path.to_path_buf(),
                found: version,
                expected: VERSION,
            });
        }
        let kind = IndexKind::from_code(bytes[6])
            .ok_or_else(|| corrupt(format!("unknown index kind {}", bytes[6])))?;
        let key_kind = match (kind, bytes[7]) {
            (IndexKind::RowOffset, 0) => None,
            (IndexKind::Key, code) => Some(
                KeyKind::from_code(code)
                    .ok_or_else(|| corrupt(format!("unknown key kind {code}")))?,
            ),
            (IndexKind::RowOffset, code) => {
                return Err(corrupt(format!("row-offset index with key kind {code}")))
            }
        };
        let mut head_digest = [0u8; 32];
        head_digest.copy_from_slice(&bytes[36..68]);
        Ok(IndexHeader {
            version,
            kind,
            key_kind,
            column: u16_at(8),
            entry_count: u64_at(12),
            fingerprint: Fingerprint {
                size_bytes: u64_at(20),
                modified_time: u64_at(28),
                head_digest,
            },
        })
    }

    pub fn expected_file_len(&self) -> Option<u64> {
        self.entry_count
            .checked_mul(self.kind.entry_len())?
            .checked_add(HEADER_LEN as u64)
    }
}

/// FNV-1a 64-bit over the normalized key bytes.
pub fn key_hash(normalized: &[u8]) -> u64 {
    use std::hash::Hasher;
    let mut h = fnv::FnvHasher::default();
    h.write(normalized);
    h.finish()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn header() -> IndexHeader {
        IndexHeader {
            version: VERSION,
            kind: IndexKind::Key,
            key_kind: Some(KeyKind::Email),
            column: 5,
            entry_count: 3,
            fingerprint: Fingerprint {
                size_bytes: 0x0102,
                modified_time: 0x0a0b,
                head_digest: [0xee; 32],
            },
        }
    }

    #[test]
    fn layout_is_bit_exact() {
        let bytes = header().encode();
        let mut expected = Vec::new();
        expected.extend_from_slice(b"BRIX");
        expected.extend_from_slice(&[1, 0]);
        expected.extend_from_slice(&[2, 1]);
        expected.extend_from_slice(&[5, 0]);
        expected.extend_from_slice(&[0, 0]);
        expected.extend_from_slice(&[3, 0, 0, 0, 0, 0, 0, 0]);
        expected.extend_from_slice(&[2, 1, 0, 0, 0, 0, 0, 0]);
        expected.extend_from_slice(&[0x0b, 0x0a, 0, 0, 0, 0, 0, 0]);
        expected.extend_from_slice(&[0xee; 32]);
        assert_eq!(bytes.as_slice(), expected.as_slice());
    }

    #[test]
    fn decode_round_trips() {
        let h = header();
        assert_eq!(IndexHeader::decode(&h.encode(), Path::new("x")).unwrap(), h);
    }

    #[test]
    fn decode_errors_are_distinct() {
        let p = Path::new("x");
        assert!(matches!(
            IndexHeader::decode(b"BR", p),
            Err(Error::BadMagic { .. })
        ));
        assert!(matches!(
            IndexHeader::decode(&[0u8; 68], p),
            Err(Error::BadMagic { .. })
        ));
        let mut bytes = header().encode();
        assert!(matches!(
            IndexHeader::decode(&bytes[..40], p),
            Err(Error::CorruptIndex { .. })
        ));
        bytes[4] = 9;
        assert!(matches!(
            IndexHeader::decode(&bytes, p),
            Err(Error::VersionMismatch { found: 9, .. })
        ));
    }

    #[test]
    fn fnv1a_reference_vectors() {
        assert_eq!(key_hash(b""), 0xcbf2_9ce4_8422_2325);
        assert_eq!(key_hash(b"a"), 0xaf63_dc4c_8601_ec8c);
        assert_eq!(key_hash(b"foobar"), 0x8594_4171_f739_67e8);
    }
}
