//! Linear extrapolation of memory and time from a measured sample:
//! `estimate = sample_value × target_size / sample_size`.
//!
//! The model is a lower bound. Nothing here accounts for growth that is
//! super-linear in the input size (cache misses, allocator fragmentation).

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{normalize_email, CsvDialect, NormalizedKey};
use crate::scan_search::chunked_scan_with;

pub const BYTES_PER_MB: f64 = 1024.0 * 1024.0;
pub const MB_PER_GB: f64 = 1024.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleProfile {
    pub sample_size_bytes: u64,
    /// Peak bytes buffered while processing the sample.
    pub sample_mem_bytes: u64,
    /// Seconds.
    pub sample_time: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub target_size_bytes: u64,
    pub est_mem_bytes: f64,
    pub est_time: f64,
    pub model: Model,
}

/// `(sample_value × target) / sample_size`, in that order of operations.
/// Units are the caller's: only the ratio of sizes matters.
pub fn extrapolate(sample_value: f64, sample_size: f64, target: f64) -> Result<f64> {
    if sample_size == 0.0 {
        return Err(Error::ZeroSample);
    }
    Ok((sample_value * target) / sample_size)
}

pub fn estimate_memory(profile: &SampleProfile, target_size_bytes: u64) -> Result<f64> {
    extrapolate(
        profile.sample_mem_bytes as f64,
        profile.sample_size_bytes as f64,
        target_size_bytes as f64,
    )
}

pub fn estimate_time(profile: &SampleProfile, target_size_bytes: u64) -> Result<f64> {
    extrapolate(
        profile.sample_time,
        profile.sample_size_bytes as f64,
        target_size_bytes as f64,
    )
}

pub fn estimate(profile: &SampleProfile, target_size_bytes: u64) -> Result<Estimate> {
    Ok(Estimate {
        target_size_bytes,
        est_mem_bytes: estimate_memory(profile, target_size_bytes)?,
        est_time: estimate_time(profile, target_size_bytes)?,
        model: Model::Linear,
    })
}

/// What the sampling pass runs: a chunked scan of `column` for `key`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleScan {
    pub column: usize,
    pub chunk_rows: usize,
    pub key: NormalizedKey,
}

impl SampleScan {
    /// Scans for a key that never occurs, so the whole sample is processed.
    pub fn absent_email(column: usize, chunk_rows: usize) -> Self {
        SampleScan {
            column,
            chunk_rows,
            key: normalize_email(crate::datagen::ABSENT_EMAIL),
        }
    }
}

/// Measures a chunked scan over the first `sample_bytes` of `path`
/// (extended to the end of the line containing the limit).
pub fn profile_sample(
    path: &Path,
    dialect: &CsvDialect,
    sample_bytes: u64,
    scan: &SampleScan,
) -> Result<SampleProfile> {
    let size = std::fs::metadata(path)?.len();
    if sample_bytes == 0 {
        return Err(Error::ZeroSample);
    }
    if sample_bytes > size {
        return Err(Error::InvalidArgument(format!(
            "sample of {sample_bytes} bytes exceeds the file size ({size} bytes)"
        )));
    }
    let (outcome, stats) = chunked_scan_with(
        path,
        dialect,
        scan.column,
        &scan.key,
        scan.chunk_rows,
        Some(sample_bytes),
    )?;
    Ok(SampleProfile {
        sample_size_bytes: outcome.bytes_scanned,
        sample_mem_bytes: stats.peak_buffered_bytes,
        sample_time: outcome.elapsed.as_secs_f64(),
    })
}

pub fn bytes_to_mb(bytes: f64) -> f64 {
    bytes / BYTES_PER_MB
}

pub fn mb_to_gb(mb: f64) -> f64 {
    mb / MB_PER_GB
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn breach_dump_memory_example() {
        let mb = extrapolate(285.8, 262.0, 22_118.4).unwrap();
        assert!((mb - 24_127.63).abs() < 0.01, "{mb}");
    }

    #[test]
    fn breach_dump_time_example() {
        let s = extrapolate(4.740, 0.262, 21.5).unwrap();
        assert!((s - 388.97).abs() < 0.01, "{s}");
    }

    #[test]
    fn trivial_examples() {
        let p = SampleProfile {
            sample_size_bytes: 100,
            sample_mem_bytes: 100,
            sample_time: 1.0,
        };
        assert_eq!(estimate_memory(&p, 500).unwrap(), 500.0);
        assert_eq!(estimate_time(&p, 1000).unwrap(), 10.0);
        assert_eq!(estimate_time(&p, 0).unwrap(), 0.0);
        let zero_mem = SampleProfile {
            sample_mem_bytes: 0,
            ..p
        };
        assert_eq!(estimate_memory(&zero_mem, 12345).unwrap(), 0.0);
    }

    #[test]
    fn zero_sample_is_an_error() {
        let p = SampleProfile {
            sample_size_bytes: 0,
            sample_mem_bytes: 5,
            sample_time: 1.0,
        };
        assert!(matches!(estimate_memory(&p, 10), Err(Error::ZeroSample)));
        assert!(matches!(estimate_time(&p, 10), Err(Error::ZeroSample)));
    }

    #[test]
    fn gigabytes_are_binary() {
        assert_eq!(mb_to_gb(22_118.4), 21.6);
        assert_eq!(bytes_to_mb(BYTES_PER_MB * 3.0), 3.0);
    }

    proptest! {
        #[test]
        fn doubling_the_target_doubles_the_estimate(
            size in 1u64..1 << 40, mem in 0u64..1 << 40, time in 0.0f64..1e6, target in 0u64..1 << 50,
        ) {
            let p = SampleProfile { sample_size_bytes: size, sample_mem_bytes: mem, sample_time: time };
            prop_assert_eq!(estimate_memory(&p, 2 * target).unwrap(), 2.0 * estimate_memory(&p, target).unwrap());
            prop_assert_eq!(estimate_time(&p, 2 * target).unwrap(), 2.0 * estimate_time(&p, target).unwrap());
        }

        #[test]
        fn full_sample_is_identity(size in 1u64..1 << 50, mem in 0u64..1 << 50, time in 0.0f64..1e6) {
            let p = SampleProfile { sample_size_bytes: size, sample_mem_bytes: mem, sample_time: time };
            let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * b.abs();
            prop_assert!(close(estimate_memory(&p, size).unwrap(), mem as f64));
            prop_assert!(close(estimate_time(&p, size).unwrap(), time));
        }

        #[test]
        fn monotone_in_target(size in 1u64..1 << 40, time in 0.0f64..1e6, a in 0u64..1 << 40, b in 0u64..1 << 40) {
            let p = SampleProfile { sample_size_bytes: size, sample_mem_bytes: 7, sample_time: time };
            let (lo, hi) = (a.min(b), a.max(b));
            prop_assert!(estimate_time(&p, lo).unwrap() <= estimate_time(&p, hi).unwrap());
        }
    }
}
