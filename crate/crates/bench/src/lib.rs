//! Shared fixtures for the criterion benchmarks.

use std::path::PathBuf;

use brix::datagen::{generate_dataset, GenSpec, PlantManifest};
use brix::index_store::{
    build_key_index, build_row_offset_index, key_index_file, row_index_file, BuildOptions, IndexSet,
};
use brix::{DatasetDescriptor, KeyKind};
use tempfile::TempDir;

pub struct Fixture {
    _dir: TempDir,
    pub dataset: DatasetDescriptor,
    pub manifest: PlantManifest,
    pub index_dir: PathBuf,
}

impl Fixture {
    /// A seeded corpus with quartile plants, plus row and email indexes.
    pub fn new(rows: u64) -> Fixture {
        let dir = tempfile::tempdir().expect("tempdir");
        let path = dir.path().join("corpus.csv");
        let spec = GenSpec::new(rows, 42)
            .with_quartile_plants()
            .expect("plants");
        let dataset = generate_dataset(&spec, &path).expect("generate");
        let index_dir = dir.path().join("idx");
        std::fs::create_dir_all(&index_dir).expect("index dir");
        build_row_offset_index(&dataset, &row_index_file(&index_dir)).expect("row index");
        build_key_index(
            &dataset,
            spec.email_column,
            KeyKind::Email,
            &key_index_file(&index_dir, KeyKind::Email, spec.email_column),
            &BuildOptions::default(),
        )
        .expect("key index");
        Fixture {
            _dir: dir,
            manifest: PlantManifest::from(&spec),
            dataset,
            index_dir,
        }
    }

    pub fn indexes(&self) -> IndexSet {
        let (set, problems) =
            IndexSet::open_dir(&self.index_dir, &self.dataset).expect("open indexes");
        assert!(problems.is_empty(), "{problems:?}");
        set
    }
}
