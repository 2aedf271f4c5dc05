//! Dataset ingestion and the on-disk sample format.

pub mod csv_io;
pub mod idx;

use std::path::{Path, PathBuf};

pub use csv_io::{load_csv, read_samples, write_labeled_csv, write_samples, write_scalar_csv, Observations, SampleRows, Schema};
pub use idx::{load_idx, IdxImages};

pub const DATA_DIR_VAR: &str = "MINT_DATA_DIR";

/// Relative dataset paths resolve against `$MINT_DATA_DIR` when it is set.
pub fn resolve_data_path(path: &Path) -> PathBuf {
    if path.is_absolute() {
        return path.to_path_buf();
    }
    match std::env::var_os(DATA_DIR_VAR) {
        Some(dir) if !dir.is_empty() => Path::new(&dir).join(path),
        _ => path.to_path_buf(),
    }
}
