//! File formats: the UCI HAR directory layout, custom sensor CSV streams and
//! versioned model documents.

pub mod csv;
pub mod model;
pub mod uci;

use std::path::Path;

use crate::error::{Error, Result};

pub use self::csv::{load_custom_csv, load_custom_csv_files, CsvOptions, CustomCsv, CSV_COLUMNS};
pub use model::{load_model, save_model, ModelDocument, FORMAT_VERSION, SUPPORTED_VERSIONS};
pub use uci::{load_uci_har, Representation, Split, UCI_CHANNELS, UCI_FEATURES, UCI_WINDOW};

pub(crate) fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Write a file, creating parent directories as needed.
pub fn write_text(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}
