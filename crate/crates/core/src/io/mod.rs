//! File formats: QTEN tensors, report documents and CSV tables.

mod qtensor;
mod report;

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

pub use report::{
    emit_plot_data, format_float, metric_csv, plot_data_csv, read_report, report_body_string, report_from_str,
    report_to_string, round_significant, sweep_to_string, tau_csv, write_report,
};
pub use qtensor::{decode_qtensor, encode_qtensor, read_qtensor, write_qtensor, DType, QTEN_MAGIC};

/// Write `bytes` to `path` through a temporary file in the same directory,
/// renamed into place once fully flushed.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}
