//! Atomic file output: write to a temporary sibling, then rename.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{CliError, CliResult};

pub fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let tmp = path.with_file_name(format!(".{name}.tmp"));
    let mut file = fs::File::create(&tmp).map_err(CliError::io(&tmp))?;
    file.write_all(bytes).map_err(CliError::io(&tmp))?;
    file.sync_all().map_err(CliError::io(&tmp))?;
    drop(file);
    fs::rename(&tmp, path).map_err(CliError::io(path))
}
