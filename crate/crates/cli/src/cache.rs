//! The on-disk `λ` table: `liouville.bin` plus a `liouville.bin.sha256`
//! sidecar holding the hex digest of the file.

use std::fs;
use std::path::{Path, PathBuf};

use lfu_core::liouville::{build_table_capped, DEFAULT_CAP};
use lfu_core::LiouvilleTable;
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};
use crate::output::write_atomic;

/// Environment variable overriding the cache directory.
pub const CACHE_ENV: &str = "LFU_CACHE_DIR";
pub const DEFAULT_CACHE_DIR: &str = ".lfu-cache";
pub const CACHE_FILE: &str = "liouville.bin";

/// Explicit flag, then [`CACHE_ENV`], then [`DEFAULT_CACHE_DIR`].
pub fn cache_dir(flag: Option<&Path>) -> PathBuf {
    if let Some(p) = flag {
        return p.to_path_buf();
    }
    match std::env::var_os(CACHE_ENV) {
        Some(v) if !v.is_empty() => PathBuf::from(v),
        _ => PathBuf::from(DEFAULT_CACHE_DIR),
    }
}

pub fn cache_path(dir: &Path) -> PathBuf {
    dir.join(CACHE_FILE)
}

fn sidecar_path(dir: &Path) -> PathBuf {
    dir.join(format!("{CACHE_FILE}.sha256"))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// A verified cache file.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CacheInfo {
    pub path: PathBuf,
    pub limit: u64,
    pub sha256: String,
    pub bytes: u64,
}

/// Reads, checksums and parses the cache.
pub fn load(dir: &Path) -> CliResult<(LiouvilleTable, CacheInfo)> {
    let path = cache_path(dir);
    let bytes = fs::read(&path).map_err(|e| {
        CliError::Cache(format!(
            "{}: {e}; run `lfu sieve` to create it",
            path.display()
        ))
    })?;
    let digest = sha256_hex(&bytes);
    let recorded = fs::read_to_string(sidecar_path(dir))
        .map_err(|e| CliError::Cache(format!("{}: {e}", sidecar_path(dir).display())))?;
    if recorded.split_whitespace().next() != Some(digest.as_str()) {
        return Err(CliError::Cache(format!(
            "{}: checksum mismatch (file {digest})",
            path.display()
        )));
    }
    let table = LiouvilleTable::read_from(&bytes[..])
        .map_err(|e| CliError::Cache(format!("{}: {e}", path.display())))?;
    let info = CacheInfo {
        path,
        limit: table.limit(),
        sha256: digest,
        bytes: bytes.len() as u64,
    };
    Ok((table, info))
}

/// [`load`] for a table holding at least `needed` entries.
pub fn load_for(dir: &Path, needed: u64) -> CliResult<(LiouvilleTable, CacheInfo)> {
    let (table, info) = load(dir)?;
    if info.limit < needed {
        return Err(CliError::Cache(format!(
            "{} holds n <= {} but the run needs n <= {needed}; rerun `lfu sieve --limit {needed}`",
            info.path.display(),
            info.limit
        )));
    }
    Ok((table, info))
}

/// What `sieve` did.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SieveOutcome {
    Reused(CacheInfo),
    Written(CacheInfo),
}

/// Writes a table of size `limit` unless a valid cache of at least that
/// size exists (or `force` is set). Invalid caches are regenerated.
pub fn sieve(dir: &Path, limit: u64, cap: u64, force: bool) -> CliResult<SieveOutcome> {
    if limit == 0 {
        return Err(CliError::Config("sieve limit must be at least 1".into()));
    }
    if limit > cap.min(DEFAULT_CAP) {
        return Err(CliError::Capacity(format!(
            "sieve limit {limit} exceeds cap {}",
            cap.min(DEFAULT_CAP)
        )));
    }
    if !force {
        if let Ok((_, info)) = load(dir) {
            if info.limit >= limit {
                return Ok(SieveOutcome::Reused(info));
            }
        }
    }
    let table = build_table_capped(limit, cap).map_err(CliError::from)?;
    let mut bytes = Vec::with_capacity(13 + limit.div_ceil(8) as usize);
    table.write_to(&mut bytes).map_err(CliError::from)?;
    fs::create_dir_all(dir).map_err(CliError::io(dir))?;
    let path = cache_path(dir);
    let digest = sha256_hex(&bytes);
    write_atomic(&path, &bytes)?;
    write_atomic(
        &sidecar_path(dir),
        format!("{digest}  {CACHE_FILE}\n").as_bytes(),
    )?;
    Ok(SieveOutcome::Written(CacheInfo {
        path,
        limit,
        sha256: digest,
        bytes: bytes.len() as u64,
    }))
}
