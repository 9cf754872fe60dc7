//! On-disk cache for exact spectra and scar bases, keyed by a SHA-256 digest
//! of the parameters that determine them. Entries are written atomically;
//! unreadable or inconsistent entries are recomputed.

use std::path::{Path, PathBuf};

use log::{debug, warn};
use num_complex::Complex64;
use omrl::scar::{ScarBasis, ScarLabel};
use omrl::torus::TorusSpec;
use omrl::ComplexMatrix;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::artifacts::atomic_write;
use crate::error::CliError;

pub const CACHE_ENV: &str = "OMRL_CACHE_DIR";

#[derive(Debug, Default, Clone, Copy, Serialize)]
pub struct CacheStats {
    pub hits: usize,
    pub misses: usize,
}

pub struct Cache {
    dir: Option<PathBuf>,
    stats: CacheStats,
}

#[derive(Serialize, Deserialize)]
struct BasisHeader {
    tau: usize,
    rows: usize,
    cols: usize,
    labels: Vec<ScarLabel>,
}

impl Cache {
    /// `$OMRL_CACHE_DIR`, else `omrl-cache` under the system temporary directory.
    pub fn from_env() -> Self {
        let dir = std::env::var_os(CACHE_ENV)
            .map(PathBuf::from)
            .unwrap_or_else(|| std::env::temp_dir().join("omrl-cache"));
        Self::at(dir)
    }

    pub fn at(dir: impl Into<PathBuf>) -> Self {
        Self {
            dir: Some(dir.into()),
            stats: CacheStats::default(),
        }
    }

    pub fn disabled() -> Self {
        Self {
            dir: None,
            stats: CacheStats::default(),
        }
    }

    pub fn stats(&self) -> CacheStats {
        self.stats
    }

    /// Hex digest of the entry kind, the library version and the parameters.
    pub fn key(kind: &str, params: &impl Serialize) -> String {
        let doc = serde_json::json!({ "kind": kind, "version": omrl::VERSION, "params": params });
        hex::encode(Sha256::digest(doc.to_string().as_bytes()))
    }

    fn path(&self, key: &str, ext: &str) -> Option<PathBuf> {
        self.dir.as_ref().map(|d| d.join(format!("{key}.{ext}")))
    }

    fn store(&self, path: &Path, bytes: &[u8]) {
        let result = std::fs::create_dir_all(path.parent().unwrap_or(Path::new(".")))
            .map_err(|e| CliError::io(path, e))
            .and_then(|_| atomic_write(path, bytes));
        if let Err(e) = result {
            warn!("cache entry not stored: {e}");
        }
    }

    /// Value stored as one JSON document.
    pub fn json<T, F>(
        &mut self,
        kind: &str,
        params: &impl Serialize,
        compute: F,
    ) -> Result<T, CliError>
    where
        T: Serialize + DeserializeOwned,
        F: FnOnce() -> Result<T, CliError>,
    {
        let key = Self::key(kind, params);
        let Some(path) = self.path(&key, "json") else {
            return compute();
        };
        if let Ok(text) = std::fs::read(&path) {
            match serde_json::from_slice(&text) {
                Ok(v) => {
                    debug!("cache hit {kind} {key}");
                    self.stats.hits += 1;
                    return Ok(v);
                }
                Err(e) => warn!("ignoring unreadable cache entry {}: {e}", path.display()),
            }
        }
        self.stats.misses += 1;
        let v = compute()?;
        self.store(
            &path,
            &serde_json::to_vec(&v).expect("plain data serializes"),
        );
        Ok(v)
    }

    /// Scar basis stored as a JSON header plus a little-endian `f64` payload of
    /// interleaved re/im values, right columns then left columns.
    pub fn scar_basis<F>(
        &mut self,
        params: &impl Serialize,
        spec: TorusSpec,
        compute: F,
    ) -> Result<ScarBasis, CliError>
    where
        F: FnOnce() -> Result<ScarBasis, CliError>,
    {
        let key = Self::key("scar-basis", params);
        let (Some(head), Some(body)) = (self.path(&key, "json"), self.path(&key, "bin")) else {
            return compute();
        };
        if head.exists() {
            match load_basis(&head, &body, spec) {
                Ok(b) => {
                    debug!("cache hit scar basis {key}");
                    self.stats.hits += 1;
                    return Ok(b);
                }
                Err(e) => warn!("ignoring cache entry {}: {e}", head.display()),
            }
        }
        self.stats.misses += 1;
        let basis = compute()?;
        let header = BasisHeader {
            tau: basis.tau(),
            rows: spec.dim(),
            cols: basis.len(),
            labels: basis.labels().to_vec(),
        };
        let mut bytes = Vec::with_capacity(32 * header.rows * header.cols);
        for m in [basis.right(), basis.left()] {
            for j in 0..m.ncols() {
                for z in m.col_as_slice(j) {
                    bytes.extend_from_slice(&z.re.to_le_bytes());
                    bytes.extend_from_slice(&z.im.to_le_bytes());
                }
            }
        }
        // the header marks a complete entry, so it goes last
        self.store(&body, &bytes);
        self.store(
            &head,
            &serde_json::to_vec(&header).expect("plain data serializes"),
        );
        Ok(basis)
    }
}

fn load_basis(head: &Path, body: &Path, spec: TorusSpec) -> Result<ScarBasis, String> {
    let header: BasisHeader =
        serde_json::from_slice(&std::fs::read(head).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;
    let bytes = std::fs::read(body).map_err(|e| e.to_string())?;
    let (rows, cols) = (header.rows, header.cols);
    if rows != spec.dim() || bytes.len() != 2 * rows * cols * 16 {
        return Err(format!(
            "payload of {} bytes does not fit {rows}x{cols}",
            bytes.len()
        ));
    }
    let values: Vec<Complex64> = bytes
        .chunks_exact(16)
        .map(|c| {
            let re = f64::from_le_bytes(c[..8].try_into().unwrap());
            let im = f64::from_le_bytes(c[8..].try_into().unwrap());
            Complex64::new(re, im)
        })
        .collect();
    let block = rows * cols;
    let matrix =
        |offset: usize| ComplexMatrix::from_fn(rows, cols, |i, j| values[offset + j * rows + i]);
    ScarBasis::from_parts(spec, header.tau, header.labels, matrix(0), matrix(block))
        .map_err(|e| e.to_string())
}
