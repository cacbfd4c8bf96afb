//! Content-addressed on-disk store for graph evaluations.
//!
//! Each entry lives at `<dir>/<aa>/<sha256(key)>.json` and carries a digest of
//! its own payload, so edits to a file are caught on load and by [`DiskCache::verify`].

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use ngc_core::eval::{evaluate_mode, EvalKey, EvalMode, EvalStore};
use ngc_core::multivector::mask_from_indices;
use ngc_core::parse::parse_polynomial;
use ngc_core::{MicroGraph, Multivector};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, thiserror::Error)]
pub enum CacheError {
    #[error("cache I/O error at {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("corrupt cache entry {path}: {reason}")]
    Corrupt { path: PathBuf, reason: String },
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
struct Component {
    xi: Vec<usize>,
    poly: String,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
struct Entry {
    key: String,
    dim: usize,
    sink: bool,
    mode: String,
    canonical: String,
    components: Vec<Component>,
    digest: String,
}

/// One line of `cache list`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Listing {
    pub key: String,
    pub path: PathBuf,
    pub terms: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum VerifyStatus {
    Ok,
    /// Unreadable, digest mismatch or unparsable payload.
    Corrupt(String),
    /// Readable but differs from a fresh evaluation.
    Mismatch,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VerifyReport {
    pub key: String,
    pub path: PathBuf,
    pub status: VerifyStatus,
}

#[derive(Clone, Debug)]
pub struct DiskCache {
    dir: PathBuf,
    /// Errors met while used as an [`EvalStore`], which cannot return them.
    pub errors: Vec<String>,
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CacheError + '_ {
    move |source| CacheError::Io { path: path.to_path_buf(), source }
}

fn sha_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn payload_digest(key: &str, components: &[Component]) -> String {
    let body = serde_json::to_vec(&(key, components)).expect("components serialize");
    sha_hex(&body)
}

impl DiskCache {
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self, CacheError> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        Ok(DiskCache { dir, errors: Vec::new() })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path_of(&self, key: &EvalKey) -> PathBuf {
        let h = sha_hex(key.to_string().as_bytes());
        self.dir.join(&h[..2]).join(format!("{h}.json"))
    }

    pub fn get(&self, key: &EvalKey) -> Result<Option<Multivector>, CacheError> {
        let path = self.path_of(key);
        if !path.exists() {
            return Ok(None);
        }
        let entry = read_entry(&path)?;
        if entry.key != key.to_string() {
            return Err(CacheError::Corrupt { path, reason: format!("holds key {}", entry.key) });
        }
        decode(&entry).map(Some).map_err(|reason| CacheError::Corrupt { path, reason })
    }

    pub fn put(&self, key: &EvalKey, value: &Multivector) -> Result<(), CacheError> {
        let path = self.path_of(key);
        let parent = path.parent().expect("entry paths have a parent");
        fs::create_dir_all(parent).map_err(io_err(parent))?;
        let components: Vec<Component> = value
            .components_by_indices()
            .into_iter()
            .map(|(xi, p)| Component { xi, poly: p.to_string() })
            .collect();
        let key_s = key.to_string();
        let entry = Entry {
            digest: payload_digest(&key_s, &components),
            key: key_s,
            dim: key.dim,
            sink: key.sink,
            mode: key.mode.to_string(),
            canonical: key.canonical.clone(),
            components,
        };
        let tmp = path.with_extension("tmp");
        let text = serde_json::to_string(&entry).expect("entry serializes");
        fs::write(&tmp, text).map_err(io_err(&tmp))?;
        fs::rename(&tmp, &path).map_err(io_err(&path))
    }

    fn entry_paths(&self) -> Result<Vec<PathBuf>, CacheError> {
        let mut out = Vec::new();
        for shard in fs::read_dir(&self.dir).map_err(io_err(&self.dir))? {
            let shard = shard.map_err(io_err(&self.dir))?.path();
            if !shard.is_dir() {
                continue;
            }
            for f in fs::read_dir(&shard).map_err(io_err(&shard))? {
                let p = f.map_err(io_err(&shard))?.path();
                if p.extension().is_some_and(|e| e == "json") {
                    out.push(p);
                }
            }
        }
        out.sort();
        Ok(out)
    }

    pub fn list(&self) -> Result<Vec<Listing>, CacheError> {
        let mut out = Vec::new();
        for path in self.entry_paths()? {
            let (key, terms) = match read_entry(&path) {
                Ok(e) => (e.key.clone(), decode(&e).map(|v| v.n_terms()).unwrap_or(0)),
                Err(_) => ("<unreadable>".to_string(), 0),
            };
            out.push(Listing { key, path, terms });
        }
        out.sort_by(|a, b| a.key.cmp(&b.key));
        Ok(out)
    }

    /// Removes every entry; returns how many were removed.
    pub fn clear(&self) -> Result<usize, CacheError> {
        let paths = self.entry_paths()?;
        for p in &paths {
            fs::remove_file(p).map_err(io_err(p))?;
        }
        for shard in fs::read_dir(&self.dir).map_err(io_err(&self.dir))? {
            let shard = shard.map_err(io_err(&self.dir))?.path();
            if shard.is_dir() {
                let _ = fs::remove_dir(&shard);
            }
        }
        Ok(paths.len())
    }

    /// Checks each entry's digest and, for the first `sample` entries (all if
    /// `None`), re-evaluates the graph and compares exactly.
    pub fn verify(&self, sample: Option<usize>) -> Result<Vec<VerifyReport>, CacheError> {
        let mut out = Vec::new();
        for (i, path) in self.entry_paths()?.into_iter().enumerate() {
            let entry = match read_entry(&path) {
                Ok(e) => e,
                Err(e) => {
                    out.push(VerifyReport { key: "<unreadable>".into(), path, status: VerifyStatus::Corrupt(e.to_string()) });
                    continue;
                }
            };
            let status = match decode(&entry) {
                Err(reason) => VerifyStatus::Corrupt(reason),
                Ok(stored) if sample.is_none_or(|n| i < n) => match recompute(&entry) {
                    Ok(fresh) if fresh == stored => VerifyStatus::Ok,
                    Ok(_) => VerifyStatus::Mismatch,
                    Err(reason) => VerifyStatus::Corrupt(reason),
                },
                Ok(_) => VerifyStatus::Ok,
            };
            out.push(VerifyReport { key: entry.key, path, status });
        }
        Ok(out)
    }
}

fn read_entry(path: &Path) -> Result<Entry, CacheError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|e| CacheError::Corrupt { path: path.to_path_buf(), reason: e.to_string() })
}

fn decode(e: &Entry) -> Result<Multivector, String> {
    if payload_digest(&e.key, &e.components) != e.digest {
        return Err("digest mismatch".into());
    }
    let mut comps = Vec::with_capacity(e.components.len());
    for c in &e.components {
        if c.xi.iter().any(|&i| i >= e.dim) {
            return Err(format!("xi index out of range in {:?}", c.xi));
        }
        let p = parse_polynomial(&c.poly, e.dim).map_err(|err| err.to_string())?;
        comps.push((mask_from_indices(&c.xi), p));
    }
    Ok(Multivector::from_components(e.dim, comps))
}

fn recompute(e: &Entry) -> Result<Multivector, String> {
    let mode: EvalMode = e.mode.parse().map_err(|err: ngc_core::Error| err.to_string())?;
    let g = MicroGraph::parse(&e.canonical, e.dim, e.sink).map_err(|err| err.to_string())?;
    evaluate_mode(&g, mode).map_err(|err| err.to_string())
}

impl EvalStore for DiskCache {
    fn load(&mut self, key: &EvalKey) -> Option<Multivector> {
        match self.get(key) {
            Ok(v) => v,
            Err(e) => {
                self.errors.push(e.to_string());
                None
            }
        }
    }

    fn save(&mut self, key: &EvalKey, value: &Multivector) {
        if let Err(e) = self.put(key, value) {
            self.errors.push(e.to_string());
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ngc_core::eval::CachedEvaluator;
    use ngc_core::eval::GraphEvaluator;

    fn key_of(enc: &str, dim: usize, sink: bool) -> (MicroGraph, EvalKey) {
        let g = MicroGraph::parse(enc, dim, sink).unwrap();
        let k = EvalKey::new(&ngc_core::canonical_form(&g).graph, EvalMode::Plain);
        (g, k)
    }

    #[test]
    fn roundtrip_and_reuse() {
        let tmp = tempfile::tempdir().unwrap();
        let mut ev = CachedEvaluator::with_store(DiskCache::open(tmp.path()).unwrap());
        let (g, key) = key_of("[0,3;2,3;2,3]", 2, true);
        let v = ev.evaluate(&g, EvalMode::Plain).unwrap();
        let cache = ev.into_store();
        assert_eq!(cache.get(&key).unwrap(), Some(v.clone()));
        let mut again = CachedEvaluator::with_store(DiskCache::open(tmp.path()).unwrap());
        assert_eq!(again.evaluate(&g, EvalMode::Plain).unwrap(), v);
        assert_eq!(again.evaluations(), 0);
    }

    #[test]
    fn tamper_is_flagged() {
        let tmp = tempfile::tempdir().unwrap();
        let cache = DiskCache::open(tmp.path()).unwrap();
        let (g, key) = key_of("[1,2;1,2]", 2, false);
        cache.put(&key, &evaluate_mode(&g, EvalMode::Plain).unwrap()).unwrap();
        let path = cache.path_of(&key);
        let text = fs::read_to_string(&path).unwrap().replacen("2*", "3*", 1);
        fs::write(&path, text).unwrap();
        assert!(cache.get(&key).is_err());
        let r = cache.verify(None).unwrap();
        assert_eq!(r.len(), 1);
        assert!(matches!(r[0].status, VerifyStatus::Corrupt(_)));
    }
}
