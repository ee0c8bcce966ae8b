//! Embedded document store: named collections of JSON documents.
//!
//! [`FsStore`] keeps one file per document under `<root>/<collection>/`;
//! [`MemoryStore`] backs tests. Another backend only has to implement
//! [`DocumentStore`].

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::de::DeserializeOwned;
use serde::Serialize;

pub const CORPUS: &str = "corpus";
pub const BANKS: &str = "banks";
pub const GRAPHS: &str = "graphs";
pub const SESSIONS: &str = "sessions";

/// Key of the single corpus document.
pub const CORPUS_KEY: &str = "records";

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("storage I/O error at {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("document {collection}/{key} is not valid: {source}")]
    Decode {
        collection: String,
        key: String,
        #[source]
        source: serde_json::Error,
    },
    #[error("cannot encode document: {0}")]
    Encode(#[from] serde_json::Error),
}

pub trait DocumentStore: Send + Sync {
    fn put(&self, collection: &str, key: &str, doc: &[u8]) -> Result<(), StoreError>;
    fn get(&self, collection: &str, key: &str) -> Result<Option<Vec<u8>>, StoreError>;
    /// Keys of a collection, sorted.
    fn keys(&self, collection: &str) -> Result<Vec<String>, StoreError>;
}

/// Pretty JSON with a trailing newline; stable for stable inputs.
pub fn encode<T: Serialize + ?Sized>(doc: &T) -> Result<Vec<u8>, StoreError> {
    let mut bytes = serde_json::to_vec_pretty(doc)?;
    bytes.push(b'\n');
    Ok(bytes)
}

pub fn put_json<T: Serialize + ?Sized>(
    store: &dyn DocumentStore,
    collection: &str,
    key: &str,
    doc: &T,
) -> Result<(), StoreError> {
    store.put(collection, key, &encode(doc)?)
}

pub fn get_json<T: DeserializeOwned>(
    store: &dyn DocumentStore,
    collection: &str,
    key: &str,
) -> Result<Option<T>, StoreError> {
    let Some(bytes) = store.get(collection, key)? else {
        return Ok(None);
    };
    serde_json::from_slice(&bytes).map(Some).map_err(|source| StoreError::Decode {
        collection: collection.to_string(),
        key: key.to_string(),
        source,
    })
}

fn safe_char(b: u8) -> bool {
    b.is_ascii_alphanumeric() || matches!(b, b'-' | b'_' | b'.')
}

/// File-name-safe key encoding: unsafe bytes and a leading dot become `%XX`.
pub fn encode_key(key: &str) -> String {
    let mut out = String::with_capacity(key.len());
    for (i, b) in key.bytes().enumerate() {
        if safe_char(b) && !(i == 0 && b == b'.') {
            out.push(b as char);
        } else {
            out.push_str(&format!("%{b:02X}"));
        }
    }
    out
}

pub fn decode_key(name: &str) -> Option<String> {
    let bytes = name.as_bytes();
    let mut out = Vec::with_capacity(bytes.len());
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'%' {
            let hex = std::str::from_utf8(bytes.get(i + 1..i + 3)?).ok()?;
            out.push(u8::from_str_radix(hex, 16).ok()?);
            i += 3;
        } else {
            out.push(bytes[i]);
            i += 1;
        }
    }
    String::from_utf8(out).ok()
}

#[derive(Debug, Clone)]
pub struct FsStore {
    root: PathBuf,
}

impl FsStore {
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, StoreError> {
        let root = root.into();
        std::fs::create_dir_all(&root).map_err(|source| StoreError::Io {
            path: root.display().to_string(),
            source,
        })?;
        Ok(Self { root })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn path_of(&self, collection: &str, key: &str) -> PathBuf {
        self.root.join(collection).join(format!("{}.json", encode_key(key)))
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> StoreError + '_ {
    move |source| StoreError::Io {
        path: path.display().to_string(),
        source,
    }
}

impl DocumentStore for FsStore {
    fn put(&self, collection: &str, key: &str, doc: &[u8]) -> Result<(), StoreError> {
        let path = self.path_of(collection, key);
        let dir = path.parent().unwrap_or(&self.root);
        std::fs::create_dir_all(dir).map_err(io_err(dir))?;
        // write-then-rename so readers never observe a partial document
        let tmp = path.with_extension(format!("json.tmp{}", std::process::id()));
        std::fs::write(&tmp, doc).map_err(io_err(&tmp))?;
        std::fs::rename(&tmp, &path).map_err(io_err(&path))
    }

    fn get(&self, collection: &str, key: &str) -> Result<Option<Vec<u8>>, StoreError> {
        let path = self.path_of(collection, key);
        match std::fs::read(&path) {
            Ok(bytes) => Ok(Some(bytes)),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(io_err(&path)(e)),
        }
    }

    fn keys(&self, collection: &str) -> Result<Vec<String>, StoreError> {
        let dir = self.root.join(collection);
        let entries = match std::fs::read_dir(&dir) {
            Ok(entries) => entries,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
            Err(e) => return Err(io_err(&dir)(e)),
        };
        let mut keys = Vec::new();
        for entry in entries {
            let entry = entry.map_err(io_err(&dir))?;
            let name = entry.file_name();
            let Some(stem) = name.to_str().and_then(|n| n.strip_suffix(".json")) else {
                continue;
            };
            if let Some(key) = decode_key(stem) {
                keys.push(key);
            }
        }
        keys.sort();
        Ok(keys)
    }
}

#[derive(Debug, Default)]
pub struct MemoryStore {
    docs: Mutex<BTreeMap<(String, String), Vec<u8>>>,
}

impl MemoryStore {
    pub fn new() -> Self {
        Self::default()
    }
}

impl DocumentStore for MemoryStore {
    fn put(&self, collection: &str, key: &str, doc: &[u8]) -> Result<(), StoreError> {
        self.docs
            .lock()
            .expect("store lock")
            .insert((collection.to_string(), key.to_string()), doc.to_vec());
        Ok(())
    }

    fn get(&self, collection: &str, key: &str) -> Result<Option<Vec<u8>>, StoreError> {
        Ok(self
            .docs
            .lock()
            .expect("store lock")
            .get(&(collection.to_string(), key.to_string()))
            .cloned())
    }

    fn keys(&self, collection: &str) -> Result<Vec<String>, StoreError> {
        Ok(self
            .docs
            .lock()
            .expect("store lock")
            .keys()
            .filter(|(c, _)| c == collection)
            .map(|(_, k)| k.clone())
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exercise(store: &dyn DocumentStore) {
        assert!(get_json::<Vec<u32>>(store, "c", "k").unwrap().is_none());
        put_json(store, "c", "k/1 é", &vec![1u32, 2]).unwrap();
        put_json(store, "c", "a", &vec![3u32]).unwrap();
        assert_eq!(get_json::<Vec<u32>>(store, "c", "k/1 é").unwrap(), Some(vec![1, 2]));
        assert_eq!(store.keys("c").unwrap(), ["a", "k/1 é"]);
        assert!(store.keys("empty").unwrap().is_empty());
        store.put("c", "bad", b"{").unwrap();
        assert!(matches!(get_json::<Vec<u32>>(store, "c", "bad"), Err(StoreError::Decode { .. })));
    }

    #[test]
    fn memory_store() {
        exercise(&MemoryStore::new());
    }

    #[test]
    fn fs_store() {
        let dir = tempfile::tempdir().unwrap();
        let store = FsStore::open(dir.path()).unwrap();
        exercise(&store);
        assert!(store.path_of("c", "a").exists());
    }

    #[test]
    fn key_encoding_round_trips() {
        for key in ["plain-id_1.2", "../etc", "a b/c", ".hidden", "ünï"] {
            let enc = encode_key(key);
            assert!(!enc.contains('/') && !enc.starts_with('.'), "{enc}");
            assert_eq!(decode_key(&enc).as_deref(), Some(key));
        }
    }
}
