use std::collections::HashMap;
use std::io;
use std::path::PathBuf;
use std::sync::{Arc, Mutex};

use sha2::{Digest, Sha256};

use super::{check_aligned, BackendConfig, TranslateError, Translator};

/// Key-value store for translations. Keys are opaque hex digests.
pub trait TranslationCache: Send + Sync {
    fn get(&self, key: &str) -> io::Result<Option<String>>;
    fn put(&self, key: &str, value: &str) -> io::Result<()>;
    fn clear(&self) -> io::Result<()>;
}

/// One UTF-8 file per entry, named by the hashed key.
#[derive(Debug, Clone)]
pub struct DiskCache {
    dir: PathBuf,
}

impl DiskCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    fn path(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.txt"))
    }
}

impl TranslationCache for DiskCache {
    fn get(&self, key: &str) -> io::Result<Option<String>> {
        match std::fs::read_to_string(self.path(key)) {
            Ok(v) => Ok(Some(v)),
            Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(e),
        }
    }

    fn put(&self, key: &str, value: &str) -> io::Result<()> {
        std::fs::create_dir_all(&self.dir)?;
        // Write then rename so readers never see a partial entry.
        let tmp = self.dir.join(format!("{key}.tmp{}", std::process::id()));
        std::fs::write(&tmp, value)?;
        std::fs::rename(tmp, self.path(key))
    }

    fn clear(&self) -> io::Result<()> {
        match std::fs::read_dir(&self.dir) {
            Ok(entries) => {
                for entry in entries {
                    let path = entry?.path();
                    if path.extension().is_some_and(|e| e == "txt") {
                        std::fs::remove_file(path)?;
                    }
                }
                Ok(())
            }
            Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(()),
            Err(e) => Err(e),
        }
    }
}

#[derive(Debug, Default)]
pub struct MemoryCache {
    entries: Mutex<HashMap<String, String>>,
}

impl TranslationCache for MemoryCache {
    fn get(&self, key: &str) -> io::Result<Option<String>> {
        Ok(self.entries.lock().unwrap().get(key).cloned())
    }

    fn put(&self, key: &str, value: &str) -> io::Result<()> {
        self.entries.lock().unwrap().insert(key.to_string(), value.to_string());
        Ok(())
    }

    fn clear(&self) -> io::Result<()> {
        self.entries.lock().unwrap().clear();
        Ok(())
    }
}

/// Wraps a backend so identical texts are translated once. Cache failures
/// are logged and the call falls through to the backend.
pub struct CachedTranslator<T> {
    inner: T,
    cache: Arc<dyn TranslationCache>,
}

impl<T: Translator> CachedTranslator<T> {
    pub fn new(inner: T, cache: Arc<dyn TranslationCache>) -> Self {
        Self { inner, cache }
    }

    fn key(&self, text: &str) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.inner.identity().as_bytes());
        hasher.update([0]);
        hasher.update(text.as_bytes());
        hex::encode(hasher.finalize())
    }
}

impl<T: Translator> Translator for CachedTranslator<T> {
    fn translate_batch(&self, texts: &[String]) -> Result<Vec<String>, TranslateError> {
        if texts.is_empty() {
            return Err(TranslateError::EmptyBatch);
        }
        let keys: Vec<String> = texts.iter().map(|t| self.key(t)).collect();
        let mut out: Vec<Option<String>> = keys
            .iter()
            .map(|k| {
                self.cache.get(k).unwrap_or_else(|e| {
                    log::warn!("translation cache read failed, continuing uncached: {e}");
                    None
                })
            })
            .collect();

        let mut misses: Vec<usize> = Vec::new();
        for (i, hit) in out.iter().enumerate() {
            // Repeats within the batch are sent once.
            if hit.is_none() && !misses.iter().any(|&j| texts[j] == texts[i]) {
                misses.push(i);
            }
        }
        if !misses.is_empty() {
            let batch: Vec<String> = misses.iter().map(|&i| texts[i].clone()).collect();
            let translated = self.inner.translate_batch(&batch)?;
            check_aligned(batch.len(), &translated)?;
            for (&i, value) in misses.iter().zip(translated) {
                if let Err(e) = self.cache.put(&keys[i], &value) {
                    log::warn!("translation cache write failed: {e}");
                }
                for j in 0..texts.len() {
                    if out[j].is_none() && texts[j] == texts[i] {
                        out[j] = Some(value.clone());
                    }
                }
            }
        }
        Ok(out.into_iter().map(|v| v.expect("filled")).collect())
    }

    fn identity(&self) -> String {
        self.inner.identity()
    }
}

/// Builds the configured backend behind `cache`.
pub fn cached(config: &BackendConfig, cache: Arc<dyn TranslationCache>) -> Result<Arc<dyn Translator>, TranslateError> {
    Ok(Arc::new(CachedTranslator::new(config.build()?, cache)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::{AtomicUsize, Ordering};

    #[derive(Default)]
    struct Counting {
        requests: AtomicUsize,
    }

    impl Translator for Counting {
        fn translate_batch(&self, texts: &[String]) -> Result<Vec<String>, TranslateError> {
            self.requests.fetch_add(texts.len(), Ordering::SeqCst);
            Ok(texts.iter().map(|t| t.to_uppercase()).collect())
        }

        fn identity(&self) -> String {
            "counting".into()
        }
    }

    fn one(text: &str) -> Vec<String> {
        vec![text.to_string()]
    }

    #[test]
    fn repeated_text_hits_cache() {
        let dir = tempfile::tempdir().unwrap();
        let backend = CachedTranslator::new(Counting::default(), Arc::new(DiskCache::new(dir.path())));
        assert_eq!(backend.translate_batch(&one("abc")).unwrap(), ["ABC"]);
        assert_eq!(backend.translate_batch(&one("abc")).unwrap(), ["ABC"]);
        assert_eq!(backend.inner.requests.load(Ordering::SeqCst), 1);
    }

    #[test]
    fn different_texts_each_requested() {
        let backend = CachedTranslator::new(Counting::default(), Arc::new(MemoryCache::default()));
        backend.translate_batch(&one("a")).unwrap();
        backend.translate_batch(&one("b")).unwrap();
        assert_eq!(backend.inner.requests.load(Ordering::SeqCst), 2);
    }

    #[test]
    fn clearing_forces_new_request() {
        let dir = tempfile::tempdir().unwrap();
        let cache = Arc::new(DiskCache::new(dir.path()));
        let backend = CachedTranslator::new(Counting::default(), cache.clone());
        backend.translate_batch(&one("a")).unwrap();
        cache.clear().unwrap();
        backend.translate_batch(&one("a")).unwrap();
        assert_eq!(backend.inner.requests.load(Ordering::SeqCst), 2);
    }

    #[test]
    fn duplicates_in_batch_sent_once() {
        let backend = CachedTranslator::new(Counting::default(), Arc::new(MemoryCache::default()));
        let out = backend
            .translate_batch(&["x".to_string(), "y".to_string(), "x".to_string()])
            .unwrap();
        assert_eq!(out, ["X", "Y", "X"]);
        assert_eq!(backend.inner.requests.load(Ordering::SeqCst), 2);
    }

    #[test]
    fn unusable_cache_degrades_to_uncached() {
        let dir = tempfile::tempdir().unwrap();
        let blocker = dir.path().join("not-a-dir");
        std::fs::write(&blocker, "x").unwrap();
        let backend = CachedTranslator::new(Counting::default(), Arc::new(DiskCache::new(&blocker)));
        assert_eq!(backend.translate_batch(&one("a")).unwrap(), ["A"]);
        assert_eq!(backend.translate_batch(&one("a")).unwrap(), ["A"]);
        assert_eq!(backend.inner.requests.load(Ordering::SeqCst), 2);
    }
}
