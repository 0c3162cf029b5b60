//! Shared face-texture cache.
//!
//! Resident data is kept per face: a block holds one face decoded to linear
//! `f32`. Blocks and file handles live in separate LRU lists so file I/O does
//! not hold up lookups that hit. A block larger than the whole budget is
//! decoded and returned without being made resident.

use std::fs::File;
use std::io::BufReader;
use std::num::NonZeroUsize;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, OnceLock};

use glam::DVec3;
use lru::LruCache;

use super::facetex::{self, FaceTable};
use super::TextureError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CacheConfig {
    /// `None` means unlimited.
    pub byte_budget: Option<u64>,
    pub open_handle_cap: usize,
}

impl Default for CacheConfig {
    fn default() -> Self {
        Self { byte_budget: None, open_handle_cap: 100 }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct CacheCounters {
    pub hits: u64,
    pub misses: u64,
    pub evictions: u64,
    pub file_opens: u64,
    pub resident_bytes: u64,
    pub open_handles: u64,
}

struct FaceBlock {
    res: [u16; 2],
    channels: u8,
    texels: Vec<f32>,
}

impl FaceBlock {
    fn bytes(&self) -> u64 {
        (self.texels.len() * 4) as u64
    }
}

struct Blocks {
    lru: LruCache<(u32, u32), Arc<FaceBlock>>,
    resident: u64,
}

pub struct FaceTextureCache {
    paths: Vec<String>,
    tables: Vec<OnceLock<FaceTable>>,
    config: CacheConfig,
    blocks: Mutex<Blocks>,
    handles: Mutex<LruCache<u32, BufReader<File>>>,
    hits: AtomicU64,
    misses: AtomicU64,
    evictions: AtomicU64,
    file_opens: AtomicU64,
}

impl FaceTextureCache {
    pub fn new(paths: Vec<String>, config: CacheConfig) -> Self {
        let cap = NonZeroUsize::new(config.open_handle_cap.max(1)).unwrap();
        Self {
            tables: paths.iter().map(|_| OnceLock::new()).collect(),
            paths,
            config,
            blocks: Mutex::new(Blocks { lru: LruCache::unbounded(), resident: 0 }),
            handles: Mutex::new(LruCache::new(cap)),
            hits: AtomicU64::new(0),
            misses: AtomicU64::new(0),
            evictions: AtomicU64::new(0),
            file_opens: AtomicU64::new(0),
        }
    }

    pub fn config(&self) -> CacheConfig {
        self.config
    }

    pub fn texture_count(&self) -> usize {
        self.paths.len()
    }

    pub fn path(&self, texture: u32) -> Option<&str> {
        self.paths.get(texture as usize).map(String::as_str)
    }

    pub fn counters(&self) -> CacheCounters {
        let (resident_bytes, open_handles) = {
            let b = self.blocks.lock().unwrap();
            let h = self.handles.lock().unwrap();
            (b.resident, h.len() as u64)
        };
        CacheCounters {
            hits: self.hits.load(Ordering::Relaxed),
            misses: self.misses.load(Ordering::Relaxed),
            evictions: self.evictions.load(Ordering::Relaxed),
            file_opens: self.file_opens.load(Ordering::Relaxed),
            resident_bytes,
            open_handles,
        }
    }

    /// Drops every resident block and open handle; counters are kept.
    pub fn clear(&self) {
        let mut b = self.blocks.lock().unwrap();
        b.lru.clear();
        b.resident = 0;
        self.handles.lock().unwrap().clear();
    }

    fn with_handle<T>(
        &self,
        texture: u32,
        f: impl FnOnce(&mut BufReader<File>) -> Result<T, TextureError>,
    ) -> Result<T, TextureError> {
        let path = &self.paths[texture as usize];
        let mut handles = self.handles.lock().unwrap();
        if !handles.contains(&texture) {
            let file = File::open(path).map_err(|e| TextureError::Io { path: path.clone(), message: e.to_string() })?;
            self.file_opens.fetch_add(1, Ordering::Relaxed);
            // `push` evicts the least recently used handle when at capacity
            handles.push(texture, BufReader::new(file));
        }
        f(handles.get_mut(&texture).unwrap())
    }

    /// Face table for `texture`, read from disk on first use.
    pub fn table(&self, texture: u32) -> Result<&FaceTable, TextureError> {
        let slot = self.tables.get(texture as usize).ok_or(TextureError::UnknownTexture(texture))?;
        if let Some(t) = slot.get() {
            return Ok(t);
        }
        let path = &self.paths[texture as usize];
        let table = self.with_handle(texture, |r| {
            use std::io::{Seek, SeekFrom};
            r.seek(SeekFrom::Start(0)).map_err(|e| TextureError::Io { path: path.clone(), message: e.to_string() })?;
            facetex::read_table(r, path)
        })?;
        Ok(slot.get_or_init(|| table))
    }

    pub fn face_count(&self, texture: u32) -> Result<usize, TextureError> {
        Ok(self.table(texture)?.faces.len())
    }

    fn block(&self, texture: u32, face: u32) -> Result<Arc<FaceBlock>, TextureError> {
        let table = self.table(texture)?;
        if face as usize >= table.faces.len() {
            return Err(TextureError::FaceIdOutOfRange { texture, face, face_count: table.faces.len() });
        }
        let key = (texture, face);
        if let Some(b) = self.blocks.lock().unwrap().lru.get(&key) {
            self.hits.fetch_add(1, Ordering::Relaxed);
            return Ok(b.clone());
        }
        self.misses.fetch_add(1, Ordering::Relaxed);
        let path = &self.paths[texture as usize];
        let texels = self.with_handle(texture, |r| facetex::read_face(r, table, face as usize, path))?;
        let block = Arc::new(FaceBlock { res: table.faces[face as usize].res, channels: table.channels, texels });
        let size = block.bytes();
        let budget = self.config.byte_budget.unwrap_or(u64::MAX);
        if size > budget {
            return Ok(block);
        }
        let mut b = self.blocks.lock().unwrap();
        if let Some(existing) = b.lru.get(&key) {
            return Ok(existing.clone());
        }
        while b.resident + size > budget {
            match b.lru.pop_lru() {
                Some((_, old)) => {
                    b.resident -= old.bytes();
                    self.evictions.fetch_add(1, Ordering::Relaxed);
                }
                None => break,
            }
        }
        b.resident += size;
        b.lru.put(key, block.clone());
        Ok(block)
    }

    /// Bilinear lookup of `(u, v)` within one face, in linear RGB.
    pub fn sample(&self, texture: u32, face: u32, u: f64, v: f64) -> Result<DVec3, TextureError> {
        let block = self.block(texture, face)?;
        Ok(facetex::bilinear(block.res, block.channels, &block.texels, u.clamp(0.0, 1.0), v.clamp(0.0, 1.0)))
    }
}

pub fn sample_texture(cache: &FaceTextureCache, texture: u32, face: u32, u: f64, v: f64) -> Result<DVec3, TextureError> {
    cache.sample(texture, face, u, v)
}
