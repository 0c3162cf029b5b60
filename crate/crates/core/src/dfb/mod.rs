//! Distributed framebuffer: round-robin tile ownership, workers that render
//! their tiles, a head that gathers them, and the viewer service.

pub mod head;
pub mod pipeline;
pub mod serve;
pub mod transport;
pub mod wire;
pub mod worker;

use std::fmt::Write as _;
use std::io;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::scene::SceneDesc;

pub use head::Head;
pub use pipeline::{run_pipeline, DenoiseStage, DisplayFrame, FrameRecord, FrameResult, FrameSnapshot, FrameSource, LocalRenderer};
pub use serve::{bind, serve, stats_json, ConfigPatch, ControlMessage, FrameHeader, ImageFormat, ServeOptions, ServeSummary, WorkerSpec};
pub use transport::{in_process_pair, tcp_connection, Connection, MessageSink, MessageSource, TransportError};
pub use wire::{SceneSource, TileResult, WireError, WireMessage};
pub use worker::run_worker;

#[derive(Debug, Error)]
pub enum DfbError {
    #[error("at least one worker is required")]
    ZeroWorkers,
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("scene hash mismatch: expected {expected}, got {actual}")]
    SceneHashMismatch { expected: String, actual: String },
    #[error("scene load failed: {0}")]
    SceneLoad(String),
    #[error("worker {0} lost")]
    WorkerLost(u32),
    #[error("all workers lost")]
    AllWorkersLost,
    #[error(transparent)]
    Transport(#[from] TransportError),
    #[error("cannot bind {address}: {source}")]
    BindFailure { address: String, source: io::Error },
    #[error("viewer session: {0}")]
    Viewer(String),
}

/// Round-robin ownership: tile `i` belongs to worker `i mod numWorkers`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TileOwnership {
    pub num_tiles: u32,
    pub num_workers: u32,
}

impl TileOwnership {
    pub fn owner(&self, tile: u32) -> u32 {
        tile % self.num_workers
    }

    pub fn owned(&self, worker: u32) -> Vec<u32> {
        (worker..self.num_tiles).step_by(self.num_workers as usize).collect()
    }

    pub fn loads(&self) -> Vec<u32> {
        (0..self.num_workers).map(|w| self.owned(w).len() as u32).collect()
    }
}

pub fn assign_tiles(num_tiles: u32, num_workers: u32) -> Result<TileOwnership, DfbError> {
    if num_workers == 0 {
        return Err(DfbError::ZeroWorkers);
    }
    Ok(TileOwnership { num_tiles, num_workers })
}

pub fn content_hash(bytes: &[u8]) -> [u8; 32] {
    Sha256::digest(bytes).into()
}

pub fn hex(hash: &[u8]) -> String {
    hash.iter().fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

/// A scene as shipped to workers: content-addressed BIFF.
#[derive(Clone, Debug)]
pub struct SceneShipment {
    pub source: SceneSource,
    pub hash: [u8; 32],
    /// Directory texture paths are resolved against.
    pub base_dir: PathBuf,
}

impl SceneShipment {
    pub fn from_scene(scene: &SceneDesc, base_dir: &Path) -> io::Result<Self> {
        let mut bytes = Vec::new();
        crate::ingest::write_biff(scene, &mut bytes)?;
        let hash = content_hash(&bytes);
        Ok(Self { source: SceneSource::Bytes(bytes), hash, base_dir: base_dir.to_path_buf() })
    }

    /// Ships the file's bytes, or only its path when `inline` is false
    /// (workers sharing a filesystem).
    pub fn from_biff_file(path: &Path, inline: bool) -> io::Result<Self> {
        let bytes = std::fs::read(path)?;
        let hash = content_hash(&bytes);
        let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        let source = if inline { SceneSource::Bytes(bytes) } else { SceneSource::Path(path.display().to_string()) };
        Ok(Self { source, hash, base_dir })
    }

    pub fn message(&self) -> WireMessage {
        WireMessage::SetScene {
            source: self.source.clone(),
            hash: self.hash,
            base_dir: self.base_dir.display().to_string(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn ownership_examples() {
        assert_eq!(assign_tiles(10, 1).unwrap().owned(0), (0..10).collect::<Vec<_>>());
        assert_eq!(assign_tiles(10, 4).unwrap().loads(), vec![3, 3, 2, 2]);
        assert_eq!(assign_tiles(0, 4).unwrap().loads(), vec![0; 4]);
        assert!(matches!(assign_tiles(3, 0), Err(DfbError::ZeroWorkers)));
    }

    proptest! {
        #[test]
        fn ownership_partitions_and_balances(tiles in 0u32..500, workers in 1u32..17) {
            let o = assign_tiles(tiles, workers).unwrap();
            let mut seen = vec![0u32; tiles as usize];
            for w in 0..workers {
                for t in o.owned(w) {
                    prop_assert_eq!(o.owner(t), w);
                    seen[t as usize] += 1;
                }
            }
            prop_assert!(seen.iter().all(|&c| c == 1));
            let loads = o.loads();
            prop_assert!(loads.iter().max().unwrap() - loads.iter().min().unwrap() <= 1);
        }
    }
}
