//! Worker loop: renders owned tiles and streams them back.

use std::path::PathBuf;

use super::transport::Connection;
use super::wire::{SceneSource, TileResult, WireMessage};
use super::{content_hash, hex, DfbError};
use crate::ingest::biff::read_biff_bytes;
use crate::render::{render_tiles, CameraState, FrameBuffer, RenderConfig, RenderScene, RenderStats, SceneOptions};

fn load_scene(source: SceneSource, hash: [u8; 32], base_dir: String) -> Result<RenderScene, DfbError> {
    let bytes = match source {
        SceneSource::Bytes(b) => b,
        SceneSource::Path(p) => std::fs::read(&p).map_err(|e| DfbError::SceneLoad(format!("{p}: {e}")))?,
    };
    let actual = content_hash(&bytes);
    if actual != hash {
        return Err(DfbError::SceneHashMismatch { expected: hex(&hash), actual: hex(&actual) });
    }
    let desc = read_biff_bytes(&bytes).map_err(|e| DfbError::SceneLoad(e.to_string()))?;
    let opts = SceneOptions { base_dir: PathBuf::from(base_dir), ..Default::default() };
    RenderScene::build(desc, &opts).map_err(|e| DfbError::SceneLoad(e.to_string()))
}

struct Accumulation {
    fb: FrameBuffer,
    config: RenderConfig,
    camera: Option<CameraState>,
    /// First frame index of the current accumulation sequence.
    start: Option<u64>,
}

impl Accumulation {
    fn reset(&mut self) {
        self.fb.clear();
        self.start = None;
    }
}

/// Serves one head until `Shutdown`. Tiles are accumulated locally; a
/// tile acquired mid-sequence is brought up to date by re-rendering the
/// frames it missed, which the deterministic sampler makes bit-exact.
pub fn run_worker(conn: Connection, worker_id: u32) -> Result<(), DfbError> {
    let Connection { mut sink, mut source } = conn;
    sink.send(&WireMessage::Hello { worker_id })?;
    let mut scene: Option<RenderScene> = None;
    let mut acc: Option<Accumulation> = None;
    let (mut slot, mut slots) = (0u32, 1u32);
    let mut last_frame: Option<u64> = None;
    loop {
        match source.recv()? {
            WireMessage::SetScene { source, hash, base_dir } => {
                scene = Some(load_scene(source, hash, base_dir)?);
                if let Some(a) = acc.as_mut() {
                    a.reset();
                }
            }
            WireMessage::SetConfig { config, width, height } => {
                acc = Some(Accumulation { fb: FrameBuffer::new(width, height), config, camera: None, start: None });
            }
            WireMessage::CameraUpdate { camera } => {
                let a = acc.as_mut().ok_or_else(|| DfbError::Protocol("CameraUpdate before SetConfig".into()))?;
                a.reset();
                a.camera = Some(camera);
            }
            WireMessage::Assign { slot: s, slots: n } => {
                if n == 0 || s >= n {
                    return Err(DfbError::Protocol(format!("invalid assignment {s}/{n}")));
                }
                (slot, slots) = (s, n);
            }
            WireMessage::RenderFrame { frame_index, camera } => {
                let scene = scene.as_ref().ok_or_else(|| DfbError::Protocol("RenderFrame before SetScene".into()))?;
                let a = acc.as_mut().ok_or_else(|| DfbError::Protocol("RenderFrame before SetConfig".into()))?;
                if last_frame.is_some_and(|l| frame_index < l) {
                    return Err(DfbError::Protocol(format!("frame index went back to {frame_index}")));
                }
                last_frame = Some(frame_index);
                if a.camera != Some(camera) {
                    a.reset();
                    a.camera = Some(camera);
                }
                let start = *a.start.get_or_insert(frame_index);
                let spf = a.config.samples_per_frame.max(1);
                let owned: Vec<u32> = (slot..a.fb.tile_count() as u32).step_by(slots as usize).collect();
                let mut parts = Vec::new();
                for f in start..=frame_index {
                    let behind: Vec<u32> = owned
                        .iter()
                        .copied()
                        .filter(|&t| start + (a.fb.tiles[t as usize].sample_count / spf) as u64 == f)
                        .collect();
                    if !behind.is_empty() {
                        parts.push(render_tiles(scene, &mut a.fb, &a.config, &camera, f, &behind));
                    }
                }
                for &t in &owned {
                    let tile = a.fb.tiles[t as usize].clone();
                    sink.send(&WireMessage::TileResult(TileResult { frame_index, tile }))?;
                }
                let wall: f64 = parts.iter().map(|p| p.frame_millis * 1e-3).sum();
                let mut stats = RenderStats::merge(&parts, wall);
                stats.samples_per_pixel = spf;
                sink.send(&WireMessage::FrameComplete { frame_index, stats })?;
            }
            WireMessage::Shutdown => return Ok(()),
            m @ (WireMessage::Hello { .. } | WireMessage::TileResult(_) | WireMessage::FrameComplete { .. }) => {
                return Err(DfbError::Protocol(format!("unexpected message tag {} at worker", m.tag())));
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dfb::transport::in_process_pair;
    use crate::dfb::SceneShipment;
    use crate::render::render_frame;
    use crate::scene::furnace_scene;
    use crate::shade::DisneyMaterial;

    fn setup() -> (SceneShipment, RenderScene, CameraState) {
        let desc = furnace_scene(DisneyMaterial::default());
        let ship = SceneShipment::from_scene(&desc, std::path::Path::new(".")).unwrap();
        let rs = RenderScene::build(desc, &SceneOptions::default()).unwrap();
        let cam = rs.default_camera;
        (ship, rs, cam)
    }

    #[test]
    fn renders_owned_tiles_and_restarts_on_camera_update() {
        let (ship, rs, cam) = setup();
        let (mut head, w) = in_process_pair();
        let t = std::thread::spawn(move || run_worker(w, 5));
        assert_eq!(head.source.recv().unwrap(), WireMessage::Hello { worker_id: 5 });
        let config = RenderConfig::default();
        head.sink.send(&ship.message()).unwrap();
        head.sink.send(&WireMessage::SetConfig { config, width: 100, height: 70 }).unwrap();
        head.sink.send(&WireMessage::RenderFrame { frame_index: 0, camera: cam }).unwrap();
        let mut local = FrameBuffer::new(100, 70);
        render_frame(&rs, &mut local, &config, &cam, 0);
        for i in 0..4 {
            match head.source.recv().unwrap() {
                WireMessage::TileResult(r) => assert_eq!(r.tile, local.tiles[i]),
                m => panic!("{m:?}"),
            }
        }
        assert!(matches!(head.source.recv().unwrap(), WireMessage::FrameComplete { frame_index: 0, .. }));

        let moved = CameraState { position: [0.0, 0.5, 3.0], ..cam };
        head.sink.send(&WireMessage::CameraUpdate { camera: moved }).unwrap();
        head.sink.send(&WireMessage::RenderFrame { frame_index: 1, camera: moved }).unwrap();
        for _ in 0..4 {
            match head.source.recv().unwrap() {
                WireMessage::TileResult(r) => assert_eq!(r.tile.sample_count, config.samples_per_frame),
                m => panic!("{m:?}"),
            }
        }
        head.source.recv().unwrap();
        head.sink.send(&WireMessage::Shutdown).unwrap();
        t.join().unwrap().unwrap();
    }

    #[test]
    fn render_before_scene_is_protocol_error() {
        let (mut head, w) = in_process_pair();
        let t = std::thread::spawn(move || run_worker(w, 0));
        head.source.recv().unwrap();
        head.sink.send(&WireMessage::SetConfig { config: RenderConfig::default(), width: 8, height: 8 }).unwrap();
        head.sink.send(&WireMessage::RenderFrame { frame_index: 0, camera: CameraState::default() }).unwrap();
        assert!(matches!(t.join().unwrap(), Err(DfbError::Protocol(_))));
    }

    #[test]
    fn hash_mismatch_is_rejected() {
        let (mut ship, _, _) = setup();
        ship.hash[0] ^= 1;
        let (mut head, w) = in_process_pair();
        let t = std::thread::spawn(move || run_worker(w, 0));
        head.source.recv().unwrap();
        head.sink.send(&ship.message()).unwrap();
        assert!(matches!(t.join().unwrap(), Err(DfbError::SceneHashMismatch { .. })));
    }
}
