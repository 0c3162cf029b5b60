//! Worker wire format: `u32` length, `u16` tag, little-endian payload.
//! The length counts the tag and payload.

use thiserror::Error;

use crate::accel::TraversalCounters;
use crate::render::{CameraState, CategoryTimes, Mode, RenderConfig, RenderStats, Tile};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum WireError {
    #[error("message truncated")]
    Truncated,
    #[error("unknown message tag {0}")]
    UnknownTag(u16),
    #[error("malformed payload: {0}")]
    BadPayload(&'static str),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SceneSource {
    /// BIFF file contents.
    Bytes(Vec<u8>),
    /// BIFF file readable by the worker.
    Path(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct TileResult {
    pub frame_index: u64,
    pub tile: Tile,
}

#[derive(Clone, Debug, PartialEq)]
pub enum WireMessage {
    Hello { worker_id: u32 },
    /// `hash` is the SHA-256 of the BIFF bytes.
    SetScene { source: SceneSource, hash: [u8; 32], base_dir: String },
    SetConfig { config: RenderConfig, width: u32, height: u32 },
    RenderFrame { frame_index: u64, camera: CameraState },
    TileResult(TileResult),
    FrameComplete { frame_index: u64, stats: RenderStats },
    CameraUpdate { camera: CameraState },
    /// The receiver owns tiles `i` with `i % slots == slot`.
    Assign { slot: u32, slots: u32 },
    Shutdown,
}

impl WireMessage {
    pub fn tag(&self) -> u16 {
        match self {
            WireMessage::Hello { .. } => 1,
            WireMessage::SetScene { .. } => 2,
            WireMessage::SetConfig { .. } => 3,
            WireMessage::RenderFrame { .. } => 4,
            WireMessage::TileResult(_) => 5,
            WireMessage::FrameComplete { .. } => 6,
            WireMessage::CameraUpdate { .. } => 7,
            WireMessage::Assign { .. } => 8,
            WireMessage::Shutdown => 9,
        }
    }

    /// Full frame including the length prefix.
    pub fn encode(&self) -> Vec<u8> {
        let mut w = Writer(Vec::with_capacity(64));
        w.u32(0);
        w.u16(self.tag());
        match self {
            WireMessage::Hello { worker_id } => w.u32(*worker_id),
            WireMessage::SetScene { source, hash, base_dir } => {
                match source {
                    SceneSource::Bytes(b) => {
                        w.u8(0);
                        w.bytes(b);
                    }
                    SceneSource::Path(p) => {
                        w.u8(1);
                        w.bytes(p.as_bytes());
                    }
                }
                w.0.extend_from_slice(hash);
                w.bytes(base_dir.as_bytes());
            }
            WireMessage::SetConfig { config, width, height } => {
                w.u32(config.max_path_depth);
                w.u32(config.samples_per_frame);
                w.u16(config.mode.code());
                w.u8(config.deterministic as u8);
                w.u64(config.seed);
                w.u32(*width);
                w.u32(*height);
            }
            WireMessage::RenderFrame { frame_index, camera } => {
                w.u64(*frame_index);
                w.camera(camera);
            }
            WireMessage::TileResult(r) => {
                let t = &r.tile;
                w.u64(r.frame_index);
                for v in [t.index, t.x0, t.y0, t.width, t.height, t.sample_count] {
                    w.u32(v);
                }
                w.0.reserve(t.pixel_count() * 40);
                for buf in [&t.color, &t.albedo, &t.normal] {
                    for p in buf.iter() {
                        for c in p {
                            w.f32(*c);
                        }
                    }
                }
                for c in &t.cost {
                    w.u32(*c);
                }
            }
            WireMessage::FrameComplete { frame_index, stats } => {
                w.u64(*frame_index);
                for v in stats.category_seconds.to_array() {
                    w.f64(v);
                }
                w.u64(stats.rays_traced);
                w.f64(stats.frame_millis);
                w.u64(stats.pixel_count);
                w.u32(stats.samples_per_pixel);
                w.u64(stats.nonfinite_clamped);
                let tc = &stats.traversal;
                for v in [tc.rays, tc.tlas_nodes, tc.blas_nodes, tc.instance_visits, tc.primitive_tests] {
                    w.u64(v);
                }
            }
            WireMessage::CameraUpdate { camera } => w.camera(camera),
            WireMessage::Assign { slot, slots } => {
                w.u32(*slot);
                w.u32(*slots);
            }
            WireMessage::Shutdown => {}
        }
        let len = (w.0.len() - 4) as u32;
        w.0[..4].copy_from_slice(&len.to_le_bytes());
        w.0
    }

    /// Decodes the body of a frame: tag and payload, without the length.
    pub fn decode(body: &[u8]) -> Result<WireMessage, WireError> {
        let mut r = Reader(body);
        let tag = r.u16()?;
        let msg = match tag {
            1 => WireMessage::Hello { worker_id: r.u32()? },
            2 => {
                let kind = r.u8()?;
                let data = r.bytes()?.to_vec();
                let source = match kind {
                    0 => SceneSource::Bytes(data),
                    1 => SceneSource::Path(String::from_utf8(data).map_err(|_| WireError::BadPayload("path"))?),
                    _ => return Err(WireError::BadPayload("scene source kind")),
                };
                let hash: [u8; 32] = r.take(32)?.try_into().unwrap();
                let base_dir =
                    String::from_utf8(r.bytes()?.to_vec()).map_err(|_| WireError::BadPayload("base dir"))?;
                WireMessage::SetScene { source, hash, base_dir }
            }
            3 => {
                let max_path_depth = r.u32()?;
                let samples_per_frame = r.u32()?;
                let mode = Mode::from_code(r.u16()?).ok_or(WireError::BadPayload("mode"))?;
                let deterministic = r.u8()? != 0;
                let seed = r.u64()?;
                let config = RenderConfig { max_path_depth, samples_per_frame, mode, deterministic, seed };
                WireMessage::SetConfig { config, width: r.u32()?, height: r.u32()? }
            }
            4 => WireMessage::RenderFrame { frame_index: r.u64()?, camera: r.camera()? },
            5 => {
                let frame_index = r.u64()?;
                let [index, x0, y0, width, height, sample_count] =
                    [r.u32()?, r.u32()?, r.u32()?, r.u32()?, r.u32()?, r.u32()?];
                let n = width as usize * height as usize;
                if r.0.len() != n * 40 {
                    return Err(WireError::BadPayload("tile payload length"));
                }
                let mut tile = Tile::new(index, x0, y0, width, height);
                tile.sample_count = sample_count;
                for buf in [&mut tile.color, &mut tile.albedo, &mut tile.normal] {
                    for p in buf.iter_mut() {
                        *p = [r.f32()?, r.f32()?, r.f32()?];
                    }
                }
                for c in tile.cost.iter_mut() {
                    *c = r.u32()?;
                }
                WireMessage::TileResult(TileResult { frame_index, tile })
            }
            6 => {
                let frame_index = r.u64()?;
                let secs = [r.f64()?, r.f64()?, r.f64()?, r.f64()?, r.f64()?];
                let mut stats = RenderStats {
                    category_seconds: CategoryTimes::from_array(secs),
                    rays_traced: r.u64()?,
                    frame_millis: r.f64()?,
                    pixel_count: r.u64()?,
                    samples_per_pixel: r.u32()?,
                    nonfinite_clamped: r.u64()?,
                    traversal: TraversalCounters {
                        rays: r.u64()?,
                        tlas_nodes: r.u64()?,
                        blas_nodes: r.u64()?,
                        instance_visits: r.u64()?,
                        primitive_tests: r.u64()?,
                    },
                    ..Default::default()
                };
                stats.refresh_derived();
                WireMessage::FrameComplete { frame_index, stats }
            }
            7 => WireMessage::CameraUpdate { camera: r.camera()? },
            8 => WireMessage::Assign { slot: r.u32()?, slots: r.u32()? },
            9 => WireMessage::Shutdown,
            t => return Err(WireError::UnknownTag(t)),
        };
        if !r.0.is_empty() {
            return Err(WireError::BadPayload("trailing bytes"));
        }
        Ok(msg)
    }

    /// Decodes a complete frame, checking the length prefix.
    pub fn decode_frame(frame: &[u8]) -> Result<WireMessage, WireError> {
        if frame.len() < 4 {
            return Err(WireError::Truncated);
        }
        let len = u32::from_le_bytes(frame[..4].try_into().unwrap()) as usize;
        match frame.len() - 4 {
            l if l < len => Err(WireError::Truncated),
            l if l > len => Err(WireError::BadPayload("frame longer than its length prefix")),
            _ => Self::decode(&frame[4..]),
        }
    }
}

struct Writer(Vec<u8>);

impl Writer {
    fn u8(&mut self, v: u8) {
        self.0.push(v);
    }
    fn u16(&mut self, v: u16) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn u32(&mut self, v: u32) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn f32(&mut self, v: f32) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn f64(&mut self, v: f64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn bytes(&mut self, b: &[u8]) {
        self.u64(b.len() as u64);
        self.0.extend_from_slice(b);
    }
    fn camera(&mut self, c: &CameraState) {
        for v in c.position.iter().chain(&c.target).chain(&c.up) {
            self.f32(*v);
        }
        self.f32(c.fov);
    }
}

struct Reader<'a>(&'a [u8]);

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], WireError> {
        if self.0.len() < n {
            return Err(WireError::Truncated);
        }
        let (a, b) = self.0.split_at(n);
        self.0 = b;
        Ok(a)
    }
    fn arr<const N: usize>(&mut self) -> Result<[u8; N], WireError> {
        Ok(self.take(N)?.try_into().unwrap())
    }
    fn u8(&mut self) -> Result<u8, WireError> {
        Ok(self.take(1)?[0])
    }
    fn u16(&mut self) -> Result<u16, WireError> {
        self.arr().map(u16::from_le_bytes)
    }
    fn u32(&mut self) -> Result<u32, WireError> {
        self.arr().map(u32::from_le_bytes)
    }
    fn u64(&mut self) -> Result<u64, WireError> {
        self.arr().map(u64::from_le_bytes)
    }
    fn f32(&mut self) -> Result<f32, WireError> {
        self.arr().map(f32::from_le_bytes)
    }
    fn f64(&mut self) -> Result<f64, WireError> {
        self.arr().map(f64::from_le_bytes)
    }
    fn bytes(&mut self) -> Result<&'a [u8], WireError> {
        let n = self.u64()?;
        self.take(usize::try_from(n).map_err(|_| WireError::Truncated)?)
    }
    fn camera(&mut self) -> Result<CameraState, WireError> {
        let mut v = [0f32; 10];
        for x in v.iter_mut() {
            *x = self.f32()?;
        }
        Ok(CameraState { position: [v[0], v[1], v[2]], target: [v[3], v[4], v[5]], up: [v[6], v[7], v[8]], fov: v[9] })
    }
}
