//! Viewer service: one WebSocket session streaming progressive frames.
//!
//! Text frames carry JSON control messages (`camera`, `config`,
//! `stats-request`); binary frames carry images behind a 20-byte
//! little-endian header.

use std::io::ErrorKind;
use std::net::{TcpListener, TcpStream};
use std::str::FromStr;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::json;
use tungstenite::protocol::frame::coding::CloseCode;
use tungstenite::protocol::CloseFrame;
use tungstenite::{Message, WebSocket};

use super::head::Head;
use super::pipeline::{DenoiseStage, DisplayFrame, FrameSnapshot, FrameSource, LocalRenderer};
use super::transport::{in_process_pair, tcp_connection};
use super::worker::run_worker;
use super::{DfbError, SceneShipment};
use crate::render::{CameraState, DenoiseParams, DisplayImage, Mode, RenderConfig, RenderScene, RenderStats, SceneOptions, CATEGORY_NAMES};
use crate::scene::SceneDesc;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ImageFormat {
    /// Packed 8-bit sRGB rows.
    #[default]
    Raw,
    Png,
}

impl ImageFormat {
    pub fn code(self) -> u16 {
        match self {
            ImageFormat::Raw => 0,
            ImageFormat::Png => 1,
        }
    }
}

/// Header of a binary frame message.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FrameHeader {
    pub frame_index: u32,
    pub frame_in_sequence: u32,
    pub mode: u16,
    pub format: u16,
    pub width: u32,
    pub height: u32,
}

impl FrameHeader {
    pub const SIZE: usize = 20;

    pub fn encode(&self) -> [u8; Self::SIZE] {
        let mut b = [0u8; Self::SIZE];
        b[0..4].copy_from_slice(&self.frame_index.to_le_bytes());
        b[4..8].copy_from_slice(&self.frame_in_sequence.to_le_bytes());
        b[8..10].copy_from_slice(&self.mode.to_le_bytes());
        b[10..12].copy_from_slice(&self.format.to_le_bytes());
        b[12..16].copy_from_slice(&self.width.to_le_bytes());
        b[16..20].copy_from_slice(&self.height.to_le_bytes());
        b
    }

    /// Splits a binary message into header and payload.
    pub fn decode(msg: &[u8]) -> Option<(FrameHeader, &[u8])> {
        if msg.len() < Self::SIZE {
            return None;
        }
        let u32_at = |i: usize| u32::from_le_bytes(msg[i..i + 4].try_into().unwrap());
        let u16_at = |i: usize| u16::from_le_bytes(msg[i..i + 2].try_into().unwrap());
        let h = FrameHeader {
            frame_index: u32_at(0),
            frame_in_sequence: u32_at(4),
            mode: u16_at(8),
            format: u16_at(10),
            width: u32_at(12),
            height: u32_at(16),
        };
        Some((h, &msg[Self::SIZE..]))
    }
}

/// Partial configuration update; absent fields keep their value.
#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ConfigPatch {
    pub mode: Option<Mode>,
    pub spp: Option<u32>,
    pub depth: Option<u32>,
    pub seed: Option<u64>,
    pub deterministic: Option<bool>,
    pub width: Option<u32>,
    pub height: Option<u32>,
    pub denoise: Option<bool>,
    pub exposure: Option<f32>,
    pub format: Option<ImageFormat>,
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum ControlMessage {
    Camera { position: [f32; 3], target: [f32; 3], up: [f32; 3], fov: f32 },
    Config(ConfigPatch),
    StatsRequest,
}

/// Statistics message in reply to `stats-request`.
pub fn stats_json(frame_index: u64, stats: &RenderStats, spp: u32) -> serde_json::Value {
    let shares: serde_json::Map<String, serde_json::Value> = CATEGORY_NAMES
        .iter()
        .zip(stats.shares.to_array())
        .map(|(n, s)| (n.to_string(), json!(s * 100.0)))
        .collect();
    json!({
        "type": "stats",
        "frameIndex": frame_index,
        "frameMillis": stats.frame_millis,
        "sharePercents": shares,
        "raysPerPixel": stats.rays_per_pixel,
        "spp": spp,
    })
}

#[derive(Clone, Debug)]
pub struct ServeOptions {
    pub denoise: bool,
    pub exposure: f32,
    pub format: ImageFormat,
    /// End the session after this many frames.
    pub max_frames: Option<u64>,
    /// How long to wait for client input between frames.
    pub poll: Duration,
}

impl Default for ServeOptions {
    fn default() -> Self {
        Self { denoise: false, exposure: 1.0, format: ImageFormat::Raw, max_frames: None, poll: Duration::from_millis(1) }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ServeSummary {
    pub frames_sent: u64,
    pub frames_rendered: u64,
    /// Close code sent by the server, if it closed the session.
    pub close_code: Option<u16>,
}

pub fn bind(address: &str) -> Result<TcpListener, DfbError> {
    TcpListener::bind(address).map_err(|source| DfbError::BindFailure { address: address.to_string(), source })
}

enum Poll {
    Idle,
    Control(ControlMessage),
    Malformed(String),
    Closed,
}

fn poll(ws: &mut WebSocket<TcpStream>) -> Poll {
    match ws.read() {
        Ok(Message::Text(t)) => match serde_json::from_str::<ControlMessage>(&t) {
            Ok(c) => Poll::Control(c),
            Err(e) => Poll::Malformed(e.to_string()),
        },
        Ok(Message::Binary(_)) => Poll::Malformed("binary messages are not accepted".into()),
        Ok(Message::Close(_)) => Poll::Closed,
        Ok(_) => Poll::Idle,
        Err(tungstenite::Error::Io(e)) if matches!(e.kind(), ErrorKind::WouldBlock | ErrorKind::TimedOut) => Poll::Idle,
        Err(_) => Poll::Closed,
    }
}

struct Session {
    opts: ServeOptions,
    epoch: u64,
    last: Option<(u64, RenderStats, u32)>,
}

impl Session {
    fn apply(&mut self, source: &mut dyn FrameSource, msg: ControlMessage) -> Result<Option<String>, DfbError> {
        match msg {
            ControlMessage::Camera { position, target, up, fov } => {
                source.set_camera(CameraState { position, target, up, fov })?;
                self.epoch += 1;
            }
            ControlMessage::Config(p) => {
                self.opts.denoise = p.denoise.unwrap_or(self.opts.denoise);
                self.opts.exposure = p.exposure.unwrap_or(self.opts.exposure);
                self.opts.format = p.format.unwrap_or(self.opts.format);
                let c = source.config();
                let fb = source.framebuffer();
                let config = RenderConfig {
                    mode: p.mode.unwrap_or(c.mode),
                    samples_per_frame: p.spp.unwrap_or(c.samples_per_frame).max(1),
                    max_path_depth: p.depth.unwrap_or(c.max_path_depth),
                    seed: p.seed.unwrap_or(c.seed),
                    deterministic: p.deterministic.unwrap_or(c.deterministic),
                };
                let (w, h) = (p.width.unwrap_or(fb.width).max(1), p.height.unwrap_or(fb.height).max(1));
                if config != c || (w, h) != (fb.width, fb.height) {
                    source.set_config(config, w, h)?;
                    self.epoch += 1;
                }
            }
            ControlMessage::StatsRequest => {
                let (f, stats, spp) = self.last.clone().unwrap_or_default();
                return Ok(Some(stats_json(f, &stats, spp).to_string()));
            }
        }
        Ok(None)
    }

    fn frame_message(&self, d: &DisplayFrame) -> Result<Vec<u8>, DfbError> {
        let s = &d.snapshot;
        let img = DisplayImage::from_linear(s.width, s.height, &d.image, &s.cost, s.samples, s.mode, self.opts.exposure);
        let payload = match self.opts.format {
            ImageFormat::Raw => img.rgb,
            ImageFormat::Png => img.encode_png().map_err(|e| DfbError::Viewer(e.to_string()))?,
        };
        let header = FrameHeader {
            frame_index: s.frame_index as u32,
            frame_in_sequence: s.frame_in_sequence,
            mode: s.mode.code(),
            format: self.opts.format.code(),
            width: s.width,
            height: s.height,
        };
        let mut out = header.encode().to_vec();
        out.extend_from_slice(&payload);
        Ok(out)
    }
}

fn close(ws: &mut WebSocket<TcpStream>, code: CloseCode, reason: &str) {
    let _ = ws.close(Some(CloseFrame { code, reason: reason.to_string().into() }));
    for _ in 0..200 {
        match ws.read() {
            Err(tungstenite::Error::Io(e)) if matches!(e.kind(), ErrorKind::WouldBlock | ErrorKind::TimedOut) => {}
            Err(_) => break,
            Ok(_) => {}
        }
    }
}

/// Accepts one viewer and streams frames until it disconnects, sends a
/// malformed message (closed with 1007 or 1003) or `max_frames` is reached.
pub fn serve(listener: &TcpListener, source: &mut dyn FrameSource, options: &ServeOptions) -> Result<ServeSummary, DfbError> {
    let (stream, _) = listener.accept().map_err(|e| DfbError::Viewer(e.to_string()))?;
    let mut ws = tungstenite::accept(stream).map_err(|e| DfbError::Viewer(e.to_string()))?;
    ws.get_ref().set_read_timeout(Some(options.poll.max(Duration::from_micros(100)))).map_err(|e| DfbError::Viewer(e.to_string()))?;
    let mut session = Session { opts: options.clone(), epoch: 0, last: None };
    let mut stage = DenoiseStage::spawn(DenoiseParams::default());
    let mut summary = ServeSummary::default();
    loop {
        loop {
            match poll(&mut ws) {
                Poll::Idle => break,
                Poll::Closed => return Ok(summary),
                Poll::Malformed(reason) => {
                    let code = if reason.starts_with("binary") { CloseCode::Unsupported } else { CloseCode::Invalid };
                    close(&mut ws, code, &reason);
                    summary.close_code = Some(code.into());
                    return Ok(summary);
                }
                Poll::Control(c) => {
                    if let Some(reply) = session.apply(source, c)? {
                        if ws.send(Message::Text(reply)).is_err() {
                            return Ok(summary);
                        }
                    }
                }
            }
        }
        let result = source.render_next()?;
        summary.frames_rendered += 1;
        let fb = source.framebuffer();
        session.last = Some((result.frame_index, result.stats.clone(), fb.sample_count().unwrap_or(0)));
        stage.submit(FrameSnapshot::capture(fb, &result, source.config().mode, session.epoch), session.opts.denoise);
        while let Some(d) = stage.try_next() {
            if d.snapshot.epoch != session.epoch {
                continue;
            }
            if ws.send(Message::Binary(session.frame_message(&d)?)).is_err() {
                return Ok(summary);
            }
            summary.frames_sent += 1;
            if session.opts.max_frames.is_some_and(|m| summary.frames_sent >= m) {
                close(&mut ws, CloseCode::Normal, "frame limit reached");
                summary.close_code = Some(CloseCode::Normal.into());
                return Ok(summary);
            }
        }
    }
}

/// Where frames are rendered: in this process, on in-process workers or
/// on TCP workers.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum WorkerSpec {
    /// Render on the serving thread's pool.
    Inline,
    /// `local:N`: N worker threads over the in-process transport.
    Local(u32),
    /// `tcp:HOST:PORT:N`: wait for N `elephant worker` connections.
    Tcp { listen: String, count: u32 },
}

impl FromStr for WorkerSpec {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let count = |n: &str| n.parse::<u32>().ok().filter(|&n| n > 0).ok_or_else(|| format!("bad worker count `{n}`"));
        if s == "inline" {
            return Ok(WorkerSpec::Inline);
        }
        if let Some(n) = s.strip_prefix("local:") {
            return Ok(WorkerSpec::Local(count(n)?));
        }
        if let Some(rest) = s.strip_prefix("tcp:") {
            let (addr, n) = rest.rsplit_once(':').ok_or("expected tcp:HOST:PORT:N")?;
            return Ok(WorkerSpec::Tcp { listen: addr.to_string(), count: count(n)? });
        }
        Err(format!("unknown worker spec `{s}` (inline, local:N, tcp:HOST:PORT:N)"))
    }
}

impl WorkerSpec {
    /// Brings up a frame source for `desc`.
    pub fn start(
        &self,
        desc: SceneDesc,
        options: &SceneOptions,
        config: RenderConfig,
        width: u32,
        height: u32,
    ) -> Result<Box<dyn FrameSource>, DfbError> {
        let camera = desc.camera.as_ref().map(CameraState::from).unwrap_or_default();
        let ship = || SceneShipment::from_scene(&desc, &options.base_dir).map_err(|e| DfbError::SceneLoad(e.to_string()));
        match self {
            WorkerSpec::Inline => {
                let scene = RenderScene::build(desc.clone(), options).map_err(|e| DfbError::SceneLoad(e.to_string()))?;
                Ok(Box::new(LocalRenderer::new(scene, config, width, height)))
            }
            WorkerSpec::Local(n) => {
                let shipment = ship()?;
                let conns = (0..*n)
                    .map(|id| {
                        let (head, worker) = in_process_pair();
                        std::thread::spawn(move || run_worker(worker, id));
                        head
                    })
                    .collect();
                Ok(Box::new(Head::start(conns, &shipment, config, width, height, camera)?))
            }
            WorkerSpec::Tcp { listen, count } => {
                let shipment = ship()?;
                let listener = bind(listen)?;
                let mut conns = Vec::new();
                for _ in 0..*count {
                    let (s, _) = listener.accept().map_err(|e| DfbError::Transport(e.into()))?;
                    conns.push(tcp_connection(s).map_err(|e| DfbError::Transport(e.into()))?);
                }
                Ok(Box::new(Head::start(conns, &shipment, config, width, height, camera)?))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_roundtrip() {
        let h = FrameHeader { frame_index: 9, frame_in_sequence: 1, mode: 4, format: 1, width: 640, height: 2 };
        let mut m = h.encode().to_vec();
        m.extend_from_slice(&[1, 2, 3]);
        assert_eq!(FrameHeader::decode(&m), Some((h, &[1u8, 2, 3][..])));
        assert_eq!(FrameHeader::decode(&m[..19]), None);
    }

    #[test]
    fn control_messages_parse() {
        let c: ControlMessage =
            serde_json::from_str(r#"{"type":"camera","position":[0,1,2],"target":[0,0,0],"up":[0,1,0],"fov":30}"#).unwrap();
        assert!(matches!(c, ControlMessage::Camera { fov, .. } if fov == 30.0));
        let c: ControlMessage = serde_json::from_str(r#"{"type":"config","mode":"costheat","denoise":true}"#).unwrap();
        assert_eq!(
            c,
            ControlMessage::Config(ConfigPatch { mode: Some(Mode::CostHeat), denoise: Some(true), ..Default::default() })
        );
        assert_eq!(serde_json::from_str::<ControlMessage>(r#"{"type":"stats-request"}"#).unwrap(), ControlMessage::StatsRequest);
        assert!(serde_json::from_str::<ControlMessage>(r#"{"type":"config","mode":"bogus"}"#).is_err());
        assert!(serde_json::from_str::<ControlMessage>(r#"{"type":"launch"}"#).is_err());
    }

    #[test]
    fn worker_specs() {
        assert_eq!("inline".parse(), Ok(WorkerSpec::Inline));
        assert_eq!("local:3".parse(), Ok(WorkerSpec::Local(3)));
        assert_eq!("tcp:0.0.0.0:7000:2".parse(), Ok(WorkerSpec::Tcp { listen: "0.0.0.0:7000".into(), count: 2 }));
        assert!("local:0".parse::<WorkerSpec>().is_err());
    }

    #[test]
    fn stats_json_has_percentages() {
        let mut s = RenderStats::default();
        s.shares = crate::render::CategoryTimes::from_array([0.7, 0.07, 0.02, 0.2, 0.01]);
        let v = stats_json(3, &s, 4);
        assert_eq!(v["sharePercents"]["traversal_intersect"], json!(70.0));
        assert_eq!(v["spp"], json!(4));
    }
}
