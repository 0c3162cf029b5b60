//! Frame sources and the denoise stage that overlaps the next render.

use std::sync::mpsc::{channel, sync_channel, Receiver, SyncSender, TryRecvError};
use std::thread::JoinHandle;
use std::time::Instant;

use super::DfbError;
use crate::render::{
    denoise, render_frame, CameraState, DenoiseParams, FrameBuffer, Mode, RenderConfig, RenderScene, RenderStats,
};

#[derive(Clone, Debug)]
pub struct FrameResult {
    pub frame_index: u64,
    /// 1 for the first frame after a camera or config change.
    pub frame_in_sequence: u32,
    pub stats: RenderStats,
}

/// Something that renders progressive frames into a framebuffer.
pub trait FrameSource {
    fn render_next(&mut self) -> Result<FrameResult, DfbError>;
    /// Restarts accumulation.
    fn set_camera(&mut self, camera: CameraState) -> Result<(), DfbError>;
    /// Restarts accumulation at the given resolution.
    fn set_config(&mut self, config: RenderConfig, width: u32, height: u32) -> Result<(), DfbError>;
    fn framebuffer(&self) -> &FrameBuffer;
    fn config(&self) -> RenderConfig;
    fn camera(&self) -> CameraState;
}

/// Single-process renderer on the local rayon pool.
pub struct LocalRenderer {
    pub scene: RenderScene,
    fb: FrameBuffer,
    config: RenderConfig,
    camera: CameraState,
    next_frame: u64,
    sequence_start: u64,
}

impl LocalRenderer {
    pub fn new(scene: RenderScene, config: RenderConfig, width: u32, height: u32) -> Self {
        let camera = scene.default_camera;
        Self { scene, fb: FrameBuffer::new(width, height), config, camera, next_frame: 0, sequence_start: 0 }
    }
}

impl FrameSource for LocalRenderer {
    fn render_next(&mut self) -> Result<FrameResult, DfbError> {
        let f = self.next_frame;
        let stats = render_frame(&self.scene, &mut self.fb, &self.config, &self.camera, f);
        self.next_frame += 1;
        Ok(FrameResult { frame_index: f, frame_in_sequence: (f - self.sequence_start + 1) as u32, stats })
    }

    fn set_camera(&mut self, camera: CameraState) -> Result<(), DfbError> {
        self.camera = camera;
        self.fb.clear();
        self.sequence_start = self.next_frame;
        Ok(())
    }

    fn set_config(&mut self, config: RenderConfig, width: u32, height: u32) -> Result<(), DfbError> {
        self.config = config;
        self.fb = FrameBuffer::new(width, height);
        self.sequence_start = self.next_frame;
        Ok(())
    }

    fn framebuffer(&self) -> &FrameBuffer {
        &self.fb
    }

    fn config(&self) -> RenderConfig {
        self.config
    }

    fn camera(&self) -> CameraState {
        self.camera
    }
}

/// A committed frame handed off to the denoise stage. The copy keeps the
/// accumulation buffers out of the denoiser's reach.
#[derive(Clone, Debug)]
pub struct FrameSnapshot {
    pub frame_index: u64,
    pub frame_in_sequence: u32,
    /// Bumped on every camera or config change; lets consumers drop stale
    /// frames.
    pub epoch: u64,
    pub mode: Mode,
    pub width: u32,
    pub height: u32,
    pub samples: u32,
    pub color: Vec<[f32; 3]>,
    pub albedo: Vec<[f32; 3]>,
    pub normal: Vec<[f32; 3]>,
    pub cost: Vec<u32>,
    pub stats: RenderStats,
}

impl FrameSnapshot {
    pub fn capture(fb: &FrameBuffer, result: &FrameResult, mode: Mode, epoch: u64) -> Self {
        Self {
            mode,
            frame_index: result.frame_index,
            frame_in_sequence: result.frame_in_sequence,
            epoch,
            width: fb.width,
            height: fb.height,
            samples: fb.sample_count().unwrap_or(0),
            color: fb.color_image(),
            albedo: fb.albedo_image(),
            normal: fb.normal_image(),
            cost: fb.cost_image(),
            stats: result.stats.clone(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct DisplayFrame {
    pub snapshot: FrameSnapshot,
    /// Denoised color, or the raw mean when denoising is off.
    pub image: Vec<[f32; 3]>,
    pub denoised: bool,
    pub denoise_start: Instant,
    pub denoise_end: Instant,
}

impl DisplayFrame {
    pub fn denoise_millis(&self) -> f64 {
        (self.denoise_end - self.denoise_start).as_secs_f64() * 1e3
    }
}

/// Denoiser thread behind a two-frame queue; `submit` blocks when full.
pub struct DenoiseStage {
    tx: Option<SyncSender<(FrameSnapshot, bool)>>,
    rx: Receiver<DisplayFrame>,
    handle: Option<JoinHandle<()>>,
}

impl DenoiseStage {
    pub fn spawn(params: DenoiseParams) -> Self {
        let (tx, in_rx) = sync_channel::<(FrameSnapshot, bool)>(2);
        let (out_tx, rx) = channel();
        let handle = std::thread::spawn(move || {
            for (snap, enabled) in in_rx {
                let denoise_start = Instant::now();
                let filtered = if enabled && snap.samples > 0 {
                    denoise(&snap.color, &snap.albedo, &snap.normal, snap.width, snap.height, snap.samples, &params).ok()
                } else {
                    None
                };
                let denoised = filtered.is_some();
                let image = filtered.unwrap_or_else(|| snap.color.clone());
                let out = DisplayFrame { snapshot: snap, image, denoised, denoise_start, denoise_end: Instant::now() };
                if out_tx.send(out).is_err() {
                    break;
                }
            }
        });
        Self { tx: Some(tx), rx, handle: Some(handle) }
    }

    /// Hands a frame over; blocks while two frames are queued.
    pub fn submit(&mut self, snapshot: FrameSnapshot, denoise: bool) {
        if let Some(tx) = &self.tx {
            let _ = tx.send((snapshot, denoise));
        }
    }

    pub fn try_next(&mut self) -> Option<DisplayFrame> {
        match self.rx.try_recv() {
            Ok(f) => Some(f),
            Err(TryRecvError::Empty | TryRecvError::Disconnected) => None,
        }
    }

    /// Closes the input and returns everything still in flight.
    pub fn finish(mut self) -> Vec<DisplayFrame> {
        self.tx = None;
        let out: Vec<DisplayFrame> = self.rx.iter().collect();
        if let Some(h) = self.handle.take() {
            let _ = h.join();
        }
        out
    }
}

impl Drop for DenoiseStage {
    fn drop(&mut self) {
        self.tx = None;
        while self.rx.recv().is_ok() {}
        if let Some(h) = self.handle.take() {
            let _ = h.join();
        }
    }
}

/// Timeline of one frame through render and denoise.
#[derive(Clone, Debug)]
pub struct FrameRecord {
    pub frame_index: u64,
    pub render_start: Instant,
    pub render_end: Instant,
    pub denoise_start: Instant,
    pub denoise_end: Instant,
    pub stats: RenderStats,
    pub display: DisplayFrame,
}

/// Renders `frames` frames, denoising each on the stage thread while the
/// next one renders.
pub fn run_pipeline(source: &mut dyn FrameSource, frames: u64, denoise: bool) -> Result<Vec<FrameRecord>, DfbError> {
    let mut stage = DenoiseStage::spawn(DenoiseParams::default());
    let mut timing = Vec::new();
    let mut shown = Vec::new();
    for _ in 0..frames {
        let render_start = Instant::now();
        let result = source.render_next()?;
        let render_end = Instant::now();
        stage.submit(FrameSnapshot::capture(source.framebuffer(), &result, source.config().mode, 0), denoise);
        timing.push((render_start, render_end));
        while let Some(d) = stage.try_next() {
            shown.push(d);
        }
    }
    shown.extend(stage.finish());
    Ok(shown
        .into_iter()
        .zip(timing)
        .map(|(d, (render_start, render_end))| FrameRecord {
            frame_index: d.snapshot.frame_index,
            render_start,
            render_end,
            denoise_start: d.denoise_start,
            denoise_end: d.denoise_end,
            stats: d.snapshot.stats.clone(),
            display: d,
        })
        .collect())
}
