//! Head node: broadcasts frames, gathers tiles, recovers from worker loss.

use std::collections::HashMap;
use std::sync::mpsc::{channel, Receiver};
use std::thread::JoinHandle;
use std::time::Instant;

use super::pipeline::{FrameResult, FrameSource};
use super::transport::{Connection, MessageSink, TransportError};
use super::wire::WireMessage;
use super::{assign_tiles, DfbError, SceneShipment, TileOwnership};
use crate::render::{CameraState, FrameBuffer, RenderConfig, RenderStats};

struct Link {
    id: u32,
    sink: Box<dyn MessageSink>,
    alive: bool,
}

type Event = (usize, Result<WireMessage, TransportError>);

/// Coordinates a set of workers. Each worker owns tiles round-robin over
/// the surviving workers; the head keeps the committed framebuffer.
pub struct Head {
    links: Vec<Link>,
    events: Receiver<Event>,
    readers: Vec<JoinHandle<()>>,
    fb: FrameBuffer,
    config: RenderConfig,
    camera: CameraState,
    next_frame: u64,
    sequence_start: u64,
    ownership: TileOwnership,
    lost: Vec<u32>,
    retries: u64,
}

impl Head {
    /// Waits for every worker's `Hello`, then ships the scene, config,
    /// camera and tile assignment.
    pub fn start(
        connections: Vec<Connection>,
        scene: &SceneShipment,
        config: RenderConfig,
        width: u32,
        height: u32,
        camera: CameraState,
    ) -> Result<Head, DfbError> {
        if connections.is_empty() {
            return Err(DfbError::ZeroWorkers);
        }
        let (tx, events) = channel();
        let mut links = Vec::new();
        let mut readers = Vec::new();
        for (i, conn) in connections.into_iter().enumerate() {
            let Connection { sink, mut source } = conn;
            let id = match source.recv()? {
                WireMessage::Hello { worker_id } => worker_id,
                m => return Err(DfbError::Protocol(format!("expected Hello, got tag {}", m.tag()))),
            };
            let tx = tx.clone();
            readers.push(std::thread::spawn(move || loop {
                let r = source.recv();
                let stop = r.is_err();
                if tx.send((i, r)).is_err() || stop {
                    break;
                }
            }));
            links.push(Link { id, sink, alive: true });
        }
        let fb = FrameBuffer::new(width, height);
        let ownership = assign_tiles(fb.tile_count() as u32, links.len() as u32)?;
        let mut head = Head {
            links,
            events,
            readers,
            fb,
            config,
            camera,
            next_frame: 0,
            sequence_start: 0,
            ownership,
            lost: Vec::new(),
            retries: 0,
        };
        head.broadcast(&scene.message());
        head.broadcast(&WireMessage::SetConfig { config, width, height });
        head.broadcast(&WireMessage::CameraUpdate { camera });
        head.reassign()?;
        Ok(head)
    }

    /// Sends to every live worker; a failed send marks the worker lost.
    fn broadcast(&mut self, msg: &WireMessage) {
        for l in self.links.iter_mut().filter(|l| l.alive) {
            if l.sink.send(msg).is_err() {
                l.alive = false;
                self.lost.push(l.id);
            }
        }
    }

    fn alive(&self) -> Vec<usize> {
        (0..self.links.len()).filter(|&i| self.links[i].alive).collect()
    }

    /// Spreads tiles round-robin over the live workers.
    fn reassign(&mut self) -> Result<(), DfbError> {
        loop {
            let alive = self.alive();
            if alive.is_empty() {
                return Err(DfbError::AllWorkersLost);
            }
            self.ownership = assign_tiles(self.fb.tile_count() as u32, alive.len() as u32)?;
            let mut failed = false;
            for (slot, &i) in alive.iter().enumerate() {
                let msg = WireMessage::Assign { slot: slot as u32, slots: alive.len() as u32 };
                if self.links[i].sink.send(&msg).is_err() {
                    self.mark_lost(i);
                    failed = true;
                }
            }
            if !failed {
                return Ok(());
            }
        }
    }

    fn mark_lost(&mut self, i: usize) {
        if self.links[i].alive {
            self.links[i].alive = false;
            self.lost.push(self.links[i].id);
        }
    }

    pub fn ownership(&self) -> TileOwnership {
        self.ownership
    }

    /// Ids of workers dropped so far, in order of loss.
    pub fn lost_workers(&self) -> &[u32] {
        &self.lost
    }

    /// Frames that had to be re-rendered after a loss.
    pub fn retries(&self) -> u64 {
        self.retries
    }

    pub fn live_workers(&self) -> usize {
        self.alive().len()
    }

    fn expected_samples(&self, frame: u64) -> u32 {
        (frame - self.sequence_start + 1) as u32 * self.config.samples_per_frame.max(1)
    }

    /// Renders the next frame across the workers. A lost worker aborts the
    /// frame; ownership moves to the survivors and the frame is rendered
    /// again.
    pub fn render_frame(&mut self) -> Result<FrameResult, DfbError> {
        let f = self.next_frame;
        let start = Instant::now();
        'attempt: loop {
            if self.ownership.num_workers as usize != self.live_workers() {
                self.reassign()?;
            }
            self.broadcast(&WireMessage::RenderFrame { frame_index: f, camera: self.camera });
            if self.ownership.num_workers as usize != self.live_workers() {
                self.retries += 1;
                continue 'attempt;
            }
            let mut have = vec![false; self.fb.tile_count()];
            let mut missing = have.len();
            let mut parts: HashMap<usize, RenderStats> = HashMap::new();
            while missing > 0 || parts.len() < self.live_workers() {
                let (i, ev) = self.events.recv().map_err(|_| DfbError::AllWorkersLost)?;
                if !self.links[i].alive {
                    continue;
                }
                match ev {
                    Ok(WireMessage::TileResult(r)) if r.frame_index == f => {
                        let idx = r.tile.index as usize;
                        let slot = self.fb.tiles.get(idx).ok_or_else(|| {
                            DfbError::Protocol(format!("tile {idx} out of range from worker {}", self.links[i].id))
                        })?;
                        if (slot.x0, slot.y0, slot.width, slot.height) != (r.tile.x0, r.tile.y0, r.tile.width, r.tile.height)
                            || r.tile.sample_count != self.expected_samples(f)
                        {
                            return Err(DfbError::Protocol(format!("tile {idx} does not match frame {f}")));
                        }
                        self.fb.tiles[idx] = r.tile;
                        if !have[idx] {
                            have[idx] = true;
                            missing -= 1;
                        }
                    }
                    Ok(WireMessage::FrameComplete { frame_index, stats }) if frame_index == f => {
                        parts.insert(i, stats);
                    }
                    Ok(WireMessage::TileResult(r)) if r.frame_index < f => {}
                    Ok(WireMessage::FrameComplete { frame_index, .. }) if frame_index < f => {}
                    Ok(m) => {
                        return Err(DfbError::Protocol(format!(
                            "unexpected message tag {} from worker {}",
                            m.tag(),
                            self.links[i].id
                        )))
                    }
                    Err(_) => {
                        self.mark_lost(i);
                        self.retries += 1;
                        self.reassign()?;
                        continue 'attempt;
                    }
                }
            }
            let parts: Vec<RenderStats> = parts.into_values().collect();
            let mut stats = RenderStats::merge(&parts, start.elapsed().as_secs_f64());
            stats.samples_per_pixel = self.config.samples_per_frame.max(1);
            self.next_frame += 1;
            return Ok(FrameResult { frame_index: f, frame_in_sequence: (f - self.sequence_start + 1) as u32, stats });
        }
    }

    /// Tells the workers to stop and waits for their links to close.
    pub fn shutdown(mut self) {
        self.broadcast(&WireMessage::Shutdown);
        self.links.clear();
        for r in self.readers.drain(..) {
            let _ = r.join();
        }
    }
}

impl Drop for Head {
    fn drop(&mut self) {
        self.broadcast(&WireMessage::Shutdown);
    }
}

impl FrameSource for Head {
    fn render_next(&mut self) -> Result<FrameResult, DfbError> {
        self.render_frame()
    }

    fn set_camera(&mut self, camera: CameraState) -> Result<(), DfbError> {
        self.camera = camera;
        self.broadcast(&WireMessage::CameraUpdate { camera });
        self.fb.clear();
        self.sequence_start = self.next_frame;
        Ok(())
    }

    fn set_config(&mut self, config: RenderConfig, width: u32, height: u32) -> Result<(), DfbError> {
        self.config = config;
        self.broadcast(&WireMessage::SetConfig { config, width, height });
        self.broadcast(&WireMessage::CameraUpdate { camera: self.camera });
        self.fb = FrameBuffer::new(width, height);
        self.sequence_start = self.next_frame;
        self.reassign()
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
