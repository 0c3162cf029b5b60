//! A head with in-process workers renders the same accumulation as a
//! single local renderer, bit for bit, and keeps going when a worker drops
//! out.
//!
//! cargo run --release --example distributed -- [workers]

use elephant::dfb::{in_process_pair, run_worker, Connection, FrameSource, Head, LocalRenderer, MessageSink, SceneShipment, TransportError, WireMessage};
use elephant::render::{FrameBuffer, RenderConfig, RenderScene, SceneOptions};
use elephant::scene::{generate_challenge_scene, Preset};

/// Drops the link after `left` tile results.
struct Flaky {
    inner: Option<Box<dyn MessageSink>>,
    left: u32,
}

impl MessageSink for Flaky {
    fn send(&mut self, msg: &WireMessage) -> Result<(), TransportError> {
        if matches!(msg, WireMessage::TileResult(_)) {
            if self.left == 0 {
                self.inner = None;
            }
            self.left = self.left.saturating_sub(1);
        }
        self.inner.as_mut().ok_or(TransportError::Closed)?.send(msg)
    }
}

fn bits(fb: &FrameBuffer) -> Vec<u32> {
    fb.tiles.iter().flat_map(|t| t.color.iter().flatten().map(|v| v.to_bits())).collect()
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let workers: u32 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(3);
    let (desc, _) = generate_challenge_scene(&Preset::Mini.spec(), 2)?;
    let (w, h) = (320, 134);
    let cfg = RenderConfig { seed: 4, ..Default::default() };
    let rs = RenderScene::build(desc.clone(), &SceneOptions::default())?;
    let cam = rs.default_camera;
    let mut local = LocalRenderer::new(rs, cfg, w, h);

    let conns = (0..workers)
        .map(|id| {
            let (head, worker) = in_process_pair();
            // the last worker fails partway through the third frame
            let sink: Box<dyn MessageSink> =
                if id + 1 == workers && workers > 1 { Box::new(Flaky { inner: Some(worker.sink), left: 10 }) } else { worker.sink };
            std::thread::spawn(move || run_worker(Connection { sink, source: worker.source }, id));
            head
        })
        .collect();
    let ship = SceneShipment::from_scene(&desc, std::path::Path::new("."))?;
    let mut head = Head::start(conns, &ship, cfg, w, h, cam)?;
    for _ in 0..5 {
        let a = head.render_frame()?;
        local.render_next()?;
        println!(
            "frame {}: {:.1} ms, {} live workers, identical to local: {}",
            a.frame_index,
            a.stats.frame_millis,
            head.live_workers(),
            bits(head.framebuffer()) == bits(local.framebuffer())
        );
    }
    println!("lost workers {:?}, {} tile retries", head.lost_workers(), head.retries());
    head.shutdown();
    Ok(())
}
