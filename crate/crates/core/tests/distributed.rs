mod common;

use std::net::TcpListener;

use elephant::dfb::{
    run_pipeline, run_worker, tcp_connection, DfbError, FrameSource, Head, LocalRenderer, MessageSink, SceneShipment,
    TransportError, WireMessage,
};
use elephant::render::{render_frame, CameraState, FrameBuffer, RenderConfig, RenderScene, SceneOptions};
use elephant::scene::{generate_challenge_scene, Preset, SceneDesc};
use rand::seq::SliceRandom;

use common::{fb_bits, plain, spawn_workers, DyingSink};

const W: u32 = 150;
const H: u32 = 100;

fn config() -> RenderConfig {
    RenderConfig { max_path_depth: 3, seed: 11, deterministic: true, ..Default::default() }
}

fn scene() -> SceneDesc {
    generate_challenge_scene(&Preset::Mini.spec(), 5).unwrap().0
}

fn local_reference(desc: &SceneDesc, frames: u64) -> (CameraState, Vec<Vec<u32>>) {
    let rs = RenderScene::build(desc.clone(), &SceneOptions::default()).unwrap();
    let cam = rs.default_camera;
    let mut fb = FrameBuffer::new(W, H);
    let snaps = (0..frames)
        .map(|f| {
            render_frame(&rs, &mut fb, &config(), &cam, f);
            fb_bits(&fb)
        })
        .collect();
    (cam, snaps)
}

#[test]
fn committed_framebuffer_matches_local_for_one_to_four_workers() {
    let desc = scene();
    let (cam, reference) = local_reference(&desc, 4);
    let ship = SceneShipment::from_scene(&desc, std::path::Path::new(".")).unwrap();
    for workers in 1..=4 {
        let (conns, handles) = spawn_workers(workers, plain);
        let mut head = Head::start(conns, &ship, config(), W, H, cam).unwrap();
        for (f, want) in reference.iter().enumerate() {
            let r = head.render_frame().unwrap();
            assert_eq!(r.frame_index, f as u64);
            assert_eq!(r.frame_in_sequence, f as u32 + 1);
            assert!(fb_bits(head.framebuffer()) == *want, "W={workers} frame {f} differs");
        }
        head.shutdown();
        for h in handles {
            h.join().unwrap().unwrap();
        }
    }
}

fn dies_in_third_frame(id: u32, s: Box<dyn MessageSink>) -> Box<dyn MessageSink> {
    if id == 1 {
        // worker 1 of 3 owns 2 of the 6 tiles: two full frames, then one tile
        Box::new(DyingSink { inner: Some(s), tiles_left: 5 })
    } else {
        s
    }
}

#[test]
fn worker_loss_mid_frame_recovers_identical_image() {
    let desc = scene();
    let (cam, reference) = local_reference(&desc, 4);
    let ship = SceneShipment::from_scene(&desc, std::path::Path::new(".")).unwrap();
    let (conns, handles) = spawn_workers(3, dies_in_third_frame);
    let mut head = Head::start(conns, &ship, config(), W, H, cam).unwrap();
    for want in &reference {
        head.render_frame().unwrap();
        assert!(fb_bits(head.framebuffer()) == *want);
    }
    assert_eq!(head.lost_workers(), &[1]);
    assert_eq!(head.live_workers(), 2);
    assert!(head.retries() >= 1);
    assert_eq!(head.ownership().num_workers, 2);
    head.shutdown();
    let results: Vec<_> = handles.into_iter().map(|h| h.join().unwrap()).collect();
    assert!(results[0].is_ok() && results[2].is_ok());
    assert!(results[1].is_err());
}

fn always_dies(_: u32, s: Box<dyn MessageSink>) -> Box<dyn MessageSink> {
    Box::new(DyingSink { inner: Some(s), tiles_left: 0 })
}

#[test]
fn losing_every_worker_is_an_error() {
    let desc = scene();
    let ship = SceneShipment::from_scene(&desc, std::path::Path::new(".")).unwrap();
    let (conns, _handles) = spawn_workers(2, always_dies);
    let mut head = Head::start(conns, &ship, config(), W, H, CameraState::default()).unwrap();
    assert!(matches!(head.render_frame(), Err(DfbError::AllWorkersLost)));
}

/// Holds a frame's tiles and releases them in random order.
struct ShufflingSink {
    inner: Box<dyn MessageSink>,
    held: Vec<WireMessage>,
    rng: rand_chacha::ChaCha8Rng,
}

impl MessageSink for ShufflingSink {
    fn send(&mut self, msg: &WireMessage) -> Result<(), TransportError> {
        match msg {
            WireMessage::TileResult(_) => {
                self.held.push(msg.clone());
                Ok(())
            }
            WireMessage::FrameComplete { .. } => {
                self.held.shuffle(&mut self.rng);
                for m in self.held.drain(..) {
                    self.inner.send(&m)?;
                }
                self.inner.send(msg)
            }
            _ => self.inner.send(msg),
        }
    }
}

fn shuffled(id: u32, s: Box<dyn MessageSink>) -> Box<dyn MessageSink> {
    Box::new(ShufflingSink { inner: s, held: Vec::new(), rng: common::rng(id as u64 + 99) })
}

#[test]
fn tile_arrival_order_does_not_matter() {
    let desc = scene();
    let (cam, reference) = local_reference(&desc, 2);
    let ship = SceneShipment::from_scene(&desc, std::path::Path::new(".")).unwrap();
    let (conns, handles) = spawn_workers(2, shuffled);
    let mut head = Head::start(conns, &ship, config(), W, H, cam).unwrap();
    for want in &reference {
        head.render_frame().unwrap();
        assert!(fb_bits(head.framebuffer()) == *want);
    }
    head.shutdown();
    for h in handles {
        h.join().unwrap().unwrap();
    }
}

#[test]
fn camera_change_restarts_the_sequence_on_every_worker() {
    let desc = scene();
    let ship = SceneShipment::from_scene(&desc, std::path::Path::new(".")).unwrap();
    let rs = RenderScene::build(desc.clone(), &SceneOptions::default()).unwrap();
    let (conns, handles) = spawn_workers(2, plain);
    let mut head = Head::start(conns, &ship, config(), W, H, rs.default_camera).unwrap();
    head.render_frame().unwrap();
    head.render_frame().unwrap();
    let mut moved = rs.default_camera;
    moved.position[1] += 0.5;
    head.set_camera(moved).unwrap();
    let r = head.render_frame().unwrap();
    assert_eq!((r.frame_index, r.frame_in_sequence), (2, 1));
    assert_eq!(head.framebuffer().sample_count(), Some(1));

    let mut local = LocalRenderer::new(rs, config(), W, H);
    local.render_next().unwrap();
    local.render_next().unwrap();
    local.set_camera(moved).unwrap();
    local.render_next().unwrap();
    assert!(fb_bits(head.framebuffer()) == fb_bits(local.framebuffer()));
    head.shutdown();
    for h in handles {
        h.join().unwrap().unwrap();
    }
}

#[test]
fn tcp_workers_match_local() {
    let desc = scene();
    let (cam, reference) = local_reference(&desc, 2);
    let ship = SceneShipment::from_scene(&desc, std::path::Path::new(".")).unwrap();
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    let handles: Vec<_> = (0..2)
        .map(|id| {
            std::thread::spawn(move || {
                let s = std::net::TcpStream::connect(addr).unwrap();
                run_worker(tcp_connection(s).unwrap(), id)
            })
        })
        .collect();
    let conns = (0..2).map(|_| tcp_connection(listener.accept().unwrap().0).unwrap()).collect();
    let mut head = Head::start(conns, &ship, config(), W, H, cam).unwrap();
    for want in &reference {
        head.render_frame().unwrap();
        assert!(fb_bits(head.framebuffer()) == *want);
    }
    head.shutdown();
    for h in handles {
        h.join().unwrap().unwrap();
    }
}

#[test]
fn denoise_overlaps_the_next_render() {
    let rs = RenderScene::build(scene(), &SceneOptions::default()).unwrap();
    let mut local = LocalRenderer::new(rs, config(), 256, 128);
    let records = run_pipeline(&mut local, 6, true).unwrap();
    assert_eq!(records.len(), 6);
    for (i, r) in records.iter().enumerate() {
        assert_eq!(r.frame_index, i as u64);
        assert!(r.display.denoised);
        assert!(r.denoise_start >= r.render_end);
    }
    let overlapped = records
        .windows(2)
        .any(|w| w[0].denoise_start < w[1].render_end && w[0].denoise_end > w[1].render_start);
    assert!(overlapped, "denoising never ran alongside rendering");
}
