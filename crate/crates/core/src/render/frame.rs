use std::time::{Instant, SystemTime, UNIX_EPOCH};

use glam::DVec3;
use rayon::prelude::*;

use super::debug::debug_shade;
use super::framebuffer::{FrameBuffer, Tile};
use super::integrator::trace_path;
use super::profile::{Profiler, RenderStats};
use super::sampler::PixelSampler;
use super::{Camera, CameraState, Mode, RenderConfig, RenderScene};
use crate::accel::Ray;

fn add(acc: &mut [f32; 3], v: DVec3) {
    acc[0] += v.x as f32;
    acc[1] += v.y as f32;
    acc[2] += v.z as f32;
}

fn frame_seed(config: &RenderConfig) -> u64 {
    if config.deterministic {
        config.seed
    } else {
        let nanos = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_nanos() as u64);
        config.seed ^ nanos.rotate_left(17)
    }
}

/// Renders one frame's worth of samples into `tile`.
pub fn render_tile(
    scene: &RenderScene,
    camera: &Camera,
    config: &RenderConfig,
    seed: u64,
    frame_index: u64,
    tile: &mut Tile,
    prof: &mut Profiler,
) {
    let spf = config.samples_per_frame.max(1);
    let depth = config.max_path_depth.max(1);
    for py in 0..tile.height {
        for px in 0..tile.width {
            let (x, y) = (tile.x0 + px, tile.y0 + py);
            let i = (py * tile.width + px) as usize;
            for s in 0..spf {
                let sample_index = frame_index * spf as u64 + s as u64;
                let mut sampler = PixelSampler::new(seed, x, y, sample_index);
                match config.mode {
                    Mode::PrimId | Mode::GeomId | Mode::InstanceId => {
                        let (o, d) = camera.ray(x as f64 + 0.5, y as f64 + 0.5);
                        let ray = Ray { origin: o.as_vec3(), dir: d.as_vec3(), tmin: 0.0, tmax: f32::INFINITY };
                        let hit =
                            prof.traverse(|c| scene.accel.intersect_counted(&ray, c));
                        prof.rays += 1;
                        add(&mut tile.color[i], debug_shade(hit.as_ref(), config.mode));
                        if let Some(h) = hit {
                            add(&mut tile.normal[i], h.normal.as_dvec3());
                        }
                        tile.cost[i] += 1;
                    }
                    _ => {
                        let j = sampler.next2();
                        let (o, d) = camera.ray(x as f64 + j[0], y as f64 + j[1]);
                        let r = trace_path(scene, &mut sampler, o, d, depth, prof);
                        prof.rays += r.rays as u64;
                        let c = match config.mode {
                            Mode::Albedo => r.albedo,
                            Mode::Normal => {
                                if r.first_hit.is_some() {
                                    r.normal * 0.5 + 0.5
                                } else {
                                    DVec3::ZERO
                                }
                            }
                            _ => r.radiance,
                        };
                        add(&mut tile.color[i], c);
                        add(&mut tile.albedo[i], r.albedo);
                        add(&mut tile.normal[i], r.normal);
                        tile.cost[i] += r.rays;
                    }
                }
            }
        }
    }
    tile.sample_count += spf;
}

/// Renders the listed tiles in parallel on the current rayon pool.
pub fn render_tiles(
    scene: &RenderScene,
    fb: &mut FrameBuffer,
    config: &RenderConfig,
    camera: &CameraState,
    frame_index: u64,
    tiles: &[u32],
) -> RenderStats {
    let start = Instant::now();
    let cam = Camera::new(camera, fb.width, fb.height);
    let seed = frame_seed(config);
    let mut wanted = vec![false; fb.tile_count()];
    for &t in tiles {
        if let Some(w) = wanted.get_mut(t as usize) {
            *w = true;
        }
    }
    let profile = fb
        .tiles
        .par_iter_mut()
        .filter(|t| wanted[t.index as usize])
        .map(|tile| {
            let mut p = Profiler::default();
            render_tile(scene, &cam, config, seed, frame_index, tile, &mut p);
            p
        })
        .reduce(Profiler::default, |mut a, b| {
            a.merge(&b);
            a
        });
    let pixels: u64 = fb.tiles.iter().filter(|t| wanted[t.index as usize]).map(|t| t.pixel_count() as u64).sum();
    RenderStats::from_profile(
        &profile,
        rayon::current_num_threads(),
        start.elapsed().as_secs_f64(),
        pixels,
        config.samples_per_frame.max(1),
    )
}

/// Renders every tile once and accumulates the result.
pub fn render_frame(
    scene: &RenderScene,
    fb: &mut FrameBuffer,
    config: &RenderConfig,
    camera: &CameraState,
    frame_index: u64,
) -> RenderStats {
    let all: Vec<u32> = (0..fb.tile_count() as u32).collect();
    render_tiles(scene, fb, config, camera, frame_index, &all)
}
