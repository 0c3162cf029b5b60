mod common;

use std::path::Path;

use elephant::harness::{bench, bench_traversal, BenchConfig};
use elephant::render::{
    denoise, render_frame, render_tiles, DenoiseParams, FrameBuffer, Mode, RenderConfig, RenderScene, SceneOptions,
};
use elephant::scene::{furnace_scene, generate_challenge_scene, Preset};
use elephant::shade::DisneyMaterial;
use rand::seq::SliceRandom;

use common::{fb_bits, render_scene};

fn mini() -> RenderScene {
    render_scene(generate_challenge_scene(&Preset::Mini.spec(), 4).unwrap().0)
}

fn pool(threads: usize) -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap()
}

#[test]
fn deterministic_render_ignores_thread_count_and_tile_order() {
    let rs = mini();
    let cfg = RenderConfig { max_path_depth: 4, seed: 3, deterministic: true, ..Default::default() };
    let cam = rs.default_camera;
    let run = |threads: usize| {
        pool(threads).install(|| {
            let mut fb = FrameBuffer::new(200, 90);
            for f in 0..2 {
                render_frame(&rs, &mut fb, &cfg, &cam, f);
            }
            fb_bits(&fb)
        })
    };
    let one = run(1);
    assert!(one == run(8));
    assert!(one == run(3));

    let mut r = common::rng(1);
    for _ in 0..3 {
        let mut fb = FrameBuffer::new(200, 90);
        let mut order: Vec<u32> = (0..fb.tile_count() as u32).collect();
        for f in 0..2 {
            order.shuffle(&mut r);
            // split into two passes to vary the batching as well
            let (a, b) = order.split_at(order.len() / 2);
            render_tiles(&rs, &mut fb, &cfg, &cam, f, b);
            render_tiles(&rs, &mut fb, &cfg, &cam, f, a);
        }
        assert!(fb_bits(&fb) == one);
    }
}

#[test]
fn free_running_mode_varies_between_runs() {
    let rs = mini();
    let cfg = RenderConfig { max_path_depth: 3, deterministic: false, ..Default::default() };
    let mut a = FrameBuffer::new(64, 64);
    let mut b = FrameBuffer::new(64, 64);
    render_frame(&rs, &mut a, &cfg, &rs.default_camera, 0);
    std::thread::sleep(std::time::Duration::from_millis(2));
    render_frame(&rs, &mut b, &cfg, &rs.default_camera, 0);
    assert!(a.color_image() != b.color_image());
}

#[test]
fn small_furnace_is_grey_one() {
    for m in [
        DisneyMaterial { base_color: [1.0; 3], roughness: 0.5, ..Default::default() },
        DisneyMaterial { base_color: [1.0; 3], roughness: 0.2, metallic: 1.0, ..Default::default() },
    ] {
        let rs = render_scene(furnace_scene(m));
        let mut fb = FrameBuffer::new(32, 32);
        let cfg = RenderConfig { samples_per_frame: 64, max_path_depth: 64, ..Default::default() };
        render_frame(&rs, &mut fb, &cfg, &rs.default_camera, 0);
        let img = fb.color_image();
        let mean = img.iter().map(|c| (c[0] + c[1] + c[2]) as f64 / 3.0).sum::<f64>() / img.len() as f64;
        assert!((mean - 1.0).abs() < 0.02, "{m:?}: {mean}");
    }
}

#[test]
fn debug_modes_are_flat_and_cheap() {
    let rs = mini();
    for mode in [Mode::PrimId, Mode::GeomId, Mode::InstanceId] {
        let cfg = RenderConfig { mode, ..Default::default() };
        let mut fb = FrameBuffer::new(64, 32);
        let stats = render_frame(&rs, &mut fb, &cfg, &rs.default_camera, 0);
        assert!((stats.rays_per_pixel - 1.0).abs() < 1e-9, "{mode:?}");
        stats.validate().unwrap();
    }
}

#[test]
fn background_stays_exact_under_the_denoiser() {
    let rs = render_scene(furnace_scene(DisneyMaterial::default()));
    let mut fb = FrameBuffer::new(96, 96);
    render_frame(&rs, &mut fb, &RenderConfig::default(), &rs.default_camera, 0);
    let (color, albedo, normal) = (fb.color_image(), fb.albedo_image(), fb.normal_image());
    let out = denoise(&color, &albedo, &normal, 96, 96, 1, &DenoiseParams::default()).unwrap();
    // corners lie well outside the sphere
    for (x, y) in [(0, 0), (95, 0), (0, 95), (95, 95), (8, 10)] {
        let i = y * 96 + x;
        for c in 0..3 {
            assert!((out[i][c] - color[i][c]).abs() <= 1e-6);
        }
    }
}

#[test]
fn bench_closes_profile_on_every_frame() {
    let desc = generate_challenge_scene(&Preset::Mini.spec(), 1).unwrap().0;
    let cfg = BenchConfig { width: 96, height: 40, warmup: 2, measure: 3, ..Default::default() };
    let r = bench("mini", desc, Path::new("."), &cfg).unwrap();
    assert_eq!(r.frames.len(), 5);
    assert_eq!(r.measured_frames, 3);
    for f in &r.frames {
        assert!((f.share_sum - 1.0).abs() <= 0.005, "{f:?}");
    }
    assert!((r.shares.total() - 1.0).abs() <= 0.005);
    assert!(r.rays_traced > 0 && r.traversal.rays == r.rays_traced);
    assert!(r.denoise_millis.is_some());
    assert!(r.to_table().contains("traversal_intersect"));
}

#[test]
fn overlap_costs_more_primitive_tests_per_ray() {
    let opts = SceneOptions::default();
    let overlap = RenderScene::build(generate_challenge_scene(&Preset::Overlap.spec(), 1).unwrap().0, &opts).unwrap();
    let spread = generate_challenge_scene(
        &elephant::scene::GeneratorSpec {
            trees: Some(elephant::scene::TreeSpec { objects: 6, leaves_per_tree: 400, crown_radius: 3.0 }),
            ..Preset::Overlap.spec()
        },
        1,
    )
    .unwrap()
    .0;
    let spread = RenderScene::build(spread, &opts).unwrap();
    let a = bench_traversal(&overlap, 64, 32, 1);
    let b = bench_traversal(&spread, 64, 32, 1);
    let per_ray = |r: &elephant::harness::TraversalReport| r.counters.primitive_tests as f64 / r.rays as f64;
    assert!(a.rays == b.rays && a.hits > 0);
    assert!(per_ray(&a) > per_ray(&b), "{} vs {}", per_ray(&a), per_ray(&b));
}
