//! White furnace: a base-color-1 sphere inside a unit environment should
//! vanish into the background.
//!
//! cargo run --release --example furnace -- [spp] [res]

use std::time::Instant;

use elephant::render::{render_frame, FrameBuffer, RenderConfig, RenderScene, SceneOptions};
use elephant::scene::furnace_scene;
use elephant::shade::DisneyMaterial;

fn main() {
    let mut args = std::env::args().skip(1);
    let spp: u32 = args.next().and_then(|a| a.parse().ok()).unwrap_or(64);
    let res: u32 = args.next().and_then(|a| a.parse().ok()).unwrap_or(128);
    let material = DisneyMaterial { base_color: [1.0; 3], roughness: 0.5, ..Default::default() };
    let scene = RenderScene::build(furnace_scene(material), &SceneOptions::default()).expect("scene");
    let cam = scene.default_camera;
    let mut fb = FrameBuffer::new(res, res);
    let cfg = RenderConfig { samples_per_frame: spp, ..Default::default() };
    let t = Instant::now();
    let stats = render_frame(&scene, &mut fb, &cfg, &cam, 0);
    let img = fb.color_image();
    let mean: f64 = img.iter().map(|c| (c[0] + c[1] + c[2]) as f64 / 3.0).sum::<f64>() / img.len() as f64;
    let (lo, hi) = img.iter().fold((f32::MAX, f32::MIN), |(lo, hi), c| (lo.min(c[1]), hi.max(c[1])));
    println!("{res}x{res} @ {spp} spp: mean {mean:.5}, green range [{lo:.3}, {hi:.3}]");
    println!("{:.2} s, {:.2} rays/pixel/sample, {:.2} Mray/s", t.elapsed().as_secs_f64(), stats.rays_per_pixel / spp as f64, stats.mrays_per_second());
}
