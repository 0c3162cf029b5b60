//! One PNG per display mode: path traced, albedo, normals, cost heat and
//! the three id views.
//!
//! cargo run --release --example debug_modes -- [out_dir]

use elephant::render::{render_frame, write_png, DisplayImage, FrameBuffer, Mode, RenderConfig, RenderScene, SceneOptions};
use elephant::scene::{generate_challenge_scene, Preset};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::args().nth(1).map(Into::into).unwrap_or_else(|| std::env::temp_dir().join("elephant-modes"));
    std::fs::create_dir_all(&dir)?;
    let (desc, _) = generate_challenge_scene(&Preset::Overlap.spec(), 2)?;
    let rs = RenderScene::build(desc, &SceneOptions::default())?;
    for mode in [Mode::PathTrace, Mode::Albedo, Mode::Normal, Mode::CostHeat, Mode::PrimId, Mode::GeomId, Mode::InstanceId] {
        let mut fb = FrameBuffer::new(384, 161);
        let cfg = RenderConfig { mode, samples_per_frame: 4, ..Default::default() };
        let stats = render_frame(&rs, &mut fb, &cfg, &rs.default_camera, 0);
        let name = serde_json::to_value(mode)?.as_str().unwrap_or("mode").to_string();
        let path = dir.join(format!("{name}.png"));
        write_png(&path, &DisplayImage::from_framebuffer(&fb, mode, 1.0))?;
        println!("{:<12} {:>6.2} rays/pixel  {}", name, stats.rays_per_pixel, path.display());
    }
    Ok(())
}
