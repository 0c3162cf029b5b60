//! Progressive path tracing of a generated scene to a PNG, with the
//! per-category profile of the last frame.
//!
//! cargo run --release --example render -- [preset] [spp] [out.png]

use elephant::harness::report_profile;
use elephant::render::{render_frame, write_png, DisplayImage, FrameBuffer, Mode, RenderConfig, RenderScene, SceneOptions};
use elephant::scene::{materialize_preset, Preset};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let preset: Preset = args.next().as_deref().unwrap_or("mini").parse()?;
    let spp: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(16);
    let out = args.next().unwrap_or_else(|| "render.png".into());

    let dir = std::env::temp_dir().join(format!("elephant-render-{}", preset.name()));
    let (desc, _) = materialize_preset(preset, 1, &dir, 16)?;
    let rs = RenderScene::build(desc, &SceneOptions { base_dir: dir, ..Default::default() })?;
    let (w, h) = (512, 215);
    let mut fb = FrameBuffer::new(w, h);
    let cfg = RenderConfig::default();
    let mut last = None;
    for frame in 0..spp {
        last = Some(render_frame(&rs, &mut fb, &cfg, &rs.default_camera, frame));
    }
    write_png(out.as_ref(), &DisplayImage::from_framebuffer(&fb, Mode::PathTrace, 1.0))?;
    println!("wrote {out} ({w}x{h}, {spp} spp)");
    if let Some(stats) = last {
        print!("{}", report_profile(&[("last frame", &stats)])?);
    }
    Ok(())
}
