//! Denoises a one-sample render with its albedo and normal features and
//! compares both against a converged reference.
//!
//! cargo run --release --example denoise -- [reference_spp] [out_dir]

use elephant::render::{
    denoise, render_frame, write_png, DenoiseParams, DisplayImage, FrameBuffer, Mode, RenderConfig, RenderScene, SceneOptions,
};
use elephant::scene::{generate_challenge_scene, Preset};

fn mse(a: &[[f32; 3]], b: &[[f32; 3]]) -> f64 {
    a.iter().zip(b).flat_map(|(x, y)| (0..3).map(move |c| (x[c] as f64 - y[c] as f64).powi(2))).sum::<f64>() / (3 * a.len()) as f64
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let reference_spp: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(256);
    let dir = args.next().map(Into::into).unwrap_or_else(|| std::env::temp_dir().join("elephant-denoise"));
    std::fs::create_dir_all(&dir)?;
    let (desc, _) = generate_challenge_scene(&Preset::Mini.spec(), 1)?;
    let rs = RenderScene::build(desc, &SceneOptions::default())?;
    let (w, h) = (256, 108);
    let cam = rs.default_camera;

    let mut reference = FrameBuffer::new(w, h);
    let cfg = RenderConfig { samples_per_frame: 16, seed: 1000, ..Default::default() };
    for f in 0..reference_spp.div_ceil(16) {
        render_frame(&rs, &mut reference, &cfg, &cam, f);
    }
    let mut noisy = FrameBuffer::new(w, h);
    render_frame(&rs, &mut noisy, &RenderConfig::default(), &cam, 0);

    let color = noisy.color_image();
    let filtered = denoise(&color, &noisy.albedo_image(), &noisy.normal_image(), w, h, 1, &DenoiseParams::default())?;
    let truth = reference.color_image();
    println!("MSE vs {reference_spp} spp: noisy {:.5}, denoised {:.5}", mse(&color, &truth), mse(&filtered, &truth));

    let cost = noisy.cost_image();
    for (name, img) in [("noisy", &color), ("denoised", &filtered), ("reference", &truth)] {
        let path = dir.join(format!("{name}.png"));
        write_png(&path, &DisplayImage::from_linear(w, h, img, &cost, 1, Mode::PathTrace, 1.0))?;
        println!("wrote {}", path.display());
    }
    Ok(())
}
