//! Streams frames to a viewer over WebSocket. Connect a client to
//! ws://127.0.0.1:9100 and send JSON control messages such as
//! {"type":"camera", ...}, {"type":"config","mode":"costheat"} or
//! {"type":"stats-request"}.
//!
//! cargo run --release --example serve -- [address] [max_frames]

use elephant::dfb::{bind, serve, ImageFormat, LocalRenderer, ServeOptions};
use elephant::render::{RenderConfig, RenderScene, SceneOptions};
use elephant::scene::{generate_challenge_scene, Preset};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let address = args.next().unwrap_or_else(|| "127.0.0.1:9100".into());
    let max_frames = args.next().and_then(|s| s.parse().ok());
    let (desc, _) = generate_challenge_scene(&Preset::Mini.spec(), 1)?;
    let rs = RenderScene::build(desc, &SceneOptions::default())?;
    let mut source = LocalRenderer::new(rs, RenderConfig { max_path_depth: 3, ..Default::default() }, 640, 268);
    let listener = bind(&address)?;
    println!("listening on ws://{address}");
    let opts = ServeOptions { denoise: true, format: ImageFormat::Png, max_frames, ..Default::default() };
    let summary = serve(&listener, &mut source, &opts)?;
    println!("{} frames sent, {} rendered, close code {:?}", summary.frames_sent, summary.frames_rendered, summary.close_code);
    Ok(())
}
