//! Writes a generated scene, its face textures and its manifest to disk,
//! the same files `elephant gen` produces.
//!
//! cargo run --release --example generate -- [preset] [seed] [out_dir]

use elephant::ingest::write_pbrt;
use elephant::scene::{materialize_preset, Preset};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let preset: Preset = args.next().as_deref().unwrap_or("textured").parse()?;
    let seed: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(7);
    let dir = args.next().map(Into::into).unwrap_or_else(|| std::env::temp_dir().join("elephant-generate"));
    std::fs::create_dir_all(&dir)?;

    let (scene, manifest) = materialize_preset(preset, seed, &dir, 16)?;
    let out = dir.join(format!("{}.pbrt", preset.name()));
    write_pbrt(&scene, &mut std::io::BufWriter::new(std::fs::File::create(&out)?))?;
    std::fs::write(out.with_extension("manifest.json"), serde_json::to_string_pretty(&manifest)?)?;
    println!("wrote {} with {} textures", out.display(), scene.textures.len());
    println!("{}", serde_json::to_string_pretty(&manifest)?);
    Ok(())
}
