//! Entity counts for each generator preset, unique and instanced.
//!
//! cargo run --release --example scene_stats -- [seed]

use elephant::scene::{generate_challenge_scene, scene_stats, Preset};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1);
    for preset in [Preset::Mini, Preset::Overlap, Preset::Tessellation, Preset::Textured] {
        let (scene, manifest) = generate_challenge_scene(&preset.spec(), seed)?;
        let stats = scene_stats(&scene);
        println!("== {} (seed {seed})", preset.name());
        print!("{}", stats.to_table());
        assert_eq!(stats.unique_quads, manifest.unique_quads);
        assert_eq!(stats.instance_count, manifest.instance_count);
    }
    Ok(())
}
