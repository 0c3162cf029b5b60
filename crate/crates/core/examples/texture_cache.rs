//! Face textures behind a bounded cache: a tight byte budget and a single
//! open file handle return exactly what an unbounded cache returns, at the
//! cost of re-reads.
//!
//! cargo run --release --example texture_cache -- [lookups] [budget_kb]

use elephant::scene::{materialize_preset, Preset};
use elephant::shade::{CacheConfig, FaceTextureCache};
use rand::{Rng, SeedableRng};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let lookups: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(100_000);
    let budget_kb: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(64);
    let dir = std::env::temp_dir().join("elephant-texture-cache");
    let (scene, _) = materialize_preset(Preset::Textured, 1, &dir, 32)?;
    let paths: Vec<String> = scene.textures.iter().map(|t| dir.join(&t.path).display().to_string()).collect();
    let free = FaceTextureCache::new(paths.clone(), CacheConfig::default());
    let capped = FaceTextureCache::new(paths, CacheConfig { byte_budget: Some(budget_kb * 1024), open_handle_cap: 1 });

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
    let mut mismatches = 0;
    for _ in 0..lookups {
        let t = rng.gen_range(0..free.texture_count() as u32);
        let face = rng.gen_range(0..free.face_count(t)? as u32);
        let (u, v) = (rng.gen(), rng.gen());
        mismatches += (free.sample(t, face, u, v)? != capped.sample(t, face, u, v)?) as usize;
    }
    println!("{lookups} lookups over {} textures, {mismatches} mismatches", free.texture_count());
    println!("unbounded: {:?}", free.counters());
    println!("{budget_kb} KB, 1 handle: {:?}", capped.counters());
    Ok(())
}
