//! Benchmark protocol on a preset: warm-up frames, measured frames, the
//! per-category time shares and the traversal counters.
//!
//! cargo run --release --example bench -- [preset] [warmup] [measure] [face_res]

use elephant::harness::{bench, BenchConfig};
use elephant::scene::{materialize_preset, Preset};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let preset: Preset = args.next().as_deref().unwrap_or("textured").parse()?;
    let warmup = args.next().and_then(|s| s.parse().ok()).unwrap_or(8);
    let measure = args.next().and_then(|s| s.parse().ok()).unwrap_or(16);
    let face_res = args.next().and_then(|s| s.parse().ok()).unwrap_or(16);
    let dir = std::env::temp_dir().join(format!("elephant-bench-{}-{face_res}", preset.name()));
    let (desc, _) = materialize_preset(preset, 1, &dir, face_res)?;
    let cfg = BenchConfig { width: 384, height: 161, warmup, measure, ..Default::default() };
    let report = bench(preset.name(), desc, &dir, &cfg)?;
    print!("{}", report.to_table());
    for f in &report.frames {
        println!("frame {:>3}: {:>8.1} ms  {:>9} rays  shares sum {:.4}", f.frame_index, f.millis, f.rays, f.share_sum);
    }
    Ok(())
}
