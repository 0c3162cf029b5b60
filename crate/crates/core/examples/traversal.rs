//! Two-level traversal on a preset: throughput, hit rate and the step
//! counters per ray for camera rays.
//!
//! cargo run --release --example traversal -- [preset] [WxH]

use elephant::harness::bench_traversal;
use elephant::render::{RenderScene, SceneOptions};
use elephant::scene::{generate_challenge_scene, Preset};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let preset: Preset = args.next().as_deref().unwrap_or("overlap").parse()?;
    let (w, h) = args
        .next()
        .and_then(|s| s.split_once('x').and_then(|(a, b)| Some((a.parse().ok()?, b.parse().ok()?))))
        .unwrap_or((384, 161));
    let (desc, _) = generate_challenge_scene(&preset.spec(), 1)?;
    let rs = RenderScene::build(desc, &SceneOptions::default())?;
    let r = bench_traversal(&rs, w, h, 4);
    let per = |n: u64| n as f64 / r.rays as f64;
    println!("{} rays, {} hits, {:.2} Mray/s", r.rays, r.hits, r.mrays_per_second);
    println!(
        "per ray: {:.1} TLAS nodes, {:.1} BLAS nodes, {:.1} instances, {:.1} primitive tests",
        per(r.counters.tlas_nodes),
        per(r.counters.blas_nodes),
        per(r.counters.instance_visits),
        per(r.counters.primitive_tests)
    );
    Ok(())
}
