//! Round trip through both formats: write a preset as PBRT text with its
//! terrain split into triangle pairs, read it back, merge the pairs into
//! quads, store BIFF and compare load times.
//!
//! cargo run --release --example convert -- [out_dir]

use elephant::ingest::{bench_load, merge_scene_quads, parse_pbrt_file, read_biff_file, write_biff_file, write_pbrt};
use elephant::scene::{generate_challenge_scene, scene_stats, Preset};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::args().nth(1).map(Into::into).unwrap_or_else(|| std::env::temp_dir().join("elephant-convert"));
    std::fs::create_dir_all(&dir)?;
    let spec = elephant::scene::GeneratorSpec { terrain_as_triangles: true, ..Preset::Tessellation.spec() };
    let (scene, _) = generate_challenge_scene(&spec, 3)?;

    let pbrt = dir.join("scene.pbrt");
    write_pbrt(&scene, &mut std::io::BufWriter::new(std::fs::File::create(&pbrt)?))?;
    let mut parsed = parse_pbrt_file(&pbrt)?;
    let before = scene_stats(&parsed);
    let merge = merge_scene_quads(&mut parsed);
    let after = scene_stats(&parsed);
    println!(
        "merged {} meshes: {} triangles -> {} quads ({} -> {} unique primitives)",
        merge.merged_meshes,
        merge.triangles_before,
        merge.quads_after,
        before.unique_triangles + before.unique_quads,
        after.unique_triangles + after.unique_quads
    );

    let biff = dir.join("scene.biff");
    let bytes = write_biff_file(&parsed, &biff)?;
    assert!(read_biff_file(&biff)? == parsed);
    let text_bytes = std::fs::metadata(&pbrt)?.len();
    println!("text {text_bytes} bytes, BIFF {bytes} bytes");

    let r = bench_load(&pbrt, &biff)?;
    println!("load: text {:.3} s, BIFF {:.3} s, speedup {:.1}x", r.ascii_seconds, r.binary_seconds, r.speedup);
    Ok(())
}
