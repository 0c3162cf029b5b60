use std::path::Path;

use elephant::ingest::{
    bench_load, load_scene_file, merge_scene_quads, merge_triangle_pairs, parse_pbrt, read_biff_bytes, write_biff,
    write_biff_file, write_pbrt, MergeError,
};
use elephant::scene::generate::quads_to_triangle_pairs;
use elephant::scene::{
    generate_challenge_scene, scene_stats, CurveSpec, GeneratorSpec, PebbleSpec, QuadMesh, TreeSpec,
};
use glam::Vec3;
use proptest::prelude::*;

fn spec_strategy() -> impl Strategy<Value = GeneratorSpec> {
    (
        1u32..12,
        any::<bool>(),
        prop::option::of((1u32..4, 1u32..30, 0.1f32..1.5)),
        prop::option::of(1u32..12),
        prop::option::of((1u32..6, 1u32..4)),
        prop::option::of((1u32..3, 1u32..6)),
        any::<bool>(),
        any::<bool>(),
    )
        .prop_map(|(res, tris, trees, overlay, pebbles, curves, textured, key_light)| GeneratorSpec {
            terrain_resolution: res,
            terrain_as_triangles: tris,
            trees: trees.map(|(objects, leaves_per_tree, crown_radius)| TreeSpec { objects, leaves_per_tree, crown_radius }),
            fine_overlay: overlay,
            pebbles: pebbles.map(|(instances, resolution)| PebbleSpec { instances, resolution }),
            curves: curves.map(|(clumps, curves_per_clump)| CurveSpec { clumps, curves_per_clump }),
            textured,
            key_light,
            extent: 10.0,
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn biff_roundtrip_is_exact(spec in spec_strategy(), seed in any::<u64>()) {
        let (scene, manifest) = generate_challenge_scene(&spec, seed).unwrap();
        prop_assert!(manifest.counts_match(&scene_stats(&scene)));
        let mut a = Vec::new();
        write_biff(&scene, &mut a).unwrap();
        prop_assert_eq!(&read_biff_bytes(&a).unwrap(), &scene);
        let mut b = Vec::new();
        write_biff(&scene, &mut b).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn text_roundtrip_is_exact(spec in spec_strategy(), seed in any::<u64>()) {
        let (scene, _) = generate_challenge_scene(&spec, seed).unwrap();
        let mut text = Vec::new();
        write_pbrt(&scene, &mut text).unwrap();
        let back = parse_pbrt(std::str::from_utf8(&text).unwrap(), Path::new(".")).unwrap();
        prop_assert_eq!(back, scene);
    }

    #[test]
    fn paired_triangles_merge_back(res in 1u32..20, broken in any::<prop::sample::Index>()) {
        let mut positions = Vec::new();
        let mut indices = Vec::new();
        for j in 0..=res {
            for i in 0..=res {
                positions.push(Vec3::new(i as f32, (i * j) as f32 * 0.01, j as f32));
            }
        }
        for j in 0..res {
            for i in 0..res {
                let a = j * (res + 1) + i;
                indices.push([a, a + res + 1, a + res + 2, a + 1]);
            }
        }
        let quads = QuadMesh { positions, indices };
        let tris = quads_to_triangle_pairs(&quads);
        let merged = merge_triangle_pairs(&tris).unwrap();
        prop_assert_eq!(merged.indices.len() * 2, tris.indices.len());
        prop_assert_eq!(&merged.positions, &tris.positions);
        prop_assert_eq!(&merged, &quads);

        let mut bad = tris.clone();
        let k = broken.index(bad.indices.len() / 2);
        bad.indices[2 * k + 1].swap(0, 2);
        prop_assert_eq!(merge_triangle_pairs(&bad), Err(MergeError::NotPaired(2 * k)));
    }
}

#[test]
fn files_convert_and_load_to_the_same_scene() {
    let dir = tempfile::tempdir().unwrap();
    let spec = GeneratorSpec { terrain_as_triangles: true, ..elephant::scene::Preset::Mini.spec() };
    let (scene, manifest) = generate_challenge_scene(&spec, 9).unwrap();
    let pbrt = dir.path().join("scene.pbrt");
    write_pbrt(&scene, &mut std::fs::File::create(&pbrt).unwrap()).unwrap();

    let loaded = load_scene_file(&pbrt).unwrap();
    let mut merged = scene.clone();
    let summary = merge_scene_quads(&mut merged);
    assert_eq!(summary.merged_meshes, 1);
    assert_eq!(summary.quads_after * 2, summary.triangles_before);
    assert_eq!(loaded, merged);

    let s = scene_stats(&loaded);
    assert_eq!(s.unique_triangles, manifest.unique_triangles - summary.triangles_before as u64);
    assert_eq!(s.unique_quads, manifest.unique_quads + summary.quads_after as u64);

    let biff = dir.path().join("scene.biff");
    write_biff_file(&loaded, &biff).unwrap();
    assert_eq!(load_scene_file(&biff).unwrap(), loaded);

    let report = bench_load(&pbrt, &biff).unwrap();
    assert!(report.ascii_seconds > 0.0 && report.binary_seconds > 0.0);
}
