mod common;

use elephant::accel::{AccelOptions, Ray, TwoLevelAccel};
use elephant::math::Affine;
use elephant::scene::{generate_challenge_scene, Geometry, Preset, SceneDesc, TriangleMesh};
use glam::Vec3;
use proptest::prelude::*;

use common::{diagonal_grazing, instanced_scene, random_rays, triangle_soup, BruteForce};

fn check(scene: &SceneDesc, rays: &[Ray]) -> usize {
    let opts = AccelOptions::default();
    let accel = TwoLevelAccel::build(scene, &opts);
    let brute = BruteForce::new(scene, &opts);
    let mut hits = 0;
    for (i, ray) in rays.iter().enumerate() {
        let want = brute.intersect(ray);
        let got = accel.intersect(ray).map(|h| h.key());
        assert_eq!(got, want, "ray {i}: {ray:?}");
        assert_eq!(accel.occluded(ray), want.is_some(), "ray {i}");
        hits += want.is_some() as usize;
    }
    hits
}

#[test]
fn soup_matches_brute_force() {
    let s = triangle_soup(400, 1);
    let hits = check(&s, &random_rays(TwoLevelAccel::build(&s, &AccelOptions::default()).world_bounds(), 1500, 2));
    assert!(hits > 300);
}

#[test]
fn instanced_scene_matches_brute_force() {
    let s = instanced_scene(3);
    let hits = check(&s, &random_rays(TwoLevelAccel::build(&s, &AccelOptions::default()).world_bounds(), 1500, 4));
    assert!(hits > 300);
}

#[test]
fn overlap_preset_matches_brute_force() {
    let s = generate_challenge_scene(&Preset::Overlap.spec(), 5).unwrap().0;
    let hits = check(&s, &random_rays(TwoLevelAccel::build(&s, &AccelOptions::default()).world_bounds(), 600, 6));
    assert!(hits > 100);
}

#[test]
fn diagonals_and_grazing_rays_match_brute_force() {
    let (s, rays) = diagonal_grazing(2000, 7);
    check(&s, &rays);
}

#[test]
fn duplicated_instance_ties_go_to_lowest_id() {
    let s = instanced_scene(3);
    let accel = TwoLevelAccel::build(&s, &AccelOptions::default());
    let rays = random_rays(accel.world_bounds(), 4000, 8);
    // instance 0 is duplicated as instance 1
    let mut tie_hits = 0;
    for r in &rays {
        if let Some(h) = accel.intersect(r) {
            assert_ne!(h.instance, 1, "tie resolved to the higher id");
            tie_hits += (h.instance == 0) as usize;
        }
    }
    assert!(tie_hits > 0);
}

#[test]
fn ray_interval_is_respected() {
    let s = triangle_soup(200, 9);
    let accel = TwoLevelAccel::build(&s, &AccelOptions::default());
    for mut r in random_rays(accel.world_bounds(), 300, 10) {
        let Some(h) = accel.intersect(&r) else { continue };
        r.tmax = h.t;
        assert!(accel.intersect(&r).map_or(true, |g| g.t < h.t));
        r.tmax = f32::INFINITY;
        r.tmin = h.t;
        assert!(accel.intersect(&r).map_or(true, |g| g.t > h.t));
    }
}

fn soup_strategy() -> impl Strategy<Value = Vec<[[f32; 3]; 3]>> {
    prop::collection::vec(prop::array::uniform3(prop::array::uniform3(-1.0f32..1.0)), 1..40)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn any_soup_any_transform_matches_brute_force(
        tris in soup_strategy(),
        shift in prop::array::uniform3(-2.0f32..2.0),
        angle in 0.0f32..360.0,
        scale in 0.2f32..3.0,
        seed in any::<u64>(),
    ) {
        let positions: Vec<Vec3> = tris.iter().flatten().map(|p| Vec3::from(*p)).collect();
        let indices = (0..tris.len() as u32).map(|i| [3 * i, 3 * i + 1, 3 * i + 2]).collect();
        let t = Affine::translation(Vec3::from(shift))
            .then_local(&Affine::rotation(angle, Vec3::new(1.0, 2.0, 0.5)))
            .then_local(&Affine::scale(Vec3::new(scale, 1.0, 1.0 / scale)));
        let s = common::single_object_scene(
            vec![Geometry::Triangles(TriangleMesh { positions, indices, normals: None })],
            &[Affine::IDENTITY, t],
        );
        let opts = AccelOptions::default();
        let accel = TwoLevelAccel::build(&s, &opts);
        let brute = BruteForce::new(&s, &opts);
        for r in random_rays(accel.world_bounds(), 64, seed) {
            prop_assert_eq!(accel.intersect(&r).map(|h| h.key()), brute.intersect(&r));
        }
    }
}
