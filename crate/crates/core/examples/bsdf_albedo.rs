//! Directional albedo of a white Disney material over roughness and
//! incidence angle, estimated by importance sampling. Values near 1 mean
//! the lobes neither lose nor gain energy.
//!
//! cargo run --release --example bsdf_albedo -- [samples]

use elephant::shade::{Bsdf, DisneyBsdf, DisneyMaterial};
use glam::DVec3;
use rand::{Rng, SeedableRng};

fn main() {
    let n: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(100_000);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
    let cosines = [0.1, 0.325, 0.55, 0.775, 1.0f64];
    for metallic in [0.0, 1.0] {
        println!("metallic {metallic}");
        print!("{:>10}", "rough\\cos");
        cosines.iter().for_each(|c| print!("{c:>9.3}"));
        println!();
        for roughness in [0.0, 0.25, 0.5, 0.75, 1.0] {
            let m = DisneyMaterial { base_color: [1.0; 3], roughness, metallic, ..Default::default() };
            let bsdf = DisneyBsdf::new(&m, DVec3::ONE);
            print!("{roughness:>10.2}");
            for cos in cosines {
                let wo = DVec3::new((1.0 - cos * cos).sqrt(), 0.0, cos);
                let mut sum = DVec3::ZERO;
                for _ in 0..n {
                    if let Some(s) = bsdf.sample(wo, [rng.gen(), rng.gen()], rng.gen()) {
                        sum += s.f * s.wi.z / s.pdf;
                    }
                }
                print!("{:>9.4}", (sum / n as f64).y);
            }
            println!();
        }
    }
}
