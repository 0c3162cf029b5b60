//! Directional-albedo tables for the GGX lobe, used for multiple-scattering
//! compensation and for energy-preserving layering of the diffuse base.
//!
//! `E1(μ, r)` is the single-scattering albedo with unit Fresnel and `E5(μ, r)`
//! the albedo weighted by the Schlick factor `(1 - o·h)^5`, so for any Schlick
//! `F0` the single-scattering albedo is `F0·E1 + (1 - F0)·E5`. Tables are
//! indexed by `x = √μ` and roughness `r`, both on uniform grids, and looked up
//! bilinearly. Hemispherical averages are integrated exactly over the
//! piecewise-linear-in-x interpolant, which makes the compensation lobes
//! integrate to exactly their target energy.

use std::sync::OnceLock;

use glam::DVec3;
use rayon::prelude::*;

use super::microfacet::{reflect, sample_vndf, schlick_weight, smith_g1, smith_g2};

pub const MU_SIZE: usize = 64;
pub const ROUGHNESS_SIZE: usize = 64;
const STRATA: usize = 64;
pub const MIN_ROUGHNESS: f64 = 1e-3;

pub struct EnergyTables {
    e1: Vec<f64>,
    e5: Vec<f64>,
    e1_avg: Vec<f64>,
    e5_avg: Vec<f64>,
    /// Upper bound of `∫ (1 - o·h)^5 cosθi dωi` over all outgoing directions.
    pub sheen_bound: f64,
}

pub fn alpha_from_roughness(r: f64) -> f64 {
    let r = r.clamp(MIN_ROUGHNESS, 1.0);
    r * r
}

/// Single-scattering albedos `(E1, E5)` at one `(μ, roughness)` point by
/// stratified visible-normal quadrature.
pub fn single_scatter_albedo(mu: f64, roughness: f64, strata: usize) -> (f64, f64) {
    let mu = mu.clamp(1e-4, 1.0);
    let alpha = alpha_from_roughness(roughness);
    let wo = DVec3::new((1.0 - mu * mu).max(0.0).sqrt(), 0.0, mu);
    let g1 = smith_g1(wo, alpha);
    let (mut e1, mut e5) = (0.0, 0.0);
    // Midpoint rule in t with u0 = 1 - (1 - t)³, which crowds samples into
    // the rim of the visible-normal disk where the GGX tail lives.
    for i in 0..strata {
        let t = (i as f64 + 0.5) / strata as f64;
        let u0 = 1.0 - (1.0 - t).powi(3);
        let jac = 3.0 * (1.0 - t).powi(2);
        for j in 0..strata {
            let u = [u0, (j as f64 + 0.5) / strata as f64];
            let h = sample_vndf(wo, alpha, u);
            let wi = reflect(wo, h);
            if wi.z <= 0.0 {
                continue;
            }
            let w = jac * smith_g2(wo, wi, alpha) / g1;
            e1 += w;
            e5 += w * schlick_weight(wo.dot(h));
        }
    }
    let n = (strata * strata) as f64;
    (e1 / n, e5 / n)
}

fn sheen_albedo(mu_o: f64, n: usize) -> f64 {
    let wo = DVec3::new((1.0 - mu_o * mu_o).max(0.0).sqrt(), 0.0, mu_o);
    let mut sum = 0.0;
    for i in 0..n {
        let ct = (i as f64 + 0.5) / n as f64;
        let st = (1.0 - ct * ct).sqrt();
        for j in 0..n {
            let phi = std::f64::consts::TAU * (j as f64 + 0.5) / n as f64;
            let wi = DVec3::new(st * phi.cos(), st * phi.sin(), ct);
            let h = (wo + wi).normalize_or_zero();
            sum += schlick_weight(wo.dot(h)) * ct;
        }
    }
    sum * std::f64::consts::TAU / (n * n) as f64
}

/// Exact `4∫ E(x) x³ dx` over one segment where `E` is linear in `x`.
fn segment_moment(x0: f64, x1: f64, e0: f64, e1: f64) -> f64 {
    let b = (e1 - e0) / (x1 - x0);
    let a = e0 - b * x0;
    let p = |x: f64| a * x.powi(4) / 4.0 + b * x.powi(5) / 5.0;
    4.0 * (p(x1) - p(x0))
}

impl EnergyTables {
    fn compute() -> Self {
        let cells: Vec<(f64, f64)> = (0..ROUGHNESS_SIZE * MU_SIZE)
            .into_par_iter()
            .map(|k| {
                let (ri, xi) = (k / MU_SIZE, k % MU_SIZE);
                let x = xi as f64 / (MU_SIZE - 1) as f64;
                let r = ri as f64 / (ROUGHNESS_SIZE - 1) as f64;
                single_scatter_albedo(x * x, r, STRATA)
            })
            .collect();
        let e1: Vec<f64> = cells.iter().map(|c| c.0).collect();
        let e5: Vec<f64> = cells.iter().map(|c| c.1).collect();
        let avg = |t: &[f64]| -> Vec<f64> {
            (0..ROUGHNESS_SIZE)
                .map(|ri| {
                    let row = &t[ri * MU_SIZE..(ri + 1) * MU_SIZE];
                    (0..MU_SIZE - 1)
                        .map(|i| {
                            let x0 = i as f64 / (MU_SIZE - 1) as f64;
                            let x1 = (i + 1) as f64 / (MU_SIZE - 1) as f64;
                            segment_moment(x0, x1, row[i], row[i + 1])
                        })
                        .sum()
                })
                .collect()
        };
        let sheen_bound = (0..=32)
            .map(|i| sheen_albedo(i as f64 / 32.0, 256))
            .fold(0.0, f64::max)
            * 1.02;
        Self { e1_avg: avg(&e1), e5_avg: avg(&e5), e1, e5, sheen_bound }
    }

    fn coords(mu: f64, roughness: f64) -> (usize, usize, f64, f64) {
        let x = mu.clamp(0.0, 1.0).sqrt() * (MU_SIZE - 1) as f64;
        let r = roughness.clamp(0.0, 1.0) * (ROUGHNESS_SIZE - 1) as f64;
        let xi = (x.floor() as usize).min(MU_SIZE - 2);
        let ri = (r.floor() as usize).min(ROUGHNESS_SIZE - 2);
        (xi, ri, x - xi as f64, r - ri as f64)
    }

    fn lookup(table: &[f64], mu: f64, roughness: f64) -> f64 {
        let (xi, ri, fx, fr) = Self::coords(mu, roughness);
        let at = |r: usize, x: usize| table[r * MU_SIZE + x];
        let a = at(ri, xi) * (1.0 - fx) + at(ri, xi + 1) * fx;
        let b = at(ri + 1, xi) * (1.0 - fx) + at(ri + 1, xi + 1) * fx;
        a * (1.0 - fr) + b * fr
    }

    fn lookup_avg(table: &[f64], roughness: f64) -> f64 {
        let r = roughness.clamp(0.0, 1.0) * (ROUGHNESS_SIZE - 1) as f64;
        let ri = (r.floor() as usize).min(ROUGHNESS_SIZE - 2);
        let f = r - ri as f64;
        table[ri] * (1.0 - f) + table[ri + 1] * f
    }

    pub fn e1(&self, mu: f64, roughness: f64) -> f64 {
        Self::lookup(&self.e1, mu, roughness)
    }

    pub fn e5(&self, mu: f64, roughness: f64) -> f64 {
        Self::lookup(&self.e5, mu, roughness)
    }

    pub fn e1_avg(&self, roughness: f64) -> f64 {
        Self::lookup_avg(&self.e1_avg, roughness)
    }

    pub fn e5_avg(&self, roughness: f64) -> f64 {
        Self::lookup_avg(&self.e5_avg, roughness)
    }
}

/// Process-wide tables, computed on first use.
pub fn tables() -> &'static EnergyTables {
    static TABLES: OnceLock<EnergyTables> = OnceLock::new();
    TABLES.get_or_init(EnergyTables::compute)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn albedos_are_bounded() {
        let t = tables();
        for ri in 0..=10 {
            for mi in 0..=10 {
                let (mu, r) = (mi as f64 / 10.0, ri as f64 / 10.0);
                let e1 = t.e1(mu, r);
                assert!((0.0..=1.0 + 1e-9).contains(&e1), "E1({mu},{r}) = {e1}");
                assert!(t.e5(mu, r) <= e1 + 1e-12);
            }
            assert!(t.e1_avg(ri as f64 / 10.0) <= 1.0 + 1e-9);
        }
        assert!(t.sheen_bound > 0.0 && t.sheen_bound < 1.0);
    }

    #[test]
    fn smooth_surfaces_reflect_everything() {
        let t = tables();
        assert!(t.e1(1.0, 0.0) > 0.999);
        assert!(t.e1(0.5, 0.0) > 0.999);
    }

    #[test]
    fn interpolation_tracks_direct_quadrature() {
        let t = tables();
        let mut worst: f64 = 0.0;
        for &r in &[0.05, 0.3, 0.55, 0.83, 1.0] {
            for &mu in &[0.1, 0.27, 0.5, 0.71, 0.95] {
                let (e1, _) = single_scatter_albedo(mu, r, 256);
                worst = worst.max((t.e1(mu, r) - e1).abs());
            }
        }
        assert!(worst < 1e-3, "worst table error {worst}");
    }
}
