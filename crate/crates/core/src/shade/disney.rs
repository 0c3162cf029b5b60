//! Principled BSDF with GGX multiple-scattering compensation.
//!
//! Lobes:
//! - GGX specular with Schlick Fresnel, `F0` blended from the dielectric
//!   specular level to the base color by `metallic`;
//! - a multiple-scattering term `Favg·(1-E1(μo))(1-E1(μi)) / (π(1-E1avg))`
//!   that restores the energy single scattering loses at high roughness;
//! - a diffuse base and the Burley sheen term, both scaled by
//!   `(1-Es(μo))(1-Es(μi)) / (1-Es_avg)` where `Es` is the full specular
//!   albedo, so light not reflected by the specular layer is what reaches the
//!   base;
//! - a GGX clearcoat (F0 = 0.04) that attenuates everything beneath it by
//!   `(1-Ecc(μo))(1-Ecc(μi))`.
//!
//! Every term is symmetric in `(wo, wi)`. Specular sampling draws visible
//! normals; reflections that land below the horizon are mirrored back up, and
//! the pdf accounts for both routes, so each sampling strategy is a
//! normalized density on the upper hemisphere.

use std::f64::consts::PI;

use glam::DVec3;
use serde::{Deserialize, Serialize};

use super::energy::{alpha_from_roughness, tables, EnergyTables, MIN_ROUGHNESS};
use super::microfacet::{
    cosine_hemisphere, flip_z, ggx_d, reflect, sample_vndf, schlick_weight, smith_g2,
    vndf_reflection_pdf,
};
use super::{Bsdf, BsdfSample, Lobe};
use crate::math::luminance;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DisneyMaterial {
    pub base_color: [f32; 3],
    pub metallic: f32,
    pub roughness: f32,
    pub specular: f32,
    pub specular_tint: f32,
    pub sheen: f32,
    pub sheen_tint: f32,
    pub clearcoat: f32,
    pub clearcoat_gloss: f32,
    pub ior: f32,
    /// Render as a smooth dielectric interface using `ior`.
    pub dielectric: bool,
}

impl Default for DisneyMaterial {
    fn default() -> Self {
        Self {
            base_color: [0.8, 0.8, 0.8],
            metallic: 0.0,
            roughness: 0.5,
            specular: 0.5,
            specular_tint: 0.0,
            sheen: 0.0,
            sheen_tint: 0.5,
            clearcoat: 0.0,
            clearcoat_gloss: 1.0,
            ior: 1.5,
            dielectric: false,
        }
    }
}

impl DisneyMaterial {
    /// Clamps every parameter into its valid range.
    #[must_use]
    pub fn sanitized(mut self) -> Self {
        let unit = |v: f32| if v.is_finite() { v.clamp(0.0, 1.0) } else { 0.0 };
        self.base_color = self.base_color.map(unit);
        self.metallic = unit(self.metallic);
        self.roughness = unit(self.roughness);
        self.specular = unit(self.specular);
        self.specular_tint = unit(self.specular_tint);
        self.sheen = unit(self.sheen);
        self.sheen_tint = unit(self.sheen_tint);
        self.clearcoat = unit(self.clearcoat);
        self.clearcoat_gloss = unit(self.clearcoat_gloss);
        self.ior = if self.ior.is_finite() { self.ior.max(1.0) } else { 1.5 };
        self
    }
}

fn lerp3(a: DVec3, b: DVec3, t: f64) -> DVec3 {
    a + (b - a) * t
}

fn lum(c: DVec3) -> f64 {
    luminance(c.to_array())
}

/// A material bound to a resolved base color, ready for evaluation.
#[derive(Clone, Debug)]
pub struct DisneyBsdf {
    roughness: f64,
    alpha: f64,
    f0: DVec3,
    f_avg: DVec3,
    e1_avg: f64,
    es_avg: DVec3,
    base: DVec3,
    sheen: DVec3,
    cc_weight: f64,
    cc_roughness: f64,
    cc_alpha: f64,
    /// `true` when the compensation denominator `1 - E1avg` is usable.
    ms_enabled: bool,
}

struct Directional {
    e1: f64,
    es: DVec3,
    ecc: f64,
}

impl DisneyBsdf {
    pub fn new(m: &DisneyMaterial, base_color: DVec3) -> Self {
        let m = m.sanitized();
        let t = tables();
        let c = base_color.clamp(DVec3::ZERO, DVec3::ONE);
        let metallic = m.metallic as f64;
        let roughness = (m.roughness as f64).max(MIN_ROUGHNESS);
        let l = lum(c);
        let tint = if l > 0.0 { c / l } else { DVec3::ONE };
        let spec_tint = lerp3(DVec3::ONE, tint, m.specular_tint as f64);
        let f0 = lerp3(spec_tint * (0.08 * m.specular as f64), c, metallic).min(DVec3::ONE);
        let f_avg = f0 + (DVec3::ONE - f0) / 21.0;
        let e1_avg = t.e1_avg(roughness);
        let e5_avg = t.e5_avg(roughness);
        let ms_enabled = 1.0 - e1_avg > 1e-9;
        let ms_avg = if ms_enabled { f_avg * (1.0 - e1_avg) } else { DVec3::ZERO };
        let es_avg = f0 * e1_avg + (DVec3::ONE - f0) * e5_avg + ms_avg;

        let mut base = c * (1.0 - metallic);
        let mut sheen = lerp3(DVec3::ONE, tint, m.sheen_tint as f64) * (m.sheen as f64 * (1.0 - metallic));
        for k in 0..3 {
            let room = 1.0 - es_avg[k];
            if room <= 1e-9 {
                base[k] = 0.0;
                sheen[k] = 0.0;
                continue;
            }
            let total = base[k] + sheen[k] * t.sheen_bound / room;
            if total > 1.0 {
                base[k] /= total;
                sheen[k] /= total;
            }
        }
        let cc_alpha_lin = 0.1 + (0.001 - 0.1) * m.clearcoat_gloss as f64;
        let cc_roughness = cc_alpha_lin.sqrt();
        Self {
            roughness,
            alpha: alpha_from_roughness(roughness),
            f0,
            f_avg,
            e1_avg,
            es_avg,
            base,
            sheen,
            cc_weight: 0.25 * m.clearcoat as f64,
            cc_roughness,
            cc_alpha: alpha_from_roughness(cc_roughness),
            ms_enabled,
        }
    }

    fn directional(&self, t: &EnergyTables, mu: f64) -> Directional {
        let e1 = t.e1(mu, self.roughness);
        let e5 = t.e5(mu, self.roughness);
        let ms = if self.ms_enabled { self.f_avg * (1.0 - e1) } else { DVec3::ZERO };
        let es = self.f0 * e1 + (DVec3::ONE - self.f0) * e5 + ms;
        let ecc = if self.cc_weight > 0.0 {
            self.cc_weight * (0.04 * t.e1(mu, self.cc_roughness) + 0.96 * t.e5(mu, self.cc_roughness))
        } else {
            0.0
        };
        Directional { e1, es, ecc }
    }

    /// Lobe selection probabilities `(specular, cosine, clearcoat)` for `wo`,
    /// proportional to approximate lobe albedos.
    fn lobe_probabilities(&self, t: &EnergyTables, o: &Directional, mu_o: f64) -> [f64; 3] {
        let att = 1.0 - o.ecc;
        let single = self.f0 * o.e1 + (DVec3::ONE - self.f0) * t.e5(mu_o, self.roughness);
        let w_spec = lum(single) * att;
        let ms = if self.ms_enabled { lum(self.f_avg) * (1.0 - o.e1) } else { 0.0 };
        let under = (DVec3::ONE - o.es).max(DVec3::ZERO);
        let w_cos = (ms + lum((self.base + self.sheen * 0.1) * under)) * att;
        let w_cc = o.ecc;
        let total = w_spec + w_cos + w_cc;
        if total <= 0.0 {
            return [0.0; 3];
        }
        [w_spec / total, w_cos / total, w_cc / total]
    }

    fn eval_inner(&self, wo: DVec3, wi: DVec3) -> (DVec3, f64) {
        if wo.z <= 0.0 || wi.z <= 0.0 {
            return (DVec3::ZERO, 0.0);
        }
        let t = tables();
        let o = self.directional(t, wo.z);
        let i = self.directional(t, wi.z);
        let h = (wo + wi).normalize();
        let oh = wo.dot(h).clamp(0.0, 1.0);
        let fw = schlick_weight(oh);
        let denom = 4.0 * wo.z * wi.z;

        let fresnel = self.f0 + (DVec3::ONE - self.f0) * fw;
        let spec = fresnel * (ggx_d(h, self.alpha) * smith_g2(wo, wi, self.alpha) / denom);
        let ms = if self.ms_enabled {
            self.f_avg * ((1.0 - o.e1) * (1.0 - i.e1) / (PI * (1.0 - self.e1_avg)))
        } else {
            DVec3::ZERO
        };
        let mut layered = DVec3::ZERO;
        for k in 0..3 {
            let room = 1.0 - self.es_avg[k];
            if room > 1e-9 && (self.base[k] > 0.0 || self.sheen[k] > 0.0) {
                let scale = (1.0 - o.es[k]).max(0.0) * (1.0 - i.es[k]).max(0.0) / room;
                layered[k] = (self.base[k] / PI + self.sheen[k] * fw) * scale;
            }
        }
        let mut f = spec + ms + layered;
        if self.cc_weight > 0.0 {
            f *= (1.0 - o.ecc) * (1.0 - i.ecc);
            let fcc = 0.04 + 0.96 * fw;
            f += DVec3::splat(
                self.cc_weight * fcc * ggx_d(h, self.cc_alpha) * smith_g2(wo, wi, self.cc_alpha) / denom,
            );
        }

        let p = self.lobe_probabilities(t, &o, wo.z);
        let cos_pdf = wi.z / PI;
        let spec_pdf = |alpha: f64| vndf_reflection_pdf(wo, wi, alpha) + vndf_reflection_pdf(wo, flip_z(wi), alpha);
        let mut pdf = p[1] * cos_pdf;
        if p[0] > 0.0 {
            pdf += p[0] * spec_pdf(self.alpha);
        }
        if p[2] > 0.0 {
            pdf += p[2] * spec_pdf(self.cc_alpha);
        }
        (f.max(DVec3::ZERO), pdf)
    }
}

impl Bsdf for DisneyBsdf {
    fn eval(&self, wo: DVec3, wi: DVec3) -> (DVec3, f64) {
        self.eval_inner(wo, wi)
    }

    fn sample(&self, wo: DVec3, u: [f64; 2], u_lobe: f64) -> Option<BsdfSample> {
        if wo.z <= 0.0 {
            return None;
        }
        let t = tables();
        let o = self.directional(t, wo.z);
        let p = self.lobe_probabilities(t, &o, wo.z);
        let (lobe, alpha) = if u_lobe < p[0] {
            (Lobe::Specular, Some(self.alpha))
        } else if u_lobe < p[0] + p[1] || p[2] == 0.0 {
            (Lobe::Diffuse, None)
        } else {
            (Lobe::Clearcoat, Some(self.cc_alpha))
        };
        let wi = match alpha {
            Some(alpha) => {
                let h = sample_vndf(wo, alpha, u);
                let r = reflect(wo, h);
                if r.z < 0.0 {
                    flip_z(r)
                } else {
                    r
                }
            }
            None => cosine_hemisphere(u),
        };
        if wi.z <= 0.0 {
            return None;
        }
        let (f, pdf) = self.eval_inner(wo, wi);
        if pdf <= 0.0 || !pdf.is_finite() {
            return None;
        }
        Some(BsdfSample { wi, f, pdf, lobe, delta: false })
    }
}

/// Smooth dielectric interface (reflection + refraction, both delta).
#[derive(Clone, Copy, Debug)]
pub struct SmoothDielectric {
    pub ior: f64,
    pub tint: DVec3,
}

pub fn fresnel_dielectric(cos_i: f64, eta: f64) -> f64 {
    let cos_i = cos_i.clamp(-1.0, 1.0);
    let (cos_i, eta) = if cos_i < 0.0 { (-cos_i, 1.0 / eta) } else { (cos_i, eta) };
    let sin2_t = (1.0 - cos_i * cos_i) / (eta * eta);
    if sin2_t >= 1.0 {
        return 1.0;
    }
    let cos_t = (1.0 - sin2_t).sqrt();
    let rs = (cos_i - eta * cos_t) / (cos_i + eta * cos_t);
    let rp = (eta * cos_i - cos_t) / (eta * cos_i + cos_t);
    0.5 * (rs * rs + rp * rp)
}

impl Bsdf for SmoothDielectric {
    fn eval(&self, _wo: DVec3, _wi: DVec3) -> (DVec3, f64) {
        (DVec3::ZERO, 0.0)
    }

    fn sample(&self, wo: DVec3, _u: [f64; 2], u_lobe: f64) -> Option<BsdfSample> {
        if wo.z == 0.0 {
            return None;
        }
        let fr = fresnel_dielectric(wo.z, self.ior);
        if u_lobe < fr {
            let wi = DVec3::new(-wo.x, -wo.y, wo.z);
            return Some(BsdfSample { wi, f: DVec3::splat(fr / wi.z.abs()), pdf: fr, lobe: Lobe::Specular, delta: true });
        }
        let entering = wo.z > 0.0;
        let eta = if entering { self.ior } else { 1.0 / self.ior };
        let n = if entering { DVec3::Z } else { -DVec3::Z };
        let cos_i = wo.dot(n);
        let sin2_t = (1.0 - cos_i * cos_i).max(0.0) / (eta * eta);
        if sin2_t >= 1.0 {
            return None;
        }
        let cos_t = (1.0 - sin2_t).sqrt();
        let wi = -wo / eta + n * (cos_i / eta - cos_t);
        let ft = (1.0 - fr) / (eta * eta);
        Some(BsdfSample {
            wi,
            f: self.tint * (ft / wi.z.abs()),
            pdf: 1.0 - fr,
            lobe: Lobe::Transmission,
            delta: true,
        })
    }

    fn is_delta(&self) -> bool {
        true
    }
}
