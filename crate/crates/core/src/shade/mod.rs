//! Materials, lights and face textures.

pub mod cache;
pub mod disney;
pub mod energy;
pub mod facetex;
pub mod lights;
pub mod microfacet;

use glam::DVec3;

pub use cache::{CacheConfig, CacheCounters, FaceTextureCache};
pub use disney::{DisneyBsdf, DisneyMaterial, SmoothDielectric};
pub use lights::{sample_light, Environment, LatLongImage, Light, LightSample, QuadLight};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Lobe {
    Diffuse,
    Specular,
    Clearcoat,
    Transmission,
}

#[derive(Clone, Copy, Debug)]
pub struct BsdfSample {
    pub wi: DVec3,
    /// BSDF value (not cosine-weighted). For delta lobes this is the
    /// weight such that `f·|cos| / pdf` is the path throughput factor.
    pub f: DVec3,
    pub pdf: f64,
    pub lobe: Lobe,
    pub delta: bool,
}

/// Scattering in a z-up shading frame. `eval` returns `(f, pdf)`, where
/// `pdf` is the solid-angle density with which `sample` picks `wi`.
pub trait Bsdf {
    fn eval(&self, wo: DVec3, wi: DVec3) -> (DVec3, f64);
    fn sample(&self, wo: DVec3, u: [f64; 2], u_lobe: f64) -> Option<BsdfSample>;
    fn is_delta(&self) -> bool {
        false
    }
}

/// Ideal diffuse reflector.
#[derive(Clone, Copy, Debug)]
pub struct Lambertian {
    pub albedo: DVec3,
}

impl Bsdf for Lambertian {
    fn eval(&self, wo: DVec3, wi: DVec3) -> (DVec3, f64) {
        if wo.z <= 0.0 || wi.z <= 0.0 {
            return (DVec3::ZERO, 0.0);
        }
        (self.albedo * std::f64::consts::FRAC_1_PI, wi.z * std::f64::consts::FRAC_1_PI)
    }

    fn sample(&self, wo: DVec3, u: [f64; 2], _u_lobe: f64) -> Option<BsdfSample> {
        if wo.z <= 0.0 {
            return None;
        }
        let wi = microfacet::cosine_hemisphere(u);
        let (f, pdf) = self.eval(wo, wi);
        (pdf > 0.0).then_some(BsdfSample { wi, f, pdf, lobe: Lobe::Diffuse, delta: false })
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TextureError {
    #[error("face {face} out of range for texture {texture} with {face_count} faces")]
    FaceIdOutOfRange { texture: u32, face: u32, face_count: usize },
    #[error("unknown texture {0}")]
    UnknownTexture(u32),
    #[error("texture I/O error in {path}: {message}")]
    Io { path: String, message: String },
    #[error("malformed texture file {path}: {message}")]
    Format { path: String, message: String },
}
