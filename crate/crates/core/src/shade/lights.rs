use std::f64::consts::PI;

use glam::DVec3;

use super::microfacet::uniform_sphere;
use crate::scene::LightDesc;

#[derive(Clone, Debug)]
pub struct QuadLight {
    pub origin: DVec3,
    pub edge_u: DVec3,
    pub edge_v: DVec3,
    pub normal: DVec3,
    pub area: f64,
    pub radiance: DVec3,
}

impl QuadLight {
    pub fn from_corners(c: [DVec3; 4], radiance: DVec3) -> Self {
        let edge_u = c[1] - c[0];
        let edge_v = c[3] - c[0];
        let n = edge_u.cross(edge_v);
        let area = n.length();
        Self {
            origin: c[0],
            edge_u,
            edge_v,
            normal: if area > 0.0 { n / area } else { DVec3::Z },
            area,
            radiance: radiance.max(DVec3::ZERO),
        }
    }

    /// Radiance leaving the light toward `-dir` (the front side only).
    pub fn emitted(&self, dir: DVec3) -> DVec3 {
        if self.normal.dot(-dir) > 0.0 {
            self.radiance
        } else {
            DVec3::ZERO
        }
    }

    /// Solid-angle density of sampling the point at `distance` along `dir`.
    pub fn pdf(&self, dir: DVec3, distance: f64) -> f64 {
        let cos = self.normal.dot(-dir).abs();
        if cos <= 0.0 || self.area <= 0.0 {
            return 0.0;
        }
        distance * distance / (self.area * cos)
    }
}

/// Lat-long image, row-major, `v = 0` at +Y.
#[derive(Clone, Debug)]
pub struct LatLongImage {
    pub width: usize,
    pub height: usize,
    pub texels: Vec<[f32; 3]>,
}

impl LatLongImage {
    /// Maps a unit direction to `(u, v) ∈ [0,1)²`: longitude from +X toward
    /// +Z around +Y, latitude from +Y down.
    pub fn direction_to_uv(d: DVec3) -> (f64, f64) {
        let mut phi = d.z.atan2(d.x);
        if phi < 0.0 {
            phi += 2.0 * PI;
        }
        let theta = d.y.clamp(-1.0, 1.0).acos();
        ((phi / (2.0 * PI)).min(1.0 - f64::EPSILON), theta / PI)
    }

    /// Bilinear lookup with longitude wraparound and latitude clamping.
    pub fn lookup(&self, u: f64, v: f64) -> DVec3 {
        let x = u * self.width as f64 - 0.5;
        let y = (v * self.height as f64 - 0.5).clamp(0.0, (self.height - 1) as f64);
        let x0 = x.floor();
        let fx = x - x0;
        let y0 = y.floor();
        let fy = y - y0;
        let w = self.width as i64;
        let xi0 = (x0 as i64).rem_euclid(w) as usize;
        let xi1 = (x0 as i64 + 1).rem_euclid(w) as usize;
        let yi0 = y0 as usize;
        let yi1 = (yi0 + 1).min(self.height - 1);
        let at = |x: usize, y: usize| {
            let t = self.texels[y * self.width + x];
            DVec3::new(t[0] as f64, t[1] as f64, t[2] as f64)
        };
        let top = at(xi0, yi0) * (1.0 - fx) + at(xi1, yi0) * fx;
        let bottom = at(xi0, yi1) * (1.0 - fx) + at(xi1, yi1) * fx;
        top * (1.0 - fy) + bottom * fy
    }
}

#[derive(Clone, Debug)]
pub struct Environment {
    pub radiance: DVec3,
    pub image: Option<LatLongImage>,
}

pub fn eval_environment(env: &Environment, dir: DVec3) -> DVec3 {
    match &env.image {
        None => env.radiance,
        Some(img) => {
            let (u, v) = LatLongImage::direction_to_uv(dir);
            env.radiance * img.lookup(u, v)
        }
    }
}

#[derive(Clone, Debug)]
pub enum Light {
    Quad(QuadLight),
    Environment(Environment),
}

#[derive(Clone, Copy, Debug)]
pub struct LightSample {
    pub direction: DVec3,
    pub distance: f64,
    pub radiance: DVec3,
    pub pdf: f64,
}

impl Light {
    pub fn from_desc(desc: &LightDesc, image: Option<LatLongImage>) -> Self {
        let rgb = |c: [f32; 3]| DVec3::new(c[0] as f64, c[1] as f64, c[2] as f64);
        match desc {
            LightDesc::QuadArea { corners, radiance } => {
                Light::Quad(QuadLight::from_corners(corners.map(|c| c.as_dvec3()), rgb(*radiance)))
            }
            LightDesc::Environment { radiance, .. } => {
                Light::Environment(Environment { radiance: rgb(*radiance).max(DVec3::ZERO), image })
            }
        }
    }
}

/// Samples a direction toward `light` from `point`. Quads are sampled
/// uniformly by area; the environment uniformly over the sphere.
pub fn sample_light(light: &Light, point: DVec3, u: [f64; 2]) -> Option<LightSample> {
    match light {
        Light::Quad(q) => {
            let p = q.origin + q.edge_u * u[0] + q.edge_v * u[1];
            let d = p - point;
            let dist = d.length();
            if dist <= 0.0 {
                return None;
            }
            let dir = d / dist;
            let cos = q.normal.dot(-dir);
            let pdf = q.pdf(dir, dist);
            if cos <= 0.0 {
                return Some(LightSample { direction: dir, distance: dist, radiance: DVec3::ZERO, pdf });
            }
            Some(LightSample { direction: dir, distance: dist, radiance: q.radiance, pdf })
        }
        Light::Environment(env) => {
            let dir = uniform_sphere(u);
            Some(LightSample {
                direction: dir,
                distance: f64::INFINITY,
                radiance: eval_environment(env, dir),
                pdf: 1.0 / (4.0 * PI),
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_quad_above_point() {
        // unit quad at height 1 facing down
        let q = QuadLight::from_corners(
            [
                DVec3::new(-0.5, 1.0, -0.5),
                DVec3::new(0.5, 1.0, -0.5),
                DVec3::new(0.5, 1.0, 0.5),
                DVec3::new(-0.5, 1.0, 0.5),
            ],
            DVec3::ONE,
        );
        assert!((q.normal - DVec3::new(0.0, -1.0, 0.0)).length() < 1e-12);
        let s = sample_light(&Light::Quad(q), DVec3::ZERO, [0.5, 0.5]).unwrap();
        assert!((s.distance - 1.0).abs() < 1e-12);
        assert!((s.pdf - 1.0).abs() < 1e-12);
        assert_eq!(s.radiance, DVec3::ONE);
    }

    #[test]
    fn quad_backface_is_dark() {
        let q = QuadLight::from_corners(
            [DVec3::ZERO, DVec3::X, DVec3::new(1.0, 1.0, 0.0), DVec3::Y],
            DVec3::ONE,
        );
        // normal is +Z; point below sees the back
        let s = sample_light(&Light::Quad(q), DVec3::new(0.5, 0.5, -1.0), [0.5, 0.5]).unwrap();
        assert_eq!(s.radiance, DVec3::ZERO);
    }

    #[test]
    fn constant_environment() {
        let env = Environment { radiance: DVec3::new(0.2, 0.3, 0.4), image: None };
        for d in [DVec3::X, -DVec3::Y, DVec3::new(0.3, 0.4, -0.5).normalize()] {
            assert_eq!(eval_environment(&env, d), env.radiance);
        }
    }

    #[test]
    fn two_texel_lat_long() {
        let img = LatLongImage { width: 2, height: 1, texels: vec![[1.0, 0.0, 0.0], [0.0, 0.0, 1.0]] };
        let env = Environment { radiance: DVec3::ONE, image: Some(img) };
        // texel centers sit at longitudes π/2 (+Z) and 3π/2 (−Z)
        assert_eq!(eval_environment(&env, DVec3::Z), DVec3::new(1.0, 0.0, 0.0));
        assert_eq!(eval_environment(&env, -DVec3::Z), DVec3::new(0.0, 0.0, 1.0));
    }
}
