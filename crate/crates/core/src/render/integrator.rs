//! Unidirectional path tracing with next-event estimation.

use glam::{DVec3, Vec3};

use super::profile::{Category, Profiler};
use super::sampler::PixelSampler;
use super::RenderScene;
use crate::accel::{Hit, Ray};
use crate::math::{luminance, orthonormal_basis};
use crate::scene::Geometry;
use crate::shade::microfacet::power_heuristic;
use crate::shade::{sample_light, Bsdf, DisneyBsdf, Light, SmoothDielectric};

/// Sampler dimensions consumed by the camera before the first bounce.
pub const CAMERA_DIMS: u32 = 2;
/// Sampler dimensions reserved per bounce.
pub const BOUNCE_DIMS: u32 = 8;
/// Bounce index from which Russian roulette may end a path.
pub const RR_START: u32 = 3;

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PathResult {
    pub radiance: DVec3,
    pub albedo: DVec3,
    pub normal: DVec3,
    /// Primary, bounce and shadow rays.
    pub rays: u32,
    pub first_hit: Option<Hit>,
}

/// Local shading geometry at a hit.
pub struct SurfacePoint {
    pub position: DVec3,
    /// Geometric normal, as wound.
    pub ng: DVec3,
    /// Shading normal on the same side as `ng`.
    pub ns: DVec3,
    pub face: u32,
    pub uv: [f64; 2],
}

fn offset_origin(p: DVec3, ng: DVec3, dir: DVec3) -> DVec3 {
    let scale = 2e-5 * (1.0 + p.abs().max_element());
    if ng.dot(dir) >= 0.0 {
        p + ng * scale
    } else {
        p - ng * scale
    }
}

pub fn surface_point(scene: &RenderScene, origin: DVec3, dir: DVec3, hit: &Hit) -> SurfacePoint {
    let position = origin + dir * hit.t as f64;
    let ng = hit.normal.as_dvec3();
    let inst = &scene.accel.instances[hit.instance as usize];
    let shading = scene.shape_shading(hit.instance, hit.geom);
    let mut ns = ng;
    if shading.has_normals {
        let shape = &scene.desc.objects[inst.object as usize].shapes[hit.geom as usize];
        if let Geometry::Triangles(m) = &shape.geometry {
            if let Some(normals) = &m.normals {
                let tri = m.indices[hit.prim as usize];
                let (u, v) = (hit.u, hit.v);
                let n = normals[tri[0] as usize] * (1.0 - u - v) + normals[tri[1] as usize] * u + normals[tri[2] as usize] * v;
                let w = inst.inverse.transpose_vector(n).as_dvec3().normalize_or_zero();
                if w != DVec3::ZERO {
                    ns = if w.dot(ng) < 0.0 { -w } else { w };
                }
            }
        }
    }
    SurfacePoint {
        position,
        ng,
        ns,
        face: hit.prim / shading.prims_per_face.max(1),
        uv: [hit.u as f64, hit.v as f64],
    }
}

enum AnyBsdf {
    Disney(DisneyBsdf),
    Dielectric(SmoothDielectric),
}

impl AnyBsdf {
    fn get(&self) -> &dyn Bsdf {
        match self {
            AnyBsdf::Disney(b) => b,
            AnyBsdf::Dielectric(b) => b,
        }
    }
}

/// Base color at a hit after texture modulation.
pub fn base_color(scene: &RenderScene, hit: &Hit, sp: &SurfacePoint, prof: &mut Profiler) -> DVec3 {
    let shading = scene.shape_shading(hit.instance, hit.geom);
    let m = &scene.desc.materials[shading.material as usize];
    let c = Vec3::from(m.params.base_color).as_dvec3();
    if m.texture < 0 {
        return c;
    }
    let t = prof.time(Category::Texture, || scene.textures.sample(m.texture as u32, sp.face, sp.uv[0], sp.uv[1]));
    // binding is checked at build time, so failures here are I/O trouble
    c * t.unwrap_or(DVec3::ONE)
}

fn light_pick_pdf(scene: &RenderScene) -> f64 {
    1.0 / scene.lights.len().max(1) as f64
}

/// Traces one camera path. `max_depth` counts surface interactions that
/// may scatter; the ray leaving the last one still collects emission.
pub fn trace_path(
    scene: &RenderScene,
    sampler: &mut PixelSampler,
    origin: DVec3,
    dir: DVec3,
    max_depth: u32,
    prof: &mut Profiler,
) -> PathResult {
    let mut out = PathResult::default();
    let mut radiance = DVec3::ZERO;
    let mut beta = DVec3::ONE;
    let mut ray_o = origin;
    let mut ray_d = dir;
    let mut prev_pdf = 0.0;
    let mut prev_delta = true;
    let pick_pdf = light_pick_pdf(scene);
    let env_pdf = pick_pdf / (4.0 * std::f64::consts::PI);

    for bounce in 0..=max_depth {
        let ray = Ray { origin: ray_o.as_vec3(), dir: ray_d.as_vec3(), tmin: 0.0, tmax: f32::INFINITY };
        out.rays += 1;
        let hit = prof.traverse(|c| scene.accel.intersect_counted(&ray, c));
        let Some(hit) = hit else {
            let le = scene.escaped(ray_d);
            if le != DVec3::ZERO {
                let w = if prev_delta { 1.0 } else { power_heuristic(prev_pdf, env_pdf) };
                radiance += beta * le * w;
            }
            break;
        };
        if bounce == 0 {
            out.first_hit = Some(hit);
        }
        let sp = prof.time(Category::PostIntersect, || surface_point(scene, ray_o, ray_d, &hit));

        if let Some(q) = scene.emitter(hit.instance, hit.geom, hit.prim) {
            let le = q.emitted(ray_d);
            if le != DVec3::ZERO {
                let w = if prev_delta {
                    1.0
                } else {
                    power_heuristic(prev_pdf, pick_pdf * q.pdf(ray_d, hit.t as f64))
                };
                radiance += beta * le * w;
            }
        }

        let shading = scene.shape_shading(hit.instance, hit.geom);
        let material = &scene.desc.materials[shading.material as usize].params;
        let color = base_color(scene, &hit, &sp, prof);
        if bounce == 0 {
            out.albedo = color;
            out.normal = if sp.ns.dot(ray_d) > 0.0 { -sp.ns } else { sp.ns };
        }
        if bounce == max_depth {
            break;
        }

        let wo_world = -ray_d;
        let (bsdf, n) = prof.time(Category::SampleShade, || {
            if material.dielectric {
                (AnyBsdf::Dielectric(SmoothDielectric { ior: material.ior as f64, tint: color }), sp.ns)
            } else {
                let flip = if sp.ng.dot(wo_world) < 0.0 { -1.0 } else { 1.0 };
                (AnyBsdf::Disney(DisneyBsdf::new(material, color)), sp.ns * flip)
            }
        });
        let bsdf = bsdf.get();
        let (t, b) = orthonormal_basis(n);
        let to_local = |v: DVec3| DVec3::new(v.dot(t), v.dot(b), v.dot(n));
        let to_world = |v: DVec3| t * v.x + b * v.y + n * v.z;
        let mut wo = to_local(wo_world);
        if !bsdf.is_delta() && wo.z <= 0.0 {
            // shading normal turned away from the viewer; fall back to grazing
            wo.z = 1e-6;
            wo = wo.normalize();
        }

        sampler.seek(CAMERA_DIMS + bounce * BOUNCE_DIMS);
        let u_light = sampler.next();
        let u_light_pos = sampler.next2();
        let u_lobe = sampler.next();
        let u_bsdf = sampler.next2();
        let u_rr = sampler.next();

        if !bsdf.is_delta() && !scene.lights.is_empty() {
            let k = ((u_light * scene.lights.len() as f64) as usize).min(scene.lights.len() - 1);
            let light = &scene.lights[k];
            let contrib = prof.time(Category::SampleShade, || {
                let ls = sample_light(light, sp.position, u_light_pos)?;
                if ls.pdf <= 0.0 || ls.radiance == DVec3::ZERO {
                    return None;
                }
                let wi = to_local(ls.direction);
                let (f, bpdf) = bsdf.eval(wo, wi);
                let cos = wi.z.abs();
                if f == DVec3::ZERO || cos == 0.0 {
                    return None;
                }
                let light_pdf = ls.pdf * pick_pdf;
                let w = power_heuristic(light_pdf, bpdf);
                Some((ls, f * ls.radiance * (cos * w / light_pdf)))
            });
            if let Some((ls, c)) = contrib {
                let o = offset_origin(sp.position, sp.ng, ls.direction);
                let tmax = match light {
                    Light::Quad(_) => ((ls.distance - (o - sp.position).length()) * (1.0 - 1e-4)) as f32,
                    Light::Environment(_) => f32::INFINITY,
                };
                let shadow = Ray { origin: o.as_vec3(), dir: ls.direction.as_vec3(), tmin: 0.0, tmax };
                out.rays += 1;
                let blocked =
                    prof.traverse(|c| scene.accel.occluded_counted(&shadow, c));
                if !blocked {
                    radiance += beta * c;
                }
            }
        }

        let Some(bs) = prof.time(Category::SampleShade, || bsdf.sample(wo, u_bsdf, u_lobe)) else { break };
        if bs.pdf <= 0.0 {
            break;
        }
        beta *= bs.f * (bs.wi.z.abs() / bs.pdf);
        if beta == DVec3::ZERO {
            break;
        }
        prev_pdf = bs.pdf;
        prev_delta = bs.delta;
        let wi_world = to_world(bs.wi).normalize();
        ray_o = offset_origin(sp.position, sp.ng, wi_world);
        ray_d = wi_world;

        if bounce + 1 >= RR_START {
            let q = luminance(beta.to_array()).clamp(0.05, 0.95);
            if u_rr >= q {
                break;
            }
            beta /= q;
        }
    }

    if !radiance.is_finite() {
        prof.nonfinite += 1;
        radiance = DVec3::ZERO;
    }
    out.radiance = radiance;
    out
}
