//! Progressive tile-parallel path tracing.

pub mod debug;
pub mod denoise;
pub mod frame;
pub mod framebuffer;
pub mod integrator;
pub mod output;
pub mod profile;
pub mod sampler;

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use glam::{DVec3, Vec3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::accel::{AccelOptions, TwoLevelAccel};
use crate::scene::{CameraDesc, Geometry, InvalidScene, LightDesc, SceneDesc};
use crate::shade::lights::eval_environment;
use crate::shade::{CacheConfig, Environment, FaceTextureCache, LatLongImage, Light, QuadLight, TextureError};

pub use debug::{debug_shade, heat_color, id_color, BACKGROUND};
pub use denoise::{denoise, DenoiseError, DenoiseParams};
pub use frame::{render_frame, render_tiles};
pub use framebuffer::{FrameBuffer, Tile, TILE_SIZE};
pub use integrator::{trace_path, PathResult};
pub use output::{read_pfm, tonemap_for_display, tonemap_pixel, write_pfm, write_png, DisplayImage};
pub use profile::{Category, CategoryTimes, Profiler, RenderStats, StatsError, CATEGORY_NAMES};
pub use sampler::PixelSampler;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    PathTrace,
    PrimId,
    GeomId,
    InstanceId,
    CostHeat,
    Albedo,
    Normal,
}

impl Mode {
    pub const ALL: [Mode; 7] =
        [Mode::PathTrace, Mode::PrimId, Mode::GeomId, Mode::InstanceId, Mode::CostHeat, Mode::Albedo, Mode::Normal];

    pub fn name(self) -> &'static str {
        match self {
            Mode::PathTrace => "pathtrace",
            Mode::PrimId => "primid",
            Mode::GeomId => "geomid",
            Mode::InstanceId => "instanceid",
            Mode::CostHeat => "costheat",
            Mode::Albedo => "albedo",
            Mode::Normal => "normal",
        }
    }

    pub fn code(self) -> u16 {
        Mode::ALL.iter().position(|m| *m == self).unwrap() as u16
    }

    pub fn from_code(c: u16) -> Option<Mode> {
        Mode::ALL.get(c as usize).copied()
    }
}

impl FromStr for Mode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Mode::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| format!("unknown mode `{s}` (pathtrace, primid, geomid, instanceid, costheat, albedo, normal)"))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RenderConfig {
    pub max_path_depth: u32,
    pub samples_per_frame: u32,
    pub mode: Mode,
    pub deterministic: bool,
    pub seed: u64,
}

impl Default for RenderConfig {
    fn default() -> Self {
        Self { max_path_depth: 5, samples_per_frame: 1, mode: Mode::PathTrace, deterministic: true, seed: 0 }
    }
}

/// Pinhole camera pose; the vertical field of view is in degrees.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CameraState {
    pub position: [f32; 3],
    pub target: [f32; 3],
    pub up: [f32; 3],
    pub fov: f32,
}

impl Default for CameraState {
    fn default() -> Self {
        Self::from(&CameraDesc::default())
    }
}

impl From<&CameraDesc> for CameraState {
    fn from(c: &CameraDesc) -> Self {
        Self { position: c.position.to_array(), target: c.look_at.to_array(), up: c.up.to_array(), fov: c.fov_degrees }
    }
}

/// Precomputed primary-ray generator for one resolution.
#[derive(Clone, Copy, Debug)]
pub struct Camera {
    origin: DVec3,
    forward: DVec3,
    right: DVec3,
    up: DVec3,
    width: u32,
    height: u32,
}

impl Camera {
    pub fn new(state: &CameraState, width: u32, height: u32) -> Self {
        let origin = Vec3::from(state.position).as_dvec3();
        let mut forward = (Vec3::from(state.target).as_dvec3() - origin).normalize_or_zero();
        if forward == DVec3::ZERO {
            forward = -DVec3::Z;
        }
        let mut right = forward.cross(Vec3::from(state.up).as_dvec3()).normalize_or_zero();
        if right == DVec3::ZERO {
            right = forward.any_orthonormal_vector();
        }
        let up = right.cross(forward);
        let half_h = (state.fov.clamp(1e-3, 179.0) as f64 * 0.5).to_radians().tan();
        let aspect = width.max(1) as f64 / height.max(1) as f64;
        Self { origin, forward, right: right * half_h * aspect, up: up * half_h, width, height }
    }

    /// Ray through film position `(x, y)` in pixels, `y` growing downward.
    pub fn ray(&self, x: f64, y: f64) -> (DVec3, DVec3) {
        let sx = 2.0 * x / self.width.max(1) as f64 - 1.0;
        let sy = 1.0 - 2.0 * y / self.height.max(1) as f64;
        (self.origin, (self.forward + self.right * sx + self.up * sy).normalize())
    }

    pub fn origin(&self) -> DVec3 {
        self.origin
    }
}

#[derive(Debug, Error)]
pub enum SceneBuildError {
    #[error(transparent)]
    Invalid(#[from] InvalidScene),
    #[error(transparent)]
    Texture(#[from] TextureError),
    #[error("texture {texture} has {faces} faces but object {object} shape {shape} has {primitives} primitives")]
    FaceCountMismatch { texture: u32, faces: usize, object: usize, shape: usize, primitives: usize },
    #[error("environment image {path}: {message}")]
    EnvironmentImage { path: String, message: String },
}

/// How a shape's intersectable primitives map back to texture faces.
#[derive(Clone, Copy, Debug)]
pub struct ShapeShading {
    pub material: u32,
    pub emissive: bool,
    /// Consecutive primitives that share one texture face (curve quads).
    pub prims_per_face: u32,
    pub has_normals: bool,
}

/// Everything a render needs that is derived once from a scene.
pub struct RenderScene {
    pub desc: SceneDesc,
    pub accel: TwoLevelAccel,
    pub textures: FaceTextureCache,
    pub lights: Vec<Light>,
    /// Per object, per shape.
    pub shading: Vec<Vec<ShapeShading>>,
    /// `(instance, geom)` of an emissive shape to the light index of its
    /// first quad.
    pub emitters: HashMap<(u32, u32), u32>,
    /// Environment lights, seen by escaping rays.
    pub environments: Vec<Environment>,
    pub default_camera: CameraState,
}

pub struct SceneOptions {
    /// Texture and environment paths are resolved against this directory.
    pub base_dir: PathBuf,
    pub cache: CacheConfig,
    pub accel: AccelOptions,
}

impl Default for SceneOptions {
    fn default() -> Self {
        Self { base_dir: PathBuf::from("."), cache: CacheConfig::default(), accel: AccelOptions::default() }
    }
}

fn load_latlong(path: &Path) -> Result<LatLongImage, SceneBuildError> {
    let err = |m: String| SceneBuildError::EnvironmentImage { path: path.display().to_string(), message: m };
    let img = image::open(path).map_err(|e| err(e.to_string()))?.into_rgb8();
    let (w, h) = img.dimensions();
    if w == 0 || h == 0 {
        return Err(err("empty image".into()));
    }
    let lut = crate::shade::facetex::srgb_to_linear;
    let texels = img.pixels().map(|p| p.0.map(|c| lut(c as f32 / 255.0))).collect();
    Ok(LatLongImage { width: w as usize, height: h as usize, texels })
}

impl RenderScene {
    pub fn build(desc: SceneDesc, options: &SceneOptions) -> Result<RenderScene, SceneBuildError> {
        desc.validate()?;
        // built here so the first frame does not pay for it
        crate::shade::energy::tables();
        let mut accel_opts = options.accel;
        if accel_opts.camera_eye.is_none() {
            accel_opts.camera_eye = desc.camera.as_ref().map(|c| c.position);
        }
        let accel = TwoLevelAccel::build(&desc, &accel_opts);
        let resolve = |p: &str| {
            let p = Path::new(p);
            if p.is_absolute() {
                p.to_path_buf()
            } else {
                options.base_dir.join(p)
            }
        };
        let textures = FaceTextureCache::new(
            desc.textures.iter().map(|t| resolve(&t.path).display().to_string()).collect(),
            options.cache,
        );

        let mut shading = Vec::with_capacity(desc.objects.len());
        for (oi, obj) in desc.objects.iter().enumerate() {
            let mut per_shape = Vec::with_capacity(obj.shapes.len());
            for (si, s) in obj.shapes.iter().enumerate() {
                let prims_per_face = match &s.geometry {
                    Geometry::Curves(c) if !c.control_points.is_empty() => {
                        let tess = accel.objects[oi].as_ref().map_or(0, |b| b.shapes[si].primitive_count());
                        (tess / c.control_points.len()).max(1) as u32
                    }
                    _ => 1,
                };
                let tex = desc.materials[s.material as usize].texture;
                if tex >= 0 {
                    let faces = textures.face_count(tex as u32)?;
                    let primitives = s.geometry.primitive_count();
                    if faces != primitives {
                        return Err(SceneBuildError::FaceCountMismatch {
                            texture: tex as u32,
                            faces,
                            object: oi,
                            shape: si,
                            primitives,
                        });
                    }
                }
                per_shape.push(ShapeShading {
                    material: s.material,
                    emissive: s.light_base.is_some(),
                    prims_per_face,
                    has_normals: matches!(&s.geometry, Geometry::Triangles(m) if m.normals.is_some()),
                });
            }
            shading.push(per_shape);
        }

        // Area lights follow their geometry: one light per quad per instance.
        let mut lights = Vec::new();
        let mut emitters = HashMap::new();
        for (ii, inst) in desc.instances.iter().enumerate() {
            for (si, s) in desc.objects[inst.object as usize].shapes.iter().enumerate() {
                let (Some(base), Geometry::Quads(q)) = (s.light_base, &s.geometry) else { continue };
                emitters.insert((ii as u32, si as u32), lights.len() as u32);
                for k in 0..q.indices.len() {
                    let radiance = match desc.lights.get(base as usize + k) {
                        Some(LightDesc::QuadArea { radiance, .. }) => *radiance,
                        _ => [0.0; 3],
                    };
                    let corners = q.indices[k].map(|i| inst.transform.point(q.positions[i as usize]).as_dvec3());
                    lights.push(Light::Quad(QuadLight::from_corners(corners, Vec3::from(radiance).as_dvec3())));
                }
            }
        }
        let mut environments = Vec::new();
        for l in &desc.lights {
            if let LightDesc::Environment { image, .. } = l {
                let img = image.as_deref().map(|p| load_latlong(&resolve(p))).transpose()?;
                let light = Light::from_desc(l, img);
                if let Light::Environment(env) = &light {
                    environments.push(env.clone());
                }
                lights.push(light);
            }
        }
        let default_camera = desc.camera.as_ref().map(CameraState::from).unwrap_or_default();
        Ok(RenderScene { desc, accel, textures, lights, shading, emitters, environments, default_camera })
    }

    /// Light emitted by the primitive at `(instance, geom, prim)`, if any.
    pub fn emitter(&self, instance: u32, geom: u32, prim: u32) -> Option<&QuadLight> {
        let base = *self.emitters.get(&(instance, geom))?;
        match self.lights.get((base + prim) as usize) {
            Some(Light::Quad(q)) => Some(q),
            _ => None,
        }
    }

    /// Radiance arriving along an escaping ray.
    pub fn escaped(&self, dir: DVec3) -> DVec3 {
        self.environments.iter().map(|e| eval_environment(e, dir)).sum()
    }

    pub fn shape_shading(&self, instance: u32, geom: u32) -> &ShapeShading {
        let obj = self.accel.instances[instance as usize].object;
        &self.shading[obj as usize][geom as usize]
    }
}
