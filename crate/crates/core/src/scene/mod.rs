//! In-memory scene model: named objects made of triangle meshes, quad meshes
//! and cubic curves, placed by object-level instances.

pub mod curves;
pub mod generate;
pub mod stats;

use glam::Vec3;
use thiserror::Error;

use crate::math::{Aabb, Affine};
use crate::shade::DisneyMaterial;

pub use curves::tessellate_curves;
pub use generate::{
    furnace_scene, generate_challenge_scene, materialize_preset, write_scene_textures, CurveSpec, GeneratorSpec, Manifest,
    PebbleSpec, Preset, TreeSpec,
};
pub use stats::{scene_stats, StatsReport};

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TriangleMesh {
    pub positions: Vec<Vec3>,
    pub indices: Vec<[u32; 3]>,
    pub normals: Option<Vec<Vec3>>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct QuadMesh {
    pub positions: Vec<Vec3>,
    pub indices: Vec<[u32; 4]>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CurveStyle {
    Flat,
    Round,
}

/// Cubic Bézier segments, four control points each, with one width per
/// control point.
#[derive(Clone, Debug, PartialEq)]
pub struct CurveSet {
    pub control_points: Vec<[Vec3; 4]>,
    pub widths: Vec<[f32; 4]>,
    pub style: CurveStyle,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Geometry {
    Triangles(TriangleMesh),
    Quads(QuadMesh),
    Curves(CurveSet),
}

impl Geometry {
    pub fn kind_name(&self) -> &'static str {
        match self {
            Geometry::Triangles(_) => "trianglemesh",
            Geometry::Quads(_) => "quadmesh",
            Geometry::Curves(_) => "curve",
        }
    }

    /// Number of primitives this geometry contributes before tessellation.
    pub fn primitive_count(&self) -> usize {
        match self {
            Geometry::Triangles(m) => m.indices.len(),
            Geometry::Quads(m) => m.indices.len(),
            Geometry::Curves(c) => c.control_points.len(),
        }
    }

    pub fn bounds(&self) -> Aabb {
        match self {
            Geometry::Triangles(m) => Aabb::from_points(&m.positions),
            Geometry::Quads(m) => Aabb::from_points(&m.positions),
            Geometry::Curves(c) => {
                let mut b = Aabb::EMPTY;
                for (seg, w) in c.control_points.iter().zip(&c.widths) {
                    let r = w.iter().cloned().fold(0f32, f32::max) * 0.5;
                    for p in seg {
                        b = b.grow(*p - Vec3::splat(r)).grow(*p + Vec3::splat(r));
                    }
                }
                b
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ShapeDesc {
    pub geometry: Geometry,
    pub material: u32,
    /// For emissive quad meshes: quad `k` is light `light_base + k`.
    pub light_base: Option<u32>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NamedObject {
    pub name: String,
    pub shapes: Vec<ShapeDesc>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Instance {
    pub object: u32,
    pub transform: Affine,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MaterialDesc {
    pub name: String,
    pub params: DisneyMaterial,
    /// Index into [`SceneDesc::textures`] modulating the base color, or −1.
    pub texture: i32,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FaceTextureRef {
    pub name: String,
    pub path: String,
    pub channels: u32,
}

#[derive(Clone, Debug, PartialEq)]
pub enum LightDesc {
    /// Emitting parallelogram; emission leaves the side of
    /// `(c1 - c0) × (c3 - c0)`.
    QuadArea { corners: [Vec3; 4], radiance: [f32; 3] },
    /// Constant radiance, optionally scaled by a lat-long image.
    Environment { radiance: [f32; 3], image: Option<String> },
}

#[derive(Clone, Debug, PartialEq)]
pub struct CameraDesc {
    pub position: Vec3,
    pub look_at: Vec3,
    pub up: Vec3,
    pub fov_degrees: f32,
    pub aspect: f32,
    pub resolution: [u32; 2],
}

impl Default for CameraDesc {
    fn default() -> Self {
        Self {
            position: Vec3::new(0.0, 0.0, 5.0),
            look_at: Vec3::ZERO,
            up: Vec3::Y,
            fov_degrees: 45.0,
            aspect: 1.0,
            resolution: [640, 480],
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SceneDesc {
    pub objects: Vec<NamedObject>,
    pub instances: Vec<Instance>,
    pub materials: Vec<MaterialDesc>,
    pub textures: Vec<FaceTextureRef>,
    pub lights: Vec<LightDesc>,
    pub camera: Option<CameraDesc>,
}

#[derive(Debug, Error, PartialEq)]
pub enum InvalidScene {
    #[error("instance {instance} references object {object} of {count}")]
    ObjectRef { instance: usize, object: u32, count: usize },
    #[error("instance {0} has a singular transform")]
    SingularTransform(usize),
    #[error("object {object} shape {shape} references material {material} of {count}")]
    MaterialRef { object: usize, shape: usize, material: u32, count: usize },
    #[error("material {material} references texture {texture} of {count}")]
    TextureRef { material: usize, texture: i32, count: usize },
    #[error("object {object} shape {shape}: {reason}")]
    Geometry { object: usize, shape: usize, reason: String },
}

impl SceneDesc {
    /// Checks every cross-reference and geometry invariant.
    pub fn validate(&self) -> Result<(), InvalidScene> {
        for (i, inst) in self.instances.iter().enumerate() {
            if inst.object as usize >= self.objects.len() {
                return Err(InvalidScene::ObjectRef {
                    instance: i,
                    object: inst.object,
                    count: self.objects.len(),
                });
            }
            if inst.transform.determinant().abs() <= 1e-12 {
                return Err(InvalidScene::SingularTransform(i));
            }
        }
        for (mi, m) in self.materials.iter().enumerate() {
            if m.texture < -1 || m.texture >= self.textures.len() as i32 {
                return Err(InvalidScene::TextureRef {
                    material: mi,
                    texture: m.texture,
                    count: self.textures.len(),
                });
            }
        }
        for (oi, obj) in self.objects.iter().enumerate() {
            for (si, shape) in obj.shapes.iter().enumerate() {
                if shape.material as usize >= self.materials.len() {
                    return Err(InvalidScene::MaterialRef {
                        object: oi,
                        shape: si,
                        material: shape.material,
                        count: self.materials.len(),
                    });
                }
                if let Err(reason) = check_geometry(&shape.geometry) {
                    return Err(InvalidScene::Geometry { object: oi, shape: si, reason });
                }
            }
        }
        Ok(())
    }
}

pub(crate) fn check_geometry(g: &Geometry) -> Result<(), String> {
    fn finite(p: &[Vec3]) -> Result<(), String> {
        if p.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err("non-finite vertex position".into())
        }
    }
    match g {
        Geometry::Triangles(m) => {
            finite(&m.positions)?;
            let n = m.positions.len() as u32;
            if m.indices.iter().flatten().any(|&i| i >= n) {
                return Err("triangle index out of range".into());
            }
            if let Some(normals) = &m.normals {
                if normals.len() != m.positions.len() {
                    return Err("normal count differs from position count".into());
                }
            }
        }
        Geometry::Quads(m) => {
            finite(&m.positions)?;
            let n = m.positions.len() as u32;
            if m.indices.iter().flatten().any(|&i| i >= n) {
                return Err("quad index out of range".into());
            }
        }
        Geometry::Curves(c) => {
            if c.widths.len() != c.control_points.len() {
                return Err("one width quadruple per curve segment required".into());
            }
            if c.widths.iter().flatten().any(|w| !(*w > 0.0)) {
                return Err("curve widths must be positive".into());
            }
            for seg in &c.control_points {
                finite(seg)?;
            }
        }
    }
    Ok(())
}
