//! Procedural challenge scenes. Each generated scene carries a manifest of
//! entity counts derived from the generator parameters alone, so traversal
//! based statistics can be cross-checked against it.
//!
//! The stressors mirror what makes large production scenes hard for a ray
//! tracer: many tiny instanced objects with overlapping bounds (leaves),
//! millimeter-scale tessellation next to meter-scale terrain (pebbles), and a
//! finely tessellated surface floating just above a coarse one (ocean).

use std::str::FromStr;

use glam::Vec3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{
    CameraDesc, CurveSet, CurveStyle, FaceTextureRef, Geometry, Instance, LightDesc,
    MaterialDesc, NamedObject, QuadMesh, SceneDesc, ShapeDesc, StatsReport, TriangleMesh,
};
use crate::math::{Aabb, Affine};
use crate::shade::DisneyMaterial;

#[derive(Debug, Error, PartialEq)]
pub enum GenerateError {
    #[error("generator parameter `{0}` out of range")]
    SpecOutOfRange(&'static str),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreeSpec {
    pub objects: u32,
    pub leaves_per_tree: u32,
    /// Crown radius in meters; small radii force heavy leaf overlap.
    pub crown_radius: f32,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PebbleSpec {
    pub instances: u32,
    /// Quads per cube-face edge of each 5 mm pebble.
    pub resolution: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveSpec {
    pub clumps: u32,
    pub curves_per_clump: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    /// Terrain grid quads per side.
    pub terrain_resolution: u32,
    /// Emit the terrain as consecutive triangle pairs instead of quads.
    pub terrain_as_triangles: bool,
    pub trees: Option<TreeSpec>,
    /// Resolution of the fine ocean grid overlaid 1e-3 above a coarse one.
    pub fine_overlay: Option<u32>,
    pub pebbles: Option<PebbleSpec>,
    pub curves: Option<CurveSpec>,
    /// Bind face textures to terrain and trunks (files written separately
    /// with [`write_scene_textures`]).
    pub textured: bool,
    /// Add a quad key light with matching emissive geometry.
    pub key_light: bool,
    pub extent: f32,
}

impl GeneratorSpec {
    /// Smallest valid scene: one terrain object with a single grid cell.
    pub fn minimal() -> Self {
        Self {
            terrain_resolution: 1,
            terrain_as_triangles: false,
            trees: None,
            fine_overlay: None,
            pebbles: None,
            curves: None,
            textured: false,
            key_light: false,
            extent: 10.0,
        }
    }

    fn check(&self) -> Result<(), GenerateError> {
        use GenerateError::SpecOutOfRange as E;
        if self.terrain_resolution == 0 {
            return Err(E("terrain_resolution"));
        }
        if !(self.extent > 0.0) {
            return Err(E("extent"));
        }
        if let Some(t) = self.trees {
            if t.objects == 0 {
                return Err(E("trees.objects"));
            }
            if t.leaves_per_tree == 0 {
                return Err(E("trees.leaves_per_tree"));
            }
            if !(t.crown_radius > 0.0) {
                return Err(E("trees.crown_radius"));
            }
        }
        if self.fine_overlay == Some(0) {
            return Err(E("fine_overlay"));
        }
        if let Some(p) = self.pebbles {
            if p.instances == 0 || p.resolution == 0 {
                return Err(E("pebbles"));
            }
        }
        if let Some(c) = self.curves {
            if c.clumps == 0 || c.curves_per_clump == 0 {
                return Err(E("curves"));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Preset {
    Mini,
    Overlap,
    Tessellation,
    Textured,
}

impl FromStr for Preset {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "mini" => Ok(Preset::Mini),
            "overlap" => Ok(Preset::Overlap),
            "tessellation" => Ok(Preset::Tessellation),
            "textured" => Ok(Preset::Textured),
            other => Err(format!("unknown preset `{other}` (mini, overlap, tessellation, textured)")),
        }
    }
}

impl Preset {
    pub fn name(self) -> &'static str {
        match self {
            Preset::Mini => "mini",
            Preset::Overlap => "overlap",
            Preset::Tessellation => "tessellation",
            Preset::Textured => "textured",
        }
    }

    pub fn spec(self) -> GeneratorSpec {
        let base = GeneratorSpec { key_light: true, ..GeneratorSpec::minimal() };
        match self {
            Preset::Mini => GeneratorSpec {
                terrain_resolution: 16,
                trees: Some(TreeSpec { objects: 2, leaves_per_tree: 40, crown_radius: 0.8 }),
                fine_overlay: Some(16),
                pebbles: Some(PebbleSpec { instances: 8, resolution: 4 }),
                curves: Some(CurveSpec { clumps: 3, curves_per_clump: 12 }),
                ..base
            },
            Preset::Overlap => GeneratorSpec {
                terrain_resolution: 8,
                trees: Some(TreeSpec { objects: 6, leaves_per_tree: 400, crown_radius: 0.35 }),
                ..base
            },
            Preset::Tessellation => GeneratorSpec {
                terrain_resolution: 4,
                fine_overlay: Some(256),
                pebbles: Some(PebbleSpec { instances: 64, resolution: 24 }),
                ..base
            },
            Preset::Textured => GeneratorSpec {
                terrain_resolution: 24,
                trees: Some(TreeSpec { objects: 4, leaves_per_tree: 20, crown_radius: 0.8 }),
                textured: true,
                ..base
            },
        }
    }
}

/// Ground-truth entity counts and bounds for a generated scene.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub unique_objects: u64,
    pub unique_shapes: u64,
    pub unique_triangles: u64,
    pub unique_quads: u64,
    pub unique_curve_segments: u64,
    pub instance_count: u64,
    pub instanced_triangles: u64,
    pub instanced_quads: u64,
    pub instanced_curve_segments: u64,
    pub scene_bounds: [f32; 6],
    pub object_bounds: Vec<[f32; 6]>,
}

impl Manifest {
    pub fn counts_match(&self, s: &StatsReport) -> bool {
        self.unique_objects == s.unique_objects
            && self.unique_shapes == s.unique_shapes
            && self.unique_triangles == s.unique_triangles
            && self.unique_quads == s.unique_quads
            && self.unique_curve_segments == s.unique_curve_segments
            && self.instance_count == s.instance_count
            && self.instanced_triangles == s.instanced_triangles
            && self.instanced_quads == s.instanced_quads
            && self.instanced_curve_segments == s.instanced_curve_segments
    }
}

fn aabb_array(b: &Aabb) -> [f32; 6] {
    [b.min.x, b.min.y, b.min.z, b.max.x, b.max.y, b.max.z]
}

fn material(name: &str, color: [f32; 3], roughness: f32, texture: i32) -> MaterialDesc {
    MaterialDesc {
        name: name.into(),
        params: DisneyMaterial { base_color: color, roughness, ..DisneyMaterial::default() },
        texture,
    }
}

fn terrain_height(x: f32, z: f32, extent: f32) -> f32 {
    let k = std::f32::consts::TAU / extent;
    0.25 * (x * k * 1.3).sin() * (z * k * 0.9).cos() + 0.1 * (x * k * 3.1 + z * k * 2.3).sin()
}

pub(crate) fn grid_quads(res: u32, size: f32, center: Vec3, height: impl Fn(f32, f32) -> f32) -> QuadMesh {
    let n = res as usize;
    let mut positions = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            let x = center.x + size * (i as f32 / n as f32 - 0.5);
            let z = center.z + size * (j as f32 / n as f32 - 0.5);
            positions.push(Vec3::new(x, center.y + height(x, z), z));
        }
    }
    let mut indices = Vec::with_capacity(n * n);
    let row = (n + 1) as u32;
    for j in 0..res {
        for i in 0..res {
            let a = j * row + i;
            indices.push([a, a + row, a + row + 1, a + 1]);
        }
    }
    QuadMesh { positions, indices }
}

/// Splits each quad `(a,b,c,d)` into consecutive triangles `(a,b,c)`,
/// `(a,c,d)`.
pub fn quads_to_triangle_pairs(q: &QuadMesh) -> TriangleMesh {
    TriangleMesh {
        positions: q.positions.clone(),
        indices: q.indices.iter().flat_map(|&[a, b, c, d]| [[a, b, c], [a, c, d]]).collect(),
        normals: None,
    }
}

/// Cube-sphere: `res × res` quads on each of the six cube faces.
pub(crate) fn cube_sphere(radius: f32, res: u32) -> QuadMesh {
    let n = res as usize;
    let mut positions = Vec::with_capacity(6 * (n + 1) * (n + 1));
    let mut indices = Vec::with_capacity(6 * n * n);
    let faces: [(Vec3, Vec3, Vec3); 6] = [
        (Vec3::X, Vec3::Y, Vec3::Z),
        (-Vec3::X, Vec3::Z, Vec3::Y),
        (Vec3::Y, Vec3::Z, Vec3::X),
        (-Vec3::Y, Vec3::X, Vec3::Z),
        (Vec3::Z, Vec3::X, Vec3::Y),
        (-Vec3::Z, Vec3::Y, Vec3::X),
    ];
    for (normal, u_axis, v_axis) in faces {
        let base = positions.len() as u32;
        for j in 0..=n {
            for i in 0..=n {
                let u = 2.0 * i as f32 / n as f32 - 1.0;
                let v = 2.0 * j as f32 / n as f32 - 1.0;
                positions.push((normal + u_axis * u + v_axis * v).normalize() * radius);
            }
        }
        let row = (n + 1) as u32;
        for j in 0..res {
            for i in 0..res {
                let a = base + j * row + i;
                indices.push([a, a + 1, a + row + 1, a + row]);
            }
        }
    }
    QuadMesh { positions, indices }
}

fn tapered_box(base_half: f32, top_half: f32, height: f32) -> QuadMesh {
    let b = base_half;
    let t = top_half;
    let positions = vec![
        Vec3::new(-b, 0.0, -b),
        Vec3::new(b, 0.0, -b),
        Vec3::new(b, 0.0, b),
        Vec3::new(-b, 0.0, b),
        Vec3::new(-t, height, -t),
        Vec3::new(t, height, -t),
        Vec3::new(t, height, t),
        Vec3::new(-t, height, t),
    ];
    let indices = vec![[0, 1, 5, 4], [1, 2, 6, 5], [2, 3, 7, 6], [3, 0, 4, 7], [4, 5, 6, 7]];
    QuadMesh { positions, indices }
}

fn grass_clump(rng: &mut ChaCha8Rng, count: u32) -> CurveSet {
    let mut control_points = Vec::with_capacity(count as usize);
    let mut widths = Vec::with_capacity(count as usize);
    for _ in 0..count {
        let base = Vec3::new(rng.gen_range(-0.1..0.1), 0.0, rng.gen_range(-0.1..0.1));
        let h: f32 = rng.gen_range(0.2..0.5);
        let lean = Vec3::new(rng.gen_range(-0.15..0.15), 0.0, rng.gen_range(-0.15..0.15));
        control_points.push([
            base,
            base + Vec3::Y * (h / 3.0),
            base + Vec3::Y * (2.0 * h / 3.0) + lean * 0.4,
            base + Vec3::Y * h + lean,
        ]);
        widths.push([0.004, 0.003, 0.002, 0.0005]);
    }
    CurveSet { control_points, widths, style: CurveStyle::Flat }
}

fn random_rotation(rng: &mut ChaCha8Rng) -> Affine {
    let axis = Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
    let axis = if axis.length_squared() < 1e-4 { Vec3::Y } else { axis };
    Affine::rotation(rng.gen_range(0.0..360.0), axis)
}

pub fn generate_challenge_scene(spec: &GeneratorSpec, seed: u64) -> Result<(SceneDesc, Manifest), GenerateError> {
    spec.check()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut scene = SceneDesc::default();
    let e = spec.extent;
    let tex = |scene: &mut SceneDesc, name: &str| -> i32 {
        if !spec.textured {
            return -1;
        }
        scene.textures.push(FaceTextureRef {
            name: name.into(),
            path: format!("textures/{name}.ftex"),
            channels: 3,
        });
        scene.textures.len() as i32 - 1
    };

    // Counts derived from parameters only.
    let r = spec.terrain_resolution as u64;
    let mut m = Manifest {
        unique_objects: 1,
        unique_shapes: 1,
        unique_triangles: if spec.terrain_as_triangles { 2 * r * r } else { 0 },
        unique_quads: if spec.terrain_as_triangles { 0 } else { r * r },
        unique_curve_segments: 0,
        instance_count: 1,
        instanced_triangles: 0,
        instanced_quads: 0,
        instanced_curve_segments: 0,
        scene_bounds: [0.0; 6],
        object_bounds: Vec::new(),
    };
    m.instanced_triangles = m.unique_triangles;
    m.instanced_quads = m.unique_quads;

    let terrain_tex = tex(&mut scene, "terrain");
    scene.materials.push(material("terrain", [0.45, 0.36, 0.25], 0.8, terrain_tex));
    let terrain = grid_quads(spec.terrain_resolution, e, Vec3::ZERO, |x, z| terrain_height(x, z, e));
    let geometry = if spec.terrain_as_triangles {
        Geometry::Triangles(quads_to_triangle_pairs(&terrain))
    } else {
        Geometry::Quads(terrain)
    };
    scene.objects.push(NamedObject {
        name: "terrain".into(),
        shapes: vec![ShapeDesc { geometry, material: 0, light_base: None }],
    });
    scene.instances.push(Instance { object: 0, transform: Affine::IDENTITY });

    if let Some(res) = spec.fine_overlay {
        let mat = scene.materials.len() as u32;
        let mut water = material("ocean", [0.05, 0.2, 0.35], 0.05, -1);
        water.params.specular = 0.6;
        scene.materials.push(water);
        let center = Vec3::new(0.0, -0.4, 0.0);
        let coarse = grid_quads(4, e * 1.5, center, |_, _| 0.0);
        let fine = grid_quads(res, e * 1.5, center, |_, _| 1e-3);
        for (name, mesh) in [("ocean_coarse", coarse), ("ocean_fine", fine)] {
            let obj = scene.objects.len() as u32;
            scene.objects.push(NamedObject {
                name: name.into(),
                shapes: vec![ShapeDesc { geometry: Geometry::Quads(mesh), material: mat, light_base: None }],
            });
            scene.instances.push(Instance { object: obj, transform: Affine::IDENTITY });
        }
        let q = 16 + res as u64 * res as u64;
        m.unique_objects += 2;
        m.unique_shapes += 2;
        m.unique_quads += q;
        m.instance_count += 2;
        m.instanced_quads += q;
    }

    if let Some(t) = spec.trees {
        let trunk_tex = tex(&mut scene, "bark");
        let trunk_mat = scene.materials.len() as u32;
        scene.materials.push(material("bark", [0.3, 0.2, 0.12], 0.9, trunk_tex));
        let leaf_mat = scene.materials.len() as u32;
        let mut leaf = material("leaf", [0.15, 0.45, 0.1], 0.5, -1);
        leaf.params.sheen = 0.3;
        scene.materials.push(leaf);
        let leaf_obj = scene.objects.len() as u32;
        scene.objects.push(NamedObject {
            name: "leaf".into(),
            shapes: vec![ShapeDesc {
                geometry: Geometry::Quads(QuadMesh {
                    positions: vec![
                        Vec3::new(-0.02, 0.0, 0.0),
                        Vec3::new(0.02, 0.0, 0.0),
                        Vec3::new(0.02, 0.08, 0.0),
                        Vec3::new(-0.02, 0.08, 0.0),
                    ],
                    indices: vec![[0, 1, 2, 3]],
                }),
                material: leaf_mat,
                light_base: None,
            }],
        });
        for ti in 0..t.objects {
            let height: f32 = rng.gen_range(2.0..4.0);
            let obj = scene.objects.len() as u32;
            scene.objects.push(NamedObject {
                name: format!("tree{ti}"),
                shapes: vec![ShapeDesc {
                    geometry: Geometry::Quads(tapered_box(0.15, 0.06, height)),
                    material: trunk_mat,
                    light_base: None,
                }],
            });
            let pos = Vec3::new(rng.gen_range(-0.35..0.35) * e, 0.0, rng.gen_range(-0.35..0.35) * e);
            let pos = Vec3::new(pos.x, terrain_height(pos.x, pos.z, e) - 0.05, pos.z);
            scene.instances.push(Instance { object: obj, transform: Affine::translation(pos) });
            let crown = pos + Vec3::Y * height;
            for _ in 0..t.leaves_per_tree {
                let offset = loop {
                    let v = Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                    if v.length_squared() <= 1.0 {
                        break v * t.crown_radius;
                    }
                };
                let transform = Affine::translation(crown + offset).then_local(&random_rotation(&mut rng));
                scene.instances.push(Instance { object: leaf_obj, transform });
            }
        }
        let n = t.objects as u64;
        let leaves = n * t.leaves_per_tree as u64;
        m.unique_objects += 1 + n;
        m.unique_shapes += 1 + n;
        m.unique_quads += 1 + 5 * n;
        m.instance_count += n + leaves;
        m.instanced_quads += 5 * n + leaves;
    }

    if let Some(p) = spec.pebbles {
        let mat = scene.materials.len() as u32;
        scene.materials.push(material("pebble", [0.5, 0.5, 0.48], 0.6, -1));
        let obj = scene.objects.len() as u32;
        scene.objects.push(NamedObject {
            name: "pebble".into(),
            shapes: vec![ShapeDesc {
                geometry: Geometry::Quads(cube_sphere(0.005, p.resolution)),
                material: mat,
                light_base: None,
            }],
        });
        for _ in 0..p.instances {
            let x = rng.gen_range(-0.2..0.2) * e;
            let z = rng.gen_range(-0.2..0.2) * e;
            let s = Vec3::new(rng.gen_range(0.6..1.6), rng.gen_range(0.4..1.0), rng.gen_range(0.6..1.6));
            let transform = Affine::translation(Vec3::new(x, terrain_height(x, z, e) + 0.002, z))
                .then_local(&Affine::scale(s));
            scene.instances.push(Instance { object: obj, transform });
        }
        let q = 6 * p.resolution as u64 * p.resolution as u64;
        m.unique_objects += 1;
        m.unique_shapes += 1;
        m.unique_quads += q;
        m.instance_count += p.instances as u64;
        m.instanced_quads += q * p.instances as u64;
    }

    if let Some(c) = spec.curves {
        let mat = scene.materials.len() as u32;
        scene.materials.push(material("grass", [0.25, 0.5, 0.15], 0.6, -1));
        for ci in 0..c.clumps {
            let obj = scene.objects.len() as u32;
            scene.objects.push(NamedObject {
                name: format!("grass{ci}"),
                shapes: vec![ShapeDesc {
                    geometry: Geometry::Curves(grass_clump(&mut rng, c.curves_per_clump)),
                    material: mat,
                    light_base: None,
                }],
            });
            let x = rng.gen_range(-0.3..0.3) * e;
            let z = rng.gen_range(-0.3..0.3) * e;
            scene.instances.push(Instance {
                object: obj,
                transform: Affine::translation(Vec3::new(x, terrain_height(x, z, e), z)),
            });
        }
        let segs = c.clumps as u64 * c.curves_per_clump as u64;
        m.unique_objects += c.clumps as u64;
        m.unique_shapes += c.clumps as u64;
        m.unique_curve_segments += segs;
        m.instance_count += c.clumps as u64;
        m.instanced_curve_segments += segs;
    }

    if spec.key_light {
        let mat = scene.materials.len() as u32;
        scene.materials.push(material("light_housing", [0.0, 0.0, 0.0], 1.0, -1));
        let h = 0.25 * e + 2.0;
        let s = 0.08 * e;
        // Corners ordered so (c1 - c0) × (c3 - c0) points down.
        let corners = [
            Vec3::new(-s, h, -s),
            Vec3::new(s, h, -s),
            Vec3::new(s, h, s),
            Vec3::new(-s, h, s),
        ];
        let light_base = scene.lights.len() as u32;
        scene.lights.push(LightDesc::QuadArea { corners, radiance: [12.0, 11.0, 9.5] });
        let obj = scene.objects.len() as u32;
        scene.objects.push(NamedObject {
            name: "key_light".into(),
            shapes: vec![ShapeDesc {
                geometry: Geometry::Quads(QuadMesh { positions: corners.to_vec(), indices: vec![[0, 1, 2, 3]] }),
                material: mat,
                light_base: Some(light_base),
            }],
        });
        scene.instances.push(Instance { object: obj, transform: Affine::IDENTITY });
        m.unique_objects += 1;
        m.unique_shapes += 1;
        m.unique_quads += 1;
        m.instance_count += 1;
        m.instanced_quads += 1;
    }

    scene.lights.push(LightDesc::Environment { radiance: [0.55, 0.65, 0.85], image: None });
    scene.camera = Some(CameraDesc {
        position: Vec3::new(0.0, 0.22 * e, 0.55 * e),
        look_at: Vec3::new(0.0, 0.5, 0.0),
        up: Vec3::Y,
        fov_degrees: 45.0,
        aspect: 1536.0 / 644.0,
        resolution: [1536, 644],
    });

    let mut scene_bounds = Aabb::EMPTY;
    let object_bounds: Vec<Aabb> = scene
        .objects
        .iter()
        .map(|o| o.shapes.iter().fold(Aabb::EMPTY, |b, s| b.union(s.geometry.bounds())))
        .collect();
    for inst in &scene.instances {
        let b = object_bounds[inst.object as usize];
        scene_bounds = scene_bounds.union(inst.transform.transform_aabb(&b));
    }
    m.scene_bounds = aabb_array(&scene_bounds);
    m.object_bounds = object_bounds.iter().map(aabb_array).collect();
    Ok((scene, m))
}

/// A white sphere (base color 1) inside a unit-radiance constant
/// environment: every converged pixel should read 1.
pub fn furnace_scene(material: DisneyMaterial) -> SceneDesc {
    SceneDesc {
        objects: vec![NamedObject {
            name: "sphere".into(),
            shapes: vec![ShapeDesc { geometry: Geometry::Quads(cube_sphere(1.0, 24)), material: 0, light_base: None }],
        }],
        instances: vec![Instance { object: 0, transform: Affine::IDENTITY }],
        materials: vec![MaterialDesc { name: "white".into(), params: material, texture: -1 }],
        textures: vec![],
        lights: vec![LightDesc::Environment { radiance: [1.0; 3], image: None }],
        camera: Some(CameraDesc {
            position: Vec3::new(0.0, 0.0, 3.0),
            look_at: Vec3::ZERO,
            up: Vec3::Y,
            fov_degrees: 40.0,
            aspect: 1.0,
            resolution: [128, 128],
        }),
    }
}

/// Writes one procedural face texture per [`FaceTextureRef`] under `dir`,
/// sized to the face count of the first shape whose material binds it.
pub fn write_scene_textures(scene: &SceneDesc, dir: &std::path::Path, face_res: u16, seed: u64) -> std::io::Result<()> {
    use crate::shade::facetex::{FaceData, FaceTextureFile, TexelEncoding};
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for (ti, t) in scene.textures.iter().enumerate() {
        let faces = scene
            .objects
            .iter()
            .flat_map(|o| o.shapes.iter())
            .find(|s| scene.materials.get(s.material as usize).map(|m| m.texture) == Some(ti as i32))
            .map(|s| s.geometry.primitive_count())
            .unwrap_or(1);
        let mut data = Vec::with_capacity(faces);
        for _ in 0..faces {
            let tint: [f32; 3] = [rng.gen_range(0.6..1.0), rng.gen_range(0.6..1.0), rng.gen_range(0.6..1.0)];
            let mut texels = Vec::with_capacity(face_res as usize * face_res as usize * 3);
            for y in 0..face_res {
                for x in 0..face_res {
                    let check = ((x / 4 + y / 4) % 2) as f32 * 0.35 + 0.65;
                    for c in tint {
                        texels.push(((c * check).powf(1.0 / 2.2) * 255.0) as u8);
                    }
                }
            }
            data.push(FaceData::U8 { res: [face_res, face_res], texels });
        }
        let file = FaceTextureFile { channels: t.channels as u8, encoding: TexelEncoding::SrgbU8, faces: data };
        let path = dir.join(&t.path);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        file.write(&mut out)?;
    }
    Ok(())
}

/// Generates a preset and writes its face textures (if any) under `dir`,
/// where the returned scene expects them.
pub fn materialize_preset(
    preset: Preset,
    seed: u64,
    dir: &std::path::Path,
    face_res: u16,
) -> std::io::Result<(SceneDesc, Manifest)> {
    let (scene, manifest) = generate_challenge_scene(&preset.spec(), seed)
        .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidInput, e.to_string()))?;
    std::fs::create_dir_all(dir)?;
    write_scene_textures(&scene, dir, face_res, seed)?;
    Ok((scene, manifest))
}
