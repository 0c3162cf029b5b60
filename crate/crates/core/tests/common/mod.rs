#![allow(dead_code)]

use std::thread::JoinHandle;

use elephant::accel::{blas_shapes, intersect_primitive, AccelOptions, BlasShape, Ray};
use elephant::dfb::{in_process_pair, run_worker, Connection, DfbError, MessageSink, TransportError, WireMessage};
use elephant::math::{Aabb, Affine};
use elephant::render::{FrameBuffer, RenderScene, SceneOptions};
use elephant::scene::{
    Geometry, Instance, MaterialDesc, NamedObject, QuadMesh, SceneDesc, ShapeDesc, TriangleMesh,
};
use elephant::shade::DisneyMaterial;
use glam::{DVec3, Vec3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Key = (f32, u32, u32, u32);

/// Tests every primitive of every instance. Shares only the primitive
/// kernel with the accelerator; traversal and ordering are independent.
pub struct BruteForce {
    objects: Vec<Vec<BlasShape>>,
    instances: Vec<(usize, Affine)>,
}

impl BruteForce {
    pub fn new(scene: &SceneDesc, options: &AccelOptions) -> Self {
        let objects = (0..scene.objects.len()).map(|o| blas_shapes(scene, o, options)).collect();
        let instances = scene
            .instances
            .iter()
            .map(|i| (i.object as usize, i.transform.inverse().unwrap_or(Affine::IDENTITY)))
            .collect();
        Self { objects, instances }
    }

    pub fn primitive_count(&self) -> usize {
        self.instances.iter().map(|(o, _)| self.objects[*o].iter().map(|s| s.indices.len()).sum::<usize>()).sum()
    }

    pub fn intersect(&self, ray: &Ray) -> Option<Key> {
        let mut best: Option<Key> = None;
        for (i, (obj, inv)) in self.instances.iter().enumerate() {
            let o = inv.point(ray.origin);
            let d = inv.vector(ray.dir);
            for (g, shape) in self.objects[*obj].iter().enumerate() {
                for p in 0..shape.indices.len() {
                    if let Some((t, ..)) = intersect_primitive(shape, p as u32, o, d, ray.tmin, ray.tmax) {
                        let k = (t, i as u32, g as u32, p as u32);
                        let better = match best {
                            None => true,
                            Some(b) => t < b.0 || (t == b.0 && (k.1, k.2, k.3) < (b.1, b.2, b.3)),
                        };
                        if better {
                            best = Some(k);
                        }
                    }
                }
            }
        }
        best
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn lerp3(rng: &mut ChaCha8Rng, b: &Aabb) -> Vec3 {
    Vec3::new(rng.gen(), rng.gen(), rng.gen()) * (b.max - b.min) + b.min
}

/// Rays from a box twice the scene's size toward points inside it.
pub fn random_rays(bounds: Aabb, n: usize, seed: u64) -> Vec<Ray> {
    let mut r = rng(seed);
    let c = bounds.center();
    let outer = Aabb::new(c + (bounds.min - c) * 2.0, c + (bounds.max - c) * 2.0);
    (0..n)
        .map(|_| {
            let o = lerp3(&mut r, &outer);
            let t = lerp3(&mut r, &bounds);
            Ray::new(o, (t - o).normalize_or(Vec3::Y))
        })
        .collect()
}

pub fn white() -> MaterialDesc {
    MaterialDesc { name: "white".into(), params: DisneyMaterial::default(), texture: -1 }
}

pub fn single_object_scene(shapes: Vec<Geometry>, transforms: &[Affine]) -> SceneDesc {
    SceneDesc {
        objects: vec![NamedObject {
            name: "o".into(),
            shapes: shapes.into_iter().map(|g| ShapeDesc { geometry: g, material: 0, light_base: None }).collect(),
        }],
        instances: transforms.iter().map(|&t| Instance { object: 0, transform: t }).collect(),
        materials: vec![white()],
        ..Default::default()
    }
}

pub fn triangle_soup(n: usize, seed: u64) -> SceneDesc {
    let mut r = rng(seed);
    let mut positions = Vec::new();
    let mut indices = Vec::new();
    for i in 0..n {
        let c = Vec3::new(r.gen(), r.gen(), r.gen()) * 4.0 - 2.0;
        for _ in 0..3 {
            positions.push(c + (Vec3::new(r.gen(), r.gen(), r.gen()) - 0.5) * 0.6);
        }
        let b = 3 * i as u32;
        indices.push([b, b + 1, b + 2]);
    }
    single_object_scene(vec![Geometry::Triangles(TriangleMesh { positions, indices, normals: None })], &[Affine::IDENTITY])
}

pub fn grid(res: u32, size: f32) -> QuadMesh {
    let row = res + 1;
    let mut positions = Vec::new();
    for j in 0..=res {
        for i in 0..=res {
            positions.push(Vec3::new(size * (i as f32 / res as f32 - 0.5), 0.0, size * (j as f32 / res as f32 - 0.5)));
        }
    }
    let mut indices = Vec::new();
    for j in 0..res {
        for i in 0..res {
            let a = j * row + i;
            indices.push([a, a + row, a + row + 1, a + 1]);
        }
    }
    QuadMesh { positions, indices }
}

/// Two objects (a soup and a bumpy grid) under random similarity
/// transforms, with some instances duplicated exactly to force ties.
pub fn instanced_scene(seed: u64) -> SceneDesc {
    let mut r = rng(seed);
    let soup = triangle_soup(60, seed ^ 0x55).objects.remove(0);
    let mut g = grid(6, 1.5);
    for p in &mut g.positions {
        p.y = 0.15 * (p.x * 3.0).sin() * (p.z * 2.0).cos();
    }
    let bumpy = NamedObject {
        name: "grid".into(),
        shapes: vec![ShapeDesc { geometry: Geometry::Quads(g), material: 0, light_base: None }],
    };
    let mut instances = Vec::new();
    for k in 0..40u32 {
        let t = Affine::translation(Vec3::new(r.gen_range(-3.0..3.0), r.gen_range(-3.0..3.0), r.gen_range(-3.0..3.0)))
            .then_local(&Affine::rotation(r.gen_range(0.0..360.0), Vec3::new(r.gen(), r.gen(), r.gen::<f32>() + 0.1)))
            .then_local(&Affine::scale(Vec3::new(r.gen_range(0.5..1.5), r.gen_range(0.5..1.5), r.gen_range(0.5..1.5))));
        let inst = Instance { object: k % 2, transform: t };
        instances.push(inst);
        if k % 7 == 0 {
            instances.push(inst);
        }
    }
    SceneDesc {
        objects: vec![soup, bumpy],
        instances,
        materials: vec![white()],
        ..Default::default()
    }
}

/// Flat quads and the same surface as triangle pairs, stacked, plus rays
/// aimed at diagonals, shared edges and shared vertices, and rays that
/// skim the surface.
pub fn diagonal_grazing(n: usize, seed: u64) -> (SceneDesc, Vec<Ray>) {
    let q = grid(8, 4.0);
    let mut tris = TriangleMesh { positions: q.positions.clone(), indices: Vec::new(), normals: None };
    for &[a, b, c, d] in &q.indices {
        tris.indices.push([a, b, c]);
        tris.indices.push([a, c, d]);
    }
    let scene = single_object_scene(
        vec![Geometry::Quads(q.clone()), Geometry::Triangles(tris)],
        &[Affine::IDENTITY, Affine::translation(Vec3::new(0.0, 0.5, 0.0))],
    );
    let mut r = rng(seed);
    let mut rays = Vec::with_capacity(n);
    while rays.len() < n {
        let [a, b, c, d] = q.indices[r.gen_range(0..q.indices.len())].map(|i| q.positions[i as usize]);
        let s: f32 = r.gen();
        let target = match rays.len() % 5 {
            0 => a + (c - a) * s,
            1 => a + (b - a) * s,
            2 => d + (c - d) * s,
            3 => [a, b, c, d][r.gen_range(0..4)],
            _ => a + (c - a) * s + Vec3::new(0.0, r.gen_range(0.0..0.6), 0.0),
        };
        let origin = if rays.len() % 5 == 4 {
            // nearly parallel to the planes
            target + Vec3::new(r.gen_range(-6.0..-3.0), r.gen_range(-1e-3..1e-3), r.gen_range(-1.0..1.0))
        } else {
            target + Vec3::new(r.gen_range(-2.0..2.0), r.gen_range(0.8..3.0), r.gen_range(-2.0..2.0))
        };
        rays.push(Ray::new(origin, (target - origin).normalize()));
    }
    (scene, rays)
}

pub fn render_scene(desc: SceneDesc) -> RenderScene {
    RenderScene::build(desc, &SceneOptions::default()).expect("scene builds")
}

/// Every accumulated value of a framebuffer as raw bits.
pub fn fb_bits(fb: &FrameBuffer) -> Vec<u32> {
    let mut out = Vec::new();
    for t in &fb.tiles {
        out.push(t.sample_count);
        for px in t.color.iter().chain(&t.albedo).chain(&t.normal) {
            out.extend(px.iter().map(|v| v.to_bits()));
        }
        out.extend(&t.cost);
    }
    out
}

pub fn mse(a: &[[f32; 3]], b: &[[f32; 3]]) -> f64 {
    assert_eq!(a.len(), b.len());
    let s: f64 = a
        .iter()
        .zip(b)
        .map(|(x, y)| (0..3).map(|c| (x[c] as f64 - y[c] as f64).powi(2)).sum::<f64>())
        .sum();
    s / (3 * a.len()) as f64
}

/// Irradiance at `p` (surface normal `n`) from a polygon of constant
/// radiance `l`, by Lambert's contour integral.
pub fn polygon_irradiance(p: DVec3, n: DVec3, verts: &[DVec3], l: f64) -> f64 {
    let mut sum = 0.0;
    for i in 0..verts.len() {
        let a = (verts[i] - p).normalize();
        let b = (verts[(i + 1) % verts.len()] - p).normalize();
        let theta = a.dot(b).clamp(-1.0, 1.0).acos();
        sum += theta * n.dot(a.cross(b).normalize());
    }
    0.5 * l * sum.abs()
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

pub type Wrap = fn(u32, Box<dyn MessageSink>) -> Box<dyn MessageSink>;

/// In-process workers on their own threads; `wrap` may intercept what each
/// worker sends.
pub fn spawn_workers(n: u32, wrap: Wrap) -> (Vec<Connection>, Vec<JoinHandle<Result<(), DfbError>>>) {
    let mut heads = Vec::new();
    let mut handles = Vec::new();
    for id in 0..n {
        let (h, w) = in_process_pair();
        let w = Connection { sink: wrap(id, w.sink), source: w.source };
        handles.push(std::thread::spawn(move || run_worker(w, id)));
        heads.push(h);
    }
    (heads, handles)
}

pub fn plain(_: u32, s: Box<dyn MessageSink>) -> Box<dyn MessageSink> {
    s
}

/// Fails the link after a number of tile results, as a crashed worker would.
pub struct DyingSink {
    pub inner: Option<Box<dyn MessageSink>>,
    pub tiles_left: u32,
}

impl MessageSink for DyingSink {
    fn send(&mut self, msg: &WireMessage) -> Result<(), TransportError> {
        if matches!(msg, WireMessage::TileResult(_)) {
            if self.tiles_left == 0 {
                self.inner = None;
            } else {
                self.tiles_left -= 1;
            }
        }
        self.inner.as_mut().ok_or(TransportError::Closed)?.send(msg)
    }
}
