//! Two-level ray acceleration: one BVH per object and one over instances.

pub mod bvh;

use glam::Vec3;
use rayon::prelude::*;

use crate::math::{Aabb, Affine};
use crate::scene::curves::{tessellate_curves, DEFAULT_SEGMENTS_PER_SPAN};
use crate::scene::{Geometry, SceneDesc};
pub use bvh::{build_bvh, BuildError, Bvh, BvhNode, RaySlab};

/// Barycentric slack on the internal diagonal of a quad, so rays grazing
/// the split never fall between its two triangles.
pub const DIAGONAL_EPS: f32 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Ray {
    pub origin: Vec3,
    pub dir: Vec3,
    pub tmin: f32,
    pub tmax: f32,
}

impl Ray {
    pub fn new(origin: Vec3, dir: Vec3) -> Self {
        Self { origin, dir, tmin: 0.0, tmax: f32::INFINITY }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Hit {
    pub t: f32,
    pub instance: u32,
    pub geom: u32,
    pub prim: u32,
    pub u: f32,
    pub v: f32,
    /// World-space geometric normal, unit length.
    pub normal: Vec3,
}

impl Hit {
    /// Ordering key: nearest first, then lowest ids.
    #[inline]
    pub fn key(&self) -> (f32, u32, u32, u32) {
        (self.t, self.instance, self.geom, self.prim)
    }
}

#[inline]
pub fn key_less(a: (f32, u32, u32, u32), b: (f32, u32, u32, u32)) -> bool {
    a.0 < b.0 || (a.0 == b.0 && (a.1, a.2, a.3) < (b.1, b.2, b.3))
}

/// Möller–Trumbore in single precision. Returns `(t, b1, b2)` with the hit
/// point `(1-b1-b2)·p0 + b1·p1 + b2·p2`. `relax` loosens the `b1 ≥ 0` and
/// `b2 ≥ 0` edges respectively.
#[inline]
#[allow(clippy::too_many_arguments)]
pub fn intersect_triangle(
    o: Vec3,
    d: Vec3,
    p0: Vec3,
    p1: Vec3,
    p2: Vec3,
    tmin: f32,
    tmax: f32,
    relax: [f32; 2],
) -> Option<(f32, f32, f32)> {
    let e1 = p1 - p0;
    let e2 = p2 - p0;
    let pvec = d.cross(e2);
    let det = e1.dot(pvec);
    if det == 0.0 || !det.is_finite() {
        return None;
    }
    let inv = 1.0 / det;
    let tvec = o - p0;
    let b1 = tvec.dot(pvec) * inv;
    if !(b1 >= -relax[0] && b1 <= 1.0 + relax[0]) {
        return None;
    }
    let qvec = tvec.cross(e1);
    let b2 = d.dot(qvec) * inv;
    if !(b2 >= -relax[1] && b1 + b2 <= 1.0) {
        return None;
    }
    let t = e2.dot(qvec) * inv;
    (t > tmin && t < tmax).then_some((t, b1, b2))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PrimKind {
    Triangles,
    Quads,
}

/// Intersectable geometry of one shape. Triangles use the first three
/// indices; curves arrive here already tessellated into quads.
#[derive(Clone, Debug)]
pub struct BlasShape {
    pub kind: PrimKind,
    pub positions: Vec<Vec3>,
    pub indices: Vec<[u32; 4]>,
    pub from_curves: bool,
}

/// Object-space hit on one primitive: `(t, u, v, geometric normal)`.
#[inline]
pub fn intersect_primitive(
    shape: &BlasShape,
    prim: u32,
    o: Vec3,
    d: Vec3,
    tmin: f32,
    tmax: f32,
) -> Option<(f32, f32, f32, Vec3)> {
    let idx = shape.indices[prim as usize];
    let p = |i: usize| shape.positions[idx[i] as usize];
    match shape.kind {
        PrimKind::Triangles => {
            let (a, b, c) = (p(0), p(1), p(2));
            intersect_triangle(o, d, a, b, c, tmin, tmax, [0.0, 0.0])
                .map(|(t, b1, b2)| (t, b1, b2, (b - a).cross(c - a)))
        }
        PrimKind::Quads => {
            let (a, b, c, dd) = (p(0), p(1), p(2), p(3));
            let h1 = intersect_triangle(o, d, a, b, c, tmin, tmax, [DIAGONAL_EPS, 0.0]);
            let h2 = intersect_triangle(o, d, a, c, dd, tmin, tmax, [0.0, DIAGONAL_EPS]);
            let first = match (h1, h2) {
                (Some(x), Some(y)) => y.0 >= x.0,
                (Some(_), None) => true,
                (None, Some(_)) => false,
                (None, None) => return None,
            };
            if first {
                let (t, b1, b2) = h1.unwrap();
                Some((t, (b1 + b2).clamp(0.0, 1.0), b2.clamp(0.0, 1.0), (b - a).cross(c - a)))
            } else {
                let (t, b1, b2) = h2.unwrap();
                Some((t, b1.clamp(0.0, 1.0), (b1 + b2).clamp(0.0, 1.0), (c - a).cross(dd - a)))
            }
        }
    }
}

impl BlasShape {
    pub fn primitive_count(&self) -> usize {
        self.indices.len()
    }

    pub fn primitive_bounds(&self, prim: usize) -> Aabb {
        let idx = &self.indices[prim];
        let n = if self.kind == PrimKind::Triangles { 3 } else { 4 };
        idx[..n].iter().fold(Aabb::EMPTY, |b, &i| b.grow(self.positions[i as usize]))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PrimRef {
    pub geom: u32,
    pub prim: u32,
}

#[derive(Clone, Debug)]
pub struct Blas {
    pub shapes: Vec<BlasShape>,
    pub prims: Vec<PrimRef>,
    pub bvh: Bvh,
}

#[derive(Clone, Copy, Debug)]
pub struct InstanceData {
    pub object: u32,
    pub transform: Affine,
    pub inverse: Affine,
    pub world_bounds: Aabb,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AccelOptions {
    pub curve_segments: u32,
    /// World-space eye for orienting flat curve ribbons.
    pub camera_eye: Option<Vec3>,
}

impl Default for AccelOptions {
    fn default() -> Self {
        Self { curve_segments: DEFAULT_SEGMENTS_PER_SPAN, camera_eye: None }
    }
}

/// Traversal work, for measuring how overlap hurts the instance level.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct TraversalCounters {
    pub rays: u64,
    pub tlas_nodes: u64,
    pub blas_nodes: u64,
    pub instance_visits: u64,
    pub primitive_tests: u64,
}

impl TraversalCounters {
    pub fn add(&mut self, o: &TraversalCounters) {
        self.rays += o.rays;
        self.tlas_nodes += o.tlas_nodes;
        self.blas_nodes += o.blas_nodes;
        self.instance_visits += o.instance_visits;
        self.primitive_tests += o.primitive_tests;
    }
}

#[derive(Clone, Debug)]
pub struct TwoLevelAccel {
    /// `None` for objects without primitives.
    pub objects: Vec<Option<Blas>>,
    pub instances: Vec<InstanceData>,
    pub tlas: Option<Bvh>,
    /// Maps TLAS primitive slots to instance indices.
    pub tlas_items: Vec<u32>,
}

pub fn blas_shapes(scene: &SceneDesc, object: usize, options: &AccelOptions) -> Vec<BlasShape> {
    let eye_for_object = || {
        let eye = options.camera_eye?;
        let inst = scene.instances.iter().find(|i| i.object as usize == object)?;
        Some(inst.transform.inverse()?.point(eye))
    };
    scene.objects[object]
        .shapes
        .iter()
        .map(|s| match &s.geometry {
            Geometry::Triangles(m) => BlasShape {
                kind: PrimKind::Triangles,
                positions: m.positions.clone(),
                indices: m.indices.iter().map(|t| [t[0], t[1], t[2], u32::MAX]).collect(),
                from_curves: false,
            },
            Geometry::Quads(m) => BlasShape {
                kind: PrimKind::Quads,
                positions: m.positions.clone(),
                indices: m.indices.clone(),
                from_curves: false,
            },
            Geometry::Curves(c) => {
                let q = tessellate_curves(c, options.curve_segments.max(1), eye_for_object());
                BlasShape { kind: PrimKind::Quads, positions: q.positions, indices: q.indices, from_curves: true }
            }
        })
        .collect()
}

impl Blas {
    pub fn build(shapes: Vec<BlasShape>) -> Option<Blas> {
        let mut prims = Vec::new();
        let mut bounds = Vec::new();
        for (g, s) in shapes.iter().enumerate() {
            for p in 0..s.primitive_count() {
                prims.push(PrimRef { geom: g as u32, prim: p as u32 });
                bounds.push(s.primitive_bounds(p));
            }
        }
        let bvh = build_bvh(&bounds).ok()?;
        Some(Blas { shapes, prims, bvh })
    }
}

impl TwoLevelAccel {
    pub fn build(scene: &SceneDesc, options: &AccelOptions) -> TwoLevelAccel {
        let objects: Vec<Option<Blas>> = (0..scene.objects.len())
            .into_par_iter()
            .map(|o| Blas::build(blas_shapes(scene, o, options)))
            .collect();
        let mut instances = Vec::with_capacity(scene.instances.len());
        let mut tlas_items = Vec::new();
        let mut tlas_bounds = Vec::new();
        for (i, inst) in scene.instances.iter().enumerate() {
            let inverse = inst.transform.inverse().unwrap_or(Affine::IDENTITY);
            let world_bounds = match objects.get(inst.object as usize).and_then(Option::as_ref) {
                Some(b) => inst.transform.transform_aabb(&b.bvh.root_bounds()),
                None => Aabb::EMPTY,
            };
            if !world_bounds.is_empty() {
                tlas_items.push(i as u32);
                tlas_bounds.push(world_bounds);
            }
            instances.push(InstanceData { object: inst.object, transform: inst.transform, inverse, world_bounds });
        }
        let tlas = build_bvh(&tlas_bounds).ok();
        TwoLevelAccel { objects, instances, tlas, tlas_items }
    }

    pub fn intersect(&self, ray: &Ray) -> Option<Hit> {
        self.intersect_counted(ray, &mut TraversalCounters::default())
    }

    pub fn intersect_counted(&self, ray: &Ray, counters: &mut TraversalCounters) -> Option<Hit> {
        counters.rays += 1;
        let tlas = self.tlas.as_ref()?;
        let slab = RaySlab::new(ray.origin, ray.dir);
        let mut limit = ray.tmax;
        let mut best: Option<(f32, u32, u32, u32, f32, f32, Vec3)> = None;
        let (mut blas_nodes, mut inst_visits, mut tests) = (0u64, 0u64, 0u64);
        counters.tlas_nodes += tlas.traverse(&slab, ray.tmin, &mut limit, |items, limit| {
            for &k in items {
                let inst_id = self.tlas_items[k as usize];
                let inst = &self.instances[inst_id as usize];
                let Some(blas) = &self.objects[inst.object as usize] else { continue };
                inst_visits += 1;
                let o = inst.inverse.point(ray.origin);
                let d = inst.inverse.vector(ray.dir);
                let oslab = RaySlab::new(o, d);
                blas_nodes += blas.bvh.traverse(&oslab, ray.tmin, limit, |prims, limit| {
                    for &pi in prims {
                        let pr = blas.prims[pi as usize];
                        tests += 1;
                        let shape = &blas.shapes[pr.geom as usize];
                        if let Some((t, u, v, n)) = intersect_primitive(shape, pr.prim, o, d, ray.tmin, ray.tmax) {
                            let key = (t, inst_id, pr.geom, pr.prim);
                            if best.map_or(true, |b| key_less(key, (b.0, b.1, b.2, b.3))) {
                                best = Some((t, inst_id, pr.geom, pr.prim, u, v, n));
                                *limit = t;
                            }
                        }
                    }
                    false
                });
            }
            false
        });
        counters.blas_nodes += blas_nodes;
        counters.instance_visits += inst_visits;
        counters.primitive_tests += tests;
        let (t, instance, geom, prim, u, v, n) = best?;
        let inst = &self.instances[instance as usize];
        let normal = inst.inverse.transpose_vector(n).normalize_or_zero();
        let normal = if normal == Vec3::ZERO { Vec3::Z } else { normal };
        Some(Hit { t, instance, geom, prim, u, v, normal })
    }

    pub fn occluded(&self, ray: &Ray) -> bool {
        self.occluded_counted(ray, &mut TraversalCounters::default())
    }

    pub fn occluded_counted(&self, ray: &Ray, counters: &mut TraversalCounters) -> bool {
        counters.rays += 1;
        let Some(tlas) = &self.tlas else { return false };
        let slab = RaySlab::new(ray.origin, ray.dir);
        let mut limit = ray.tmax;
        let mut found = false;
        let (mut blas_nodes, mut inst_visits, mut tests) = (0u64, 0u64, 0u64);
        counters.tlas_nodes += tlas.traverse(&slab, ray.tmin, &mut limit, |items, limit| {
            for &k in items {
                let inst = &self.instances[self.tlas_items[k as usize] as usize];
                let Some(blas) = &self.objects[inst.object as usize] else { continue };
                inst_visits += 1;
                let o = inst.inverse.point(ray.origin);
                let d = inst.inverse.vector(ray.dir);
                let oslab = RaySlab::new(o, d);
                blas_nodes += blas.bvh.traverse(&oslab, ray.tmin, limit, |prims, _| {
                    for &pi in prims {
                        let pr = blas.prims[pi as usize];
                        tests += 1;
                        let shape = &blas.shapes[pr.geom as usize];
                        if intersect_primitive(shape, pr.prim, o, d, ray.tmin, ray.tmax).is_some() {
                            found = true;
                            return true;
                        }
                    }
                    false
                });
                if found {
                    return true;
                }
            }
            false
        });
        counters.blas_nodes += blas_nodes;
        counters.instance_visits += inst_visits;
        counters.primitive_tests += tests;
        found
    }

    pub fn shape(&self, instance: u32, geom: u32) -> &BlasShape {
        let obj = self.instances[instance as usize].object;
        &self.objects[obj as usize].as_ref().expect("hit on empty object").shapes[geom as usize]
    }

    pub fn world_bounds(&self) -> Aabb {
        self.instances.iter().fold(Aabb::EMPTY, |b, i| b.union(i.world_bounds))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{Instance, MaterialDesc, NamedObject, QuadMesh, ShapeDesc, TriangleMesh};

    fn scene_with(geometry: Geometry, transforms: &[Affine]) -> SceneDesc {
        SceneDesc {
            objects: vec![NamedObject { name: "o".into(), shapes: vec![ShapeDesc { geometry, material: 0, light_base: None }] }],
            instances: transforms.iter().map(|t| Instance { object: 0, transform: *t }).collect(),
            materials: vec![MaterialDesc { name: "m".into(), params: Default::default(), texture: -1 }],
            ..Default::default()
        }
    }

    fn unit_triangle() -> Geometry {
        Geometry::Triangles(TriangleMesh {
            positions: vec![Vec3::ZERO, Vec3::X, Vec3::Y],
            indices: vec![[0, 1, 2]],
            normals: None,
        })
    }

    #[test]
    fn axis_ray_hits_triangle() {
        let acc = TwoLevelAccel::build(&scene_with(unit_triangle(), &[Affine::IDENTITY]), &AccelOptions::default());
        let h = acc.intersect(&Ray::new(Vec3::new(0.25, 0.5, -2.0), Vec3::Z)).unwrap();
        assert!((h.t - 2.0).abs() < 1e-6);
        assert!((h.u - 0.25).abs() < 1e-6 && (h.v - 0.5).abs() < 1e-6);
        assert!((h.normal.length() - 1.0).abs() < 1e-5);
        assert!(acc.occluded(&Ray::new(Vec3::new(0.25, 0.5, -2.0), Vec3::Z)));
        assert!(acc.intersect(&Ray::new(Vec3::new(0.75, 0.5, -2.0), Vec3::Z)).is_none());
    }

    #[test]
    fn translated_instances() {
        let xf = [Affine::IDENTITY, Affine::translation(Vec3::new(5.0, 0.0, 0.0))];
        let acc = TwoLevelAccel::build(&scene_with(unit_triangle(), &xf), &AccelOptions::default());
        let a = acc.intersect(&Ray::new(Vec3::new(0.25, 0.25, -1.0), Vec3::Z)).unwrap();
        let b = acc.intersect(&Ray::new(Vec3::new(5.25, 0.25, -3.0), Vec3::Z)).unwrap();
        assert_eq!((a.instance, b.instance), (0, 1));
        assert_eq!(a.prim, b.prim);
        assert!((b.t - 3.0).abs() < 1e-6);
    }

    #[test]
    fn quad_center_is_half_half() {
        let q = Geometry::Quads(QuadMesh {
            positions: vec![Vec3::ZERO, Vec3::X, Vec3::new(1.0, 1.0, 0.0), Vec3::Y],
            indices: vec![[0, 1, 2, 3]],
        });
        let acc = TwoLevelAccel::build(&scene_with(q, &[Affine::IDENTITY]), &AccelOptions::default());
        let h = acc.intersect(&Ray::new(Vec3::new(0.5, 0.5, 1.0), -Vec3::Z)).unwrap();
        assert_eq!((h.u, h.v), (0.5, 0.5));
        let h = acc.intersect(&Ray::new(Vec3::new(0.8, 0.3, 1.0), -Vec3::Z)).unwrap();
        assert!((h.u - 0.8).abs() < 1e-6 && (h.v - 0.3).abs() < 1e-6);
        let h = acc.intersect(&Ray::new(Vec3::new(0.2, 0.7, 1.0), -Vec3::Z)).unwrap();
        assert!((h.u - 0.2).abs() < 1e-6 && (h.v - 0.7).abs() < 1e-6);
    }

    #[test]
    fn nonuniform_scale_keeps_world_t() {
        let xf = Affine::scale(Vec3::new(1.0, 1.0, 4.0)).then_local(&Affine::translation(Vec3::new(0.0, 0.0, 1.0)));
        let acc = TwoLevelAccel::build(&scene_with(unit_triangle(), &[xf]), &AccelOptions::default());
        // object plane z = 1 lands at world z = 4
        let h = acc.intersect(&Ray::new(Vec3::new(0.2, 0.2, 0.0), Vec3::Z)).unwrap();
        assert!((h.t - 4.0).abs() < 1e-5);
        assert!((h.normal.abs() - Vec3::Z).length() < 1e-5);
    }

    #[test]
    fn tmax_is_exclusive() {
        let acc = TwoLevelAccel::build(&scene_with(unit_triangle(), &[Affine::IDENTITY]), &AccelOptions::default());
        let mut r = Ray::new(Vec3::new(0.25, 0.25, -1.0), Vec3::Z);
        r.tmax = 1.0;
        assert!(acc.intersect(&r).is_none());
        assert!(!acc.occluded(&r));
    }
}
