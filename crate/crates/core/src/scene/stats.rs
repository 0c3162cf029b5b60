use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{Geometry, SceneDesc};

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatsReport {
    pub unique_objects: u64,
    pub unique_shapes: u64,
    pub unique_triangles: u64,
    pub unique_quads: u64,
    pub unique_curve_segments: u64,
    pub instance_count: u64,
    pub instanced_triangles: u64,
    pub instanced_quads: u64,
    pub instanced_curve_segments: u64,
    /// Bucket `k` counts objects whose primitive total lies in
    /// `[2^k, 2^(k+1))`; bucket 0 also holds empty objects.
    pub per_object_primitive_histogram: Vec<u64>,
}

#[derive(Clone, Copy, Default)]
struct ObjectCounts {
    triangles: u64,
    quads: u64,
    curves: u64,
}

pub fn scene_stats(scene: &SceneDesc) -> StatsReport {
    let mut report = StatsReport {
        unique_objects: scene.objects.len() as u64,
        instance_count: scene.instances.len() as u64,
        ..Default::default()
    };
    let per_object: Vec<ObjectCounts> = scene
        .objects
        .iter()
        .map(|o| {
            let mut c = ObjectCounts::default();
            for s in &o.shapes {
                match &s.geometry {
                    Geometry::Triangles(m) => c.triangles += m.indices.len() as u64,
                    Geometry::Quads(m) => c.quads += m.indices.len() as u64,
                    Geometry::Curves(cs) => c.curves += cs.control_points.len() as u64,
                }
            }
            c
        })
        .collect();
    for (o, c) in scene.objects.iter().zip(&per_object) {
        report.unique_shapes += o.shapes.len() as u64;
        report.unique_triangles += c.triangles;
        report.unique_quads += c.quads;
        report.unique_curve_segments += c.curves;
        let total = c.triangles + c.quads + c.curves;
        let bucket = if total == 0 { 0 } else { 63 - total.leading_zeros() as usize };
        if report.per_object_primitive_histogram.len() <= bucket {
            report.per_object_primitive_histogram.resize(bucket + 1, 0);
        }
        report.per_object_primitive_histogram[bucket] += 1;
    }
    for inst in &scene.instances {
        if let Some(c) = per_object.get(inst.object as usize) {
            report.instanced_triangles += c.triangles;
            report.instanced_quads += c.quads;
            report.instanced_curve_segments += c.curves;
        }
    }
    report
}

impl StatsReport {
    fn rows(&self) -> Vec<(&'static str, u64)> {
        vec![
            ("unique_objects", self.unique_objects),
            ("unique_shapes", self.unique_shapes),
            ("unique_triangles", self.unique_triangles),
            ("unique_quads", self.unique_quads),
            ("unique_curve_segments", self.unique_curve_segments),
            ("instance_count", self.instance_count),
            ("instanced_triangles", self.instanced_triangles),
            ("instanced_quads", self.instanced_quads),
            ("instanced_curve_segments", self.instanced_curve_segments),
        ]
    }

    pub fn to_table(&self) -> String {
        let mut out = String::new();
        for (k, v) in self.rows() {
            let _ = writeln!(out, "{:<26} {:>16}", k, v);
        }
        let _ = writeln!(out, "primitives per object (log2 buckets):");
        for (i, n) in self.per_object_primitive_histogram.iter().enumerate() {
            let _ = writeln!(out, "  [2^{:<2}, 2^{:<2}) {:>10}", i, i + 1, n);
        }
        out
    }

    pub fn to_key_values(&self) -> String {
        let mut out = String::new();
        for (k, v) in self.rows() {
            let _ = writeln!(out, "{k}={v}");
        }
        let hist: Vec<String> = self.per_object_primitive_histogram.iter().map(|n| n.to_string()).collect();
        let _ = writeln!(out, "per_object_primitive_histogram={}", hist.join(","));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::Affine;
    use crate::scene::{Instance, NamedObject, QuadMesh, ShapeDesc};
    use glam::Vec3;

    #[test]
    fn empty_scene_is_all_zero() {
        let r = scene_stats(&SceneDesc::default());
        assert_eq!(r, StatsReport::default());
    }

    #[test]
    fn one_quad_three_instances() {
        let quad = QuadMesh {
            positions: vec![Vec3::ZERO, Vec3::X, Vec3::ONE, Vec3::Y],
            indices: vec![[0, 1, 2, 3]],
        };
        let scene = SceneDesc {
            objects: vec![NamedObject {
                name: "q".into(),
                shapes: vec![ShapeDesc { geometry: Geometry::Quads(quad), material: 0, light_base: None }],
            }],
            instances: (0..3)
                .map(|i| Instance { object: 0, transform: Affine::translation(Vec3::X * i as f32) })
                .collect(),
            ..Default::default()
        };
        let r = scene_stats(&scene);
        assert_eq!(r.unique_quads, 1);
        assert_eq!(r.instanced_quads, 3);
        assert_eq!(r.instance_count, 3);
        assert!(r.to_key_values().contains("instanced_quads=3"));
    }
}
