use thiserror::Error;

use crate::scene::{Geometry, QuadMesh, SceneDesc, TriangleMesh};

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
pub enum MergeError {
    #[error("triangles {0} and {} do not form a quad", .0 + 1)]
    NotPaired(usize),
}

/// Rebuilds quads from consecutive triangle pairs `(a,b,c)`, `(a,c,d)`.
/// Quad `i` comes from triangles `2i` and `2i+1`; the vertex buffer is
/// carried over unchanged.
pub fn merge_triangle_pairs(mesh: &TriangleMesh) -> Result<QuadMesh, MergeError> {
    let tris = &mesh.indices;
    let mut quads = Vec::with_capacity(tris.len() / 2);
    for (i, pair) in tris.chunks(2).enumerate() {
        let [a, b, c] = pair[0];
        match pair.get(1) {
            Some(&[a2, c2, d]) if a2 == a && c2 == c && d != b && d != a && d != c => quads.push([a, b, c, d]),
            _ => return Err(MergeError::NotPaired(2 * i)),
        }
    }
    Ok(QuadMesh { positions: mesh.positions.clone(), indices: quads })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct MergeSummary {
    pub merged_meshes: usize,
    pub kept_meshes: usize,
    pub triangles_before: usize,
    pub quads_after: usize,
}

/// Converts every mergeable triangle mesh in place. Meshes carrying
/// per-vertex normals are left alone, since quads store none.
pub fn merge_scene_quads(scene: &mut SceneDesc) -> MergeSummary {
    let mut s = MergeSummary::default();
    for shape in scene.objects.iter_mut().flat_map(|o| o.shapes.iter_mut()) {
        let Geometry::Triangles(mesh) = &shape.geometry else { continue };
        if mesh.normals.is_some() {
            s.kept_meshes += 1;
            continue;
        }
        match merge_triangle_pairs(mesh) {
            Ok(q) => {
                s.merged_meshes += 1;
                s.triangles_before += mesh.indices.len();
                s.quads_after += q.indices.len();
                shape.geometry = Geometry::Quads(q);
            }
            Err(_) => s.kept_meshes += 1,
        }
    }
    s
}
