use std::path::Path;
use std::time::Instant;

use serde::Serialize;
use thiserror::Error;

use super::biff::{read_biff_file, BiffError};
use super::pbrt::{parse_pbrt_file, ParseError};
use crate::scene::{Geometry, SceneDesc};

/// Counts that survive quad merging, so a merged BIFF still matches the
/// text it came from.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct EntityCounts {
    pub objects: usize,
    pub shapes: usize,
    pub instances: usize,
    pub materials: usize,
    pub lights: usize,
    pub vertices: usize,
}

impl EntityCounts {
    pub fn of(scene: &SceneDesc) -> Self {
        let shapes = scene.objects.iter().flat_map(|o| &o.shapes);
        Self {
            objects: scene.objects.len(),
            shapes: scene.objects.iter().map(|o| o.shapes.len()).sum(),
            instances: scene.instances.len(),
            materials: scene.materials.len(),
            lights: scene.lights.len(),
            vertices: shapes
                .map(|s| match &s.geometry {
                    Geometry::Triangles(m) => m.positions.len(),
                    Geometry::Quads(m) => m.positions.len(),
                    Geometry::Curves(c) => 4 * c.control_points.len(),
                })
                .sum(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct LoadReport {
    pub ascii_seconds: f64,
    pub binary_seconds: f64,
    pub speedup: f64,
    pub ascii_counts: EntityCounts,
    pub binary_counts: EntityCounts,
}

#[derive(Debug, Error)]
pub enum LoadError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Biff(#[from] BiffError),
    #[error("scenes differ: text {ascii:?} vs binary {binary:?}")]
    MismatchedScenes { ascii: EntityCounts, binary: EntityCounts },
}

/// Times a full load of the same scene from PBRT text and from BIFF.
pub fn bench_load(pbrt_path: &Path, biff_path: &Path) -> Result<LoadReport, LoadError> {
    let t = Instant::now();
    let ascii = parse_pbrt_file(pbrt_path)?;
    let ascii_seconds = t.elapsed().as_secs_f64();
    let ascii_counts = EntityCounts::of(&ascii);
    drop(ascii);

    let t = Instant::now();
    let binary = read_biff_file(biff_path)?;
    let binary_seconds = t.elapsed().as_secs_f64();
    let binary_counts = EntityCounts::of(&binary);
    drop(binary);

    if ascii_counts != binary_counts {
        return Err(LoadError::MismatchedScenes { ascii: ascii_counts, binary: binary_counts });
    }
    Ok(LoadReport {
        ascii_seconds,
        binary_seconds,
        speedup: ascii_seconds / binary_seconds.max(1e-9),
        ascii_counts,
        binary_counts,
    })
}
