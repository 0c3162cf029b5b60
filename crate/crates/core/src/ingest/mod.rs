//! Scene ingestion: PBRT text, quad reconstruction and the binary format.

pub mod bench;
pub mod biff;
pub mod pbrt;
pub mod quad;
pub mod writer;

pub use bench::{bench_load, EntityCounts, LoadError, LoadReport};
pub use biff::{read_biff, read_biff_bytes, read_biff_file, write_biff, write_biff_file, BiffError};
pub use pbrt::{parse_pbrt, parse_pbrt_file, ParseError};
pub use quad::{merge_scene_quads, merge_triangle_pairs, MergeError, MergeSummary};
pub use writer::write_pbrt;

use std::path::Path;

use crate::scene::SceneDesc;

/// Loads `.biff` files as binary and anything else as PBRT text. Text
/// scenes get their triangle pairs merged into quads.
pub fn load_scene_file(path: &Path) -> Result<SceneDesc, LoadError> {
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("biff")) {
        Ok(read_biff_file(path)?)
    } else {
        let mut scene = parse_pbrt_file(path)?;
        merge_scene_quads(&mut scene);
        Ok(scene)
    }
}
