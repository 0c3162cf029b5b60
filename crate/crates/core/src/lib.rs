pub mod accel;
pub mod dfb;
pub mod harness;
pub mod ingest;
pub mod math;
pub mod render;
pub mod scene;
pub mod shade;
