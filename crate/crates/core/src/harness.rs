//! Benchmark runs: warm-up, steady-state timing and the per-category
//! time breakdown.

use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use serde::Serialize;
use thiserror::Error;

use crate::accel::{Ray, TraversalCounters};
use crate::dfb::{DfbError, WorkerSpec};
use crate::render::{
    denoise, tonemap_for_display, CategoryTimes, DenoiseParams, Camera, RenderConfig, RenderScene, RenderStats, SceneOptions,
    StatsError, CATEGORY_NAMES,
};
use crate::scene::SceneDesc;
use crate::shade::CacheConfig;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Dfb(#[from] DfbError),
    #[error("frame {frame}: {source}")]
    Stats { frame: u64, source: StatsError },
    #[error("scene: {0}")]
    Scene(String),
}

#[derive(Clone, Debug)]
pub struct BenchConfig {
    pub width: u32,
    pub height: u32,
    pub max_path_depth: u32,
    pub warmup: u32,
    pub measure: u32,
    pub samples_per_frame: u32,
    pub seed: u64,
    pub workers: WorkerSpec,
    pub cache: CacheConfig,
    /// Time one denoise pass over the final frame.
    pub denoise: bool,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            width: 1536,
            height: 644,
            max_path_depth: 5,
            warmup: 64,
            measure: 64,
            samples_per_frame: 1,
            seed: 0,
            workers: WorkerSpec::Inline,
            cache: CacheConfig { byte_budget: None, open_handle_cap: 100 },
            denoise: true,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct FrameTiming {
    pub frame_index: u64,
    pub millis: f64,
    pub rays: u64,
    pub share_sum: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct BenchReport {
    pub scene_id: String,
    pub width: u32,
    pub height: u32,
    pub warmup_frames: u32,
    pub measured_frames: u32,
    /// Every frame, warm-up first.
    pub frames: Vec<FrameTiming>,
    pub mean_frame_millis: f64,
    pub median_frame_millis: f64,
    pub min_frame_millis: f64,
    /// Sum of measured frame times.
    pub measured_seconds: f64,
    pub rays_traced: u64,
    pub mrays_per_second: f64,
    pub rays_per_pixel: f64,
    pub shares: CategoryTimes,
    pub category_seconds: CategoryTimes,
    pub traversal: TraversalCounters,
    pub denoise_millis: Option<f64>,
    pub tonemap_millis: f64,
}

impl BenchReport {
    pub fn to_table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "scene       {}", self.scene_id);
        let _ = writeln!(s, "resolution  {}x{}", self.width, self.height);
        let _ = writeln!(s, "frames      {} warm-up + {} measured", self.warmup_frames, self.measured_frames);
        let _ = writeln!(
            s,
            "frame ms    mean {:.2}  median {:.2}  min {:.2}",
            self.mean_frame_millis, self.median_frame_millis, self.min_frame_millis
        );
        let _ = writeln!(s, "Mray/s      {:.3}", self.mrays_per_second);
        let _ = writeln!(s, "rays/pixel  {:.3}", self.rays_per_pixel);
        if let Some(d) = self.denoise_millis {
            let _ = writeln!(s, "denoise ms  {d:.2}");
        }
        let _ = writeln!(s, "tonemap ms  {:.2}", self.tonemap_millis);
        for (name, v) in CATEGORY_NAMES.iter().zip(self.shares.to_array()) {
            let _ = writeln!(s, "  {name:<20} {:>6.2}%", v * 100.0);
        }
        s
    }

    pub fn to_key_values(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k}={v}");
        };
        kv("scene", self.scene_id.clone());
        kv("width", self.width.to_string());
        kv("height", self.height.to_string());
        kv("warmup_frames", self.warmup_frames.to_string());
        kv("measured_frames", self.measured_frames.to_string());
        kv("mean_frame_ms", format!("{:.3}", self.mean_frame_millis));
        kv("median_frame_ms", format!("{:.3}", self.median_frame_millis));
        kv("min_frame_ms", format!("{:.3}", self.min_frame_millis));
        kv("rays_traced", self.rays_traced.to_string());
        kv("mrays_per_s", format!("{:.4}", self.mrays_per_second));
        kv("rays_per_pixel", format!("{:.4}", self.rays_per_pixel));
        for (name, v) in CATEGORY_NAMES.iter().zip(self.shares.to_array()) {
            kv(&format!("share_{name}"), format!("{:.4}", v * 100.0));
        }
        if let Some(d) = self.denoise_millis {
            kv("denoise_ms", format!("{d:.3}"));
        }
        kv("tonemap_ms", format!("{:.3}", self.tonemap_millis));
        s
    }
}

fn median(v: &[f64]) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let m = s.len() / 2;
    if s.len() % 2 == 1 {
        s[m]
    } else {
        0.5 * (s[m - 1] + s[m])
    }
}

/// Renders `warmup` then `measure` frames and reports the measured ones.
/// Texture paths resolve against `base_dir`.
pub fn bench(scene_id: &str, desc: SceneDesc, base_dir: &Path, cfg: &BenchConfig) -> Result<BenchReport, HarnessError> {
    let options = SceneOptions { base_dir: base_dir.to_path_buf(), cache: cfg.cache, ..Default::default() };
    let config = RenderConfig {
        max_path_depth: cfg.max_path_depth,
        samples_per_frame: cfg.samples_per_frame.max(1),
        seed: cfg.seed,
        ..Default::default()
    };
    let mut source = cfg.workers.start(desc, &options, config, cfg.width, cfg.height)?;
    let pixels = cfg.width as u64 * cfg.height as u64;
    let mut frames = Vec::new();
    let mut measured = Vec::new();
    for i in 0..(cfg.warmup + cfg.measure) as u64 {
        let t = Instant::now();
        let r = source.render_next()?;
        let millis = t.elapsed().as_secs_f64() * 1e3;
        r.stats.validate().map_err(|source| HarnessError::Stats { frame: r.frame_index, source })?;
        frames.push(FrameTiming { frame_index: r.frame_index, millis, rays: r.stats.rays_traced, share_sum: r.stats.shares.total() });
        if i >= cfg.warmup as u64 {
            measured.push((millis, r.stats));
        }
    }
    let times: Vec<f64> = measured.iter().map(|m| m.0).collect();
    let measured_seconds = times.iter().sum::<f64>() * 1e-3;
    let rays_traced: u64 = measured.iter().map(|m| m.1.rays_traced).sum();
    let mut seconds = [0.0; 5];
    let mut traversal = TraversalCounters::default();
    for (_, s) in &measured {
        for (a, v) in seconds.iter_mut().zip(s.category_seconds.to_array()) {
            *a += v;
        }
        traversal.add(&s.traversal);
    }
    let mut total = RenderStats { category_seconds: CategoryTimes::from_array(seconds), ..Default::default() };
    total.refresh_derived();

    let fb = source.framebuffer();
    let color = fb.color_image();
    let denoise_millis = if cfg.denoise && fb.sample_count().unwrap_or(0) > 0 {
        let t = Instant::now();
        let _ = denoise(&color, &fb.albedo_image(), &fb.normal_image(), fb.width, fb.height, fb.sample_count().unwrap(), &DenoiseParams::default());
        Some(t.elapsed().as_secs_f64() * 1e3)
    } else {
        None
    };
    let t = Instant::now();
    let _ = tonemap_for_display(&color, 1.0);
    let tonemap_millis = t.elapsed().as_secs_f64() * 1e3;

    let n = times.len().max(1) as f64;
    Ok(BenchReport {
        scene_id: scene_id.to_string(),
        width: cfg.width,
        height: cfg.height,
        warmup_frames: cfg.warmup,
        measured_frames: measured.len() as u32,
        frames,
        mean_frame_millis: times.iter().sum::<f64>() / n,
        median_frame_millis: median(&times),
        min_frame_millis: times.iter().copied().fold(f64::INFINITY, f64::min).min(f64::MAX),
        measured_seconds,
        rays_traced,
        mrays_per_second: if measured_seconds > 0.0 { rays_traced as f64 / (measured_seconds * 1e6) } else { 0.0 },
        rays_per_pixel: rays_traced as f64 / (pixels * measured.len().max(1) as u64) as f64,
        shares: total.shares,
        category_seconds: total.category_seconds,
        traversal,
        denoise_millis,
        tonemap_millis,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct TraversalReport {
    pub rays: u64,
    pub hits: u64,
    pub seconds: f64,
    pub mrays_per_second: f64,
    pub counters: TraversalCounters,
}

/// Primary-ray traversal alone: one pixel-center ray per pixel per pass.
pub fn bench_traversal(scene: &RenderScene, width: u32, height: u32, passes: u32) -> TraversalReport {
    let cam = Camera::new(&scene.default_camera, width, height);
    let mut counters = TraversalCounters::default();
    let mut hits = 0u64;
    let t = Instant::now();
    for _ in 0..passes {
        for y in 0..height {
            for x in 0..width {
                let (o, d) = cam.ray(x as f64 + 0.5, y as f64 + 0.5);
                let ray = Ray { origin: o.as_vec3(), dir: d.as_vec3(), tmin: 0.0, tmax: f32::INFINITY };
                hits += scene.accel.intersect_counted(&ray, &mut counters).is_some() as u64;
            }
        }
    }
    let seconds = t.elapsed().as_secs_f64();
    let rays = width as u64 * height as u64 * passes as u64;
    TraversalReport { rays, hits, seconds, mrays_per_second: rays as f64 / (seconds.max(1e-12) * 1e6), counters }
}

/// Category share table, one column per named run, percentages to two
/// decimals. Every run must pass the share-sum check.
pub fn report_profile(runs: &[(&str, &RenderStats)]) -> Result<String, StatsError> {
    for (_, s) in runs {
        s.validate()?;
    }
    let w0 = CATEGORY_NAMES.iter().map(|n| n.len()).max().unwrap_or(0);
    let widths: Vec<usize> = runs.iter().map(|(n, _)| n.len().max(7)).collect();
    let mut out = format!("{:<w0$}", "category");
    for ((n, _), w) in runs.iter().zip(&widths) {
        let _ = write!(out, "  {n:>w$}");
    }
    out.push('\n');
    for (i, name) in CATEGORY_NAMES.iter().enumerate() {
        let _ = write!(out, "{name:<w0$}");
        for ((_, s), w) in runs.iter().zip(&widths) {
            let _ = write!(out, "  {:>w$.2}", s.shares.to_array()[i] * 100.0);
        }
        out.push('\n');
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stats(shares: [f64; 5]) -> RenderStats {
        RenderStats { shares: CategoryTimes::from_array(shares), ..Default::default() }
    }

    #[test]
    fn profile_table_echoes_percentages() {
        let s = stats([0.7, 0.07, 0.02, 0.2, 0.01]);
        let t = report_profile(&[("beach", &s)]).unwrap();
        let rows: Vec<&str> = t.lines().collect();
        assert_eq!(rows.len(), 6);
        for (row, v) in rows[1..].iter().zip(["70.00", "7.00", "2.00", "20.00", "1.00"]) {
            assert!(row.trim_end().ends_with(v), "{row}");
        }
    }

    #[test]
    fn profile_rejects_bad_sum_and_keeps_column_order() {
        let bad = stats([0.7, 0.07, 0.02, 0.19, 0.01]);
        assert!(report_profile(&[("x", &bad)]).is_err());
        let a = stats([1.0, 0.0, 0.0, 0.0, 0.0]);
        let b = stats([0.0, 0.0, 0.0, 0.0, 1.0]);
        let t = report_profile(&[("zeta", &a), ("alpha", &b)]).unwrap();
        let header = t.lines().next().unwrap();
        assert!(header.find("zeta").unwrap() < header.find("alpha").unwrap());
        assert!(t.lines().nth(1).unwrap().contains("100.00"));
    }

    #[test]
    fn defaults() {
        let c = BenchConfig::default();
        assert_eq!((c.width, c.height, c.max_path_depth, c.warmup, c.measure), (1536, 644, 5, 64, 64));
        assert_eq!((c.cache.byte_budget, c.cache.open_handle_cap), (None, 100));
    }

    #[test]
    fn median_of_even_and_odd() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
    }
}
