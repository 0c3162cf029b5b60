//! Per-component wall-time accounting.

use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::accel::TraversalCounters;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Category {
    TraversalIntersect = 0,
    PostIntersect = 1,
    Texture = 2,
    SampleShade = 3,
    Other = 4,
}

pub const CATEGORY_NAMES: [&str; 5] = ["traversal_intersect", "post_intersect", "texture", "sample_shade", "other"];

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CategoryTimes {
    pub traversal_intersect: f64,
    pub post_intersect: f64,
    pub texture: f64,
    pub sample_shade: f64,
    pub other: f64,
}

impl CategoryTimes {
    pub fn to_array(&self) -> [f64; 5] {
        [self.traversal_intersect, self.post_intersect, self.texture, self.sample_shade, self.other]
    }

    pub fn from_array(a: [f64; 5]) -> Self {
        Self { traversal_intersect: a[0], post_intersect: a[1], texture: a[2], sample_shade: a[3], other: a[4] }
    }

    pub fn total(&self) -> f64 {
        self.to_array().iter().sum()
    }
}

/// Scoped timers for one thread. Scopes do not nest.
#[derive(Clone, Debug, Default)]
pub struct Profiler {
    seconds: [f64; 5],
    pub rays: u64,
    pub nonfinite: u64,
    pub traversal: TraversalCounters,
}

impl Profiler {
    #[inline]
    pub fn time<R>(&mut self, c: Category, f: impl FnOnce() -> R) -> R {
        let t = Instant::now();
        let r = f();
        self.seconds[c as usize] += t.elapsed().as_secs_f64();
        r
    }

    /// Times a traversal call, handing it this thread's counters.
    #[inline]
    pub fn traverse<R>(&mut self, f: impl FnOnce(&mut TraversalCounters) -> R) -> R {
        let t = Instant::now();
        let r = f(&mut self.traversal);
        self.seconds[Category::TraversalIntersect as usize] += t.elapsed().as_secs_f64();
        r
    }

    pub fn seconds(&self) -> [f64; 5] {
        self.seconds
    }

    pub fn merge(&mut self, o: &Profiler) {
        for i in 0..5 {
            self.seconds[i] += o.seconds[i];
        }
        self.rays += o.rays;
        self.nonfinite += o.nonfinite;
        self.traversal.add(&o.traversal);
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("category shares sum to {0}, not 1")]
    SharesDoNotSumToOne(f64),
    #[error("negative share for {0}")]
    NegativeShare(&'static str),
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RenderStats {
    /// Fractions of frame time; sum to 1.
    pub shares: CategoryTimes,
    /// Per-thread average seconds in each category; `other` absorbs the
    /// rest of the frame wall time.
    pub category_seconds: CategoryTimes,
    pub rays_traced: u64,
    pub rays_per_pixel: f64,
    pub frame_millis: f64,
    pub pixel_count: u64,
    pub samples_per_pixel: u32,
    pub nonfinite_clamped: u64,
    pub traversal: TraversalCounters,
}

impl RenderStats {
    /// `summed` holds category seconds summed over `threads` threads; the
    /// per-thread average is attributed against `wall_seconds`.
    pub fn from_profile(summed: &Profiler, threads: usize, wall_seconds: f64, pixel_count: u64, spp: u32) -> Self {
        let t = threads.max(1) as f64;
        let mut s = summed.seconds().map(|v| v / t);
        let measured: f64 = s[..4].iter().sum();
        s[4] += (wall_seconds - measured - s[4]).max(0.0);
        let mut stats = Self {
            category_seconds: CategoryTimes::from_array(s),
            rays_traced: summed.rays,
            frame_millis: wall_seconds * 1e3,
            pixel_count,
            samples_per_pixel: spp,
            nonfinite_clamped: summed.nonfinite,
            traversal: summed.traversal,
            ..Default::default()
        };
        stats.refresh_derived();
        stats
    }

    /// Recomputes shares and rays per pixel from the raw fields.
    pub fn refresh_derived(&mut self) {
        let total = self.category_seconds.total();
        self.shares = if total > 0.0 {
            CategoryTimes::from_array(self.category_seconds.to_array().map(|v| v / total))
        } else {
            CategoryTimes { other: 1.0, ..Default::default() }
        };
        self.rays_per_pixel = if self.pixel_count > 0 { self.rays_traced as f64 / self.pixel_count as f64 } else { 0.0 };
    }

    /// Combines partial stats from concurrent workers of one frame.
    pub fn merge(parts: &[RenderStats], wall_seconds: f64) -> Self {
        let n = parts.len().max(1) as f64;
        let mut s = [0.0; 5];
        let mut out = RenderStats { frame_millis: wall_seconds * 1e3, ..Default::default() };
        for p in parts {
            for (acc, v) in s.iter_mut().zip(p.category_seconds.to_array()) {
                *acc += v / n;
            }
            out.rays_traced += p.rays_traced;
            out.pixel_count += p.pixel_count;
            out.nonfinite_clamped += p.nonfinite_clamped;
            out.traversal.add(&p.traversal);
            out.samples_per_pixel = out.samples_per_pixel.max(p.samples_per_pixel);
        }
        let measured: f64 = s[..4].iter().sum();
        s[4] = (wall_seconds - measured).max(0.0).max(s[4]);
        out.category_seconds = CategoryTimes::from_array(s);
        out.refresh_derived();
        out
    }

    pub fn validate(&self) -> Result<(), StatsError> {
        for (name, v) in CATEGORY_NAMES.iter().zip(self.shares.to_array()) {
            if !(v >= 0.0) {
                return Err(StatsError::NegativeShare(name));
            }
        }
        let sum = self.shares.total();
        if (sum - 1.0).abs() > 0.005 {
            return Err(StatsError::SharesDoNotSumToOne(sum));
        }
        Ok(())
    }

    /// Mega-rays per second over the frame wall time.
    pub fn mrays_per_second(&self) -> f64 {
        if self.frame_millis > 0.0 {
            self.rays_traced as f64 / (self.frame_millis * 1e-3 * 1e6)
        } else {
            0.0
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shares_close_over_wall_time() {
        let mut p = Profiler::default();
        p.time(Category::TraversalIntersect, || std::thread::sleep(std::time::Duration::from_millis(5)));
        p.rays = 100;
        let s = RenderStats::from_profile(&p, 1, 0.02, 10, 1);
        s.validate().unwrap();
        assert!(s.shares.traversal_intersect > 0.2);
        assert!((s.category_seconds.total() - 0.02).abs() < 1e-9);
        assert_eq!(s.rays_per_pixel, 10.0);
    }

    #[test]
    fn guard_rejects_bad_sum() {
        let mut s = RenderStats::default();
        s.shares = CategoryTimes::from_array([0.7, 0.07, 0.02, 0.19, 0.01]);
        assert!(matches!(s.validate(), Err(StatsError::SharesDoNotSumToOne(_))));
        s.shares.sample_shade = 0.2;
        s.validate().unwrap();
    }
}
