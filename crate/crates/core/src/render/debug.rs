//! Pseudo-color debug shading.

use glam::DVec3;

use super::Mode;
use crate::accel::Hit;

/// Miss color in the id modes.
pub const BACKGROUND: DVec3 = DVec3::splat(0.1);

/// Chris Wellons' `lowbias32` integer hash.
#[inline]
pub fn lowbias32(mut x: u32) -> u32 {
    x ^= x >> 16;
    x = x.wrapping_mul(0x7feb_352d);
    x ^= x >> 15;
    x = x.wrapping_mul(0x846c_a68b);
    x ^= x >> 16;
    x
}

/// Stable pseudo-color for an id, each channel in `[0.2, 1]`.
pub fn id_color(id: u32) -> DVec3 {
    let h = lowbias32(id.wrapping_add(0x9e37_79b9));
    let c = |s: u32| 0.2 + 0.8 * ((h >> s) & 0xff) as f64 / 255.0;
    DVec3::new(c(0), c(8), c(16))
}

pub fn debug_shade(hit: Option<&Hit>, mode: Mode) -> DVec3 {
    let Some(h) = hit else { return BACKGROUND };
    match mode {
        Mode::PrimId => id_color(h.prim),
        Mode::GeomId => id_color(h.geom),
        Mode::InstanceId => id_color(h.instance),
        _ => BACKGROUND,
    }
}

/// Dark-to-light heat ramp for `x ∈ [0, 1]`: black, red, yellow, white.
pub fn heat_color(x: f64) -> DVec3 {
    let x = x.clamp(0.0, 1.0) * 3.0;
    DVec3::new(x.min(1.0), (x - 1.0).clamp(0.0, 1.0), (x - 2.0).clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use glam::Vec3;

    fn hit(instance: u32, geom: u32, prim: u32) -> Hit {
        Hit { t: 1.0, instance, geom, prim, u: 0.0, v: 0.0, normal: Vec3::Z }
    }

    #[test]
    fn ids_are_stable_and_distinct() {
        assert_eq!(debug_shade(Some(&hit(0, 0, 7)), Mode::PrimId), debug_shade(Some(&hit(3, 2, 7)), Mode::PrimId));
        assert!((id_color(0) - id_color(1)).abs().max_element() > 0.1);
        let mut seen = std::collections::HashSet::new();
        for id in 0..1000u32 {
            assert!(seen.insert(id_color(id).to_array().map(f64::to_bits)), "{id}");
        }
        assert_eq!(debug_shade(None, Mode::GeomId), BACKGROUND);
    }

    #[test]
    fn heat_ramp_is_monotone() {
        let mut prev = -1.0;
        for i in 0..=100 {
            let c = heat_color(i as f64 / 100.0);
            let s = c.x + c.y + c.z;
            assert!(s >= prev);
            prev = s;
        }
        assert_eq!(heat_color(1.0), DVec3::ONE);
    }
}
