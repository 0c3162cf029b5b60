use glam::{DVec3, Vec3};

use super::{CurveSet, CurveStyle, QuadMesh};

pub const DEFAULT_SEGMENTS_PER_SPAN: u32 = 8;

pub fn bezier_point(cp: &[Vec3; 4], t: f64) -> DVec3 {
    let [p0, p1, p2, p3] = cp.map(|p| p.as_dvec3());
    let s = 1.0 - t;
    p0 * (s * s * s) + p1 * (3.0 * s * s * t) + p2 * (3.0 * s * t * t) + p3 * (t * t * t)
}

pub fn bezier_tangent(cp: &[Vec3; 4], t: f64) -> DVec3 {
    let [p0, p1, p2, p3] = cp.map(|p| p.as_dvec3());
    let s = 1.0 - t;
    (p1 - p0) * (3.0 * s * s) + (p2 - p1) * (6.0 * s * t) + (p3 - p2) * (3.0 * t * t)
}

/// Piecewise-linear interpolation of the four control-point widths.
pub fn width_at(widths: &[f32; 4], t: f64) -> f64 {
    let s = (t.clamp(0.0, 1.0) * 3.0).min(3.0);
    let i = (s.floor() as usize).min(2);
    let f = s - i as f64;
    widths[i] as f64 * (1.0 - f) + widths[i + 1] as f64 * f
}

fn any_perpendicular(t: DVec3) -> DVec3 {
    let a = if t.x.abs() < 0.9 { DVec3::X } else { DVec3::Y };
    t.cross(a).normalize()
}

/// Converts every cubic span into `segments_per_span` ribbon quads. Flat
/// ribbons face `camera_hint` (a world-space eye position) or +Z when absent;
/// round curves become two crossed ribbons.
pub fn tessellate_curves(curves: &CurveSet, segments_per_span: u32, camera_hint: Option<Vec3>) -> QuadMesh {
    let n = segments_per_span.max(1) as usize;
    let ribbons = match curves.style {
        CurveStyle::Flat => 1,
        CurveStyle::Round => 2,
    };
    let mut mesh = QuadMesh {
        positions: Vec::with_capacity(curves.control_points.len() * ribbons * (n + 1) * 2),
        indices: Vec::with_capacity(curves.control_points.len() * ribbons * n),
    };
    for (cp, widths) in curves.control_points.iter().zip(&curves.widths) {
        let chord = (cp[3] - cp[0]).as_dvec3();
        let frames: Vec<(DVec3, DVec3, f64)> = (0..=n)
            .map(|k| {
                let t = k as f64 / n as f64;
                let p = bezier_point(cp, t);
                let mut tan = bezier_tangent(cp, t);
                if tan.length_squared() < 1e-24 {
                    tan = if chord.length_squared() > 0.0 { chord } else { DVec3::X };
                }
                let tan = tan.normalize();
                let view = match camera_hint {
                    Some(eye) => (eye.as_dvec3() - p).normalize_or_zero(),
                    None => DVec3::Z,
                };
                let mut side = tan.cross(view);
                side = if side.length_squared() < 1e-20 { any_perpendicular(tan) } else { side.normalize() };
                (p, side, width_at(widths, t))
            })
            .collect();
        for r in 0..ribbons {
            let base = mesh.positions.len() as u32;
            for (k, (p, side, w)) in frames.iter().enumerate() {
                let dir = if r == 0 {
                    *side
                } else {
                    let t = bezier_tangent(cp, k as f64 / n as f64);
                    let t = if t.length_squared() < 1e-24 { any_perpendicular(*side) } else { t.normalize() };
                    t.cross(*side).normalize_or_zero()
                };
                let half = dir * (w * 0.5);
                mesh.positions.push((*p - half).as_vec3());
                mesh.positions.push((*p + half).as_vec3());
            }
            for k in 0..n as u32 {
                let l0 = base + 2 * k;
                mesh.indices.push([l0, l0 + 1, l0 + 3, l0 + 2]);
            }
        }
    }
    mesh
}
