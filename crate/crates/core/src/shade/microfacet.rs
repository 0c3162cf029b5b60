//! Isotropic GGX helpers in a z-up shading frame.

use std::f64::consts::PI;

use glam::DVec3;

#[inline]
pub fn ggx_d(h: DVec3, alpha: f64) -> f64 {
    if h.z <= 0.0 {
        return 0.0;
    }
    let a2 = alpha * alpha;
    // sin²θ + α² cos²θ, written to avoid cancellation for tiny α
    let t = h.x * h.x + h.y * h.y + a2 * h.z * h.z;
    a2 / (PI * t * t)
}

#[inline]
pub fn smith_lambda(w: DVec3, alpha: f64) -> f64 {
    let cos2 = w.z * w.z;
    if cos2 <= 0.0 {
        return f64::INFINITY;
    }
    let sin2 = (w.x * w.x + w.y * w.y).max(0.0);
    let tan2 = sin2 / cos2;
    0.5 * (-1.0 + (1.0 + alpha * alpha * tan2).sqrt())
}

#[inline]
pub fn smith_g1(w: DVec3, alpha: f64) -> f64 {
    1.0 / (1.0 + smith_lambda(w, alpha))
}

/// Height-correlated masking-shadowing; symmetric in its arguments.
#[inline]
pub fn smith_g2(wo: DVec3, wi: DVec3, alpha: f64) -> f64 {
    if wo.z <= 0.0 || wi.z <= 0.0 {
        return 0.0;
    }
    1.0 / (1.0 + smith_lambda(wo, alpha) + smith_lambda(wi, alpha))
}

/// Samples a visible normal (Heitz 2018) for `wo` in the upper hemisphere.
pub fn sample_vndf(wo: DVec3, alpha: f64, u: [f64; 2]) -> DVec3 {
    let vh = DVec3::new(alpha * wo.x, alpha * wo.y, wo.z).normalize();
    let lensq = vh.x * vh.x + vh.y * vh.y;
    let t1 = if lensq > 0.0 {
        DVec3::new(-vh.y, vh.x, 0.0) / lensq.sqrt()
    } else {
        DVec3::X
    };
    let t2 = vh.cross(t1);
    let r = u[0].sqrt();
    let phi = 2.0 * PI * u[1];
    let p1 = r * phi.cos();
    let mut p2 = r * phi.sin();
    let s = 0.5 * (1.0 + vh.z);
    p2 = (1.0 - s) * (1.0 - p1 * p1).max(0.0).sqrt() + s * p2;
    let nh = t1 * p1 + t2 * p2 + vh * (1.0 - p1 * p1 - p2 * p2).max(0.0).sqrt();
    DVec3::new(alpha * nh.x, alpha * nh.y, nh.z.max(0.0)).normalize()
}

#[inline]
pub fn reflect(wo: DVec3, h: DVec3) -> DVec3 {
    2.0 * wo.dot(h) * h - wo
}

/// Density (solid angle) of `reflect(wo, h)` for `h` drawn by
/// [`sample_vndf`]. Defined for any `wi`, including the lower hemisphere.
#[inline]
pub fn vndf_reflection_pdf(wo: DVec3, wi: DVec3, alpha: f64) -> f64 {
    let sum = wo + wi;
    let len2 = sum.length_squared();
    if len2 <= 0.0 || wo.z <= 0.0 {
        return 0.0;
    }
    let h = sum / len2.sqrt();
    if h.z <= 0.0 || wo.dot(h) <= 0.0 {
        return 0.0;
    }
    smith_g1(wo, alpha) * ggx_d(h, alpha) / (4.0 * wo.z)
}

#[inline]
pub fn flip_z(w: DVec3) -> DVec3 {
    DVec3::new(w.x, w.y, -w.z)
}

#[inline]
pub fn schlick_weight(cos: f64) -> f64 {
    let m = (1.0 - cos).clamp(0.0, 1.0);
    let m2 = m * m;
    m2 * m2 * m
}

pub fn cosine_hemisphere(u: [f64; 2]) -> DVec3 {
    let r = u[0].sqrt();
    let phi = 2.0 * PI * u[1];
    DVec3::new(r * phi.cos(), r * phi.sin(), (1.0 - u[0]).max(0.0).sqrt())
}

pub fn uniform_sphere(u: [f64; 2]) -> DVec3 {
    let z = 1.0 - 2.0 * u[0];
    let r = (1.0 - z * z).max(0.0).sqrt();
    let phi = 2.0 * PI * u[1];
    DVec3::new(r * phi.cos(), r * phi.sin(), z)
}

#[inline]
pub fn power_heuristic(a: f64, b: f64) -> f64 {
    let (a2, b2) = (a * a, b * b);
    if a2 + b2 == 0.0 {
        0.0
    } else if a2.is_infinite() {
        1.0
    } else {
        a2 / (a2 + b2)
    }
}
