//! Small geometric helpers shared by every module: axis-aligned boxes and
//! 3×4 affine transforms.

use glam::{DVec3, Vec3};
use serde::{Deserialize, Serialize};

/// Axis-aligned bounding box. An empty box has `min > max`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Aabb {
    pub min: Vec3,
    pub max: Vec3,
}

impl Default for Aabb {
    fn default() -> Self {
        Self::EMPTY
    }
}

impl Aabb {
    pub const EMPTY: Aabb = Aabb {
        min: Vec3::splat(f32::INFINITY),
        max: Vec3::splat(f32::NEG_INFINITY),
    };

    pub fn new(min: Vec3, max: Vec3) -> Self {
        Self { min, max }
    }

    pub fn from_points<'a>(points: impl IntoIterator<Item = &'a Vec3>) -> Self {
        points.into_iter().fold(Self::EMPTY, |b, p| b.grow(*p))
    }

    pub fn is_empty(&self) -> bool {
        self.min.x > self.max.x || self.min.y > self.max.y || self.min.z > self.max.z
    }

    #[must_use]
    pub fn grow(self, p: Vec3) -> Self {
        Self { min: self.min.min(p), max: self.max.max(p) }
    }

    #[must_use]
    pub fn union(self, o: Aabb) -> Self {
        Self { min: self.min.min(o.min), max: self.max.max(o.max) }
    }

    pub fn contains(&self, o: &Aabb) -> bool {
        o.is_empty()
            || (self.min.cmple(o.min).all() && self.max.cmpge(o.max).all())
    }

    pub fn center(&self) -> Vec3 {
        (self.min + self.max) * 0.5
    }

    pub fn extent(&self) -> Vec3 {
        if self.is_empty() {
            Vec3::ZERO
        } else {
            self.max - self.min
        }
    }

    pub fn surface_area(&self) -> f32 {
        let d = self.extent();
        2.0 * (d.x * d.y + d.y * d.z + d.z * d.x)
    }

    /// Grows the box by a small relative and absolute margin so that
    /// floating-point rounding in ray/box and ray/primitive tests cannot
    /// reject a primitive that lies on the box boundary.
    #[must_use]
    pub fn padded(self) -> Self {
        if self.is_empty() {
            return self;
        }
        let scale = self.min.abs().max(self.max.abs()).max_element().max(self.extent().max_element());
        let pad = Vec3::splat(scale * 1e-5 + 1e-20);
        Self { min: self.min - pad, max: self.max + pad }
    }

    pub fn corners(&self) -> [Vec3; 8] {
        let (a, b) = (self.min, self.max);
        [
            Vec3::new(a.x, a.y, a.z),
            Vec3::new(b.x, a.y, a.z),
            Vec3::new(a.x, b.y, a.z),
            Vec3::new(b.x, b.y, a.z),
            Vec3::new(a.x, a.y, b.z),
            Vec3::new(b.x, a.y, b.z),
            Vec3::new(a.x, b.y, b.z),
            Vec3::new(b.x, b.y, b.z),
        ]
    }
}

/// Affine transform stored as a 3×4 row-major matrix: rows are
/// `[m00 m01 m02 tx]`, `[m10 m11 m12 ty]`, `[m20 m21 m22 tz]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Affine(pub [f32; 12]);

impl Default for Affine {
    fn default() -> Self {
        Self::IDENTITY
    }
}

impl Affine {
    pub const IDENTITY: Affine =
        Affine([1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0]);

    pub fn translation(t: Vec3) -> Self {
        Affine([1.0, 0.0, 0.0, t.x, 0.0, 1.0, 0.0, t.y, 0.0, 0.0, 1.0, t.z])
    }

    pub fn scale(s: Vec3) -> Self {
        Affine([s.x, 0.0, 0.0, 0.0, 0.0, s.y, 0.0, 0.0, 0.0, 0.0, s.z, 0.0])
    }

    /// Rotation by `degrees` about `axis` (right-handed).
    pub fn rotation(degrees: f32, axis: Vec3) -> Self {
        let a = axis.as_dvec3().normalize_or_zero();
        let (s, c) = (degrees as f64).to_radians().sin_cos();
        let t = 1.0 - c;
        let m = [
            t * a.x * a.x + c,
            t * a.x * a.y - s * a.z,
            t * a.x * a.z + s * a.y,
            t * a.x * a.y + s * a.z,
            t * a.y * a.y + c,
            t * a.y * a.z - s * a.x,
            t * a.x * a.z - s * a.y,
            t * a.y * a.z + s * a.x,
            t * a.z * a.z + c,
        ];
        Affine([
            m[0] as f32, m[1] as f32, m[2] as f32, 0.0,
            m[3] as f32, m[4] as f32, m[5] as f32, 0.0,
            m[6] as f32, m[7] as f32, m[8] as f32, 0.0,
        ])
    }

    /// Builds from a 4×4 matrix given in column-major order (the PBRT
    /// `Transform` convention). The projective row is dropped.
    pub fn from_column_major(m: &[f32; 16]) -> Self {
        Affine([
            m[0], m[4], m[8], m[12],
            m[1], m[5], m[9], m[13],
            m[2], m[6], m[10], m[14],
        ])
    }

    pub fn to_column_major(&self) -> [f32; 16] {
        let m = &self.0;
        [
            m[0], m[4], m[8], 0.0,
            m[1], m[5], m[9], 0.0,
            m[2], m[6], m[10], 0.0,
            m[3], m[7], m[11], 1.0,
        ]
    }

    pub fn is_identity(&self) -> bool {
        self.0.iter().zip(Self::IDENTITY.0.iter()).all(|(a, b)| a.to_bits() == b.to_bits())
    }

    pub fn determinant(&self) -> f64 {
        let m = self.0.map(|v| v as f64);
        m[0] * (m[5] * m[10] - m[6] * m[9]) - m[1] * (m[4] * m[10] - m[6] * m[8])
            + m[2] * (m[4] * m[9] - m[5] * m[8])
    }

    /// `self * rhs`: applies `rhs` first.
    #[must_use]
    pub fn then_local(&self, rhs: &Affine) -> Affine {
        let a = self.0.map(|v| v as f64);
        let b = rhs.0.map(|v| v as f64);
        let mut out = [0f32; 12];
        for r in 0..3 {
            for c in 0..4 {
                let mut v = a[r * 4] * b[c] + a[r * 4 + 1] * b[4 + c] + a[r * 4 + 2] * b[8 + c];
                if c == 3 {
                    v += a[r * 4 + 3];
                }
                out[r * 4 + c] = v as f32;
            }
        }
        Affine(out)
    }

    /// Inverse computed in double precision; `None` when the linear part is
    /// singular (|det| ≤ 1e-12).
    pub fn inverse(&self) -> Option<Affine> {
        let det = self.determinant();
        if det.abs() <= 1e-12 || !det.is_finite() {
            return None;
        }
        let m = self.0.map(|v| v as f64);
        let inv_det = 1.0 / det;
        let i00 = (m[5] * m[10] - m[6] * m[9]) * inv_det;
        let i01 = (m[2] * m[9] - m[1] * m[10]) * inv_det;
        let i02 = (m[1] * m[6] - m[2] * m[5]) * inv_det;
        let i10 = (m[6] * m[8] - m[4] * m[10]) * inv_det;
        let i11 = (m[0] * m[10] - m[2] * m[8]) * inv_det;
        let i12 = (m[2] * m[4] - m[0] * m[6]) * inv_det;
        let i20 = (m[4] * m[9] - m[5] * m[8]) * inv_det;
        let i21 = (m[1] * m[8] - m[0] * m[9]) * inv_det;
        let i22 = (m[0] * m[5] - m[1] * m[4]) * inv_det;
        let t = [m[3], m[7], m[11]];
        let tx = -(i00 * t[0] + i01 * t[1] + i02 * t[2]);
        let ty = -(i10 * t[0] + i11 * t[1] + i12 * t[2]);
        let tz = -(i20 * t[0] + i21 * t[1] + i22 * t[2]);
        Some(Affine(
            [i00, i01, i02, tx, i10, i11, i12, ty, i20, i21, i22, tz].map(|v| v as f32),
        ))
    }

    #[inline]
    pub fn point(&self, p: Vec3) -> Vec3 {
        let m = &self.0;
        Vec3::new(
            m[0] * p.x + m[1] * p.y + m[2] * p.z + m[3],
            m[4] * p.x + m[5] * p.y + m[6] * p.z + m[7],
            m[8] * p.x + m[9] * p.y + m[10] * p.z + m[11],
        )
    }

    #[inline]
    pub fn vector(&self, v: Vec3) -> Vec3 {
        let m = &self.0;
        Vec3::new(
            m[0] * v.x + m[1] * v.y + m[2] * v.z,
            m[4] * v.x + m[5] * v.y + m[6] * v.z,
            m[8] * v.x + m[9] * v.y + m[10] * v.z,
        )
    }

    /// Applies the transpose of the linear part; with the inverse transform
    /// this maps object-space normals to world space.
    #[inline]
    pub fn transpose_vector(&self, v: Vec3) -> Vec3 {
        let m = &self.0;
        Vec3::new(
            m[0] * v.x + m[4] * v.y + m[8] * v.z,
            m[1] * v.x + m[5] * v.y + m[9] * v.z,
            m[2] * v.x + m[6] * v.y + m[10] * v.z,
        )
    }

    /// Conservative world-space bounds of a transformed box.
    pub fn transform_aabb(&self, b: &Aabb) -> Aabb {
        if b.is_empty() {
            return *b;
        }
        Aabb::from_points(b.corners().iter().map(|c| self.point(*c)).collect::<Vec<_>>().iter())
            .padded()
    }
}

/// Builds an orthonormal basis `(t, b)` around unit vector `n`
/// (Duff et al. branchless construction).
pub fn orthonormal_basis(n: DVec3) -> (DVec3, DVec3) {
    let sign = 1f64.copysign(n.z);
    let a = -1.0 / (sign + n.z);
    let b = n.x * n.y * a;
    (
        DVec3::new(1.0 + sign * n.x * n.x * a, sign * b, -sign * n.x),
        DVec3::new(b, sign + n.y * n.y * a, -n.y),
    )
}

/// Rec. 709 luminance.
pub fn luminance(c: [f64; 3]) -> f64 {
    0.2126 * c[0] + 0.7152 * c[1] + 0.0722 * c[2]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_roundtrips_points() {
        let t = Affine::translation(Vec3::new(1.0, -2.0, 3.0))
            .then_local(&Affine::rotation(30.0, Vec3::new(0.2, 1.0, 0.3)))
            .then_local(&Affine::scale(Vec3::new(2.0, 0.5, 3.0)));
        let inv = t.inverse().unwrap();
        let p = Vec3::new(0.3, 0.7, -1.1);
        assert!((inv.point(t.point(p)) - p).length() < 1e-5);
    }

    #[test]
    fn singular_has_no_inverse() {
        assert!(Affine::scale(Vec3::new(1.0, 0.0, 1.0)).inverse().is_none());
    }

    #[test]
    fn column_major_roundtrip() {
        let t = Affine::translation(Vec3::new(4.0, 5.0, 6.0)).then_local(&Affine::rotation(10.0, Vec3::Z));
        assert_eq!(Affine::from_column_major(&t.to_column_major()), t);
    }

    #[test]
    fn basis_is_orthonormal() {
        for n in [DVec3::Z, -DVec3::Z, DVec3::new(0.3, -0.4, 0.5).normalize()] {
            let (t, b) = orthonormal_basis(n);
            assert!(t.dot(n).abs() < 1e-12 && b.dot(n).abs() < 1e-12 && t.dot(b).abs() < 1e-12);
            assert!((t.length() - 1.0).abs() < 1e-12);
        }
    }
}
