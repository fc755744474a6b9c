use std::ops::Mul;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

use super::{Matrix3, Vector3};

/// Unit rotation quaternion, kept on the `w >= 0` hemisphere.
///
/// Serialized as `[w, x, y, z]`; deserialization renormalizes and rejects
/// a zero or non-finite quaternion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[T; 4]", into = "[T; 4]", bound = "T: Real")]
pub struct UnitQuaternion<T> {
    w: T,
    x: T,
    y: T,
    z: T,
}

impl<T: Real> UnitQuaternion<T> {
    pub fn identity() -> Self {
        Self {
            w: T::one(),
            x: T::zero(),
            y: T::zero(),
            z: T::zero(),
        }
    }

    /// Normalizes `(w, x, y, z)` and moves it onto the canonical hemisphere.
    pub fn from_components(w: T, x: T, y: T, z: T) -> Option<Self> {
        let n = (w * w + x * x + y * y + z * z).sqrt();
        if !(n.is_finite() && n > T::epsilon()) {
            return None;
        }
        let s = if w < T::zero() { -n.recip() } else { n.recip() };
        Some(Self {
            w: w * s,
            x: x * s,
            y: y * s,
            z: z * s,
        })
    }

    /// Rotation of `angle` radians about `axis` (need not be unit).
    pub fn from_axis_angle(axis: Vector3<T>, angle: T) -> Self {
        match axis.try_normalize(T::epsilon()) {
            Some(a) => {
                let (s, c) = (angle * T::half()).sin_cos();
                Self::from_components(c, a.x * s, a.y * s, a.z * s).unwrap_or_else(Self::identity)
            }
            None => Self::identity(),
        }
    }

    /// Exponential map of a rotation vector (axis scaled by angle).
    pub fn from_scaled_axis(v: Vector3<T>) -> Self {
        let theta = v.norm();
        let half = theta * T::half();
        // sin(θ/2)/θ, series near zero
        let k = if theta < T::lit(1e-6) {
            T::half() - theta * theta / T::lit(48.0)
        } else {
            half.sin() / theta
        };
        Self::from_components(half.cos(), v.x * k, v.y * k, v.z * k).unwrap_or_else(Self::identity)
    }

    /// Shepperd's method; `m` must be a proper rotation.
    pub fn from_rotation_matrix(r: &Matrix3<T>) -> Self {
        let m = &r.m;
        let tr = r.trace();
        let one = T::one();
        let quarter = T::lit(0.25);
        let (w, x, y, z) = if tr > T::zero() {
            let s = (tr + one).sqrt() * T::two();
            (
                quarter * s,
                (m[2][1] - m[1][2]) / s,
                (m[0][2] - m[2][0]) / s,
                (m[1][0] - m[0][1]) / s,
            )
        } else if m[0][0] > m[1][1] && m[0][0] > m[2][2] {
            let s = (one + m[0][0] - m[1][1] - m[2][2]).sqrt() * T::two();
            (
                (m[2][1] - m[1][2]) / s,
                quarter * s,
                (m[0][1] + m[1][0]) / s,
                (m[0][2] + m[2][0]) / s,
            )
        } else if m[1][1] > m[2][2] {
            let s = (one + m[1][1] - m[0][0] - m[2][2]).sqrt() * T::two();
            (
                (m[0][2] - m[2][0]) / s,
                (m[0][1] + m[1][0]) / s,
                quarter * s,
                (m[1][2] + m[2][1]) / s,
            )
        } else {
            let s = (one + m[2][2] - m[0][0] - m[1][1]).sqrt() * T::two();
            (
                (m[1][0] - m[0][1]) / s,
                (m[0][2] + m[2][0]) / s,
                (m[1][2] + m[2][1]) / s,
                quarter * s,
            )
        };
        Self::from_components(w, x, y, z).unwrap_or_else(Self::identity)
    }

    /// Rotation mapping the orthonormal basis `from` onto `to` (columns).
    pub fn from_basis_pair(from: &Matrix3<T>, to: &Matrix3<T>) -> Self {
        Self::from_rotation_matrix(&(*to * from.transpose()))
    }

    pub fn w(&self) -> T {
        self.w
    }
    pub fn x(&self) -> T {
        self.x
    }
    pub fn y(&self) -> T {
        self.y
    }
    pub fn z(&self) -> T {
        self.z
    }

    pub fn to_array(self) -> [T; 4] {
        [self.w, self.x, self.y, self.z]
    }

    pub fn norm(&self) -> T {
        self.dot(self).sqrt()
    }

    #[inline]
    pub fn dot(&self, o: &Self) -> T {
        self.w * o.w + self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn inverse(&self) -> Self {
        Self {
            w: self.w,
            x: -self.x,
            y: -self.y,
            z: -self.z,
        }
    }

    pub fn rotate(&self, v: Vector3<T>) -> Vector3<T> {
        // v' = v + 2w (q × v) + 2 q × (q × v)
        let q = Vector3::new(self.x, self.y, self.z);
        let t = q.cross(&v) * T::two();
        v + t * self.w + q.cross(&t)
    }

    pub fn to_rotation_matrix(&self) -> Matrix3<T> {
        let (w, x, y, z) = (self.w, self.x, self.y, self.z);
        let one = T::one();
        let two = T::two();
        Matrix3 {
            m: [
                [
                    one - two * (y * y + z * z),
                    two * (x * y - w * z),
                    two * (x * z + w * y),
                ],
                [
                    two * (x * y + w * z),
                    one - two * (x * x + z * z),
                    two * (y * z - w * x),
                ],
                [
                    two * (x * z - w * y),
                    two * (y * z + w * x),
                    one - two * (x * x + y * y),
                ],
            ],
        }
    }

    /// Rotation angle in `[0, π]` between two orientations.
    pub fn angle_to(&self, o: &Self) -> T {
        // atan2 form stays accurate near zero where acos does not
        let (a, b) = (self, o);
        let w = a.w * b.w + a.x * b.x + a.y * b.y + a.z * b.z;
        let v = Vector3::new(
            a.w * b.x - a.x * b.w - a.y * b.z + a.z * b.y,
            a.w * b.y + a.x * b.z - a.y * b.w - a.z * b.x,
            a.w * b.z - a.x * b.y + a.y * b.x - a.z * b.w,
        );
        T::two() * v.norm().atan2(w.abs())
    }

    /// Spherical interpolation from `self` toward `o` by fraction `t`,
    /// taking the short arc regardless of quaternion sign.
    pub fn slerp(&self, o: &Self, t: T) -> Self {
        let mut d = self.dot(o);
        let mut b = *o;
        if d < T::zero() {
            d = -d;
            b = Self {
                w: -b.w,
                x: -b.x,
                y: -b.y,
                z: -b.z,
            };
        }
        let (wa, wb) = if d > T::one() - T::lit(1e-12) {
            (T::one() - t, t)
        } else {
            let theta = d.min(T::one()).acos();
            let s = theta.sin();
            (((T::one() - t) * theta).sin() / s, (t * theta).sin() / s)
        };
        Self::from_components(
            self.w * wa + b.w * wb,
            self.x * wa + b.x * wb,
            self.y * wa + b.y * wb,
            self.z * wa + b.z * wb,
        )
        .unwrap_or(*self)
    }

    pub fn cast<U: Real>(self) -> UnitQuaternion<U> {
        UnitQuaternion::from_components(
            U::lit(self.w.as_f64()),
            U::lit(self.x.as_f64()),
            U::lit(self.y.as_f64()),
            U::lit(self.z.as_f64()),
        )
        .unwrap_or_else(UnitQuaternion::identity)
    }
}

impl<T: Real> Mul for UnitQuaternion<T> {
    type Output = Self;
    /// Hamilton product, renormalized.
    fn mul(self, o: Self) -> Self {
        let (a, b) = (self, o);
        Self::from_components(
            a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
            a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
            a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
            a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w,
        )
        .unwrap_or_else(Self::identity)
    }
}

impl<T: Real> TryFrom<[T; 4]> for UnitQuaternion<T> {
    type Error = Error;
    fn try_from([w, x, y, z]: [T; 4]) -> Result<Self> {
        Self::from_components(w, x, y, z)
            .ok_or_else(|| Error::InvalidParams("quaternion has zero or non-finite norm".into()))
    }
}

impl<T> From<UnitQuaternion<T>> for [T; 4] {
    fn from(q: UnitQuaternion<T>) -> Self {
        [q.w, q.x, q.y, q.z]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrix_round_trip() {
        for (axis, angle) in [
            (Vector3::new(1.0, 2.0, 3.0), 0.3),
            (Vector3::new(0.0, 0.0, 1.0), 3.1),
            (Vector3::new(1.0, -1.0, 0.2), 2.9),
            (Vector3::new(0.0, 1.0, 0.0), -3.0),
        ] {
            let q = UnitQuaternion::<f64>::from_axis_angle(axis, angle);
            let back = UnitQuaternion::from_rotation_matrix(&q.to_rotation_matrix());
            assert!(q.angle_to(&back) < 1e-12);
            let v = Vector3::new(0.3, -2.0, 5.0);
            let a = q.rotate(v);
            let b = q.to_rotation_matrix() * v;
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn canonical_hemisphere() {
        let q = UnitQuaternion::<f64>::from_components(-0.5, 0.5, 0.5, 0.5).unwrap();
        assert!(q.w() >= 0.0);
        assert!((q.norm() - 1.0).abs() < 1e-15);
        assert!(UnitQuaternion::<f64>::from_components(0.0, 0.0, 0.0, 0.0).is_none());
    }

    #[test]
    fn slerp_is_sign_independent() {
        let a = UnitQuaternion::<f64>::from_axis_angle(Vector3::z_axis(), 0.2);
        let b = UnitQuaternion::from_axis_angle(Vector3::new(1.0, 1.0, 0.0), 1.2);
        let neg_b = [-b.w(), -b.x(), -b.y(), -b.z()];
        // raw negated copy bypassing canonicalization
        let nb = UnitQuaternion {
            w: neg_b[0],
            x: neg_b[1],
            y: neg_b[2],
            z: neg_b[3],
        };
        let s1 = a.slerp(&b, 0.3);
        let s2 = a.slerp(&nb, 0.3);
        assert!(s1.angle_to(&s2) < 1e-12);
        assert!(a.slerp(&b, 0.0).angle_to(&a) < 1e-12);
        assert!(a.slerp(&b, 1.0).angle_to(&b) < 1e-12);
    }

    #[test]
    fn scaled_axis_small_angle() {
        let q = UnitQuaternion::<f64>::from_scaled_axis(Vector3::new(1e-9, 0.0, 0.0));
        assert!((q.angle_to(&UnitQuaternion::identity()) - 1e-9).abs() < 1e-15);
    }
}
