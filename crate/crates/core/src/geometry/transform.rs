use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

use super::{UnitQuaternion, Vector3};

/// Rigid motion `p ↦ R·p + t`. Serialized as `{"q": [w,x,y,z], "t": [x,y,z]}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct RigidTransform<T> {
    #[serde(rename = "q")]
    pub rotation: UnitQuaternion<T>,
    #[serde(rename = "t")]
    pub translation: Vector3<T>,
}

impl<T: Real> RigidTransform<T> {
    pub fn new(rotation: UnitQuaternion<T>, translation: Vector3<T>) -> Self {
        Self {
            rotation,
            translation,
        }
    }

    pub fn identity() -> Self {
        Self::new(UnitQuaternion::identity(), Vector3::zeros())
    }

    pub fn from_translation(t: Vector3<T>) -> Self {
        Self::new(UnitQuaternion::identity(), t)
    }

    #[inline]
    pub fn apply(&self, p: Vector3<T>) -> Vector3<T> {
        self.rotation.rotate(p) + self.translation
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &Self) -> Self {
        Self::new(
            self.rotation * other.rotation,
            self.rotation.rotate(other.translation) + self.translation,
        )
    }

    pub fn inverse(&self) -> Self {
        let r = self.rotation.inverse();
        Self::new(r, -r.rotate(self.translation))
    }

    /// The frame's z-axis expressed in the target frame.
    pub fn z_axis(&self) -> Vector3<T> {
        self.rotation.rotate(Vector3::z_axis())
    }

    pub fn to_similarity(self) -> SimilarityTransform<T> {
        SimilarityTransform {
            rotation: self.rotation,
            translation: self.translation,
            scale: T::one(),
        }
    }
}

/// Uniform-scale similarity `p ↦ s·R·p + t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct SimilarityTransform<T> {
    #[serde(rename = "q")]
    pub rotation: UnitQuaternion<T>,
    #[serde(rename = "t")]
    pub translation: Vector3<T>,
    pub scale: T,
}

impl<T: Real> SimilarityTransform<T> {
    pub fn new(rotation: UnitQuaternion<T>, translation: Vector3<T>, scale: T) -> Result<Self> {
        if !(scale > T::zero() && scale.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "similarity scale must be positive and finite, got {scale}"
            )));
        }
        Ok(Self {
            rotation,
            translation,
            scale,
        })
    }

    pub fn identity() -> Self {
        RigidTransform::identity().to_similarity()
    }

    #[inline]
    pub fn apply(&self, p: Vector3<T>) -> Vector3<T> {
        self.rotation.rotate(p) * self.scale + self.translation
    }

    pub fn compose(&self, other: &Self) -> Self {
        Self {
            rotation: self.rotation * other.rotation,
            translation: self.rotation.rotate(other.translation) * self.scale + self.translation,
            scale: self.scale * other.scale,
        }
    }

    pub fn inverse(&self) -> Self {
        let r = self.rotation.inverse();
        let inv_s = self.scale.recip();
        Self {
            rotation: r,
            translation: -r.rotate(self.translation) * inv_s,
            scale: inv_s,
        }
    }
}

/// `t.apply(p)` as a free function: `scale·R·p + translation`.
pub fn apply_transform<T: Real>(t: &SimilarityTransform<T>, p: Vector3<T>) -> Vector3<T> {
    t.apply(p)
}
