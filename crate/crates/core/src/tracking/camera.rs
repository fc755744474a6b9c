use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Vector3;
use crate::scalar::Real;

/// Pinhole intrinsics without distortion: `u = fx·X/Z + cx`, `v = fy·Y/Z + cy`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct CameraIntrinsics<T> {
    pub fx: T,
    pub fy: T,
    pub cx: T,
    pub cy: T,
    pub width: u32,
    pub height: u32,
}

impl<T: Real> CameraIntrinsics<T> {
    pub fn new(fx: T, fy: T, cx: T, cy: T, width: u32, height: u32) -> Result<Self> {
        let c = Self {
            fx,
            fy,
            cx,
            cy,
            width,
            height,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        let w = T::from_u32(self.width).unwrap_or_else(T::zero);
        let h = T::from_u32(self.height).unwrap_or_else(T::zero);
        if !(self.fx > T::zero() && self.fy > T::zero() && self.fx.is_finite() && self.fy.is_finite()) {
            return Err(Error::InvalidParams("focal lengths must be positive".into()));
        }
        if !(self.cx >= T::zero() && self.cx < w && self.cy >= T::zero() && self.cy < h) {
            return Err(Error::InvalidParams("principal point must lie inside the image".into()));
        }
        Ok(())
    }

    /// Projects a camera-frame point; `None` behind or on the camera plane.
    pub fn project(&self, p: Vector3<T>) -> Option<[T; 2]> {
        (p.z > T::zero()).then(|| [self.fx * p.x / p.z + self.cx, self.fy * p.y / p.z + self.cy])
    }

    pub fn contains(&self, px: [T; 2]) -> bool {
        let w = T::from_u32(self.width).unwrap_or_else(T::zero);
        let h = T::from_u32(self.height).unwrap_or_else(T::zero);
        px[0] >= T::zero() && px[0] < w && px[1] >= T::zero() && px[1] < h
    }
}
