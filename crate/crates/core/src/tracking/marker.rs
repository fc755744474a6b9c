use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{RigidTransform, Vector3};
use crate::scalar::Real;

use super::CameraIntrinsics;

/// Square fiducial of known size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct MarkerSpec<T> {
    pub id: u32,
    #[serde(rename = "side_length_mm")]
    pub side_length: T,
}

impl<T: Real> MarkerSpec<T> {
    pub fn new(id: u32, side_length: T) -> Result<Self> {
        if !(side_length > T::zero() && side_length.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "marker {id}: side length must be positive"
            )));
        }
        Ok(Self { id, side_length })
    }

    /// Corners in the marker frame, canonical order:
    /// `(-L/2, +L/2)`, `(+L/2, +L/2)`, `(+L/2, -L/2)`, `(-L/2, -L/2)`.
    pub fn corners(&self) -> [Vector3<T>; 4] {
        let h = self.side_length * T::half();
        let z = T::zero();
        [
            Vector3::new(-h, h, z),
            Vector3::new(h, h, z),
            Vector3::new(h, -h, z),
            Vector3::new(-h, -h, z),
        ]
    }
}

/// Checks ids are unique and sizes positive.
pub fn validate_markers<T: Real>(specs: &[MarkerSpec<T>]) -> Result<()> {
    let mut ids: Vec<u32> = specs.iter().map(|s| s.id).collect();
    ids.sort_unstable();
    if ids.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::InvalidParams("duplicate marker id".into()));
    }
    for s in specs {
        MarkerSpec::new(s.id, s.side_length)?;
    }
    Ok(())
}

/// Detected corner pixels of one marker in one frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct MarkerObservation<T> {
    pub frame: u64,
    pub id: u32,
    pub corners: [[T; 2]; 4],
}

/// Projects the marker's corners for pose `marker → camera`. `None` if any
/// corner is behind the camera.
pub fn project_corners<T: Real>(
    pose: &RigidTransform<T>,
    spec: &MarkerSpec<T>,
    cam: &CameraIntrinsics<T>,
) -> Option<[[T; 2]; 4]> {
    let c = spec.corners();
    Some([
        cam.project(pose.apply(c[0]))?,
        cam.project(pose.apply(c[1]))?,
        cam.project(pose.apply(c[2]))?,
        cam.project(pose.apply(c[3]))?,
    ])
}
