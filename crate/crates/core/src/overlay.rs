//! Model→camera overlay from one or two tracked fiducials.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Matrix3, RigidTransform, SimilarityTransform, UnitQuaternion, Vector3};
use crate::scalar::Real;
use crate::tracking::Registry;

const MIN_SEPARATION: f64 = 1e-6;
const MIN_FRAME_SINE: f64 = 1e-6;

/// Marker→model transforms recorded at scan time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real", try_from = "LayoutFile<T>", into = "LayoutFile<T>")]
pub struct FiducialLayout<T: Real> {
    markers: BTreeMap<u32, RigidTransform<T>>,
    d_ref: Option<T>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound = "T: Real", deny_unknown_fields)]
struct LayoutFile<T> {
    markers: BTreeMap<u32, RigidTransform<T>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    d_ref_mm: Option<T>,
}

impl<T: Real> TryFrom<LayoutFile<T>> for FiducialLayout<T> {
    type Error = Error;
    fn try_from(f: LayoutFile<T>) -> Result<Self> {
        Self::new(f.markers, f.d_ref_mm)
    }
}

impl<T: Real> From<FiducialLayout<T>> for LayoutFile<T> {
    fn from(l: FiducialLayout<T>) -> Self {
        Self {
            markers: l.markers,
            d_ref_mm: l.d_ref,
        }
    }
}

impl<T: Real> FiducialLayout<T> {
    /// One or two markers. With two, `d_ref` is derived from the marker
    /// origins when omitted and checked against them when given.
    pub fn new(markers: BTreeMap<u32, RigidTransform<T>>, d_ref: Option<T>) -> Result<Self> {
        if markers.is_empty() || markers.len() > 2 {
            return Err(Error::InvalidParams(format!(
                "layout needs one or two markers, got {}",
                markers.len()
            )));
        }
        if markers.values().any(|p| !p.translation.is_finite()) {
            return Err(Error::InvalidParams("layout translation is not finite".into()));
        }
        let d_ref = if markers.len() == 2 {
            let mut it = markers.values();
            let (a, b) = (it.next().unwrap(), it.next().unwrap());
            let d = a.translation.distance(&b.translation);
            if d <= T::lit(MIN_SEPARATION) {
                return Err(Error::Degenerate("layout marker origins coincide".into()));
            }
            if let Some(given) = d_ref {
                if (given - d).abs() > T::lit(1e-9) * d.max(T::one()) {
                    return Err(Error::InvalidParams(format!(
                        "d_ref_mm {given} disagrees with marker separation {d}"
                    )));
                }
            }
            Some(d)
        } else {
            if let Some(given) = d_ref {
                if !(given > T::zero() && given.is_finite()) {
                    return Err(Error::InvalidParams("d_ref_mm must be positive".into()));
                }
            }
            d_ref
        };
        Ok(Self { markers, d_ref })
    }

    pub fn ids(&self) -> Vec<u32> {
        self.markers.keys().copied().collect()
    }

    pub fn get(&self, id: u32) -> Option<&RigidTransform<T>> {
        self.markers.get(&id)
    }

    pub fn d_ref(&self) -> Option<T> {
        self.d_ref
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrackingMode {
    None,
    Single,
    Dual,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct OverlayPose<T> {
    pub mode: TrackingMode,
    /// Model→camera; `None` exactly when `mode` is `None`.
    pub transform: Option<SimilarityTransform<T>>,
}

impl<T: Real> OverlayPose<T> {
    pub fn none() -> Self {
        Self {
            mode: TrackingMode::None,
            transform: None,
        }
    }
}

/// Active layout markers, ascending.
fn active_layout_ids<T: Real>(active: &[u32], layout: &FiducialLayout<T>) -> Vec<u32> {
    layout.ids().into_iter().filter(|id| active.contains(id)).collect()
}

/// Depends only on which layout markers are active.
pub fn select_mode<T: Real>(active: &[u32], layout: &FiducialLayout<T>) -> TrackingMode {
    match active_layout_ids(active, layout).len() {
        0 => TrackingMode::None,
        1 => TrackingMode::Single,
        _ => TrackingMode::Dual,
    }
}

pub fn single_marker_overlay<T: Real>(
    pose: &RigidTransform<T>,
    id: u32,
    layout: &FiducialLayout<T>,
) -> Result<OverlayPose<T>> {
    let m = layout.get(id).ok_or(Error::UnknownMarker(id))?;
    Ok(OverlayPose {
        mode: TrackingMode::Single,
        transform: Some(pose.compose(&m.inverse()).to_similarity()),
    })
}

/// Orthonormal frame `[u, n', u×n']` from two centers and two normals.
fn pair_frame<T: Real>(
    c1: Vector3<T>,
    c2: Vector3<T>,
    z1: Vector3<T>,
    z2: Vector3<T>,
) -> Result<Matrix3<T>> {
    let u = (c2 - c1)
        .try_normalize(T::lit(MIN_SEPARATION))
        .ok_or_else(|| Error::Degenerate("marker centers coincide".into()))?;
    let n = (z1 + z2)
        .try_normalize(T::lit(MIN_FRAME_SINE))
        .ok_or_else(|| Error::Degenerate("marker normals cancel".into()))?;
    let n_perp = (n - u * n.dot(&u))
        .try_normalize(T::lit(MIN_FRAME_SINE))
        .ok_or_else(|| Error::Degenerate("mean normal is parallel to the marker baseline".into()))?;
    Ok(Matrix3::from_columns(u, n_perp, u.cross(&n_perp)))
}

/// Similarity overlay from two marker poses (`marker → camera`), scaled by
/// the observed center distance over `d_ref` and anchored at the midpoint.
pub fn dual_marker_overlay<T: Real>(
    first: (u32, &RigidTransform<T>),
    second: (u32, &RigidTransform<T>),
    layout: &FiducialLayout<T>,
) -> Result<OverlayPose<T>> {
    let m1 = layout.get(first.0).ok_or(Error::UnknownMarker(first.0))?;
    let m2 = layout.get(second.0).ok_or(Error::UnknownMarker(second.0))?;
    if first.0 == second.0 {
        return Err(Error::InvalidParams("dual overlay needs two distinct markers".into()));
    }
    let d_ref = layout
        .d_ref()
        .ok_or_else(|| Error::InvalidParams("layout has no reference distance".into()))?;
    let (p1, p2) = (first.1, second.1);
    let (c1, c2) = (p1.translation, p2.translation);

    let cam = pair_frame(c1, c2, p1.z_axis(), p2.z_axis())?;
    let model = pair_frame(m1.translation, m2.translation, m1.z_axis(), m2.z_axis())?;
    let rotation = UnitQuaternion::from_basis_pair(&model, &cam);
    let scale = c1.distance(&c2) / d_ref;

    let mid_cam = (c1 + c2) * T::half();
    let mid_model = (m1.translation + m2.translation) * T::half();
    let translation = mid_cam - rotation.rotate(mid_model) * scale;
    Ok(OverlayPose {
        mode: TrackingMode::Dual,
        transform: Some(SimilarityTransform::new(rotation, translation, scale)?),
    })
}

/// Mode arbitration over the registry's active markers. A degenerate dual
/// configuration falls back to the lower-id marker alone.
pub fn overlay_step<T: Real>(registry: &Registry<T>, layout: &FiducialLayout<T>) -> OverlayPose<T> {
    let ids = active_layout_ids(&registry.active_ids(), layout);
    let pose_of = |id: u32| registry.get(id).and_then(|o| o.pose);
    match ids.as_slice() {
        [] => OverlayPose::none(),
        [a, b, ..] => {
            let (pa, pb) = (pose_of(*a).unwrap(), pose_of(*b).unwrap());
            dual_marker_overlay((*a, &pa), (*b, &pb), layout)
                .or_else(|_| single_marker_overlay(&pa, *a, layout))
                .unwrap_or_else(|_| OverlayPose::none())
        }
        [a] => single_marker_overlay(&pose_of(*a).unwrap(), *a, layout)
            .unwrap_or_else(|_| OverlayPose::none()),
    }
}
