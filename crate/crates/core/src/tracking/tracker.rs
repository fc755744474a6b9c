//! Per-frame marker tracking: estimate, smooth, count misses, auto-disable.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::RigidTransform;
use crate::scalar::Real;

use super::{estimate_marker_pose, smooth_pose, CameraIntrinsics, MarkerObservation, MarkerSpec};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real", deny_unknown_fields)]
pub struct TrackerConfig<T> {
    /// Consecutive missed frames before a marker is disabled.
    #[serde(default = "default_t_miss")]
    pub t_miss: u32,
    #[serde(default = "default_beta")]
    pub beta: T,
    #[serde(default = "default_auto_disable")]
    pub auto_disable: bool,
}

fn default_t_miss() -> u32 {
    5
}
fn default_beta<T: Real>() -> T {
    T::half()
}
fn default_auto_disable() -> bool {
    true
}

impl<T: Real> Default for TrackerConfig<T> {
    fn default() -> Self {
        Self {
            t_miss: default_t_miss(),
            beta: default_beta(),
            auto_disable: default_auto_disable(),
        }
    }
}

impl<T: Real> TrackerConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if self.t_miss == 0 {
            return Err(Error::InvalidParams("t_miss must be at least 1".into()));
        }
        if !(self.beta > T::zero() && self.beta <= T::one()) {
            return Err(Error::InvalidParams(format!(
                "beta must lie in (0, 1], got {}",
                self.beta
            )));
        }
        Ok(())
    }
}

/// Tracking state of one registered marker. `pose` is `None` until the
/// first detection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackedObject<T> {
    pub id: u32,
    pub pose: Option<RigidTransform<T>>,
    pub active: bool,
    pub miss_count: u32,
}

impl<T: Real> TrackedObject<T> {
    pub fn new(id: u32) -> Self {
        Self {
            id,
            pose: None,
            active: false,
            miss_count: 0,
        }
    }

    /// Applies a successful measurement. Returns the transition event, if any.
    pub fn detect(&mut self, measured: RigidTransform<T>, beta: T) -> Option<TrackEvent> {
        let event = match (self.pose, self.active) {
            (Some(prev), true) => {
                self.pose = Some(smooth_pose(&prev, &measured, beta));
                None
            }
            (None, _) => {
                self.pose = Some(measured);
                Some(TrackEvent::Acquired { id: self.id })
            }
            (Some(_), false) => {
                self.pose = Some(measured);
                Some(TrackEvent::Reactivated { id: self.id })
            }
        };
        self.active = true;
        self.miss_count = 0;
        event
    }

    /// Records a frame without a usable detection.
    pub fn miss(&mut self, config: &TrackerConfig<T>) -> Option<TrackEvent> {
        self.miss_count = self.miss_count.saturating_add(1);
        if self.active && config.auto_disable && self.miss_count >= config.t_miss {
            self.active = false;
            return Some(TrackEvent::Deactivated { id: self.id });
        }
        None
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum TrackEvent {
    /// First detection of a marker.
    Acquired { id: u32 },
    Deactivated { id: u32 },
    Reactivated { id: u32 },
    EstimationFailed { id: u32, reason: String },
    /// Observation for an id that is not registered; ignored.
    UnknownMarker { id: u32 },
    /// Second observation of the same id in one frame; ignored.
    DuplicateObservation { id: u32 },
}

impl TrackEvent {
    pub fn id(&self) -> u32 {
        match self {
            Self::Acquired { id }
            | Self::Deactivated { id }
            | Self::Reactivated { id }
            | Self::EstimationFailed { id, .. }
            | Self::UnknownMarker { id }
            | Self::DuplicateObservation { id } => *id,
        }
    }
}

/// Registered markers keyed by id, with their sizes.
#[derive(Debug, Clone, PartialEq)]
pub struct Registry<T> {
    objects: BTreeMap<u32, TrackedObject<T>>,
    specs: BTreeMap<u32, MarkerSpec<T>>,
}

impl<T: Real> Registry<T> {
    pub fn new(specs: &[MarkerSpec<T>]) -> Result<Self> {
        super::validate_markers(specs)?;
        Ok(Self {
            objects: specs.iter().map(|s| (s.id, TrackedObject::new(s.id))).collect(),
            specs: specs.iter().map(|s| (s.id, *s)).collect(),
        })
    }

    pub fn get(&self, id: u32) -> Option<&TrackedObject<T>> {
        self.objects.get(&id)
    }

    pub fn objects(&self) -> impl Iterator<Item = &TrackedObject<T>> {
        self.objects.values()
    }

    pub fn spec(&self, id: u32) -> Option<&MarkerSpec<T>> {
        self.specs.get(&id)
    }

    /// Ids that are active and have a pose, ascending.
    pub fn active_ids(&self) -> Vec<u32> {
        self.objects
            .values()
            .filter(|o| o.active && o.pose.is_some())
            .map(|o| o.id)
            .collect()
    }
}

/// Processes one frame's detections. Estimation failures count as misses.
pub fn tracker_step<T: Real>(
    registry: &Registry<T>,
    config: &TrackerConfig<T>,
    observations: &[MarkerObservation<T>],
    cam: &CameraIntrinsics<T>,
) -> (Registry<T>, Vec<TrackEvent>) {
    let mut next = registry.clone();
    let mut events = Vec::new();
    let mut measured: BTreeMap<u32, RigidTransform<T>> = BTreeMap::new();
    let mut seen: Vec<u32> = Vec::new();

    for obs in observations {
        let Some(spec) = registry.specs.get(&obs.id) else {
            events.push(TrackEvent::UnknownMarker { id: obs.id });
            continue;
        };
        if seen.contains(&obs.id) {
            events.push(TrackEvent::DuplicateObservation { id: obs.id });
            continue;
        }
        seen.push(obs.id);
        match estimate_marker_pose(obs, spec, cam) {
            Ok(p) => {
                measured.insert(obs.id, p);
            }
            Err(e) => events.push(TrackEvent::EstimationFailed {
                id: obs.id,
                reason: e.to_string(),
            }),
        }
    }

    for obj in next.objects.values_mut() {
        let ev = match measured.get(&obj.id) {
            Some(p) => obj.detect(*p, config.beta),
            None => obj.miss(config),
        };
        events.extend(ev);
    }
    (next, events)
}
