//! Line-delimited JSON replay of pre-detected marker observations.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{UnitQuaternion, Vector3};
use crate::scalar::Real;

use super::{tracker_step, CameraIntrinsics, MarkerObservation, MarkerSpec, Registry, TrackEvent, TrackerConfig};

/// Camera and registered markers for one tracking stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real", deny_unknown_fields)]
pub struct TrackingSetup<T> {
    pub camera: CameraIntrinsics<T>,
    pub markers: Vec<MarkerSpec<T>>,
}

impl<T: Real> TrackingSetup<T> {
    pub fn validate(&self) -> Result<()> {
        self.camera.validate()?;
        super::validate_markers(&self.markers)
    }
}

/// Per-frame pose of a marker that has been acquired at least once.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct PoseRecord<T> {
    pub frame: u64,
    pub id: u32,
    pub active: bool,
    pub q: UnitQuaternion<T>,
    pub t: Vector3<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub frame: u64,
    #[serde(flatten)]
    pub event: TrackEvent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged, bound = "T: Real")]
pub enum OutputRecord<T> {
    Pose(PoseRecord<T>),
    Event(EventRecord),
}

/// Parses one observation per non-blank line. Frames must not decrease.
pub fn read_observations<T: Real, R: BufRead>(reader: R) -> Result<Vec<MarkerObservation<T>>> {
    let mut out: Vec<MarkerObservation<T>> = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let obs: MarkerObservation<T> = serde_json::from_str(&line).map_err(|e| Error::Record {
            line: lineno,
            reason: e.to_string(),
        })?;
        if let Some(prev) = out.last() {
            if obs.frame < prev.frame {
                return Err(Error::Record {
                    line: lineno,
                    reason: format!("frame {} follows frame {}", obs.frame, prev.frame),
                });
            }
        }
        out.push(obs);
    }
    Ok(out)
}

/// Runs the tracker over every frame from the first to the last observed
/// frame. Frames with no records are processed as empty frames. For each
/// frame, events come first, then one pose record per acquired marker.
pub fn replay<T: Real>(
    setup: &TrackingSetup<T>,
    config: &TrackerConfig<T>,
    observations: &[MarkerObservation<T>],
) -> Result<Vec<OutputRecord<T>>> {
    setup.validate()?;
    config.validate()?;
    let mut registry = Registry::new(&setup.markers)?;
    let mut out = Vec::new();
    let (Some(first), Some(last)) = (observations.first(), observations.last()) else {
        return Ok(out);
    };
    let mut rest = observations;
    for frame in first.frame..=last.frame {
        let n = rest.iter().take_while(|o| o.frame == frame).count();
        let (now, later) = rest.split_at(n);
        rest = later;
        let (next, events) = tracker_step(&registry, config, now, &setup.camera);
        registry = next;
        out.extend(events.into_iter().map(|event| OutputRecord::Event(EventRecord { frame, event })));
        for obj in registry.objects() {
            if let Some(p) = obj.pose {
                out.push(OutputRecord::Pose(PoseRecord {
                    frame,
                    id: obj.id,
                    active: obj.active,
                    q: p.rotation,
                    t: p.translation,
                }));
            }
        }
    }
    Ok(out)
}

pub fn write_records<T: Real, W: Write>(records: &[OutputRecord<T>], mut w: W) -> Result<()> {
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}
