//! Fiducial-marker pose estimation and frame-to-frame tracking.

mod camera;
mod filter;
mod marker;
mod pose;
pub mod stream;
mod tracker;

pub use camera::CameraIntrinsics;
pub use filter::smooth_pose;
pub use marker::{project_corners, validate_markers, MarkerObservation, MarkerSpec};
pub use pose::{estimate_marker_pose, reprojection_rms};
pub use tracker::{tracker_step, Registry, TrackEvent, TrackedObject, TrackerConfig};
