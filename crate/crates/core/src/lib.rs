//! Mesh smoothing, surface-shell Dice scoring, fiducial-marker tracking and
//! overlay registration for MRI-based AR needle guidance, plus a seeded
//! insertion-trial simulator.
//!
//! Everything numeric is generic over [`Real`] (`f32` or `f64`); the aliases
//! below fix the scalar for the common case.

// `!(x > y)` is used on purpose so NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod fsutil;
pub mod geometry;
pub mod knn;
pub mod linalg;
pub mod optimizer;
pub mod overlay;
pub mod scalar;
pub mod simulation;
pub mod smoothing;
pub mod tracking;
pub mod voxel;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Vec3 = geometry::Vector3<f64>;
pub type Quat = geometry::UnitQuaternion<f64>;
pub type Mesh = geometry::TriangleMesh<f64>;
pub type Rigid = geometry::RigidTransform<f64>;
pub type Similarity = geometry::SimilarityTransform<f64>;
pub type Grid = voxel::VoxelGrid<f64>;
pub type Camera = tracking::CameraIntrinsics<f64>;
pub type Layout = overlay::FiducialLayout<f64>;
pub type Scenario = simulation::Scenario<f64>;

pub type Vec3f = geometry::Vector3<f32>;
pub type Meshf = geometry::TriangleMesh<f32>;
pub type Rigidf = geometry::RigidTransform<f32>;
pub type Similarityf = geometry::SimilarityTransform<f32>;
