//! Geometric primitives, transforms and mesh I/O.

mod matrix;
mod mesh;
pub mod primitives;
mod quaternion;
mod stl;
mod transform;
mod vector;

pub use matrix::Matrix3;
pub use mesh::{mesh_bounds, union_bounds, Aabb, TriangleMesh};
pub use quaternion::UnitQuaternion;
pub use stl::{parse_stl, write_stl, StlFormat};
pub use transform::{apply_transform, RigidTransform, SimilarityTransform};
pub use vector::Vector3;
