use crate::geometry::RigidTransform;
use crate::scalar::Real;

/// Low-pass pose update: linear blend of translations and a short-arc slerp
/// of rotations, both by `beta` toward the measurement. `beta = 1` returns
/// the measurement.
pub fn smooth_pose<T: Real>(
    previous: &RigidTransform<T>,
    measured: &RigidTransform<T>,
    beta: T,
) -> RigidTransform<T> {
    if beta >= T::one() {
        return *measured;
    }
    let t = previous.translation * (T::one() - beta) + measured.translation * beta;
    let q = previous.rotation.slerp(&measured.rotation, beta);
    RigidTransform::new(q, t)
}
