#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use spinenav::geometry::{RigidTransform, UnitQuaternion, Vector3};
use spinenav::tracking::{CameraIntrinsics, MarkerObservation};

pub fn camera() -> CameraIntrinsics<f64> {
    CameraIntrinsics::new(800.0, 800.0, 640.0, 640.0, 1280, 1280).unwrap()
}

/// Rotation matrix of a unit quaternion `[w, x, y, z]`, written out directly.
pub fn quat_matrix(q: [f64; 4]) -> [[f64; 3]; 3] {
    let [w, x, y, z] = q;
    [
        [1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z), 2.0 * (x * z + w * y)],
        [2.0 * (x * y + w * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x)],
        [2.0 * (x * z - w * y), 2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y)],
    ]
}

/// Pinhole projection of the four canonical corners, without the library.
pub fn project_square(q: [f64; 4], t: [f64; 3], side: f64, cam: &CameraIntrinsics<f64>) -> [[f64; 2]; 4] {
    let r = quat_matrix(q);
    let h = side / 2.0;
    [[-h, h], [h, h], [h, -h], [-h, -h]].map(|[x, y]| {
        let p: Vec<f64> = (0..3).map(|i| r[i][0] * x + r[i][1] * y + t[i]).collect();
        [cam.fx * p[0] / p[2] + cam.cx, cam.fy * p[1] / p[2] + cam.cy]
    })
}

/// Marker facing the camera within 60° of tilt, depth in `z_range`, kept
/// well inside an 800 px / 1280 px field of view.
pub fn random_pose(rng: &mut ChaCha8Rng, z_range: (f64, f64)) -> RigidTransform<f64> {
    let z = rng.gen_range(z_range.0..z_range.1);
    let t = Vector3::new(rng.gen_range(-0.3..0.3) * z, rng.gen_range(-0.3..0.3) * z, z);
    let axis = loop {
        let a = Vector3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        if a.norm() > 0.1 && a.norm() <= 1.0 {
            break a;
        }
    };
    let angle = rng.gen_range(0.0..60f64.to_radians());
    RigidTransform::new(UnitQuaternion::from_axis_angle(axis, angle), t)
}

pub fn observe(pose: &RigidTransform<f64>, side: f64, id: u32, frame: u64) -> MarkerObservation<f64> {
    MarkerObservation {
        frame,
        id,
        corners: project_square(pose.rotation.to_array(), pose.translation.to_array(), side, &camera()),
    }
}
