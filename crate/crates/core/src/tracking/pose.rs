//! Pose of a square marker from its four corner pixels.
//!
//! Pipeline: plane-to-image homography by DLT on Hartley-normalized
//! points, decomposition into `(R, t)` with Gram–Schmidt
//! orthonormalization, then Gauss–Newton on pixel reprojection error. The
//! mirror-tilt solution of the planar ambiguity is refined as well and the
//! lower-error candidate wins.

use crate::error::{Error, Result};
use crate::geometry::{Matrix3, RigidTransform, UnitQuaternion, Vector3};
use crate::linalg::solve;
use crate::scalar::Real;

use super::{CameraIntrinsics, MarkerObservation, MarkerSpec};

const MAX_ITERATIONS: usize = 20;
const STEP_TOLERANCE: f64 = 1e-10;

/// Estimates the `marker → camera` transform for one observation.
pub fn estimate_marker_pose<T: Real>(
    obs: &MarkerObservation<T>,
    spec: &MarkerSpec<T>,
    cam: &CameraIntrinsics<T>,
) -> Result<RigidTransform<T>> {
    check_corners(&obs.corners, cam)?;
    let object = spec.corners();
    let normalized: [[T; 2]; 4] = obs
        .corners
        .map(|[u, v]| [(u - cam.cx) / cam.fx, (v - cam.cy) / cam.fy]);

    let half = spec.side_length * T::half();
    let unit_square = object.map(|p| [p.x / half, p.y / half]);
    let h = homography(&unit_square, &normalized)
        .ok_or_else(|| Error::Degenerate("homography is singular".into()))?;
    let initial = decompose(&h, half)?;

    let problem = Reprojection {
        object,
        observed: obs.corners,
        cam: *cam,
    };
    let first = problem.refine(initial)?;
    let best = match mirror_candidate(&initial) {
        Some(alt) => match problem.refine(alt) {
            Ok(second) => pick(first, second),
            Err(_) => first,
        },
        None => first,
    };
    if best.pose.translation.z <= T::zero() {
        return Err(Error::Degenerate("marker estimated behind the camera".into()));
    }
    Ok(best.pose)
}

fn check_corners<T: Real>(c: &[[T; 2]; 4], cam: &CameraIntrinsics<T>) -> Result<()> {
    if c.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::InvalidObservation("non-finite corner".into()));
    }
    if let Some(p) = c.iter().find(|p| !cam.contains(**p)) {
        return Err(Error::InvalidObservation(format!(
            "corner ({}, {}) outside the image",
            p[0], p[1]
        )));
    }
    // turn direction at every corner must agree and be nonzero
    let scale = c
        .iter()
        .flat_map(|p| [(p[0] - c[0][0]).abs(), (p[1] - c[0][1]).abs()])
        .fold(T::zero(), T::max);
    let tol = scale * scale * T::lit(1e-9);
    let mut sign = 0i8;
    for i in 0..4 {
        let (a, b, d) = (c[i], c[(i + 1) % 4], c[(i + 2) % 4]);
        let cross = (b[0] - a[0]) * (d[1] - b[1]) - (b[1] - a[1]) * (d[0] - b[0]);
        if !(cross.abs() > tol) {
            return Err(Error::Degenerate("corners are collinear".into()));
        }
        let s = if cross > T::zero() { 1 } else { -1 };
        if sign != 0 && s != sign {
            return Err(Error::Degenerate("corners do not form a convex quadrilateral".into()));
        }
        sign = s;
    }
    Ok(())
}

/// Homography `H` with `dst ~ H · [src, 1]`, solved with `h33 = 1` after
/// moving `dst` to zero mean and mean distance √2.
fn homography<T: Real>(src: &[[T; 2]; 4], dst: &[[T; 2]; 4]) -> Option<Matrix3<T>> {
    let quarter = T::lit(0.25);
    let mx = dst.iter().map(|p| p[0]).sum::<T>() * quarter;
    let my = dst.iter().map(|p| p[1]).sum::<T>() * quarter;
    let mean_dist = dst
        .iter()
        .map(|p| ((p[0] - mx).powi(2) + (p[1] - my).powi(2)).sqrt())
        .sum::<T>()
        * quarter;
    if !(mean_dist > T::zero()) {
        return None;
    }
    let s = T::two().sqrt() / mean_dist;

    let mut a = [[T::zero(); 8]; 8];
    let mut b = [T::zero(); 8];
    for i in 0..4 {
        let [x, y] = src[i];
        let (u, v) = (s * (dst[i][0] - mx), s * (dst[i][1] - my));
        let (o, z) = (T::one(), T::zero());
        a[2 * i] = [x, y, o, z, z, z, -u * x, -u * y];
        b[2 * i] = u;
        a[2 * i + 1] = [z, z, z, x, y, o, -v * x, -v * y];
        b[2 * i + 1] = v;
    }
    let h = solve(a, b)?;
    let inv_s = s.recip();
    // undo the normalization: H = T⁻¹ · H'
    let hn = [[h[0], h[1], h[2]], [h[3], h[4], h[5]], [h[6], h[7], T::one()]];
    let mut m = [[T::zero(); 3]; 3];
    for c in 0..3 {
        m[0][c] = inv_s * hn[0][c] + mx * hn[2][c];
        m[1][c] = inv_s * hn[1][c] + my * hn[2][c];
        m[2][c] = hn[2][c];
    }
    Some(Matrix3 { m })
}

/// `H ~ [r1 r2 t/half]` in normalized camera coordinates.
fn decompose<T: Real>(h: &Matrix3<T>, half: T) -> Result<RigidTransform<T>> {
    let (h1, h2, h3) = (h.column(0), h.column(1), h.column(2));
    let denom = h1.norm() + h2.norm();
    if !(denom > T::zero() && denom.is_finite()) {
        return Err(Error::Degenerate("homography columns vanish".into()));
    }
    let mut lambda = T::two() / denom;
    if h3.z < T::zero() {
        lambda = -lambda;
    }
    let (r1, r2) = (h1 * lambda, h2 * lambda);
    let t = h3 * (lambda * half);
    let eps = T::epsilon();
    let x = r1
        .try_normalize(eps)
        .ok_or_else(|| Error::Degenerate("rotation column vanishes".into()))?;
    let z = r1
        .cross(&r2)
        .try_normalize(eps)
        .ok_or_else(|| Error::Degenerate("rotation columns are parallel".into()))?;
    let y = z.cross(&x);
    let r = UnitQuaternion::from_rotation_matrix(&Matrix3::from_columns(x, y, z));
    Ok(RigidTransform::new(r, t))
}

/// Tilts the marker normal to its mirror image about the line of sight,
/// the other local minimum of the planar pose problem. `None` when the two
/// coincide (marker seen exactly face-on).
fn mirror_candidate<T: Real>(pose: &RigidTransform<T>) -> Option<RigidTransform<T>> {
    let v = pose.translation.try_normalize(T::epsilon())?;
    let n = pose.z_axis();
    let mirrored = v * (T::two() * n.dot(&v)) - n;
    let axis = n.cross(&mirrored);
    let sin = axis.norm();
    if sin < T::lit(1e-9) {
        return None;
    }
    let q = UnitQuaternion::from_axis_angle(axis, sin.atan2(n.dot(&mirrored)));
    Some(RigidTransform::new(q * pose.rotation, pose.translation))
}

#[derive(Debug, Clone, Copy)]
struct Refined<T> {
    pose: RigidTransform<T>,
    cost: T,
}

fn pick<T: Real>(a: Refined<T>, b: Refined<T>) -> Refined<T> {
    let tol = T::lit(1e-12) * (T::one() + a.cost.max(b.cost));
    if (a.cost - b.cost).abs() <= tol {
        // equal error: prefer the camera-facing normal, then the first
        match (faces_camera(&a.pose), faces_camera(&b.pose)) {
            (false, true) => b,
            _ => a,
        }
    } else if b.cost < a.cost {
        b
    } else {
        a
    }
}

/// Marker +z points along the viewing ray (identity pose at positive depth
/// is the face-on view).
fn faces_camera<T: Real>(pose: &RigidTransform<T>) -> bool {
    pose.z_axis().dot(&pose.translation) > T::zero()
}

struct Reprojection<T> {
    object: [Vector3<T>; 4],
    observed: [[T; 2]; 4],
    cam: CameraIntrinsics<T>,
}

impl<T: Real> Reprojection<T> {
    /// Sum of squared pixel residuals; `None` if a corner is not in front.
    fn cost(&self, pose: &RigidTransform<T>) -> Option<T> {
        let mut c = T::zero();
        for (p, o) in self.object.iter().zip(&self.observed) {
            let q = self.cam.project(pose.apply(*p))?;
            c += (q[0] - o[0]).powi(2) + (q[1] - o[1]).powi(2);
        }
        c.is_finite().then_some(c)
    }

    fn normal_equations(&self, pose: &RigidTransform<T>) -> ([[T; 6]; 6], [T; 6]) {
        let mut jtj = [[T::zero(); 6]; 6];
        let mut jtr = [T::zero(); 6];
        let cam = &self.cam;
        for (p, o) in self.object.iter().zip(&self.observed) {
            let rp = pose.rotation.rotate(*p);
            let pc = rp + pose.translation;
            let iz = pc.z.recip();
            let res = [
                cam.fx * pc.x * iz + cam.cx - o[0],
                cam.fy * pc.y * iz + cam.cy - o[1],
            ];
            // d(u,v)/d(pc)
            let du = Vector3::new(cam.fx * iz, T::zero(), -cam.fx * pc.x * iz * iz);
            let dv = Vector3::new(T::zero(), cam.fy * iz, -cam.fy * pc.y * iz * iz);
            // left perturbation R ← exp(ω)R moves pc by ω × rp
            for (d, r) in [(du, res[0]), (dv, res[1])] {
                let row = {
                    let w = rp.cross(&d);
                    [w.x, w.y, w.z, d.x, d.y, d.z]
                };
                for i in 0..6 {
                    jtr[i] += row[i] * r;
                    for j in 0..6 {
                        jtj[i][j] += row[i] * row[j];
                    }
                }
            }
        }
        (jtj, jtr)
    }

    fn refine(&self, start: RigidTransform<T>) -> Result<Refined<T>> {
        let mut pose = start;
        let mut cost = self
            .cost(&pose)
            .ok_or(Error::Diverged { residual: f64::INFINITY })?;
        let tol = T::lit(STEP_TOLERANCE);
        for _ in 0..MAX_ITERATIONS {
            let (jtj, jtr) = self.normal_equations(&pose);
            let Some(step) = solve(jtj, jtr.map(|v| -v)) else {
                break;
            };
            let step_norm = step.iter().map(|v| *v * *v).sum::<T>().sqrt();
            let mut scale = T::one();
            let mut accepted = None;
            for _ in 0..8 {
                let w = Vector3::new(step[0], step[1], step[2]) * scale;
                let dt = Vector3::new(step[3], step[4], step[5]) * scale;
                let cand = RigidTransform::new(
                    UnitQuaternion::from_scaled_axis(w) * pose.rotation,
                    pose.translation + dt,
                );
                if let Some(c) = self.cost(&cand) {
                    if c <= cost {
                        accepted = Some((cand, c));
                        break;
                    }
                }
                scale *= T::half();
            }
            let Some((p, c)) = accepted else { break };
            pose = p;
            cost = c;
            if step_norm * scale < tol {
                break;
            }
        }
        if !cost.is_finite() || pose.translation.z <= T::zero() {
            return Err(Error::Diverged {
                residual: (cost / T::lit(8.0)).sqrt().as_f64(),
            });
        }
        Ok(Refined { pose, cost })
    }
}

/// RMS corner reprojection error in pixels.
pub fn reprojection_rms<T: Real>(
    pose: &RigidTransform<T>,
    obs: &MarkerObservation<T>,
    spec: &MarkerSpec<T>,
    cam: &CameraIntrinsics<T>,
) -> Option<T> {
    let problem = Reprojection {
        object: spec.corners(),
        observed: obs.corners,
        cam: *cam,
    };
    problem.cost(pose).map(|c| (c / T::lit(8.0)).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cam() -> CameraIntrinsics<f64> {
        CameraIntrinsics::new(800.0, 800.0, 640.0, 640.0, 1280, 1280).unwrap()
    }

    #[test]
    fn face_on_marker_on_axis() {
        let obs = MarkerObservation {
            frame: 0,
            id: 1,
            corners: [[600.0, 680.0], [680.0, 680.0], [680.0, 600.0], [600.0, 600.0]],
        };
        let spec = MarkerSpec::new(1, 50.0).unwrap();
        let pose = estimate_marker_pose(&obs, &spec, &cam()).unwrap();
        assert!((pose.translation - Vector3::new(0.0, 0.0, 500.0)).norm() < 1e-6);
        assert!(pose.rotation.angle_to(&UnitQuaternion::identity()) < 1e-9);
    }

    #[test]
    fn collinear_corners_fail() {
        let obs = MarkerObservation {
            frame: 0,
            id: 1,
            corners: [[600.0, 600.0], [620.0, 620.0], [640.0, 640.0], [660.0, 660.0]],
        };
        let spec = MarkerSpec::new(1, 50.0).unwrap();
        assert!(matches!(
            estimate_marker_pose(&obs, &spec, &cam()),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn outside_image_fails() {
        let obs = MarkerObservation {
            frame: 0,
            id: 1,
            corners: [[-5.0, 680.0], [680.0, 680.0], [680.0, 600.0], [600.0, 600.0]],
        };
        let spec = MarkerSpec::new(1, 50.0).unwrap();
        assert!(matches!(
            estimate_marker_pose(&obs, &spec, &cam()),
            Err(Error::InvalidObservation(_))
        ));
    }

    #[test]
    fn bow_tie_fails() {
        let obs = MarkerObservation {
            frame: 0,
            id: 1,
            corners: [[600.0, 680.0], [680.0, 600.0], [680.0, 680.0], [600.0, 600.0]],
        };
        let spec = MarkerSpec::new(1, 50.0).unwrap();
        assert!(estimate_marker_pose(&obs, &spec, &cam()).is_err());
    }
}
