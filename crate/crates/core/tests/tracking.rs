mod common;

use common::{camera, observe, project_square, random_pose};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use spinenav::geometry::{RigidTransform, UnitQuaternion, Vector3};
use spinenav::tracking::stream::{read_observations, replay, OutputRecord, TrackingSetup};
use spinenav::tracking::{
    estimate_marker_pose, tracker_step, MarkerObservation, MarkerSpec, Registry, TrackEvent, TrackerConfig,
};

const SIDE: f64 = 50.0;

fn spec() -> MarkerSpec<f64> {
    MarkerSpec::new(1, SIDE).unwrap()
}

#[test]
fn face_on_marker_projects_to_square() {
    let c = project_square([1.0, 0.0, 0.0, 0.0], [0.0, 0.0, 500.0], SIDE, &camera());
    assert_eq!(c, [[600.0, 680.0], [680.0, 680.0], [680.0, 600.0], [600.0, 600.0]]);
    let obs = MarkerObservation { frame: 0, id: 1, corners: c };
    let p = estimate_marker_pose(&obs, &spec(), &camera()).unwrap();
    assert!((p.translation - Vector3::new(0.0, 0.0, 500.0)).norm() < 1e-6);
    assert!(p.rotation.angle_to(&UnitQuaternion::identity()) < 1e-9);
}

#[test]
fn noiseless_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..200 {
        let truth = random_pose(&mut rng, (300.0, 1500.0));
        let est = estimate_marker_pose(&observe(&truth, SIDE, 1, 0), &spec(), &camera()).unwrap();
        assert!(est.rotation.angle_to(&truth.rotation) < 1e-6);
        assert!((est.translation - truth.translation).norm() < 1e-6);
    }
}

#[test]
fn f32_estimate_is_close() {
    let truth = RigidTransform::new(
        UnitQuaternion::from_axis_angle(Vector3::new(1.0, 0.5, 0.0), 0.4),
        Vector3::new(20.0, -10.0, 450.0),
    );
    let obs = observe(&truth, SIDE, 1, 0);
    let obs32 = MarkerObservation {
        frame: 0,
        id: 1,
        corners: obs.corners.map(|c| c.map(|v| v as f32)),
    };
    let cam32 = spinenav::tracking::CameraIntrinsics::new(800.0f32, 800.0, 640.0, 640.0, 1280, 1280).unwrap();
    let est = estimate_marker_pose(&obs32, &MarkerSpec::new(1, 50.0f32).unwrap(), &cam32).unwrap();
    assert!((est.translation.cast::<f64>() - truth.translation).norm() < 0.05);
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

#[test]
fn noisy_corners_stay_accurate() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let cam = camera();
    let (mut terr, mut rerr) = (Vec::new(), Vec::new());
    for _ in 0..1000 {
        let mut truth = random_pose(&mut rng, (499.0, 501.0));
        truth.translation.z = 500.0;
        let mut obs = observe(&truth, SIDE, 1, 0);
        for c in obs.corners.iter_mut().flatten() {
            let n: f64 = rng.sample(StandardNormal);
            *c += 0.5 * n;
        }
        let est = estimate_marker_pose(&obs, &spec(), &cam).unwrap();
        terr.push((est.translation - truth.translation).norm());
        rerr.push(est.rotation.angle_to(&truth.rotation).to_degrees());
    }
    let (mt, mr) = (median(terr), median(rerr));
    eprintln!("median translation {mt:.3} mm, rotation {mr:.3} deg");
    assert!(mt < 5.0 && mr < 2.0);
}

#[test]
fn collinear_corners_rejected() {
    let obs = MarkerObservation {
        frame: 0,
        id: 1,
        corners: [[100.0, 100.0], [200.0, 100.0], [300.0, 100.0], [400.0, 100.0]],
    };
    assert!(estimate_marker_pose(&obs, &spec(), &camera()).is_err());
}

fn step(reg: &Registry<f64>, cfg: &TrackerConfig<f64>, obs: &[MarkerObservation<f64>]) -> (Registry<f64>, Vec<TrackEvent>) {
    tracker_step(reg, cfg, obs, &camera())
}

#[test]
fn deactivates_after_t_miss_frames() {
    let cfg = TrackerConfig::default();
    let pose = RigidTransform::from_translation(Vector3::new(0.0, 0.0, 500.0));
    let mut reg = Registry::new(&[spec()]).unwrap();
    reg = step(&reg, &cfg, &[observe(&pose, SIDE, 1, 0)]).0;
    for frame in 1..=5 {
        let (next, ev) = step(&reg, &cfg, &[]);
        reg = next;
        let o = reg.get(1).unwrap();
        assert_eq!(o.miss_count, frame);
        assert_eq!(o.active, frame < 5);
        assert_eq!(ev.contains(&TrackEvent::Deactivated { id: 1 }), frame == 5);
    }
    let (reg, ev) = step(&reg, &cfg, &[observe(&pose, SIDE, 1, 6)]);
    assert_eq!(ev, vec![TrackEvent::Reactivated { id: 1 }]);
    assert!(reg.get(1).unwrap().active);
}

#[test]
fn no_auto_disable_freezes_pose() {
    let cfg = TrackerConfig { auto_disable: false, ..TrackerConfig::default() };
    let pose = RigidTransform::from_translation(Vector3::new(3.0, -2.0, 480.0));
    let mut reg = Registry::new(&[spec()]).unwrap();
    reg = step(&reg, &cfg, &[observe(&pose, SIDE, 1, 0)]).0;
    let held = reg.get(1).unwrap().pose;
    for _ in 0..100 {
        reg = step(&reg, &cfg, &[]).0;
    }
    let o = reg.get(1).unwrap();
    assert!(o.active);
    assert_eq!(o.miss_count, 100);
    assert_eq!(o.pose, held);
}

#[test]
fn repeated_observation_converges_monotonically() {
    let cfg = TrackerConfig { beta: 0.3, ..TrackerConfig::default() };
    let start = RigidTransform::new(
        UnitQuaternion::from_axis_angle(Vector3::x_axis(), 0.5),
        Vector3::new(-40.0, 10.0, 600.0),
    );
    let goal = RigidTransform::new(
        UnitQuaternion::from_axis_angle(Vector3::y_axis(), -0.3),
        Vector3::new(25.0, -5.0, 450.0),
    );
    let target = estimate_marker_pose(&observe(&goal, SIDE, 1, 0), &spec(), &camera()).unwrap();
    let mut reg = Registry::new(&[spec()]).unwrap();
    reg = step(&reg, &cfg, &[observe(&start, SIDE, 1, 0)]).0;
    let (mut dt, mut dr) = (f64::INFINITY, f64::INFINITY);
    for f in 1..80 {
        reg = step(&reg, &cfg, &[observe(&goal, SIDE, 1, f)]).0;
        let p = reg.get(1).unwrap().pose.unwrap();
        let (t, r) = ((p.translation - target.translation).norm(), p.rotation.angle_to(&target.rotation));
        assert!(t < dt && (r < dr || r < 1e-12), "frame {f}: {t} {r}");
        dt = t;
        dr = r;
    }
    assert!(dt < 1e-4);
}

#[test]
fn unknown_and_duplicate_ids_are_reported() {
    let cfg = TrackerConfig::default();
    let pose = RigidTransform::from_translation(Vector3::new(0.0, 0.0, 500.0));
    let reg = Registry::new(&[spec()]).unwrap();
    let o = observe(&pose, SIDE, 1, 0);
    let stray = observe(&pose, SIDE, 9, 0);
    let (_, ev) = step(&reg, &cfg, &[o, stray, o]);
    assert!(ev.contains(&TrackEvent::UnknownMarker { id: 9 }));
    assert!(ev.contains(&TrackEvent::DuplicateObservation { id: 1 }));
    assert!(ev.contains(&TrackEvent::Acquired { id: 1 }));
}

#[test]
fn failed_estimate_counts_as_miss() {
    let cfg = TrackerConfig::default();
    let pose = RigidTransform::from_translation(Vector3::new(0.0, 0.0, 500.0));
    let mut reg = Registry::new(&[spec()]).unwrap();
    reg = step(&reg, &cfg, &[observe(&pose, SIDE, 1, 0)]).0;
    let bad = MarkerObservation { frame: 1, id: 1, corners: [[10.0, 10.0]; 4] };
    let (reg, ev) = step(&reg, &cfg, &[bad]);
    assert!(matches!(ev[0], TrackEvent::EstimationFailed { id: 1, .. }));
    assert_eq!(reg.get(1).unwrap().miss_count, 1);
}

#[test]
fn stream_replay_matches_ground_truth() {
    let setup = TrackingSetup { camera: camera(), markers: vec![spec(), MarkerSpec::new(2, 40.0).unwrap()] };
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let truth: Vec<RigidTransform<f64>> = (0..6).map(|_| random_pose(&mut rng, (350.0, 900.0))).collect();
    let mut text = String::new();
    for f in 0..12u64 {
        text += &serde_json::to_string(&observe(&truth[0], SIDE, 1, f)).unwrap();
        text.push('\n');
        if f < 4 {
            text += &serde_json::to_string(&observe(&truth[1], 40.0, 2, f)).unwrap();
            text.push('\n');
        }
    }
    let obs = read_observations::<f64, _>(text.as_bytes()).unwrap();
    let out = replay(&setup, &TrackerConfig::default(), &obs).unwrap();
    let mut deactivated_at = None;
    for rec in &out {
        match rec {
            OutputRecord::Pose(p) => {
                let t = &truth[(p.id - 1) as usize];
                assert!((p.t - t.translation).norm() < 1e-6);
                assert!(p.q.angle_to(&t.rotation) < 1e-6);
            }
            OutputRecord::Event(e) if e.event == (TrackEvent::Deactivated { id: 2 }) => deactivated_at = Some(e.frame),
            _ => {}
        }
    }
    assert_eq!(deactivated_at, Some(8));
}

#[test]
fn replay_counts_gaps_as_empty_frames() {
    let setup = TrackingSetup { camera: camera(), markers: vec![spec()] };
    let pose = RigidTransform::from_translation(Vector3::new(0.0, 0.0, 500.0));
    let obs = vec![observe(&pose, SIDE, 1, 0), observe(&pose, SIDE, 1, 6)];
    let out = replay(&setup, &TrackerConfig::default(), &obs).unwrap();
    let events: Vec<(u64, TrackEvent)> = out
        .iter()
        .filter_map(|r| match r {
            OutputRecord::Event(e) => Some((e.frame, e.event.clone())),
            _ => None,
        })
        .collect();
    assert_eq!(
        events,
        vec![
            (0, TrackEvent::Acquired { id: 1 }),
            (5, TrackEvent::Deactivated { id: 1 }),
            (6, TrackEvent::Reactivated { id: 1 }),
        ]
    );
    assert!(replay(&setup, &TrackerConfig::default(), &[]).unwrap().is_empty());
}

#[test]
fn replay_is_deterministic() {
    let setup = TrackingSetup { camera: camera(), markers: vec![spec()] };
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut obs = Vec::new();
    for f in 0..30 {
        if rng.gen_bool(0.7) {
            obs.push(observe(&random_pose(&mut rng, (400.0, 600.0)), SIDE, 1, f));
        }
    }
    let a = replay(&setup, &TrackerConfig::default(), &obs).unwrap();
    let b = replay(&setup, &TrackerConfig::default(), &obs).unwrap();
    assert_eq!(a, b);
}
