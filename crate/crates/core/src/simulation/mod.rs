//! Seeded needle-insertion trials scored against concentric detector rings.

mod scoring;

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use scoring::{
    classify_insertion, compare_report, summarize, summarize_counts, AccuracyReport, DetectorRings, Hit,
    ReportDiff, RingCounts,
};

use crate::error::{Error, Result};
use crate::geometry::{RigidTransform, Vector3};
use crate::optimizer::Execution;
use crate::overlay::{overlay_step, FiducialLayout, TrackingMode};
use crate::scalar::Real;
use crate::tracking::{
    project_corners, tracker_step, CameraIntrinsics, MarkerObservation, MarkerSpec, Registry, TrackerConfig,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Guidance {
    /// No overlay; the operator aims blind.
    Baseline,
    /// Overlay from the lowest-id layout marker only.
    SingleMarker,
    /// Overlay with dual/single arbitration over all layout markers.
    DualMarker,
}

/// Planar blind-aim σ whose Rayleigh ring-1 probability is 20 %.
pub fn calibrated_blind_sigma<T: Real>() -> T {
    T::lit(1.0 / (-2.0 * 0.8f64.ln()).sqrt())
}

fn default_blind_sigma<T: Real>() -> T {
    calibrated_blind_sigma()
}

/// Complete description of a trial batch. Lengths in mm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real", deny_unknown_fields)]
pub struct Scenario<T: Real> {
    pub layout: FiducialLayout<T>,
    pub markers: Vec<MarkerSpec<T>>,
    pub camera: CameraIntrinsics<T>,
    /// Model→camera transform for each frame; one frame per entry.
    pub scene_poses: Vec<RigidTransform<T>>,
    /// Target point in the model frame. The detector plane is the model
    /// xy-plane through it.
    pub target: Vector3<T>,
    pub pixel_noise_px: T,
    pub placement_noise_mm: T,
    pub hand_noise_mm: T,
    #[serde(default = "default_blind_sigma")]
    pub blind_sigma_mm: T,
    /// Magnitude of a per-trial planar aiming bias in a random direction.
    #[serde(default)]
    pub model_error_mm: T,
    /// Marker ids hidden in each frame; frames past the end hide nothing.
    #[serde(default)]
    pub occlusion: Vec<Vec<u32>>,
    #[serde(default)]
    pub tracker: TrackerConfig<T>,
    #[serde(default)]
    pub rings: DetectorRings<T>,
    pub trials: u64,
    pub seed: u64,
    pub guidance: Guidance,
}

impl<T: Real> Scenario<T> {
    /// Two 50 mm markers 60 mm apart, 300 mm in front of a 1080p camera
    /// (`f = 1050 px`), target 15 mm below their midpoint, ten static
    /// frames, 50 trials.
    pub fn reference(guidance: Guidance) -> Self {
        let lit = T::lit;
        let mut markers = BTreeMap::new();
        markers.insert(1, RigidTransform::from_translation(Vector3::new(lit(-30.0), T::zero(), T::zero())));
        markers.insert(2, RigidTransform::from_translation(Vector3::new(lit(30.0), T::zero(), T::zero())));
        let layout = FiducialLayout::new(markers, None).expect("reference layout");
        let camera = CameraIntrinsics::new(lit(1050.0), lit(1050.0), lit(960.0), lit(540.0), 1920, 1080)
            .expect("reference camera");
        let pose = RigidTransform::from_translation(Vector3::new(T::zero(), T::zero(), lit(300.0)));
        Self {
            layout,
            markers: vec![
                MarkerSpec::new(1, lit(50.0)).expect("spec"),
                MarkerSpec::new(2, lit(50.0)).expect("spec"),
            ],
            camera,
            scene_poses: vec![pose; 10],
            target: Vector3::new(T::zero(), T::zero(), lit(15.0)),
            pixel_noise_px: lit(0.5),
            placement_noise_mm: T::one(),
            hand_noise_mm: T::one(),
            blind_sigma_mm: calibrated_blind_sigma(),
            model_error_mm: T::zero(),
            occlusion: Vec::new(),
            tracker: TrackerConfig::default(),
            rings: DetectorRings::default(),
            trials: 50,
            seed: 2024,
            guidance,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidParams("trials must be at least 1".into()));
        }
        if self.scene_poses.is_empty() {
            return Err(Error::InvalidParams("scenario needs at least one frame".into()));
        }
        for (name, s) in [
            ("pixel_noise_px", self.pixel_noise_px),
            ("placement_noise_mm", self.placement_noise_mm),
            ("hand_noise_mm", self.hand_noise_mm),
            ("blind_sigma_mm", self.blind_sigma_mm),
            ("model_error_mm", self.model_error_mm),
        ] {
            if !(s >= T::zero() && s.is_finite()) {
                return Err(Error::InvalidParams(format!("{name} must be finite and non-negative")));
            }
        }
        if !self.target.is_finite() {
            return Err(Error::InvalidParams("target is not finite".into()));
        }
        self.camera.validate()?;
        self.tracker.validate()?;
        self.rings.validate()?;
        crate::tracking::validate_markers(&self.markers)?;
        for id in self.layout.ids() {
            if !self.markers.iter().any(|m| m.id == id) {
                return Err(Error::InvalidParams(format!("layout marker {id} has no spec")));
            }
        }
        Ok(())
    }

    /// Layout the overlay may use under this guidance.
    fn guidance_layout(&self) -> Result<FiducialLayout<T>> {
        match self.guidance {
            Guidance::SingleMarker => {
                let id = self.layout.ids()[0];
                let mut m = BTreeMap::new();
                m.insert(id, *self.layout.get(id).expect("layout id"));
                FiducialLayout::new(m, None)
            }
            _ => Ok(self.layout.clone()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct TrialResult<T> {
    pub trial: u64,
    /// Landing point minus target in the detector plane.
    pub offset: [T; 2],
    pub hit: Hit,
    /// Overlay mode at the last frame; `None` for baseline trials and for
    /// guided trials that lost every marker.
    pub mode: TrackingMode,
}

pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

fn normal<T: Real>(rng: &mut ChaCha8Rng, sigma: T) -> T {
    let z: f64 = rng.sample(StandardNormal);
    T::lit(z) * sigma
}

/// One trial. Every random draw happens in the same order whatever the
/// guidance, so modes sharing a seed share their noise.
fn run_trial<T: Real>(sc: &Scenario<T>, guide: &FiducialLayout<T>, trial: u64) -> TrialResult<T> {
    let mut rng = trial_rng(sc.seed, trial);
    let ids = sc.layout.ids();

    let placed: Vec<(u32, RigidTransform<T>)> = ids
        .iter()
        .map(|&id| {
            let nominal = sc.layout.get(id).expect("layout id");
            let d = Vector3::new(
                normal(&mut rng, sc.placement_noise_mm),
                normal(&mut rng, sc.placement_noise_mm),
                normal(&mut rng, sc.placement_noise_mm),
            );
            (id, RigidTransform::new(nominal.rotation, nominal.translation + d))
        })
        .collect();

    let tracked: Vec<MarkerSpec<T>> = sc
        .markers
        .iter()
        .filter(|m| guide.get(m.id).is_some())
        .copied()
        .collect();
    let mut registry = Registry::new(&tracked).expect("validated markers");

    for (frame, scene) in sc.scene_poses.iter().enumerate() {
        let hidden = sc.occlusion.get(frame).map(Vec::as_slice).unwrap_or(&[]);
        let mut obs = Vec::new();
        for (id, marker_to_model) in &placed {
            let mut noise = [[T::zero(); 2]; 4];
            for c in noise.iter_mut().flatten() {
                *c = normal(&mut rng, sc.pixel_noise_px);
            }
            if hidden.contains(id) || guide.get(*id).is_none() {
                continue;
            }
            let spec = sc.markers.iter().find(|m| m.id == *id).expect("spec");
            let Some(mut corners) = project_corners(&scene.compose(marker_to_model), spec, &sc.camera) else {
                continue;
            };
            for (c, n) in corners.iter_mut().zip(noise) {
                c[0] += n[0];
                c[1] += n[1];
            }
            if corners.iter().all(|c| sc.camera.contains(*c)) {
                obs.push(MarkerObservation {
                    frame: frame as u64,
                    id: *id,
                    corners,
                });
            }
        }
        if sc.guidance != Guidance::Baseline {
            registry = tracker_step(&registry, &sc.tracker, &obs, &sc.camera).0;
        }
    }

    let theta = rng.gen::<f64>() * std::f64::consts::TAU;
    let bias = [T::lit(theta.cos()) * sc.model_error_mm, T::lit(theta.sin()) * sc.model_error_mm];
    let hand = [normal(&mut rng, sc.hand_noise_mm), normal(&mut rng, sc.hand_noise_mm)];
    let blind = [normal(&mut rng, sc.blind_sigma_mm), normal(&mut rng, sc.blind_sigma_mm)];

    let (offset, mode) = match sc.guidance {
        Guidance::Baseline => (blind, TrackingMode::None),
        _ => {
            let overlay = overlay_step(&registry, guide);
            match overlay.transform {
                None => ([T::infinity(); 2], TrackingMode::None),
                Some(tf) => {
                    let last = sc.scene_poses.last().expect("frames");
                    let aim = last.inverse().apply(tf.apply(sc.target)) - sc.target;
                    (
                        [aim.x + bias[0] + hand[0], aim.y + bias[1] + hand[1]],
                        overlay.mode,
                    )
                }
            }
        }
    };
    let hit = if mode == TrackingMode::None && sc.guidance != Guidance::Baseline {
        Hit::Miss
    } else {
        classify_insertion(offset, &sc.rings)
    };
    TrialResult {
        trial,
        offset,
        hit,
        mode,
    }
}

pub fn run_trials<T: Real>(scenario: &Scenario<T>) -> Result<Vec<TrialResult<T>>> {
    run_trials_with(scenario, Execution::Parallel)
}

/// Results are ordered by trial index and identical for both executions.
pub fn run_trials_with<T: Real>(scenario: &Scenario<T>, exec: Execution) -> Result<Vec<TrialResult<T>>> {
    scenario.validate()?;
    let guide = scenario.guidance_layout()?;
    let one = |t| run_trial(scenario, &guide, t);
    Ok(match exec {
        Execution::Parallel => (0..scenario.trials).into_par_iter().map(one).collect(),
        Execution::Serial => (0..scenario.trials).map(one).collect(),
    })
}

pub fn summarize_trials<T: Real>(results: &[TrialResult<T>], rings: &DetectorRings<T>) -> Result<AccuracyReport<T>> {
    summarize(&results.iter().map(|r| r.hit).collect::<Vec<_>>(), rings)
}

/// Report file contents.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct SimulationReport<T> {
    pub ring_counts: [u64; 4],
    pub misses: u64,
    pub high_accuracy_rate_pct: T,
    pub average_deviation_mm: T,
    pub mode: Guidance,
    pub trials: u64,
    pub seed: u64,
}

pub fn simulate<T: Real>(scenario: &Scenario<T>) -> Result<SimulationReport<T>> {
    let results = run_trials(scenario)?;
    let r = summarize_trials(&results, &scenario.rings)?;
    Ok(SimulationReport {
        ring_counts: r.counts.ring_counts,
        misses: r.counts.misses,
        high_accuracy_rate_pct: r.high_accuracy_rate_pct,
        average_deviation_mm: r.average_deviation_mm,
        mode: scenario.guidance,
        trials: scenario.trials,
        seed: scenario.seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noiseless_guided_hits_center() {
        for g in [Guidance::SingleMarker, Guidance::DualMarker] {
            let mut sc = Scenario::<f64>::reference(g);
            sc.pixel_noise_px = 0.0;
            sc.placement_noise_mm = 0.0;
            sc.hand_noise_mm = 0.0;
            sc.trials = 5;
            for r in run_trials(&sc).unwrap() {
                assert_eq!(r.hit, Hit::Ring(1));
                assert!(r.offset[0].hypot(r.offset[1]) < 1e-9, "{:?}", r.offset);
            }
        }
    }

    #[test]
    fn serial_equals_parallel() {
        let sc = Scenario::<f64>::reference(Guidance::DualMarker);
        assert_eq!(
            run_trials_with(&sc, Execution::Serial).unwrap(),
            run_trials_with(&sc, Execution::Parallel).unwrap()
        );
    }

    #[test]
    fn all_hidden_is_miss() {
        let mut sc = Scenario::<f64>::reference(Guidance::DualMarker);
        sc.occlusion = vec![vec![1, 2]; 10];
        sc.trials = 3;
        for r in run_trials(&sc).unwrap() {
            assert_eq!((r.hit, r.mode), (Hit::Miss, TrackingMode::None));
        }
    }

    #[test]
    fn occluded_last_frames_fall_back_to_single() {
        let mut sc = Scenario::<f64>::reference(Guidance::DualMarker);
        sc.occlusion = vec![vec![]; 5];
        sc.occlusion.extend(vec![vec![2]; 5]);
        sc.trials = 2;
        for r in run_trials(&sc).unwrap() {
            assert_eq!(r.mode, TrackingMode::Single);
        }
    }

    #[test]
    fn calibrated_sigma_rate() {
        let s: f64 = calibrated_blind_sigma();
        assert!((1.0 - (-1.0 / (2.0 * s * s)).exp() - 0.2).abs() < 1e-12);
    }

    #[test]
    fn scenario_json_roundtrip() {
        let sc = Scenario::<f64>::reference(Guidance::SingleMarker);
        let text = serde_json::to_string(&sc).unwrap();
        assert_eq!(serde_json::from_str::<Scenario<f64>>(&text).unwrap(), sc);
    }
}
