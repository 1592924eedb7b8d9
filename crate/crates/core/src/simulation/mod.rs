//! Synthetic two-camera scenes of small spheres, and the noise sweep that
//! scores every (cost, matcher) combination on them.

pub mod ambiguity;
pub mod rng;
pub mod sweep;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::evaluation::GroundTruthCorrespondence;
use crate::geometry::{
    is_in_front, project_pair, reduce_general_rig, DepthRegParams, DistanceSpec, GeometryError,
    ImagePoint, IntrinsicMatrix, StereoRig, WorldPoint,
};
use crate::hierarchy::{HierarchyError, LabeledCloud};
use rng::{tags, StreamRng};

pub use sweep::{run_sweep, SweepRow, SweepTable};

/// Consecutive rejected sphere centers before giving up.
pub const REJECTION_BUDGET: usize = 100_000;

const RIG_ATTEMPTS: usize = 1_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimulationError {
    #[error("could not place sphere {sphere} after {REJECTION_BUDGET} rejected centers")]
    RejectionBudgetExceeded { sphere: usize },
    #[error("no rig keeps every point in front of both cameras after {RIG_ATTEMPTS} draws")]
    RigBudgetExceeded,
    #[error("invalid sweep config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Hierarchy(#[from] HierarchyError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DistanceName {
    Epi,
    Ray,
    Reg,
}

impl DistanceName {
    pub fn as_str(self) -> &'static str {
        match self {
            DistanceName::Epi => "epi",
            DistanceName::Ray => "ray",
            DistanceName::Reg => "reg",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Matcher {
    Naive,
    Ot,
    Hot,
}

impl Matcher {
    pub fn as_str(self) -> &'static str {
        match self {
            Matcher::Naive => "naive",
            Matcher::Ot => "ot",
            Matcher::Hot => "hot",
        }
    }
}

/// How a random camera rotation of at most `max_rotation_deg` is drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RotationLaw {
    /// `Rx·Ry·Rz`, each angle uniform in `±max`.
    EulerXyz,
    /// Uniform random axis, angle uniform in `[0, max]`.
    AxisAngle,
    /// About the vertical axis only, angle uniform in `±max`.
    Yaw,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegConfig {
    pub beta: f64,
    pub gamma_low: f64,
    pub gamma_high: f64,
}

/// Everything that determines a sweep. Serialized as TOML; every field has
/// a default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub n_scenes: usize,
    pub n_objects: usize,
    pub points_per_object: usize,
    pub center_min: [f64; 3],
    pub center_max: [f64; 3],
    pub radius_range: [f64; 2],
    pub sigmas: Vec<f64>,
    pub max_rotation_deg: f64,
    pub rotation_law: RotationLaw,
    pub left_center: [f64; 3],
    pub right_center: [f64; 3],
    pub base_seed: u64,
    pub distances: Vec<DistanceName>,
    pub matchers: Vec<Matcher>,
    pub reg: RegConfig,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            n_scenes: 100,
            n_objects: 5,
            points_per_object: 10,
            center_min: [-0.5, -0.5, 2.5],
            center_max: [0.5, 0.5, 3.5],
            radius_range: [0.05, 0.1],
            sigmas: vec![0.0, 0.001, 0.005, 0.01, 0.05],
            max_rotation_deg: 15.0,
            rotation_law: RotationLaw::EulerXyz,
            left_center: [0.0, 0.0, 0.0],
            right_center: [1.0, 0.0, 0.0],
            base_seed: 1,
            distances: vec![DistanceName::Epi, DistanceName::Ray, DistanceName::Reg],
            matchers: vec![Matcher::Naive, Matcher::Ot, Matcher::Hot],
            reg: RegConfig {
                beta: 10.0,
                gamma_low: 2.5,
                gamma_high: 3.5,
            },
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<(), SimulationError> {
        let bad = |m: String| Err(SimulationError::InvalidConfig(m));
        if self.n_scenes == 0 || self.n_objects == 0 || self.points_per_object == 0 {
            return bad("n_scenes, n_objects and points_per_object must be >= 1".into());
        }
        if (0..3).any(|k| self.center_min[k] > self.center_max[k]) {
            return bad("center_min must not exceed center_max".into());
        }
        let [r0, r1] = self.radius_range;
        if !(r0 > 0.0 && r0 <= r1) {
            return bad(format!("radius_range [{r0}, {r1}] must satisfy 0 < lo <= hi"));
        }
        if self.sigmas.is_empty() || self.sigmas.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
            return bad("sigmas must be a nonempty list of finite values >= 0".into());
        }
        if !(self.max_rotation_deg.is_finite() && self.max_rotation_deg >= 0.0) {
            return bad("max_rotation_deg must be >= 0".into());
        }
        if self.distances.is_empty() || self.matchers.is_empty() {
            return bad("distances and matchers must be nonempty".into());
        }
        DepthRegParams::new(self.reg.beta, self.reg.gamma_low, self.reg.gamma_high)?;
        Ok(())
    }

    pub fn distance_spec(&self, name: DistanceName) -> Result<DistanceSpec, SimulationError> {
        Ok(match name {
            DistanceName::Epi => DistanceSpec::Epipolar,
            DistanceName::Ray => DistanceSpec::Ray,
            DistanceName::Reg => DistanceSpec::RegularizedRay(DepthRegParams::new(
                self.reg.beta,
                self.reg.gamma_low,
                self.reg.gamma_high,
            )?),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphereSpec {
    pub center: Vector3<f64>,
    pub radius: f64,
    pub points_per_sphere: usize,
}

impl SphereSpec {
    pub fn overlaps(&self, other: &SphereSpec) -> bool {
        (self.center - other.center).norm() <= self.radius + other.radius
    }
}

/// A randomly posed rig together with the per-camera rotations it came from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigSample {
    pub rig: StereoRig,
    pub rotation_left: Matrix3<f64>,
    pub rotation_right: Matrix3<f64>,
}

impl RigSample {
    /// Maps a world point into the rig's canonical (left camera) frame.
    pub fn to_rig_frame(&self, p: &Vector3<f64>, left_center: &Vector3<f64>) -> Vector3<f64> {
        self.rotation_left * (p - left_center)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub spheres: Vec<SphereSpec>,
    /// Sampled points in world coordinates, grouped by sphere.
    pub world_points: Vec<Vector3<f64>>,
    /// The same points in the rig frame; triangulations live here.
    pub rig_points: Vec<WorldPoint>,
    pub rig: RigSample,
    pub left: LabeledCloud,
    pub right: LabeledCloud,
    pub gt: GroundTruthCorrespondence,
    pub noise_sigma: f64,
    pub base_seed: u64,
    pub scene_index: usize,
}

/// `Rx(a) · Ry(b) · Rz(c)`: intrinsic X-Y-Z Euler angles in radians.
pub fn euler_xyz(a: f64, b: f64, c: f64) -> Matrix3<f64> {
    let (sa, ca) = a.sin_cos();
    let (sb, cb) = b.sin_cos();
    let (sc, cc) = c.sin_cos();
    let rx = Matrix3::new(1.0, 0.0, 0.0, 0.0, ca, -sa, 0.0, sa, ca);
    let ry = Matrix3::new(cb, 0.0, sb, 0.0, 1.0, 0.0, -sb, 0.0, cb);
    let rz = Matrix3::new(cc, -sc, 0.0, sc, cc, 0.0, 0.0, 0.0, 1.0);
    rx * ry * rz
}

/// Identity intrinsics, fixed camera centers, and an independent random
/// rotation per camera (each Euler angle uniform in `±max_rotation_deg`).
pub fn make_random_rig(
    cfg: &SweepConfig,
    rng: &mut StreamRng,
) -> Result<RigSample, SimulationError> {
    let max = cfg.max_rotation_deg.to_radians();
    let law = cfg.rotation_law;
    let mut draw = || match law {
        RotationLaw::EulerXyz => {
            let a = rng.uniform(-max, max);
            let b = rng.uniform(-max, max);
            let c = rng.uniform(-max, max);
            euler_xyz(a, b, c)
        }
        RotationLaw::AxisAngle => {
            let axis = loop {
                let d = Vector3::new(rng.standard_normal(), rng.standard_normal(), rng.standard_normal());
                if d.norm() > 0.0 {
                    break nalgebra::Unit::new_normalize(d);
                }
            };
            let angle = rng.uniform(0.0, max);
            *nalgebra::Rotation3::from_axis_angle(&axis, angle).matrix()
        }
        RotationLaw::Yaw => euler_xyz(0.0, rng.uniform(-max, max), 0.0),
    };
    let rotation_left = draw();
    let rotation_right = draw();
    let cl = Vector3::from(cfg.left_center);
    let cr = Vector3::from(cfg.right_center);
    let rig = reduce_general_rig(
        IntrinsicMatrix::identity(),
        IntrinsicMatrix::identity(),
        &rotation_left,
        &rotation_right,
        &(-(rotation_left * cl)),
        &(-(rotation_right * cr)),
    )?;
    Ok(RigSample {
        rig,
        rotation_left,
        rotation_right,
    })
}

fn sample_spheres(cfg: &SweepConfig, rng: &mut StreamRng) -> Result<Vec<SphereSpec>, SimulationError> {
    let mut spheres: Vec<SphereSpec> = Vec::with_capacity(cfg.n_objects);
    for k in 0..cfg.n_objects {
        let radius = rng.uniform(cfg.radius_range[0], cfg.radius_range[1]);
        let mut placed = None;
        for _ in 0..REJECTION_BUDGET {
            let center = Vector3::new(
                rng.uniform(cfg.center_min[0], cfg.center_max[0]),
                rng.uniform(cfg.center_min[1], cfg.center_max[1]),
                rng.uniform(cfg.center_min[2], cfg.center_max[2]),
            );
            let s = SphereSpec {
                center,
                radius,
                points_per_sphere: cfg.points_per_object,
            };
            if spheres.iter().all(|o| !s.overlaps(o)) {
                placed = Some(s);
                break;
            }
        }
        spheres.push(placed.ok_or(SimulationError::RejectionBudgetExceeded { sphere: k })?);
    }
    Ok(spheres)
}

fn sample_surface(s: &SphereSpec, rng: &mut StreamRng) -> Vec<Vector3<f64>> {
    (0..s.points_per_sphere)
        .map(|_| loop {
            let d = Vector3::new(
                rng.standard_normal(),
                rng.standard_normal(),
                rng.standard_normal(),
            );
            let n = d.norm();
            if n > 0.0 {
                break s.center + d * (s.radius / n);
            }
        })
        .collect()
}

/// Generates scene `scene_index` at noise level `sigma`.
///
/// Sphere layout, rig, and the unit noise draws depend only on
/// `(base_seed, scene_index)`, so the same scene is reused across noise
/// levels with the noise scaled by `sigma`.
pub fn sample_scene(
    cfg: &SweepConfig,
    scene_index: usize,
    sigma: f64,
) -> Result<Scene, SimulationError> {
    let idx = scene_index as u64;
    let mut geo = StreamRng::new(cfg.base_seed, idx, tags::SPHERES);
    let spheres = sample_spheres(cfg, &mut geo)?;
    let world_points: Vec<Vector3<f64>> = spheres
        .iter()
        .flat_map(|s| sample_surface(s, &mut geo))
        .collect();

    let left_center = Vector3::from(cfg.left_center);
    let mut rig_rng = StreamRng::new(cfg.base_seed, idx, tags::RIG);
    let (rig, rig_points) = (0..RIG_ATTEMPTS)
        .find_map(|_| {
            let sample = match make_random_rig(cfg, &mut rig_rng) {
                Ok(s) => s,
                Err(e) => return Some(Err(e)),
            };
            let pts: Vec<WorldPoint> = world_points
                .iter()
                .map(|p| WorldPoint(sample.to_rig_frame(p, &left_center)))
                .collect();
            pts.iter()
                .all(|w| is_in_front(&sample.rig, w))
                .then_some(Ok((sample, pts)))
        })
        .ok_or(SimulationError::RigBudgetExceeded)??;

    let mut noise = StreamRng::new(cfg.base_seed, idx, tags::NOISE);
    let per = cfg.points_per_object;
    let mut left_groups = vec![Vec::with_capacity(per); spheres.len()];
    let mut right_groups = vec![Vec::with_capacity(per); spheres.len()];
    for (k, w) in rig_points.iter().enumerate() {
        let (x, y) = project_pair(&rig.rig, w)?;
        let mut jitter = |p: ImagePoint| {
            let du = noise.standard_normal();
            let dv = noise.standard_normal();
            if sigma > 0.0 {
                ImagePoint::new(p.u + sigma * du, p.v + sigma * dv)
            } else {
                p
            }
        };
        let x = jitter(x);
        let y = jitter(y);
        left_groups[k / per].push(x);
        right_groups[k / per].push(y);
    }

    Ok(Scene {
        gt: GroundTruthCorrespondence::identity(world_points.len(), spheres.len()),
        left: LabeledCloud::from_groups(left_groups)?,
        right: LabeledCloud::from_groups(right_groups)?,
        spheres,
        world_points,
        rig_points,
        rig,
        noise_sigma: sigma,
        base_seed: cfg.base_seed,
        scene_index,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{fundamental_matrix, ray_distance};

    #[test]
    fn zero_rotation_rig() {
        let cfg = SweepConfig {
            max_rotation_deg: 0.0,
            ..SweepConfig::default()
        };
        let mut r = StreamRng::new(1, 0, tags::RIG);
        let s = make_random_rig(&cfg, &mut r).unwrap();
        assert_eq!(*s.rig.rotation(), Matrix3::identity());
        assert_eq!(*s.rig.translation(), Vector3::new(-1.0, 0.0, 0.0));
    }

    #[test]
    fn rig_baseline_is_center_distance() {
        let cfg = SweepConfig::default();
        let mut r = StreamRng::new(5, 0, tags::RIG);
        for _ in 0..100 {
            let s = make_random_rig(&cfg, &mut r).unwrap();
            assert!((s.rig.baseline() - 1.0).abs() < 1e-12);
            // the left camera maps its own center to the origin
            let c = s.to_rig_frame(&Vector3::zeros(), &Vector3::zeros());
            assert_eq!(c, Vector3::zeros());
        }
    }

    #[test]
    fn scenes_are_deterministic() {
        let cfg = SweepConfig::default();
        let a = sample_scene(&cfg, 3, 0.01).unwrap();
        let b = sample_scene(&cfg, 3, 0.01).unwrap();
        assert_eq!(a, b);
        let c = sample_scene(&cfg, 4, 0.01).unwrap();
        assert_ne!(a.world_points, c.world_points);
    }

    #[test]
    fn spheres_respect_box_and_overlap() {
        let cfg = SweepConfig::default();
        for idx in 0..20 {
            let s = sample_scene(&cfg, idx, 0.0).unwrap();
            assert_eq!(s.spheres.len(), 5);
            for (k, a) in s.spheres.iter().enumerate() {
                for d in 0..3 {
                    assert!(a.center[d] >= cfg.center_min[d] && a.center[d] <= cfg.center_max[d]);
                }
                assert!(a.radius >= 0.05 && a.radius <= 0.1);
                for b in &s.spheres[k + 1..] {
                    assert!((a.center - b.center).norm() > a.radius + b.radius);
                }
            }
            for (p, sphere) in s.world_points.chunks(10).zip(&s.spheres) {
                for q in p {
                    assert!(((q - sphere.center).norm() - sphere.radius).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn noise_free_scene_is_exact() {
        let cfg = SweepConfig::default();
        let s = sample_scene(&cfg, 0, 0.0).unwrap();
        let f = fundamental_matrix(&s.rig.rig);
        let xs = s.left.flat_points();
        let ys = s.right.flat_points();
        for (x, y) in xs.iter().zip(&ys) {
            assert!(y.homogeneous().dot(&(f.entries * x.homogeneous())).abs() < 1e-9);
            assert!(ray_distance(&s.rig.rig, x, y) < 1e-9);
        }
    }

    #[test]
    fn rejection_budget() {
        let cfg = SweepConfig {
            n_objects: 3,
            center_min: [0.0; 3],
            center_max: [0.0, 0.0, 0.0],
            ..SweepConfig::default()
        };
        assert!(matches!(
            sample_scene(&cfg, 0, 0.0),
            Err(SimulationError::RejectionBudgetExceeded { sphere: 1 })
        ));
    }

    #[test]
    fn config_validation() {
        let mut cfg = SweepConfig::default();
        assert!(cfg.validate().is_ok());
        cfg.sigmas = vec![-1.0];
        assert!(cfg.validate().is_err());
        let cfg = SweepConfig {
            reg: RegConfig {
                beta: 1.0,
                gamma_low: 3.0,
                gamma_high: 2.0,
            },
            ..SweepConfig::default()
        };
        assert!(cfg.validate().is_err());
    }
}
