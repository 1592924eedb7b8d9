//! Two-view pinhole geometry and the pairwise matching costs.
//!
//! The rig is always held in canonical form: the left camera sits at the
//! origin looking down `+z`, and a world point `w` projects as
//!
//! ```text
//! λ_l · x = K_l · w
//! λ_r · y = K_r · (R·w + t)
//! ```
//!
//! A rig given with a pose per camera is brought into this form by
//! [`reduce_general_rig`].

use nalgebra::{Matrix3, Vector2, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::transport::{CostMatrix, TransportError};

/// Relative threshold on `‖r_x × r_y‖ / (‖r_x‖‖r_y‖)` below which two rays
/// are treated as parallel.
pub const PARALLEL_EPS: f64 = 1e-12;

/// Relative threshold on `‖P₂Fx‖ / ‖Fx‖` below which the epipolar line is
/// treated as degenerate.
pub const DEGENERATE_EPS: f64 = 1e-12;

const ORTHO_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("point projects behind the {0:?} camera (depth {1})")]
    BehindCamera(Side, f64),
    #[error("degenerate rig: camera focal points coincide")]
    DegenerateRig,
    #[error("viewing rays are parallel")]
    ParallelRays,
    #[error("epipole lies at infinity in the {0:?} image")]
    DegenerateEpipole(Side),
    #[error("invalid intrinsic matrix: {0}")]
    InvalidIntrinsics(String),
    #[error("invalid rotation: {0}")]
    InvalidRotation(String),
    #[error("invalid depth regularization: {0}")]
    InvalidDepthReg(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    Left,
    Right,
}

/// Image observation `(u, v, 1)` in the projective plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImagePoint {
    pub u: f64,
    pub v: f64,
}

impl ImagePoint {
    pub const fn new(u: f64, v: f64) -> Self {
        Self { u, v }
    }

    pub fn homogeneous(&self) -> Vector3<f64> {
        Vector3::new(self.u, self.v, 1.0)
    }

    fn from_homogeneous(h: &Vector3<f64>) -> Self {
        Self::new(h.x / h.z, h.y / h.z)
    }
}

/// Point in the canonical (left camera) frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WorldPoint(pub Vector3<f64>);

impl WorldPoint {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Self(Vector3::new(x, y, z))
    }

    pub fn coords(&self) -> &Vector3<f64> {
        &self.0
    }
}

impl From<Vector3<f64>> for WorldPoint {
    fn from(v: Vector3<f64>) -> Self {
        Self(v)
    }
}

/// Upper-triangular camera matrix with a strictly positive diagonal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntrinsicMatrix {
    k: Matrix3<f64>,
    k_inv: Matrix3<f64>,
}

impl IntrinsicMatrix {
    pub fn new(k: Matrix3<f64>) -> Result<Self, GeometryError> {
        if k.iter().any(|v| !v.is_finite()) {
            return Err(GeometryError::InvalidIntrinsics("non-finite entry".into()));
        }
        if k[(1, 0)] != 0.0 || k[(2, 0)] != 0.0 || k[(2, 1)] != 0.0 {
            return Err(GeometryError::InvalidIntrinsics(
                "entries below the diagonal must be zero".into(),
            ));
        }
        if (0..3).any(|i| k[(i, i)] <= 0.0) {
            return Err(GeometryError::InvalidIntrinsics(
                "diagonal entries must be positive".into(),
            ));
        }
        let k_inv = k
            .try_inverse()
            .ok_or_else(|| GeometryError::InvalidIntrinsics("singular".into()))?;
        Ok(Self { k, k_inv })
    }

    pub fn identity() -> Self {
        Self {
            k: Matrix3::identity(),
            k_inv: Matrix3::identity(),
        }
    }

    /// Focal lengths, principal point and zero skew.
    pub fn from_params(fx: f64, fy: f64, cx: f64, cy: f64) -> Result<Self, GeometryError> {
        Self::new(Matrix3::new(fx, 0.0, cx, 0.0, fy, cy, 0.0, 0.0, 1.0))
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.k
    }

    pub fn inverse(&self) -> &Matrix3<f64> {
        &self.k_inv
    }
}

/// Checks `RᵀR = I` and `det R = 1`.
pub fn validate_rotation(r: &Matrix3<f64>) -> Result<(), GeometryError> {
    if r.iter().any(|v| !v.is_finite()) {
        return Err(GeometryError::InvalidRotation("non-finite entry".into()));
    }
    let err = (r.transpose() * r - Matrix3::identity()).abs().max();
    if err > ORTHO_TOL {
        return Err(GeometryError::InvalidRotation(format!(
            "not orthogonal (max |RᵀR - I| = {err:e})"
        )));
    }
    let det = r.determinant();
    if (det - 1.0).abs() > ORTHO_TOL {
        return Err(GeometryError::InvalidRotation(format!(
            "determinant {det} is not 1"
        )));
    }
    Ok(())
}

/// Pose of the right camera relative to the left one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelativePose {
    rotation: Matrix3<f64>,
    translation: Vector3<f64>,
}

impl RelativePose {
    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Result<Self, GeometryError> {
        validate_rotation(&rotation)?;
        if translation.iter().any(|v| !v.is_finite()) || translation.norm() == 0.0 {
            return Err(GeometryError::DegenerateRig);
        }
        Ok(Self {
            rotation,
            translation,
        })
    }

    pub fn rotation(&self) -> &Matrix3<f64> {
        &self.rotation
    }

    pub fn translation(&self) -> &Vector3<f64> {
        &self.translation
    }

    /// Focal point of the right camera in the canonical frame, `-Rᵀt`.
    pub fn right_center(&self) -> Vector3<f64> {
        -(self.rotation.transpose() * self.translation)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StereoRig {
    pub k_left: IntrinsicMatrix,
    pub k_right: IntrinsicMatrix,
    pub pose: RelativePose,
}

impl StereoRig {
    pub fn new(k_left: IntrinsicMatrix, k_right: IntrinsicMatrix, pose: RelativePose) -> Self {
        Self {
            k_left,
            k_right,
            pose,
        }
    }

    pub fn rotation(&self) -> &Matrix3<f64> {
        self.pose.rotation()
    }

    pub fn translation(&self) -> &Vector3<f64> {
        self.pose.translation()
    }

    /// Baseline length `‖t‖`.
    pub fn baseline(&self) -> f64 {
        self.pose.translation().norm()
    }
}

/// Line `{ origin + λ·direction }`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ray3 {
    pub direction: Vector3<f64>,
    pub origin: Vector3<f64>,
}

impl Ray3 {
    pub fn point_at(&self, lambda: f64) -> Vector3<f64> {
        self.origin + self.direction * lambda
    }

    /// Euclidean distance from `p` to the (full) line.
    pub fn distance_to(&self, p: &Vector3<f64>) -> f64 {
        (p - self.origin).cross(&self.direction).norm() / self.direction.norm()
    }
}

/// Endpoints of the shortest segment joining two non-parallel lines.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosestPointSolution {
    pub b_left: WorldPoint,
    pub b_right: WorldPoint,
    pub n_left: Vector3<f64>,
    pub n_right: Vector3<f64>,
    /// Third coordinate of the segment midpoint.
    pub midpoint_depth: f64,
}

impl ClosestPointSolution {
    pub fn midpoint(&self) -> Vector3<f64> {
        (self.b_left.0 + self.b_right.0) * 0.5
    }

    pub fn gap(&self) -> f64 {
        (self.b_left.0 - self.b_right.0).norm()
    }
}

/// Soft depth band `[gamma_low, gamma_high]` with quadratic penalty weight `beta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DepthRegParams {
    beta: f64,
    gamma_low: f64,
    gamma_high: f64,
}

impl DepthRegParams {
    pub fn new(beta: f64, gamma_low: f64, gamma_high: f64) -> Result<Self, GeometryError> {
        if !(beta.is_finite() && gamma_low.is_finite() && gamma_high.is_finite()) {
            return Err(GeometryError::InvalidDepthReg("non-finite parameter".into()));
        }
        if beta < 0.0 {
            return Err(GeometryError::InvalidDepthReg(format!(
                "beta must be >= 0, got {beta}"
            )));
        }
        if gamma_low >= gamma_high {
            return Err(GeometryError::InvalidDepthReg(format!(
                "gamma_low ({gamma_low}) must be < gamma_high ({gamma_high})"
            )));
        }
        Ok(Self {
            beta,
            gamma_low,
            gamma_high,
        })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn gamma_low(&self) -> f64 {
        self.gamma_low
    }

    pub fn gamma_high(&self) -> f64 {
        self.gamma_high
    }

    /// `β · dist(depth, [γ₁, γ₂])²`.
    pub fn penalty(&self, depth: f64) -> f64 {
        let excess = if depth < self.gamma_low {
            depth - self.gamma_low
        } else if depth > self.gamma_high {
            depth - self.gamma_high
        } else {
            0.0
        };
        self.beta * excess * excess
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FundamentalMatrix {
    pub entries: Matrix3<f64>,
    pub skew_t: Matrix3<f64>,
}

/// Which pairwise cost to use when building a cost matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DistanceSpec {
    Epipolar,
    Ray,
    RegularizedRay(DepthRegParams),
}

impl DistanceSpec {
    pub fn name(&self) -> &'static str {
        match self {
            DistanceSpec::Epipolar => "epi",
            DistanceSpec::Ray => "ray",
            DistanceSpec::RegularizedRay(_) => "reg",
        }
    }
}

/// Cross-product matrix `[t]×`, so that `skew(t)·v = t × v`.
pub fn skew(t: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -t.z, t.y, t.z, 0.0, -t.x, -t.y, t.x, 0.0)
}

/// Projects `w` into one camera; `depth` is the homogeneous scale `λ`.
pub fn project(
    rig: &StereoRig,
    w: &WorldPoint,
    side: Side,
) -> Result<(ImagePoint, f64), GeometryError> {
    let h = match side {
        Side::Left => rig.k_left.matrix() * w.0,
        Side::Right => rig.k_right.matrix() * (rig.rotation() * w.0 + rig.translation()),
    };
    let depth = h.z;
    if depth <= 0.0 {
        return Err(GeometryError::BehindCamera(side, depth));
    }
    Ok((ImagePoint::from_homogeneous(&h), depth))
}

/// Projects `w` into both cameras.
pub fn project_pair(
    rig: &StereoRig,
    w: &WorldPoint,
) -> Result<(ImagePoint, ImagePoint), GeometryError> {
    let (x, _) = project(rig, w, Side::Left)?;
    let (y, _) = project(rig, w, Side::Right)?;
    Ok((x, y))
}

/// Folds per-camera world-to-camera poses `(R_l, t_l)`, `(R_r, t_r)` into the
/// canonical rig with `R = R_r·R_lᵀ` and `t = t_r − R_r·t_l`.
///
/// The canonical frame is the left camera frame: a world point `p` maps to
/// `R_l·p + t_l`.
pub fn reduce_general_rig(
    k_l: IntrinsicMatrix,
    k_r: IntrinsicMatrix,
    r_l: &Matrix3<f64>,
    r_r: &Matrix3<f64>,
    t_l: &Vector3<f64>,
    t_r: &Vector3<f64>,
) -> Result<StereoRig, GeometryError> {
    validate_rotation(r_l)?;
    validate_rotation(r_r)?;
    let rotation = r_r * r_l.transpose();
    let translation = t_r - r_r * t_l;
    let pose = RelativePose::new(rotation, translation)?;
    Ok(StereoRig::new(k_l, k_r, pose))
}

/// Back-projected viewing rays of `x` (left) and `y` (right) in the
/// canonical frame.
pub fn back_rays(rig: &StereoRig, x: &ImagePoint, y: &ImagePoint) -> (Ray3, Ray3) {
    let rt = rig.rotation().transpose();
    let left = Ray3 {
        direction: rig.k_left.inverse() * x.homogeneous(),
        origin: Vector3::zeros(),
    };
    let right = Ray3 {
        direction: rt * (rig.k_right.inverse() * y.homogeneous()),
        origin: -(rt * rig.translation()),
    };
    (left, right)
}

fn is_parallel(a: &Vector3<f64>, b: &Vector3<f64>) -> bool {
    let scale = a.norm() * b.norm();
    a.cross(b).norm() <= PARALLEL_EPS * scale
}

/// Endpoints of the common perpendicular of two lines.
pub fn closest_points(left: &Ray3, right: &Ray3) -> Result<ClosestPointSolution, GeometryError> {
    let (rx, sx) = (&left.direction, &left.origin);
    let (ry, sy) = (&right.direction, &right.origin);
    if is_parallel(rx, ry) {
        return Err(GeometryError::ParallelRays);
    }
    let m = rx.cross(ry);
    let n_left = rx.cross(&m);
    let n_right = ry.cross(&m);
    // Each endpoint is where its line meets the plane spanned by the other
    // line and the common normal.
    let b_left = sx + rx * ((sy - sx).dot(&n_right) / rx.dot(&n_right));
    let b_right = sy + ry * ((sx - sy).dot(&n_left) / ry.dot(&n_left));
    Ok(ClosestPointSolution {
        b_left: WorldPoint(b_left),
        b_right: WorldPoint(b_right),
        n_left,
        n_right,
        midpoint_depth: 0.5 * (b_left.z + b_right.z),
    })
}

/// Strictly in front of both cameras.
pub fn is_in_front(rig: &StereoRig, w: &WorldPoint) -> bool {
    let right = rig.rotation() * w.0 + rig.translation();
    w.0.z > 0.0 && right.z > 0.0
}

enum RayBranch {
    Intersecting(ClosestPointSolution, f64),
    Parallel(f64),
    Behind(ClosestPointSolution),
}

fn ray_branch(rig: &StereoRig, x: &ImagePoint, y: &ImagePoint) -> RayBranch {
    let (lx, ly) = back_rays(rig, x, y);
    let rt_t = rig.rotation().transpose() * rig.translation();
    match closest_points(&lx, &ly) {
        Err(_) => {
            let xt = &lx.direction;
            RayBranch::Parallel(xt.cross(&rt_t).norm() / xt.norm())
        }
        Ok(sol) => {
            if is_in_front(rig, &sol.b_left) && is_in_front(rig, &sol.b_right) {
                let c = lx.direction.cross(&ly.direction);
                RayBranch::Intersecting(sol, c.dot(&rt_t).abs() / c.norm())
            } else {
                RayBranch::Behind(sol)
            }
        }
    }
}

/// Distance between the viewing rays of `x` and `y`, restricted to
/// closest approaches in front of both cameras. When the closest approach
/// is behind a camera the baseline `‖t‖` is returned instead.
///
/// Not a metric: it is neither symmetric nor zero on the diagonal.
pub fn ray_distance(rig: &StereoRig, x: &ImagePoint, y: &ImagePoint) -> f64 {
    match ray_branch(rig, x, y) {
        RayBranch::Intersecting(_, d) | RayBranch::Parallel(d) => d,
        RayBranch::Behind(_) => rig.baseline(),
    }
}

/// [`ray_distance`] plus a quadratic hinge penalty on the depth of the
/// closest-approach midpoint. Parallel rays carry no penalty.
pub fn regularized_ray_distance(
    rig: &StereoRig,
    x: &ImagePoint,
    y: &ImagePoint,
    params: &DepthRegParams,
) -> f64 {
    match ray_branch(rig, x, y) {
        RayBranch::Intersecting(sol, d) => d + params.penalty(sol.midpoint_depth),
        RayBranch::Behind(sol) => rig.baseline() + params.penalty(sol.midpoint_depth),
        RayBranch::Parallel(d) => d,
    }
}

/// `F = K_r^{-T} [t]× R K_l^{-1}`.
pub fn fundamental_matrix(rig: &StereoRig) -> FundamentalMatrix {
    let skew_t = skew(rig.translation());
    let entries =
        rig.k_right.inverse().transpose() * skew_t * rig.rotation() * rig.k_left.inverse();
    FundamentalMatrix { entries, skew_t }
}

fn line_distance(line: &Vector3<f64>, p: &Vector3<f64>) -> f64 {
    let p2 = Vector2::new(line.x, line.y).norm();
    if p2 <= DEGENERATE_EPS * line.norm() {
        line.z.abs()
    } else {
        line.dot(p).abs() / p2
    }
}

/// Distance of `y` to the epipolar line of `x`.
pub fn epipolar_distance_right(f: &FundamentalMatrix, x: &ImagePoint, y: &ImagePoint) -> f64 {
    line_distance(&(f.entries * x.homogeneous()), &y.homogeneous())
}

/// Distance of `x` to the epipolar line of `y`.
pub fn epipolar_distance_left(f: &FundamentalMatrix, x: &ImagePoint, y: &ImagePoint) -> f64 {
    line_distance(&(f.entries.transpose() * y.homogeneous()), &x.homogeneous())
}

/// Symmetric epipolar distance: mean of the point-to-line distances in
/// both images.
pub fn epipolar_distance(f: &FundamentalMatrix, x: &ImagePoint, y: &ImagePoint) -> f64 {
    0.5 * (epipolar_distance_left(f, x, y) + epipolar_distance_right(f, x, y))
}

/// Image of the other camera's focal point.
///
/// `Side::Left` gives the right focal point seen by the left camera,
/// `Side::Right` the left focal point seen by the right camera.
pub fn epipole(rig: &StereoRig, side: Side) -> Result<ImagePoint, GeometryError> {
    let h = match side {
        Side::Left => rig.k_left.matrix() * rig.pose.right_center(),
        Side::Right => rig.k_right.matrix() * rig.translation(),
    };
    if h.z.abs() <= DEGENERATE_EPS * h.norm() {
        return Err(GeometryError::DegenerateEpipole(side));
    }
    Ok(ImagePoint::from_homogeneous(&h))
}

/// Whether `y` lies on the epipolar half-line of `x`, i.e. on its epipolar
/// line and on the side of the epipole that corresponds to points in front
/// of both cameras.
pub fn epipolar_ray_contains(
    rig: &StereoRig,
    f: &FundamentalMatrix,
    x: &ImagePoint,
    y: &ImagePoint,
    tol: f64,
) -> bool {
    let fx = f.entries * x.homogeneous();
    let residual = fx.dot(&y.homogeneous()).abs();
    if residual > tol * (1.0 + Vector2::new(fx.x, fx.y).norm()) {
        return false;
    }
    let t = rig.translation();
    let y_dir = rig.k_right.inverse() * y.homogeneous();
    let x_dir = rig.rotation() * (rig.k_left.inverse() * x.homogeneous());
    t.cross(&y_dir).dot(&t.cross(&x_dir)) > 0.0
}

/// Midpoint triangulation result.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Triangulation {
    pub point: WorldPoint,
    /// `false` when the midpoint is not in front of both cameras.
    pub in_front: bool,
}

/// Midpoint of the shortest segment between the two viewing rays.
pub fn triangulate(
    rig: &StereoRig,
    x: &ImagePoint,
    y: &ImagePoint,
) -> Result<Triangulation, GeometryError> {
    let (lx, ly) = back_rays(rig, x, y);
    let sol = closest_points(&lx, &ly)?;
    let point = WorldPoint(sol.midpoint());
    Ok(Triangulation {
        in_front: is_in_front(rig, &point),
        point,
    })
}

/// Evaluates a single pairwise cost.
pub fn distance(
    rig: &StereoRig,
    f: &FundamentalMatrix,
    spec: &DistanceSpec,
    x: &ImagePoint,
    y: &ImagePoint,
) -> f64 {
    match spec {
        DistanceSpec::Epipolar => epipolar_distance(f, x, y),
        DistanceSpec::Ray => ray_distance(rig, x, y),
        DistanceSpec::RegularizedRay(p) => regularized_ray_distance(rig, x, y, p),
    }
}

/// Dense `|xs| × |ys|` matrix of pairwise costs.
pub fn pairwise_cost(
    rig: &StereoRig,
    spec: &DistanceSpec,
    xs: &[ImagePoint],
    ys: &[ImagePoint],
) -> Result<CostMatrix, TransportError> {
    let f = fundamental_matrix(rig);
    let mut values = Vec::with_capacity(xs.len() * ys.len());
    for x in xs {
        for y in ys {
            values.push(distance(rig, &f, spec, x, y));
        }
    }
    CostMatrix::new(xs.len(), ys.len(), values).map(|c| c.with_provenance(*spec))
}
