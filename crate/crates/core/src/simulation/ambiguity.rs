//! A two-object instance where the epipolar distance cannot tell objects
//! apart but the ray distance can.
//!
//! On a rectified rig every epipolar line is an image row. Object A sits at
//! depth 3, object B at depth 6, and their projections are laid out so that
//! each A point and its B partner trade rows between the two views by a small
//! offset `delta`. The wrong pairing is then exactly epipolar-consistent
//! (cost 0) while the right pairing costs `delta`, so flat OT on the
//! epipolar cost swaps them. One of the two wrong pairings triangulates
//! behind the cameras, which the ray distance charges the full baseline for.

use nalgebra::{Matrix3, Vector3};

use crate::evaluation::GroundTruthCorrespondence;
use crate::geometry::{ImagePoint, IntrinsicMatrix, RelativePose, StereoRig, WorldPoint};
use crate::hierarchy::LabeledCloud;

#[derive(Debug, Clone, PartialEq)]
pub struct AmbiguityInstance {
    pub rig: StereoRig,
    pub left: LabeledCloud,
    pub right: LabeledCloud,
    pub gt: GroundTruthCorrespondence,
    /// Points of object A, then object B, in the rig frame.
    pub world_points: Vec<WorldPoint>,
}

/// `pairs` points per object, row offset `delta` (keep it well below 0.2).
pub fn epipolar_ambiguity_instance(pairs: usize, delta: f64) -> AmbiguityInstance {
    let rig = StereoRig::new(
        IntrinsicMatrix::identity(),
        IntrinsicMatrix::identity(),
        RelativePose::new(Matrix3::identity(), Vector3::new(-1.0, 0.0, 0.0))
            .expect("identity rotation"),
    );
    let (xa, za) = (-0.3, 3.0);
    let (xb, zb) = (1.0, 6.0);
    let rows: Vec<f64> = (0..pairs)
        .map(|k| 0.2 * (k as f64 - (pairs as f64 - 1.0) / 2.0))
        .collect();

    let mut world = Vec::with_capacity(2 * pairs);
    let (mut la, mut ra, mut lb, mut rb) = (vec![], vec![], vec![], vec![]);
    for &v in &rows {
        world.push(WorldPoint::new(xa, v * za, za));
        la.push(ImagePoint::new(xa / za, v));
        ra.push(ImagePoint::new((xa - 1.0) / za, v + delta));
    }
    for &v in &rows {
        world.push(WorldPoint::new(xb, (v + delta) * zb, zb));
        lb.push(ImagePoint::new(xb / zb, v + delta));
        rb.push(ImagePoint::new((xb - 1.0) / zb, v));
    }
    AmbiguityInstance {
        rig,
        left: LabeledCloud::from_groups(vec![la, lb]).expect("nonempty groups"),
        right: LabeledCloud::from_groups(vec![ra, rb]).expect("nonempty groups"),
        gt: GroundTruthCorrespondence::identity(2 * pairs, 2),
        world_points: world,
    }
}
