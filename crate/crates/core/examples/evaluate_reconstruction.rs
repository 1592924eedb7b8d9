//! Match a noisy scene with each cost, triangulate, and score the result
//! against the generating 3D points.

use stereo_ot::evaluation::{pointwise_mismatch, reconstruct, w2_squared_points};
use stereo_ot::geometry::{pairwise_cost, DepthRegParams, DistanceSpec};
use stereo_ot::simulation::{sample_scene, SweepConfig};
use stereo_ot::transport::{binarize, solve_ot, MarginalWeights, MatchSource};

fn main() {
    let scene = sample_scene(&SweepConfig::default(), 3, 0.01).unwrap();
    let rig = &scene.rig.rig;
    let (xs, ys) = (scene.left.flat_points(), scene.right.flat_points());
    let w = MarginalWeights::uniform(xs.len(), ys.len());
    for spec in [
        DistanceSpec::Epipolar,
        DistanceSpec::Ray,
        DistanceSpec::RegularizedRay(DepthRegParams::new(10.0, 2.5, 3.5).unwrap()),
    ] {
        let c = pairwise_cost(rig, &spec, &xs, &ys).unwrap();
        let m = binarize(&solve_ot(&c, &w).unwrap(), MatchSource::Ot);
        let rec = reconstruct(rig, &m, &xs, &ys);
        let w2 = w2_squared_points(&rec.points, &scene.rig_points).unwrap();
        println!(
            "{}: mismatch {:5.1}%  W2^2 {:.3e}  skipped {}",
            spec.name(),
            100.0 * pointwise_mismatch(&m, &scene.gt, xs.len(), ys.len()),
            w2,
            rec.skipped.len()
        );
    }
}
