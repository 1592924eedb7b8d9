//! Object-then-point matching on a noisy sphere scene, compared with flat OT.

use stereo_ot::evaluation::{objectwise_mismatch, pointwise_mismatch};
use stereo_ot::geometry::{pairwise_cost, DistanceSpec};
use stereo_ot::hierarchy::{hierarchical_match, ObjectMode};
use stereo_ot::simulation::{sample_scene, SweepConfig};
use stereo_ot::transport::{binarize, solve_ot, MarginalWeights, MatchSource};

fn main() {
    let scene = sample_scene(&SweepConfig::default(), 7, 0.005).unwrap();
    let rig = &scene.rig.rig;
    let spec = DistanceSpec::Ray;
    let (n, m) = (scene.left.num_points(), scene.right.num_points());

    let h = hierarchical_match(rig, &spec, &scene.left, &scene.right, ObjectMode::Balanced).unwrap();
    println!("object cost matrix:");
    for i in 0..h.costs.values().rows() {
        let row: Vec<String> = h.costs.values().row(i).iter().map(|v| format!("{v:8.4}")).collect();
        println!("  {}", row.join(" "));
    }
    println!("object matching {:?}", h.object_matching.pairs());
    println!(
        "hot: object mismatch {:.2}, point mismatch {:.2}",
        objectwise_mismatch(&h.object_matching, &scene.gt, 5, 5),
        pointwise_mismatch(&h.point_matching, &scene.gt, n, m)
    );

    let c = pairwise_cost(rig, &spec, &scene.left.flat_points(), &scene.right.flat_points()).unwrap();
    let flat = binarize(&solve_ot(&c, &MarginalWeights::uniform(n, m)).unwrap(), MatchSource::Ot);
    println!("flat ot: point mismatch {:.2}", pointwise_mismatch(&flat, &scene.gt, n, m));

    // With an object missing on one side, the partial variant still works.
    let mut groups: Vec<_> = scene.right.objects().iter().map(|o| o.points.clone()).collect();
    groups.pop();
    let right = stereo_ot::hierarchy::LabeledCloud::from_groups(groups).unwrap();
    let hp = hierarchical_match(rig, &spec, &scene.left, &right, ObjectMode::Partial).unwrap();
    println!("hot-pot with 5 vs 4 objects: {:?}", hp.object_matching.pairs());
}
