//! Two objects whose points trade epipolar lines between views: the
//! epipolar cost pairs them up wrongly, the ray cost does not.

use stereo_ot::evaluation::pointwise_mismatch;
use stereo_ot::geometry::{pairwise_cost, DistanceSpec};
use stereo_ot::simulation::ambiguity::epipolar_ambiguity_instance;
use stereo_ot::transport::{binarize, solve_ot, MarginalWeights, MatchSource};

fn main() {
    let inst = epipolar_ambiguity_instance(3, 0.002);
    let xs = inst.left.flat_points();
    let ys = inst.right.flat_points();
    let w = MarginalWeights::uniform(xs.len(), ys.len());
    for spec in [DistanceSpec::Epipolar, DistanceSpec::Ray] {
        let c = pairwise_cost(&inst.rig, &spec, &xs, &ys).unwrap();
        println!("{} cost matrix:", spec.name());
        for i in 0..c.rows() {
            let row: Vec<String> = c.row(i).iter().map(|v| format!("{v:7.4}")).collect();
            println!("  {}", row.join(" "));
        }
        let m = binarize(&solve_ot(&c, &w).unwrap(), MatchSource::Ot);
        println!(
            "  matching {:?}, mismatch {:.2}\n",
            m.pairs(),
            pointwise_mismatch(&m, &inst.gt, xs.len(), ys.len())
        );
    }
}
