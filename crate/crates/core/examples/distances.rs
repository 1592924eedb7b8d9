//! The three pairwise costs on a true pair, a wrong pair in front of the
//! cameras, and a pair whose rays only meet behind them.

use nalgebra::{Matrix3, Vector3};
use stereo_ot::geometry::{
    distance, fundamental_matrix, project_pair, DepthRegParams, DistanceSpec, IntrinsicMatrix,
    RelativePose, StereoRig, WorldPoint,
};

fn main() {
    let rig = StereoRig::new(
        IntrinsicMatrix::identity(),
        IntrinsicMatrix::identity(),
        RelativePose::new(Matrix3::identity(), Vector3::new(-1.0, 0.0, 0.0)).unwrap(),
    );
    let f = fundamental_matrix(&rig);
    let specs = [
        DistanceSpec::Epipolar,
        DistanceSpec::Ray,
        DistanceSpec::RegularizedRay(DepthRegParams::new(10.0, 2.5, 3.5).unwrap()),
    ];

    let (x, y) = project_pair(&rig, &WorldPoint::new(0.1, 0.0, 3.0)).unwrap();
    let (_, y_far) = project_pair(&rig, &WorldPoint::new(0.3, 0.05, 5.0)).unwrap();
    let (_, y_behind) = project_pair(&rig, &WorldPoint::new(1.5, 0.0, 3.0)).unwrap();

    println!("{:<14} {:>10} {:>10} {:>10}", "pair", "epi", "ray", "reg");
    for (name, y) in [("true", y), ("wrong, front", y_far), ("wrong, behind", y_behind)] {
        let d: Vec<String> = specs
            .iter()
            .map(|s| format!("{:>10.4}", distance(&rig, &f, s, &x, &y)))
            .collect();
        println!("{name:<14} {}", d.join(" "));
    }
}
