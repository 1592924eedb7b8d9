//! Project a 3D point into a rotated stereo pair and triangulate it back.

use nalgebra::{Matrix3, Vector3};
use stereo_ot::geometry::{
    project_pair, reduce_general_rig, triangulate, IntrinsicMatrix, WorldPoint,
};
use stereo_ot::simulation::euler_xyz;

fn main() {
    // Two pinhole cameras in world coordinates: the left one at the origin,
    // the right one a unit to the right and turned slightly inwards.
    let k = IntrinsicMatrix::from_params(800.0, 800.0, 320.0, 240.0).unwrap();
    let r_left = Matrix3::identity();
    let r_right = euler_xyz(0.0, (-5.0f64).to_radians(), 0.0);
    let center_right = Vector3::new(1.0, 0.0, 0.0);
    let rig = reduce_general_rig(
        k,
        k,
        &r_left,
        &r_right,
        &Vector3::zeros(),
        &(-(r_right * center_right)),
    )
    .unwrap();
    let t = rig.translation();
    println!("relative pose: t = ({:.4}, {:.4}, {:.4})", t.x, t.y, t.z);

    let w = WorldPoint::new(0.2, -0.1, 3.0);
    let (x, y) = project_pair(&rig, &w).unwrap();
    println!("left pixel  ({:.3}, {:.3})", x.u, x.v);
    println!("right pixel ({:.3}, {:.3})", y.u, y.v);

    let t = triangulate(&rig, &x, &y).unwrap();
    let p = t.point.0;
    println!(
        "triangulated ({:.6}, {:.6}, {:.6}), in front: {}, error {:.2e}",
        p.x, p.y, p.z,
        t.in_front,
        (t.point.0 - w.0).norm()
    );
}
