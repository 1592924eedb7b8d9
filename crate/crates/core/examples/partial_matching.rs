//! Partial transport between clouds of different sizes: every point of the
//! smaller cloud is matched, the rest of the larger one is left out.

use stereo_ot::geometry::{pairwise_cost, DistanceSpec};
use stereo_ot::simulation::{sample_scene, SweepConfig};
use stereo_ot::transport::{binarize, default_mass, solve_pot, MatchSource};

fn main() {
    let scene = sample_scene(&SweepConfig::default(), 0, 0.0).unwrap();
    let xs = scene.left.flat_points();
    // drop every third right point
    let keep: Vec<usize> = (0..xs.len()).filter(|k| k % 3 != 0).collect();
    let ys: Vec<_> = keep.iter().map(|&k| scene.right.flat_points()[k]).collect();

    let c = pairwise_cost(&scene.rig.rig, &DistanceSpec::Ray, &xs, &ys).unwrap();
    let mass = default_mass(xs.len(), ys.len());
    let plan = solve_pot(&c, mass).unwrap();
    let m = binarize(&plan, MatchSource::Pot);
    let correct = m.pairs().iter().filter(|&&(i, j)| keep[j] == i).count();
    println!(
        "{} left, {} right, mass {mass:.3}: {} pairs, {correct} correct",
        xs.len(),
        ys.len(),
        m.len()
    );

    // Moving less mass drops the most expensive pairs first.
    for mass in [0.5, 0.25] {
        let m = binarize(&solve_pot(&c, mass).unwrap(), MatchSource::Pot);
        println!("mass {mass}: {} pairs", m.len());
    }
}
