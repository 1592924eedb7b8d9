//! Runs the spheres simulation and prints mismatch, W2 and object mismatch
//! per (distance, matcher, sigma).
//!
//! cargo run --release --example spheres_sweep -- [n_scenes]

use stereo_ot::simulation::{run_sweep, SweepConfig};

fn main() {
    let n_scenes = std::env::args()
        .nth(1)
        .map(|s| s.parse().expect("n_scenes must be an integer"))
        .unwrap_or(100);
    let cfg = SweepConfig {
        n_scenes,
        ..SweepConfig::default()
    };
    let start = std::time::Instant::now();
    let table = run_sweep(&cfg).expect("sweep");
    println!(
        "{:<4} {:<6} {:>6} {:>16} {:>20} {:>16}",
        "dist", "match", "sigma", "mismatch %", "W2^2", "objects %"
    );
    for r in &table.rows {
        let objects = match (r.object_mismatch_mean_pct, r.object_mismatch_std_pct) {
            (Some(m), Some(s)) => format!("{m:6.1} ± {s:4.1}"),
            _ => "-".into(),
        };
        println!(
            "{:<4} {:<6} {:>6} {:>8.1} ± {:>5.1} {:>10.2e} ± {:>7.1e} {:>16}",
            r.distance.as_str(),
            r.matcher.as_str(),
            r.sigma,
            r.mismatch_mean_pct,
            r.mismatch_std_pct,
            r.w2_mean,
            r.w2_std,
            objects
        );
    }
    eprintln!("{} scenes in {:.1?}", cfg.n_scenes, start.elapsed());
}
