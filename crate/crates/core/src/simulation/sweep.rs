//! The (distance × matcher × σ) sweep over seeded sphere scenes.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{sample_scene, DistanceName, Matcher, Scene, SimulationError, SweepConfig};
use crate::evaluation::{objectwise_mismatch, pointwise_mismatch, reconstruct, w2_squared_points};
use crate::geometry::{pairwise_cost, DistanceSpec};
use crate::hierarchy::{hierarchical_match, HierarchyError, ObjectMode};
use crate::transport::{binarize, naive_match, solve_ot, MarginalWeights, MatchSource, Matching};

/// Per-scene outcome of one (distance, matcher) run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunScore {
    pub distance: DistanceName,
    pub matcher: Matcher,
    pub pointwise_mismatch: f64,
    pub w2_squared: f64,
    pub objectwise_mismatch: Option<f64>,
}

/// Aggregated row. Mismatch columns are percentages; std is the population
/// standard deviation over scenes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub distance: DistanceName,
    pub matcher: Matcher,
    pub sigma: f64,
    pub mismatch_mean_pct: f64,
    pub mismatch_std_pct: f64,
    pub w2_mean: f64,
    pub w2_std: f64,
    pub object_mismatch_mean_pct: Option<f64>,
    pub object_mismatch_std_pct: Option<f64>,
    pub n_scenes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    pub fn row(&self, distance: DistanceName, matcher: Matcher, sigma: f64) -> Option<&SweepRow> {
        self.rows
            .iter()
            .find(|r| r.distance == distance && r.matcher == matcher && r.sigma == sigma)
    }
}

fn hier_err(e: HierarchyError) -> SimulationError {
    SimulationError::Hierarchy(e)
}

/// Runs every configured (distance, matcher) pair on one scene.
pub fn score_scene(cfg: &SweepConfig, scene: &Scene) -> Result<Vec<RunScore>, SimulationError> {
    let rig = &scene.rig.rig;
    let xs = scene.left.flat_points();
    let ys = scene.right.flat_points();
    let (n, m) = (xs.len(), ys.len());
    let mut out = Vec::with_capacity(cfg.distances.len() * cfg.matchers.len());
    for &dist in &cfg.distances {
        let spec: DistanceSpec = cfg.distance_spec(dist)?;
        let flat = if cfg.matchers.iter().any(|&mt| mt != Matcher::Hot) {
            Some(pairwise_cost(rig, &spec, &xs, &ys).map_err(|e| hier_err(e.into()))?)
        } else {
            None
        };
        for &matcher in &cfg.matchers {
            let (matching, objects): (Matching, Option<f64>) = match matcher {
                Matcher::Naive => (naive_match(flat.as_ref().expect("flat cost")), None),
                Matcher::Ot => {
                    let plan = solve_ot(flat.as_ref().expect("flat cost"), &MarginalWeights::uniform(n, m))
                        .map_err(|e| hier_err(e.into()))?;
                    (binarize(&plan, MatchSource::Ot), None)
                }
                Matcher::Hot => {
                    let h = hierarchical_match(rig, &spec, &scene.left, &scene.right, ObjectMode::Balanced)
                        .map_err(hier_err)?;
                    let om = objectwise_mismatch(
                        &h.object_matching,
                        &scene.gt,
                        scene.left.num_objects(),
                        scene.right.num_objects(),
                    );
                    (h.point_matching, Some(om))
                }
            };
            let rec = reconstruct(rig, &matching, &xs, &ys);
            let w2 = if rec.points.is_empty() {
                f64::NAN
            } else {
                w2_squared_points(&rec.points, &scene.rig_points).expect("both clouds nonempty")
            };
            out.push(RunScore {
                distance: dist,
                matcher,
                pointwise_mismatch: pointwise_mismatch(&matching, &scene.gt, n, m),
                w2_squared: w2,
                objectwise_mismatch: objects,
            });
        }
    }
    Ok(out)
}

/// Neumaier-compensated mean and population standard deviation.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    fn sum(it: impl Iterator<Item = f64>) -> f64 {
        let (mut s, mut c) = (0.0f64, 0.0f64);
        for x in it {
            let t = s + x;
            c += if s.abs() >= x.abs() { (s - t) + x } else { (x - t) + s };
            s = t;
        }
        s + c
    }
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = sum(xs.iter().copied()) / n;
    let var = sum(xs.iter().map(|x| (x - mean) * (x - mean))) / n;
    (mean, var.sqrt())
}

/// Generates and scores every (scene, σ) task in parallel, then aggregates
/// in scene order so the table does not depend on scheduling.
pub fn run_sweep(cfg: &SweepConfig) -> Result<SweepTable, SimulationError> {
    cfg.validate()?;
    let tasks: Vec<(usize, usize)> = (0..cfg.sigmas.len())
        .flat_map(|s| (0..cfg.n_scenes).map(move |i| (s, i)))
        .collect();
    let scores = tasks
        .par_iter()
        .map(|&(s, i)| {
            let scene = sample_scene(cfg, i, cfg.sigmas[s])?;
            score_scene(cfg, &scene)
        })
        .collect::<Result<Vec<_>, SimulationError>>()?;

    let per_task = cfg.distances.len() * cfg.matchers.len();
    let mut rows = Vec::new();
    for &dist in &cfg.distances {
        for &matcher in &cfg.matchers {
            let slot = cfg.distances.iter().position(|&d| d == dist).unwrap() * cfg.matchers.len()
                + cfg.matchers.iter().position(|&mt| mt == matcher).unwrap();
            for (s, &sigma) in cfg.sigmas.iter().enumerate() {
                let runs: Vec<&RunScore> = scores[s * cfg.n_scenes..(s + 1) * cfg.n_scenes]
                    .iter()
                    .map(|v| {
                        debug_assert_eq!(v.len(), per_task);
                        &v[slot]
                    })
                    .collect();
                let mm: Vec<f64> = runs.iter().map(|r| 100.0 * r.pointwise_mismatch).collect();
                let w2: Vec<f64> = runs
                    .iter()
                    .map(|r| r.w2_squared)
                    .filter(|v| v.is_finite())
                    .collect();
                let om: Vec<f64> = runs
                    .iter()
                    .filter_map(|r| r.objectwise_mismatch.map(|v| 100.0 * v))
                    .collect();
                let (mm_mean, mm_std) = mean_std(&mm);
                let (w2_mean, w2_std) = mean_std(&w2);
                let (om_mean, om_std) = if om.is_empty() {
                    (None, None)
                } else {
                    let (a, b) = mean_std(&om);
                    (Some(a), Some(b))
                };
                rows.push(SweepRow {
                    distance: dist,
                    matcher,
                    sigma,
                    mismatch_mean_pct: mm_mean,
                    mismatch_std_pct: mm_std,
                    w2_mean,
                    w2_std,
                    object_mismatch_mean_pct: om_mean,
                    object_mismatch_std_pct: om_std,
                    n_scenes: cfg.n_scenes,
                });
            }
        }
    }
    Ok(SweepTable { rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SweepConfig {
        SweepConfig {
            n_scenes: 4,
            sigmas: vec![0.0, 0.01],
            ..SweepConfig::default()
        }
    }

    #[test]
    fn mean_std_population() {
        let (m, s) = mean_std(&[1.0, 3.0]);
        assert_eq!(m, 2.0);
        assert_eq!(s, 1.0);
    }

    #[test]
    fn small_sweep_shape_and_zero_noise() {
        let cfg = small();
        let t = run_sweep(&cfg).unwrap();
        assert_eq!(t.rows.len(), 3 * 3 * 2);
        for d in [DistanceName::Epi, DistanceName::Ray] {
            for mt in [Matcher::Naive, Matcher::Ot, Matcher::Hot] {
                let r = t.row(d, mt, 0.0).unwrap();
                assert_eq!(r.mismatch_mean_pct, 0.0, "{d:?} {mt:?}");
                assert!(r.w2_mean < 1e-10);
            }
        }
        assert!(t.row(DistanceName::Ray, Matcher::Hot, 0.0).unwrap().object_mismatch_mean_pct == Some(0.0));
        assert!(t.row(DistanceName::Ray, Matcher::Ot, 0.0).unwrap().object_mismatch_mean_pct.is_none());
    }

    #[test]
    fn sweep_is_deterministic() {
        let cfg = small();
        assert_eq!(run_sweep(&cfg).unwrap(), run_sweep(&cfg).unwrap());
    }
}
