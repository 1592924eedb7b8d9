//! Scoring of matchings: mismatch rates against known correspondences, and
//! squared Wasserstein-2 between a triangulated cloud and a reference.

use std::collections::BTreeMap;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{triangulate, GeometryError, ImagePoint, StereoRig, WorldPoint};
use crate::transport::{solve_ot, solve_pot_default, CostMatrix, MarginalWeights, Matching};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("point cloud is empty")]
    EmptyCloud,
    #[error("invalid ground truth: {0}")]
    InvalidGroundTruth(String),
}

/// Known left→right correspondences, by index, for points and objects.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct GroundTruthCorrespondence {
    point_pairs: BTreeMap<usize, usize>,
    object_pairs: BTreeMap<usize, usize>,
}

fn injective(pairs: &[(usize, usize)], what: &str) -> Result<BTreeMap<usize, usize>, EvalError> {
    let mut map = BTreeMap::new();
    let mut targets = std::collections::BTreeSet::new();
    for &(l, r) in pairs {
        if map.insert(l, r).is_some() || !targets.insert(r) {
            return Err(EvalError::InvalidGroundTruth(format!(
                "{what} pair ({l}, {r}) breaks injectivity"
            )));
        }
    }
    Ok(map)
}

impl GroundTruthCorrespondence {
    pub fn new(
        point_pairs: &[(usize, usize)],
        object_pairs: &[(usize, usize)],
    ) -> Result<Self, EvalError> {
        Ok(Self {
            point_pairs: injective(point_pairs, "point")?,
            object_pairs: injective(object_pairs, "object")?,
        })
    }

    /// `i ↔ i` for `points` points and `objects` objects.
    pub fn identity(points: usize, objects: usize) -> Self {
        Self {
            point_pairs: (0..points).map(|i| (i, i)).collect(),
            object_pairs: (0..objects).map(|i| (i, i)).collect(),
        }
    }

    pub fn point_pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.point_pairs.iter().map(|(&l, &r)| (l, r))
    }

    pub fn object_pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.object_pairs.iter().map(|(&l, &r)| (l, r))
    }

    pub fn point_partner(&self, left: usize) -> Option<usize> {
        self.point_pairs.get(&left).copied()
    }

    pub fn object_partner(&self, left: usize) -> Option<usize> {
        self.object_pairs.get(&left).copied()
    }
}

fn mismatch(pred: &Matching, truth: &BTreeMap<usize, usize>, n: usize, m: usize) -> f64 {
    let total = n.min(m);
    if total == 0 {
        return 0.0;
    }
    let correct = pred
        .pairs()
        .iter()
        .filter(|(l, r)| truth.get(l) == Some(r))
        .count();
    (total - correct.min(total)) as f64 / total as f64
}

/// Share of the `min(N, M)` expected pairs that are not correctly predicted.
/// Missing pairs count as wrong.
pub fn pointwise_mismatch(
    pred: &Matching,
    gt: &GroundTruthCorrespondence,
    n: usize,
    m: usize,
) -> f64 {
    mismatch(pred, &gt.point_pairs, n, m)
}

/// As [`pointwise_mismatch`], over objects.
pub fn objectwise_mismatch(
    pred: &Matching,
    gt: &GroundTruthCorrespondence,
    n: usize,
    m: usize,
) -> f64 {
    mismatch(pred, &gt.object_pairs, n, m)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Reconstruction {
    /// One point per triangulated pair, in matching order.
    pub points: Vec<WorldPoint>,
    /// The `(left, right)` pair behind each point.
    pub pairs: Vec<(usize, usize)>,
    /// Pairs whose rays were parallel.
    pub skipped: Vec<(usize, usize)>,
}

/// Triangulates every predicted pair; parallel-ray pairs are skipped.
pub fn reconstruct(
    rig: &StereoRig,
    pred: &Matching,
    xs: &[ImagePoint],
    ys: &[ImagePoint],
) -> Reconstruction {
    let mut out = Reconstruction {
        points: Vec::with_capacity(pred.len()),
        pairs: Vec::with_capacity(pred.len()),
        skipped: Vec::new(),
    };
    for &(i, j) in pred.pairs() {
        match triangulate(rig, &xs[i], &ys[j]) {
            Ok(t) => {
                out.points.push(t.point);
                out.pairs.push((i, j));
            }
            Err(GeometryError::ParallelRays) => out.skipped.push((i, j)),
            Err(e) => unreachable!("triangulation only fails on parallel rays: {e}"),
        }
    }
    out
}

/// Squared Wasserstein-2 between two uniformly weighted clouds.
///
/// Equal sizes: the balanced optimum, i.e. the mean squared distance under
/// the best permutation. Unequal sizes: the default-mass partial optimum
/// divided by the transported mass, so both cases read as a mean squared
/// distance over matched points.
pub fn w2_squared(p: &[Vector3<f64>], q: &[Vector3<f64>]) -> Result<f64, EvalError> {
    if p.is_empty() || q.is_empty() {
        return Err(EvalError::EmptyCloud);
    }
    let c = CostMatrix::from_fn(p.len(), q.len(), |i, j| (p[i] - q[j]).norm_squared())
        .map_err(|_| EvalError::EmptyCloud)?;
    let value = if p.len() == q.len() {
        solve_ot(&c, &MarginalWeights::uniform(p.len(), q.len()))
            .expect("uniform square marginals are balanced")
            .objective()
    } else {
        let plan = solve_pot_default(&c).expect("default mass is feasible");
        plan.objective() / plan.total_mass()
    };
    Ok(value.max(0.0))
}

/// Convenience over [`WorldPoint`] slices.
pub fn w2_squared_points(p: &[WorldPoint], q: &[WorldPoint]) -> Result<f64, EvalError> {
    let p: Vec<_> = p.iter().map(|w| w.0).collect();
    let q: Vec<_> = q.iter().map(|w| w.0).collect();
    w2_squared(&p, &q)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub pointwise_mismatch: f64,
    pub objectwise_mismatch: Option<f64>,
    pub w2_squared: Option<f64>,
    pub matched_count: usize,
    pub skipped_triangulations: usize,
}
