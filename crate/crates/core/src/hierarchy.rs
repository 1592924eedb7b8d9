//! Hierarchical matching of labeled point sets.
//!
//! Every left object is compared to every right object by a partial
//! transport at default mass; the resulting object-level cost matrix is then
//! solved once more, balanced (HOT) or partial (HOT-POT). The pointwise plan
//! is recovered by scaling each local plan by the mass its object pair
//! received.

use rayon::prelude::*;
use thiserror::Error;

use crate::geometry::{pairwise_cost, DistanceSpec, ImagePoint, StereoRig};
use crate::transport::{
    binarize, solve_ot, solve_pot_default, CostMatrix, MarginalWeights, MatchSource, Matching,
    PlanEntry, TransportError, TransportPlan,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HierarchyError {
    #[error("invalid labeled cloud: {0}")]
    InvalidCloud(String),
    #[error(transparent)]
    Transport(#[from] TransportError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledObject {
    pub id: String,
    pub points: Vec<ImagePoint>,
    pub point_ids: Vec<String>,
}

/// Ordered objects, each a nonempty list of identified image points.
///
/// Points are also addressed by a flat index: objects are laid out one
/// after another in order.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledCloud {
    objects: Vec<LabeledObject>,
    offsets: Vec<usize>,
}

impl LabeledCloud {
    pub fn new(objects: Vec<LabeledObject>) -> Result<Self, HierarchyError> {
        if objects.is_empty() {
            return Err(HierarchyError::InvalidCloud("no objects".into()));
        }
        let mut object_ids = std::collections::HashSet::new();
        let mut point_ids = std::collections::HashSet::new();
        let mut offsets = Vec::with_capacity(objects.len() + 1);
        let mut total = 0;
        for obj in &objects {
            if !object_ids.insert(obj.id.as_str()) {
                return Err(HierarchyError::InvalidCloud(format!(
                    "duplicate object id {:?}",
                    obj.id
                )));
            }
            if obj.points.is_empty() {
                return Err(HierarchyError::InvalidCloud(format!(
                    "object {:?} has no points",
                    obj.id
                )));
            }
            if obj.points.len() != obj.point_ids.len() {
                return Err(HierarchyError::InvalidCloud(format!(
                    "object {:?}: {} points but {} ids",
                    obj.id,
                    obj.points.len(),
                    obj.point_ids.len()
                )));
            }
            for pid in &obj.point_ids {
                if !point_ids.insert(pid.as_str()) {
                    return Err(HierarchyError::InvalidCloud(format!(
                        "duplicate point id {pid:?}"
                    )));
                }
            }
            offsets.push(total);
            total += obj.points.len();
        }
        offsets.push(total);
        Ok(Self { objects, offsets })
    }

    /// Objects with generated ids `"{object}"` and `"{object}:{point}"`.
    pub fn from_groups(groups: Vec<Vec<ImagePoint>>) -> Result<Self, HierarchyError> {
        let objects = groups
            .into_iter()
            .enumerate()
            .map(|(k, points)| LabeledObject {
                id: k.to_string(),
                point_ids: (0..points.len()).map(|r| format!("{k}:{r}")).collect(),
                points,
            })
            .collect();
        Self::new(objects)
    }

    pub fn objects(&self) -> &[LabeledObject] {
        &self.objects
    }

    pub fn num_objects(&self) -> usize {
        self.objects.len()
    }

    pub fn num_points(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    pub fn flat_index(&self, object: usize, point: usize) -> usize {
        self.offsets[object] + point
    }

    /// `(object, point)` for a flat index.
    pub fn locate(&self, flat: usize) -> (usize, usize) {
        let object = self.offsets.partition_point(|&o| o <= flat) - 1;
        (object, flat - self.offsets[object])
    }

    pub fn point_id(&self, flat: usize) -> &str {
        let (o, r) = self.locate(flat);
        &self.objects[o].point_ids[r]
    }

    pub fn object_of(&self, flat: usize) -> usize {
        self.locate(flat).0
    }

    /// All points in flat order.
    pub fn flat_points(&self) -> Vec<ImagePoint> {
        self.objects
            .iter()
            .flat_map(|o| o.points.iter().copied())
            .collect()
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.objects.iter().map(|o| o.points.len()).collect()
    }
}

/// Object-to-object costs with the local plans that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectCostMatrix {
    values: CostMatrix,
    plans: Vec<TransportPlan>,
    left_sizes: Vec<usize>,
    right_sizes: Vec<usize>,
}

impl ObjectCostMatrix {
    pub fn values(&self) -> &CostMatrix {
        &self.values
    }

    pub fn plan(&self, i: usize, j: usize) -> &TransportPlan {
        &self.plans[i * self.values.cols() + j]
    }

    pub fn left_sizes(&self) -> &[usize] {
        &self.left_sizes
    }

    pub fn right_sizes(&self) -> &[usize] {
        &self.right_sizes
    }

    /// Builds the matrix from precomputed local plans (row-major over object
    /// pairs). Object costs are the plans' objectives.
    pub fn from_plans(
        left_sizes: Vec<usize>,
        right_sizes: Vec<usize>,
        plans: Vec<TransportPlan>,
    ) -> Result<Self, HierarchyError> {
        let (n, m) = (left_sizes.len(), right_sizes.len());
        if plans.len() != n * m {
            return Err(TransportError::ShapeMismatch(format!(
                "{} local plans for {n}x{m} objects",
                plans.len()
            ))
            .into());
        }
        for (k, p) in plans.iter().enumerate() {
            let (i, j) = (k / m, k % m);
            if p.rows() != left_sizes[i] || p.cols() != right_sizes[j] {
                return Err(TransportError::ShapeMismatch(format!(
                    "local plan ({i}, {j}) is {}x{}, objects have {} and {} points",
                    p.rows(),
                    p.cols(),
                    left_sizes[i],
                    right_sizes[j]
                ))
                .into());
            }
        }
        let values = CostMatrix::new(n, m, plans.iter().map(TransportPlan::objective).collect())?;
        Ok(Self {
            values,
            plans,
            left_sizes,
            right_sizes,
        })
    }
}

/// Local step: default-mass partial transport between every object pair.
pub fn object_costs(
    rig: &StereoRig,
    spec: &DistanceSpec,
    left: &LabeledCloud,
    right: &LabeledCloud,
) -> Result<ObjectCostMatrix, HierarchyError> {
    let (n, m) = (left.num_objects(), right.num_objects());
    let plans = (0..n * m)
        .into_par_iter()
        .map(|k| {
            let (a, b) = (&left.objects()[k / m], &right.objects()[k % m]);
            let c = pairwise_cost(rig, spec, &a.points, &b.points)?;
            solve_pot_default(&c)
        })
        .collect::<Result<Vec<_>, TransportError>>()?;
    ObjectCostMatrix::from_plans(left.sizes(), right.sizes(), plans)
}

/// Object-level solve mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObjectMode {
    /// Balanced transport with uniform object weights; needs `N = M`.
    Balanced,
    /// Partial transport at default mass.
    Partial,
}

impl ObjectMode {
    pub fn source(self) -> MatchSource {
        match self {
            ObjectMode::Balanced => MatchSource::Hot,
            ObjectMode::Partial => MatchSource::HotPot,
        }
    }
}

/// Global step: transport over the object cost matrix.
pub fn match_objects(
    costs: &ObjectCostMatrix,
    mode: ObjectMode,
) -> Result<(TransportPlan, Matching), HierarchyError> {
    let c = costs.values();
    let plan = match mode {
        ObjectMode::Balanced => {
            if c.rows() != c.cols() {
                return Err(TransportError::ShapeMismatch(format!(
                    "balanced object matching needs equal object counts, got {} vs {}; \
                     use partial (hot-pot) mode",
                    c.rows(),
                    c.cols()
                ))
                .into());
            }
            solve_ot(c, &MarginalWeights::uniform(c.rows(), c.cols()))?
        }
        ObjectMode::Partial => solve_pot_default(c)?,
    };
    let matching = binarize(&plan, mode.source());
    Ok((plan, matching))
}

/// One object pair's local plan and the object-level mass it is scaled by.
#[derive(Debug, Clone, PartialEq)]
pub struct GlobalBlock {
    pub left_object: usize,
    pub right_object: usize,
    pub object_mass: f64,
    pub plan: TransportPlan,
}

/// Mass moved between two points, addressed both per object and by flat
/// index.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GlobalEntry {
    pub left_object: usize,
    pub left_point: usize,
    pub right_object: usize,
    pub right_point: usize,
    pub left_index: usize,
    pub right_index: usize,
    pub mass: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GlobalPlan {
    object_plan: TransportPlan,
    blocks: Vec<GlobalBlock>,
    entries: Vec<GlobalEntry>,
    left_offsets: Vec<usize>,
    right_offsets: Vec<usize>,
}

fn offsets(sizes: &[usize]) -> Vec<usize> {
    let mut out = Vec::with_capacity(sizes.len() + 1);
    let mut acc = 0;
    out.push(0);
    for s in sizes {
        acc += s;
        out.push(acc);
    }
    out
}

impl GlobalPlan {
    pub fn object_plan(&self) -> &TransportPlan {
        &self.object_plan
    }

    pub fn blocks(&self) -> &[GlobalBlock] {
        &self.blocks
    }

    pub fn entries(&self) -> &[GlobalEntry] {
        &self.entries
    }

    pub fn left_total(&self) -> usize {
        *self.left_offsets.last().unwrap()
    }

    pub fn right_total(&self) -> usize {
        *self.right_offsets.last().unwrap()
    }

    pub fn total_mass(&self) -> f64 {
        self.entries.iter().map(|e| e.mass).sum()
    }

    /// Flat `N_tot × M_tot` transport plan.
    pub fn to_transport_plan(&self) -> TransportPlan {
        let entries = self
            .entries
            .iter()
            .map(|e| PlanEntry {
                row: e.left_index,
                col: e.right_index,
                mass: e.mass,
            })
            .collect();
        TransportPlan::from_entries(self.left_total(), self.right_total(), entries, None)
            .expect("blocks are disjoint")
    }
}

/// Embeds every local plan into its block, scaled by the object plan.
pub fn global_plan(
    object_plan: &TransportPlan,
    costs: &ObjectCostMatrix,
) -> Result<GlobalPlan, HierarchyError> {
    let (n, m) = (costs.values().rows(), costs.values().cols());
    if object_plan.rows() != n || object_plan.cols() != m {
        return Err(TransportError::ShapeMismatch(format!(
            "object plan is {}x{}, object costs are {n}x{m}",
            object_plan.rows(),
            object_plan.cols()
        ))
        .into());
    }
    let left_offsets = offsets(costs.left_sizes());
    let right_offsets = offsets(costs.right_sizes());
    let mut blocks = Vec::new();
    let mut entries = Vec::new();
    for oe in object_plan.entries() {
        let local = costs.plan(oe.row, oe.col);
        for le in local.entries() {
            let mass = oe.mass * le.mass;
            if mass > 0.0 {
                entries.push(GlobalEntry {
                    left_object: oe.row,
                    left_point: le.row,
                    right_object: oe.col,
                    right_point: le.col,
                    left_index: left_offsets[oe.row] + le.row,
                    right_index: right_offsets[oe.col] + le.col,
                    mass,
                });
            }
        }
        blocks.push(GlobalBlock {
            left_object: oe.row,
            right_object: oe.col,
            object_mass: oe.mass,
            plan: local.clone(),
        });
    }
    Ok(GlobalPlan {
        object_plan: object_plan.clone(),
        blocks,
        entries,
        left_offsets,
        right_offsets,
    })
}

/// Pointwise matching over flat indices: for each binarized object pair,
/// the binarized local plan.
pub fn global_matching(gp: &GlobalPlan, source: MatchSource) -> Matching {
    let objects = binarize(&gp.object_plan, source);
    let mut pairs = Vec::new();
    for &(i, j) in objects.pairs() {
        let Some(block) = gp
            .blocks
            .iter()
            .find(|b| b.left_object == i && b.right_object == j)
        else {
            continue;
        };
        for &(r, s) in binarize(&block.plan, source).pairs() {
            pairs.push((gp.left_offsets[i] + r, gp.right_offsets[j] + s));
        }
    }
    Matching::new(pairs, source).expect("objects are disjoint and matched injectively")
}

/// Full pipeline result.
#[derive(Debug, Clone, PartialEq)]
pub struct HierarchicalMatch {
    pub costs: ObjectCostMatrix,
    pub object_plan: TransportPlan,
    pub object_matching: Matching,
    pub global: GlobalPlan,
    pub point_matching: Matching,
}

/// Local costs, object matching, and global pointwise recovery in one call.
pub fn hierarchical_match(
    rig: &StereoRig,
    spec: &DistanceSpec,
    left: &LabeledCloud,
    right: &LabeledCloud,
    mode: ObjectMode,
) -> Result<HierarchicalMatch, HierarchyError> {
    let costs = object_costs(rig, spec, left, right)?;
    let (object_plan, object_matching) = match_objects(&costs, mode)?;
    let global = global_plan(&object_plan, &costs)?;
    let point_matching = global_matching(&global, mode.source());
    Ok(HierarchicalMatch {
        costs,
        object_plan,
        object_matching,
        global,
        point_matching,
    })
}
