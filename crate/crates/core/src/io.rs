//! On-disk formats.
//!
//! Tabular files are CSV with a mandatory header row, preceded by one
//! schema line `# stereo-ot/<kind> v1` and optionally more `#` comment
//! lines. Calibration and sweep configuration are TOML; metrics are JSON.
//! Reals are written with 17 significant digits so that a write-then-read
//! cycle is exact. Every write goes to a temporary file that is renamed into
//! place.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::evaluation::{GroundTruthCorrespondence, MetricsReport};
use crate::geometry::{
    reduce_general_rig, DistanceSpec, GeometryError, ImagePoint, IntrinsicMatrix, RelativePose,
    StereoRig,
};
use crate::hierarchy::{LabeledCloud, LabeledObject};
use crate::simulation::{SweepConfig, SweepTable};
use crate::transport::{CostMatrix, MatchSource, Matching, PlanEntry, TransportPlan};

pub const SCHEMA_VERSION: &str = "v1";

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },
    #[error("validation failed: {0}")]
    Validation(String),
    #[error("calibration: {0}")]
    Calibration(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl IoError {
    fn parse(path: &Path, line: u64, message: impl Into<String>) -> Self {
        IoError::Parse {
            path: path.to_path_buf(),
            line,
            message: message.into(),
        }
    }

    fn io(path: &Path, source: std::io::Error) -> Self {
        IoError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, IoError>;

/// `{:.16e}`: 17 significant digits, exact on read-back.
pub fn fmt_real(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes `bytes` to a sibling temp file and renames it over `path`.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    use std::io::Write;
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| IoError::io(path, e))?;
    tmp.write_all(bytes).map_err(|e| IoError::io(path, e))?;
    tmp.persist(path).map_err(|e| IoError::io(path, e.error))?;
    Ok(())
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| IoError::io(path, e))
}

fn schema_line(kind: &str) -> String {
    format!("# stereo-ot/{kind} {SCHEMA_VERSION}")
}

/// Comment lines before the header, with the leading `#` stripped.
fn leading_comments(text: &str) -> Vec<&str> {
    text.lines()
        .take_while(|l| l.starts_with('#'))
        .map(|l| l[1..].trim())
        .collect()
}

fn check_schema(path: &Path, text: &str, kind: &str) -> Result<()> {
    let expected = format!("stereo-ot/{kind} {SCHEMA_VERSION}");
    match leading_comments(text).first() {
        Some(first) if first.starts_with("stereo-ot/") && *first != expected => Err(IoError::parse(
            path,
            1,
            format!("schema line {first:?}, expected {expected:?}"),
        )),
        _ => Ok(()),
    }
}

/// Parsed CSV body: header-checked records with their 1-based file lines.
struct Table {
    rows: Vec<(u64, csv::StringRecord)>,
}

fn read_table(path: &Path, kind: &str, header: &[&str]) -> Result<Table> {
    let text = read_text(path)?;
    check_schema(path, &text, kind)?;
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let got = rdr
        .headers()
        .map_err(|e| IoError::parse(path, 1, e.to_string()))?
        .clone();
    if got.iter().collect::<Vec<_>>() != header {
        return Err(IoError::parse(
            path,
            leading_comments(&text).len() as u64 + 1,
            format!("header {:?}, expected {:?}", got.iter().collect::<Vec<_>>(), header),
        ));
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            IoError::parse(path, line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        rows.push((line, rec));
    }
    Ok(Table { rows })
}

fn field_f64(path: &Path, line: u64, rec: &csv::StringRecord, idx: usize, name: &str) -> Result<f64> {
    let s = &rec[idx];
    let v: f64 = s
        .parse()
        .map_err(|_| IoError::parse(path, line, format!("column {name}: {s:?} is not a number")))?;
    if !v.is_finite() {
        return Err(IoError::parse(path, line, format!("column {name}: value must be finite")));
    }
    Ok(v)
}

fn csv_text(kind: &str, comments: &[String], header: &[&str], rows: &[Vec<String>]) -> String {
    let mut out = schema_line(kind);
    out.push('\n');
    for c in comments {
        let _ = writeln!(out, "# {c}");
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(r).expect("in-memory write");
    }
    out.push_str(std::str::from_utf8(&w.into_inner().expect("in-memory flush")).expect("utf-8"));
    out
}

// ---- points ----

pub const POINTS_HEADER: [&str; 4] = ["point_id", "object_id", "u", "v"];

pub fn points_to_string(cloud: &LabeledCloud) -> String {
    let rows: Vec<Vec<String>> = cloud
        .objects()
        .iter()
        .flat_map(|o| {
            o.points.iter().zip(&o.point_ids).map(move |(p, pid)| {
                vec![pid.clone(), o.id.clone(), fmt_real(p.u), fmt_real(p.v)]
            })
        })
        .collect();
    csv_text("points", &[], &POINTS_HEADER, &rows)
}

pub fn write_points(path: &Path, cloud: &LabeledCloud) -> Result<()> {
    atomic_write(path, points_to_string(cloud).as_bytes())
}

/// Objects appear in order of their first row; points keep file order
/// within each object.
pub fn read_points(path: &Path) -> Result<LabeledCloud> {
    let table = read_table(path, "points", &POINTS_HEADER)?;
    let mut objects: Vec<LabeledObject> = Vec::new();
    let mut by_id: HashMap<String, usize> = HashMap::new();
    for (line, rec) in &table.rows {
        let u = field_f64(path, *line, rec, 2, "u")?;
        let v = field_f64(path, *line, rec, 3, "v")?;
        let oid = rec[1].to_string();
        let k = *by_id.entry(oid.clone()).or_insert_with(|| {
            objects.push(LabeledObject {
                id: oid,
                points: Vec::new(),
                point_ids: Vec::new(),
            });
            objects.len() - 1
        });
        objects[k].points.push(ImagePoint::new(u, v));
        objects[k].point_ids.push(rec[0].to_string());
    }
    if objects.is_empty() {
        return Err(IoError::parse(path, 2, "no points"));
    }
    LabeledCloud::new(objects).map_err(|e| IoError::Validation(format!("{}: {e}", path.display())))
}

fn id_index(cloud: &LabeledCloud) -> HashMap<&str, usize> {
    (0..cloud.num_points()).map(|k| (cloud.point_id(k), k)).collect()
}

fn resolve(
    path: &Path,
    line: u64,
    ids: &HashMap<&str, usize>,
    id: &str,
    side: &str,
) -> Result<usize> {
    ids.get(id)
        .copied()
        .ok_or_else(|| IoError::parse(path, line, format!("unknown {side} point id {id:?}")))
}

// ---- calibration ----

type M3 = [[f64; 3]; 3];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CanonicalCalibration {
    #[serde(rename = "K_left")]
    pub k_left: M3,
    #[serde(rename = "K_right")]
    pub k_right: M3,
    #[serde(rename = "R")]
    pub r: M3,
    pub t: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneralCalibration {
    #[serde(rename = "K_left")]
    pub k_left: M3,
    #[serde(rename = "K_right")]
    pub k_right: M3,
    #[serde(rename = "R_left")]
    pub r_left: M3,
    pub t_left: [f64; 3],
    #[serde(rename = "R_right")]
    pub r_right: M3,
    pub t_right: [f64; 3],
}

/// Either the canonical relative pose or two world-to-camera poses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CalibrationFile {
    Canonical(CanonicalCalibration),
    General(GeneralCalibration),
}

fn mat(m: &M3) -> Matrix3<f64> {
    Matrix3::from_fn(|i, j| m[i][j])
}

fn rows_of(m: &Matrix3<f64>) -> M3 {
    std::array::from_fn(|i| std::array::from_fn(|j| m[(i, j)]))
}

impl CalibrationFile {
    pub fn from_rig(rig: &StereoRig) -> Self {
        let t = rig.translation();
        CalibrationFile::Canonical(CanonicalCalibration {
            k_left: rows_of(rig.k_left.matrix()),
            k_right: rows_of(rig.k_right.matrix()),
            r: rows_of(rig.rotation()),
            t: [t.x, t.y, t.z],
        })
    }

    pub fn to_rig(&self) -> std::result::Result<StereoRig, GeometryError> {
        match self {
            CalibrationFile::Canonical(c) => Ok(StereoRig::new(
                IntrinsicMatrix::new(mat(&c.k_left))?,
                IntrinsicMatrix::new(mat(&c.k_right))?,
                RelativePose::new(mat(&c.r), Vector3::from(c.t))?,
            )),
            CalibrationFile::General(g) => reduce_general_rig(
                IntrinsicMatrix::new(mat(&g.k_left))?,
                IntrinsicMatrix::new(mat(&g.k_right))?,
                &mat(&g.r_left),
                &mat(&g.r_right),
                &Vector3::from(g.t_left),
                &Vector3::from(g.t_right),
            ),
        }
    }
}

pub fn calibration_to_string(cal: &CalibrationFile) -> String {
    let body = toml::to_string(cal).expect("calibration serializes");
    format!("{}\n{body}", schema_line("calibration"))
}

pub fn write_calibration(path: &Path, cal: &CalibrationFile) -> Result<()> {
    atomic_write(path, calibration_to_string(cal).as_bytes())
}

pub fn read_calibration(path: &Path) -> Result<StereoRig> {
    let text = read_text(path)?;
    check_schema(path, &text, "calibration")?;
    let cal: CalibrationFile = toml::from_str(&text).map_err(|e| {
        let line = e
            .span()
            .map_or(0, |s| text[..s.start].matches('\n').count() as u64 + 1);
        IoError::parse(
            path,
            line,
            format!("expected canonical {{K_left, K_right, R, t}} or general {{K_left, K_right, R_left, t_left, R_right, t_right}}: {}", e.message()),
        )
    })?;
    cal.to_rig().map_err(|e| IoError::Calibration(e.to_string()))
}

/// SHA-256 over the canonical rig entries (K_l, K_r, R, t, row-major, 17
/// significant digits), hex encoded.
pub fn calibration_hash(rig: &StereoRig) -> String {
    let mut h = Sha256::new();
    for m in [rig.k_left.matrix(), rig.k_right.matrix(), rig.rotation()] {
        for i in 0..3 {
            for j in 0..3 {
                h.update(fmt_real(m[(i, j)]).as_bytes());
                h.update(b",");
            }
        }
    }
    for v in rig.translation().iter() {
        h.update(fmt_real(*v).as_bytes());
        h.update(b",");
    }
    h.finalize().iter().fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

// ---- cost matrix ----

#[derive(Debug, Clone, PartialEq)]
pub struct CostFile {
    pub costs: CostMatrix,
    pub left_ids: Vec<String>,
    pub right_ids: Vec<String>,
    /// `key = value` metadata lines, in file order.
    pub metadata: Vec<(String, String)>,
}

pub fn cost_metadata(spec: &DistanceSpec, rig: &StereoRig) -> Vec<(String, String)> {
    let mut meta = vec![("distance".to_string(), spec.name().to_string())];
    if let DistanceSpec::RegularizedRay(p) = spec {
        meta.push(("beta".into(), fmt_real(p.beta())));
        meta.push(("gamma_low".into(), fmt_real(p.gamma_low())));
        meta.push(("gamma_high".into(), fmt_real(p.gamma_high())));
    }
    meta.push(("calibration_sha256".into(), calibration_hash(rig)));
    meta
}

pub fn cost_to_string(f: &CostFile) -> String {
    let comments: Vec<String> = f
        .metadata
        .iter()
        .map(|(k, v)| format!("{k} = {v}"))
        .chain([
            format!("rows = {}", f.costs.rows()),
            format!("cols = {}", f.costs.cols()),
        ])
        .collect();
    let header: Vec<&str> = std::iter::once("left_point_id")
        .chain(f.right_ids.iter().map(String::as_str))
        .collect();
    let rows: Vec<Vec<String>> = (0..f.costs.rows())
        .map(|i| {
            std::iter::once(f.left_ids[i].clone())
                .chain(f.costs.row(i).iter().map(|&c| fmt_real(c)))
                .collect()
        })
        .collect();
    csv_text("cost", &comments, &header, &rows)
}

pub fn write_cost(path: &Path, f: &CostFile) -> Result<()> {
    atomic_write(path, cost_to_string(f).as_bytes())
}

pub fn read_cost(path: &Path) -> Result<CostFile> {
    let text = read_text(path)?;
    check_schema(path, &text, "cost")?;
    let metadata: Vec<(String, String)> = leading_comments(&text)
        .iter()
        .filter_map(|l| l.split_once(" = "))
        .filter(|(k, _)| *k != "rows" && *k != "cols")
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect();
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let header = rdr
        .headers()
        .map_err(|e| IoError::parse(path, 1, e.to_string()))?
        .clone();
    if header.get(0) != Some("left_point_id") {
        return Err(IoError::parse(path, 1, "first header column must be left_point_id"));
    }
    let right_ids: Vec<String> = header.iter().skip(1).map(String::from).collect();
    let mut left_ids = Vec::new();
    let mut values = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| IoError::parse(path, e.position().map_or(0, |p| p.line()), e.to_string()))?;
        let line = rec.position().map_or(0, |p| p.line());
        left_ids.push(rec[0].to_string());
        for j in 1..rec.len() {
            values.push(field_f64(path, line, &rec, j, &header[j])?);
        }
    }
    let costs = CostMatrix::new(left_ids.len(), right_ids.len(), values)
        .map_err(|e| IoError::Validation(e.to_string()))?;
    Ok(CostFile {
        costs,
        left_ids,
        right_ids,
        metadata,
    })
}

// ---- plans and matchings ----

pub const PLAN_HEADER: [&str; 3] = ["left_point_id", "right_point_id", "mass"];
pub const MATCHING_HEADER: [&str; 2] = ["left_point_id", "right_point_id"];

pub fn plan_to_string(plan: &TransportPlan, left: &LabeledCloud, right: &LabeledCloud) -> String {
    let rows: Vec<Vec<String>> = plan
        .entries()
        .iter()
        .map(|e| {
            vec![
                left.point_id(e.row).to_string(),
                right.point_id(e.col).to_string(),
                fmt_real(e.mass),
            ]
        })
        .collect();
    csv_text("plan", &[], &PLAN_HEADER, &rows)
}

pub fn write_plan(path: &Path, plan: &TransportPlan, left: &LabeledCloud, right: &LabeledCloud) -> Result<()> {
    atomic_write(path, plan_to_string(plan, left, right).as_bytes())
}

pub fn read_plan(path: &Path, left: &LabeledCloud, right: &LabeledCloud) -> Result<TransportPlan> {
    let table = read_table(path, "plan", &PLAN_HEADER)?;
    let (li, ri) = (id_index(left), id_index(right));
    let mut entries = Vec::with_capacity(table.rows.len());
    for (line, rec) in &table.rows {
        let mass = field_f64(path, *line, rec, 2, "mass")?;
        if mass <= 0.0 {
            return Err(IoError::parse(path, *line, "column mass: must be > 0"));
        }
        entries.push(PlanEntry {
            row: resolve(path, *line, &li, &rec[0], "left")?,
            col: resolve(path, *line, &ri, &rec[1], "right")?,
            mass,
        });
    }
    TransportPlan::from_entries(left.num_points(), right.num_points(), entries, None)
        .map_err(|e| IoError::Validation(e.to_string()))
}

/// Matching between two id lists (points or objects).
pub fn matching_to_string(m: &Matching, left_ids: &[&str], right_ids: &[&str]) -> String {
    let rows: Vec<Vec<String>> = m
        .pairs()
        .iter()
        .map(|&(i, j)| vec![left_ids[i].to_string(), right_ids[j].to_string()])
        .collect();
    let source = serde_json::to_value(m.source()).expect("enum serializes");
    csv_text(
        "matching",
        &[format!("source = {}", source.as_str().unwrap_or_default())],
        &MATCHING_HEADER,
        &rows,
    )
}

pub fn point_ids(cloud: &LabeledCloud) -> Vec<&str> {
    (0..cloud.num_points()).map(|k| cloud.point_id(k)).collect()
}

pub fn object_ids(cloud: &LabeledCloud) -> Vec<&str> {
    cloud.objects().iter().map(|o| o.id.as_str()).collect()
}

pub fn write_matching(path: &Path, m: &Matching, left_ids: &[&str], right_ids: &[&str]) -> Result<()> {
    atomic_write(path, matching_to_string(m, left_ids, right_ids).as_bytes())
}

pub fn read_matching(path: &Path, left_ids: &[&str], right_ids: &[&str]) -> Result<Matching> {
    let text = read_text(path)?;
    let source = leading_comments(&text)
        .iter()
        .find_map(|l| l.strip_prefix("source = "))
        .and_then(|s| serde_json::from_value::<MatchSource>(serde_json::Value::String(s.into())).ok())
        .unwrap_or(MatchSource::Ot);
    let table = read_table(path, "matching", &MATCHING_HEADER)?;
    let li: HashMap<&str, usize> = left_ids.iter().enumerate().map(|(k, &s)| (s, k)).collect();
    let ri: HashMap<&str, usize> = right_ids.iter().enumerate().map(|(k, &s)| (s, k)).collect();
    let mut pairs = Vec::with_capacity(table.rows.len());
    for (line, rec) in &table.rows {
        pairs.push((
            resolve(path, *line, &li, &rec[0], "left")?,
            resolve(path, *line, &ri, &rec[1], "right")?,
        ));
    }
    Matching::new(pairs, source).map_err(|e| IoError::Validation(format!("{}: {e}", path.display())))
}

// ---- ground truth ----

pub const GT_HEADER: [&str; 3] = ["kind", "left_id", "right_id"];

pub fn gt_to_string(
    gt: &GroundTruthCorrespondence,
    left: &LabeledCloud,
    right: &LabeledCloud,
) -> String {
    let (lo, ro) = (object_ids(left), object_ids(right));
    let rows: Vec<Vec<String>> = gt
        .point_pairs()
        .map(|(l, r)| vec!["point".into(), left.point_id(l).into(), right.point_id(r).into()])
        .chain(gt.object_pairs().map(|(l, r)| vec!["object".into(), lo[l].into(), ro[r].into()]))
        .collect();
    csv_text("gt", &[], &GT_HEADER, &rows)
}

pub fn write_gt(path: &Path, gt: &GroundTruthCorrespondence, left: &LabeledCloud, right: &LabeledCloud) -> Result<()> {
    atomic_write(path, gt_to_string(gt, left, right).as_bytes())
}

pub fn read_gt(path: &Path, left: &LabeledCloud, right: &LabeledCloud) -> Result<GroundTruthCorrespondence> {
    let table = read_table(path, "gt", &GT_HEADER)?;
    let (lp, rp) = (id_index(left), id_index(right));
    let lo: HashMap<&str, usize> = object_ids(left).into_iter().enumerate().map(|(k, s)| (s, k)).collect();
    let ro: HashMap<&str, usize> = object_ids(right).into_iter().enumerate().map(|(k, s)| (s, k)).collect();
    let (mut points, mut objects) = (Vec::new(), Vec::new());
    for (line, rec) in &table.rows {
        match &rec[0] {
            "point" => points.push((
                resolve(path, *line, &lp, &rec[1], "left")?,
                resolve(path, *line, &rp, &rec[2], "right")?,
            )),
            "object" => objects.push((
                *lo.get(&rec[1]).ok_or_else(|| IoError::parse(path, *line, format!("unknown left object id {:?}", &rec[1])))?,
                *ro.get(&rec[2]).ok_or_else(|| IoError::parse(path, *line, format!("unknown right object id {:?}", &rec[2])))?,
            )),
            other => {
                return Err(IoError::parse(path, *line, format!("column kind: {other:?} is neither point nor object")))
            }
        }
    }
    GroundTruthCorrespondence::new(&points, &objects).map_err(|e| IoError::Validation(e.to_string()))
}

// ---- triangulated points ----

pub const TRIANGULATED_HEADER: [&str; 6] = ["left_id", "right_id", "x", "y", "z", "in_front"];
pub const SKIPPED_HEADER: [&str; 3] = ["left_id", "right_id", "reason"];

#[derive(Debug, Clone, PartialEq)]
pub struct TriangulatedRow {
    pub left_id: String,
    pub right_id: String,
    pub point: Vector3<f64>,
    pub in_front: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SkippedRow {
    pub left_id: String,
    pub right_id: String,
    pub reason: String,
}

pub fn triangulated_to_string(rows: &[TriangulatedRow]) -> String {
    let rows: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.left_id.clone(),
                r.right_id.clone(),
                fmt_real(r.point.x),
                fmt_real(r.point.y),
                fmt_real(r.point.z),
                r.in_front.to_string(),
            ]
        })
        .collect();
    csv_text("triangulated", &[], &TRIANGULATED_HEADER, &rows)
}

pub fn skipped_to_string(rows: &[SkippedRow]) -> String {
    let rows: Vec<Vec<String>> = rows
        .iter()
        .map(|r| vec![r.left_id.clone(), r.right_id.clone(), r.reason.clone()])
        .collect();
    csv_text("skipped", &[], &SKIPPED_HEADER, &rows)
}

pub fn read_triangulated(path: &Path) -> Result<Vec<TriangulatedRow>> {
    let table = read_table(path, "triangulated", &TRIANGULATED_HEADER)?;
    table
        .rows
        .iter()
        .map(|(line, rec)| {
            let in_front = match &rec[5] {
                "true" => true,
                "false" => false,
                s => return Err(IoError::parse(path, *line, format!("column in_front: {s:?} is not a bool"))),
            };
            Ok(TriangulatedRow {
                left_id: rec[0].to_string(),
                right_id: rec[1].to_string(),
                point: Vector3::new(
                    field_f64(path, *line, rec, 2, "x")?,
                    field_f64(path, *line, rec, 3, "y")?,
                    field_f64(path, *line, rec, 4, "z")?,
                ),
                in_front,
            })
        })
        .collect()
}

// ---- world points (reference clouds for W2) ----

pub const WORLD_HEADER: [&str; 4] = ["point_id", "x", "y", "z"];

pub fn world_to_string(ids: &[&str], points: &[Vector3<f64>]) -> String {
    let rows: Vec<Vec<String>> = ids
        .iter()
        .zip(points)
        .map(|(id, p)| vec![id.to_string(), fmt_real(p.x), fmt_real(p.y), fmt_real(p.z)])
        .collect();
    csv_text("world", &[], &WORLD_HEADER, &rows)
}

pub fn read_world(path: &Path) -> Result<Vec<Vector3<f64>>> {
    let table = read_table(path, "world", &WORLD_HEADER)?;
    table
        .rows
        .iter()
        .map(|(line, rec)| {
            Ok(Vector3::new(
                field_f64(path, *line, rec, 1, "x")?,
                field_f64(path, *line, rec, 2, "y")?,
                field_f64(path, *line, rec, 3, "z")?,
            ))
        })
        .collect()
}

// ---- sweep ----

pub const SWEEP_HEADER: [&str; 10] = [
    "distance",
    "matcher",
    "sigma",
    "mismatch_mean_pct",
    "mismatch_std_pct",
    "w2_mean",
    "w2_std",
    "object_mismatch_mean_pct",
    "object_mismatch_std_pct",
    "n_scenes",
];

/// One row per (distance, matcher, σ). Std columns are population standard
/// deviations over scenes; W2 is the mass-normalized squared distance.
pub fn sweep_to_string(table: &SweepTable) -> String {
    let opt = |v: Option<f64>| v.map(fmt_real).unwrap_or_default();
    let rows: Vec<Vec<String>> = table
        .rows
        .iter()
        .map(|r| {
            vec![
                r.distance.as_str().into(),
                r.matcher.as_str().into(),
                fmt_real(r.sigma),
                fmt_real(r.mismatch_mean_pct),
                fmt_real(r.mismatch_std_pct),
                fmt_real(r.w2_mean),
                fmt_real(r.w2_std),
                opt(r.object_mismatch_mean_pct),
                opt(r.object_mismatch_std_pct),
                r.n_scenes.to_string(),
            ]
        })
        .collect();
    csv_text(
        "sweep",
        &["std = population over scenes; w2 = mass-normalized squared Wasserstein-2".into()],
        &SWEEP_HEADER,
        &rows,
    )
}

pub fn read_sweep_config(path: &Path) -> Result<SweepConfig> {
    let text = read_text(path)?;
    let cfg: SweepConfig = toml::from_str(&text).map_err(|e| {
        let line = e
            .span()
            .map_or(0, |s| text[..s.start].matches('\n').count() as u64 + 1);
        IoError::parse(path, line, e.message().to_string())
    })?;
    cfg.validate().map_err(|e| IoError::Validation(e.to_string()))?;
    Ok(cfg)
}

pub fn sweep_config_to_string(cfg: &SweepConfig) -> String {
    format!(
        "{}\n{}",
        schema_line("sweep-config"),
        toml::to_string(cfg).expect("config serializes")
    )
}

// ---- metrics ----

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricsFile {
    pub schema: String,
    pub tool_version: String,
    pub seed: Option<u64>,
    /// Echo of the inputs that produced the report.
    pub config: serde_json::Value,
    /// Always `"mass_normalized"`: optimal objective divided by moved mass.
    pub w2_normalization: String,
    #[serde(flatten)]
    pub report: MetricsReport,
}

impl MetricsFile {
    pub fn new(report: MetricsReport, seed: Option<u64>, config: serde_json::Value) -> Self {
        Self {
            schema: format!("stereo-ot/metrics {SCHEMA_VERSION}"),
            tool_version: env!("CARGO_PKG_VERSION").into(),
            seed,
            config,
            w2_normalization: "mass_normalized".into(),
            report,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let rate = |v: f64| (0.0..=1.0).contains(&v);
        if self.schema != format!("stereo-ot/metrics {SCHEMA_VERSION}") {
            return Err(IoError::Validation(format!("unknown metrics schema {:?}", self.schema)));
        }
        if !rate(self.report.pointwise_mismatch) || !self.report.objectwise_mismatch.map_or(true, rate) {
            return Err(IoError::Validation("mismatch rates must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

pub fn metrics_to_string(m: &MetricsFile) -> String {
    let mut s = serde_json::to_string_pretty(m).expect("metrics serialize");
    s.push('\n');
    s
}

pub fn read_metrics(path: &Path) -> Result<MetricsFile> {
    let text = read_text(path)?;
    let m: MetricsFile = serde_json::from_str(&text)
        .map_err(|e| IoError::parse(path, e.line() as u64, e.to_string()))?;
    m.validate()?;
    Ok(m)
}

// ---- plot ----

/// Mismatch-vs-σ curves, one panel per distance, one polyline per matcher.
/// σ is placed at equal spacing, as in a table.
pub fn sweep_svg(table: &SweepTable) -> String {
    let mut distances: Vec<_> = table.rows.iter().map(|r| r.distance).collect();
    distances.dedup();
    distances.sort();
    distances.dedup();
    let mut sigmas: Vec<f64> = table.rows.iter().map(|r| r.sigma).collect();
    sigmas.sort_by(f64::total_cmp);
    sigmas.dedup();
    let colors = ["#1b9e77", "#d95f02", "#7570b3"];
    let (pw, ph, pad) = (260.0, 200.0, 40.0);
    let width = pad + distances.len() as f64 * (pw + pad);
    let height = ph + 2.5 * pad;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let xs = |k: usize| {
        if sigmas.len() <= 1 {
            pw / 2.0
        } else {
            pw * k as f64 / (sigmas.len() - 1) as f64
        }
    };
    for (p, d) in distances.iter().enumerate() {
        let x0 = pad + p as f64 * (pw + pad);
        let y0 = pad;
        let _ = writeln!(
            s,
            r#"<g transform="translate({x0},{y0})"><rect width="{pw}" height="{ph}" fill="none" stroke="black"/><text x="{}" y="-8" text-anchor="middle">{}</text>"#,
            pw / 2.0,
            d.as_str()
        );
        for pct in [0, 50, 100] {
            let y = ph * (1.0 - pct as f64 / 100.0);
            let _ = writeln!(s, r#"<text x="-4" y="{y}" text-anchor="end">{pct}%</text>"#);
        }
        for (k, sg) in sigmas.iter().enumerate() {
            let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{sg}</text>"#, xs(k), ph + 14.0);
        }
        let mut matchers: Vec<_> = table.rows.iter().filter(|r| r.distance == *d).map(|r| r.matcher).collect();
        matchers.sort();
        matchers.dedup();
        for (c, mt) in matchers.iter().enumerate() {
            let pts: Vec<String> = sigmas
                .iter()
                .enumerate()
                .filter_map(|(k, sg)| {
                    table.row(*d, *mt, *sg).map(|r| {
                        format!("{:.2},{:.2}", xs(k), ph * (1.0 - r.mismatch_mean_pct / 100.0))
                    })
                })
                .collect();
            let color = colors[c % colors.len()];
            let _ = writeln!(
                s,
                r#"<polyline fill="none" stroke="{color}" stroke-width="2" points="{}"/><text x="{}" y="{}" fill="{color}">{}</text>"#,
                pts.join(" "),
                pw - 40.0,
                14.0 + 13.0 * c as f64,
                mt.as_str()
            );
        }
        let _ = writeln!(s, "</g>");
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">noise sigma (pointwise mismatch, mean over scenes)</text>"#,
        width / 2.0,
        height - 8.0
    );
    s.push_str("</svg>\n");
    s
}
