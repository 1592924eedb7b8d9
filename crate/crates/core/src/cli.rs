//! Command-line surface. `stereo-ot <command> --help` lists the flags.
//!
//! Exit codes: 0 success, 2 parse or validation error, 3 infeasible or
//! degenerate problem, 4 I/O failure.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use crate::evaluation::{
    objectwise_mismatch, pointwise_mismatch, reconstruct, w2_squared, EvalError, MetricsReport,
};
use crate::geometry::{pairwise_cost, triangulate, DepthRegParams, DistanceSpec, GeometryError};
use crate::hierarchy::{hierarchical_match, HierarchyError, LabeledCloud, ObjectMode};
use crate::io::{self, CostFile, IoError, MetricsFile, SkippedRow, TriangulatedRow};
use crate::simulation::{run_sweep, sample_scene, SimulationError, SweepConfig};
use crate::transport::{
    binarize, default_mass, naive_match, solve_ot, solve_pot, MarginalWeights, MatchSource,
    Matching, TransportError,
};

/// Environment variable naming the default sweep config file.
pub const CONFIG_ENV: &str = "STEREO_OT_CONFIG";

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Io(#[from] IoError),
    #[error("validation failed: {0}")]
    Validation(String),
    #[error(transparent)]
    Transport(#[from] TransportError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Simulation(#[from] SimulationError),
}

impl From<HierarchyError> for CliError {
    fn from(e: HierarchyError) -> Self {
        match e {
            HierarchyError::Transport(t) => CliError::Transport(t),
            HierarchyError::InvalidCloud(m) => CliError::Validation(m),
        }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(IoError::Io { .. }) => 4,
            CliError::Io(_) | CliError::Validation(_) => 2,
            CliError::Transport(
                TransportError::ShapeMismatch(_)
                | TransportError::NonFiniteCost { .. }
                | TransportError::Empty
                | TransportError::InvalidWeights(_),
            ) => 2,
            CliError::Transport(_) => 3,
            CliError::Geometry(
                GeometryError::InvalidIntrinsics(_)
                | GeometryError::InvalidRotation(_)
                | GeometryError::InvalidDepthReg(_),
            ) => 2,
            CliError::Geometry(_) => 3,
            CliError::Simulation(SimulationError::InvalidConfig(_)) => 2,
            CliError::Simulation(_) => 3,
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "stereo-ot", version, about = "Stereo keypoint matching with optimal transport")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write the pairwise cost matrix between two point files.
    Cost(CostArgs),
    /// Match two point files (naive, OT, or partial OT).
    Match(MatchArgs),
    /// Match labeled point files object by object (HOT or HOT-POT).
    MatchObjects(MatchObjectsArgs),
    /// Triangulate matched pairs into 3D points.
    Triangulate(TriangulateArgs),
    /// Score a predicted matching against ground truth.
    Evaluate(EvaluateArgs),
    /// Run the spheres simulation sweep.
    Sweep(SweepArgs),
    /// Write one synthetic spheres scene as input files.
    Scene(SceneArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DistanceKind {
    Epi,
    Ray,
    Reg,
}

#[derive(Debug, Clone, Args)]
pub struct InputArgs {
    #[arg(long)]
    pub left: PathBuf,
    #[arg(long)]
    pub right: PathBuf,
    #[arg(long)]
    pub calib: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct DistanceArgs {
    #[arg(long, value_enum)]
    pub distance: DistanceKind,
    /// Penalty weight for `reg`.
    #[arg(long)]
    pub beta: Option<f64>,
    /// Lower depth bound for `reg`.
    #[arg(long)]
    pub gamma1: Option<f64>,
    /// Upper depth bound for `reg`.
    #[arg(long)]
    pub gamma2: Option<f64>,
}

impl DistanceArgs {
    pub fn spec(&self) -> Result<DistanceSpec> {
        let need = |v: Option<f64>, flag: &str| {
            v.ok_or_else(|| CliError::Validation(format!("--distance reg requires --{flag}")))
        };
        match self.distance {
            DistanceKind::Epi => Ok(DistanceSpec::Epipolar),
            DistanceKind::Ray => Ok(DistanceSpec::Ray),
            DistanceKind::Reg => Ok(DistanceSpec::RegularizedRay(DepthRegParams::new(
                need(self.beta, "beta")?,
                need(self.gamma1, "gamma1")?,
                need(self.gamma2, "gamma2")?,
            )?)),
        }
    }
}

#[derive(Debug, Args)]
pub struct CostArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub distance: DistanceArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PointMatcher {
    Naive,
    Ot,
    Pot,
}

#[derive(Debug, Args)]
pub struct MatchArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub distance: DistanceArgs,
    #[arg(long, value_enum)]
    pub matcher: PointMatcher,
    /// Transported mass for `pot`; defaults to min(N, M) / max(N, M).
    #[arg(long)]
    pub mass: Option<f64>,
    /// Plan output (not written for `naive`).
    #[arg(long)]
    pub plan_out: Option<PathBuf>,
    #[arg(long)]
    pub matching_out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ObjectMatcher {
    Hot,
    HotPot,
}

#[derive(Debug, Args)]
pub struct MatchObjectsArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub distance: DistanceArgs,
    #[arg(long, value_enum)]
    pub mode: ObjectMatcher,
    /// Receives object_plan.csv, object_matching.csv, global_plan.csv and
    /// matching.csv.
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct TriangulateArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Matching file; give this or --plan.
    #[arg(long, conflicts_with = "plan", required_unless_present = "plan")]
    pub matching: Option<PathBuf>,
    /// Plan file; pairs are taken from its binarization.
    #[arg(long)]
    pub plan: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Skipped pairs; defaults to `<out>.skipped.csv`.
    #[arg(long)]
    pub skipped_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub left: PathBuf,
    #[arg(long)]
    pub right: PathBuf,
    /// Predicted point matching.
    #[arg(long)]
    pub pred: PathBuf,
    /// Predicted object matching, scored against the object rows of --gt.
    #[arg(long)]
    pub pred_objects: Option<PathBuf>,
    #[arg(long)]
    pub gt: PathBuf,
    /// Enables W2 scoring.
    #[arg(long)]
    pub calib: Option<PathBuf>,
    /// Reference 3D cloud for W2; by default the triangulated ground-truth
    /// pairs.
    #[arg(long, requires = "calib")]
    pub world: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Sweep config (TOML); falls back to $STEREO_OT_CONFIG, then defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Also write sweep.svg.
    #[arg(long)]
    pub plot: bool,
    #[arg(long)]
    pub n_scenes: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_delimiter = ',')]
    pub sigmas: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
pub struct SceneArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = 0)]
    pub index: usize,
    #[arg(long, default_value_t = 0.0)]
    pub sigma: f64,
    /// Receives left.csv, right.csv, calib.toml, gt.csv and world.csv.
    #[arg(long)]
    pub out_dir: PathBuf,
}

struct Inputs {
    left: LabeledCloud,
    right: LabeledCloud,
    rig: crate::geometry::StereoRig,
}

fn load(input: &InputArgs) -> Result<Inputs> {
    Ok(Inputs {
        left: io::read_points(&input.left)?,
        right: io::read_points(&input.right)?,
        rig: io::read_calibration(&input.calib)?,
    })
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| {
        CliError::Io(IoError::Io {
            path: dir.to_path_buf(),
            source: e,
        })
    })
}

pub fn cmd_cost(a: &CostArgs) -> Result<()> {
    let spec = a.distance.spec()?;
    let inp = load(&a.input)?;
    let costs = pairwise_cost(&inp.rig, &spec, &inp.left.flat_points(), &inp.right.flat_points())?;
    let f = CostFile {
        costs,
        left_ids: io::point_ids(&inp.left).into_iter().map(String::from).collect(),
        right_ids: io::point_ids(&inp.right).into_iter().map(String::from).collect(),
        metadata: io::cost_metadata(&spec, &inp.rig),
    };
    io::write_cost(&a.out, &f)?;
    Ok(())
}

pub fn cmd_match(a: &MatchArgs) -> Result<()> {
    if a.mass.is_some() && a.matcher != PointMatcher::Pot {
        return Err(CliError::Validation("--mass is only valid with --matcher pot".into()));
    }
    let spec = a.distance.spec()?;
    let inp = load(&a.input)?;
    let c = pairwise_cost(&inp.rig, &spec, &inp.left.flat_points(), &inp.right.flat_points())?;
    let (n, m) = (c.rows(), c.cols());
    let (plan, matching) = match a.matcher {
        PointMatcher::Naive => (None, naive_match(&c)),
        PointMatcher::Ot => {
            let plan = solve_ot(&c, &MarginalWeights::uniform(n, m))?;
            let mt = binarize(&plan, MatchSource::Ot);
            (Some(plan), mt)
        }
        PointMatcher::Pot => {
            let plan = solve_pot(&c, a.mass.unwrap_or_else(|| default_mass(n, m)))?;
            let mt = binarize(&plan, MatchSource::Pot);
            (Some(plan), mt)
        }
    };
    if let (Some(plan), Some(path)) = (&plan, &a.plan_out) {
        io::write_plan(path, plan, &inp.left, &inp.right)?;
    }
    io::write_matching(&a.matching_out, &matching, &io::point_ids(&inp.left), &io::point_ids(&inp.right))?;
    Ok(())
}

pub fn cmd_match_objects(a: &MatchObjectsArgs) -> Result<()> {
    let spec = a.distance.spec()?;
    let inp = load(&a.input)?;
    let mode = match a.mode {
        ObjectMatcher::Hot => ObjectMode::Balanced,
        ObjectMatcher::HotPot => ObjectMode::Partial,
    };
    let h = hierarchical_match(&inp.rig, &spec, &inp.left, &inp.right, mode)?;
    ensure_dir(&a.out_dir)?;
    let (lo, ro) = (io::object_ids(&inp.left), io::object_ids(&inp.right));
    let object_plan_rows: Vec<Vec<String>> = h
        .object_plan
        .entries()
        .iter()
        .map(|e| vec![lo[e.row].to_string(), ro[e.col].to_string(), io::fmt_real(e.mass)])
        .collect();
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["left_object_id", "right_object_id", "mass"]).expect("in-memory write");
    for r in &object_plan_rows {
        w.write_record(r).expect("in-memory write");
    }
    let body = String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8");
    io::atomic_write(
        &a.out_dir.join("object_plan.csv"),
        format!("# stereo-ot/object-plan {}\n{body}", io::SCHEMA_VERSION).as_bytes(),
    )?;
    io::write_matching(&a.out_dir.join("object_matching.csv"), &h.object_matching, &lo, &ro)?;
    io::write_plan(&a.out_dir.join("global_plan.csv"), &h.global.to_transport_plan(), &inp.left, &inp.right)?;
    io::write_matching(
        &a.out_dir.join("matching.csv"),
        &h.point_matching,
        &io::point_ids(&inp.left),
        &io::point_ids(&inp.right),
    )?;
    Ok(())
}

pub fn cmd_triangulate(a: &TriangulateArgs) -> Result<()> {
    let inp = load(&a.input)?;
    let (lid, rid) = (io::point_ids(&inp.left), io::point_ids(&inp.right));
    let matching: Matching = match (&a.matching, &a.plan) {
        (Some(p), _) => io::read_matching(p, &lid, &rid)?,
        (None, Some(p)) => binarize(&io::read_plan(p, &inp.left, &inp.right)?, MatchSource::Pot),
        (None, None) => return Err(CliError::Validation("give --matching or --plan".into())),
    };
    let (xs, ys) = (inp.left.flat_points(), inp.right.flat_points());
    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    for &(i, j) in matching.pairs() {
        match triangulate(&inp.rig, &xs[i], &ys[j]) {
            Ok(t) => rows.push(TriangulatedRow {
                left_id: lid[i].into(),
                right_id: rid[j].into(),
                point: t.point.0,
                in_front: t.in_front,
            }),
            Err(e) => skipped.push(SkippedRow {
                left_id: lid[i].into(),
                right_id: rid[j].into(),
                reason: e.to_string(),
            }),
        }
    }
    let skipped_path = a.skipped_out.clone().unwrap_or_else(|| {
        let mut s = a.out.clone().into_os_string();
        s.push(".skipped.csv");
        PathBuf::from(s)
    });
    io::atomic_write(&a.out, io::triangulated_to_string(&rows).as_bytes())?;
    io::atomic_write(&skipped_path, io::skipped_to_string(&skipped).as_bytes())?;
    Ok(())
}

pub fn cmd_evaluate(a: &EvaluateArgs) -> Result<()> {
    let left = io::read_points(&a.left)?;
    let right = io::read_points(&a.right)?;
    let (lid, rid) = (io::point_ids(&left), io::point_ids(&right));
    let pred = io::read_matching(&a.pred, &lid, &rid)?;
    let gt = io::read_gt(&a.gt, &left, &right)?;
    let (n, m) = (left.num_points(), right.num_points());
    let objectwise = match &a.pred_objects {
        Some(p) => {
            let po = io::read_matching(p, &io::object_ids(&left), &io::object_ids(&right))?;
            Some(objectwise_mismatch(&po, &gt, left.num_objects(), right.num_objects()))
        }
        None => None,
    };
    let mut w2 = None;
    let mut skipped = 0;
    if let Some(cal) = &a.calib {
        let rig = io::read_calibration(cal)?;
        let (xs, ys) = (left.flat_points(), right.flat_points());
        let rec = reconstruct(&rig, &pred, &xs, &ys);
        skipped = rec.skipped.len();
        let reference = match &a.world {
            Some(p) => io::read_world(p)?,
            None => {
                let gt_pairs = Matching::new(gt.point_pairs().collect(), MatchSource::Ot)?;
                reconstruct(&rig, &gt_pairs, &xs, &ys).points.iter().map(|w| w.0).collect()
            }
        };
        let ours: Vec<_> = rec.points.iter().map(|w| w.0).collect();
        if !ours.is_empty() && !reference.is_empty() {
            w2 = Some(w2_squared(&ours, &reference)?);
        }
    }
    let report = MetricsReport {
        pointwise_mismatch: pointwise_mismatch(&pred, &gt, n, m),
        objectwise_mismatch: objectwise,
        w2_squared: w2,
        matched_count: pred.len(),
        skipped_triangulations: skipped,
    };
    let config = serde_json::json!({
        "pred": a.pred.display().to_string(),
        "gt": a.gt.display().to_string(),
        "left_points": n,
        "right_points": m,
    });
    let file = MetricsFile::new(report, a.seed, config);
    file.validate()?;
    io::atomic_write(&a.out, io::metrics_to_string(&file).as_bytes())?;
    Ok(())
}

fn base_config(explicit: Option<&Path>) -> Result<SweepConfig> {
    let env = std::env::var_os(CONFIG_ENV).map(PathBuf::from);
    match explicit.map(Path::to_path_buf).or(env) {
        Some(p) => Ok(io::read_sweep_config(&p)?),
        None => Ok(SweepConfig::default()),
    }
}

pub fn cmd_sweep(a: &SweepArgs) -> Result<()> {
    let mut cfg = base_config(a.config.as_deref())?;
    if let Some(n) = a.n_scenes {
        cfg.n_scenes = n;
    }
    if let Some(s) = a.seed {
        cfg.base_seed = s;
    }
    if let Some(s) = &a.sigmas {
        cfg.sigmas = s.clone();
    }
    cfg.validate()?;
    let table = run_sweep(&cfg)?;
    ensure_dir(&a.out)?;
    io::atomic_write(&a.out.join("sweep.csv"), io::sweep_to_string(&table).as_bytes())?;
    io::atomic_write(&a.out.join("config.toml"), io::sweep_config_to_string(&cfg).as_bytes())?;
    if a.plot {
        io::atomic_write(&a.out.join("sweep.svg"), io::sweep_svg(&table).as_bytes())?;
    }
    Ok(())
}

pub fn cmd_scene(a: &SceneArgs) -> Result<()> {
    let mut cfg = base_config(a.config.as_deref())?;
    if let Some(s) = a.seed {
        cfg.base_seed = s;
    }
    if !(a.sigma.is_finite() && a.sigma >= 0.0) {
        return Err(CliError::Validation("--sigma must be >= 0".into()));
    }
    cfg.validate()?;
    let scene = sample_scene(&cfg, a.index, a.sigma)?;
    ensure_dir(&a.out_dir)?;
    io::write_points(&a.out_dir.join("left.csv"), &scene.left)?;
    io::write_points(&a.out_dir.join("right.csv"), &scene.right)?;
    io::write_calibration(&a.out_dir.join("calib.toml"), &io::CalibrationFile::from_rig(&scene.rig.rig))?;
    io::write_gt(&a.out_dir.join("gt.csv"), &scene.gt, &scene.left, &scene.right)?;
    let world: Vec<_> = scene.rig_points.iter().map(|w| w.0).collect();
    io::atomic_write(
        &a.out_dir.join("world.csv"),
        io::world_to_string(&io::point_ids(&scene.left), &world).as_bytes(),
    )?;
    Ok(())
}

pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Cost(a) => cmd_cost(a),
        Command::Match(a) => cmd_match(a),
        Command::MatchObjects(a) => cmd_match_objects(a),
        Command::Triangulate(a) => cmd_triangulate(a),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Scene(a) => cmd_scene(a),
    }
}

/// Parses `args` (including the program name) and runs; returns the exit
/// code. Errors go to stderr.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
