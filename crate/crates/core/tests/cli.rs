use std::fs;
use std::path::{Path, PathBuf};

use stereo_ot::cli::main_with_args;

fn run(args: &[&str]) -> i32 {
    let mut all = vec!["stereo-ot"];
    all.extend_from_slice(args);
    main_with_args(all)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

struct Scene {
    dir: tempfile::TempDir,
}

impl Scene {
    fn new(seed: &str, sigma: &str) -> Self {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("scene");
        assert_eq!(run(&["scene", "--out-dir", s(&out), "--seed", seed, "--sigma", sigma]), 0);
        Scene { dir }
    }

    fn file(&self, name: &str) -> PathBuf {
        self.dir.path().join("scene").join(name)
    }

    fn out(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn input<'a>(&'a self, paths: &'a mut Vec<String>) -> Vec<&'a str> {
        paths.clear();
        for (flag, f) in [("--left", "left.csv"), ("--right", "right.csv"), ("--calib", "calib.toml")] {
            paths.push(flag.to_string());
            paths.push(self.file(f).to_str().unwrap().to_string());
        }
        paths.iter().map(String::as_str).collect()
    }
}

fn data_lines(path: &Path) -> Vec<String> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(str::to_string)
        .collect()
}

fn metrics(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn write_points(path: &Path, rows: &[(&str, u32, f64, f64)]) {
    let mut text = String::from("point_id,object_id,u,v\n");
    for (id, obj, u, v) in rows {
        text.push_str(&format!("{id},{obj},{u},{v}\n"));
    }
    fs::write(path, text).unwrap();
}

fn write_identity_calib(path: &Path) {
    fs::write(
        path,
        "K_left = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]\n\
         K_right = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]\n\
         R = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]\n\
         t = [-1.0, 0.0, 0.0]\n",
    )
    .unwrap();
}

#[test]
fn noise_free_ot_matching_equals_ground_truth() {
    let sc = Scene::new("5", "0");
    let mut buf = Vec::new();
    let mut args = vec!["match"];
    args.extend(sc.input(&mut buf));
    let m = sc.out("m.csv");
    let plan = sc.out("plan.csv");
    args.extend(["--distance", "ray", "--matcher", "ot", "--matching-out", s(&m), "--plan-out", s(&plan)]);
    assert_eq!(run(&args), 0);
    let pairs = data_lines(&m);
    assert_eq!(pairs.len(), 50);
    for p in &pairs {
        let (l, r) = p.split_once(',').unwrap();
        assert_eq!(l, r);
    }
    let mass: f64 = data_lines(&plan)
        .iter()
        .map(|l| l.rsplit(',').next().unwrap().parse::<f64>().unwrap())
        .sum();
    assert!((mass - 1.0).abs() < 1e-12);

    let e = sc.out("e.json");
    let mut args = vec!["evaluate"];
    let (left, right, gt, calib) =
        (sc.file("left.csv"), sc.file("right.csv"), sc.file("gt.csv"), sc.file("calib.toml"));
    args.extend(["--left", s(&left), "--right", s(&right), "--pred", s(&m), "--gt", s(&gt)]);
    args.extend(["--calib", s(&calib), "--out", s(&e)]);
    assert_eq!(run(&args), 0);
    let v = metrics(&e);
    assert_eq!(v["pointwise_mismatch"].as_f64().unwrap(), 0.0);
    assert!(v["w2_squared"].as_f64().unwrap() < 1e-20);
}

#[test]
fn reg_without_gamma_is_a_usage_error() {
    let sc = Scene::new("1", "0");
    let mut buf = Vec::new();
    let mut args = vec!["cost"];
    args.extend(sc.input(&mut buf));
    let out = sc.out("c.json");
    args.extend(["--distance", "reg", "--beta", "10", "--gamma2", "3.5", "--out", s(&out)]);
    assert_eq!(run(&args), 2);
    assert!(!out.exists());
}

#[test]
fn mass_with_ot_is_a_usage_error() {
    let sc = Scene::new("1", "0");
    let mut buf = Vec::new();
    let mut args = vec!["match"];
    args.extend(sc.input(&mut buf));
    let m = sc.out("m.csv");
    args.extend(["--distance", "ray", "--matcher", "ot", "--mass", "0.5", "--matching-out", s(&m)]);
    assert_eq!(run(&args), 2);
}

#[test]
fn pot_mass_out_of_range_is_infeasible() {
    let sc = Scene::new("1", "0");
    let mut buf = Vec::new();
    let mut args = vec!["match"];
    args.extend(sc.input(&mut buf));
    let m = sc.out("m.csv");
    args.extend(["--distance", "ray", "--matcher", "pot", "--mass", "1.5", "--matching-out", s(&m)]);
    assert_eq!(run(&args), 3);
}

#[test]
fn missing_input_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.csv");
    let calib = dir.path().join("calib.toml");
    write_identity_calib(&calib);
    let out = dir.path().join("c.json");
    let code = run(&[
        "cost", "--left", s(&missing), "--right", s(&missing), "--calib", s(&calib),
        "--distance", "ray", "--out", s(&out),
    ]);
    assert_eq!(code, 4);
}

#[test]
fn pot_default_mass_matches_every_point_of_the_smaller_side() {
    let dir = tempfile::tempdir().unwrap();
    let (left, right, calib) =
        (dir.path().join("l.csv"), dir.path().join("r.csv"), dir.path().join("c.toml"));
    write_identity_calib(&calib);
    let ids: Vec<String> = (0..468).map(|i| format!("p{i}")).collect();
    let rows: Vec<(&str, u32, f64, f64)> = ids
        .iter()
        .enumerate()
        .map(|(i, id)| (id.as_str(), 0, (i % 26) as f64 * 0.01 - 0.1, (i / 26) as f64 * 0.01 - 0.1))
        .collect();
    write_points(&left, &rows);
    let shifted: Vec<(&str, u32, f64, f64)> =
        rows.iter().step_by(6).take(70).map(|&(id, o, u, v)| (id, o, u - 0.3, v)).collect();
    write_points(&right, &shifted);
    let m = dir.path().join("m.csv");
    let code = run(&[
        "match", "--left", s(&left), "--right", s(&right), "--calib", s(&calib),
        "--distance", "ray", "--matcher", "pot", "--matching-out", s(&m),
    ]);
    assert_eq!(code, 0);
    assert_eq!(data_lines(&m).len(), 70);
}

#[test]
fn hot_rejects_unequal_object_counts_and_hot_pot_accepts_them() {
    let dir = tempfile::tempdir().unwrap();
    let (left, right, calib) =
        (dir.path().join("l.csv"), dir.path().join("r.csv"), dir.path().join("c.toml"));
    write_identity_calib(&calib);
    write_points(&left, &[("a", 0, 0.0, 0.0), ("b", 1, 0.1, 0.1), ("c", 2, 0.2, -0.1)]);
    write_points(
        &right,
        &[("a", 0, -0.3, 0.0), ("b", 1, -0.2, 0.1), ("c", 2, -0.1, -0.1), ("d", 3, 0.1, 0.2)],
    );
    let out = dir.path().join("out");
    let base = ["--left", s(&left), "--right", s(&right), "--calib", s(&calib), "--distance", "ray"];
    let mut args = vec!["match-objects"];
    args.extend(base);
    args.extend(["--mode", "hot", "--out-dir", s(&out)]);
    assert_eq!(run(&args), 2);

    let mut args = vec!["match-objects"];
    args.extend(base);
    args.extend(["--mode", "hot-pot", "--out-dir", s(&out)]);
    assert_eq!(run(&args), 0);
    let objects = data_lines(&out.join("object_matching.csv"));
    assert_eq!(objects.len(), 3);
    assert!(out.join("global_plan.csv").exists());
}

#[test]
fn noise_free_hot_recovers_objects() {
    let sc = Scene::new("9", "0");
    let mut buf = Vec::new();
    let mut args = vec!["match-objects"];
    args.extend(sc.input(&mut buf));
    let out = sc.out("hot");
    args.extend(["--distance", "ray", "--mode", "hot", "--out-dir", s(&out)]);
    assert_eq!(run(&args), 0);
    for line in data_lines(&out.join("object_matching.csv")) {
        let (l, r) = line.split_once(',').unwrap();
        assert_eq!(l, r);
    }
    for line in data_lines(&out.join("matching.csv")) {
        let (l, r) = line.split_once(',').unwrap();
        assert_eq!(l, r);
    }
}

#[test]
fn triangulation_round_trip_through_files() {
    let sc = Scene::new("2", "0");
    let m = sc.out("m.csv");
    let mut buf = Vec::new();
    let mut args = vec!["match"];
    args.extend(sc.input(&mut buf));
    args.extend(["--distance", "ray", "--matcher", "ot", "--matching-out", s(&m)]);
    assert_eq!(run(&args), 0);

    let t = sc.out("t.csv");
    let mut args = vec!["triangulate"];
    args.extend(sc.input(&mut buf));
    args.extend(["--matching", s(&m), "--out", s(&t)]);
    assert_eq!(run(&args), 0);

    let world: std::collections::HashMap<String, [f64; 3]> = data_lines(&sc.file("world.csv"))
        .iter()
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[0].to_string(), [f[1].parse().unwrap(), f[2].parse().unwrap(), f[3].parse().unwrap()])
        })
        .collect();
    let rows = data_lines(&t);
    assert_eq!(rows.len(), 50);
    for l in rows {
        let f: Vec<&str> = l.split(',').collect();
        let w = world[f[0]];
        let p: Vec<f64> = f[2..5].iter().map(|x| x.parse().unwrap()).collect();
        let err = ((p[0] - w[0]).powi(2) + (p[1] - w[1]).powi(2) + (p[2] - w[2]).powi(2)).sqrt();
        let norm = (w[0] * w[0] + w[1] * w[1] + w[2] * w[2]).sqrt();
        assert!(err <= 1e-8 * norm, "{err}");
        assert_eq!(f[5], "true");
    }
}

#[test]
fn evaluate_worked_example_and_empty_prediction() {
    let dir = tempfile::tempdir().unwrap();
    let (left, right) = (dir.path().join("l.csv"), dir.path().join("r.csv"));
    let pts = [("a", 0, 0.0, 0.0), ("b", 0, 0.1, 0.0), ("c", 0, 0.2, 0.0), ("d", 0, 0.3, 0.0)];
    write_points(&left, &pts);
    write_points(&right, &pts);
    let gt = dir.path().join("gt.csv");
    fs::write(&gt, "kind,left_id,right_id\npoint,a,a\npoint,b,b\npoint,c,c\npoint,d,d\n").unwrap();
    let pred = dir.path().join("p.csv");
    fs::write(&pred, "left_point_id,right_point_id\na,a\nb,b\nc,d\nd,c\n").unwrap();
    let e = dir.path().join("e.json");
    let code = run(&[
        "evaluate", "--left", s(&left), "--right", s(&right), "--pred", s(&pred), "--gt", s(&gt),
        "--out", s(&e),
    ]);
    assert_eq!(code, 0);
    assert_eq!(metrics(&e)["pointwise_mismatch"].as_f64().unwrap(), 0.5);

    fs::write(&pred, "left_point_id,right_point_id\n").unwrap();
    let code = run(&[
        "evaluate", "--left", s(&left), "--right", s(&right), "--pred", s(&pred), "--gt", s(&gt),
        "--out", s(&e),
    ]);
    assert_eq!(code, 0);
    assert_eq!(metrics(&e)["pointwise_mismatch"].as_f64().unwrap(), 1.0);
}

#[test]
fn sweep_writes_one_row_per_cell() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep");
    let code = run(&["sweep", "--out", s(&out), "--n-scenes", "3", "--sigmas", "0,0.01", "--plot"]);
    assert_eq!(code, 0);
    // 3 distances x 3 matchers x 2 noise levels
    assert_eq!(data_lines(&out.join("sweep.csv")).len(), 18);
    assert!(out.join("sweep.svg").exists());
    assert!(out.join("config.toml").exists());
}
