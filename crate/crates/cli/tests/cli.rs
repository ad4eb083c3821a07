use serde_json::Value;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_qhgeo"));
    c.env_remove("QHGEO_THREADS");
    c
}

fn run(out: &Path, args: &[&str]) -> Output {
    bin().arg("--out").arg(out).args(args).output().unwrap()
}

fn json(path: PathBuf) -> Value {
    serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap()
}

fn spec(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p.display().to_string()
}

fn disk(dir: &Path) -> String {
    spec(dir, "disk.toml", "kind = \"disk\"\ncenter = [0.0, 0.0]\nradius = 1.0\n")
}

fn square(dir: &Path) -> String {
    spec(dir, "square.toml", "kind = \"square\"\nmin = [0.0, 0.0]\nmax = [1.0, 1.0]\n")
}

#[test]
fn whitney_writes_cubes_and_manifest() {
    let t = tempfile::tempdir().unwrap();
    let out = t.path().join("w");
    let o = run(&out, &["whitney", "--domain", &square(t.path()), "--h", "1/64", "--max-level", "5"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let m = json(out.join("manifest.json"));
    assert_eq!(m["status"], "ok");
    assert_eq!(m["config"]["command"], "whitney");
    assert_eq!(m["config"]["grid"]["h"], 1.0 / 64.0);
    assert_eq!(m["config"]["max_level"], 5);
    let rep = json(out.join("report.json"));
    for check in ["disjoint", "distance", "adjacency", "coverage"] {
        assert_eq!(rep[check]["passed"], true, "{check}");
    }
    let cubes = std::fs::read_to_string(out.join("cubes.txt")).unwrap();
    assert_eq!(cubes.lines().count() - 1, rep["cubes"].as_u64().unwrap() as usize);
    let pgm = std::fs::read(out.join("levels.pgm")).unwrap();
    assert!(pgm.starts_with(b"P5\n"));
}

#[test]
fn approximate_csv_is_reproducible_and_replayable() {
    let t = tempfile::tempdir().unwrap();
    let d = disk(t.path());
    let args = ["approximate", "--domain", &d, "--h", "1/128", "--u", "power:0.1", "--p", "2", "--m", "4..5"];
    let (a, b) = (t.path().join("a"), t.path().join("b"));
    assert!(run(&a, &args).status.success());
    assert!(run(&b, &args).status.success());
    let csv_a = std::fs::read(a.join("convergence.csv")).unwrap();
    assert_eq!(csv_a, std::fs::read(b.join("convergence.csv")).unwrap());
    let text = String::from_utf8(csv_a.clone()).unwrap();
    assert!(text.starts_with("m,h,err_total,err_lp,err_grad,localized_energy,lip_um\n"));
    assert_eq!(text.lines().count(), 3);

    let r = t.path().join("r");
    let o = run(&r, &["replay", a.join("manifest.json").to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(csv_a, std::fs::read(r.join("convergence.csv")).unwrap());
    assert_eq!(json(r.join("manifest.json"))["config"], json(a.join("manifest.json"))["config"]);
}

#[test]
fn energy_terms_follow_the_normalisation() {
    let t = tempfile::tempdir().unwrap();
    let out = t.path().join("e");
    let o = run(&out, &["counterexample", "energy", "--p", "3", "--q", "3", "--N", "40"]);
    assert!(o.status.success());
    let mut rdr = csv::Reader::from_path(out.join("energy.csv")).unwrap();
    assert_eq!(rdr.headers().unwrap(), vec!["i", "term", "partial_sum", "closed_form_ratio"]);
    let mut sum = 0.0;
    for rec in rdr.records() {
        let rec = rec.unwrap();
        let i: f64 = rec[0].parse().unwrap();
        let term: f64 = rec[1].parse().unwrap();
        sum += term;
        assert!((rec[2].parse::<f64>().unwrap() - sum).abs() < 1e-12);
        if i >= 10.0 {
            assert!((term * i * i - 1.0).abs() < 1e-9, "i = {i}: {term}");
        }
    }
}

#[test]
fn bad_arguments_exit_2_with_record() {
    let t = tempfile::tempdir().unwrap();
    let d = disk(t.path());
    let out = t.path().join("x");
    let o = run(&out, &["approximate", "--domain", &d, "--h", "0.3", "--u", "power:0.1", "--p", "2", "--m", "4..5"]);
    assert_eq!(o.status.code(), Some(2));
    let rec: Value = serde_json::from_slice(o.stderr.trim_ascii()).unwrap();
    assert_eq!(rec["kind"], "usage");
    assert_eq!(json(out.join("error.json"))["exit_code"], 2);
    assert_eq!(json(out.join("manifest.json"))["status"], "error");

    // u outside W^{1,p}
    let o = run(&out, &["approximate", "--domain", &d, "--h", "1/64", "--u", "power:0.1", "--p", "3", "--m", "4"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(bin().arg("bogus").output().unwrap().status.code(), Some(2));
    assert_eq!(run(&out, &["--threads", "0", "counterexample", "cantor", "--p", "3"]).status.code(), Some(2));
}

#[test]
fn library_failures_exit_1_with_kind() {
    let t = tempfile::tempdir().unwrap();
    let out = t.path().join("f");
    let o = run(&out, &["decompose", "--domain", &disk(t.path()), "--h", "1/128", "--m", "2"]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(json(out.join("error.json"))["kind"], "m-too-small");

    let o = run(&out, &["counterexample", "domain3d", "--p", "3", "--depth", "4", "--h", "1/16", "--strict"]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(json(out.join("error.json"))["kind"], "resolution-too-coarse");
}

#[test]
fn decompose_label_grid() {
    let t = tempfile::tempdir().unwrap();
    let out = t.path().join("d");
    let o = bin()
        .env("QHGEO_THREADS", "1")
        .arg("-o")
        .arg(&out)
        .args(["decompose", "--domain", &disk(t.path()), "--h", "1/128", "--m", "4"])
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let bytes = std::fs::read(out.join("labels.u32")).unwrap();
    let labels: Vec<u32> = bytes.chunks(4).map(|c| u32::from_le_bytes(c.try_into().unwrap())).collect();
    let rep = json(out.join("report.json"));
    let count = |l: u32| labels.iter().filter(|&&x| x == l).count() as u64;
    assert_eq!(count(1), rep["omega_cells"].as_u64().unwrap());
    assert!(count(2) > 0);
    assert!(labels.iter().all(|&l| l <= 4));
}

#[test]
fn metric_and_geodesic() {
    let t = tempfile::tempdir().unwrap();
    let sq = square(t.path());
    let out = t.path().join("q");
    let o = run(&out, &["qh-dist", "--domain", &sq, "--h", "1/256", "--a", "0.5,0.1", "--b", "0.5,0.2"]);
    assert!(o.status.success());
    let d = json(out.join("distance.json"));
    assert!((d["qh"].as_f64().unwrap() / std::f64::consts::LN_2 - 1.0).abs() < 0.05);
    assert!((d["euclidean"].as_f64().unwrap() - 0.1).abs() < 1e-12);

    let o = run(&out, &["geodesic", "--domain", &sq, "--h", "1/64", "--a", "0.2,0.2", "--b", "0.8,0.8"]);
    assert!(o.status.success());
    let g = json(out.join("geodesic.json"));
    let rows = csv::Reader::from_path(out.join("geodesic.csv")).unwrap().records().count();
    assert!(rows >= 2);
    assert!(g["euclidean_length"].as_f64().unwrap() >= 0.6 * 2f64.sqrt() - 1.0 / 64.0);
}

#[test]
fn cantor_trace_and_curve() {
    let t = tempfile::tempdir().unwrap();
    let out = t.path().join("c");
    assert!(run(&out, &["counterexample", "cantor", "--p", "3", "--depth", "8"]).status.success());
    let c = json(out.join("cantor.json"));
    assert!(c["pidef_residual"].as_f64().unwrap() < 1e-12);
    let fat = std::fs::read_to_string(out.join("fat.txt")).unwrap();
    assert!(!fat.is_empty());

    assert!(run(&out, &["counterexample", "trace", "--p", "3", "--depth", "8"]).status.success());
    assert_eq!(json(out.join("trace.json"))["variation"], 1.0);

    let args = ["counterexample", "curve", "--p", "3", "--q", "4", "--depth", "8", "--pairs", "5", "--seed", "3"];
    assert!(run(&out, &args).status.success());
    let first = std::fs::read(out.join("curve.csv")).unwrap();
    assert!(run(&out, &args).status.success());
    assert_eq!(first, std::fs::read(out.join("curve.csv")).unwrap());
    let s = json(out.join("curve.json"));
    assert!(s["constant"].as_f64().unwrap().is_finite());
}
