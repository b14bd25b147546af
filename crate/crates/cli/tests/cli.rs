use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn certjulia(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_certjulia")).args(args).output().expect("binary runs")
}

fn preset(dir: &Path, name: &str) -> PathBuf {
    let out = dir.join(name);
    let o = certjulia(&["preset", name, "--out-dir", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    out
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn shipped_data_matches_presets() {
    let tmp = tempfile::tempdir().unwrap();
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data");
    for name in ["circle", "segment"] {
        let dir = preset(tmp.path(), name);
        for file in ["map.json", "cert.json", "u.cover", "julia_approx.cover"] {
            let fresh = std::fs::read(dir.join(file)).unwrap();
            let shipped = std::fs::read(data.join(name).join(file)).unwrap();
            assert!(fresh == shipped, "data/{name}/{file} is stale; regenerate with `certjulia preset {name}`");
        }
    }
}

#[test]
fn validate_then_render() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = preset(tmp.path(), "circle");
    let (map, cert) = (dir.join("map.json"), dir.join("cert.json"));
    let o = certjulia(&["validate", "--map", s(&map), "--cert", s(&cert)]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stdout).contains("overall: pass"));

    let pgm = tmp.path().join("patch.pgm");
    let stats = tmp.path().join("stats.csv");
    let o = certjulia(&["render", "--map", s(&map), "--cert", s(&cert), "--region", "0.9,-0.05,1.1,0.05", "--n", "8", "--threads", "2", "--out", s(&pgm), "--stats", s(&stats)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let bytes = std::fs::read(&pgm).unwrap();
    assert!(bytes.starts_with(b"P4\n# certified n=8\n"));
    let bm = certjulia::Bitmap::from_pgm(&bytes).unwrap();
    assert_eq!((bm.width, bm.height), (207, 105));
    // the column of pixel centers on the circle is filled
    assert!(bm.get(103, 52));
    assert!(bm.count() > 0);
    let csv = std::fs::read_to_string(&stats).unwrap();
    assert!(csv.contains("certified,true") && csv.contains("errors,0"));
}

#[test]
fn invalid_certificate_is_refused_unless_allowed() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = preset(tmp.path(), "circle");
    let cert = dir.join("cert.json");
    let text = std::fs::read_to_string(&cert).unwrap();
    // K1 must equal eps / 4
    let bad = text.replacen("\"1*2^-10\"", "\"1*2^-9\"", 1);
    assert_ne!(bad, text);
    std::fs::write(&cert, bad).unwrap();
    let map = dir.join("map.json");
    let o = certjulia(&["validate", "--map", s(&map), "--cert", s(&cert)]);
    assert_eq!(o.status.code(), Some(2));
    let out = tmp.path().join("x.pgm");
    let args = ["render", "--map", s(&map), "--cert", s(&cert), "--region", "0.99,0,1,0.01", "--n", "8", "--out", s(&out)];
    assert_eq!(certjulia(&args).status.code(), Some(2));
    let mut allowed = args.to_vec();
    allowed.push("--allow-unvalidated");
    let o = certjulia(&allowed);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stderr).contains("unvalidated"));
}

#[test]
fn baseline_modes_are_labelled() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = preset(tmp.path(), "segment");
    let map = dir.join("map.json");
    for (mode, label) in [("escape", "# UNCERTIFIED escape-time"), ("dem", "# UNCERTIFIED distance-estimator")] {
        let out = tmp.path().join(format!("{mode}.pgm"));
        let o = certjulia(&["render", "--map", s(&map), "--mode", mode, "--region", "-2.5,-0.5,2.5,0.5", "--n", "4", "--out", s(&out)]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        assert!(std::fs::read(&out).unwrap().starts_with(format!("P4\n{label}").as_bytes()));
    }
}

#[test]
fn usage_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = preset(tmp.path(), "circle");
    let out = tmp.path().join("x.pgm");
    let o = certjulia(&["render", "--map", s(&dir.join("map.json")), "--region", "0,0,1,1", "--n", "8", "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("--cert"));
    assert_eq!(certjulia(&["preset", "nope", "--out-dir", s(tmp.path())]).status.code(), Some(1));
}

#[test]
fn bench_and_check() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = preset(tmp.path(), "circle");
    let pts = tmp.path().join("points.txt");
    std::fs::write(&pts, "# near the circle\n1,0\n0,1.0001220703125\n0.5,0.5\n").unwrap();
    let o = certjulia(&["bench", "--map", s(&dir.join("map.json")), "--cert", s(&dir.join("cert.json")), "--points", s(&pts), "--n-list", "8,12"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = String::from_utf8_lossy(&o.stdout);
    assert!(csv.lines().count() >= 3, "{csv}");
    let o = certjulia(&["bench", "--map", s(&dir.join("map.json")), "--cert", s(&dir.join("cert.json")), "--points", s(&pts), "--n-list", "4"]);
    assert_eq!(o.status.code(), Some(1));

    let o = certjulia(&["check", "circle", "--n-list", "8,9", "--per-n", "400"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("0 violations"));
}
