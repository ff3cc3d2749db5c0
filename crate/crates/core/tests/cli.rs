mod common;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn eucl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_eucl")).args(args).output().unwrap()
}

fn run_all(scenario: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![
        "all",
        "--scenario",
        scenario.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ];
    args.extend_from_slice(extra);
    let o = eucl(&args);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    o
}

/// Report lines without the output paths, which depend on the temp dir.
fn report(o: &Output) -> String {
    String::from_utf8(o.stdout.clone())
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with("wrote "))
        .map(|l| format!("{l}\n"))
        .collect()
}

fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().to_string_lossy().into_owned(),
                fs::read(e.path()).unwrap(),
            )
        })
        .collect();
    v.sort();
    v
}

fn golden_dir(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/golden")
        .join(name)
}

/// Compares the artifacts of `eucl all` with the stored copies.
/// `EUCL_BLESS=1` rewrites them instead.
fn check_golden(name: &str) {
    let tmp = tempfile::tempdir().unwrap();
    let o = run_all(&common::scenario(&format!("{name}.toml")), tmp.path(), &[]);
    let mut produced = files(tmp.path());
    produced.push(("report.txt".into(), report(&o).into_bytes()));
    produced.sort();
    let dir = golden_dir(name);
    if std::env::var("EUCL_BLESS").is_ok_and(|v| v == "1") {
        let _ = fs::remove_dir_all(&dir);
        fs::create_dir_all(&dir).unwrap();
        for (f, bytes) in &produced {
            fs::write(dir.join(f), bytes).unwrap();
        }
        return;
    }
    let stored = files(&dir);
    let names = |v: &[(String, Vec<u8>)]| v.iter().map(|x| x.0.clone()).collect::<Vec<_>>();
    assert_eq!(
        names(&produced),
        names(&stored),
        "artifact set differs from {}",
        dir.display()
    );
    for ((f, a), (_, b)) in produced.iter().zip(&stored) {
        assert!(a == b, "{name}/{f} differs from the golden copy");
    }
}

#[test]
fn natural_matches_golden() {
    check_golden("natural");
}

#[test]
fn purified_matches_golden() {
    check_golden("purified");
}

#[test]
fn reruns_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let scenario = common::scenario("natural.toml");
    let oa = run_all(&scenario, a.path(), &["--seed", "5"]);
    let ob = run_all(&scenario, b.path(), &["--seed", "5"]);
    assert_eq!(report(&oa), report(&ob));
    assert_eq!(files(a.path()), files(b.path()));
    let c = tempfile::tempdir().unwrap();
    run_all(&scenario, c.path(), &["--seed", "6"]);
    let blockade = |d: &Path| fs::read(d.join("blockade.json")).unwrap();
    assert_ne!(blockade(a.path()), blockade(c.path()));
}

#[test]
fn csv_format_and_plots() {
    let tmp = tempfile::tempdir().unwrap();
    run_all(
        &common::scenario("purified.toml"),
        tmp.path(),
        &["--format", "csv", "--plots"],
    );
    let names: Vec<String> = files(tmp.path()).into_iter().map(|f| f.0).collect();
    assert!(names.iter().all(|n| !n.ends_with(".json")), "{names:?}");
    assert!(names.contains(&"pump.csv".to_string()));
    assert!(names.contains(&"spectrum.gp".to_string()));
    let pump = fs::read_to_string(tmp.path().join("pump.csv")).unwrap();
    assert!(pump.starts_with("key,value\n"));
    assert!(pump.lines().any(|l| l.starts_with("global_fraction,")));
}

#[test]
fn plot_subcommand_writes_script() {
    let tmp = tempfile::tempdir().unwrap();
    let csv = tmp.path().join("curve.csv");
    fs::write(&csv, "delta_mhz,n_g3\n0,0.5\n1,0.6\n").unwrap();
    let o = eucl(&["plot", csv.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let gp = fs::read_to_string(tmp.path().join("curve.gp")).unwrap();
    assert!(gp.contains("curve.csv"));
    let bad = tmp.path().join("other.csv");
    fs::write(&bad, "a,b\n").unwrap();
    assert_eq!(eucl(&["plot", bad.to_str().unwrap()]).status.code(), Some(1));
}

#[test]
fn purified_fit_widths() {
    let tmp = tempfile::tempdir().unwrap();
    let scenario = common::scenario("purified.toml");
    let o = eucl(&[
        "spectrum",
        "--scenario",
        scenario.to_str().unwrap(),
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value =
        serde_json::from_slice(&fs::read(tmp.path().join("spectrum_fit.json")).unwrap()).unwrap();
    let peaks = v["fit"]["peaks"].as_array().unwrap();
    let allowed = v["transitions"]
        .as_object()
        .unwrap()
        .values()
        .flat_map(|t| t.as_array().unwrap())
        .filter(|t| t["strength"].as_f64().unwrap() > 0.0)
        .count();
    assert_eq!(peaks.len(), allowed);
    for p in peaks {
        let w = p["fwhm"].as_f64().unwrap();
        assert!((w - 25.0).abs() <= 0.5, "{w}");
    }
}

/// Writes a copy of the purified scenario with `from` replaced by `to`.
fn edited(dir: &Path, from: &str, to: &str) -> PathBuf {
    let text = fs::read_to_string(common::scenario("purified.toml")).unwrap();
    assert!(text.contains(from));
    let p = dir.join("edited.toml");
    fs::write(&p, text.replacen(from, to, 1)).unwrap();
    p
}

fn exit_code(scenario: &Path, out: &Path) -> (Option<i32>, String) {
    let o = eucl(&[
        "all",
        "--scenario",
        scenario.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    (o.status.code(), String::from_utf8_lossy(&o.stderr).into_owned())
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let help = eucl(&["--help"]);
    assert_eq!(help.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&help.stdout).contains("spectrum"));
    assert_eq!(eucl(&["nonsense"]).status.code(), Some(1));
    assert_eq!(eucl(&["all"]).status.code(), Some(1));
    assert_eq!(exit_code(&tmp.path().join("missing.toml"), &out).0, Some(1));

    let (code, err) = exit_code(
        &edited(tmp.path(), "t1_s = 2.0e-3", "t1_s = 2.0e-3\nbeta = [0.5, 0.6, 0.1]"),
        &out,
    );
    assert_eq!(code, Some(1));
    assert!(err.contains("beta"), "{err}");
    let (code, err) = exit_code(&edited(tmp.path(), "t1_s = 2.0e-3", "t1_s = 2.0e-3\nbogus = 1"), &out);
    assert_eq!(code, Some(1));
    assert!(err.contains("bogus"), "{err}");
    assert_eq!(
        exit_code(&edited(tmp.path(), "t1_s = 2.0e-3", "t1_s = -1.0"), &out).0,
        Some(1)
    );
    assert!(!out.exists());

    // output directory path taken by a regular file
    let blocker = tmp.path().join("blocker");
    fs::write(&blocker, "").unwrap();
    assert_eq!(exit_code(&common::scenario("purified.toml"), &blocker).0, Some(2));
}
