use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use hvl_core::image::Image;
use tempfile::TempDir;

fn hvl() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_hvl"));
    c.env_remove("HVL_THREADS");
    c
}

fn run(args: &[&str]) -> Output {
    hvl().args(args).output().expect("binary runs")
}

fn text(b: &[u8]) -> String {
    String::from_utf8_lossy(b).into_owned()
}

fn value<'a>(report: &'a str, key: &str) -> &'a str {
    report
        .lines()
        .find_map(|l| l.strip_prefix(key).and_then(|r| r.strip_prefix(": ")))
        .unwrap_or_else(|| panic!("no `{key}` in\n{report}"))
}

/// The cornell scene at `size`², written next to absolute OBJ paths.
fn small_cornell(dir: &Path, size: usize) -> PathBuf {
    let assets = Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/assets");
    let src = std::fs::read_to_string(assets.join("cornell.toml")).unwrap();
    let text = src
        .replace("obj = \"cornell/", &format!("obj = \"{}/cornell/", assets.display()))
        .replace("width = 64", &format!("width = {size}"))
        .replace("height = 64", &format!("height = {size}"));
    let path = dir.join("cornell_small.toml");
    std::fs::write(&path, text).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn direct_mode_writes_an_image_with_no_indirect_time() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("d.pfm");
    let o = run(&["--scene", "cornell", "--mode", "direct", "--out", s(&out)]);
    assert!(o.status.success(), "{}", text(&o.stderr));
    let report = text(&o.stdout);
    assert_eq!(value(&report, "mode"), "direct");
    assert_eq!(value(&report, "time_indirect_ms"), "0.000");
    assert_eq!(value(&report, "hvl_count"), "0");
    let img = Image::load(&out).unwrap();
    assert_eq!((img.width(), img.height()), (64, 64));
    assert!(img.pixels().iter().any(|p| p[0] > 0.0));
}

#[test]
fn parse_errors_exit_with_two() {
    for args in [
        vec![],
        vec!["--scene", "cornell", "--mode", "photon"],
        vec!["--scene", "cornell", "--radius", "fixed:abc"],
        vec!["--scene", "cornell", "--bands-gather", "0"],
        vec!["--scene", "cornell", "--frobnicate"],
    ] {
        let o = run(&args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        assert!(text(&o.stderr).contains("Usage"), "{args:?}");
    }
}

#[test]
fn runtime_errors_exit_with_one() {
    let dir = TempDir::new().unwrap();
    let o = run(&["--scene", "no_such_scene", "--out", s(&dir.path().join("x.pfm"))]);
    assert_eq!(o.status.code(), Some(1));
    assert!(text(&o.stderr).starts_with("error:"));

    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "[[lights]]\nposition = 3\n").unwrap();
    let o = run(&["--scene", s(&bad), "--out", s(&dir.path().join("x.pfm"))]);
    assert_eq!(o.status.code(), Some(1));

    let o = run(&["--scene", "cornell", "--mode", "direct", "--out", s(&dir.path().join("x.exr"))]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn mismatched_reference_is_rejected() {
    let dir = TempDir::new().unwrap();
    let reference = dir.path().join("ref.pfm");
    let mut file = std::fs::File::create(&reference).unwrap();
    Image::new(8, 8).write_pfm(&mut file).unwrap();
    let o = run(&["--scene", "cornell", "--mode", "direct", "--out", s(&dir.path().join("x.pfm")), "--reference", s(&reference)]);
    assert_eq!(o.status.code(), Some(1));
    let err = text(&o.stderr);
    assert!(err.contains("8×8") && err.contains("64×64"), "{err}");
}

#[test]
fn reference_metrics_and_report_file() {
    let dir = TempDir::new().unwrap();
    let scene = small_cornell(dir.path(), 16);
    let first = dir.path().join("a.pfm");
    let o = run(&["--scene", s(&scene), "--hvl-count", "64", "--out", s(&first)]);
    assert!(o.status.success(), "{}", text(&o.stderr));
    assert_eq!(value(&text(&o.stdout), "rmse"), "none");

    let report = dir.path().join("report.json");
    let o = run(&[
        "--scene", s(&scene), "--hvl-count", "64", "--out", s(&dir.path().join("b.pfm")),
        "--reference", s(&first), "--report", s(&report),
    ]);
    assert!(o.status.success(), "{}", text(&o.stderr));
    let written = std::fs::read_to_string(&report).unwrap();
    assert_eq!(written, text(&o.stdout));
    assert_eq!(value(&written, "rmse"), "0.000000");
    assert_eq!(value(&written, "psnr_db"), "99.000");
    assert_eq!(value(&written, "ssim"), "1.000000");
    assert_eq!(value(&written, "hvl_count"), "64");
    assert_eq!(value(&written, "bands_gather"), "5");
    let total: f64 = value(&written, "time_total_ms").parse().unwrap();
    let stages: f64 = ["rsm", "distribute", "tables", "direct", "indirect"]
        .iter()
        .map(|k| value(&written, &format!("time_{k}_ms")).parse::<f64>().unwrap())
        .sum();
    assert!(total >= stages - 1.0, "{total} < {stages}");
}

#[test]
fn every_mode_runs() {
    let dir = TempDir::new().unwrap();
    let scene = small_cornell(dir.path(), 8);
    for mode in ["hvl", "hvl-zh", "vpl", "vsl", "path", "direct"] {
        let out = dir.path().join(format!("{mode}.ppm"));
        let o = run(&[
            "--scene", s(&scene), "--mode", mode, "--hvl-count", "25", "--path-samples", "8",
            "--vsl-samples", "4", "--out", s(&out),
        ]);
        assert!(o.status.success(), "{mode}: {}", text(&o.stderr));
        assert_eq!(Image::load(&out).unwrap().width(), 8);
    }
}

#[test]
fn hvl_dump_has_one_row_per_light() {
    let dir = TempDir::new().unwrap();
    let scene = small_cornell(dir.path(), 8);
    let csv = dir.path().join("hvls.csv");
    let o = run(&[
        "--scene", s(&scene), "--hvl-count", "50", "--radius", "r1", "--out", s(&dir.path().join("x.pfm")),
        "--dump-hvls", s(&csv),
    ]);
    assert!(o.status.success(), "{}", text(&o.stderr));
    let dump = std::fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = dump.lines().collect();
    // 50 requested → a 7 × 7 grid
    assert_eq!(lines.len(), 1 + 49);
    assert!(lines[0].starts_with("index,px,py,pz"));
    assert_eq!(value(&text(&o.stdout), "radius"), "r1");
}

#[test]
fn few_lights_warn_on_stderr() {
    let dir = TempDir::new().unwrap();
    let scene = small_cornell(dir.path(), 8);
    let o = run(&["--scene", s(&scene), "--hvl-count", "4", "--out", s(&dir.path().join("x.pfm"))]);
    assert!(o.status.success());
    assert!(text(&o.stderr).contains("warning:"));
    assert_eq!(value(&text(&o.stdout), "warnings"), "1");
}

#[test]
fn thread_count_from_environment_and_determinism() {
    let dir = TempDir::new().unwrap();
    let scene = small_cornell(dir.path(), 16);
    let render = |name: &str, threads: Option<&str>, env: Option<&str>| {
        let out = dir.path().join(name);
        let mut c = hvl();
        c.args(["--scene", s(&scene), "--mode", "vsl", "--hvl-count", "100", "--seed", "9", "--out", s(&out)]);
        if let Some(t) = threads {
            c.args(["--threads", t]);
        }
        if let Some(e) = env {
            c.env("HVL_THREADS", e);
        }
        let o = c.output().unwrap();
        assert!(o.status.success(), "{}", text(&o.stderr));
        (std::fs::read(&out).unwrap(), text(&o.stdout))
    };
    let (a, ra) = render("a.pfm", Some("1"), None);
    let (b, _) = render("b.pfm", Some("1"), None);
    let (c, rc) = render("c.pfm", None, Some("1"));
    let (d, rd) = render("d.pfm", Some("3"), Some("1"));
    assert_eq!(value(&ra, "threads"), "1");
    assert_eq!(value(&rc, "threads"), "1");
    assert_eq!(value(&rd, "threads"), "3");
    assert_eq!(a, b);
    assert_eq!(a, c);
    assert_eq!(a, d);
}

#[test]
fn more_gather_bands_take_longer() {
    let dir = TempDir::new().unwrap();
    let time = |bands: &str| {
        (0..3)
            .map(|_| {
                let o = run(&[
                    "--scene", "cornell", "--hvl-count", "400", "--bands-gather", bands, "--threads", "1",
                    "--out", s(&dir.path().join("x.pfm")),
                ]);
                assert!(o.status.success());
                value(&text(&o.stdout), "time_indirect_ms").parse::<f64>().unwrap()
            })
            .fold(f64::INFINITY, f64::min)
    };
    let (t5, t9) = (time("5"), time("9"));
    println!("indirect gather: {t5:.1} ms at 5 bands, {t9:.1} ms at 9 bands");
    assert!(t9 > t5);
}
