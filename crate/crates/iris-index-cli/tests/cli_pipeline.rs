//! End-to-end tests of the command-line pipeline: chained subcommands,
//! the image path (normalize/extract), exit codes, and configuration
//! precedence.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use iris_index::io::{read_key_portion, write_manifest, write_pgm_gray, Manifest, ManifestRow};
use iris_index::keyextract::extract_key;
use iris_index::model::Stage;
use iris_index::normalize::unwrap;
use iris_index::synth::{gen_eye_image, ImagePattern};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_iris-index")
}

fn run(args: &[&str]) -> Output {
    Command::new(bin())
        .args(args)
        .output()
        .expect("spawn iris-index")
}

fn run_ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "command {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> String {
    p.to_str().unwrap().to_string()
}

#[test]
fn synthetic_pipeline_from_synth_to_bench() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    run_ok(&[
        "synth", "--eyes", "60", "--dim-true", "4", "--samples", "3", "--noise", "0.02",
        "--seed", "7", "--out", &s(&data),
    ]);
    assert!(data.join("manifest.csv").is_file());

    let pre = dir.path().join("pre");
    let report = dir.path().join("report.csv");
    let stdout = run_ok(&[
        "preprocess", "--in", &s(&data.join("samples")), "--out", &s(&pre),
        "--report", &s(&report),
    ]);
    assert!(stdout.contains("kept=180 discarded=0"), "stdout: {stdout}");
    let report_text = std::fs::read_to_string(&report).unwrap();
    assert_eq!(report_text.lines().count(), 181); // header + one row per key

    let avg = dir.path().join("avg");
    run_ok(&["average", "--in", &s(&pre), "--out", &s(&avg)]);
    assert_eq!(std::fs::read_dir(&avg).unwrap().count(), 60);

    let dim_csv = dir.path().join("dim.csv");
    let stdout = run_ok(&["dim", "--in", &s(&data.join("averages")), "--out", &s(&dim_csv)]);
    assert!(stdout.starts_with("lo_pct,hi_pct,dimension\n"));
    assert_eq!(stdout.lines().count(), 13); // header + 12 ranges
    assert_eq!(std::fs::read_to_string(&dim_csv).unwrap(), stdout);

    let map = dir.path().join("map.iicm");
    run_ok(&["fit", "--in", &s(&avg), "--dim", "4", "--out", &s(&map)]);
    let db = dir.path().join("db.csv");
    run_ok(&["enroll", "--map", &s(&map), "--in", &s(&avg), "--out", &s(&db)]);

    let pens = dir.path().join("pens.csv");
    let hist = dir.path().join("hist.csv");
    let stdout = run_ok(&[
        "bench", "--map", &s(&map), "--db", &s(&db), "--in", &s(&pre),
        "--out-samples", &s(&pens), "--out-hist", &s(&hist),
    ]);
    let p: f64 = stdout.trim().strip_prefix("P=").unwrap().parse().unwrap();
    assert!((1.0 / 60.0..=1.0).contains(&p), "P = {p}");
    let pens_text = std::fs::read_to_string(&pens).unwrap();
    assert_eq!(pens_text.lines().count(), 181);
    let hist_text = std::fs::read_to_string(&hist).unwrap();
    assert_eq!(hist_text.lines().count(), 101);
    let total: u64 = hist_text
        .lines()
        .skip(1)
        .map(|l| l.rsplit(',').next().unwrap().parse::<u64>().unwrap())
        .sum();
    assert_eq!(total, 180);

    // query one known sample: its own eye should be found immediately
    let key = data.join("samples").join("synth_0001_L_s000.ikp");
    let stdout = run_ok(&["query", "--map", &s(&map), "--db", &s(&db), "--key", &s(&key)]);
    let first = stdout.lines().next().unwrap();
    let c: usize = first.strip_prefix("C=").unwrap().parse().unwrap();
    assert!((1..=60).contains(&c));
    // with batch 1 the candidate listing stops exactly at the match
    assert_eq!(stdout.lines().count(), 2 + c);

    let sweep_csv = dir.path().join("sweep.csv");
    let stdout = run_ok(&[
        "sweep", "--averages", &s(&avg), "--samples", &s(&pre),
        "--dims", "2..4", "--out", &s(&sweep_csv),
    ]);
    let ps: Vec<f64> = stdout
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert_eq!(ps.len(), 3);
    assert!(ps[0] > ps[1] && ps[1] > ps[2], "sweep not decreasing: {ps:?}");
}

#[test]
fn image_pipeline_normalize_then_extract() {
    let dir = tempfile::tempdir().unwrap();
    let img_dir = dir.path().join("images");
    std::fs::create_dir_all(&img_dir).unwrap();

    let mut rows = Vec::new();
    let mut originals = Vec::new();
    for i in 0..4u64 {
        let (image, pupil, iris) = gen_eye_image(
            400,
            ImagePattern::Radial,
            (200.0, 200.0),
            40.0 + i as f64,
            150.0,
            i,
        )
        .unwrap();
        let name = format!("eye{i}.pgm");
        write_pgm_gray(&img_dir.join(&name), 400, 400, image.pixels()).unwrap();
        rows.push(ManifestRow {
            sample_id: format!("s{i:02}"),
            label: iris_index::model::parse_label(&format!("subj{i:02}_L")).unwrap(),
            path: format!("images/{name}"),
            circles: Some((pupil, iris)),
        });
        originals.push((image, pupil, iris));
    }
    let manifest_path = dir.path().join("manifest.csv");
    write_manifest(&manifest_path, &Manifest::new(rows, true).unwrap()).unwrap();

    let norm_dir = dir.path().join("normalized");
    let stdout = run_ok(&["normalize", "--manifest", &s(&manifest_path), "--out", &s(&norm_dir)]);
    assert!(stdout.contains("wrote 4"));

    let keys_dir = dir.path().join("keys");
    run_ok(&["extract", "--in", &s(&norm_dir), "--out", &s(&keys_dir), "--offset-cols", "128"]);

    // the checkpointed path equals the library path run on the stored
    // (8-bit quantized) image, bit for bit through the format chain
    let (_, pupil, iris) = &originals[2];
    let (w, h, pixels) = iris_index::io::read_pgm_gray(&img_dir.join("eye2.pgm")).unwrap();
    let stored = iris_index::normalize::EyeImage::new(
        w,
        h,
        pixels,
        iris_index::model::parse_label("subj02_L").unwrap(),
        "s02",
    )
    .unwrap();
    let norm = unwrap(&stored, pupil, iris).unwrap();
    let expected = extract_key(&norm, 128).unwrap();
    let key = read_key_portion(&keys_dir.join("s02.ikp")).unwrap();
    assert_eq!(key.stage(), Stage::Raw);
    assert_eq!(key.label().to_string(), "subj02_L");
    for (a, b) in key.values().iter().zip(expected.values()) {
        // normalized-iris PGM quantization, then the f32 key file
        let through_formats = ((b * 255.0).round() / 255.0) as f32 as f64;
        assert_eq!(*a, through_formats, "{a} vs {b}");
    }
}

#[test]
fn exit_codes_follow_error_categories() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    run_ok(&[
        "synth", "--eyes", "12", "--dim-true", "2", "--samples", "1", "--noise", "0.0",
        "--seed", "3", "--out", &s(&data),
    ]);

    // usage: flag validation
    let out = run(&["fit", "--in", &s(&data.join("averages")), "--dim", "0", "--out", "/tmp/x"]);
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.starts_with("error: usage:"), "stderr: {stderr}");

    // data: fingerprint mismatch between db and map
    let map_a = dir.path().join("a.iicm");
    let map_b = dir.path().join("b.iicm");
    run_ok(&["fit", "--in", &s(&data.join("averages")), "--dim", "2", "--out", &s(&map_a)]);
    run_ok(&["fit", "--in", &s(&data.join("averages")), "--dim", "1", "--out", &s(&map_b)]);
    let db = dir.path().join("db.csv");
    run_ok(&["enroll", "--map", &s(&map_a), "--in", &s(&data.join("averages")), "--out", &s(&db)]);
    let out = run(&[
        "bench", "--map", &s(&map_b), "--db", &s(&db), "--in", &s(&data.join("samples")),
        "--out-samples", &s(&dir.path().join("p.csv")),
        "--out-hist", &s(&dir.path().join("h.csv")),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.starts_with("error: data:"), "stderr: {stderr}");

    // numeric: rank-deficient fit (noise-free rank-2 manifold, dim 3)
    let out = run(&["fit", "--in", &s(&data.join("averages")), "--dim", "3", "--out", "/tmp/y"]);
    assert_eq!(out.status.code(), Some(3));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.starts_with("error: numeric:"), "stderr: {stderr}");

    // data: wrong stage fed to average
    let out = run(&[
        "average", "--in", &s(&data.join("samples")), "--out", &s(&dir.path().join("avg")),
    ]);
    assert_eq!(out.status.code(), Some(2));

    // unknown subcommand is usage
    let out = run(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(1));

    // help exits 0
    let out = run(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn config_file_supplies_defaults_and_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    run_ok(&[
        "synth", "--eyes", "10", "--dim-true", "2", "--samples", "2", "--noise", "0.03",
        "--seed", "11", "--out", &s(&data),
    ]);
    let config = dir.path().join("iris.conf");
    // an impossible mad range: everything gets discarded
    std::fs::write(&config, "# test config\nmad_min = 0.90\nmad_max = 0.95\n").unwrap();

    let stdout = run_ok(&[
        "preprocess", "--in", &s(&data.join("samples")),
        "--out", &s(&dir.path().join("p1")),
        "--report", &s(&dir.path().join("r1.csv")),
        "--config", &s(&config),
    ]);
    assert!(stdout.contains("kept=0 discarded=20"), "stdout: {stdout}");

    // explicit flags override the config file
    let stdout = run_ok(&[
        "preprocess", "--in", &s(&data.join("samples")),
        "--out", &s(&dir.path().join("p2")),
        "--report", &s(&dir.path().join("r2.csv")),
        "--config", &s(&config),
        "--mad-min", "0.001", "--mad-max", "0.4",
    ]);
    assert!(stdout.contains("kept=20 discarded=0"), "stdout: {stdout}");

    // malformed config line is a data error
    std::fs::write(&config, "mad_min 0.9\n").unwrap();
    let out = run(&[
        "preprocess", "--in", &s(&data.join("samples")),
        "--out", &s(&dir.path().join("p3")),
        "--report", &s(&dir.path().join("r3.csv")),
        "--config", &s(&config),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn thread_count_env_var_is_honored_only_without_flag() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    run_ok(&[
        "synth", "--eyes", "8", "--dim-true", "2", "--samples", "1", "--noise", "0.0",
        "--seed", "2", "--out", &s(&data),
    ]);
    // a nonsense env value fails without --threads
    let out = Command::new(bin())
        .env("IRIS_INDEX_THREADS", "not-a-number")
        .args(["dim", "--in", &s(&data.join("averages")), "--out", &s(&dir.path().join("d.csv"))])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    // ... and is ignored when --threads is given
    let out = Command::new(bin())
        .env("IRIS_INDEX_THREADS", "not-a-number")
        .args([
            "dim", "--in", &s(&data.join("averages")),
            "--out", &s(&dir.path().join("d.csv")), "--threads", "1",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn same_seed_runs_are_bit_identical() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for out in [&a, &b] {
        run_ok(&[
            "synth", "--eyes", "20", "--dim-true", "3", "--samples", "2", "--noise", "0.01",
            "--seed", "31", "--out", &s(out),
        ]);
    }
    assert_dirs_equal(&a, &b);
}

fn assert_dirs_equal(a: &Path, b: &Path) {
    let list = |root: &Path| -> Vec<PathBuf> {
        let mut files = Vec::new();
        let mut stack = vec![root.to_owned()];
        while let Some(dir) = stack.pop() {
            for entry in std::fs::read_dir(&dir).unwrap() {
                let path = entry.unwrap().path();
                if path.is_dir() {
                    stack.push(path);
                } else {
                    files.push(path.strip_prefix(root).unwrap().to_owned());
                }
            }
        }
        files.sort();
        files
    };
    let fa = list(a);
    let fb = list(b);
    assert_eq!(fa, fb, "differing file sets");
    for rel in fa {
        let x = std::fs::read(a.join(&rel)).unwrap();
        let y = std::fs::read(b.join(&rel)).unwrap();
        assert_eq!(x, y, "file {} differs", rel.display());
    }
}
