//! End-to-end tests of the command-line interface, driving the real binary.

use std::path::Path;
use std::process::{Command, Output};

use vqmark::image::save_image;
use vqmark::testimg::{demo_watermark, synthetic_natural};

fn vqmark(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vqmark"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn assert_ok(out: &Output) {
    assert!(
        out.status.success(),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn write_fixtures(dir: &Path) {
    let host = synthetic_natural(96, 96, 3, 41);
    save_image(&host, dir.join("host.ppm")).unwrap();
    let wm = demo_watermark(16);
    save_image(&wm.to_image(), dir.join("wm.pgm")).unwrap();
}

#[test]
fn train_embed_extract_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    write_fixtures(dir.path());

    assert_ok(&vqmark(
        &[
            "train", "--image", "host.ppm", "--trainer", "sofm", "--size", "32", "--seed", "5",
            "--out", "cb.vqcb",
        ],
        dir.path(),
    ));
    assert_ok(&vqmark(
        &[
            "embed", "--host", "host.ppm", "--codebook", "cb.vqcb", "--watermark", "wm.pgm",
            "--key", "1234", "--out", "marked.vqix", "--preview", "marked.ppm",
        ],
        dir.path(),
    ));

    // Container path.
    let out = vqmark(
        &[
            "extract", "--input", "marked.vqix", "--codebook", "cb.vqcb", "--key", "1234",
            "--side", "16", "--out", "ext1.pgm", "--reference", "wm.pgm", "--report", "r1.json",
        ],
        dir.path(),
    );
    assert_ok(&out);
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("r1.json")).unwrap())
            .unwrap();
    assert_eq!(report["nc"], 1.0);
    assert_eq!(report["bcr_percent"], 100.0);
    assert_eq!(report["mae"], 0.0);

    // Decoded-image path gives the identical mark.
    assert_ok(&vqmark(
        &[
            "extract", "--input", "marked.ppm", "--codebook", "cb.vqcb", "--key", "1234",
            "--side", "16", "--out", "ext2.pgm",
        ],
        dir.path(),
    ));
    assert_eq!(
        std::fs::read(dir.path().join("ext1.pgm")).unwrap(),
        std::fs::read(dir.path().join("ext2.pgm")).unwrap()
    );
    assert_eq!(
        std::fs::read(dir.path().join("ext1.pgm")).unwrap(),
        std::fs::read(dir.path().join("wm.pgm")).unwrap()
    );
}

#[test]
fn odd_codebook_size_is_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    write_fixtures(dir.path());
    let out = vqmark(
        &[
            "train", "--image", "host.ppm", "--size", "255", "--out", "cb.vqcb",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_input_is_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = vqmark(
        &[
            "train", "--image", "nope.ppm", "--size", "16", "--out", "cb.vqcb",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn oversized_watermark_is_capacity_error() {
    let dir = tempfile::tempdir().unwrap();
    // 64x64 host -> 256 blocks; a 17x17 mark needs 289.
    let host = synthetic_natural(64, 64, 1, 4);
    save_image(&host, dir.path().join("host.pgm")).unwrap();
    save_image(&demo_watermark(17).to_image(), dir.path().join("wm.pgm")).unwrap();
    assert_ok(&vqmark(
        &[
            "train", "--image", "host.pgm", "--size", "16", "--out", "cb.vqcb",
        ],
        dir.path(),
    ));
    let out = vqmark(
        &[
            "embed", "--host", "host.pgm", "--codebook", "cb.vqcb", "--watermark", "wm.pgm",
            "--key", "7", "--out", "m.vqix",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn wrong_codebook_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    write_fixtures(dir.path());
    assert_ok(&vqmark(
        &["train", "--image", "host.ppm", "--size", "16", "--seed", "1", "--out", "a.vqcb"],
        dir.path(),
    ));
    assert_ok(&vqmark(
        &["train", "--image", "host.ppm", "--size", "16", "--seed", "2", "--out", "b.vqcb"],
        dir.path(),
    ));
    assert_ok(&vqmark(
        &[
            "embed", "--host", "host.ppm", "--codebook", "a.vqcb", "--watermark", "wm.pgm",
            "--key", "1", "--out", "m.vqix",
        ],
        dir.path(),
    ));
    let out = vqmark(
        &[
            "extract", "--input", "m.vqix", "--codebook", "b.vqcb", "--key", "1", "--side",
            "16", "--out", "e.pgm",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unknown_attack_kind_lists_known_kinds() {
    let dir = tempfile::tempdir().unwrap();
    write_fixtures(dir.path());
    let out = vqmark(
        &[
            "attack", "--input", "host.ppm", "--spec", r#"{"kind":"rotate"}"#, "--out", "a.ppm",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("median") && stderr.contains("jpegLike"), "{stderr}");
}

#[test]
fn attack_writes_filtered_image() {
    let dir = tempfile::tempdir().unwrap();
    write_fixtures(dir.path());
    assert_ok(&vqmark(
        &[
            "attack", "--input", "host.ppm", "--spec",
            r#"{"kind":"median","params":{"window":3}}"#, "--out", "a.ppm",
        ],
        dir.path(),
    ));
    let attacked = vqmark::image::load_image(dir.path().join("a.ppm")).unwrap();
    assert_eq!((attacked.width, attacked.height, attacked.channels), (96, 96, 3));
}

#[test]
fn evaluate_empty_suite_has_only_baseline_row() {
    let dir = tempfile::tempdir().unwrap();
    write_fixtures(dir.path());
    std::fs::write(dir.path().join("suite.json"), "[]").unwrap();
    assert_ok(&vqmark(
        &["train", "--image", "host.ppm", "--size", "32", "--out", "cb.vqcb"],
        dir.path(),
    ));
    assert_ok(&vqmark(
        &[
            "evaluate", "--host", "host.ppm", "--codebook", "cb.vqcb", "--watermark", "wm.pgm",
            "--key", "3", "--suite", "suite.json", "--out", "report.json",
        ],
        dir.path(),
    ));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap())
            .unwrap();
    let rows = report["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 1);
    assert!(rows[0]["attack"].is_null());
    assert_eq!(rows[0]["metrics"]["nc"], 1.0);
    assert_eq!(report["config"]["codebook_size"], 32);
    assert!(report["codebook_hash"].as_str().unwrap().starts_with("0x"));
}

#[test]
fn evaluate_runs_suite_in_fixed_order() {
    let dir = tempfile::tempdir().unwrap();
    write_fixtures(dir.path());
    let suite = r#"[
        {"kind":"median","params":{"window":3}},
        {"kind":"gaussianNoise","seed":5},
        {"kind":"jpegLike","params":{"q":8}}
    ]"#;
    std::fs::write(dir.path().join("suite.json"), suite).unwrap();
    assert_ok(&vqmark(
        &["train", "--image", "host.ppm", "--size", "32", "--out", "cb.vqcb"],
        dir.path(),
    ));
    let out = vqmark(
        &[
            "evaluate", "--host", "host.ppm", "--codebook", "cb.vqcb", "--watermark", "wm.pgm",
            "--key", "3", "--suite", "suite.json", "--out", "report.json", "--table",
        ],
        dir.path(),
    );
    assert_ok(&out);
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap())
            .unwrap();
    let labels: Vec<&str> = report["rows"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["label"].as_str().unwrap())
        .collect();
    assert_eq!(
        labels,
        vec!["(none)", "median(3x3)", "gaussianNoise(sigma=8)", "jpegLike(q=8)"]
    );
}
