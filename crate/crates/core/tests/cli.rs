use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use lumamark::harness::parse_json;

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/data")
        .join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lumamark"))
        .args(args)
        .output()
        .expect("spawn")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn embed_then_extract_reports_zero_ber() {
    let dir = tempfile::tempdir().unwrap();
    let wm = dir.path().join("wm.png");
    let rec = dir.path().join("rec.png");
    let host = data("coffee.png");
    let qr = data("qr64.png");

    let o = run(&[
        "embed",
        "--host",
        s(&host),
        "--watermark",
        s(&qr),
        "--out",
        s(&wm),
        "--alpha",
        "25",
        "--level",
        "2",
        "--wavelet",
        "db3",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(wm.exists());

    let o = run(&[
        "extract",
        "--host",
        s(&host),
        "--input",
        s(&wm),
        "--wm-size",
        "64x64",
        "--reference",
        s(&qr),
        "--out",
        s(&rec),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let line = stdout(&o);
    assert!(line.contains("BER=0.0000"), "{line}");
    let ncc: f64 = line
        .split_whitespace()
        .find_map(|t| t.strip_prefix("NCC="))
        .unwrap()
        .parse()
        .unwrap();
    assert!(ncc >= 0.99);
    let recovered = lumamark::image_core::load_image(&rec).unwrap();
    assert_eq!(recovered.dims(), (64, 64));
}

#[test]
fn resolved_defaults_are_echoed() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("wm.png");
    let o = run(&[
        "embed",
        "--host",
        s(&data("camera.png")),
        "--watermark",
        s(&data("gray64.png")),
        "--out",
        s(&out),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(
        stderr(&o).contains("alpha=30 level=2 wavelet=db3 threshold=128"),
        "{}",
        stderr(&o)
    );
}

#[test]
fn oversized_watermark_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let big = dir.path().join("big.png");
    let img = lumamark::image_core::RasterImage::filled(200, 200, 1, 255).unwrap();
    lumamark::image_core::save_image(&img, &big).unwrap();
    let out = dir.path().join("out.png");
    let o = run(&[
        "embed",
        "--host",
        s(&data("camera.png")),
        "--watermark",
        s(&big),
        "--out",
        s(&out),
    ]);
    assert_eq!(o.status.code(), Some(4));
    assert!(stderr(&o).contains("watermark too large"));
    assert!(!out.exists());
}

#[test]
fn argument_and_io_errors() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o.png");
    let host = data("camera.png");
    let qr = data("qr64.png");
    // unknown flag
    let o = run(&[
        "embed",
        "--host",
        s(&host),
        "--watermark",
        s(&qr),
        "--out",
        s(&out),
        "--nope",
    ]);
    assert_eq!(o.status.code(), Some(2));
    // out of range
    let o = run(&[
        "embed",
        "--host",
        s(&host),
        "--watermark",
        s(&qr),
        "--out",
        s(&out),
        "--alpha",
        "-3",
    ]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&[
        "embed",
        "--host",
        s(&host),
        "--watermark",
        s(&qr),
        "--out",
        s(&out),
        "--wavelet",
        "db9",
    ]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&[
        "attack",
        "--input",
        s(&host),
        "--out",
        s(&out),
        "--type",
        "median",
        "--param",
        "k=4",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());
    // missing input
    let o = run(&[
        "embed",
        "--host",
        "/no/such.png",
        "--watermark",
        s(&qr),
        "--out",
        s(&out),
    ]);
    assert_eq!(o.status.code(), Some(3));
    // size mismatch without realignment
    let rot = dir.path().join("rot.png");
    let o = run(&[
        "attack",
        "--input",
        s(&host),
        "--out",
        s(&rot),
        "--type",
        "rotate",
        "--param",
        "theta=10",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let o = run(&[
        "extract",
        "--host",
        s(&host),
        "--input",
        s(&rot),
        "--reference",
        s(&qr),
    ]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn json_output_round_trips_through_report_reader() {
    let dir = tempfile::tempdir().unwrap();
    let wm = dir.path().join("wm.png");
    let host = data("chelsea.png");
    let qr = data("qr64.png");
    let o = run(&[
        "embed",
        "--host",
        s(&host),
        "--watermark",
        s(&qr),
        "--out",
        s(&wm),
        "--json",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rows = parse_json(&stdout(&o)).unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0].host_id, "chelsea");
    assert_eq!(rows[0].alpha, Some(25.0));
    assert!(rows[0].psnr_db.unwrap() > 34.0);

    let o = run(&[
        "extract",
        "--host",
        s(&host),
        "--input",
        s(&wm),
        "--reference",
        s(&qr),
        "--json",
    ]);
    let rows = parse_json(&stdout(&o)).unwrap();
    assert_eq!(rows[0].ber, Some(0.0));

    let atk = dir.path().join("atk.png");
    let o = run(&[
        "attack",
        "--input",
        s(&wm),
        "--out",
        s(&atk),
        "--type",
        "gaussian",
        "--param",
        "sigma=5",
        "--seed",
        "3",
        "--json",
    ]);
    let rows = parse_json(&stdout(&o)).unwrap();
    assert_eq!(rows[0].attack, "kind=gaussian,sigma=5,seed=3");
    assert_eq!(rows[0].seed, 3);
}

#[test]
fn realign_flag_recovers_rotated_mark() {
    let dir = tempfile::tempdir().unwrap();
    let wm = dir.path().join("wm.png");
    let rot = dir.path().join("rot.png");
    let host = data("rocket.png");
    let qr = data("qr64.png");
    assert!(run(&[
        "embed",
        "--host",
        s(&host),
        "--watermark",
        s(&qr),
        "--out",
        s(&wm)
    ])
    .status
    .success());
    assert!(run(&[
        "attack",
        "--input",
        s(&wm),
        "--out",
        s(&rot),
        "--type",
        "rotate",
        "--param",
        "theta=-20"
    ])
    .status
    .success());
    let o = run(&[
        "extract",
        "--host",
        s(&host),
        "--input",
        s(&rot),
        "--reference",
        s(&qr),
        "--realign",
        "rotate:-20",
        "--json",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let ber = parse_json(&stdout(&o)).unwrap()[0].ber.unwrap();
    assert!(ber < 0.08, "ber {ber}");
}

#[test]
fn evaluate_writes_both_reports() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("sweep.toml");
    std::fs::write(
        &config,
        format!(
            "hosts = [{:?}]\nwatermarks = [{:?}]\nseeds = [0, 1]\n\n[[attacks]]\nkind = \"sandpaper\"\nlevels = [0.01, 0.05]\n",
            data("camera.png"),
            data("qr64.png")
        ),
    )
    .unwrap();
    let out = dir.path().join("reports");
    let o = run(&[
        "evaluate",
        "--config",
        s(&config),
        "--out-dir",
        s(&out),
        "--jobs",
        "2",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = lumamark::harness::read_csv(&out.join("report.csv")).unwrap();
    let json = lumamark::harness::read_json(&out.join("report.json")).unwrap();
    assert_eq!(csv.len(), 5);
    assert_eq!(csv, json);

    let o = run(&[
        "evaluate",
        "--config",
        s(&config),
        "--out-dir",
        s(&out),
        "--mode",
        "base",
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(
        lumamark::harness::read_csv(&out.join("report.csv"))
            .unwrap()
            .len(),
        1
    );
}

#[test]
fn bench_reports_phase_statistics() {
    let o = run(&[
        "bench",
        "--host",
        s(&data("camera.png")),
        "--watermark",
        s(&data("qr64.png")),
        "--iterations",
        "3",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("median=") && text.contains("MP/s"), "{text}");
    let o = run(&[
        "bench",
        "--host",
        s(&data("camera.png")),
        "--watermark",
        s(&data("qr64.png")),
        "--iterations",
        "2",
    ]);
    assert_eq!(o.status.code(), Some(2));
}
