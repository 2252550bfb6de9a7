use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use burstbg_core::{load_image, save_image, RasterImage};

fn burstbg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_burstbg")).args(args).output().unwrap()
}

fn textured(w: usize, h: usize) -> RasterImage {
    RasterImage::from_fn(w, h, |x, y| [(x * 5 % 200) as u8 + 20, (y * 3 % 180) as u8 + 30, ((x + y) % 90) as u8 + 60]).unwrap()
}

fn write_frames(dir: &Path, frames: &[RasterImage], names: &[&str]) {
    for (f, n) in frames.iter().zip(names) {
        save_image(f, dir.join(n)).unwrap();
    }
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn identical_frames_come_back_unchanged() {
    let dir = tempfile::tempdir().unwrap();
    let f = textured(60, 40);
    let names: Vec<String> = (0..10).map(|i| format!("f{i}.png")).collect();
    let names: Vec<&str> = names.iter().map(String::as_str).collect();
    write_frames(dir.path(), &vec![f.clone(); 10], &names);
    let out = dir.path().join("bg.png");
    let o = burstbg(&["recover", "--input", &format!("{}/f*.png", s(dir.path())), "--output", s(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(load_image(&out).unwrap(), f);
    let report = fs::read_to_string(dir.path().join("bg.report.txt")).unwrap();
    assert!(report.contains("iterations_run=1"));
    assert!(report.contains("deghost_replaced=0"));
}

#[test]
fn frames_are_ordered_lexicographically() {
    let dir = tempfile::tempdir().unwrap();
    let f = textured(40, 30);
    write_frames(dir.path(), &vec![f; 3], &["b10.png", "b2.png", "a.png"]);
    let out = dir.path().join("o.png");
    let report = dir.path().join("r.txt");
    let pattern = format!("{}/*.png", s(dir.path()));
    let o = burstbg(&["recover", "--input", &pattern, "--output", s(&out), "--report", s(&report)]);
    assert!(o.status.success());
    let text = fs::read_to_string(report).unwrap();
    let inputs: Vec<&str> = text.lines().filter_map(|l| l.strip_prefix("input=")).collect();
    let names: Vec<&str> = inputs.iter().map(|p| Path::new(p).file_name().unwrap().to_str().unwrap()).collect();
    assert_eq!(names, ["a.png", "b10.png", "b2.png"]);
}

#[test]
fn out_of_range_threshold_is_a_usage_error() {
    for args in [
        &["recover", "--tau0", "-1", "--input", "x", "--output", "y"][..],
        &["recover", "--tau5", "256", "--print-config"],
        &["recover", "--tau2", "2", "--print-config"],
        &["recover", "--window", "8", "--print-config"],
        &["recover", "--canny-low", "160", "--print-config"],
        &["recover", "--algorithm", "2", "--print-config"],
        &["recover", "--bogus"],
    ] {
        let o = burstbg(args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        assert!(!o.stderr.is_empty());
    }
    let o = burstbg(&["recover", "--tau0", "-1", "--print-config"]);
    assert!(String::from_utf8_lossy(&o.stderr).contains("0..=255"));
}

#[test]
fn print_config_shows_defaults_and_overrides() {
    let o = burstbg(&["recover", "--print-config"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    for kv in ["tau0=10", "tau1=25", "tau2=0.4", "tau3=10", "tau4=10", "tau5=5", "region_size=15", "ruler=15", "window=41", "sigma_x=20", "max_model_iters=100", "min_changed_pixels=3"] {
        assert!(text.lines().any(|l| l == kv), "missing {kv}");
    }
    let o = burstbg(&["recover", "--print-config", "--tau0", "4", "--sigma", "7.5", "--region-size", "20"]);
    let text = String::from_utf8(o.stdout).unwrap();
    for kv in ["tau0=4", "sigma_x=7.5", "sigma_y=7.5", "region_size=20"] {
        assert!(text.lines().any(|l| l == kv), "missing {kv}");
    }
}

#[test]
fn pipeline_failures_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o.png");
    let o = burstbg(&["recover", "--input", &format!("{}/none*.png", s(dir.path())), "--output", s(&out)]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert_eq!(err.lines().count(), 1, "{err}");

    // A single frame is not a burst.
    save_image(&textured(20, 20), dir.path().join("one.png")).unwrap();
    let o = burstbg(&["recover", "--input", &format!("{}/one.png", s(dir.path())), "--output", s(&out)]);
    assert_eq!(o.status.code(), Some(1));

    // Mismatched frame sizes.
    save_image(&textured(21, 20), dir.path().join("two.png")).unwrap();
    let o = burstbg(&["recover", "--input", &format!("{}/*.png", s(dir.path())), "--output", s(&out)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(!out.exists());
}

#[test]
fn synth_recover_evaluate_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let script = dir.path().join("scene.txt");
    fs::write(
        &script,
        "width = 160\nheight = 120\nframes = 6\nbackground = procedural\nbackground_seed = 5\n\
         occluder rect x=5 y=30 w=20 h=25 color=255,255,0 frames=0-5 step=26,5\n",
    )
    .unwrap();
    let scene_dir = dir.path().join("scene");
    let o = burstbg(&["synth", "--script", s(&script), "--out-dir", s(&scene_dir)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for n in ["frame_00.png", "frame_05.png", "background.png", "covered.png"] {
        assert!(scene_dir.join(n).exists(), "missing {n}");
    }
    let out = dir.path().join("rec.png");
    let dump = dir.path().join("dump");
    let o = burstbg(&[
        "recover",
        "--input",
        &format!("{}/frame_*.png", s(&scene_dir)),
        "--output",
        s(&out),
        "--dump",
        s(&dump),
        "--threads",
        "2",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(dump.join("seeds.png").exists() && dump.join("report.txt").exists());

    let o = burstbg(&["evaluate", "--recovered", s(&out), "--truth", s(&scene_dir.join("background.png"))]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("exact_match_fraction=1.000000"), "{text}");
    assert!(text.contains("undefined_fraction=0.000000"));
    assert!(text.contains("psnr=inf"));

    let o = burstbg(&[
        "evaluate",
        "--recovered",
        s(&out),
        "--truth",
        s(&scene_dir.join("background.png")),
        "--region",
        s(&scene_dir.join("covered.png")),
    ]);
    assert!(String::from_utf8(o.stdout).unwrap().contains("mean_abs_error=0.000000"));
}

#[test]
fn synth_needs_a_scene() {
    let dir = tempfile::tempdir().unwrap();
    let o = burstbg(&["synth", "--out-dir", s(dir.path())]);
    assert_eq!(o.status.code(), Some(2));
    let o = burstbg(&["synth", "--script", s(&dir.path().join("missing.txt")), "--out-dir", s(dir.path())]);
    assert_eq!(o.status.code(), Some(1));
}
