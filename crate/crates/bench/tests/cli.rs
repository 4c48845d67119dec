use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use maxent_bench::manifest::{ManifestError, RunManifest};
use maxent_bench::report::build_report;
use maxent_bench::BenchError;
use tempfile::TempDir;

const TINY: &str = "[experiment]\nname = tiny\nregime = large_scale\nseeds = 1, 2\n\
[data]\ntrain_n = 40\nval_n = 200\ndim = 6\nclasses = 3\n\
[train]\nepochs = 5\n\
[bounds]\nsamples = 50\ntrials = 100\nreference_draws = 2000\nscales = 1\n";

fn bench(args: &[&str], env_out: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_maxent-bench"));
    cmd.args(args).env_remove("MAXENT_OUT_DIR");
    if let Some(dir) = env_out {
        cmd.env("MAXENT_OUT_DIR", dir);
    }
    cmd.output().expect("binary runs")
}

fn ok(out: &Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn setup(config: &str) -> (TempDir, PathBuf) {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("tiny.cfg");
    fs::write(&cfg, config).unwrap();
    (dir, cfg)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn entries(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> = fs::read_dir(dir).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    names.sort();
    names
}

#[test]
fn synth_writes_a_verified_run() {
    let (dir, cfg) = setup(TINY);
    let out = dir.path().join("synth");
    ok(&bench(&["synth", "--config", s(&cfg), "--out", s(&out)], None));
    let names = entries(&out);
    for f in ["manifest.json", "mixture.txt", "spectrum_analytic.csv", "summary.csv", "train_seed1.csv", "val_seed2.csv"] {
        assert!(names.iter().any(|n| n == f), "{f} missing from {names:?}");
    }
    RunManifest::load(&out.join("manifest.json")).unwrap().verify(&out).unwrap();
    assert_eq!(entries(dir.path()), ["synth", "tiny.cfg"], "no staging leftovers");
}

#[test]
fn failures_exit_nonzero_and_leave_nothing_behind() {
    let (dir, cfg) = setup("[experiment]\nname = tiny\n[train]\nlr = fast\n");
    let out = dir.path().join("run");
    let res = bench(&["train", "--config", s(&cfg), "--out", s(&out)], None);
    assert!(!res.status.success());
    assert!(String::from_utf8_lossy(&res.stderr).contains("line 4"));

    let (_, good) = setup(TINY);
    let res = bench(&["train", "--config", s(&good), "--out", s(&out), "--seeds", "3-1"], None);
    assert!(!res.status.success());

    // Spectrum needs a trainable feature map; the error surfaces mid-run.
    let res = bench(&["figure", "spectrum", "--config", s(&good), "--out", s(&out)], None);
    assert!(!res.status.success());
    assert_eq!(entries(dir.path()), ["tiny.cfg"]);
}

#[test]
fn output_directory_precedence() {
    let (dir, cfg) = setup(TINY);
    let env_root = dir.path().join("env");
    ok(&bench(&["synth", "--config", s(&cfg)], Some(&env_root)));
    assert!(env_root.join("tiny/synth/manifest.json").is_file());

    let (dir2, cfg2) = setup(&TINY.replace("seeds = 1, 2\n", "seeds = 1, 2\nout = here\n"));
    ok(&bench(&["synth", "--config", s(&cfg2)], Some(&env_root)));
    assert!(dir2.path().join("here/manifest.json").is_file(), "config `out` is relative to the config file");

    let explicit = dir.path().join("explicit");
    ok(&bench(&["synth", "--config", s(&cfg2), "--out", s(&explicit)], Some(&env_root)));
    assert!(explicit.join("manifest.json").is_file());
}

#[test]
fn rerun_replaces_the_previous_output() {
    let (dir, cfg) = setup(TINY);
    let out = dir.path().join("train");
    ok(&bench(&["train", "--config", s(&cfg), "--out", s(&out), "--seeds", "1-2"], None));
    assert!(out.join("model_seed2.ckpt").is_file());
    ok(&bench(&["train", "--config", s(&cfg), "--out", s(&out), "--seeds", "5"], None));
    assert!(!out.join("model_seed2.ckpt").exists());
    assert!(out.join("model_seed5.ckpt").is_file());
    RunManifest::load(&out.join("manifest.json")).unwrap().verify(&out).unwrap();
}

#[test]
fn bounds_verify_prints_one_line_per_job() {
    let (dir, cfg) = setup(TINY);
    let out = dir.path().join("bounds");
    let stdout = ok(&bench(&["bounds", "verify", "--theorem", "corollary1", "--config", s(&cfg), "--out", s(&out)], None));
    assert_eq!(stdout.lines().filter(|l| l.contains("violations")).count(), 1, "{stdout}");
    assert!(out.join("verify_corollary1_N50.csv").is_file());
    assert!(!bench(&["bounds", "verify", "--theorem", "lemma9", "--config", s(&cfg)], None).status.success());
}

#[test]
fn report_merges_deduplicates_and_checks_digests() {
    let (dir, cfg) = setup(TINY);
    let run = dir.path().join("lsr");
    ok(&bench(&["figure", "lsr_compare", "--config", s(&cfg), "--out", s(&run)], None));
    let copy = dir.path().join("lsr_copy");
    fs::create_dir(&copy).unwrap();
    for name in entries(&run) {
        fs::copy(run.join(&name), copy.join(&name)).unwrap();
    }

    let report_dir = dir.path().join("report");
    let stdout = ok(&bench(&["report", s(&run), s(&copy.join("manifest.json")), "--out", s(&report_dir)], None));
    assert!(stdout.contains("duplicates skipped: 1"), "{stdout}");
    assert_eq!(fs::read(report_dir.join("summary.csv")).unwrap(), fs::read(run.join("summary.csv")).unwrap());
    RunManifest::load(&report_dir.join("manifest.json")).unwrap().verify(&report_dir).unwrap();

    let victim = copy.join("lsr_compare_seed1.csv");
    let mut bytes = fs::read(&victim).unwrap();
    bytes[0] ^= 1;
    fs::write(&victim, bytes).unwrap();
    match build_report(&[run.clone(), copy.clone()]) {
        Err(BenchError::Manifest(ManifestError::Digest { .. })) => {}
        other => panic!("expected a digest mismatch, got {other:?}"),
    }
    let res = bench(&["report", s(&run), s(&copy), "--out", s(&dir.path().join("report2"))], None);
    assert!(!res.status.success());
    assert!(!dir.path().join("report2").exists());
}
